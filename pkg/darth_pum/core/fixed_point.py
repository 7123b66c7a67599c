from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Union

from ..errors import FixedPointOverflowError

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class FixedPointSpec:
    """
    Two's-complement (or unsigned) fixed-point format of ``total_bits`` bits,
    ``frac_bits`` of which sit right of the binary point.
    """

    total_bits: int
    signed: bool = True
    frac_bits: int = 0

    def __post_init__(self):
        if not 1 <= self.total_bits <= 64:
            raise ValueError(f"total_bits must be in 1..64, got {self.total_bits}")
        if not 0 <= self.frac_bits <= self.total_bits:
            raise ValueError(f"frac_bits must be in 0..{self.total_bits}, got {self.frac_bits}")

    @property
    def mask(self) -> int:
        return (1 << self.total_bits) - 1

    @property
    def min_code(self) -> int:
        return -(1 << (self.total_bits - 1)) if self.signed else 0

    @property
    def max_code(self) -> int:
        return (1 << (self.total_bits - 1)) - 1 if self.signed else self.mask

    @property
    def resolution(self) -> Fraction:
        return Fraction(1, 1 << self.frac_bits)

    @property
    def min_value(self) -> Fraction:
        return self.min_code * self.resolution

    @property
    def max_value(self) -> Fraction:
        return self.max_code * self.resolution


def _to_fraction(value: Number) -> Fraction:
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, Real):
        return Fraction(float(value))
    raise TypeError(f"Cannot encode value of type {type(value).__name__}")


def encode_fixed(value: Number, spec: FixedPointSpec) -> int:
    """
    Encode ``value`` into a ``spec.total_bits``-wide bit pattern.

    Values that are not exactly representable are rounded to the nearest code
    (ties to even).
    """
    code = round(_to_fraction(value) * (1 << spec.frac_bits))
    if code < spec.min_code or code > spec.max_code:
        raise FixedPointOverflowError(
            f"{value} is outside [{spec.min_value}, {spec.max_value}] for {spec}"
        )
    return code & spec.mask


def decode_fixed(pattern: int, spec: FixedPointSpec) -> Fraction:
    if pattern < 0 or pattern > spec.mask:
        raise ValueError(f"Pattern {pattern:#x} wider than {spec.total_bits} bits")
    code = pattern
    if spec.signed and pattern >> (spec.total_bits - 1):
        code = pattern - (1 << spec.total_bits)
    return Fraction(code, 1 << spec.frac_bits)


def to_signed(pattern: int, bits: int) -> int:
    pattern &= (1 << bits) - 1
    if pattern >> (bits - 1):
        return pattern - (1 << bits)
    return pattern
