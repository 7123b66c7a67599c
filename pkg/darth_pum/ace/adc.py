from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..core.costs import Component, CostReport, CostTable
from ..core.slicing import SlicePlan
from ..errors import ParityError, RangeError
from ..helpers import ceil_div
from .crossbar import Remap


class AdcKind(Enum):
    SAR = "sar"
    RAMP = "ramp"


UNITS_PER_ACE = {AdcKind.SAR: 2, AdcKind.RAMP: 1}
MIN_RESOLUTION = 8


@dataclass(frozen=True)
class AdcModel:
    """
    Converter bank of one ACE.

    Level ``code`` reads the analog value ``lo + code * lsb``. A truncated
    converter only returns the low ``truncate_bits`` bits of the code.
    """

    kind: AdcKind
    resolution_bits: int = MIN_RESOLUTION
    units: Optional[int] = None
    lo: float = 0.0
    lsb: float = 1.0
    early_termination_levels: Optional[int] = None
    truncate_bits: Optional[int] = None

    @property
    def units_per_ace(self) -> int:
        return self.units or UNITS_PER_ACE[self.kind]

    @property
    def levels(self) -> int:
        return 1 << self.resolution_bits

    @classmethod
    def sized(cls, kind: AdcKind, rows: int, plan: SlicePlan, remap: Remap = Remap.RAW,
              signed: bool = False, **kwargs) -> "AdcModel":
        """Full scale covering every sum ``rows`` active wordlines can produce."""
        if remap is Remap.SYMMETRIC:
            top = ceil_div(rows, 2)
            lo = -top
        else:
            top = rows * plan.cell_mask
            lo = -top if signed else 0
        needed = int(top - lo).bit_length()
        return cls(kind, max(MIN_RESOLUTION, needed), lo=float(lo), **kwargs)

    def latency(self, active_bitlines: int, costs: CostTable) -> int:
        if active_bitlines == 0:
            return 0
        if self.kind is AdcKind.SAR:
            return ceil_div(active_bitlines, self.units_per_ace) * costs.sar_conversion_cycles
        if self.early_termination_levels:
            return self.early_termination_levels
        return costs.ramp_conversion_cycles << max(0, self.resolution_bits - MIN_RESOLUTION)


def digitize(sums, adc: AdcModel, active_bitlines: Optional[int] = None,
             costs: Optional[CostTable] = None) -> Tuple[np.ndarray, CostReport]:
    """
    Quantise the first ``active_bitlines`` sums of each vector to the nearest
    level. A 2-D ``sums`` holds one vector per row, converted back to back.

    Raises ``RangeError`` when a sum lies more than half a level outside the
    full scale.
    """
    costs = costs or CostTable()
    sums = np.asarray(sums, dtype=float)
    active = sums.shape[-1] if active_bitlines is None else active_bitlines
    sums = sums[..., :active]
    vectors = sums.size // active if active else 0

    codes = np.rint((sums - adc.lo) / adc.lsb).astype(np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= adc.levels):
        raise RangeError(
            f"Bitline sum outside ADC full scale [{adc.lo}, {adc.lo + (adc.levels - 1) * adc.lsb}]"
        )

    if adc.truncate_bits:
        outputs = codes & ((1 << adc.truncate_bits) - 1)
    else:
        outputs = np.rint(adc.lo + codes * adc.lsb).astype(np.int64)

    cycles = adc.latency(active, costs) * vectors
    report = (
        CostReport(cycles=cycles)
        .charge(Component.ADC, costs.adc_pj(adc.kind) * cycles * adc.units_per_ace)
        .charge(Component.SAMPLE_HOLD, costs.sample_hold_pj * sums.size)
        .count("conversions", sums.size)
        .count("adc_cycles", cycles * adc.units_per_ace)
    )
    return outputs, report


def compensate(outputs, ones_in_input: int) -> np.ndarray:
    """Undo the half-level offset of a SYMMETRIC mapping: ``raw + k/2``."""
    if ones_in_input % 2:
        raise ParityError(f"Compensation k/2 = {ones_in_input}/2 is not an integer")
    return np.asarray(outputs, dtype=np.int64) + ones_in_input // 2
