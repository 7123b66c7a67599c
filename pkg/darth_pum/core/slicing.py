from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import PlanMismatchError


class SliceOrder(Enum):
    LSB_FIRST = "lsb_first"


@dataclass(frozen=True)
class SlicePlan:
    """
    How an ``element_bits``-wide value is split into ``bits_per_cell``-wide
    slices, one slice per analog array.
    """

    element_bits: int
    bits_per_cell: int
    ordering: SliceOrder = SliceOrder.LSB_FIRST

    def __post_init__(self):
        if self.element_bits < 1:
            raise PlanMismatchError(f"element_bits must be positive, got {self.element_bits}")
        if not 1 <= self.bits_per_cell <= 8:
            raise PlanMismatchError(f"bits_per_cell must be in 1..8, got {self.bits_per_cell}")

    @property
    def slice_count(self) -> int:
        return -(-self.element_bits // self.bits_per_cell)

    @property
    def cell_mask(self) -> int:
        return (1 << self.bits_per_cell) - 1

    def weight(self, index: int) -> int:
        return index * self.bits_per_cell


def slice_value(pattern: int, plan: SlicePlan, width: Optional[int] = None) -> List[int]:
    if width is not None and width != plan.element_bits:
        raise PlanMismatchError(f"Pattern width {width} != plan width {plan.element_bits}")
    if pattern < 0 or pattern >> plan.element_bits:
        raise PlanMismatchError(f"Pattern {pattern:#x} does not fit {plan.element_bits} bits")

    return [(pattern >> plan.weight(i)) & plan.cell_mask for i in range(plan.slice_count)]


def recombine_slices(partials: Sequence[int], plan: SlicePlan) -> int:
    if len(partials) != plan.slice_count:
        raise PlanMismatchError(f"Expected {plan.slice_count} partials, got {len(partials)}")
    return sum(int(p) << plan.weight(i) for i, p in enumerate(partials))


def slice_array(values: np.ndarray, plan: SlicePlan) -> np.ndarray:
    """
    Vectorised ``slice_value`` over non-negative integers.
    Returns shape ``(slice_count, *values.shape)``.
    """
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or int(values.max()) >> plan.element_bits):
        raise PlanMismatchError(f"Values do not fit {plan.element_bits} unsigned bits")
    return np.stack([(values >> plan.weight(i)) & plan.cell_mask for i in range(plan.slice_count)])


def recombine_array(partials: np.ndarray, plan: SlicePlan) -> np.ndarray:
    partials = np.asarray(partials, dtype=np.int64)
    if partials.shape[0] != plan.slice_count:
        raise PlanMismatchError(f"Expected {plan.slice_count} partials, got {partials.shape[0]}")
    out = np.zeros(partials.shape[1:], dtype=np.int64)
    for i in range(plan.slice_count):
        out += partials[i] << plan.weight(i)
    return out


@dataclass(frozen=True)
class StripedLayout:
    """
    Placement of one vector register in a bit-pipelined digital pipeline:
    element ``e`` bit ``b`` lives at (array ``b``, row ``e``, column ``register_index``).
    """

    width_elements: int
    depth_bits: int
    register_index: int

    def locate(self, element: int, bit: int) -> Tuple[int, int, int]:
        if not 0 <= element < self.width_elements or not 0 <= bit < self.depth_bits:
            raise PlanMismatchError(f"({element}, {bit}) outside {self}")
        return bit, element, self.register_index
