from .fixed_point import FixedPointSpec, encode_fixed, decode_fixed, to_signed
from .slicing import (
    SliceOrder, SlicePlan, StripedLayout,
    slice_value, recombine_slices, slice_array, recombine_array,
)
from .costs import CYCLE_NS, Component, CostTable, AreaTable, CostReport

__all__ = [
    "FixedPointSpec", "encode_fixed", "decode_fixed", "to_signed",
    "SliceOrder", "SlicePlan", "StripedLayout",
    "slice_value", "recombine_slices", "slice_array", "recombine_array",
    "CYCLE_NS", "Component", "CostTable", "AreaTable", "CostReport",
]
