from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..ace.adc import AdcModel
from ..ace.crossbar import Remap
from ..core.slicing import SlicePlan
from .iiu import IiuProgram


@dataclass
class VACore:
    """A group of analog arrays jointly holding one bit-sliced matrix."""

    vacore_id: int
    member_arrays: List[int]
    element_bits: int
    bits_per_cell: int
    input_bits: int
    shift_schedule: Dict[Tuple[int, int], int] = field(default_factory=dict)
    iiu_program: IiuProgram = field(default_factory=IiuProgram)

    shape: Tuple[int, int] = (0, 0)
    signed: bool = False
    remap: Remap = Remap.RAW
    adc: Optional[AdcModel] = None
    digital: Optional["DigitalCopy"] = None

    @property
    def plan(self) -> SlicePlan:
        return SlicePlan(self.element_bits, self.bits_per_cell)

    @property
    def slices(self) -> int:
        return len(self.member_arrays)

    @property
    def partials(self) -> int:
        return self.input_bits * self.slices

    def shift(self, input_bit: int, slice_index: int) -> int:
        return input_bit + self.bits_per_cell * slice_index

    def acc_bits(self, input_bits: Optional[int] = None) -> int:
        """Accumulator width that holds any product of this matrix with an input vector."""
        input_bits = input_bits or self.input_bits
        rows = max(self.shape[0], 1)
        return min(64, input_bits + self.element_bits + rows.bit_length() + 1)


def build_vacore(vacore_id: int, member_arrays: List[int], element_bits: int,
                 bits_per_cell: int, input_bits: int) -> VACore:
    plan = SlicePlan(element_bits, bits_per_cell)
    schedule = {
        (i, j): i + bits_per_cell * j
        for i in range(input_bits)
        for j in range(plan.slice_count)
    }
    program = IiuProgram(repetitions=input_bits * plan.slice_count)
    return VACore(vacore_id, list(member_arrays), element_bits, bits_per_cell, input_bits, schedule, program)


def alloc_vacore(hct, element_bits: int, bits_per_cell: int, input_bits: Optional[int] = None) -> VACore:
    return hct.alloc_vacore(element_bits, bits_per_cell, input_bits)


@dataclass
class DigitalCopy:
    """
    Placement of a matrix moved into the DCE: crossbar row ``r`` (one
    matrix column) lives in register ``base_register + r % rows_per_pipeline``
    of pipeline ``pipelines[r // rows_per_pipeline]``, ``width`` bits wide.
    """

    pipelines: List[int]
    base_register: int
    rows_per_pipeline: int
    width: int

    def locate(self, row: int) -> Tuple[int, int]:
        return self.pipelines[row // self.rows_per_pipeline], self.base_register + row % self.rows_per_pipeline
