from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class MicroopKind(Enum):
    NOR = "nor"
    GATE = "gate"
    COPY_ROW = "copy_row"
    WRITE_ROW = "write_row"
    READ_ROW = "read_row"
    SHIFT_STEP = "shift_step"
    NOP = "nop"


class LogicFamily(Enum):
    OSCAR = "oscar"
    IDEAL = "ideal"


class Direction(Enum):
    FORWARD = "forward"
    REVERSED = "reversed"


class ShiftFill(Enum):
    ZERO = 0
    SIGN = 1
    WRAP = 2


# Truth tables for GATE microops: bit (2*a + b) holds f(a, b)
TT_NOR = 0b0001
TT_NOT_A = 0b0011
TT_NOT_A_AND_B = 0b0010
TT_XOR = 0b0110
TT_AND = 0b1000
TT_A = 0b1100
TT_OR = 0b1110


@dataclass(frozen=True)
class NorMicroop:
    """
    One hardware step on the arrays ``[lo, hi)`` of a digital pipeline.

    Columns are vector-register indices. ``dst_offset`` lets a NOR land in the
    next array (carry hop); for SHIFT_STEP it is the move direction (+1 toward
    the MSB array, -1 toward the LSB array). ``value`` is the constant of a
    WRITE_ROW, the truth table of a GATE, the source array of a COPY_ROW, or
    the ``ShiftFill`` of a SHIFT_STEP.
    """

    kind: MicroopKind
    src1: int = -1
    src2: int = -1
    dst: int = -1
    lo: int = 0
    hi: int = 1
    dst_offset: int = 0
    value: int = 0
    row_mask: Optional[np.ndarray] = None

    @property
    def active_arrays(self) -> int:
        if self.kind is MicroopKind.NOP:
            return 0
        return self.hi - self.lo

    def trace_line(self, cycle: int, pipeline: int) -> str:
        return f"{cycle},{pipeline},{self.kind.value},{self.src1},{self.src2},{self.dst}"


def nor(src1: int, src2: int, dst: int, lo: int, hi: int, dst_offset: int = 0) -> NorMicroop:
    return NorMicroop(MicroopKind.NOR, src1, src2, dst, lo, hi, dst_offset)


def gate(table: int, src1: int, src2: int, dst: int, lo: int, hi: int, dst_offset: int = 0) -> NorMicroop:
    return NorMicroop(MicroopKind.GATE, src1, src2, dst, lo, hi, dst_offset, value=table)
