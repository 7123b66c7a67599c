"""
Macro library of the digital pipelines.

Every macro expands into a stream of ``NorMicroop`` records. Bitwise macros
are emitted as one microop spanning all bit arrays (each array does the same
step on its own bit-plane); carry-propagating macros walk the arrays one bit at
a time and hop the carry into the next array.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..errors import ColumnConflictError, PlanMismatchError
from .microops import (
    TT_A,
    TT_AND,
    TT_NOT_A,
    TT_NOT_A_AND_B,
    TT_OR,
    TT_XOR,
    LogicFamily,
    MicroopKind,
    NorMicroop,
    ShiftFill,
    gate,
    nor,
)


class MacroName(Enum):
    NOT = "not"
    AND = "and"
    OR = "or"
    XOR = "xor"
    ADD = "add"
    SUB = "sub"
    SHL = "shl"
    SHR = "shr"
    COPY = "copy"
    CMP_GE = "cmp_ge"
    MUX = "mux"
    SPLAT = "splat"


SHIFTS = (MacroName.SHL, MacroName.SHR)
CHAINING = frozenset((
    MacroName.NOT, MacroName.AND, MacroName.OR, MacroName.XOR, MacroName.COPY,
    MacroName.MUX, MacroName.ADD, MacroName.SUB,
))

# Scratch columns a macro may clobber; the pipeline hands out the top columns.
SCRATCH_REGISTERS = 10

ARITY = {
    MacroName.NOT: 1,
    MacroName.COPY: 1,
    MacroName.SHL: 1,
    MacroName.SHR: 1,
    MacroName.SPLAT: 1,
    MacroName.AND: 2,
    MacroName.OR: 2,
    MacroName.XOR: 2,
    MacroName.ADD: 2,
    MacroName.SUB: 2,
    MacroName.CMP_GE: 2,
    MacroName.MUX: 3,
}

DEFAULT_MICROOPS = {
    LogicFamily.OSCAR: {
        MacroName.NOT: 1,
        MacroName.OR: 2,
        MacroName.AND: 3,
        MacroName.XOR: 5,
        MacroName.COPY: 2,
        MacroName.MUX: 7,
        MacroName.ADD: 9,
        MacroName.SUB: 10,
        MacroName.CMP_GE: 10,
        MacroName.SHL: 1,
        MacroName.SHR: 1,
        MacroName.SPLAT: 1,
    },
    LogicFamily.IDEAL: {
        MacroName.NOT: 1,
        MacroName.OR: 1,
        MacroName.AND: 1,
        MacroName.XOR: 1,
        MacroName.COPY: 1,
        MacroName.MUX: 3,
        MacroName.ADD: 5,
        MacroName.SUB: 6,
        MacroName.CMP_GE: 6,
        MacroName.SHL: 1,
        MacroName.SHR: 1,
        MacroName.SPLAT: 1,
    },
}

# Sign fix-up of CMP_GE, executed on the top bit array only
CMP_TAIL_MICROOPS = {LogicFamily.OSCAR: 20, LogicFamily.IDEAL: 6}


@dataclass(frozen=True)
class MacroProgram:
    name: MacroName
    microops_per_bit: int
    scratch_registers: int = SCRATCH_REGISTERS
    tail_microops: int = 0

    @property
    def arity(self) -> int:
        return ARITY[self.name]

    @property
    def chains(self) -> bool:
        """Bit ``b`` of the result depends only on bits ``<= b`` of the operands."""
        return self.name in CHAINING

    def issue_gap(self, amount: int = 0) -> int:
        """Cycles before the next independent macro may enter the pipeline."""
        if self.name in SHIFTS:
            return max(1, self.microops_per_bit * amount)
        return self.microops_per_bit

    def latency(self, bits: int, depth: int, amount: int = 0) -> int:
        fill = depth - 1
        if self.name in SHIFTS:
            return self.microops_per_bit * amount + fill
        return self.microops_per_bit * bits + self.tail_microops + fill


def macro_library(family: LogicFamily = LogicFamily.OSCAR,
                  overrides: Optional[Mapping[str, int]] = None) -> Dict[MacroName, MacroProgram]:
    """
    Build the ``MacroProgram`` table of one logic family.

    ``overrides`` maps lower-case macro names to a microop count per bit; it
    changes timing only, the emitted microop stream stays the canonical one.
    """
    library = {
        name: MacroProgram(name, count)
        for name, count in DEFAULT_MICROOPS[family].items()
    }
    library[MacroName.CMP_GE] = replace(library[MacroName.CMP_GE], tail_microops=CMP_TAIL_MICROOPS[family])

    for key, count in (overrides or {}).items():
        name = MacroName(key)
        library[name] = replace(library[name], microops_per_bit=int(count))

    return library


class _Stream:
    """Emits gate networks over the arrays ``[lo, hi)`` in either logic family."""

    __slots__ = ("family", "lo", "hi", "row_mask", "ops")

    def __init__(self, family: LogicFamily, lo: int, hi: int, row_mask=None):
        self.family = family
        self.lo = lo
        self.hi = hi
        self.row_mask = row_mask
        self.ops: List[NorMicroop] = []

    def at(self, lo: int, hi: int) -> "_Stream":
        self.lo, self.hi = lo, hi
        return self

    def _push(self, op: NorMicroop):
        if self.row_mask is not None:
            op = replace(op, row_mask=self.row_mask)
        self.ops.append(op)

    def nor(self, a, b, d, dst_offset=0):
        self._push(nor(a, b, d, self.lo, self.hi, dst_offset))

    def gate(self, table, a, b, d, dst_offset=0):
        self._push(gate(table, a, b, d, self.lo, self.hi, dst_offset))

    def not_(self, a, d):
        if self.family is LogicFamily.IDEAL:
            self.gate(TT_NOT_A, a, a, d)
        else:
            self.nor(a, a, d)

    def or_(self, a, b, d, t):
        if self.family is LogicFamily.IDEAL:
            self.gate(TT_OR, a, b, d)
            return
        self.nor(a, b, t[0])
        self.nor(t[0], t[0], d)

    def and_(self, a, b, d, t):
        if self.family is LogicFamily.IDEAL:
            self.gate(TT_AND, a, b, d)
            return
        self.nor(a, a, t[0])
        self.nor(b, b, t[1])
        self.nor(t[0], t[1], d)

    def xor(self, a, b, d, t):
        if self.family is LogicFamily.IDEAL:
            self.gate(TT_XOR, a, b, d)
            return
        self.nor(a, b, t[0])
        self.nor(a, t[0], t[1])
        self.nor(b, t[0], t[2])
        self.nor(t[1], t[2], t[3])
        self.nor(t[3], t[3], d)

    def copy(self, a, d, t):
        if self.family is LogicFamily.IDEAL:
            self.gate(TT_A, a, a, d)
            return
        self.nor(a, a, t[0])
        self.nor(t[0], t[0], d)

    def mux(self, s, a, b, d, t):
        """``d = s ? a : b`` bitwise."""
        if self.family is LogicFamily.IDEAL:
            self.gate(TT_AND, s, a, t[0])
            self.gate(TT_NOT_A_AND_B, s, b, t[1])
            self.gate(TT_OR, t[0], t[1], d)
            return
        self.nor(s, s, t[0])
        self.nor(a, a, t[1])
        self.nor(t[0], t[1], t[2])
        self.nor(b, b, t[3])
        self.nor(s, t[3], t[4])
        self.nor(t[2], t[4], t[5])
        self.nor(t[5], t[5], d)

    def write(self, d, value):
        self._push(NorMicroop(MicroopKind.WRITE_ROW, dst=d, lo=self.lo, hi=self.hi, value=int(value)))

    def copy_plane(self, a, source_array, d):
        self._push(NorMicroop(MicroopKind.COPY_ROW, src1=a, dst=d, lo=self.lo, hi=self.hi, value=source_array))

    def shift_step(self, a, d, direction, fill: ShiftFill):
        self._push(NorMicroop(MicroopKind.SHIFT_STEP, src1=a, dst=d, lo=self.lo, hi=self.hi,
                              dst_offset=direction, value=fill.value))

    def full_adder_chain(self, a, b, d, bits, carry_in, t):
        """Ripple carry through arrays ``0..bits-1``; ``t[7]`` holds the carry plane."""
        c = t[7]
        self.at(0, 1).write(c, carry_in)
        for bit in range(bits):
            hop = bit + 1 < bits
            self.at(bit, bit + 1)
            if self.family is LogicFamily.IDEAL:
                self.gate(TT_XOR, a, b, t[0])
                self.gate(TT_AND, a, b, t[1])
                self.gate(TT_AND, t[0], c, t[2])
                if hop:
                    self.gate(TT_OR, t[1], t[2], c, dst_offset=1)
                self.gate(TT_XOR, t[0], c, d)
                continue
            self.nor(a, b, t[0])
            self.nor(a, t[0], t[1])
            self.nor(b, t[0], t[2])
            self.nor(t[1], t[2], t[3])
            self.nor(t[3], c, t[4])
            self.nor(t[3], t[4], t[5])
            self.nor(c, t[4], t[6])
            self.nor(t[5], t[6], d)
            if hop:
                self.nor(t[0], t[4], c, dst_offset=1)


def expand_macro(program: MacroProgram, family: LogicFamily, dst: int, srcs: Sequence[int],
                 bits: int, scratch: Sequence[int], *, amount: int = 0,
                 fill: ShiftFill = ShiftFill.ZERO, carry_in: int = 0,
                 row_mask: Optional[np.ndarray] = None) -> List[NorMicroop]:
    """
    Lower one macro into its microop stream over the low ``bits`` arrays.

    ``amount`` is the shift distance of SHL/SHR and the source bit of SPLAT.
    ``carry_in`` seeds the carry plane of ADD.
    """
    name = program.name
    if len(srcs) != program.arity:
        raise PlanMismatchError(f"{name.value} takes {program.arity} sources, got {len(srcs)}")
    if len(scratch) < SCRATCH_REGISTERS:
        raise PlanMismatchError(f"{name.value} needs {SCRATCH_REGISTERS} scratch columns")
    if name is MacroName.NOT and dst == srcs[0]:
        raise ColumnConflictError(f"NOT cannot write its own source column {dst}")

    t = list(scratch)
    s = _Stream(family, 0, bits, row_mask)

    if name is MacroName.NOT:
        s.not_(srcs[0], dst)
    elif name is MacroName.AND:
        s.and_(srcs[0], srcs[1], dst, t)
    elif name is MacroName.OR:
        s.or_(srcs[0], srcs[1], dst, t)
    elif name is MacroName.XOR:
        s.xor(srcs[0], srcs[1], dst, t)
    elif name is MacroName.COPY:
        s.copy(srcs[0], dst, t)
    elif name is MacroName.MUX:
        s.mux(srcs[0], srcs[1], srcs[2], dst, t)
    elif name is MacroName.ADD:
        s.full_adder_chain(srcs[0], srcs[1], dst, bits, carry_in, t)
    elif name is MacroName.SUB:
        s.not_(srcs[1], t[8])
        s.full_adder_chain(srcs[0], t[8], dst, bits, 1, t)
    elif name is MacroName.CMP_GE:
        _expand_cmp_ge(s, srcs[0], srcs[1], dst, bits, t)
    elif name is MacroName.SPLAT:
        if not 0 <= amount < bits:
            raise PlanMismatchError(f"SPLAT source bit {amount} outside 0..{bits - 1}")
        s.copy_plane(srcs[0], amount, dst)
    elif name in SHIFTS:
        _expand_shift(s, name, srcs[0], dst, bits, amount, fill, t)

    return s.ops


def _expand_cmp_ge(s: _Stream, a: int, b: int, dst: int, bits: int, t):
    """``dst`` = all ones where ``a >= b`` (signed), else zero."""
    diff = t[9]
    s.not_(b, t[8])
    s.full_adder_chain(a, t[8], diff, bits, 1, t)

    top = bits - 1
    s.at(top, top + 1)
    # lt = sign(a - b) xor overflow(a - b)
    s.xor(a, b, t[5], t)
    s.xor(diff, a, t[6], t)
    s.and_(t[5], t[6], t[7], t)
    s.xor(diff, t[7], t[8], t)
    s.not_(t[8], dst)
    if top:
        s.at(0, top).copy_plane(dst, top, dst)


def _expand_shift(s: _Stream, name: MacroName, a: int, dst: int, bits: int,
                  amount: int, fill: ShiftFill, t):
    if amount < 0:
        raise PlanMismatchError(f"Negative shift amount {amount}")

    if name is MacroName.SHL:
        if fill is not ShiftFill.ZERO:
            raise PlanMismatchError("SHL only fills with zeros")
        direction = 1
    else:
        direction = -1

    steps = amount % bits if fill is ShiftFill.WRAP else min(amount, bits)
    if steps == 0:
        if a != dst:
            s.copy(a, dst, t)
        return

    src = a
    for _ in range(steps):
        s.shift_step(src, dst, direction, fill)
        src = dst
