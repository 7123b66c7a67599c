"""
Macro programs run on one DCE pipeline.

A ``Workspace`` hands out the user registers of a pipeline and strings
macros together. Every register is a vector of ``rows`` lanes at one fixed
width, so all arithmetic wraps at ``bits`` and values are read back as
two's complement. The nonlinear kernels at the bottom mirror
``darth_pum.apps.intmath`` step for step.
"""

from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core.costs import CostReport
from ..dce.macros import MacroName
from ..dce.microops import ShiftFill
from ..errors import CapacityError, PlanMismatchError
from ..helpers import ceil_div
from ..logger import logger
from . import intmath


class Workspace:
    def __init__(self, hct, pipeline: int, bits: int, owner=None):
        self.hct = hct
        self.index = pipeline
        self.pipe = hct.dce.pipeline(pipeline)
        if not 1 <= bits <= self.pipe.depth:
            raise PlanMismatchError(f"Workspace width {bits} outside 1..{self.pipe.depth}")
        self.bits = bits
        self.owner = owner
        self.report = CostReport()
        self._free = list(reversed(range(self.pipe.user_registers)))
        self._consts: Dict[int, int] = {}

    @property
    def rows(self) -> int:
        return self.pipe.rows

    def alloc(self) -> int:
        if not self._free:
            raise CapacityError(f"Pipeline {self.index} of HCT {self.hct.hct_id} has no free register")
        return self._free.pop()

    def release(self, *registers: int):
        pinned = set(self._consts.values())
        for r in registers:
            if r not in pinned and r not in self._free:
                self._free.append(r)

    @property
    def free_registers(self) -> int:
        return len(self._free)

    def _run(self, macro: MacroName, dst: int, srcs: Sequence[int], **kwargs) -> int:
        self.report.alongside(
            self.hct.dce.run_macro(self.index, macro, dst, tuple(srcs), self.bits, owner=self.owner, **kwargs)
        )
        return dst

    def _out(self, dst: Optional[int]) -> int:
        return self.alloc() if dst is None else dst

    # Data in and out

    def _column(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64).ravel()
        if len(values) > self.rows:
            raise PlanMismatchError(f"{len(values)} values exceed the {self.rows} rows of a register")
        column = np.zeros(self.rows, dtype=np.int64)
        column[:len(values)] = values
        return column

    def load(self, values, dst: Optional[int] = None) -> int:
        """Stage host values (a scalar broadcasts) into a register."""
        dst = self._out(dst)
        values = np.asarray(values, dtype=np.int64)
        column = np.full(self.rows, int(values)) if values.ndim == 0 else self._column(values)
        self.report.alongside(self.pipe.write_register(dst, column, self.bits, owner=self.owner))
        return dst

    def receive(self, values, label: str, dst: Optional[int] = None, earliest: int = 0) -> int:
        """Land values produced elsewhere on the tile through the transfer network."""
        dst = self._out(dst)
        column = self._column(values)
        self.report.alongside(self.hct.land(
            self.pipe, dst, column, self.bits, 0, ceil_div(len(np.ravel(values)) * self.bits, 8),
            earliest, self.owner, label,
        ))
        return dst

    def const(self, value: int) -> int:
        """A register holding ``value`` in every lane, written once."""
        value = int(value)
        if value not in self._consts:
            self._consts[value] = self.load(value)
        return self._consts[value]

    def read(self, register: int, count: Optional[int] = None) -> np.ndarray:
        values = self.pipe.read_register(register, self.bits, signed=True)
        return values if count is None else values[:count]

    # Element-wise macros

    def copy(self, a: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.COPY, self._out(dst), (a,))

    def add(self, a: int, b: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.ADD, self._out(dst), (a, b))

    def sub(self, a: int, b: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.SUB, self._out(dst), (a, b))

    def and_(self, a: int, b: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.AND, self._out(dst), (a, b))

    def or_(self, a: int, b: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.OR, self._out(dst), (a, b))

    def shl(self, a: int, amount: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.SHL, self._out(dst), (a,), amount=amount)

    def shr(self, a: int, amount: int, dst: Optional[int] = None) -> int:
        """Arithmetic right shift."""
        return self._run(MacroName.SHR, self._out(dst), (a,), amount=amount, fill=ShiftFill.SIGN)

    def ge(self, a: int, b: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.CMP_GE, self._out(dst), (a, b))

    def select(self, mask: int, a: int, b: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.MUX, self._out(dst), (mask, a, b))

    def splat(self, a: int, bit: int, dst: Optional[int] = None) -> int:
        return self._run(MacroName.SPLAT, self._out(dst), (a,), amount=bit)

    # Composite programs

    def maximum(self, a: int, b: int, dst: Optional[int] = None) -> int:
        mask = self.ge(a, b)
        out = self.select(mask, a, b, dst)
        self.release(mask)
        return out

    def minimum(self, a: int, b: int, dst: Optional[int] = None) -> int:
        mask = self.ge(a, b)
        out = self.select(mask, b, a, dst)
        self.release(mask)
        return out

    def relu(self, a: int, dst: Optional[int] = None) -> int:
        mask = self.ge(a, self.const(0))
        out = self.and_(a, mask, dst)
        self.release(mask)
        return out

    def absolute(self, a: int, dst: Optional[int] = None) -> int:
        mask = self.ge(a, self.const(0))
        negated = self.sub(self.const(0), a)
        out = self.select(mask, a, negated, dst)
        self.release(mask, negated)
        return out

    def clip(self, a: int, lo: int, hi: int, dst: Optional[int] = None) -> int:
        out = self.maximum(a, self.const(lo), dst)
        return self.minimum(out, self.const(hi), out)

    def mul(self, a: int, b: int, multiplier_bits: int, dst: Optional[int] = None,
            accumulate: Optional[int] = None) -> int:
        """
        Long multiplication ``a * b`` over the low ``multiplier_bits`` of ``b``
        (two's complement). With ``accumulate`` the product is added into that
        register, which must not be ``b``. ``dst`` may alias either operand.
        """
        if not 1 <= multiplier_bits <= self.bits:
            raise PlanMismatchError(f"Multiplier width {multiplier_bits} outside 1..{self.bits}")
        shifted = self.copy(a)
        acc = accumulate if accumulate is not None else self.copy(self.const(0))
        mask, part = self.alloc(), self.alloc()
        top = multiplier_bits - 1
        for i in range(multiplier_bits):
            self.splat(b, i, mask)
            self.and_(shifted, mask, part)
            if i == top:
                self.sub(acc, part, acc)
            else:
                self.add(acc, part, acc)
                self.shl(shifted, 1, shifted)
        self.release(shifted, mask, part)
        if accumulate is None and dst is not None:
            self.copy(acc, dst)
            self.release(acc)
            return dst
        return acc

    def shr_var(self, a: int, amount: int, amount_bits: int, dst: Optional[int] = None) -> int:
        """Shift each lane right by its own amount, taken from register ``amount``."""
        out = self.copy(a, dst)
        mask, shifted = self.alloc(), self.alloc()
        for k in range(amount_bits):
            self.splat(amount, k, mask)
            self.shr(out, 1 << k, shifted)
            self.select(mask, shifted, out, out)
        self.release(mask, shifted)
        return out

    def divide(self, n: int, d: int, quotient_bits: int, dst: Optional[int] = None) -> int:
        """Restoring division of non-negative lanes; needs ``n < d << quotient_bits``."""
        rem = self.copy(n)
        quotient = self.copy(self.const(0), dst)
        trial, mask, diff = self.alloc(), self.alloc(), self.alloc()
        one = self.const(1)
        for k in reversed(range(quotient_bits)):
            self.shl(d, k, trial)
            self.ge(rem, trial, mask)
            self.sub(rem, trial, diff)
            self.select(mask, diff, rem, rem)
            self.shl(quotient, 1, quotient)
            self.and_(mask, one, diff)
            self.or_(quotient, diff, quotient)
        self.release(rem, trial, mask, diff)
        return quotient

    def isqrt(self, v: int, root_bits: int, dst: Optional[int] = None) -> int:
        """Bitwise integer square root; needs ``v < 4 ** root_bits``."""
        num = self.copy(v)
        root = self.copy(self.const(0), dst)
        bit = self.load(1 << (2 * (root_bits - 1)))
        trial, mask, diff, half = self.alloc(), self.alloc(), self.alloc(), self.alloc()
        for _ in range(root_bits):
            self.add(root, bit, trial)
            self.ge(num, trial, mask)
            self.sub(num, trial, diff)
            self.select(mask, diff, num, num)
            self.shr(root, 1, half)
            self.add(half, bit, diff)
            self.select(mask, diff, half, root)
            self.shr(bit, 2, bit)
        self.release(num, bit, trial, mask, diff, half)
        return root

    def sum(self, registers: Sequence[int], dst: Optional[int] = None) -> int:
        total = self.copy(registers[0], dst)
        for r in registers[1:]:
            self.add(total, r, total)
        return total


# Nonlinear kernels


def exp2_neg(ws: Workspace, w: int, dst: Optional[int] = None) -> int:
    n = ws.shr(w, intmath.EXP_IN_FRAC)
    cap = ws.const(intmath.EXP_MAX_SHIFT)
    ws.minimum(n, cap, n)
    f = ws.and_(w, ws.const((1 << intmath.EXP_IN_FRAC) - 1))

    f_bits = intmath.EXP_IN_FRAC + 1
    t = ws.mul(ws.const(intmath.EXP_C), f, f_bits)
    ws.shr(t, intmath.EXP_IN_FRAC, t)
    ws.add(t, ws.const(intmath.EXP_B), t)
    poly = ws.mul(t, f, f_bits)
    ws.shr(poly, intmath.EXP_IN_FRAC, poly)
    ws.add(poly, ws.const(intmath.EXP_ONE), poly)

    out = ws.shr_var(poly, n, intmath.EXP_MAX_SHIFT.bit_length(), dst)
    ws.release(n, f, t, poly)
    return out


def softmax(ws: Workspace, scores: Sequence[int], scale: int) -> List[int]:
    """Softmax across registers: lane ``i`` of register ``j`` is score ``j`` of row ``i``."""
    top = ws.copy(scores[0])
    for r in scores[1:]:
        ws.maximum(top, r, top)

    scale_reg = ws.const(scale)
    scale_bits = intmath.signed_bits(scale)
    exps = []
    for r in scores:
        diff = ws.sub(top, r)
        w = ws.mul(diff, scale_reg, scale_bits)
        ws.shr(w, intmath.ACT_FRAC + 12 - intmath.EXP_IN_FRAC, w)
        exps.append(exp2_neg(ws, w, r))
        ws.release(diff, w)

    total = ws.sum(exps)
    recip = ws.divide(ws.const(1 << intmath.RECIP_NUMERATOR_BITS), total, intmath.RECIP_QUOTIENT_BITS)
    recip_bits = intmath.RECIP_QUOTIENT_BITS + 1
    for r in exps:
        p = ws.mul(r, recip, recip_bits)
        ws.shr(p, intmath.RECIP_NUMERATOR_BITS - intmath.PROB_FRAC, r)
        ws.release(p)
    ws.release(top, total, recip)
    logger.debug(f"softmax over {len(scores)} registers on pipe {ws.index}")
    return list(scores)


def layernorm(ws: Workspace, channels: Sequence[int], value_bits: int = 16) -> List[int]:
    """Layer norm across registers, one register per channel, in place."""
    log = intmath.channel_log2(len(channels))
    mean = ws.sum(channels)
    ws.shr(mean, log, mean)
    for r in channels:
        ws.sub(r, mean, r)

    var = ws.load(intmath.LN_EPS_CODE)
    for r in channels:
        ws.mul(r, r, value_bits, accumulate=var)
    sd = ws.isqrt(var, intmath.LN_ROOT_BITS)
    inv = ws.divide(ws.const(1 << intmath.LN_RECIP_BITS), sd, intmath.LN_QUOTIENT_BITS)

    shift = intmath.LN_RECIP_BITS - intmath.ACT_FRAC - log // 2
    for r in channels:
        y = ws.mul(inv, r, value_bits)
        ws.shr(y, shift, r)
        ws.release(y)
    ws.release(mean, var, sd, inv)
    return list(channels)


def gelu(ws: Workspace, u: int, dst: Optional[int] = None) -> int:
    zero = ws.const(0)
    positive = ws.ge(u, zero)
    v = ws.absolute(u)
    ws.mul(v, ws.const(intmath.GELU_ISQRT2), intmath.signed_bits(intmath.GELU_ISQRT2), v)
    ws.shr(v, 12, v)
    clip = ws.const(intmath.GELU_CLIP)
    ws.minimum(v, clip, v)
    ws.sub(v, clip, v)

    sq = ws.mul(v, v, intmath.signed_bits(-intmath.GELU_CLIP))
    ws.shr(sq, intmath.ACT_FRAC, sq)
    ws.mul(sq, ws.const(intmath.GELU_A), intmath.signed_bits(intmath.GELU_A), v)
    ws.shr(v, 12, v)
    one = ws.const(1 << intmath.ACT_FRAC)
    ws.add(v, one, v)
    ws.sub(zero, v, sq)
    ws.select(positive, v, sq, v)
    ws.add(v, one, v)

    out = ws.mul(u, v, intmath.signed_bits(2 << intmath.ACT_FRAC), dst)
    ws.shr(out, intmath.ACT_FRAC + 1, out)
    ws.release(positive, v, sq)
    return out
