from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..core.costs import Component, CostReport, CostTable
from ..errors import (
    AddressRangeError,
    ColumnConflictError,
    DirectionError,
    PlanMismatchError,
    ReservedRegisterError,
)
from ..logger import logger
from .macros import SCRATCH_REGISTERS, MacroName, MacroProgram, expand_macro, macro_library
from .microops import Direction, LogicFamily, MicroopKind, NorMicroop, ShiftFill


def pack_planes(planes: np.ndarray, signed: bool = False) -> np.ndarray:
    """Bit-planes of shape ``(bits, rows)`` to one int64 per row."""
    bits = planes.shape[0]
    if bits == 0:
        return np.zeros(planes.shape[1:], dtype=np.int64)
    if bits > 64 or (bits == 64 and not signed):
        raise PlanMismatchError(f"Cannot pack {bits} bits into int64")

    weights = np.left_shift(np.uint64(1), np.arange(bits, dtype=np.uint64))
    packed = (planes.astype(np.uint64) * weights[:, None]).sum(axis=0, dtype=np.uint64)
    if bits == 64:
        return packed.view(np.int64)

    values = packed.astype(np.int64)
    if signed:
        sign = np.int64(1 << (bits - 1))
        values = (values ^ sign) - sign
    return values


def unpack_planes(values, bits: int) -> np.ndarray:
    """Two's-complement integers to bit-planes of shape ``(bits, len(values))``."""
    raw = np.asarray(values, dtype=np.int64).view(np.uint64)
    shifts = np.arange(bits, dtype=np.uint64)
    return ((raw[None, :] >> shifts[:, None]) & np.uint64(1)).astype(bool)


class DigitalPipeline:
    """
    One bit-pipelined chain of ``depth`` NOR arrays.

    Cells are indexed ``[array, row, column]``: column ``r`` of every array
    together forms vector register ``r``; bit ``b`` of element ``e`` lives at
    ``[b, e, r]``. The top ``SCRATCH_REGISTERS`` columns are reserved for
    macro temporaries.
    """

    __slots__ = (
        "index", "hct_id", "depth", "rows", "cols", "costs", "family", "library",
        "latency_multiplier", "trace", "cells", "direction",
        "issue_free", "retire_at", "done_at", "chain_at", "chain_rate", "active_array_cycles", "busy_cycles",
        "reserved_by", "last_start", "last_end",
    )

    def __init__(self, index: int = 0, depth: int = 64, rows: int = 64, cols: int = 64,
                 costs: Optional[CostTable] = None, family: LogicFamily = LogicFamily.OSCAR,
                 library: Optional[Dict[MacroName, MacroProgram]] = None,
                 latency_multiplier: int = 1, trace=None, hct_id: int = 0):
        if cols <= SCRATCH_REGISTERS:
            raise PlanMismatchError(f"A pipeline needs more than {SCRATCH_REGISTERS} columns")

        self.index = index
        self.hct_id = hct_id
        self.depth = depth
        self.rows = rows
        self.cols = cols
        self.costs = costs or CostTable()
        self.family = family
        self.library = library or macro_library(family)
        self.latency_multiplier = latency_multiplier
        self.trace = trace

        self.cells = np.zeros((depth, rows, cols), dtype=bool)
        self.direction = Direction.FORWARD

        self.issue_free = 0
        self.retire_at = 0
        self.done_at: Dict[int, int] = defaultdict(int)
        self.chain_at: Dict[int, int] = defaultdict(int)
        self.chain_rate: Dict[int, int] = defaultdict(int)
        self.last_start = 0
        self.last_end = 0

        self.active_array_cycles = 0
        self.busy_cycles = 0
        self.reserved_by = None

    @property
    def user_registers(self) -> int:
        return self.cols - SCRATCH_REGISTERS

    @property
    def scratch(self) -> List[int]:
        return list(range(self.user_registers, self.cols))

    # Functional core

    def _write(self, lo: int, hi: int, column: int, planes: np.ndarray, row_mask):
        if row_mask is None:
            self.cells[lo:hi, :, column] = planes
        else:
            self.cells[lo:hi, row_mask, column] = planes[:, row_mask]

    def _apply(self, op: NorMicroop):
        lo, hi = op.lo, op.hi
        kind = op.kind

        if kind is MicroopKind.NOR or kind is MicroopKind.GATE:
            a = self.cells[lo:hi, :, op.src1]
            b = self.cells[lo:hi, :, op.src2]
            if kind is MicroopKind.NOR:
                out = ~(a | b)
            else:
                index = (a.astype(np.uint8) << 1) | b.astype(np.uint8)
                out = ((op.value >> index) & 1).astype(bool)
            dlo = lo + op.dst_offset
            dhi = min(hi + op.dst_offset, self.depth)
            self._write(dlo, dhi, op.dst, out[: dhi - dlo], op.row_mask)

        elif kind is MicroopKind.WRITE_ROW:
            self._write(lo, hi, op.dst, np.full((hi - lo, self.rows), bool(op.value)), op.row_mask)

        elif kind is MicroopKind.COPY_ROW:
            plane = self.cells[op.value, :, op.src1].copy()
            self._write(lo, hi, op.dst, np.broadcast_to(plane, (hi - lo, self.rows)), op.row_mask)

        elif kind is MicroopKind.SHIFT_STEP:
            fill = ShiftFill(op.value)
            if fill is ShiftFill.WRAP and self.direction is not Direction.REVERSED:
                raise DirectionError("Rotating through the terminal buffer needs a reversed pipeline")
            old = self.cells[lo:hi, :, op.src1].copy()
            new = np.empty_like(old)
            if op.dst_offset > 0:
                new[1:] = old[:-1]
                new[0] = old[-1] if fill is ShiftFill.WRAP else False
            else:
                new[:-1] = old[1:]
                if fill is ShiftFill.WRAP:
                    new[-1] = old[0]
                elif fill is ShiftFill.SIGN:
                    new[-1] = old[-1]
                else:
                    new[-1] = False
            self._write(lo, hi, op.dst, new, op.row_mask)

    def _record(self, ops: Iterable[NorMicroop], start: int):
        if self.trace is None:
            return
        for offset, op in enumerate(ops):
            self.trace.add(start + offset, f"hct{self.hct_id}.pipe{self.index}", op.trace_line(start + offset, self.index))

    def _check_owner(self, registers: Iterable[int], owner):
        if self.reserved_by is not None and owner != self.reserved_by:
            raise ReservedRegisterError(
                f"Pipeline {self.index} is reserved by {self.reserved_by!r}; cannot write {list(registers)}"
            )

    def _check_registers(self, registers: Iterable[int]):
        for r in registers:
            if not 0 <= r < self.user_registers:
                raise PlanMismatchError(f"Register {r} outside 0..{self.user_registers - 1}")

    def _operand_ready(self, register: int, rate: int) -> int:
        # A bit-serial consumer may trail a bit-serial producer that runs no faster
        if rate and self.chain_rate[register] and rate >= self.chain_rate[register]:
            return self.chain_at[register]
        return self.done_at[register]

    def _schedule(self, reads: Sequence[int], writes: Sequence[int], latency: int, gap: int,
                  earliest: int, rate: int = 0) -> int:
        start = max([earliest, self.issue_free] + [self._operand_ready(r, rate) for r in (*reads, *writes)])
        end = start + latency
        self.issue_free = start + gap
        self.retire_at = max(self.retire_at, end)
        for r in writes:
            self.done_at[r] = end
            self.chain_at[r] = start + gap if rate else end
            self.chain_rate[r] = rate
        self.last_start, self.last_end = start, end
        self.busy_cycles += latency
        return start

    # Operations

    def exec_nor(self, op: NorMicroop) -> CostReport:
        """Execute one raw microop; one cycle on every active array."""
        if op.kind in (MicroopKind.NOR, MicroopKind.GATE) and op.dst_offset == 0 and op.dst in (op.src1, op.src2):
            raise ColumnConflictError(f"Destination column {op.dst} aliases a source")

        self._apply(op)
        self.active_array_cycles += op.active_arrays
        start = self._schedule((), (), 1, 1, 0)
        self._record((op,), start)

        return (
            CostReport(cycles=1)
            .charge(Component.DIGITAL_ARRAY, self.costs.digital_array_boolean_pj * op.active_arrays)
            .charge(Component.PIPELINE_CTRL, self.costs.pipeline_ctrl_pj)
            .count("microops")
        )

    def run_macro(self, macro, dst: int, srcs: Sequence[int], bits: int, *, amount: int = 0,
                  fill: ShiftFill = ShiftFill.ZERO, carry_in: int = 0,
                  row_mask: Optional[np.ndarray] = None, earliest: int = 0, owner=None) -> CostReport:
        """
        Run one macro on the low ``bits`` arrays, element-wise on all rows.

        ``macro`` is a ``MacroName`` or a ``MacroProgram``. The returned
        report carries the macro latency; ``last_start``/``last_end`` place it
        on this pipeline's timeline.
        """
        program = macro if isinstance(macro, MacroProgram) else self.library[macro]
        if not 1 <= bits <= self.depth:
            raise PlanMismatchError(f"Operand width {bits} outside 1..{self.depth}")
        if fill is ShiftFill.WRAP and self.direction is not Direction.REVERSED:
            raise DirectionError("Rotate needs the pipeline reversed first")
        self._check_registers((dst, *srcs))
        self._check_owner((dst,), owner)

        ops = expand_macro(
            program, self.family, dst, srcs, bits, self.scratch,
            amount=amount, fill=fill, carry_in=carry_in, row_mask=row_mask,
        )
        arrays = 0
        for op in ops:
            self._apply(op)
            arrays += op.active_arrays
        self.active_array_cycles += arrays

        latency = program.latency(bits, self.depth, amount) * self.latency_multiplier
        gap = program.issue_gap(amount) * self.latency_multiplier
        rate = gap if program.chains else 0
        start = self._schedule(srcs, (dst,), latency, gap, earliest, rate)
        self._record(ops, start)

        logger.debug(f"pipe {self.index}: {program.name.value} r{dst} <- {list(srcs)} [{bits}b] @ {start}+{latency}")

        return (
            CostReport(cycles=latency)
            .charge(Component.DIGITAL_ARRAY, self.costs.digital_array_boolean_pj * arrays)
            .charge(Component.PIPELINE_CTRL, self.costs.pipeline_ctrl_pj * latency)
            .count("microops", len(ops))
            .count(f"macro.{program.name.value}")
        )

    def _gather_rows(self, addr_reg: int, addr_lo: int, addr_bits: int, base: int,
                     capacity: int, row_mask) -> np.ndarray:
        addrs = pack_planes(self.cells[addr_lo:addr_lo + addr_bits, :, addr_reg])
        if row_mask is not None:
            addrs = np.where(row_mask, addrs, 0)
        if base < 0 or addrs.max(initial=0) >= capacity * self.rows:
            raise AddressRangeError(
                f"Address {int(addrs.max(initial=0))} beyond {capacity} registers from r{base}"
            )
        return addrs

    def _access(self, elements: int, array_accesses: int, reads, writes, earliest: int) -> CostReport:
        cycles = self.costs.element_access_cycles * elements * self.latency_multiplier
        self.active_array_cycles += array_accesses
        self._schedule(reads, writes, cycles, cycles, earliest)
        return (
            CostReport(cycles=cycles)
            .charge(Component.DIGITAL_ARRAY, self.costs.digital_array_boolean_pj * array_accesses)
            .charge(Component.PIPELINE_CTRL, self.costs.pipeline_ctrl_pj * cycles)
            .count("element_accesses", elements)
        )

    def element_load(self, addr_reg: int, dest_reg: int, source: "DigitalPipeline", source_base: int,
                     data_bits: int, *, addr_lo: int = 0, addr_bits: int = 8, data_lo: int = 0,
                     dest_lo: int = 0, source_registers: Optional[int] = None,
                     row_mask: Optional[np.ndarray] = None, earliest: int = 0, owner=None) -> CostReport:
        """
        Gather: element ``e`` of ``dest_reg`` receives the element of ``source``
        addressed by bits ``[addr_lo, addr_lo + addr_bits)`` of ``addr_reg``.

        Address ``a`` selects row ``a % rows`` of register ``source_base + a // rows``,
        so a table may span several consecutive source registers.
        """
        if source.hct_id != self.hct_id:
            raise AddressRangeError(f"Source pipeline belongs to HCT {source.hct_id}, not {self.hct_id}")
        self._check_registers((addr_reg, dest_reg))
        self._check_owner((dest_reg,), owner)

        capacity = source_registers or (source.user_registers - source_base)
        if source_base + capacity > source.user_registers:
            raise AddressRangeError(f"Source registers r{source_base}+{capacity} exceed the pipeline")
        addrs = self._gather_rows(addr_reg, addr_lo, addr_bits, source_base, capacity, row_mask)

        rows = addrs % self.rows
        regs = source_base + addrs // self.rows
        data = source.cells[data_lo:data_lo + data_bits][:, rows, regs]
        self._write(dest_lo, dest_lo + data_bits, dest_reg, data, row_mask)

        elements = self.rows if row_mask is None else int(np.count_nonzero(row_mask))
        earliest = max(earliest, max(source.done_at[r] for r in range(source_base, source_base + capacity)))
        logger.debug(f"pipe {self.index}: element_load r{dest_reg} <- pipe {source.index}[r{source_base}+] by r{addr_reg}")
        return self._access(elements, elements * (addr_bits + 2 * data_bits), (addr_reg,), (dest_reg,), earliest)

    def element_store(self, addr_reg: int, src_reg: int, dest: "DigitalPipeline", dest_base: int,
                      data_bits: int, *, addr_lo: int = 0, addr_bits: int = 8, data_lo: int = 0,
                      dest_registers: Optional[int] = None, row_mask: Optional[np.ndarray] = None,
                      earliest: int = 0, owner=None) -> CostReport:
        """Scatter: the companion of ``element_load``; later elements win on address collisions."""
        if dest.hct_id != self.hct_id:
            raise AddressRangeError(f"Destination pipeline belongs to HCT {dest.hct_id}, not {self.hct_id}")
        self._check_registers((addr_reg, src_reg))
        dest._check_owner((dest_base,), owner)

        capacity = dest_registers or (dest.user_registers - dest_base)
        if dest_base + capacity > dest.user_registers:
            raise AddressRangeError(f"Destination registers r{dest_base}+{capacity} exceed the pipeline")
        addrs = self._gather_rows(addr_reg, addr_lo, addr_bits, dest_base, capacity, row_mask)

        elements = np.arange(self.rows) if row_mask is None else np.flatnonzero(row_mask)
        rows = addrs[elements] % dest.rows
        regs = dest_base + addrs[elements] // dest.rows
        dest.cells[data_lo:data_lo + data_bits, rows, regs] = self.cells[data_lo:data_lo + data_bits, elements, src_reg]
        for r in set(regs.tolist()):
            dest.done_at[r] = max(dest.done_at[r], earliest)

        return self._access(len(elements), len(elements) * (addr_bits + 2 * data_bits), (addr_reg, src_reg), (), earliest)

    def reverse(self, earliest: int = 0) -> CostReport:
        """
        Drain every in-flight macro, then flip the shift direction.
        Costs the drain wait plus one full pass of ``depth`` cycles.
        """
        now = max(earliest, self.issue_free)
        start = max(now, self.retire_at)
        end = start + self.depth
        self.direction = Direction.REVERSED if self.direction is Direction.FORWARD else Direction.FORWARD
        self.issue_free = self.retire_at = end
        self.busy_cycles += self.depth
        self.last_start, self.last_end = start, end

        logger.debug(f"pipe {self.index}: reversed to {self.direction.value} after draining {start - now} cycles")
        return (
            CostReport(cycles=end - now)
            .charge(Component.PIPELINE_CTRL, self.costs.pipeline_ctrl_pj * self.depth)
            .count("reversals")
        )

    # Host-side staging and readback

    def write_register(self, reg: int, values, bits: int, lo: int = 0,
                       row_mask: Optional[np.ndarray] = None, earliest: int = 0, owner=None) -> CostReport:
        """Program ``bits`` arrays of one register, one array per cycle."""
        self._check_registers((reg,))
        self._check_owner((reg,), owner)
        values = np.broadcast_to(np.asarray(values, dtype=np.int64), (self.rows,))
        self._write(lo, lo + bits, reg, unpack_planes(values, bits), row_mask)

        self.active_array_cycles += bits
        self._schedule((), (reg,), bits, bits, earliest)
        return (
            CostReport(cycles=bits)
            .charge(Component.DIGITAL_ARRAY, self.costs.digital_array_boolean_pj * bits)
            .charge(Component.PIPELINE_CTRL, self.costs.pipeline_ctrl_pj * bits)
        )

    def read_register(self, reg: int, bits: int, lo: int = 0, signed: bool = False) -> np.ndarray:
        return pack_planes(self.cells[lo:lo + bits, :, reg], signed=signed)

    def __repr__(self):
        return f"DigitalPipeline(index={self.index}, depth={self.depth}, direction={self.direction.value})"
