from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..ace.adc import AdcKind, AdcModel
from ..ace.crossbar import Remap
from ..ace.element import AnalogComputeElement
from ..ace.noise import NoiseConfig
from ..core.costs import CostReport, CostTable
from ..core.slicing import SlicePlan
from ..dce.element import DigitalComputeElement
from ..dce.macros import MacroName
from ..dce.microops import LogicFamily
from ..errors import (
    CapacityError,
    ModeError,
    PlanMismatchError,
    ReservedRegisterError,
    ShapeError,
    WidthConflictError,
)
from ..helpers import ceil_div
from ..logger import logger
from .arbiter import Arbiter, ArrayMode
from .iiu import InstructionInjector
from .transfer import TransferEvent, TransferNetwork
from .vacore import DigitalCopy, VACore, build_vacore

# Per-pipeline registers a DCE-only MVM needs besides the matrix rows:
# address, broadcast input, bit mask, product, accumulator
DCE_MVM_WORK_REGISTERS = 5


class DomainMove(Enum):
    A_TO_D = "a2d"
    D_TO_A = "d2a"


class HybridComputeTile:
    """
    One ACE plus one DCE, joined by the arbiter, the instruction injector and
    the shift/transpose transfer network.

    All timing lives on one cycle axis per tile. ``analog_free_at`` is the
    first cycle the ACE can start a new input bit.
    """

    def __init__(self, hct_id: int = 0, costs: Optional[CostTable] = None,
                 noise: Optional[NoiseConfig] = None, adc_kind: AdcKind = AdcKind.SAR, *,
                 ace_arrays: int = 64, pipelines: int = 64, depth: int = 64, rows: int = 64,
                 cols: int = 64, family: LogicFamily = LogicFamily.OSCAR, microop_overrides=None,
                 latency_multiplier: int = 1, max_active_pipelines: Optional[int] = None,
                 iiu: bool = True, trace=None):
        self.hct_id = hct_id
        self.costs = costs or CostTable()
        self.trace = trace

        self.ace = AnalogComputeElement(ace_arrays, rows, cols, self.costs, noise, adc_kind, hct_id)
        self.dce = DigitalComputeElement(
            pipelines, depth, rows, cols, self.costs, family, microop_overrides,
            latency_multiplier, max_active_pipelines, trace, hct_id,
        )
        self.arbiter = Arbiter(trace, hct_id)
        self.network = TransferNetwork(self.costs.transfer_bytes_per_cycle, trace, hct_id)
        self.iiu = InstructionInjector(iiu, hct_id)

        self.vacores: Dict[int, VACore] = {}
        self._next_vacore = 0
        self.analog_free_at = 0
        self.frontend_issues = 0
        self.analog_enabled = True
        self.digital_enabled = True

    def _mark(self, cycle: int, locus: str, detail: str, kind: str = "mvm"):
        if self.trace is not None:
            self.trace.add(cycle, f"hct{self.hct_id}.{locus}", detail, kind=kind)

    @property
    def finish_time(self) -> int:
        return max(self.dce.finish_time, self.analog_free_at, self.network.free_at)

    # Reservations

    def reserve_pipeline(self, pipeline: int, owner="mvm") -> Arbiter:
        pipe = self.dce.pipeline(pipeline)
        self.arbiter.reserve(pipeline, owner, pipe.retire_at)
        pipe.reserved_by = owner
        return self.arbiter

    def release_pipeline(self, pipeline: int):
        pipe = self.dce.pipeline(pipeline)
        self.arbiter.release(pipeline, pipe.retire_at)
        pipe.reserved_by = None

    # vACores

    def alloc_vacore(self, element_bits: int, bits_per_cell: int, input_bits: Optional[int] = None) -> VACore:
        for other in self.vacores.values():
            if other.element_bits != element_bits:
                raise WidthConflictError(
                    f"HCT {self.hct_id} holds {other.element_bits}-bit vACores; cannot add {element_bits}-bit"
                )
        plan = SlicePlan(element_bits, bits_per_cell)
        arrays = self.ace.allocate(plan.slice_count)
        vacore = build_vacore(self._next_vacore, arrays, element_bits, bits_per_cell, input_bits or element_bits)
        self.vacores[vacore.vacore_id] = vacore
        self._next_vacore += 1
        logger.debug(f"HCT {self.hct_id}: vACore {vacore.vacore_id} on arrays {arrays} ({element_bits}b @ {bits_per_cell}b/cell)")
        return vacore

    def free_vacore(self, vacore: VACore):
        self.ace.release(vacore.member_arrays)
        self.vacores.pop(vacore.vacore_id, None)

    def program_vacore(self, vacore: VACore, matrix, remap: Remap = Remap.RAW,
                       signed: Optional[bool] = None) -> CostReport:
        """Program ``matrix`` (outputs x inputs); the crossbar holds its transpose."""
        matrix = np.asarray(matrix, dtype=np.int64)
        if matrix.ndim != 2:
            raise ShapeError(f"Expected a 2-D matrix, got shape {matrix.shape}")
        crossbar = matrix.T
        if signed is None:
            signed = bool(matrix.size and matrix.min() < 0)

        report = self.ace.program(vacore.member_arrays, crossbar, vacore.plan, remap)
        vacore.shape = crossbar.shape
        vacore.signed = signed
        vacore.remap = remap
        vacore.adc = self.ace.adc_for(vacore.plan, remap, signed, rows=crossbar.shape[0])

        start = self.arbiter.claim("ace", ArrayMode.ANALOG, self.analog_free_at, report.cycles)
        self.analog_free_at = start + report.cycles
        self._mark(start, "ace", f"vacore{vacore.vacore_id} {matrix.shape[0]}x{matrix.shape[1]}", kind="program")
        return report

    # Data movement

    def transfer(self, event: TransferEvent, payload=None, earliest: int = 0):
        return self.network.send(event, payload, earliest)

    def analog_pass(self, vacore: VACore, planes, earliest: int = 0,
                    adc: Optional[AdcModel] = None) -> Tuple[np.ndarray, CostReport, List[int]]:
        """
        Apply input bit-planes one after another to every slice of ``vacore``.

        Returns codes of shape ``(planes, slices, outputs)``, the cost, and the
        cycle at which each plane's conversions finished.
        """
        if not self.analog_enabled:
            raise ModeError(f"Analog mode is disabled on HCT {self.hct_id}")
        if vacore.shape == (0, 0):
            raise PlanMismatchError(f"vACore {vacore.vacore_id} holds no matrix")

        adc = adc or vacore.adc
        cols = vacore.shape[1]
        total = CostReport()
        t = start = max(earliest, self.analog_free_at)
        codes, ends = [], []
        for plane in np.atleast_2d(np.asarray(planes, dtype=bool)):
            out, report = self.ace.apply_bit(vacore.member_arrays, plane, adc, cols)
            t = self.arbiter.claim("ace", ArrayMode.ANALOG, t, report.cycles) + report.cycles
            codes.append(out)
            ends.append(t)
            total.alongside(report)

        self.analog_free_at = t
        total.cycles = t - start
        return np.stack(codes), total, ends

    def land(self, pipe, register: int, values, bits: int, shift: int, nbytes: int,
              earliest: int, owner, label: str) -> CostReport:
        """Ship one partial row through the network into a DCE register."""
        event = TransferEvent(nbytes, f"ace.{label}", f"pipe{pipe.index}.r{register}", shift, transpose=True)
        delivered, moved = self.transfer(event, values, earliest)
        column = np.zeros(pipe.rows, dtype=np.int64)
        column[:len(delivered)] = delivered
        written = pipe.write_register(register, column, bits, earliest=self.network.last_end, owner=owner)
        return moved.alongside(written)

    # MVM

    def exec_mvm(self, vacore: VACore, input_pipeline: int, input_register: int,
                 dest_pipeline: int, dest_register: int, *, input_bits: Optional[int] = None,
                 signed_input: bool = False, optimized: bool = True, earliest: int = 0,
                 stall: bool = True, release: bool = True, acc_bits: Optional[int] = None) -> CostReport:
        """
        Multiply the stored matrix by the vector in ``input_register``.

        The product lands sign-extended to ``acc_bits`` (default
        ``vacore.acc_bits(input_bits)``) bits
        in ``dest_register`` of the (reserved) ``dest_pipeline``. Optimized
        mode shifts partials in flight and runs the deferred reduction through
        the instruction injector; unoptimized mode serialises write, shift and
        add for every partial.
        """
        if not self.digital_enabled:
            raise ModeError(f"Digital mode is disabled on HCT {self.hct_id}; read raw partials instead")
        if not self.arbiter.is_reserved(dest_pipeline):
            raise ReservedRegisterError(f"MVM destination pipeline {dest_pipeline} is not reserved")

        input_bits = input_bits or vacore.input_bits
        rows, cols = vacore.shape
        src = self.dce.pipeline(input_pipeline)
        out = self.dce.pipeline(dest_pipeline)
        owner = self.arbiter.owner(dest_pipeline)
        acc = acc_bits or vacore.acc_bits(input_bits)

        locus = f"pipe{dest_pipeline}"
        self.arbiter.observe(locus, ArrayMode.DIGITAL, out.retire_at)
        t0 = self.arbiter.claim(locus, ArrayMode.ANALOG, max(earliest, src.done_at[input_register]), 0, stall)
        self._mark(t0, locus, f"mvm v{vacore.vacore_id} begin")

        planes = src.cells[:input_bits, :rows, input_register]
        bank = [r for r in range(out.user_registers) if r != dest_register]
        nbytes = ceil_div(cols * vacore.adc.resolution_bits, 8)
        sign_from = (input_bits - 1) * vacore.slices if signed_input else None

        total = CostReport()
        total.alongside(out.write_register(dest_register, 0, acc, earliest=t0, owner=owner))

        if optimized:
            codes, analog, ends = self.analog_pass(vacore, planes, earliest=t0)
            total.alongside(analog)
            reductions = 0
            batch_first, batch_end = 0, 0
            k = 0
            for i in range(input_bits):
                for j in range(vacore.slices):
                    register = bank[k % len(bank)]
                    total.alongside(self.land(
                        out, register, codes[i, j], acc, vacore.shift(i, j), nbytes,
                        ends[i], owner, f"v{vacore.vacore_id}.b{i}.s{j}",
                    ))
                    batch_end = max(batch_end, out.last_end)
                    k += 1
                    if k - batch_first == len(bank) or k == vacore.partials:
                        subtract = None if sign_from is None else max(0, sign_from - batch_first)
                        ops = self.iiu.run(vacore.iiu_program, dest_register, batch_first, k - batch_first, subtract)
                        for macro, accumulator, slot in ops:
                            total.alongside(out.run_macro(
                                macro, accumulator, (accumulator, bank[slot % len(bank)]), acc,
                                earliest=batch_end, owner=owner,
                            ))
                        reductions += len(ops)
                        batch_first = k
            issues = self.iiu.frontend_issues(reductions)
        else:
            t = t0
            issues = 1
            scratch = bank[0]
            for i in range(input_bits):
                codes, analog, ends = self.analog_pass(vacore, planes[i:i + 1], earliest=t)
                total.alongside(analog)
                for j in range(vacore.slices):
                    total.alongside(self.land(
                        out, scratch, codes[0, j], acc, 0, nbytes, ends[0], owner,
                        f"v{vacore.vacore_id}.b{i}.s{j}",
                    ))
                    total.alongside(out.run_macro(
                        MacroName.SHL, scratch, (scratch,), acc, amount=vacore.shift(i, j), owner=owner,
                    ))
                    k = i * vacore.slices + j
                    macro = MacroName.SUB if sign_from is not None and k >= sign_from else MacroName.ADD
                    total.alongside(out.run_macro(
                        macro, dest_register, (dest_register, scratch), acc, owner=owner,
                    ))
                    t = out.last_end
                    issues += 2

        end = max(out.done_at[dest_register], self.network.free_at)
        self.arbiter.observe(locus, ArrayMode.ANALOG, end)
        self._mark(end, locus, f"mvm v{vacore.vacore_id} end")
        if release:
            self.release_pipeline(dest_pipeline)

        self.frontend_issues += issues
        total.cycles = end - t0
        total.count("frontend_issues", issues)
        total.count("mvms")
        logger.debug(
            f"HCT {self.hct_id}: MVM v{vacore.vacore_id} {'optimized' if optimized else 'unoptimized'} "
            f"{input_bits}b x {vacore.slices} slices in {total.cycles} cycles, {issues} issues"
        )
        return total

    def raw_partials(self, vacore: VACore, vector, input_bits: Optional[int] = None,
                     earliest: int = 0) -> Tuple[np.ndarray, CostReport]:
        """
        Digitised per-bit, per-slice partials of ``matrix @ vector`` with no
        digital post-processing. ``vector`` is unsigned.
        """
        input_bits = input_bits or vacore.input_bits
        vector = np.asarray(vector, dtype=np.int64)
        planes = ((vector[None, :] >> np.arange(input_bits)[:, None]) & 1).astype(bool)
        codes, report, _ = self.analog_pass(vacore, planes, earliest)
        return codes, report

    # Domain moves

    def move_matrix_between_domains(self, vacore: VACore, direction: DomainMove,
                                    pipelines: Optional[Sequence[int]] = None, base_register: int = 0,
                                    width: Optional[int] = None, earliest: int = 0) -> CostReport:
        """
        A_TO_D reads the crossbar back and writes crossbar row ``r`` (matrix
        column ``r``) into one vector register, transposed in flight.
        D_TO_A reads the registers back and reprograms the arrays.
        """
        if vacore.shape == (0, 0):
            raise PlanMismatchError(f"vACore {vacore.vacore_id} holds no matrix")
        rows, cols = vacore.shape
        total = CostReport()
        start = max(earliest, self.analog_free_at)

        if direction is DomainMove.A_TO_D:
            width = width or vacore.acc_bits()
            per_pipeline = min(rows, self.dce.pipeline(0).user_registers - base_register - DCE_MVM_WORK_REGISTERS)
            if per_pipeline < 1:
                raise CapacityError(f"No registers left for the matrix above r{base_register}")
            groups = ceil_div(rows, per_pipeline)
            if pipelines is None:
                pipelines = [p for p in range(self.dce.pipeline_count) if not self.arbiter.is_reserved(p)][:groups]
            if len(pipelines) < groups:
                raise CapacityError(f"Matrix needs {groups} pipelines, {len(pipelines)} available")

            values, read = self.ace.read_matrix(vacore.member_arrays, vacore.plan)
            total.alongside(read)
            copy = DigitalCopy(list(pipelines[:groups]), base_register, per_pipeline, width)
            ready = start + read.cycles
            for r in range(rows):
                p, register = copy.locate(r)
                total.alongside(self.land(
                    self.dce.pipeline(p), register, values[r], width, 0, ceil_div(cols * width, 8),
                    ready, None, f"v{vacore.vacore_id}.row{r}",
                ))
            vacore.digital = copy
            self.arbiter.observe("ace", ArrayMode.DIGITAL, ready)

        else:
            copy = vacore.digital
            if copy is None:
                raise ModeError(f"vACore {vacore.vacore_id} has no digital copy to move back")
            crossbar = np.zeros((rows, cols), dtype=np.int64)
            for r in range(rows):
                p, register = copy.locate(r)
                pipe = self.dce.pipeline(p)
                row = pipe.read_register(register, copy.width, signed=True)[:cols]
                moved, report = self.transfer(
                    TransferEvent(ceil_div(cols * copy.width, 8), f"pipe{p}.r{register}", "ace", transpose=True),
                    row, max(start, pipe.done_at[register]),
                )
                crossbar[r] = moved
                total.alongside(report)
            total.alongside(self.ace.program(vacore.member_arrays, crossbar, vacore.plan, vacore.remap))
            self.analog_free_at = max(self.analog_free_at, self.network.free_at) + self.costs.reprogram_cycles
            vacore.digital = None

        end = max(self.finish_time, start)
        total.cycles = end - start
        logger.debug(f"HCT {self.hct_id}: moved vACore {vacore.vacore_id} {direction.value} in {total.cycles} cycles")
        return total

    def exec_mvm_digital(self, vacore: VACore, input_pipeline: int, input_register: int, *,
                         input_bits: Optional[int] = None, signed_input: bool = False,
                         earliest: int = 0) -> Tuple[int, int, int, CostReport]:
        """
        Long-multiplication MVM on the digital copy of ``vacore``.

        Returns ``(pipeline, register, bits, cost)`` locating the product.
        """
        copy = vacore.digital
        if copy is None:
            raise ModeError(f"vACore {vacore.vacore_id} has not been moved into the DCE")

        input_bits = input_bits or vacore.input_bits
        rows, cols = vacore.shape
        acc = copy.width
        src = self.dce.pipeline(input_pipeline)
        start = max(earliest, src.done_at[input_register])
        total = CostReport()

        groups = ceil_div(rows, copy.rows_per_pipeline)
        work = copy.base_register + copy.rows_per_pipeline
        addr, broadcast, mask, product, accumulator = range(work, work + DCE_MVM_WORK_REGISTERS)

        for g, p in enumerate(copy.pipelines[:groups]):
            pipe = self.dce.pipeline(p)
            total.alongside(pipe.write_register(accumulator, 0, acc, earliest=start))
            for r in range(g * copy.rows_per_pipeline, min(rows, (g + 1) * copy.rows_per_pipeline)):
                _, register = copy.locate(r)
                total.alongside(pipe.write_register(addr, r, 8, earliest=start))
                total.alongside(pipe.element_load(
                    addr, broadcast, src, input_register, input_bits, source_registers=1, earliest=start,
                ))
                for i in range(input_bits):
                    macro = MacroName.SUB if signed_input and i == input_bits - 1 else MacroName.ADD
                    total.alongside(pipe.run_macro(MacroName.SPLAT, mask, (broadcast,), acc, amount=i))
                    total.alongside(pipe.run_macro(MacroName.SHL, product, (register,), acc, amount=i))
                    total.alongside(pipe.run_macro(MacroName.AND, product, (mask, product), acc))
                    total.alongside(pipe.run_macro(macro, accumulator, (accumulator, product), acc))

        home = self.dce.pipeline(copy.pipelines[0])
        for p in copy.pipelines[1:groups]:
            pipe = self.dce.pipeline(p)
            values = pipe.read_register(accumulator, acc, signed=True)
            total.alongside(self.land(
                home, product, values[:cols], acc, 0, ceil_div(cols * acc, 8),
                pipe.done_at[accumulator], None, f"pipe{p}.acc",
            ))
            total.alongside(home.run_macro(MacroName.ADD, accumulator, (accumulator, product), acc))

        end = home.done_at[accumulator]
        total.cycles = end - start
        issues = sum(n for name, n in total.counters.items() if name.startswith("macro."))
        issues += 2 * rows + groups
        total.count("frontend_issues", issues)
        self.frontend_issues += issues
        return home.index, accumulator, acc, total

    def __repr__(self):
        return f"HybridComputeTile(id={self.hct_id}, vacores={len(self.vacores)}, adc={self.ace.adc_kind.value})"
