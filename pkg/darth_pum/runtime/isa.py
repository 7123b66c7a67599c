"""
The hybrid instruction set, its text assembly, and the front-end model that
issues a program to the HCTs.

One instruction per line::

    # comment
    VACORE_ALLOC hct=0 vacore=0 bits=8 value=8
    PROGRAM      hct=0 vacore=0 matrix=w
    WRITE        hct=0 pipe=63 dst=0 bits=8 value=3
    PIPELINE_RESERVE hct=0 pipe=1
    MVM          hct=0 vacore=0 source=63 base=0 pipe=1 dst=0 bits=8
    ADD          hct=0 pipe=2 dst=3 srcs=1,2 bits=16
    BARRIER
"""

from collections import deque
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Deque, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..core.costs import CostReport
from ..dce.macros import MacroName
from ..dce.microops import ShiftFill
from ..errors import ConfigError, PlanMismatchError
from ..hct.vacore import VACore
from ..logger import logger
from .chip import Chip


class Opcode(Enum):
    ADD = "ADD"
    SUB = "SUB"
    XOR = "XOR"
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    COPY = "COPY"
    MUX = "MUX"
    SHL = "SHL"
    SHR = "SHR"
    SPLAT = "SPLAT"
    CMP = "CMP"
    ELEM_LOAD = "ELEM_LOAD"
    ELEM_STORE = "ELEM_STORE"
    REVERSE = "REVERSE"
    WRITE = "WRITE"
    MVM = "MVM"
    PROGRAM = "PROGRAM"
    VACORE_ALLOC = "VACORE_ALLOC"
    PIPELINE_RESERVE = "PIPELINE_RESERVE"
    PIPELINE_RELEASE = "PIPELINE_RELEASE"
    BARRIER = "BARRIER"


DIGITAL_MACROS = {
    Opcode.ADD: MacroName.ADD,
    Opcode.SUB: MacroName.SUB,
    Opcode.XOR: MacroName.XOR,
    Opcode.AND: MacroName.AND,
    Opcode.OR: MacroName.OR,
    Opcode.NOT: MacroName.NOT,
    Opcode.COPY: MacroName.COPY,
    Opcode.MUX: MacroName.MUX,
    Opcode.SHL: MacroName.SHL,
    Opcode.SHR: MacroName.SHR,
    Opcode.SPLAT: MacroName.SPLAT,
    Opcode.CMP: MacroName.CMP_GE,
}
DIGITAL_OPCODES = frozenset(DIGITAL_MACROS) | {Opcode.ELEM_LOAD, Opcode.ELEM_STORE, Opcode.REVERSE, Opcode.WRITE}

# Assembly key -> Instruction field
_KEYS = {"pipe": "pipeline"}


@dataclass(frozen=True)
class Instruction:
    """
    One hybrid instruction.

    Field use by opcode:
      - digital macros: ``pipeline``, ``dst``, ``srcs``, ``bits``, ``amount``, ``fill``
      - ELEM_LOAD: ``dst`` of ``pipeline`` gathers from table ``source``/``base``
        addressed by ``srcs[0]``; ``value`` registers in the table (0: all)
      - ELEM_STORE: ``srcs = (addr, data)`` of ``pipeline`` scatter into ``source``/``base``
      - WRITE: immediate ``value`` into ``dst``
      - MVM: input ``source``/``base``, product into ``dst`` of reserved ``pipeline``;
        ``bits`` input width
      - VACORE_ALLOC: ``bits`` element width, ``value`` bits per cell
      - PROGRAM: ``matrix`` names an entry of the program's matrix table
    """

    opcode: Opcode
    hct: int = 0
    pipeline: int = 0
    dst: int = 0
    srcs: Tuple[int, ...] = ()
    bits: int = 8
    amount: int = 0
    fill: ShiftFill = ShiftFill.ZERO
    vacore: int = 0
    source: int = 0
    base: int = 0
    value: int = 0
    matrix: str = ""
    signed: bool = False

    @property
    def is_digital(self) -> bool:
        return self.opcode in DIGITAL_OPCODES

    def line(self) -> str:
        defaults = Instruction(self.opcode)
        parts = [self.opcode.value]
        for f in fields(self)[1:]:
            value = getattr(self, f.name)
            if value == getattr(defaults, f.name) and f.name != "hct":
                continue
            key = "pipe" if f.name == "pipeline" else f.name
            if f.name == "srcs":
                value = ",".join(str(s) for s in value)
            elif f.name == "fill":
                value = value.name.lower()
            elif f.name == "signed":
                value = int(value)
            parts.append(f"{key}={value}")
        return " ".join(parts)


def parse_line(text: str) -> Optional[Instruction]:
    text = text.split("#", 1)[0].strip()
    if not text:
        return None
    mnemonic, *operands = text.split()
    try:
        opcode = Opcode(mnemonic.upper())
    except ValueError:
        raise ConfigError(f"Unknown mnemonic {mnemonic!r}")

    kwargs = {}
    for operand in operands:
        key, sep, raw = operand.partition("=")
        if not sep:
            raise ConfigError(f"Operand {operand!r} is not key=value")
        name = _KEYS.get(key, key)
        try:
            if name == "srcs":
                kwargs[name] = tuple(int(s) for s in raw.split(",") if s)
            elif name == "fill":
                kwargs[name] = ShiftFill[raw.upper()]
            elif name == "matrix":
                kwargs[name] = raw
            elif name == "signed":
                kwargs[name] = bool(int(raw))
            elif name in {f.name for f in fields(Instruction)}:
                kwargs[name] = int(raw, 0)
            else:
                raise ConfigError(f"Unknown operand {key!r} in {text!r}")
        except (ValueError, KeyError):
            raise ConfigError(f"Bad value for {key!r} in {text!r}")
    return Instruction(opcode, **kwargs)


def assemble(text: str) -> List[Instruction]:
    program = []
    for n, line in enumerate(text.splitlines(), start=1):
        try:
            instruction = parse_line(line)
        except ConfigError as e:
            raise ConfigError(f"line {n}: {e}") from e
        if instruction is not None:
            program.append(instruction)
    return program


def disassemble(program: Sequence[Instruction]) -> str:
    return "\n".join(i.line() for i in program) + "\n"


@dataclass
class StepResult:
    cycle: int
    issued: List[Instruction] = field(default_factory=list)
    stalls: int = 0


@dataclass
class ProgramResult:
    cycles: int
    issued: int
    stalls: int
    report: CostReport


class ProgramRunner:
    """
    Front ends issue their HCTs' instructions in program order, at most one
    per front end per cycle. An instruction whose expansion needs more issue
    slots (a reduction with the injector off) keeps its front end busy for
    that many cycles. A BARRIER holds every front end until all of them reach
    it and the chip has drained.
    """

    def __init__(self, chip: Chip, program: Sequence[Instruction],
                 matrices: Optional[Mapping[str, np.ndarray]] = None):
        self.chip = chip
        self.matrices = dict(matrices or {})
        self.cycle = 0
        self.issued = 0
        self.stalls = 0
        self.report = CostReport()
        self.vacores: Dict[Tuple[int, int], VACore] = {}

        fanout = chip.config.frontend_fanout
        self.queues: Dict[int, Deque[Instruction]] = {}
        barriers = 0
        for instruction in program:
            if instruction.opcode is Opcode.BARRIER:
                barriers += 1
                for queue in self.queues.values():
                    queue.append(instruction)
                continue
            fe = instruction.hct // fanout
            if fe not in self.queues:
                self.queues[fe] = deque([Instruction(Opcode.BARRIER)] * barriers)
            self.queues[fe].append(instruction)

    @property
    def done(self) -> bool:
        return not any(self.queues.values())

    def step(self) -> StepResult:
        result = StepResult(self.cycle)
        heads = [q[0] for q in self.queues.values() if q]
        at_barrier = bool(heads) and all(h.opcode is Opcode.BARRIER for h in heads)
        if at_barrier and self.chip.finish_time > self.cycle:
            # Nothing can issue until the chip drains
            result.stalls += len(heads) * (self.chip.finish_time - self.cycle)
            self.cycle = result.cycle = self.chip.finish_time

        for fe_index, queue in self.queues.items():
            if not queue:
                continue
            fe = self.chip.frontend(fe_index * self.chip.config.frontend_fanout)
            if fe.free_at > self.cycle:
                result.stalls += 1
                continue
            head = queue[0]
            if head.opcode is Opcode.BARRIER:
                if at_barrier and self.chip.finish_time <= self.cycle:
                    queue.popleft()
                else:
                    result.stalls += 1
                continue

            queue.popleft()
            slots = self._execute(head)
            _, issued = fe.issue(slots, self.cycle)
            self.report.alongside(issued)
            result.issued.append(head)

        self.issued += len(result.issued)
        self.stalls += result.stalls
        self.cycle += 1
        return result

    def _tile(self, instruction: Instruction):
        return self.chip.hct(instruction.hct)

    def _execute(self, i: Instruction) -> int:
        """Run one instruction at the current cycle; returns the issue slots it used."""
        hct = self._tile(i)
        now = self.cycle
        op = i.opcode
        slots = 1

        if op in DIGITAL_MACROS:
            report = hct.dce.run_macro(
                i.pipeline, DIGITAL_MACROS[op], i.dst, i.srcs, i.bits, earliest=now,
                amount=i.amount, fill=i.fill, owner=hct.arbiter.owner(i.pipeline),
            )
        elif op is Opcode.ELEM_LOAD:
            report = hct.dce.element_load(
                i.pipeline, i.srcs[0], i.dst, i.source, i.base, i.bits,
                source_registers=i.value or None, earliest=now,
            )
        elif op is Opcode.ELEM_STORE:
            report = hct.dce.element_store(
                i.pipeline, i.srcs[0], i.srcs[1], i.source, i.base, i.bits,
                dest_registers=i.value or None, earliest=now,
            )
        elif op is Opcode.REVERSE:
            report = hct.dce.reverse(i.pipeline, earliest=now)
        elif op is Opcode.WRITE:
            report = hct.dce.pipeline(i.pipeline).write_register(
                i.dst, i.value, i.bits, earliest=now, owner=hct.arbiter.owner(i.pipeline),
            )
        elif op is Opcode.VACORE_ALLOC:
            self.vacores[(i.hct, i.vacore)] = hct.alloc_vacore(i.bits, i.value or i.bits)
            report = CostReport()
        elif op is Opcode.PROGRAM:
            if i.matrix not in self.matrices:
                raise PlanMismatchError(f"PROGRAM names unknown matrix {i.matrix!r}")
            report = hct.program_vacore(self._vacore(i), self.matrices[i.matrix])
        elif op is Opcode.MVM:
            report = hct.exec_mvm(
                self._vacore(i), i.source, i.base, i.pipeline, i.dst,
                input_bits=i.bits, signed_input=i.signed, earliest=now,
            )
            slots = report.counters["frontend_issues"]
        elif op is Opcode.PIPELINE_RESERVE:
            hct.reserve_pipeline(i.pipeline, owner="mvm")
            report = CostReport()
        elif op is Opcode.PIPELINE_RELEASE:
            hct.release_pipeline(i.pipeline)
            report = CostReport()
        else:
            raise PlanMismatchError(f"Cannot execute {op.value}")

        self.report.alongside(report)
        logger.debug(f"cycle {now}: issued {i.line()}")
        return slots

    def _vacore(self, i: Instruction) -> VACore:
        try:
            return self.vacores[(i.hct, i.vacore)]
        except KeyError:
            raise PlanMismatchError(f"vACore {i.vacore} of HCT {i.hct} was never allocated")


def frontend_step(runner: ProgramRunner) -> StepResult:
    return runner.step()


def run_program(chip: Chip, program, matrices: Optional[Mapping[str, np.ndarray]] = None,
                max_cycles: int = 10_000_000) -> ProgramResult:
    """Issue ``program`` (instructions or assembly text) to completion."""
    if isinstance(program, str):
        program = assemble(program)
    runner = ProgramRunner(chip, program, matrices)
    while not runner.done:
        if runner.cycle >= max_cycles:
            raise PlanMismatchError(f"Program did not finish in {max_cycles} cycles")
        frontend_step(runner)

    cycles = max(chip.finish_time, runner.cycle)
    runner.report.cycles = cycles
    logger.debug(f"run_program: {runner.issued} instructions, {runner.stalls} stall cycles, {cycles} cycles")
    return ProgramResult(cycles, runner.issued, runner.stalls, runner.report)
