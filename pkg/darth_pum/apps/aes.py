"""
AES encryption mapped onto HCTs.

Each lane is one HCT holding up to 16 blocks. Pipeline 0 keeps the state as
32-bit row words: element ``4 * block + r`` holds AES state row ``r`` with
column ``c`` in bits ``8c..8c+7``. Pipeline 1 holds the S-box, 256 bytes over
four registers.

  - SubBytes: four byte-wide element loads through the S-box pipeline
  - ShiftRows: reversal, then a masked rotate right of row ``r`` by ``8r``
  - MixColumns: one analog pass per column over a 1-bit GF(2) matrix with a
    2-bit truncated readout. The codes land in the state pipeline, which adds
    the compensation, keeps the low bit and folds it into the row words.
    A digital-only lane runs MixColumns as an integer MVM in the DCE instead.
  - AddRoundKey: XOR with a pre-staged round-key register
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..ace.adc import AdcKind, AdcModel, compensate
from ..ace.crossbar import Remap
from ..core.costs import CostReport
from ..dce.macros import MacroName
from ..dce.microops import Direction, ShiftFill
from ..errors import CapacityError, OracleMismatchError, PlanMismatchError, WidthConflictError
from ..hct.transfer import TransferEvent
from ..hct.vacore import VACore
from ..helpers import ceil_div, chunked
from ..logger import logger
from ..runtime.chip import Chip
from .aes_reference import ROUNDS, SBOX, encrypt_block, expand_key, mix_column

STATE_PIPELINE = 0
SBOX_PIPELINE = 1

# State pipeline registers
STATE, SWAP = 0, 1
CORRECTION = 2
COMPENSATION = 3
LOW_BIT = 4
ZERO = 5
ADDRESS_BASE = 6
KEY_BASE = ADDRESS_BASE + 4
COLUMNS = KEY_BASE + max(ROUNDS.values()) + 1
ACCUMULATOR = COLUMNS + 1
MIXED = COLUMNS + 2
TEMP_BASE = COLUMNS + 3
TEMPS = 16

BLOCKS_PER_LANE = 16
COLUMN_BITS = 32
CODE_BITS = 2
COUNT_BITS = 6
MIXCOLUMNS_ONES = COLUMN_BITS
"""Active wordlines of every MixColumns pass: each bit drives one of its two rails."""

KERNELS = ("SubBytes", "ShiftRows", "MixColumns", "AddRoundKey")


class MixColumnsPath(Enum):
    ANALOG = "analog"
    DIGITAL = "digital"


def mixcolumns_bit_matrix() -> np.ndarray:
    """
    MixColumns over one 4-byte column as a 32 x 32 GF(2) matrix.

    Bit ``8r + b`` of the column is bit ``b`` of row ``r``'s byte.
    """
    matrix = np.zeros((COLUMN_BITS, COLUMN_BITS), dtype=np.int64)
    for j in range(COLUMN_BITS):
        column = [0, 0, 0, 0]
        column[j // 8] = 1 << (j % 8)
        out = mix_column(column)
        for i in range(COLUMN_BITS):
            matrix[i, j] = (out[i // 8] >> (i % 8)) & 1
    return matrix


def dual_rail_matrix(bits: np.ndarray) -> np.ndarray:
    """Widen a GF(2) matrix with zero weights for the complement rails."""
    return np.hstack([bits, np.zeros_like(bits)])


def column_planes(columns: Sequence[int]) -> np.ndarray:
    """One dual-rail input plane (bits, then their complements) per 32-bit column."""
    columns = np.asarray(columns, dtype=np.int64)
    bits = ((columns[:, None] >> np.arange(COLUMN_BITS)) & 1).astype(bool)
    return np.hstack([bits, ~bits])


def row_words(state: bytes) -> List[int]:
    """Pack a 16-byte block (column-major) into four row words."""
    return [sum(state[4 * c + r] << (8 * c) for c in range(4)) for r in range(4)]


def from_row_words(words: Sequence[int]) -> bytes:
    return bytes((int(words[i % 4]) >> (8 * (i // 4))) & 0xFF for i in range(16))


def parity_from_codes(codes, remap: Remap, lo: int = 0) -> np.ndarray:
    """
    Parity of each bitline's count of selected ones, read off truncated codes
    on the host. A code reads ``count - lo``, less ``k/2`` under SYMMETRIC.
    """
    values = np.asarray(codes, dtype=np.int64) + int(lo)
    if remap is Remap.SYMMETRIC:
        values = compensate(values, MIXCOLUMNS_ONES)
    return values & 1


def _macros(report: CostReport) -> int:
    return sum(n for name, n in report.counters.items() if name.startswith("macro."))


def land_parity(hct, pipe, register: int, codes, earliest: int = 0, label: str = "parity",
                compensated: bool = True, corrected: bool = False) -> Tuple[CostReport, int]:
    """
    Fold truncated ADC codes into ``register`` as one parity bit per position.

    ``codes[p]`` holds one code per element for bit ``p``. Each code vector
    lands in a temporary register, gets ``COMPENSATION`` added when
    ``compensated``, is masked to its low bit by ``LOW_BIT`` and shifted to
    bit ``p``; ``CORRECTION`` is XORed in last when ``corrected``.

    Returns the cost and the number of macros run.
    """
    codes = np.asarray(codes, dtype=np.int64)
    nbytes = ceil_div(codes.shape[1] * CODE_BITS, 8)
    report = pipe.write_register(register, 0, COLUMN_BITS, earliest=earliest)

    # Stage by stage over a batch of temporaries so the macros overlap
    for first in range(0, len(codes), TEMPS):
        batch = list(enumerate(range(first, min(first + TEMPS, len(codes))), TEMP_BASE))
        for temp, p in batch:
            report.alongside(hct.land(pipe, temp, codes[p], CODE_BITS, 0, nbytes, earliest, None, f"{label}.b{p}"))
        if compensated:
            for temp, _ in batch:
                report.alongside(pipe.run_macro(MacroName.ADD, temp, (temp, COMPENSATION), CODE_BITS))
        for temp, _ in batch:
            report.alongside(pipe.run_macro(MacroName.AND, temp, (temp, LOW_BIT), COLUMN_BITS))
        for temp, p in batch:
            if p:
                report.alongside(pipe.run_macro(MacroName.SHL, temp, (temp,), COLUMN_BITS, amount=p))
        for temp, _ in batch:
            report.alongside(pipe.run_macro(MacroName.OR, register, (register, temp), COLUMN_BITS))

    if corrected:
        report.alongside(pipe.run_macro(MacroName.XOR, register, (register, CORRECTION), COLUMN_BITS))
    return report, _macros(report)


@dataclass
class AesLane:
    hct_id: int
    vacore: Optional[VACore] = None


@dataclass
class AesContext:
    chip: Chip
    key: bytes
    round_keys: List[bytes]
    lanes: List[AesLane]
    adc: Optional[AdcModel]
    remap: Remap
    matrix: np.ndarray
    correction: int
    path: MixColumnsPath = MixColumnsPath.ANALOG
    init_report: CostReport = field(default_factory=CostReport)

    @property
    def rounds(self) -> int:
        return len(self.round_keys) - 1


def _mixcolumns_adc(vacore: VACore, kind: AdcKind) -> AdcModel:
    # Parity only needs the low bits; a ramp stops after four levels
    return replace(
        vacore.adc, truncate_bits=CODE_BITS,
        early_termination_levels=4 if kind is AdcKind.RAMP else None,
    )


def aes_init_arrays(chip: Chip, key: bytes, lanes: int = 1, remap: Remap = Remap.SYMMETRIC,
                    path: MixColumnsPath = MixColumnsPath.ANALOG) -> AesContext:
    """
    Reserve one HCT per lane, copy the S-box into a spare pipeline, program the
    MixColumns matrix (analog path only) and stage the round keys and constants.
    """
    key = bytes(key)
    round_keys = expand_key(key)
    matrix = dual_rail_matrix(mixcolumns_bit_matrix())
    report = CostReport()

    placed: List[AesLane] = []
    h = chip.next_placement()
    while len(placed) < lanes:
        if h >= chip.config.hct_count:
            raise CapacityError(f"AES needs {lanes} HCTs, the chip ran out after {len(placed)}")
        hct = chip.hct(h)
        vacore = None
        if path is MixColumnsPath.ANALOG:
            try:
                vacore = hct.alloc_vacore(1, 1)
            except (CapacityError, WidthConflictError):
                h += 1
                continue
            report.alongside(hct.program_vacore(vacore, matrix, remap, signed=False))

        sbox = hct.dce.pipeline(SBOX_PIPELINE)
        for j, values in enumerate(chunked(SBOX, sbox.rows)):
            report.alongside(sbox.write_register(j, values, 8))
        placed.append(AesLane(h, vacore))
        h += 1
    chip.advance_placement(h)

    adc, correction = None, 0
    if path is MixColumnsPath.ANALOG:
        adc = _mixcolumns_adc(placed[0].vacore, chip.config.adc_kind)
        correction = 0xFFFFFFFF if int(adc.lo) & 1 else 0
    ctx = AesContext(chip, key, round_keys, placed, adc, remap, matrix, correction, path, report)

    for lane in placed:
        state = chip.hct(lane.hct_id).dce.pipeline(STATE_PIPELINE)
        constants, staged = _stage_constants(ctx, state)
        report.alongside(constants)
        report.alongside(_stage_round_keys(ctx, state, [round_keys] * BLOCKS_PER_LANE))
        _, issued = chip.issue(lane.hct_id, 4 + len(round_keys) + staged)
        report.alongside(issued)

    logger.debug(f"aes_init_arrays: {len(key) * 8}-bit key, {ctx.rounds} rounds, {path.value} MixColumns, "
                 f"lanes on HCTs {[l.hct_id for l in placed]}")
    return ctx


def _stage_constants(ctx: AesContext, pipe) -> Tuple[CostReport, int]:
    report = pipe.write_register(LOW_BIT, 1, COLUMN_BITS)
    if ctx.path is MixColumnsPath.ANALOG:
        half = int(compensate(0, MIXCOLUMNS_ONES))
        report.alongside(pipe.write_register(COMPENSATION, half, COLUMN_BITS))
        report.alongside(pipe.write_register(CORRECTION, ctx.correction, COLUMN_BITS))
        return report, 3

    report.alongside(pipe.write_register(ZERO, 0, COLUMN_BITS))
    # Address register ``r`` points every element at row ``r`` of its own block
    first_row = np.arange(pipe.rows) // 4 * 4
    for r in range(4):
        report.alongside(pipe.write_register(ADDRESS_BASE + r, first_row + r, 8))
    return report, 6


def _stage_round_keys(ctx: AesContext, pipe, schedules: Sequence[List[bytes]]) -> CostReport:
    report = CostReport()
    for r in range(ctx.rounds + 1):
        words = np.zeros(pipe.rows, dtype=np.int64)
        for blk, schedule in enumerate(schedules[:pipe.rows // 4]):
            words[4 * blk:4 * blk + 4] = row_words(schedule[r])
        report.alongside(pipe.write_register(KEY_BASE + r, words, COLUMN_BITS))
    return report


class _KernelClock:
    """Charges the time between consecutive marks to the named kernel."""

    def __init__(self, hct):
        self.hct = hct
        self.last = hct.finish_time
        self.kernels: Dict[str, int] = {k: 0 for k in KERNELS}

    def mark(self, kernel: str):
        now = self.hct.finish_time
        self.kernels[kernel] += now - self.last
        self.last = now


def _mixcolumns(ctx: AesContext, hct, lane: AesLane, pipe, register: int, blocks: int) -> Tuple[CostReport, int]:
    words = pipe.read_register(register, COLUMN_BITS)[:4 * blocks]
    columns = [
        sum(((int(words[4 * blk + r]) >> (8 * c)) & 0xFF) << (8 * r) for r in range(4))
        for blk in range(blocks)
        for c in range(4)
    ]
    report = CostReport()
    _, moved = hct.transfer(
        TransferEvent(len(columns) * 2 * COLUMN_BITS // 8, f"pipe{pipe.index}.r{register}", "ace.input", transpose=True),
        None, pipe.done_at[register],
    )
    report.alongside(moved)

    codes, analog, _ = hct.analog_pass(lane.vacore, column_planes(columns), hct.network.last_end, ctx.adc)
    report.alongside(analog).count("analog_cycles", analog.cycles)

    # Pass 4 * blk + c, output 8r + b belongs to element 4 * blk + r, bit 8c + b
    positions = (
        codes[:, 0, :COLUMN_BITS]
        .reshape(blocks, 4, 4, 8)
        .transpose(1, 3, 0, 2)
        .reshape(COLUMN_BITS, 4 * blocks)
    )
    folded, macros = land_parity(
        hct, pipe, register, positions, hct.analog_free_at, f"v{lane.vacore.vacore_id}.mixcolumns",
        compensated=ctx.remap is Remap.SYMMETRIC, corrected=bool(ctx.correction),
    )
    report.alongside(folded)
    return report, 2 + hct.iiu.frontend_issues(macros)


def _mixcolumns_digital(pipe, register: int) -> Tuple[CostReport, int]:
    """
    MixColumns as an integer MVM in the state pipeline.

    Row words are gathered into column words (element ``4 * block + c`` holds
    column ``c``), every output bit is counted with one SPLAT, AND and ADD per
    matrix entry, and the low bits of the counts are scattered back.
    """
    report = CostReport()
    by_row = np.arange(pipe.rows) % 4
    for c in range(4):
        for r in range(4):
            report.alongside(pipe.element_load(
                ADDRESS_BASE + r, COLUMNS, pipe, register, 8,
                data_lo=8 * c, dest_lo=8 * r, source_registers=1, row_mask=by_row == c,
            ))

    half = TEMPS // 2
    report.alongside(pipe.write_register(MIXED, 0, COLUMN_BITS))
    for i, row in enumerate(mixcolumns_bit_matrix()):
        report.alongside(pipe.write_register(ACCUMULATOR, 0, COUNT_BITS))
        for first in range(0, COLUMN_BITS, half):
            span = list(enumerate(range(first, first + half), TEMP_BASE))
            for temp, j in span:
                report.alongside(pipe.run_macro(MacroName.SPLAT, temp, (COLUMNS,), COLUMN_BITS, amount=j))
            for temp, j in span:
                weight = LOW_BIT if row[j] else ZERO
                report.alongside(pipe.run_macro(MacroName.AND, temp + half, (temp, weight), COUNT_BITS))
            for temp, _ in span:
                report.alongside(pipe.run_macro(MacroName.ADD, ACCUMULATOR, (ACCUMULATOR, temp + half), COUNT_BITS))
        report.alongside(pipe.run_macro(MacroName.AND, ACCUMULATOR, (ACCUMULATOR, LOW_BIT), COLUMN_BITS))
        if i:
            report.alongside(pipe.run_macro(MacroName.SHL, ACCUMULATOR, (ACCUMULATOR,), COLUMN_BITS, amount=i))
        report.alongside(pipe.run_macro(MacroName.OR, MIXED, (MIXED, ACCUMULATOR), COLUMN_BITS))

    for r in range(4):
        for c in range(4):
            report.alongside(pipe.element_load(
                ADDRESS_BASE + c, register, pipe, MIXED, 8,
                data_lo=8 * r, dest_lo=8 * c, source_registers=1, row_mask=by_row == r,
            ))

    loads = 2 * 16
    writes = 1 + COLUMN_BITS
    return report, _macros(report) + loads + writes


def _encrypt_lane(ctx: AesContext, lane: AesLane, blocks: Sequence[bytes],
                  keys: Optional[Sequence[bytes]]) -> Tuple[List[bytes], CostReport, Dict[str, int], int]:
    hct = ctx.chip.hct(lane.hct_id)
    dce = hct.dce
    pipe = dce.pipeline(STATE_PIPELINE)
    report = CostReport()
    issues = 0

    state = np.zeros(pipe.rows, dtype=np.int64)
    for blk, block in enumerate(blocks):
        state[4 * blk:4 * blk + 4] = row_words(block)
    report.alongside(pipe.write_register(STATE, state, COLUMN_BITS))
    if keys is not None:
        report.alongside(_stage_round_keys(ctx, pipe, [expand_key(k) for k in keys]))

    rows = np.arange(pipe.rows) % 4
    clock = _KernelClock(hct)
    cur, other = STATE, SWAP

    report.alongside(pipe.run_macro(MacroName.XOR, cur, (cur, KEY_BASE), COLUMN_BITS))
    issues += 1
    clock.mark("AddRoundKey")

    for r in range(1, ctx.rounds + 1):
        for c in range(4):
            report.alongside(dce.element_load(
                STATE_PIPELINE, cur, other, SBOX_PIPELINE, 0, 8,
                addr_lo=8 * c, dest_lo=8 * c, source_registers=4,
            ))
        cur, other = other, cur
        issues += 4
        clock.mark("SubBytes")

        if pipe.direction is Direction.FORWARD:
            report.alongside(dce.reverse(STATE_PIPELINE))
            issues += 1
        for row in (1, 2, 3):
            report.alongside(dce.run_macro(
                STATE_PIPELINE, MacroName.SHR, cur, (cur,), COLUMN_BITS,
                amount=8 * row, fill=ShiftFill.WRAP, row_mask=rows == row,
            ))
        issues += 3
        clock.mark("ShiftRows")

        if r != ctx.rounds:
            if ctx.path is MixColumnsPath.ANALOG:
                mixed, used = _mixcolumns(ctx, hct, lane, pipe, cur, len(blocks))
            else:
                mixed, used = _mixcolumns_digital(pipe, cur)
            report.alongside(mixed)
            issues += used
            clock.mark("MixColumns")

        report.alongside(dce.run_macro(STATE_PIPELINE, MacroName.XOR, cur, (cur, KEY_BASE + r), COLUMN_BITS))
        issues += 1
        clock.mark("AddRoundKey")

    words = pipe.read_register(cur, COLUMN_BITS)
    out = [from_row_words(words[4 * blk:4 * blk + 4]) for blk in range(len(blocks))]
    if keys is not None:
        # Leave the context's own schedule staged for the next call
        report.alongside(_stage_round_keys(ctx, pipe, [ctx.round_keys] * BLOCKS_PER_LANE))
    return out, report, clock.kernels, issues


def aes_encrypt(ctx: AesContext, blocks: Sequence[bytes], keys: Optional[Sequence[bytes]] = None,
                check_oracle: bool = False) -> Tuple[List[bytes], CostReport]:
    """
    Encrypt ``blocks`` with the context key, or block ``i`` with ``keys[i]``
    when given (same key length as the context). Lanes run side by side;
    more blocks than the lanes hold run in successive waves.
    """
    blocks = [bytes(b) for b in blocks]
    if any(len(b) != 16 for b in blocks):
        raise PlanMismatchError("AES blocks must be 16 bytes")
    if keys is not None:
        keys = [bytes(k) for k in keys]
        if len(keys) != len(blocks) or any(len(k) != len(ctx.key) for k in keys):
            raise PlanMismatchError(f"Per-block keys must be {len(ctx.key)} bytes, one per block")

    chip = ctx.chip
    total = CostReport()
    kernels = {k: 0 for k in KERNELS}
    out: List[bytes] = []
    begin = chip.finish_time
    wave = BLOCKS_PER_LANE * len(ctx.lanes)

    for first in range(0, len(blocks), wave):
        wave_blocks = blocks[first:first + wave]
        wave_keys = keys[first:first + wave] if keys is not None else None
        wave_kernels = {k: 0 for k in KERNELS}
        for i, lane_blocks in enumerate(chunked(wave_blocks, BLOCKS_PER_LANE)):
            lane = ctx.lanes[i]
            lane_keys = wave_keys[i * BLOCKS_PER_LANE:(i + 1) * BLOCKS_PER_LANE] if wave_keys else None
            encrypted, report, lane_kernels, issues = _encrypt_lane(ctx, lane, lane_blocks, lane_keys)
            _, issued = chip.issue(lane.hct_id, issues, begin)
            total.alongside(report).alongside(issued)
            out.extend(encrypted)
            for k, v in lane_kernels.items():
                wave_kernels[k] = max(wave_kernels[k], v)
        for k, v in wave_kernels.items():
            kernels[k] += v

    total.cycles = chip.finish_time - begin
    for k, v in kernels.items():
        total.tag(k, v)
    total.count("blocks", len(blocks))

    if check_oracle:
        expected = [encrypt_block(keys[i] if keys else ctx.key, b) for i, b in enumerate(blocks)]
        bad = [i for i, (a, b) in enumerate(zip(out, expected)) if a != b]
        if bad:
            raise OracleMismatchError(f"{len(bad)} of {len(blocks)} AES blocks differ from the reference, first at {bad[0]}")

    logger.debug(f"aes_encrypt: {len(blocks)} blocks in {total.cycles} cycles")
    return out, total


def count_mixcolumns_errors(chip: Chip, remap: Remap, columns: int, seed: int = 0,
                            batch: int = 4096) -> int:
    """
    Columns with at least one wrong bit among ``columns`` random MixColumns passes on one HCT against the
    GF(2^8) reference, with the chip's noise settings.
    """
    ctx = aes_init_arrays(chip, bytes(16), lanes=1, remap=remap)
    lane = ctx.lanes[0]
    ace = chip.hct(lane.hct_id).ace
    reference = mixcolumns_bit_matrix()
    rng = np.random.default_rng(seed)
    errors = 0
    for start in range(0, columns, batch):
        n = min(batch, columns - start)
        values = rng.integers(0, 1 << COLUMN_BITS, n, dtype=np.int64)
        planes = column_planes(values)
        codes, _ = ace.apply_bit(lane.vacore.member_arrays, planes, ctx.adc, COLUMN_BITS)
        bits = parity_from_codes(codes[0], remap, int(ctx.adc.lo))
        expected = (planes[:, :COLUMN_BITS].astype(np.int64) @ reference.T) & 1
        errors += int(np.count_nonzero((bits != expected).any(axis=1)))
    logger.debug(f"MixColumns {remap.value}: {errors} bit errors over {columns} columns")
    return errors
