"""
Library calls an application makes against a whole chip.

Matrices are tiled row-major into ``array_cols x array_rows`` blocks
(outputs x inputs) and placed greedily on consecutive HCTs. Each call runs
to completion and returns its result with a ``CostReport``.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from ..ace.crossbar import Remap
from ..core.costs import CostReport
from ..dce.macros import MacroName
from ..errors import (
    CapacityError,
    MatrixIndexError,
    ModeError,
    PlanMismatchError,
    ShapeError,
    WidthConflictError,
)
from ..hct.tile import DCE_MVM_WORK_REGISTERS, DomainMove, HybridComputeTile
from ..hct.vacore import VACore
from ..helpers import ceil_div
from ..logger import logger
from .chip import Chip


class Precision(IntEnum):
    LOW = 0
    MED = 1
    HIGH = 2

    def bits_per_cell(self, cell_bits: int = 8) -> int:
        if self is Precision.LOW:
            return 1
        if self is Precision.MED:
            return max(1, cell_bits // 2)
        return cell_bits


@dataclass
class MatrixTile:
    row_block: int
    col_block: int
    hct_id: int
    vacore: VACore
    pipeline: int
    """Destination pipeline of this tile's MVMs."""
    rows: int
    cols: int


@dataclass
class MatrixHandle:
    matrix: np.ndarray
    element_bits: int
    precision: Precision
    bits_per_cell: int
    input_bits: int
    signed: bool
    remap: Remap
    tiles: List[MatrixTile] = field(default_factory=list)
    program_report: CostReport = field(default_factory=CostReport)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def hcts(self) -> List[int]:
        return sorted({t.hct_id for t in self.tiles})

    @property
    def col_blocks(self) -> int:
        return max(t.col_block for t in self.tiles) + 1

    def block(self, row_block: int) -> List[MatrixTile]:
        return [t for t in self.tiles if t.row_block == row_block]

    @property
    def acc_bits(self) -> int:
        """Width that holds a full product, cross-tile sums included."""
        widest = max(t.vacore.acc_bits(self.input_bits) for t in self.tiles)
        return min(64, widest + self.col_blocks.bit_length())


def _staging(tile: HybridComputeTile) -> int:
    return tile.dce.pipeline_count - 1


def set_matrix(chip: Chip, matrix, element_bits: int = 8, precision: Precision = Precision.HIGH, *,
               input_bits: Optional[int] = None, remap: Remap = Remap.RAW,
               signed: Optional[bool] = None) -> MatrixHandle:
    """Tile, place and program ``matrix`` (outputs x inputs)."""
    matrix = np.array(matrix, dtype=np.int64)
    if matrix.ndim != 2 or 0 in matrix.shape:
        raise ShapeError(f"Expected a non-empty 2-D matrix, got shape {matrix.shape}")
    if signed is None:
        signed = bool(matrix.min() < 0)
    if int(np.abs(matrix).max()) >> element_bits:
        raise PlanMismatchError(f"Matrix values do not fit {element_bits} bits")

    c = chip.config
    bits_per_cell = min(precision.bits_per_cell(c.cell_bits), element_bits)
    handle = MatrixHandle(matrix, element_bits, precision, bits_per_cell,
                          input_bits or element_bits, signed, remap)

    tile_out, tile_in = c.array_cols, c.array_rows
    row_blocks, col_blocks = ceil_div(matrix.shape[0], tile_out), ceil_div(matrix.shape[1], tile_in)
    if col_blocks >= c.pipelines:
        raise CapacityError(f"{col_blocks} input blocks exceed the {c.pipelines - 1} MVM pipelines of an HCT")

    h = chip.next_placement()
    for ti in range(row_blocks):
        for tj in range(col_blocks):
            block = matrix[ti * tile_out:(ti + 1) * tile_out, tj * tile_in:(tj + 1) * tile_in]
            while True:
                if h >= c.hct_count:
                    raise CapacityError(f"Chip of {c.hct_count} HCTs cannot hold a {matrix.shape} matrix")
                hct = chip.hct(h)
                try:
                    vacore = hct.alloc_vacore(element_bits, bits_per_cell, handle.input_bits)
                    break
                except (CapacityError, WidthConflictError):
                    h += 1

            pipeline = (len(hct.vacores) - 1) % _staging(hct)
            handle.program_report.alongside(hct.program_vacore(vacore, block, remap, signed))
            _, issued = chip.issue(h, 2)
            handle.program_report.alongside(issued)
            handle.tiles.append(MatrixTile(ti, tj, h, vacore, pipeline, block.shape[0], block.shape[1]))

            if not hct.analog_enabled:
                handle.program_report.alongside(_copy_to_digital(chip, handle, handle.tiles[-1]))

    chip.advance_placement(h)
    chip.handles.append(handle)
    logger.debug(
        f"set_matrix: {matrix.shape} {element_bits}b @ {bits_per_cell}b/cell -> "
        f"{len(handle.tiles)} tiles on HCTs {handle.hcts}"
    )
    return handle


def _encode_input(handle: MatrixHandle, vector, signed_input: bool) -> np.ndarray:
    x = np.asarray(vector, dtype=np.int64)
    if x.ndim != 1 or len(x) != handle.shape[1]:
        raise ShapeError(f"Input of shape {x.shape} does not match a {handle.shape} matrix")
    bits = handle.input_bits
    lo, hi = (-(1 << (bits - 1)), 1 << (bits - 1)) if signed_input else (0, 1 << bits)
    if x.size and (x.min() < lo or x.max() >= hi):
        raise PlanMismatchError(f"Input values do not fit {bits} {'signed' if signed_input else 'unsigned'} bits")
    return x & ((1 << bits) - 1)


def exec_mvm_api(chip: Chip, handle: MatrixHandle, vector, *, signed_input: bool = False,
                 optimized: bool = True) -> Tuple[Union[np.ndarray, Dict[Tuple[int, int], np.ndarray]], CostReport]:
    """
    ``handle.matrix @ vector`` on the chip.

    Tiles run on their own HCTs; tiles sharing an output block are combined
    by copying each product into the first tile's pipeline and adding. With
    digital mode disabled the result is instead the raw digitised partials
    of every tile, keyed by ``(row_block, col_block)``, with shape
    ``(input_bits, slices, tile_outputs)``.
    """
    x = _encode_input(handle, vector, signed_input)
    tiles = [chip.hct(h) for h in handle.hcts]
    if any(not (t.analog_enabled or t.digital_enabled) for t in tiles):
        raise ModeError("Both analog and digital modes are disabled")

    begin = chip.finish_time
    total = CostReport()
    if any(not t.digital_enabled for t in tiles):
        partials = {}
        for tile in handle.tiles:
            chunk = x[tile.col_block * chip.config.array_rows:][:tile.cols]
            codes, report = chip.hct(tile.hct_id).raw_partials(tile.vacore, chunk, handle.input_bits, begin)
            total.alongside(report)
            partials[(tile.row_block, tile.col_block)] = codes
        total.cycles = chip.finish_time - begin
        return partials, total

    width = handle.acc_bits
    out = np.zeros(handle.shape[0], dtype=np.int64)
    row_blocks = max(t.row_block for t in handle.tiles) + 1
    for ti in range(row_blocks):
        home = None
        for tile in handle.block(ti):
            hct = chip.hct(tile.hct_id)
            pipe, register, report = _tile_mvm(chip, hct, handle, tile, x, width, signed_input, optimized, begin)
            total.alongside(report)
            if home is None:
                home = (hct, pipe, register)
                continue
            total.alongside(_combine(home, hct, pipe, register, width, tile))

        hct, pipe, register = home
        out[ti * chip.config.array_cols:][:home_rows(handle, ti)] = (
            pipe.read_register(register, width, signed=True)[:home_rows(handle, ti)]
        )

    total.cycles = chip.finish_time - begin
    total.tag("mvm")
    return out, total


def home_rows(handle: MatrixHandle, row_block: int) -> int:
    return handle.block(row_block)[0].rows


def _tile_mvm(chip: Chip, hct: HybridComputeTile, handle: MatrixHandle, tile: MatrixTile, x: np.ndarray,
              width: int, signed_input: bool, optimized: bool, begin: int):
    stage = hct.dce.pipeline(_staging(hct))
    register = tile.col_block % stage.user_registers
    chunk = x[tile.col_block * chip.config.array_rows:][:tile.cols]
    column = np.zeros(stage.rows, dtype=np.int64)
    column[:len(chunk)] = chunk

    at, report = chip.issue(tile.hct_id, 1, begin)
    report.alongside(stage.write_register(register, column, handle.input_bits, earliest=at))

    if hct.analog_enabled:
        hct.reserve_pipeline(tile.pipeline, owner="mvm")
        mvm = hct.exec_mvm(
            tile.vacore, stage.index, register, tile.pipeline, 0,
            input_bits=handle.input_bits, signed_input=signed_input, optimized=optimized,
            earliest=at, acc_bits=width,
        )
        _, issued = chip.issue(tile.hct_id, mvm.counters["frontend_issues"] + 1, at)
        return hct.dce.pipeline(tile.pipeline), 0, report.alongside(mvm).alongside(issued)

    index, accumulator, _, mvm = hct.exec_mvm_digital(
        tile.vacore, stage.index, register, input_bits=handle.input_bits,
        signed_input=signed_input, earliest=at,
    )
    _, issued = chip.issue(tile.hct_id, mvm.counters["frontend_issues"], at)
    return hct.dce.pipeline(index), accumulator, report.alongside(mvm).alongside(issued)


def _combine(home, hct: HybridComputeTile, pipe, register: int, width: int, tile: MatrixTile) -> CostReport:
    """COPY one tile product next to the home accumulator, then ADD it in."""
    home_hct, home_pipe, home_register = home
    # The partial-bank register after r0, or the product register of a DCE-only MVM
    temp = 1 if home_register == 0 else home_register - 1
    values = pipe.read_register(register, width, signed=True)[:tile.rows]
    report = home_hct.land(
        home_pipe, temp, values, width, 0, ceil_div(tile.rows * width, 8),
        pipe.done_at[register], home_pipe.reserved_by, f"hct{hct.hct_id}.pipe{pipe.index}.r{register}",
    )
    return report.alongside(home_pipe.run_macro(MacroName.ADD, home_register, (home_register, temp), width))


def _reprogram(chip: Chip, handle: MatrixHandle, tiles: Iterable[MatrixTile]) -> CostReport:
    c = chip.config
    total = CostReport()
    for tile in tiles:
        hct = chip.hct(tile.hct_id)
        block = handle.matrix[tile.row_block * c.array_cols:][:tile.rows, tile.col_block * c.array_rows:][:, :tile.cols]
        total.then(hct.program_vacore(tile.vacore, block, handle.remap, handle.signed))
        if tile.vacore.digital is not None:
            copy = tile.vacore.digital
            total.then(hct.move_matrix_between_domains(
                tile.vacore, DomainMove.A_TO_D, copy.pipelines, copy.base_register, copy.width,
            ))
        _, issued = chip.issue(tile.hct_id, 1)
        total.alongside(issued)
    return total


def update_row(chip: Chip, handle: MatrixHandle, index: int, values) -> CostReport:
    """Overwrite matrix row ``index`` (one output) and reprogram the tiles holding it."""
    values = np.asarray(values, dtype=np.int64)
    if values.size == 0:
        return CostReport()
    if not 0 <= index < handle.shape[0]:
        raise MatrixIndexError(f"Row {index} outside a {handle.shape} matrix")
    if values.shape != (handle.shape[1],):
        raise ShapeError(f"Row update of shape {values.shape} for a {handle.shape} matrix")

    handle.matrix[index] = values
    logger.debug(f"update_row {index} on HCTs {handle.hcts}")
    return _reprogram(chip, handle, handle.block(index // chip.config.array_cols))


def update_col(chip: Chip, handle: MatrixHandle, index: int, values) -> CostReport:
    """Overwrite matrix column ``index`` (one input) and reprogram the tiles holding it."""
    values = np.asarray(values, dtype=np.int64)
    if values.size == 0:
        return CostReport()
    if not 0 <= index < handle.shape[1]:
        raise MatrixIndexError(f"Column {index} outside a {handle.shape} matrix")
    if values.shape != (handle.shape[0],):
        raise ShapeError(f"Column update of shape {values.shape} for a {handle.shape} matrix")

    handle.matrix[:, index] = values
    logger.debug(f"update_col {index} on HCTs {handle.hcts}")
    block = index // chip.config.array_rows
    return _reprogram(chip, handle, [t for t in handle.tiles if t.col_block == block])


def _copy_to_digital(chip: Chip, handle: MatrixHandle, tile: MatrixTile) -> CostReport:
    hct = chip.hct(tile.hct_id)
    per_pipeline = hct.dce.pipeline(0).user_registers - DCE_MVM_WORK_REGISTERS
    needed = ceil_div(tile.cols, per_pipeline)
    first = chip.digital_cursor.get(tile.hct_id, 0)
    if first + needed > _staging(hct):
        raise CapacityError(f"HCT {tile.hct_id} has no pipelines left for a digital matrix copy")
    chip.digital_cursor[tile.hct_id] = first + needed
    return hct.move_matrix_between_domains(
        tile.vacore, DomainMove.A_TO_D, list(range(first, first + needed)), 0, handle.acc_bits,
    )


def _targets(chip: Chip, hcts: Optional[Iterable[int]]) -> List[int]:
    return sorted(set(hcts)) if hcts is not None else sorted({h for handle in chip.handles for h in handle.hcts})


def disable_analog_mode(chip: Chip, hcts: Optional[Iterable[int]] = None):
    """
    Copy every matrix on the target HCTs into the DCE and route their MVMs
    through digital long multiplication. Returns ``(config, CostReport)``.
    """
    targets = _targets(chip, hcts)
    total = CostReport()
    for h in targets:
        hct = chip.hct(h)
        if not hct.digital_enabled:
            raise ModeError(f"HCT {h}: disabling analog mode with digital mode off")
        if not hct.analog_enabled:
            raise ModeError(f"HCT {h}: analog mode already disabled")

    for handle in chip.handles:
        for tile in handle.tiles:
            if tile.hct_id in targets and tile.vacore.digital is None:
                total.alongside(_copy_to_digital(chip, handle, tile))

    for h in targets:
        chip.hct(h).analog_enabled = False
    if hcts is None:
        chip.analog_enabled = chip.config.analog_enabled = False
    logger.debug(f"Analog mode disabled on HCTs {targets}")
    return chip.config, total


def enable_analog_mode(chip: Chip, hcts: Optional[Iterable[int]] = None):
    """Move digital copies back into the crossbars; pays the reprogram cost."""
    targets = _targets(chip, hcts)
    total = CostReport()
    for handle in chip.handles:
        for tile in handle.tiles:
            if tile.hct_id in targets and tile.vacore.digital is not None:
                total.alongside(chip.hct(tile.hct_id).move_matrix_between_domains(tile.vacore, DomainMove.D_TO_A))
    for h in targets:
        chip.hct(h).analog_enabled = True
        chip.digital_cursor.pop(h, None)
    if hcts is None:
        chip.analog_enabled = chip.config.analog_enabled = True
    return chip.config, total


def disable_digital_mode(chip: Chip, hcts: Optional[Iterable[int]] = None):
    """Drop DCE post-processing: MVMs return raw digitised partials."""
    targets = _targets(chip, hcts)
    for h in targets:
        hct = chip.hct(h)
        if not hct.analog_enabled:
            raise ModeError(f"HCT {h}: disabling digital mode with analog mode off")
        if not hct.digital_enabled:
            raise ModeError(f"HCT {h}: digital mode already disabled")
    for h in targets:
        chip.hct(h).digital_enabled = False
    if hcts is None:
        chip.digital_enabled = chip.config.digital_enabled = False
    logger.debug(f"Digital mode disabled on HCTs {targets}")
    return chip.config


def enable_digital_mode(chip: Chip, hcts: Optional[Iterable[int]] = None):
    for h in _targets(chip, hcts):
        chip.hct(h).digital_enabled = True
    if hcts is None:
        chip.digital_enabled = chip.config.digital_enabled = True
    return chip.config
