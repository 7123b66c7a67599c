from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional

from ..ace.adc import AdcKind
from ..ace.noise import NoiseConfig
from ..core.costs import Component, CostReport, CostTable
from ..dce.microops import LogicFamily
from ..errors import CapacityError, ConfigError
from ..hct.tile import HybridComputeTile
from ..helpers import ceil_div
from ..logger import logger

# Iso-area chip sizes
DEFAULT_HCT_COUNT = {AdcKind.SAR: 1860, AdcKind.RAMP: 1660}


@dataclass
class ChipConfig:
    adc_kind: AdcKind = AdcKind.SAR
    hct_count: Optional[int] = None
    frontend_fanout: int = 8

    ace_arrays: int = 64
    pipelines: int = 64
    pipeline_depth: int = 64
    array_rows: int = 64
    array_cols: int = 64
    cell_bits: int = 8
    """Levels a single analog device stores, as bits."""

    logic_family: LogicFamily = LogicFamily.OSCAR
    microop_overrides: Dict[str, int] = field(default_factory=dict)
    latency_multiplier: int = 1
    max_active_pipelines: Optional[int] = None
    iiu: bool = True

    analog_enabled: bool = True
    digital_enabled: bool = True

    costs: CostTable = field(default_factory=CostTable)
    noise: NoiseConfig = field(default_factory=NoiseConfig.off)

    def __post_init__(self):
        if self.hct_count is None:
            self.hct_count = DEFAULT_HCT_COUNT[self.adc_kind]
        for name in ("hct_count", "frontend_fanout", "ace_arrays", "pipelines", "pipeline_depth",
                     "array_rows", "array_cols", "cell_bits", "latency_multiplier"):
            if getattr(self, name) < 1:
                raise ConfigError(f"ChipConfig.{name} must be positive, got {getattr(self, name)}")
        if not (self.analog_enabled or self.digital_enabled):
            raise ConfigError("At least one of analog or digital mode must be enabled")

    @property
    def frontend_count(self) -> int:
        return ceil_div(self.hct_count, self.frontend_fanout)


class FrontEnd:
    """
    Fetch/decode/issue logic shared by ``fanout`` HCTs: at most one
    instruction leaves per cycle.
    """

    __slots__ = ("index", "free_at", "issued", "stall_cycles", "costs")

    def __init__(self, index: int, costs: CostTable):
        self.index = index
        self.costs = costs
        self.free_at = 0
        self.issued = 0
        self.stall_cycles = 0

    def issue(self, count: int, earliest: int = 0):
        """
        Issue ``count`` back-to-back instructions no earlier than ``earliest``.
        Returns ``(cycle of the last issue, CostReport)``.
        """
        if count <= 0:
            return earliest, CostReport()
        start = max(earliest, self.free_at)
        self.stall_cycles += start - earliest
        self.free_at = start + count
        self.issued += count
        report = (
            CostReport()
            .charge(Component.FRONTEND, self.costs.frontend_pj * count)
            .count("frontend_issues", count)
        )
        return start + count - 1, report


class Chip:
    """
    A whole chip: ``hct_count`` tiles behind ``frontend_count`` front ends.

    Tiles are built on first use, so a large chip only pays for what a
    workload touches.
    """

    def __init__(self, config: Optional[ChipConfig] = None, trace=None):
        self.config = config or ChipConfig()
        self.trace = trace
        self._hcts: Dict[int, HybridComputeTile] = {}
        self._frontends: Dict[int, FrontEnd] = {}
        self.analog_enabled = self.config.analog_enabled
        self.digital_enabled = self.config.digital_enabled
        self.handles = []
        self._cursor = 0
        # Next pipeline free for digital matrix copies, per HCT
        self.digital_cursor: Dict[int, int] = {}

    @property
    def costs(self) -> CostTable:
        return self.config.costs

    def hct(self, index: int) -> HybridComputeTile:
        if not 0 <= index < self.config.hct_count:
            raise CapacityError(f"HCT {index} outside a chip of {self.config.hct_count}")
        if index not in self._hcts:
            c = self.config
            tile = HybridComputeTile(
                index, c.costs, c.noise, c.adc_kind,
                ace_arrays=c.ace_arrays, pipelines=c.pipelines, depth=c.pipeline_depth,
                rows=c.array_rows, cols=c.array_cols, family=c.logic_family,
                microop_overrides=c.microop_overrides, latency_multiplier=c.latency_multiplier,
                max_active_pipelines=c.max_active_pipelines, iiu=c.iiu, trace=self.trace,
            )
            tile.analog_enabled = self.analog_enabled
            tile.digital_enabled = self.digital_enabled
            self._hcts[index] = tile
            logger.debug(f"Chip: materialised HCT {index}")
        return self._hcts[index]

    def __iter__(self) -> Iterator[HybridComputeTile]:
        return iter(self._hcts[i] for i in sorted(self._hcts))

    def frontend(self, hct_id: int) -> FrontEnd:
        index = hct_id // self.config.frontend_fanout
        if index not in self._frontends:
            self._frontends[index] = FrontEnd(index, self.costs)
        return self._frontends[index]

    def issue(self, hct_id: int, count: int = 1, earliest: int = 0):
        return self.frontend(hct_id).issue(count, earliest)

    def next_placement(self) -> int:
        """HCT index where greedy placement resumes."""
        return self._cursor

    def advance_placement(self, index: int):
        self._cursor = max(self._cursor, index)

    def reserve_hct(self) -> int:
        """Claim a whole HCT past every placed matrix for digital-only work."""
        index = self._cursor
        if index in self._hcts and self._hcts[index].vacores:
            index += 1
        self.hct(index)
        self._cursor = index + 1
        return index

    @property
    def finish_time(self) -> int:
        return max((t.finish_time for t in self._hcts.values()), default=0)

    @property
    def frontend_issues(self) -> int:
        return sum(f.issued for f in self._frontends.values())

    @property
    def frontend_stalls(self) -> int:
        return sum(f.stall_cycles for f in self._frontends.values())

    def __repr__(self):
        return (
            f"Chip(hcts={self.config.hct_count}, adc={self.config.adc_kind.value}, "
            f"materialised={len(self._hcts)})"
        )
