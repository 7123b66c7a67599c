from typing import Dict, Optional

from sortedcontainers import SortedList

from ..core.costs import CostReport, CostTable
from ..errors import AddressRangeError
from ..logger import logger
from .macros import macro_library
from .microops import LogicFamily
from .pipeline import DigitalPipeline


class DigitalComputeElement:
    """
    The digital half of an HCT: ``pipelines`` independent digital pipelines.

    Pipelines are materialised on first use. ``max_active_pipelines`` caps how
    many distinct pipelines may have work in flight at once; a pipeline that
    is already busy keeps issuing. ``None`` means no cap.
    """

    def __init__(self, pipelines: int = 64, depth: int = 64, rows: int = 64, cols: int = 64,
                 costs: Optional[CostTable] = None, family: LogicFamily = LogicFamily.OSCAR,
                 microop_overrides=None, latency_multiplier: int = 1,
                 max_active_pipelines: Optional[int] = None, trace=None, hct_id: int = 0):
        self.pipeline_count = pipelines
        self.depth = depth
        self.rows = rows
        self.cols = cols
        self.costs = costs or CostTable()
        self.family = family
        self.library = macro_library(family, microop_overrides)
        self.latency_multiplier = latency_multiplier
        self.max_active_pipelines = max_active_pipelines
        self.trace = trace
        self.hct_id = hct_id

        self._pipelines: Dict[int, DigitalPipeline] = {}
        self._busy_until: Dict[int, int] = {}

    def __getitem__(self, index: int) -> DigitalPipeline:
        return self.pipeline(index)

    def pipeline(self, index: int) -> DigitalPipeline:
        if not 0 <= index < self.pipeline_count:
            raise AddressRangeError(f"Pipeline {index} outside 0..{self.pipeline_count - 1} of HCT {self.hct_id}")
        if index not in self._pipelines:
            logger.debug(f"HCT {self.hct_id}: materialising pipeline {index}")
            self._pipelines[index] = DigitalPipeline(
                index, self.depth, self.rows, self.cols, self.costs, self.family,
                self.library, self.latency_multiplier, self.trace, self.hct_id,
            )
        return self._pipelines[index]

    @property
    def materialised(self):
        return self._pipelines.values()

    def _admit(self, index: int, start: int) -> int:
        cap = self.max_active_pipelines
        if cap is None:
            return start
        while self._busy_until.get(index, 0) <= start:
            others = SortedList(end for i, end in self._busy_until.items() if i != index and end > start)
            if len(others) < cap:
                break
            start = others[len(others) - cap]
        return start

    def active_pipelines(self, cycle: int) -> int:
        """Pipelines with a macro still in flight at ``cycle``."""
        return sum(1 for end in self._busy_until.values() if end > cycle)

    def run_macro(self, index: int, macro, dst: int, srcs, bits: int, earliest: int = 0, **kwargs) -> CostReport:
        pipe = self.pipeline(index)
        earliest = self._admit(index, max(earliest, pipe.issue_free))
        report = pipe.run_macro(macro, dst, srcs, bits, earliest=earliest, **kwargs)
        self._busy_until[index] = max(self._busy_until.get(index, 0), pipe.last_end)
        return report

    def element_load(self, index: int, addr_reg: int, dest_reg: int, source_index: int,
                     source_base: int, data_bits: int, **kwargs) -> CostReport:
        return self.pipeline(index).element_load(
            addr_reg, dest_reg, self.pipeline(source_index), source_base, data_bits, **kwargs
        )

    def element_store(self, index: int, addr_reg: int, src_reg: int, dest_index: int,
                      dest_base: int, data_bits: int, **kwargs) -> CostReport:
        return self.pipeline(index).element_store(
            addr_reg, src_reg, self.pipeline(dest_index), dest_base, data_bits, **kwargs
        )

    def reverse(self, index: int, earliest: int = 0) -> CostReport:
        return self.pipeline(index).reverse(earliest)

    @property
    def finish_time(self) -> int:
        return max((p.retire_at for p in self._pipelines.values()), default=0)

    @property
    def active_array_cycles(self) -> int:
        return sum(p.active_array_cycles for p in self._pipelines.values())

    @property
    def busy_cycles(self) -> int:
        return sum(p.busy_cycles for p in self._pipelines.values())

    def energy_pj(self) -> float:
        return (
            self.costs.digital_array_boolean_pj * self.active_array_cycles
            + self.costs.pipeline_ctrl_pj * self.busy_cycles
        )

    def __repr__(self):
        return f"DigitalComputeElement(hct={self.hct_id}, pipelines={self.pipeline_count}, family={self.family.value})"
