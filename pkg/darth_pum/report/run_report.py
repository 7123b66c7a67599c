"""
Machine-readable run summaries.

A ``RunReport`` is built from the ``CostReport`` an application returns and
the chip it ran on. It serialises to a JSON document (sorted keys, no
timestamps, so a given config and seed always gives the same bytes) and to
long-format CSV rows with a fixed column schema.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional

from ..core.costs import CYCLE_NS, AreaTable, Component, CostReport
from ..runtime.chip import ChipConfig

CSV_COLUMNS = ("app", "section", "key", "value")
"""Every CSV artifact of a run uses these columns in this order."""

SECTIONS = ("summary", "energy_pj", "kernel_cycles", "counter", "area_um2", "extra")


def chip_summary(config: ChipConfig) -> Dict[str, object]:
    return {
        "adc": config.adc_kind.value,
        "hct_count": config.hct_count,
        "frontends": config.frontend_count,
        "pipelines": config.pipelines,
        "pipeline_depth": config.pipeline_depth,
        "ace_arrays": config.ace_arrays,
        "logic_family": config.logic_family.value,
        "iiu": config.iiu,
        "noise": not config.noise.is_off,
    }


def chip_area(config: ChipConfig, areas: Optional[AreaTable] = None) -> Dict[str, float]:
    areas = areas or AreaTable()
    per_hct = areas.hct_area_um2(
        config.adc_kind.value,
        pipelines=config.pipelines,
        depth=config.pipeline_depth,
        ace_arrays=config.ace_arrays,
        fanout=config.frontend_fanout,
    )
    return {"hct": per_hct, "chip": per_hct * config.hct_count}


def throughput_ops_per_s(batch: int, cycles: int) -> float:
    if cycles <= 0:
        return 0.0
    return batch / (cycles * CYCLE_NS * 1e-9)


@dataclass
class RunReport:
    app: str
    chip: Dict[str, object]
    batch: int
    cycles: int
    throughput: float
    energy_pj: Dict[str, float]
    total_energy_pj: float
    kernels: Dict[str, int] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=dict)
    area_um2: Dict[str, float] = field(default_factory=dict)
    seed: Optional[int] = None
    extra: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_cost(cls, app: str, config: ChipConfig, cost: CostReport, batch: int,
                  seed: Optional[int] = None, extra: Optional[Dict[str, object]] = None) -> "RunReport":
        breakdown = cost.breakdown()
        # Summed in breakdown order so the total matches the entries exactly
        total = 0.0
        for value in breakdown.values():
            total += value
        return cls(
            app=app,
            chip=chip_summary(config),
            batch=batch,
            cycles=int(cost.cycles),
            throughput=throughput_ops_per_s(batch, cost.cycles),
            energy_pj=breakdown,
            total_energy_pj=total,
            kernels={k: int(v) for k, v in sorted(cost.kernels.items())},
            counters={k: int(v) for k, v in sorted(cost.counters.items())},
            area_um2=chip_area(config),
            seed=seed,
            extra=dict(extra or {}),
        )

    @property
    def largest_component(self) -> str:
        return max(self.energy_pj, key=self.energy_pj.get)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "RunReport":
        return cls(**data)

    def rows(self) -> List[Dict[str, object]]:
        rows = [
            {"app": self.app, "section": "summary", "key": "batch", "value": self.batch},
            {"app": self.app, "section": "summary", "key": "cycles", "value": self.cycles},
            {"app": self.app, "section": "summary", "key": "throughput", "value": self.throughput},
            {"app": self.app, "section": "summary", "key": "total_energy_pj", "value": self.total_energy_pj},
        ]
        for component in Component:
            rows.append({"app": self.app, "section": "energy_pj", "key": component.value,
                         "value": self.energy_pj.get(component.value, 0.0)})
        for section, values in (("kernel_cycles", self.kernels), ("counter", self.counters),
                                ("area_um2", self.area_um2), ("extra", self.extra)):
            for key in sorted(values):
                rows.append({"app": self.app, "section": section, "key": key, "value": values[key]})
        return rows


def write_csv(rows: Iterable[Dict[str, object]], fp, columns=CSV_COLUMNS):
    writer = csv.DictWriter(fp, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def to_csv(reports: Iterable[RunReport]) -> str:
    buffer = io.StringIO()
    write_csv((row for report in reports for row in report.rows()), buffer)
    return buffer.getvalue()
