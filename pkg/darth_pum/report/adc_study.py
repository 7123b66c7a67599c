"""
SAR against ramp ADCs, per application.

Each application runs once on an iso-area SAR chip and once on an iso-area
ramp chip (``DEFAULT_HCT_COUNT``). Chip throughput scales the measured
throughput by the number of copies of the run that fit on the chip.
"""

import csv
import io
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

from ..ace.adc import AdcKind
from ..config import SimConfig
from ..logger import logger
from ..runtime.chip import DEFAULT_HCT_COUNT
from .run_report import RunReport
from .runs import run_app

STUDY_COLUMNS = ("app", "adc", "hct_count", "hcts_used", "batch", "cycles", "chip_throughput",
                 "energy_per_op_pj", "mixcolumns_conversion_cycles")
DEFAULT_SIZES = {"aes": 16, "cnn": 2, "llm": 1}


@dataclass
class AdcStudyRow:
    app: str
    adc: str
    hct_count: int
    hcts_used: int
    batch: int
    cycles: int
    chip_throughput: float
    energy_per_op_pj: float
    mixcolumns_conversion_cycles: Optional[int] = None

    @classmethod
    def from_report(cls, report: RunReport) -> "AdcStudyRow":
        hct_count = int(report.chip["hct_count"])
        used = max(1, int(report.extra.get("hcts_used", 1)))
        return cls(
            app=report.app,
            adc=str(report.chip["adc"]),
            hct_count=hct_count,
            hcts_used=used,
            batch=report.batch,
            cycles=report.cycles,
            chip_throughput=report.throughput * (hct_count // used),
            energy_per_op_pj=report.total_energy_pj / report.batch if report.batch else 0.0,
            mixcolumns_conversion_cycles=report.extra.get("mixcolumns_conversion_cycles"),
        )

    def as_dict(self) -> Dict[str, object]:
        return {name: getattr(self, name) for name in STUDY_COLUMNS}


def iso_area_config(config: SimConfig, kind: AdcKind) -> SimConfig:
    chip = replace(config.chip, adc_kind=kind, hct_count=DEFAULT_HCT_COUNT[kind])
    return replace(config, chip=chip)


def run_adc_study(config: Optional[SimConfig] = None, apps: Sequence[str] = ("aes", "cnn"), seed: int = 0,
                  sizes: Optional[Dict[str, int]] = None) -> List[AdcStudyRow]:
    config = config or SimConfig()
    sizes = {**DEFAULT_SIZES, **(sizes or {})}
    rows = []
    for app in apps:
        for kind in (AdcKind.SAR, AdcKind.RAMP):
            report = run_app(app, iso_area_config(config, kind), seed, sizes[app])
            row = AdcStudyRow.from_report(report)
            logger.debug(f"adc study {app}/{kind.value}: {row.chip_throughput:.3e} ops/s on {row.hct_count} HCTs")
            rows.append(row)
    return rows


def study_csv(rows: Sequence[AdcStudyRow]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(STUDY_COLUMNS), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_dict())
    return buffer.getvalue()
