from pathlib import Path
from typing import List, Optional, Union

from sqlalchemy import create_engine, select
from sqlalchemy.orm import sessionmaker

from ..logger import logger
from .models import Base, EnergyEntry, Run
from .run_report import RunReport

MEMORY_URL = "sqlite:///:memory:"


def database_url(target: Optional[Union[str, Path]]) -> str:
    """``None`` or ``":memory:"`` give an in-memory database; a path gives a SQLite file."""
    if target is None or str(target) == ":memory:":
        return MEMORY_URL
    target = str(target)
    if "://" in target:
        return target
    return f"sqlite:///{target}"


class ResultStore:
    """Persists ``RunReport``s to a SQL database."""

    def __init__(self, target: Optional[Union[str, Path]] = None, echo: bool = False):
        self.url = database_url(target)
        self.engine = create_engine(self.url, echo=echo)
        Base.metadata.create_all(self.engine)
        self.Session = sessionmaker(self.engine, expire_on_commit=False)

    def save(self, report: RunReport) -> int:
        run = Run(
            app=report.app,
            seed=report.seed,
            adc=str(report.chip.get("adc")),
            batch=report.batch,
            cycles=report.cycles,
            throughput=report.throughput,
            total_energy_pj=report.total_energy_pj,
            chip=dict(report.chip),
            kernels=dict(report.kernels),
            counters=dict(report.counters),
            area_um2=dict(report.area_um2),
            extra=dict(report.extra),
            energy=[
                EnergyEntry(position=i, component=name, pj=pj)
                for i, (name, pj) in enumerate(report.energy_pj.items())
            ],
        )
        with self.Session() as session:
            session.add(run)
            session.commit()
            run_id = run.id
        logger.debug(f"Stored run {run_id} ({report.app}) in {self.url}")
        return run_id

    def runs(self, app: Optional[str] = None) -> List[Run]:
        stmt = select(Run).order_by(Run.id)
        if app is not None:
            stmt = stmt.where(Run.app == app)
        with self.Session() as session:
            return list(session.scalars(stmt))

    def load(self, run_id: int) -> Optional[RunReport]:
        with self.Session() as session:
            run = session.get(Run, run_id)
            if run is None:
                return None
            return RunReport(
                app=run.app,
                chip=dict(run.chip),
                batch=run.batch,
                cycles=run.cycles,
                throughput=run.throughput,
                energy_pj={entry.component: entry.pj for entry in run.energy},
                total_energy_pj=run.total_energy_pj,
                kernels=dict(run.kernels),
                counters=dict(run.counters),
                area_um2=dict(run.area_um2),
                seed=run.seed,
                extra=dict(run.extra),
            )

    def export(self, app: Optional[str] = None) -> List[RunReport]:
        return [self.load(run.id) for run in self.runs(app)]

    def close(self):
        self.engine.dispose()
