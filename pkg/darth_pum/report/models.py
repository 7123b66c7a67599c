from datetime import datetime
from typing import List, Optional

from sqlalchemy import JSON, ForeignKey, func
from sqlalchemy.orm import Mapped, declarative_base, mapped_column, relationship

Base = declarative_base()


class Run(Base):
    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(primary_key=True)
    app: Mapped[str] = mapped_column(nullable=False, index=True)
    seed: Mapped[Optional[int]] = mapped_column()
    adc: Mapped[str] = mapped_column(nullable=False, index=True)
    batch: Mapped[int] = mapped_column(nullable=False)
    cycles: Mapped[int] = mapped_column(nullable=False)
    throughput: Mapped[float] = mapped_column(nullable=False)
    total_energy_pj: Mapped[float] = mapped_column(nullable=False)
    chip: Mapped[dict] = mapped_column(JSON)
    kernels: Mapped[dict] = mapped_column(JSON)
    counters: Mapped[dict] = mapped_column(JSON)
    area_um2: Mapped[dict] = mapped_column(JSON)
    extra: Mapped[dict] = mapped_column(JSON)

    created_at: Mapped[datetime] = mapped_column(
        server_default=func.now(),
        nullable=False
    )

    energy: Mapped[List["EnergyEntry"]] = relationship(
        back_populates="run", cascade="all, delete-orphan", order_by="EnergyEntry.position"
    )

    def __repr__(self):
        return f"Run(id={self.id} app={self.app} cycles={self.cycles})"


class EnergyEntry(Base):
    __tablename__ = "energy_entries"

    id: Mapped[int] = mapped_column(primary_key=True)
    position: Mapped[int] = mapped_column(nullable=False)
    component: Mapped[str] = mapped_column(nullable=False, index=True)
    pj: Mapped[float] = mapped_column(nullable=False)

    run_id: Mapped[int] = mapped_column(ForeignKey("runs.id"), index=True)
    run: Mapped["Run"] = relationship(back_populates="energy")

    def __repr__(self):
        return f"EnergyEntry(run_id={self.run_id}, component='{self.component}', pj={self.pj})"
