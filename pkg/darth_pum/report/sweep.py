"""
Iso-resource AES throughput sweep over digital, analog and hybrid chips.

A fixed budget of ReRAM arrays is split ten ways. ``D`` spends all of it on
digital pipelines, ``H-k`` turns ``k`` tenths into analog arrays and ``A``
is all analog with the non-MVM AES steps on a host of fixed per-step
latency.

Per-pass costs come from simulation: one pass (``BLOCKS_PER_LANE`` blocks)
is encrypted on a one-HCT chip with the analog MixColumns path and again
with the digital one. A pool of pipelines and ACEs runs passes side by side,
so each resource's rate is its count over its busy cycles per pass.

Every configuration is evaluated for each logic family and normalised to
``D`` with OSCAR.
"""

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from ..ace.adc import AdcKind
from ..ace.noise import NoiseConfig
from ..apps.aes import BLOCKS_PER_LANE, MixColumnsPath, aes_encrypt, aes_init_arrays
from ..apps.aes_reference import ROUNDS
from ..config import SimConfig
from ..core.costs import CYCLE_NS, CostReport
from ..dce.microops import LogicFamily
from ..errors import BudgetError
from ..logger import logger
from ..runtime.chip import Chip, ChipConfig

STEPS = 10
AES128_ROUNDS = ROUNDS[16]
SWEEP_COLUMNS = ("config", "family", "analog_arrays", "digital_arrays", "blocks_per_s", "normalized", "bottleneck")

_PASSES: Dict[Tuple[str, str], CostReport] = {}


@dataclass(frozen=True)
class SweepPoint:
    name: str
    analog_arrays: int
    digital_arrays: int
    host: bool = False


@dataclass
class SweepSpec:
    budget: int = 640
    families: Tuple[LogicFamily, ...] = (LogicFamily.OSCAR, LogicFamily.IDEAL)
    points: List[SweepPoint] = field(default_factory=list)

    @classmethod
    def iso_resource(cls, budget: int, families: Sequence[LogicFamily] = (LogicFamily.OSCAR, LogicFamily.IDEAL),
                     depth: int = 64, ace_arrays: int = 64) -> "SweepSpec":
        if budget % STEPS:
            raise BudgetError(f"Array budget {budget} does not split into {STEPS} equal steps")
        step = budget // STEPS
        if step % depth or step % ace_arrays:
            raise BudgetError(
                f"A budget step of {step} arrays is not whole pipelines of {depth} and ACEs of {ace_arrays}"
            )
        points = [SweepPoint("D", 0, budget)]
        points += [SweepPoint(f"H-{k}", k * step, budget - k * step) for k in range(1, STEPS)]
        points.append(SweepPoint("A", budget, 0, host=True))
        return cls(budget, tuple(families), points)

    def validate(self):
        for point in self.points:
            if point.analog_arrays + point.digital_arrays != self.budget:
                raise BudgetError(f"{point.name} uses {point.analog_arrays + point.digital_arrays} arrays, "
                                  f"budget is {self.budget}")


@dataclass
class SweepRow:
    config: str
    family: str
    analog_arrays: int
    digital_arrays: int
    blocks_per_s: float
    normalized: float = 0.0
    bottleneck: str = ""

    def as_dict(self) -> Dict[str, object]:
        return {name: getattr(self, name) for name in SWEEP_COLUMNS}


def lane_config(chip: ChipConfig, family: LogicFamily) -> ChipConfig:
    """The one-HCT, noise-free chip a pass is simulated on."""
    return replace(chip, hct_count=1, logic_family=family, noise=NoiseConfig.off(),
                   analog_enabled=True, digital_enabled=True)


def simulate_pass(lane: ChipConfig, path: MixColumnsPath) -> CostReport:
    """
    Encrypt one pass of blocks on ``lane`` and return its cost.

    Timing does not depend on the data, so results are kept per configuration.
    """
    key = (repr(lane), path.value)
    if key not in _PASSES:
        ctx = aes_init_arrays(Chip(lane), bytes(16), path=path)
        _, report = aes_encrypt(ctx, [bytes(16)] * BLOCKS_PER_LANE)
        logger.debug(f"sweep: {path.value} pass on {lane.logic_family.value} took {report.cycles} cycles")
        _PASSES[key] = report
    return _PASSES[key]


@dataclass(frozen=True)
class AesPassModel:
    """Busy cycles of each resource for one pass, measured on simulated lanes."""

    blocks: int
    hybrid_cycles: int
    analog_cycles: int
    digital_cycles: int
    rounds: int = AES128_ROUNDS
    aux_cycles: int = 360

    @classmethod
    def measure(cls, chip: ChipConfig, family: LogicFamily, aux_cycles: int = 360) -> "AesPassModel":
        lane = lane_config(chip, family)
        hybrid = simulate_pass(lane, MixColumnsPath.ANALOG)
        # The ADC plays no part in a digital pass
        digital = simulate_pass(replace(lane, adc_kind=AdcKind.SAR, hct_count=1), MixColumnsPath.DIGITAL)
        return cls(
            BLOCKS_PER_LANE, hybrid.cycles, int(hybrid.counters["analog_cycles"]), digital.cycles,
            aux_cycles=aux_cycles,
        )

    def digital_pass(self, hybrid: bool) -> int:
        """Pipeline cycles per pass; a hybrid lane's pipelines are free while its ACE converts."""
        if hybrid:
            return self.hybrid_cycles - self.analog_cycles
        return self.digital_cycles

    @property
    def analog_pass(self) -> int:
        return self.analog_cycles

    @property
    def host_pass(self) -> int:
        return (1 + 3 * self.rounds) * self.aux_cycles


def point_throughput(point: SweepPoint, model: AesPassModel, depth: int, ace_arrays: int) -> Tuple[float, str]:
    """Blocks per cycle of one configuration and the resource that limits it."""
    lanes = point.digital_arrays // depth
    aces = point.analog_arrays // ace_arrays
    rates = {}
    if point.analog_arrays == 0:
        rates["digital"] = lanes * model.blocks / model.digital_pass(hybrid=False)
    else:
        rates["analog"] = aces * model.blocks / model.analog_pass
        if point.host:
            if model.host_pass:
                rates["host"] = model.blocks / model.host_pass
        else:
            rates["digital"] = lanes * model.blocks / model.digital_pass(hybrid=True)
    bottleneck = min(rates, key=rates.get)
    return rates[bottleneck], bottleneck


def run_sweep(spec: SweepSpec, config: Optional[SimConfig] = None) -> List[SweepRow]:
    """One row per configuration per logic family, ``D``/OSCAR normalised to 1.0."""
    config = config or SimConfig()
    chip = config.chip
    spec.validate()

    rows: List[SweepRow] = []
    for family in spec.families:
        model = AesPassModel.measure(chip, family, config.sweep_aux_cycles)
        for point in spec.points:
            per_cycle, bottleneck = point_throughput(point, model, chip.pipeline_depth, chip.ace_arrays)
            rows.append(SweepRow(
                point.name, family.value, point.analog_arrays, point.digital_arrays,
                per_cycle * 1e9 / CYCLE_NS, bottleneck=bottleneck,
            ))
            logger.debug(f"sweep {family.value} {point.name}: {per_cycle:.6f} blocks/cycle, {bottleneck}-bound")

    base = next((r for r in rows if r.config == "D" and r.family == LogicFamily.OSCAR.value), None)
    if base is None or base.blocks_per_s == 0:
        raise BudgetError("The sweep needs a D configuration with at least one pipeline under OSCAR")
    for row in rows:
        row.normalized = row.blocks_per_s / base.blocks_per_s
    return rows


def hybrid_curve(rows: Sequence[SweepRow], family: str = LogicFamily.OSCAR.value) -> List[SweepRow]:
    return [r for r in rows if r.family == family and r.config.startswith("H-")]


def hybrid_peak(rows: Sequence[SweepRow], family: str = LogicFamily.OSCAR.value) -> SweepRow:
    return max(hybrid_curve(rows, family), key=lambda r: r.normalized)


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(SWEEP_COLUMNS), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_dict())
    return buffer.getvalue()
