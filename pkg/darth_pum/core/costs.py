"""
Cost constants and the cost accumulator every simulated operation returns.

All energies are picojoules per active cycle at 1 GHz (1 ns cycle), so a
component drawing P mW for one cycle consumes P pJ.
"""

from collections import defaultdict
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Dict, Iterable, Optional


CYCLE_NS = 1.0


class Component(str, Enum):
    DIGITAL_ARRAY = "digital_array"
    PIPELINE_CTRL = "pipeline_ctrl"
    ADC = "adc"
    ROW_PERIPHERY = "row_periphery"
    SAMPLE_HOLD = "sample_hold"
    FRONTEND = "frontend"
    ANALOG_PROGRAM = "analog_program"


@dataclass
class CostTable:
    """Per-component energy and latency constants of one HCT."""

    # Energy per active cycle (pJ)
    digital_array_boolean_pj: float = 8.0
    """One digital array executing one Boolean microop for one cycle."""

    pipeline_ctrl_pj: float = 1.6
    """Pipeline controller, per busy cycle."""

    sar_adc_pj: float = 1.5
    ramp_adc_pj: float = 1.2

    row_periphery_pj: float = 0.7
    """Wordline drivers of one analog array, per applied input bit."""

    sample_hold_pj: float = 2.1e-5
    """Per conversion."""

    frontend_pj: float = 63.0
    """One front end (shared by ``frontend_fanout`` HCTs), per issued instruction."""

    frontend_fanout: int = 8

    # Latencies (cycles)
    sar_conversion_cycles: int = 1
    ramp_conversion_cycles: int = 256
    analog_settle_cycles: int = 1
    element_access_cycles: int = 3
    """Per element of an element-wise load/store: address read, source read, write back."""

    transfer_bytes_per_cycle: int = 8

    reprogram_cycles: int = 10_000
    reprogram_pj: float = 5.0e5
    """Charged per analog array rewritten."""

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"CostTable.{f.name} must be strictly positive, got {value}")

    @classmethod
    def keys(cls) -> Iterable[str]:
        return [f.name for f in fields(cls)]

    def adc_pj(self, kind) -> float:
        return self.sar_adc_pj if kind.value == "sar" else self.ramp_adc_pj


@dataclass
class AreaTable:
    """HCT component areas in square micrometres."""

    reram_array: float = 240.0
    pipeline_control: float = 74000.0
    io_ctrl: float = 9600.0
    decode_drive: float = 280.0
    pipeline_select: float = 64.0
    input_buffers: float = 27000.0
    row_periphery: float = 13000.0
    sar_adc: float = 600.0
    ramp_adc: float = 3800.0
    sample_hold: float = 62.0
    shift_unit: float = 946.0
    transpose_unit: float = 1760.0
    arbiter: float = 0.6
    iiu: float = 42.0
    frontend: float = 87000.0

    def hct_area_um2(self, adc_kind: str, pipelines: int = 64, depth: int = 64,
                     ace_arrays: int = 64, fanout: int = 8) -> float:
        dce = (
            pipelines * depth * self.reram_array
            + self.pipeline_control + self.io_ctrl + self.decode_drive + self.pipeline_select
        )
        if adc_kind == "sar":
            adc = 2 * self.sar_adc
        else:
            adc = self.ramp_adc
        ace = ace_arrays * self.reram_array + self.input_buffers + self.row_periphery + adc + self.sample_hold
        glue = self.shift_unit + self.transpose_unit + self.arbiter + self.iiu
        return dce + ace + glue + self.frontend / fanout


@dataclass
class CostReport:
    """
    Cycles plus per-component energy of one operation or a whole run.

    Reports compose two ways: ``then`` (serial, cycles add) and ``alongside``
    (overlapped, cycles take the max). Energy always adds.
    """

    cycles: int = 0
    energy_pj: Dict[str, float] = field(default_factory=lambda: defaultdict(float))
    counters: Dict[str, int] = field(default_factory=lambda: defaultdict(int))
    kernels: Dict[str, int] = field(default_factory=lambda: defaultdict(int))

    def charge(self, component: Component, pj: float) -> "CostReport":
        if pj:
            self.energy_pj[component.value] += pj
        return self

    def count(self, name: str, amount: int = 1) -> "CostReport":
        self.counters[name] += amount
        return self

    def _merge_energy(self, other: "CostReport"):
        for k, v in other.energy_pj.items():
            self.energy_pj[k] += v
        for k, v in other.counters.items():
            self.counters[k] += v
        for k, v in other.kernels.items():
            self.kernels[k] += v

    def then(self, other: "CostReport") -> "CostReport":
        self.cycles += other.cycles
        self._merge_energy(other)
        return self

    def alongside(self, other: "CostReport") -> "CostReport":
        self.cycles = max(self.cycles, other.cycles)
        self._merge_energy(other)
        return self

    def tag(self, kernel: str, cycles: Optional[int] = None) -> "CostReport":
        self.kernels[kernel] += self.cycles if cycles is None else cycles
        return self

    @property
    def total_energy_pj(self) -> float:
        return sum(self.energy_pj[c.value] for c in Component)

    def breakdown(self) -> Dict[str, float]:
        return {c.value: self.energy_pj.get(c.value, 0.0) for c in Component}

    def __repr__(self):
        return f"CostReport(cycles={self.cycles}, energy={self.total_energy_pj:.3f}pJ)"
