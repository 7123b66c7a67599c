from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.costs import Component, CostReport, CostTable
from ..core.slicing import SlicePlan, recombine_array
from ..errors import CapacityError
from ..helpers import OrderedSet
from ..logger import logger
from .adc import AdcKind, AdcModel, digitize
from .crossbar import ConductanceArray, Remap, apply_input_bit, program_matrix
from .noise import NoiseConfig


class AnalogComputeElement:
    """
    The analog half of an HCT: ``arrays`` crossbars sharing one ADC bank.

    Keeps the counters the energy identity is checked against:
    wordline-active array cycles, ADC busy unit-cycles and conversions.
    """

    def __init__(self, arrays: int = 64, rows: int = 64, cols: int = 64,
                 costs: Optional[CostTable] = None, noise: Optional[NoiseConfig] = None,
                 adc_kind: AdcKind = AdcKind.SAR, hct_id: int = 0):
        self.array_count = arrays
        self.rows = rows
        self.cols = cols
        self.costs = costs or CostTable()
        self.noise = noise or NoiseConfig.off()
        self.adc_kind = adc_kind
        self.hct_id = hct_id
        self.rng = self.noise.rng(hct_id)

        self._arrays: Dict[int, ConductanceArray] = {}
        self.free = OrderedSet(range(arrays))

        self.wordline_cycles = 0
        self.adc_unit_cycles = 0
        self.conversions = 0
        self.programmed_arrays = 0

    def array(self, index: int) -> ConductanceArray:
        if index not in self._arrays:
            self._arrays[index] = ConductanceArray(index, self.rows, self.cols)
        return self._arrays[index]

    def allocate(self, count: int) -> List[int]:
        if count > len(self.free):
            raise CapacityError(f"HCT {self.hct_id}: {count} analog arrays requested, {len(self.free)} free")
        logger.debug(f"HCT {self.hct_id}: allocating {count} analog arrays")
        return self.free.take(count)

    def release(self, indexes: Sequence[int]):
        for i in indexes:
            self.array(i).clear()
        self.free.update(indexes)

    def program(self, indexes: Sequence[int], matrix, plan: SlicePlan,
                remap: Remap = Remap.RAW) -> CostReport:
        """Write a matrix; every touched array pays the reprogram cost, arrays write in parallel."""
        arrays = [self.array(i) for i in indexes]
        program_matrix(arrays, matrix, plan, remap, self.noise, self.rng)
        touched = plan.slice_count
        self.programmed_arrays += touched
        return (
            CostReport(cycles=self.costs.reprogram_cycles)
            .charge(Component.ANALOG_PROGRAM, self.costs.reprogram_pj * touched)
            .count("arrays_programmed", touched)
        )

    def read_matrix(self, indexes: Sequence[int], plan: SlicePlan) -> Tuple[np.ndarray, CostReport]:
        """Ideal stored values of a bit-sliced matrix, read back one row per cycle per array."""
        arrays = [self.array(i) for i in indexes[:plan.slice_count]]
        rows, cols = arrays[0].shape
        plus = np.stack([a.g_plus[:rows, :cols] for a in arrays])
        minus = np.stack([a.g_minus[:rows, :cols] for a in arrays])
        values = recombine_array(plus, plan) - recombine_array(minus, plan)

        report = (
            CostReport(cycles=rows * len(arrays))
            .charge(Component.ROW_PERIPHERY, self.costs.row_periphery_pj * rows * len(arrays))
        )
        self.wordline_cycles += rows * len(arrays)
        return values, report

    def adc_for(self, plan: SlicePlan, remap: Remap = Remap.RAW, signed: bool = False,
                rows: Optional[int] = None, **kwargs) -> AdcModel:
        return AdcModel.sized(self.adc_kind, rows or self.rows, plan, remap, signed, **kwargs)

    def apply_bit(self, indexes: Sequence[int], input_bits, adc: AdcModel,
                  active_bitlines: int) -> Tuple[np.ndarray, CostReport]:
        """
        Drive one input bit-plane into every listed array and digitise each
        array's active bitlines. Returns codes of shape ``(len(indexes), active_bitlines)``.
        """
        report = (
            CostReport(cycles=self.costs.analog_settle_cycles)
            .charge(Component.ROW_PERIPHERY, self.costs.row_periphery_pj * len(indexes))
        )
        self.wordline_cycles += len(indexes)

        outputs = []
        for i in indexes:
            sums = apply_input_bit(self.array(i), input_bits, self.noise, self.rng)
            codes, conversion = digitize(sums, adc, active_bitlines, self.costs)
            outputs.append(codes)
            report.then(conversion)
            self.adc_unit_cycles += conversion.counters["adc_cycles"]
            self.conversions += conversion.counters["conversions"]

        return np.stack(outputs), report

    def energy_pj(self) -> float:
        return (
            self.costs.row_periphery_pj * self.wordline_cycles
            + self.costs.adc_pj(self.adc_kind) * self.adc_unit_cycles
            + self.costs.sample_hold_pj * self.conversions
        )

    def __repr__(self):
        return f"AnalogComputeElement(hct={self.hct_id}, arrays={self.array_count}, adc={self.adc_kind.value})"
