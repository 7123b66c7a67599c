from fractions import Fraction

import numpy as np
import pytest

from darth_pum.core.costs import AreaTable, Component, CostReport, CostTable
from darth_pum.core.fixed_point import FixedPointSpec, decode_fixed, encode_fixed, to_signed
from darth_pum.core.slicing import (
    SlicePlan,
    StripedLayout,
    recombine_array,
    recombine_slices,
    slice_array,
    slice_value,
)
from darth_pum.errors import FixedPointOverflowError, PlanMismatchError


class TestFixedPoint:
    @pytest.mark.parametrize("value, spec, pattern", [
        (0, FixedPointSpec(8), 0x00),
        (-1, FixedPointSpec(8), 0xFF),
        (127, FixedPointSpec(8), 0x7F),
        (-128, FixedPointSpec(8), 0x80),
        (255, FixedPointSpec(8, signed=False), 0xFF),
        (1.5, FixedPointSpec(8, frac_bits=4), 0x18),
        (-0.25, FixedPointSpec(8, frac_bits=4), 0xFC),
    ])
    def test_encode(self, value, spec, pattern):
        assert encode_fixed(value, spec) == pattern
        assert decode_fixed(pattern, spec) == Fraction(value)

    def test_round_ties_to_even(self):
        spec = FixedPointSpec(8, frac_bits=1)
        # 0.25 * 2 = 0.5 -> 0, 0.75 * 2 = 1.5 -> 2
        assert encode_fixed(0.25, spec) == 0
        assert encode_fixed(0.75, spec) == 2
        assert decode_fixed(encode_fixed(Fraction(1, 3), spec), spec) == Fraction(1, 2)

    @pytest.mark.parametrize("value, spec", [
        (128, FixedPointSpec(8)),
        (-129, FixedPointSpec(8)),
        (-1, FixedPointSpec(8, signed=False)),
        (8, FixedPointSpec(8, frac_bits=4)),
    ])
    def test_overflow(self, value, spec):
        with pytest.raises(FixedPointOverflowError):
            encode_fixed(value, spec)

    def test_overflow_is_an_overflow_error(self):
        with pytest.raises(OverflowError):
            encode_fixed(1000, FixedPointSpec(4))

    def test_decode_rejects_wide_patterns(self):
        with pytest.raises(ValueError):
            decode_fixed(0x100, FixedPointSpec(8))

    @pytest.mark.parametrize("bits, frac", [(0, 0), (65, 0), (8, 9)])
    def test_bad_spec(self, bits, frac):
        with pytest.raises(ValueError):
            FixedPointSpec(bits, frac_bits=frac)

    def test_to_signed(self):
        assert to_signed(0xFF, 8) == -1
        assert to_signed(0x7F, 8) == 127
        assert to_signed(0x1FF, 8) == -1

    @pytest.mark.parametrize("bits", range(1, 13))
    def test_exhaustive_round_trip(self, bits):
        for signed in (True, False):
            for frac in range(bits + 1):
                spec = FixedPointSpec(bits, signed=signed, frac_bits=frac)
                for pattern in range(1 << bits):
                    value = decode_fixed(pattern, spec)
                    assert spec.min_value <= value <= spec.max_value
                    assert encode_fixed(value, spec) == pattern


class TestSlicing:
    @pytest.mark.parametrize("element_bits, bits_per_cell, count", [
        (8, 8, 1), (8, 4, 2), (8, 1, 8), (16, 8, 2), (16, 3, 6), (1, 1, 1),
    ])
    def test_slice_count(self, element_bits, bits_per_cell, count):
        assert SlicePlan(element_bits, bits_per_cell).slice_count == count

    @pytest.mark.parametrize("bits_per_cell", [0, 9])
    def test_bad_cell_width(self, bits_per_cell):
        with pytest.raises(PlanMismatchError):
            SlicePlan(8, bits_per_cell)

    def test_slices_are_lsb_first(self):
        plan = SlicePlan(16, 4)
        assert slice_value(0xABCD, plan) == [0xD, 0xC, 0xB, 0xA]
        assert recombine_slices([0xD, 0xC, 0xB, 0xA], plan) == 0xABCD

    def test_ragged_last_slice(self):
        plan = SlicePlan(8, 3)
        assert slice_value(0xFF, plan) == [7, 7, 3]
        assert recombine_slices([7, 7, 3], plan) == 0xFF

    def test_width_mismatch(self):
        plan = SlicePlan(8, 4)
        with pytest.raises(PlanMismatchError):
            slice_value(0x12, plan, width=16)
        with pytest.raises(PlanMismatchError):
            slice_value(0x100, plan)
        with pytest.raises(PlanMismatchError):
            recombine_slices([1, 2, 3], plan)

    def test_recombine_sums_over_full_partials(self):
        # Partials may exceed a cell's range after an MVM
        plan = SlicePlan(8, 4)
        assert recombine_slices([100, 3], plan) == 100 + (3 << 4)

    def test_array_slicing(self, rng):
        plan = SlicePlan(8, 2)
        values = rng.integers(0, 256, (5, 7))
        slices = slice_array(values, plan)
        assert slices.shape == (4, 5, 7)
        assert slices.max() <= 3
        np.testing.assert_array_equal(recombine_array(slices, plan), values)

    def test_array_rejects_negative(self):
        with pytest.raises(PlanMismatchError):
            slice_array(np.array([1, -1]), SlicePlan(8, 8))

    def test_striped_layout(self):
        layout = StripedLayout(width_elements=64, depth_bits=64, register_index=5)
        assert layout.locate(10, 3) == (3, 10, 5)
        with pytest.raises(PlanMismatchError):
            layout.locate(64, 0)
        with pytest.raises(PlanMismatchError):
            layout.locate(0, 64)

    def test_random_slice_and_combine(self):
        rng = np.random.default_rng(77)
        for _ in range(10_000):
            plan = SlicePlan(int(rng.integers(1, 33)), int(rng.integers(1, 9)))
            pattern = int(rng.integers(0, 1 << plan.element_bits))
            slices = slice_value(pattern, plan)
            assert len(slices) == plan.slice_count
            assert all(0 <= s <= plan.cell_mask for s in slices)
            assert recombine_slices(slices, plan) == pattern


class TestCosts:
    def test_defaults(self):
        assert CostTable() == CostTable(
            digital_array_boolean_pj=8.0, pipeline_ctrl_pj=1.6, sar_adc_pj=1.5, ramp_adc_pj=1.2,
            row_periphery_pj=0.7, sample_hold_pj=2.1e-5, frontend_pj=63.0, frontend_fanout=8,
            sar_conversion_cycles=1, ramp_conversion_cycles=256, analog_settle_cycles=1,
            element_access_cycles=3, transfer_bytes_per_cycle=8, reprogram_cycles=10_000, reprogram_pj=5.0e5,
        )
        assert len(CostTable.keys()) == 15
        area = AreaTable()
        assert vars(area) == {
            "reram_array": 240.0, "pipeline_control": 74000.0, "io_ctrl": 9600.0, "decode_drive": 280.0,
            "pipeline_select": 64.0, "input_buffers": 27000.0, "row_periphery": 13000.0, "sar_adc": 600.0,
            "ramp_adc": 3800.0, "sample_hold": 62.0, "shift_unit": 946.0, "transpose_unit": 1760.0,
            "arbiter": 0.6, "iiu": 42.0, "frontend": 87000.0,
        }

    @pytest.mark.parametrize("field", ["sar_adc_pj", "element_access_cycles", "frontend_fanout"])
    def test_non_positive_constants_rejected(self, field):
        with pytest.raises(ValueError):
            CostTable(**{field: 0})

    def test_then_and_alongside(self):
        a = CostReport(cycles=10).charge(Component.ADC, 1.0).count("conversions", 2)
        b = CostReport(cycles=4).charge(Component.ADC, 0.5).charge(Component.FRONTEND, 2.0)

        serial = CostReport().then(a).then(b)
        assert serial.cycles == 14

        overlapped = CostReport().alongside(a).alongside(b)
        assert overlapped.cycles == 10
        assert overlapped.energy_pj[Component.ADC.value] == 1.5
        assert overlapped.counters["conversions"] == 2
        assert overlapped.total_energy_pj == 3.5

    def test_breakdown_order(self):
        report = CostReport().charge(Component.FRONTEND, 1.0).charge(Component.DIGITAL_ARRAY, 2.0)
        breakdown = report.breakdown()
        assert list(breakdown) == [c.value for c in Component]
        assert sum(breakdown.values()) == report.total_energy_pj

    def test_tag(self):
        report = CostReport(cycles=7).tag("sub_bytes").tag("sub_bytes", cycles=3)
        assert report.kernels["sub_bytes"] == 10

    def test_area(self):
        area = AreaTable()
        sar = area.hct_area_um2("sar")
        ramp = area.hct_area_um2("ramp")
        assert ramp - sar == pytest.approx(3800.0 - 1200.0)
        # The front end is shared by its fanout
        assert area.hct_area_um2("sar", fanout=1) - sar == pytest.approx(87000.0 - 87000.0 / 8)
