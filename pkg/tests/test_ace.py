import numpy as np
import pytest

from darth_pum.ace.adc import AdcKind, AdcModel, compensate, digitize
from darth_pum.ace.crossbar import ConductanceArray, Remap, apply_input_bit, positive_current, program_matrix
from darth_pum.ace.noise import NoiseConfig
from darth_pum.core.costs import CostTable
from darth_pum.core.slicing import SlicePlan
from darth_pum.errors import CapacityError, ParityError, PlanMismatchError, RangeError


class TestAdc:
    @pytest.mark.parametrize("adc, active, cycles", [
        (AdcModel(AdcKind.SAR), 64, 32),
        (AdcModel(AdcKind.SAR), 32, 16),
        (AdcModel(AdcKind.SAR), 1, 1),
        (AdcModel(AdcKind.SAR, units=4), 64, 16),
        (AdcModel(AdcKind.RAMP), 64, 256),
        (AdcModel(AdcKind.RAMP), 1, 256),
        (AdcModel(AdcKind.RAMP, resolution_bits=9), 64, 512),
        (AdcModel(AdcKind.RAMP, early_termination_levels=4), 32, 4),
        (AdcModel(AdcKind.SAR), 0, 0),
    ])
    def test_latency(self, adc, active, cycles):
        assert adc.latency(active, CostTable()) == cycles

    @pytest.mark.parametrize("plan, remap, signed, bits, lo", [
        (SlicePlan(8, 1), Remap.RAW, False, 8, 0.0),
        (SlicePlan(8, 8), Remap.RAW, False, 14, 0.0),
        (SlicePlan(8, 8), Remap.RAW, True, 15, -16320.0),
        (SlicePlan(1, 1), Remap.SYMMETRIC, False, 8, -32.0),
    ])
    def test_sized(self, plan, remap, signed, bits, lo):
        adc = AdcModel.sized(AdcKind.SAR, 64, plan, remap, signed)
        assert adc.resolution_bits == bits
        assert adc.lo == lo

    def test_digitize_exact(self):
        adc = AdcModel(AdcKind.SAR)
        outputs, report = digitize([0.0, 5.2, 63.9, 255.0], adc)
        np.testing.assert_array_equal(outputs, [0, 5, 64, 255])
        assert report.cycles == 2
        assert report.counters["conversions"] == 4
        assert report.counters["adc_cycles"] == 4

    def test_digitize_active_bitlines(self):
        outputs, report = digitize(np.arange(64.0), AdcModel(AdcKind.SAR), active_bitlines=10)
        np.testing.assert_array_equal(outputs, np.arange(10))
        assert report.cycles == 5

    def test_digitize_batch(self):
        sums = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        outputs, report = digitize(sums, AdcModel(AdcKind.RAMP))
        np.testing.assert_array_equal(outputs, sums.astype(int))
        assert report.cycles == 3 * 256

    @pytest.mark.parametrize("value", [-1.0, 256.0, 1000.0])
    def test_out_of_range(self, value):
        with pytest.raises(RangeError):
            digitize([value], AdcModel(AdcKind.SAR))

    def test_truncated_codes(self):
        adc = AdcModel(AdcKind.SAR, lo=-32.0, truncate_bits=2)
        outputs, _ = digitize([-32.0, -31.0, 0.0, 5.0], adc)
        np.testing.assert_array_equal(outputs, [0, 1, 0, 1])

    def test_compensate(self):
        np.testing.assert_array_equal(compensate([-2, 0, 3], 4), [0, 2, 5])
        with pytest.raises(ParityError):
            compensate([0], 3)


class TestCrossbar:
    def test_signed_slices_on_the_pair(self, rng):
        matrix = rng.integers(-255, 256, (64, 64))
        plan = SlicePlan(8, 4)
        arrays = [ConductanceArray(i) for i in range(plan.slice_count)]
        program_matrix(arrays, matrix, plan)
        assert arrays[0].g_plus.max() <= 15
        assert (arrays[0].g_plus * arrays[0].g_minus).max() == 0

        recombined = sum(a.stored << plan.weight(i) for i, a in enumerate(arrays))
        np.testing.assert_array_equal(recombined, matrix)

    def test_bitline_sums(self, rng):
        matrix = rng.integers(0, 2, (64, 64))
        array = ConductanceArray()
        program_matrix([array], matrix, SlicePlan(1, 1))
        bits = rng.integers(0, 2, 64)
        np.testing.assert_allclose(apply_input_bit(array, bits), bits @ matrix)

    def test_symmetric_offsets_by_half_the_ones(self, rng):
        matrix = rng.integers(0, 2, (64, 64))
        array = ConductanceArray()
        program_matrix([array], matrix, SlicePlan(1, 1), Remap.SYMMETRIC)
        bits = np.zeros(64, dtype=int)
        bits[rng.choice(64, 20, replace=False)] = 1

        adc = AdcModel.sized(AdcKind.SAR, 64, SlicePlan(1, 1), Remap.SYMMETRIC)
        raw, _ = digitize(apply_input_bit(array, bits), adc)
        np.testing.assert_array_equal(compensate(raw, int(bits.sum())), bits @ matrix)

    def test_symmetric_needs_binary(self):
        with pytest.raises(PlanMismatchError):
            program_matrix([ConductanceArray()], np.eye(4, dtype=int), SlicePlan(8, 8), Remap.SYMMETRIC)
        with pytest.raises(PlanMismatchError):
            program_matrix([ConductanceArray()], 2 * np.eye(4, dtype=int), SlicePlan(1, 1), Remap.SYMMETRIC)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            program_matrix([ConductanceArray()], np.ones((65, 4), dtype=int), SlicePlan(1, 1))
        with pytest.raises(CapacityError):
            program_matrix([ConductanceArray()], np.ones((4, 4), dtype=int), SlicePlan(8, 4))

    def test_ir_drop(self, rng):
        matrix = rng.integers(0, 2, (64, 64))
        array = ConductanceArray()
        program_matrix([array], matrix, SlicePlan(1, 1))
        bits = rng.integers(0, 2, 64)
        noise = NoiseConfig(0.0, 0.0, 0.11)
        sums = apply_input_bit(array, bits, noise)
        np.testing.assert_allclose(sums, (bits @ matrix) - 0.11 * positive_current(array, bits))

    def test_noise_is_seeded(self, rng):
        matrix = rng.integers(0, 2, (64, 64))
        bits = rng.integers(0, 2, 64)
        noise = NoiseConfig(rng_seed=7)

        results = []
        for _ in range(2):
            array = ConductanceArray()
            generator = noise.rng(0)
            program_matrix([array], matrix, SlicePlan(1, 1), noise=noise, rng=generator)
            results.append(apply_input_bit(array, bits, noise, generator))
        np.testing.assert_array_equal(results[0], results[1])
        assert not np.array_equal(results[0], bits @ matrix)


class TestNoiseConfig:
    def test_off(self):
        assert NoiseConfig.off().is_off
        assert not NoiseConfig().is_off

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            NoiseConfig(read_sigma=-0.1)

    def test_streams_differ(self):
        noise = NoiseConfig(rng_seed=3)
        assert noise.rng(0).random() != noise.rng(1).random()
        assert noise.rng(0).random() == noise.rng(0).random()


class TestAnalogComputeElement:
    def test_allocate_and_release(self, ace):
        first = ace.allocate(60)
        assert len(first) == 60
        with pytest.raises(CapacityError):
            ace.allocate(5)
        ace.release(first[:8])
        assert len(ace.allocate(8)) == 8

    def test_program_and_read_back(self, ace, rng):
        matrix = rng.integers(-128, 128, (64, 64))
        plan = SlicePlan(8, 2)
        indexes = ace.allocate(plan.slice_count)
        report = ace.program(indexes, matrix, plan)
        assert report.cycles == CostTable().reprogram_cycles
        assert report.counters["arrays_programmed"] == 4

        values, _ = ace.read_matrix(indexes, plan)
        np.testing.assert_array_equal(values, matrix)

    def test_apply_bit_energy_identity(self, ace, rng):
        plan = SlicePlan(4, 1)
        indexes = ace.allocate(plan.slice_count)
        ace.program(indexes, rng.integers(0, 16, (64, 64)), plan)
        adc = ace.adc_for(plan)

        total = 0.0
        for _ in range(3):
            codes, report = ace.apply_bit(indexes, rng.integers(0, 2, 64), adc, 64)
            assert codes.shape == (4, 64)
            total += report.total_energy_pj
        assert ace.energy_pj() == pytest.approx(total)
        assert ace.conversions == 3 * 4 * 64
