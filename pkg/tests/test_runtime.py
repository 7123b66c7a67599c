import numpy as np
import pytest

from darth_pum.ace.adc import AdcKind
from darth_pum.errors import CapacityError, ConfigError, MatrixIndexError, ModeError, PlanMismatchError, ShapeError
from darth_pum.runtime import (
    Chip,
    ChipConfig,
    Instruction,
    Opcode,
    Precision,
    ProgramRunner,
    assemble,
    disable_analog_mode,
    disable_digital_mode,
    disassemble,
    enable_analog_mode,
    enable_digital_mode,
    exec_mvm_api,
    frontend_step,
    run_program,
    set_matrix,
    update_col,
    update_row,
)


class TestChipConfig:
    def test_iso_area_defaults(self):
        assert ChipConfig().hct_count == 1860
        assert ChipConfig(adc_kind=AdcKind.RAMP).hct_count == 1660
        assert ChipConfig().frontend_count == 233

    @pytest.mark.parametrize("kwargs", [
        {"hct_count": 0},
        {"pipeline_depth": 0},
        {"latency_multiplier": 0},
        {"analog_enabled": False, "digital_enabled": False},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ChipConfig(**kwargs)

    def test_hct_range(self, chip):
        with pytest.raises(CapacityError):
            chip.hct(16)

    def test_reserve_hct_skips_placed_matrices(self, chip, rng):
        set_matrix(chip, rng.integers(0, 256, (8, 8)))
        assert chip.reserve_hct() == 1
        assert chip.next_placement() == 2


class TestSetMatrix:
    @pytest.mark.parametrize("precision, slices", [
        (Precision.LOW, 8), (Precision.MED, 2), (Precision.HIGH, 1),
    ])
    def test_single_tile(self, chip, rng, precision, slices):
        matrix = rng.integers(0, 256, (64, 64))
        x = rng.integers(0, 256, 64)
        handle = set_matrix(chip, matrix, 8, precision)
        assert handle.tiles[0].vacore.slices == slices

        out, report = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(out, matrix @ x)
        assert report.kernels["mvm"] == report.cycles
        assert chip.frontend_issues > 0

    def test_multi_tile(self, chip, rng):
        matrix = rng.integers(-128, 128, (128, 128))
        x = rng.integers(0, 256, 128)
        handle = set_matrix(chip, matrix)
        assert len(handle.tiles) == 4
        assert handle.signed

        out, _ = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(out, matrix @ x)

    def test_ragged_tiles_and_signed_input(self, chip, rng):
        matrix = rng.integers(-100, 100, (70, 90))
        x = rng.integers(-128, 128, 90)
        handle = set_matrix(chip, matrix)
        out, _ = exec_mvm_api(chip, handle, x, signed_input=True)
        np.testing.assert_array_equal(out, matrix @ x)

    def test_unoptimized(self, chip, rng):
        matrix = rng.integers(0, 16, (16, 16))
        x = rng.integers(0, 16, 16)
        handle = set_matrix(chip, matrix, 4, Precision.MED)
        optimized, fast = exec_mvm_api(chip, handle, x)
        serial, slow = exec_mvm_api(chip, handle, x, optimized=False)
        np.testing.assert_array_equal(optimized, serial)
        assert fast.cycles < slow.cycles

    def test_bad_inputs(self, chip, rng):
        with pytest.raises(ShapeError):
            set_matrix(chip, np.arange(8))
        with pytest.raises(PlanMismatchError):
            set_matrix(chip, np.full((4, 4), 256))

        handle = set_matrix(chip, rng.integers(0, 256, (8, 8)))
        with pytest.raises(ShapeError):
            exec_mvm_api(chip, handle, np.ones(9, dtype=int))
        with pytest.raises(PlanMismatchError):
            exec_mvm_api(chip, handle, np.full(8, 256))
        with pytest.raises(PlanMismatchError):
            exec_mvm_api(chip, handle, np.full(8, -1))

    def test_capacity(self, rng):
        chip = Chip(ChipConfig(hct_count=1, ace_arrays=2))
        with pytest.raises(CapacityError):
            set_matrix(chip, rng.integers(0, 256, (192, 64)))


@pytest.mark.parametrize("element_bits", [4, 8])
@pytest.mark.parametrize("cell_bits", [1, 2, 4, 8])
class TestMvmGrid:
    @staticmethod
    def _check(chip, rng, element_bits, shape, vectors, analog):
        half = 1 << (element_bits - 1)
        matrix = rng.integers(-half, half, shape)
        handle = set_matrix(chip, matrix, element_bits)
        if not analog:
            disable_analog_mode(chip)
        for _ in range(vectors):
            x = rng.integers(0, 1 << element_bits, shape[1])
            out, _ = exec_mvm_api(chip, handle, x)
            np.testing.assert_array_equal(out, matrix @ x)

    def test_analog(self, element_bits, cell_bits):
        rng = np.random.default_rng(element_bits * 10 + cell_bits)
        chip = Chip(ChipConfig(hct_count=16, cell_bits=cell_bits))
        self._check(chip, rng, element_bits, (32, 32), 100, analog=True)
        self._check(chip, rng, element_bits, (128, 128), 4, analog=True)

    def test_digital_only(self, element_bits, cell_bits):
        rng = np.random.default_rng(element_bits * 100 + cell_bits)
        self._check(Chip(ChipConfig(hct_count=16, cell_bits=cell_bits)), rng, element_bits, (32, 32), 20, analog=False)
        self._check(Chip(ChipConfig(hct_count=16, cell_bits=cell_bits)), rng, element_bits, (128, 128), 2, analog=False)


class TestUpdates:
    def test_update_row(self, chip, rng):
        matrix = rng.integers(0, 256, (128, 64))
        x = rng.integers(0, 256, 64)
        handle = set_matrix(chip, matrix)

        row = rng.integers(0, 256, 64)
        report = update_row(chip, handle, 100, row)
        assert report.counters["arrays_programmed"] == 1
        matrix[100] = row

        out, _ = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(out, matrix @ x)

    def test_update_col(self, chip, rng):
        matrix = rng.integers(0, 256, (64, 128))
        x = rng.integers(0, 256, 128)
        handle = set_matrix(chip, matrix)

        col = rng.integers(0, 256, 64)
        update_col(chip, handle, 3, col)
        matrix[:, 3] = col

        out, _ = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(out, matrix @ x)

    def test_empty_update(self, chip, rng):
        handle = set_matrix(chip, rng.integers(0, 256, (8, 8)))
        assert update_row(chip, handle, 0, []).cycles == 0

    def test_bad_updates(self, chip, rng):
        handle = set_matrix(chip, rng.integers(0, 256, (8, 8)))
        with pytest.raises(MatrixIndexError):
            update_row(chip, handle, 8, np.zeros(8, dtype=int))
        with pytest.raises(IndexError):
            update_col(chip, handle, -1, np.zeros(8, dtype=int))
        with pytest.raises(ShapeError):
            update_row(chip, handle, 0, np.zeros(7, dtype=int))


class TestModes:
    def test_raw_partials_without_digital(self, chip, rng):
        matrix = rng.integers(0, 256, (64, 64))
        x = rng.integers(0, 256, 64)
        handle = set_matrix(chip, matrix, 8, Precision.MED)

        disable_digital_mode(chip)
        partials, _ = exec_mvm_api(chip, handle, x)
        codes = partials[(0, 0)]
        assert codes.shape == (8, 2, 64)
        total = sum(codes[i, j] << (i + 4 * j) for i in range(8) for j in range(2))
        np.testing.assert_array_equal(total, matrix @ x)

        enable_digital_mode(chip)
        out, _ = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(out, matrix @ x)

    def test_digital_only_mvm(self, chip, rng):
        matrix = rng.integers(-128, 128, (32, 32))
        x = rng.integers(0, 256, 32)
        handle = set_matrix(chip, matrix)
        analog, analog_report = exec_mvm_api(chip, handle, x)

        config, moved = disable_analog_mode(chip)
        assert not config.analog_enabled
        assert moved.cycles > 0
        digital, digital_report = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(digital, analog)
        assert digital_report.cycles > analog_report.cycles

        config, restored = enable_analog_mode(chip)
        assert config.analog_enabled
        assert restored.counters["arrays_programmed"] == 1
        out, _ = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(out, matrix @ x)

    def test_set_matrix_with_analog_off(self, chip, rng):
        first = set_matrix(chip, rng.integers(0, 256, (8, 8)))
        disable_analog_mode(chip)
        matrix = rng.integers(0, 256, (16, 16))
        x = rng.integers(0, 256, 16)
        handle = set_matrix(chip, matrix)
        assert handle.tiles[0].vacore.digital is not None
        assert first.tiles[0].vacore.digital is not None
        out, _ = exec_mvm_api(chip, handle, x)
        np.testing.assert_array_equal(out, matrix @ x)

    def test_mode_conflicts(self, chip, rng):
        set_matrix(chip, rng.integers(0, 256, (8, 8)))
        disable_digital_mode(chip)
        with pytest.raises(ModeError):
            disable_analog_mode(chip)
        with pytest.raises(ModeError):
            disable_digital_mode(chip)


PROGRAM = """
# one MVM on HCT 0
VACORE_ALLOC hct=0 vacore=0 bits=8 value=8
PROGRAM      hct=0 vacore=0 matrix=w
WRITE        hct=0 pipe=63 dst=0 bits=8 value=3
PIPELINE_RESERVE hct=0 pipe=1
MVM          hct=0 vacore=0 source=63 base=0 pipe=1 dst=0 bits=8
BARRIER
"""


class TestIsa:
    def test_assemble(self):
        program = assemble(PROGRAM)
        assert [i.opcode for i in program] == [
            Opcode.VACORE_ALLOC, Opcode.PROGRAM, Opcode.WRITE, Opcode.PIPELINE_RESERVE, Opcode.MVM, Opcode.BARRIER,
        ]
        assert program[2] == Instruction(Opcode.WRITE, hct=0, pipeline=63, dst=0, bits=8, value=3)
        assert assemble(disassemble(program)) == program

    def test_line(self):
        text = "ADD hct=0 pipe=2 dst=3 srcs=1,2 bits=16"
        assert assemble(text)[0].line() == text

    @pytest.mark.parametrize("text", [
        "FOO hct=0",
        "ADD hct",
        "ADD pipe=x",
        "ADD colour=3",
        "SHR fill=sideways",
    ])
    def test_syntax_errors(self, text):
        with pytest.raises(ConfigError):
            assemble(text)

    def test_run_mvm(self, chip, rng):
        matrix = rng.integers(0, 256, (8, 8))
        result = run_program(chip, PROGRAM, {"w": matrix})
        assert result.issued == 5
        assert result.cycles >= chip.config.costs.reprogram_cycles

        pipe = chip.hct(0).dce.pipeline(1)
        np.testing.assert_array_equal(pipe.read_register(0, 21, signed=True)[:8], matrix @ np.full(8, 3))

    def test_digital_program(self, chip):
        text = """
        WRITE hct=0 pipe=2 dst=0 bits=8 value=5
        WRITE hct=0 pipe=2 dst=1 bits=8 value=7
        ADD   hct=0 pipe=2 dst=3 srcs=0,1 bits=8
        SHL   hct=0 pipe=2 dst=4 srcs=3 bits=8 amount=2
        """
        result = run_program(chip, text)
        pipe = chip.hct(0).dce.pipeline(2)
        assert pipe.read_register(3, 8)[0] == 12
        assert pipe.read_register(4, 8)[0] == 48
        assert result.report.counters["macro.add"] == 1

    def test_injector_saves_issue_slots(self, rng):
        matrix = rng.integers(0, 256, (8, 8))
        issues = {}
        for iiu in (True, False):
            chip = Chip(ChipConfig(hct_count=8, iiu=iiu))
            run_program(chip, PROGRAM, {"w": matrix})
            issues[iiu] = chip.frontend_issues
        assert issues[True] == 5
        assert issues[False] - issues[True] == 8

    def test_barrier_spans_frontends(self, chip):
        text = """
        WRITE hct=0 pipe=0 dst=0 bits=8 value=1
        WRITE hct=8 pipe=0 dst=0 bits=8 value=1
        BARRIER
        XOR hct=0 pipe=0 dst=1 srcs=0,0 bits=8
        XOR hct=8 pipe=0 dst=1 srcs=0,0 bits=8
        """
        result = run_program(chip, text)
        assert result.issued == 4
        assert chip.hct(8).dce.pipeline(0).read_register(1, 8)[0] == 0

    def test_one_issue_per_frontend_per_cycle(self, chip):
        program = assemble("""
        WRITE hct=0 pipe=0 dst=0 bits=8 value=1
        WRITE hct=1 pipe=0 dst=0 bits=8 value=2
        WRITE hct=8 pipe=0 dst=0 bits=8 value=3
        """)
        runner = ProgramRunner(chip, program)

        first = frontend_step(runner)
        assert first.cycle == 0
        assert [i.hct for i in first.issued] == [0, 8]

        second = frontend_step(runner)
        assert [i.hct for i in second.issued] == [1]
        assert runner.done
        assert chip.hct(1).dce.pipeline(0).read_register(0, 8)[0] == 2

    def test_unknown_matrix(self, chip):
        with pytest.raises(PlanMismatchError):
            run_program(chip, "VACORE_ALLOC hct=0 vacore=0\nPROGRAM hct=0 vacore=0 matrix=missing")

    def test_unallocated_vacore(self, chip):
        with pytest.raises(PlanMismatchError):
            run_program(chip, "MVM hct=0 vacore=4 pipe=1")
