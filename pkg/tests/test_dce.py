import numpy as np
import pytest

from darth_pum.dce.element import DigitalComputeElement
from darth_pum.dce.macros import ARITY, MacroName, macro_library
from darth_pum.dce.microops import LogicFamily, ShiftFill, nor
from darth_pum.dce.pipeline import DigitalPipeline
from darth_pum.errors import (
    AddressRangeError,
    ColumnConflictError,
    DirectionError,
    PlanMismatchError,
    ReservedRegisterError,
)
from darth_pum.hct.trace import EventTrace

FAMILIES = [LogicFamily.OSCAR, LogicFamily.IDEAL]


def _pipe(family, **kwargs):
    return DigitalPipeline(0, family=family, **kwargs)


def _loaded(family, a, b, bits):
    pipe = _pipe(family)
    pipe.write_register(0, a, bits)
    pipe.write_register(1, b, bits)
    return pipe


@pytest.mark.parametrize("family", FAMILIES)
class TestMacros:
    def test_bitwise(self, family, rng):
        a = rng.integers(0, 256, 64)
        b = rng.integers(0, 256, 64)
        pipe = _loaded(family, a, b, 8)

        pipe.run_macro(MacroName.AND, 2, (0, 1), 8)
        pipe.run_macro(MacroName.OR, 3, (0, 1), 8)
        pipe.run_macro(MacroName.XOR, 4, (0, 1), 8)
        pipe.run_macro(MacroName.NOT, 5, (0,), 8)
        pipe.run_macro(MacroName.COPY, 6, (1,), 8)

        np.testing.assert_array_equal(pipe.read_register(2, 8), a & b)
        np.testing.assert_array_equal(pipe.read_register(3, 8), a | b)
        np.testing.assert_array_equal(pipe.read_register(4, 8), a ^ b)
        np.testing.assert_array_equal(pipe.read_register(5, 8), ~a & 0xFF)
        np.testing.assert_array_equal(pipe.read_register(6, 8), b)

    def test_add_sub_wrap(self, family, rng):
        a = rng.integers(0, 1 << 16, 64)
        b = rng.integers(0, 1 << 16, 64)
        pipe = _loaded(family, a, b, 16)

        pipe.run_macro(MacroName.ADD, 2, (0, 1), 16)
        pipe.run_macro(MacroName.SUB, 3, (0, 1), 16)

        np.testing.assert_array_equal(pipe.read_register(2, 16), (a + b) & 0xFFFF)
        np.testing.assert_array_equal(pipe.read_register(3, 16), (a - b) & 0xFFFF)

    def test_add_in_place(self, family, rng):
        a = rng.integers(0, 1 << 12, 64)
        b = rng.integers(0, 1 << 12, 64)
        pipe = _loaded(family, a, b, 16)
        pipe.run_macro(MacroName.ADD, 0, (0, 1), 16)
        np.testing.assert_array_equal(pipe.read_register(0, 16), a + b)

    def test_add_carry_in(self, family):
        pipe = _loaded(family, 5, 7, 8)
        pipe.run_macro(MacroName.ADD, 2, (0, 1), 8, carry_in=1)
        assert set(pipe.read_register(2, 8)) == {13}

    def test_signed_compare(self, family, rng):
        a = rng.integers(-128, 128, 64)
        b = rng.integers(-128, 128, 64)
        b[:4] = a[:4]
        pipe = _loaded(family, a, b, 8)
        pipe.run_macro(MacroName.CMP_GE, 2, (0, 1), 8)
        np.testing.assert_array_equal(pipe.read_register(2, 8, signed=True), np.where(a >= b, -1, 0))

    def test_mux(self, family, rng):
        select = np.where(rng.integers(0, 2, 64) == 1, 0xFF, 0)
        a = rng.integers(0, 256, 64)
        b = rng.integers(0, 256, 64)
        pipe = _loaded(family, select, a, 8)
        pipe.write_register(2, b, 8)
        pipe.run_macro(MacroName.MUX, 3, (0, 1, 2), 8)
        np.testing.assert_array_equal(pipe.read_register(3, 8), np.where(select == 0xFF, a, b))

    @pytest.mark.parametrize("amount", [0, 1, 3, 7, 8])
    def test_shifts(self, family, rng, amount):
        a = rng.integers(-128, 128, 64)
        pipe = _loaded(family, a, 0, 8)

        pipe.run_macro(MacroName.SHL, 2, (0,), 8, amount=amount)
        pipe.run_macro(MacroName.SHR, 3, (0,), 8, amount=amount)
        pipe.run_macro(MacroName.SHR, 4, (0,), 8, amount=amount, fill=ShiftFill.SIGN)

        unsigned = a & 0xFF
        np.testing.assert_array_equal(pipe.read_register(2, 8), (unsigned << amount) & 0xFF)
        np.testing.assert_array_equal(pipe.read_register(3, 8), unsigned >> amount)
        np.testing.assert_array_equal(pipe.read_register(4, 8, signed=True), a >> min(amount, 7))

    def test_rotate_needs_reverse(self, family, rng):
        a = rng.integers(0, 256, 64)
        pipe = _loaded(family, a, 0, 8)
        with pytest.raises(DirectionError):
            pipe.run_macro(MacroName.SHR, 2, (0,), 8, amount=3, fill=ShiftFill.WRAP)

        pipe.reverse()
        pipe.run_macro(MacroName.SHR, 2, (0,), 8, amount=3, fill=ShiftFill.WRAP)
        np.testing.assert_array_equal(pipe.read_register(2, 8), ((a >> 3) | (a << 5)) & 0xFF)

    def test_splat(self, family, rng):
        a = rng.integers(0, 256, 64)
        pipe = _loaded(family, a, 0, 8)
        pipe.run_macro(MacroName.SPLAT, 2, (0,), 8, amount=5)
        np.testing.assert_array_equal(pipe.read_register(2, 8), np.where((a >> 5) & 1, 0xFF, 0))

    def test_row_mask(self, family, rng):
        a = rng.integers(0, 256, 64)
        b = rng.integers(0, 256, 64)
        mask = np.arange(64) % 2 == 0
        pipe = _loaded(family, a, b, 8)
        pipe.run_macro(MacroName.XOR, 2, (0, 1), 8, row_mask=mask)
        np.testing.assert_array_equal(pipe.read_register(2, 8), np.where(mask, a ^ b, 0))


def _signed(values, bits):
    return np.where(values >> (bits - 1), values - (1 << bits), values)


class TestMacroOracles:
    def test_random_macros(self):
        rng = np.random.default_rng(4242)
        pipes = {family: _pipe(family) for family in FAMILIES}
        names = list(MacroName)
        for case in range(10_000):
            pipe = pipes[FAMILIES[case % 2]]
            name = names[rng.integers(len(names))]
            bits = int(rng.integers(1, 17))
            mask = (1 << bits) - 1
            a, b, s = (rng.integers(0, 1 << bits, 64) for _ in range(3))
            for reg, values in enumerate((a, b, s)):
                pipe.write_register(reg, values, bits)
            amount = int(rng.integers(0, bits))
            fill = ShiftFill.SIGN if name is MacroName.SHR and case % 3 == 0 else ShiftFill.ZERO

            srcs = (0, 1, 2)[:ARITY[name]]
            if name is MacroName.MUX:
                srcs = (2, 0, 1)
            pipe.run_macro(name, 3, srcs, bits, amount=amount, fill=fill)

            expected = {
                MacroName.NOT: ~a & mask,
                MacroName.AND: a & b,
                MacroName.OR: a | b,
                MacroName.XOR: a ^ b,
                MacroName.ADD: (a + b) & mask,
                MacroName.SUB: (a - b) & mask,
                MacroName.COPY: a,
                MacroName.SHL: (a << amount) & mask,
                MacroName.SHR: (_signed(a, bits) >> amount) & mask if fill is ShiftFill.SIGN else a >> amount,
                MacroName.CMP_GE: np.where(_signed(a, bits) >= _signed(b, bits), mask, 0),
                MacroName.MUX: (s & a) | (~s & b & mask),
                MacroName.SPLAT: np.where((a >> amount) & 1, mask, 0),
            }[name]
            np.testing.assert_array_equal(pipe.read_register(3, bits), expected, err_msg=f"{name.value} {bits} bits")

class TestMacroTiming:
    @pytest.mark.parametrize("family, name, bits, amount, latency", [
        (LogicFamily.OSCAR, MacroName.ADD, 8, 0, 9 * 8 + 63),
        (LogicFamily.IDEAL, MacroName.ADD, 8, 0, 5 * 8 + 63),
        (LogicFamily.OSCAR, MacroName.XOR, 32, 0, 5 * 32 + 63),
        (LogicFamily.OSCAR, MacroName.CMP_GE, 8, 0, 10 * 8 + 20 + 63),
        (LogicFamily.IDEAL, MacroName.CMP_GE, 8, 0, 6 * 8 + 6 + 63),
        (LogicFamily.OSCAR, MacroName.SHL, 8, 3, 3 + 63),
    ])
    def test_latency(self, family, name, bits, amount, latency):
        report = _pipe(family).run_macro(name, 2, (0, 1)[:macro_library(family)[name].arity], bits, amount=amount)
        assert report.cycles == latency
        assert report.counters[f"macro.{name.value}"] == 1

    def test_ideal_never_slower(self):
        oscar, ideal = macro_library(LogicFamily.OSCAR), macro_library(LogicFamily.IDEAL)
        for name in MacroName:
            assert ideal[name].latency(16, 64, 4) <= oscar[name].latency(16, 64, 4)

    def test_overrides(self):
        library = macro_library(LogicFamily.OSCAR, {"add": 4})
        assert library[MacroName.ADD].latency(8, 64) == 4 * 8 + 63
        assert library[MacroName.SUB].latency(8, 64) == 10 * 8 + 63

    def test_latency_multiplier(self):
        report = DigitalPipeline(0, latency_multiplier=2).run_macro(MacroName.XOR, 2, (0, 1), 8)
        assert report.cycles == 2 * (5 * 8 + 63)

    def test_independent_macros_pipeline(self):
        pipe = _pipe(LogicFamily.OSCAR)
        pipe.run_macro(MacroName.XOR, 2, (0, 1), 8)
        pipe.run_macro(MacroName.XOR, 5, (3, 4), 8)
        assert pipe.last_start == 5

    def test_non_chaining_consumer_waits(self):
        pipe = _pipe(LogicFamily.OSCAR)
        pipe.run_macro(MacroName.XOR, 2, (0, 1), 8)
        pipe.run_macro(MacroName.SHL, 3, (2,), 8, amount=1)
        assert pipe.last_start == 5 * 8 + 63

    def test_reverse_drains(self):
        pipe = _pipe(LogicFamily.OSCAR)
        pipe.run_macro(MacroName.XOR, 2, (0, 1), 8)
        report = pipe.reverse()
        assert report.cycles == (5 * 8 + 63) - 5 + 64
        assert report.counters["reversals"] == 1

    def test_trace_records_microops(self):
        trace = EventTrace()
        pipe = DigitalPipeline(3, trace=trace)
        report = pipe.run_macro(MacroName.XOR, 2, (0, 1), 8)
        assert len(trace.at("hct0.pipe3")) == report.counters["microops"] == 5


class TestPipelineErrors:
    def test_register_range(self):
        pipe = _pipe(LogicFamily.OSCAR)
        assert pipe.user_registers == 54
        with pytest.raises(PlanMismatchError):
            pipe.run_macro(MacroName.ADD, 54, (0, 1), 8)

    def test_width_range(self):
        with pytest.raises(PlanMismatchError):
            _pipe(LogicFamily.OSCAR).run_macro(MacroName.ADD, 2, (0, 1), 65)

    def test_arity(self):
        with pytest.raises(PlanMismatchError):
            _pipe(LogicFamily.OSCAR).run_macro(MacroName.ADD, 2, (0,), 8)

    def test_not_in_place(self):
        with pytest.raises(ColumnConflictError):
            _pipe(LogicFamily.OSCAR).run_macro(MacroName.NOT, 0, (0,), 8)

    def test_nor_alias(self):
        pipe = _pipe(LogicFamily.OSCAR)
        with pytest.raises(ColumnConflictError):
            pipe.exec_nor(nor(1, 2, 1, 0, 8))
        report = pipe.exec_nor(nor(1, 2, 3, 0, 8))
        assert report.cycles == 1
        assert pipe.read_register(3, 8)[0] == 0xFF

    def test_reserved_pipeline(self):
        pipe = _pipe(LogicFamily.OSCAR)
        pipe.reserved_by = "mvm"
        with pytest.raises(ReservedRegisterError):
            pipe.run_macro(MacroName.XOR, 2, (0, 1), 8)
        with pytest.raises(ReservedRegisterError):
            pipe.write_register(0, 1, 8)
        pipe.run_macro(MacroName.XOR, 2, (0, 1), 8, owner="mvm")


class TestElementAccess:
    def test_gather(self, rng):
        dce = DigitalComputeElement(pipelines=4)
        table = rng.integers(0, 256, 64)
        addrs = rng.permutation(64)
        dce.pipeline(1).write_register(0, table, 8)
        dce.pipeline(0).write_register(0, addrs, 8)

        report = dce.element_load(0, 0, 1, 1, 0, 8)
        np.testing.assert_array_equal(dce.pipeline(0).read_register(1, 8), table[addrs])
        assert report.cycles == 3 * 64
        assert report.counters["element_accesses"] == 64

    def test_gather_spans_registers(self, rng):
        dce = DigitalComputeElement(pipelines=2)
        table = rng.integers(0, 256, 256)
        for r in range(4):
            dce.pipeline(1).write_register(r, table[r * 64:(r + 1) * 64], 8)
        addrs = rng.integers(0, 256, 64)
        dce.pipeline(0).write_register(0, addrs, 8)

        dce.element_load(0, 0, 1, 1, 0, 8, source_registers=4)
        np.testing.assert_array_equal(dce.pipeline(0).read_register(1, 8), table[addrs])

    def test_gather_out_of_range(self):
        dce = DigitalComputeElement(pipelines=2)
        dce.pipeline(0).write_register(0, np.arange(64) + 1, 8)
        with pytest.raises(AddressRangeError):
            dce.element_load(0, 0, 1, 1, 0, 8, source_registers=1)

    def test_gather_across_hcts(self):
        local = DigitalPipeline(0, hct_id=0)
        remote = DigitalPipeline(0, hct_id=1)
        with pytest.raises(AddressRangeError):
            local.element_load(0, 1, remote, 0, 8)

    def test_scatter(self, rng):
        dce = DigitalComputeElement(pipelines=2)
        addrs = rng.permutation(64)
        data = rng.integers(0, 256, 64)
        dce.pipeline(0).write_register(0, addrs, 8)
        dce.pipeline(0).write_register(1, data, 8)

        dce.element_store(0, 0, 1, 1, 2, 8, dest_registers=1)
        expected = np.zeros(64, dtype=np.int64)
        expected[addrs] = data
        np.testing.assert_array_equal(dce.pipeline(1).read_register(2, 8), expected)

    def test_pipeline_range(self):
        with pytest.raises(AddressRangeError):
            DigitalComputeElement(pipelines=4).pipeline(4)


class TestDigitalComputeElement:
    def test_active_pipeline_cap(self):
        capped = DigitalComputeElement(pipelines=2, max_active_pipelines=1)
        capped.run_macro(0, MacroName.XOR, 2, (0, 1), 8)
        capped.run_macro(1, MacroName.XOR, 2, (0, 1), 8)
        assert capped.pipeline(1).last_start == 5 * 8 + 63

        free = DigitalComputeElement(pipelines=2)
        free.run_macro(0, MacroName.XOR, 2, (0, 1), 8)
        free.run_macro(1, MacroName.XOR, 2, (0, 1), 8)
        assert free.pipeline(1).last_start == 0

    def test_cap_counts_pipelines_not_macros(self):
        capped = DigitalComputeElement(pipelines=3, max_active_pipelines=2)
        capped.run_macro(0, MacroName.XOR, 2, (0, 1), 8)
        capped.run_macro(0, MacroName.XOR, 3, (0, 1), 8)
        assert capped.pipeline(0).last_start == 5

        capped.run_macro(1, MacroName.XOR, 2, (0, 1), 8)
        assert capped.pipeline(1).last_start == 0
        assert capped.active_pipelines(50) == 2

        capped.run_macro(2, MacroName.XOR, 2, (0, 1), 8)
        assert capped.pipeline(2).last_start == 5 * 8 + 63

    def test_energy_matches_reports(self):
        dce = DigitalComputeElement(pipelines=2)
        total = 0.0
        total += dce.run_macro(0, MacroName.ADD, 2, (0, 1), 16).total_energy_pj
        total += dce.run_macro(1, MacroName.XOR, 2, (0, 1), 8).total_energy_pj
        total += dce.run_macro(1, MacroName.SHL, 3, (2,), 8, amount=2).total_energy_pj
        assert dce.energy_pj() == pytest.approx(total)
        assert dce.finish_time == max(p.retire_at for p in dce.materialised)
