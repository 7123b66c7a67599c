import pytest

from darth_pum.ace.adc import AdcKind
from darth_pum.config import SimConfig, build_config, load_config, load_noise, parse_pairs
from darth_pum.dce.microops import LogicFamily
from darth_pum.errors import ConfigError

EXAMPLE = """
# ramp chip with a slower adder
chip.adc = ramp
chip.iiu = false
chip.logic_family = ideal
geometry.pipeline_depth = 32
noise.read_sigma = 0.004
noise.seed = 9
cost.sar_adc_pj = 2.5
dce.add = 12
sweep.budget = 320
cnn.argmax_threshold = 0.9
"""


class TestParsePairs:
    def test_comments_and_case(self):
        pairs = parse_pairs("Chip.ADC = sar   # trailing\n\n  sweep.budget=640\n")
        assert pairs == {"chip.adc": "sar", "sweep.budget": "640"}

    @pytest.mark.parametrize("text", ["chip.adc", "= 3"])
    def test_malformed(self, text):
        with pytest.raises(ConfigError, match="line 1"):
            parse_pairs(text)


class TestBuildConfig:
    def test_example(self):
        config = build_config(parse_pairs(EXAMPLE))
        chip = config.chip
        assert chip.adc_kind is AdcKind.RAMP
        assert chip.hct_count == 1660
        assert not chip.iiu
        assert chip.logic_family is LogicFamily.IDEAL
        assert chip.pipeline_depth == 32
        assert config.noise.read_sigma == 0.004
        assert config.noise.rng_seed == 9
        assert config.costs.sar_adc_pj == 2.5
        assert chip.microop_overrides == {"add": 12}
        assert config.sweep_budget == 320
        assert config.cnn_argmax_threshold == 0.9

    def test_explicit_hct_count_wins(self):
        config = build_config({"chip.hct_count": "8", "chip.adc": "ramp"})
        assert config.chip.hct_count == 8

    def test_layers_on_base(self):
        base = build_config({"chip.hct_count": "4"})
        config = build_config({"sweep.aux_cycles": "100"}, base)
        assert config.chip.hct_count == 4
        assert config.sweep_aux_cycles == 100

    def test_defaults(self):
        config = SimConfig()
        assert config.sweep_budget == 640
        assert config.sweep_aux_cycles == 360
        assert config.noise.is_off

    @pytest.mark.parametrize("pairs", [
        {"chip.colour": "blue"},
        {"cost.nonsense": "1"},
        {"chip.adc": "flash"},
        {"chip.iiu": "maybe"},
        {"geometry.pipelines": "many"},
        {"geometry.pipelines": "0"},
        {"dce.add": "0"},
        {"sweep.budget": "0"},
        {"cnn.argmax_threshold": "1.5"},
    ])
    def test_invalid(self, pairs):
        with pytest.raises(ConfigError):
            build_config(pairs)


class TestFiles:
    def test_load_config(self, tmp_path):
        path = tmp_path / "chip.conf"
        path.write_text(EXAMPLE)
        assert load_config(path).chip.adc_kind is AdcKind.RAMP

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.conf")

    def test_load_noise(self, tmp_path):
        path = tmp_path / "noise.conf"
        path.write_text("noise.ir_drop_alpha = 0.2\nnoise.programming_sigma = 0.01\n")
        noise = load_noise(path)
        assert noise.ir_drop_alpha == 0.2
        assert noise.programming_sigma == 0.01

    def test_noise_file_rejects_other_keys(self, tmp_path):
        path = tmp_path / "noise.conf"
        path.write_text("noise.read_sigma = 0.01\nchip.adc = ramp\n")
        with pytest.raises(ConfigError):
            load_noise(path)
