"""
Flat ``key = value`` configuration files.

::

    # 64-bit pipelines, noisier reads
    chip.adc = ramp
    chip.iiu = false
    geometry.pipeline_depth = 64
    noise.read_sigma = 0.004
    cost.sar_adc_pj = 2.5
    dce.add = 9
    sweep.budget = 640
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Union

from .ace.adc import AdcKind
from .ace.noise import NoiseConfig
from .core.costs import CostTable
from .dce.macros import MacroName
from .dce.microops import LogicFamily
from .errors import ConfigError
from .logger import logger
from .runtime.chip import ChipConfig

GEOMETRY_KEYS = {
    "ace_arrays": "ace_arrays",
    "pipelines": "pipelines",
    "pipeline_depth": "pipeline_depth",
    "array_rows": "array_rows",
    "array_cols": "array_cols",
    "cell_bits": "cell_bits",
}
NOISE_KEYS = {
    "programming_sigma": "programming_sigma",
    "read_sigma": "read_sigma",
    "ir_drop_alpha": "ir_drop_alpha",
    "seed": "rng_seed",
}


@dataclass
class SimConfig:
    chip: ChipConfig = field(default_factory=ChipConfig)
    sweep_budget: int = 640
    sweep_aux_cycles: int = 360
    """Host latency of one AES step on a 16-block batch, for the all-analog sweep point."""
    cnn_argmax_threshold: float = 0.98

    @property
    def costs(self) -> CostTable:
        return self.chip.costs

    @property
    def noise(self) -> NoiseConfig:
        return self.chip.noise


def _bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _optional_int(raw: str):
    return None if raw.lower() in ("none", "") else int(raw)


def parse_pairs(text: str) -> Dict[str, str]:
    pairs = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {n}: expected 'key = value', got {line!r}")
        pairs[key.strip().lower()] = value.strip()
    return pairs


def build_config(pairs: Dict[str, str], base: SimConfig = None) -> SimConfig:
    """Apply ``pairs`` on top of ``base`` (defaults when omitted)."""
    base = base or SimConfig()
    chip = {}
    costs = {}
    noise = {}
    overrides = dict(base.chip.microop_overrides)
    top = {}
    cost_fields = {f.name: f.type for f in fields(CostTable)}

    for key, raw in pairs.items():
        section, _, name = key.partition(".")
        try:
            if section == "cost" and name in cost_fields:
                kind = int if cost_fields[name] in (int, "int") else float
                costs[name] = kind(raw)
            elif section == "noise" and name in NOISE_KEYS:
                noise[NOISE_KEYS[name]] = int(raw) if name == "seed" else float(raw)
            elif section == "geometry" and name in GEOMETRY_KEYS:
                chip[GEOMETRY_KEYS[name]] = int(raw)
            elif key == "chip.hct_count":
                chip["hct_count"] = int(raw)
            elif key == "chip.frontend_fanout":
                chip["frontend_fanout"] = int(raw)
            elif key == "chip.adc":
                chip["adc_kind"] = AdcKind(raw.lower())
                chip.setdefault("hct_count", None)
            elif key == "chip.iiu":
                chip["iiu"] = _bool(raw)
            elif key == "chip.logic_family":
                chip["logic_family"] = LogicFamily(raw.lower())
            elif key == "chip.max_active_pipelines":
                chip["max_active_pipelines"] = _optional_int(raw)
            elif key == "dce.latency_multiplier":
                chip["latency_multiplier"] = int(raw)
            elif section == "dce" and name in {m.value for m in MacroName}:
                overrides[name] = int(raw)
            elif key == "sweep.budget":
                top["sweep_budget"] = int(raw)
            elif key == "sweep.aux_cycles":
                top["sweep_aux_cycles"] = int(raw)
            elif key == "cnn.argmax_threshold":
                top["cnn_argmax_threshold"] = float(raw)
            else:
                raise ConfigError(f"Unknown configuration key {key!r}")
        except ValueError:
            raise ConfigError(f"Bad value {raw!r} for {key!r}")

    try:
        cost_table = replace(base.chip.costs, **costs)
        noise_config = replace(base.chip.noise, **noise)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    if "hct_count" not in chip:
        chip["hct_count"] = base.chip.hct_count

    for name, value in overrides.items():
        if value < 1:
            raise ConfigError(f"Microop count for {name} must be positive, got {value}")

    chip_config = replace(base.chip, costs=cost_table, noise=noise_config, microop_overrides=overrides, **chip)
    config = replace(base, chip=chip_config, **top)
    if config.sweep_budget < 1 or config.sweep_aux_cycles < 0 or not 0 < config.cnn_argmax_threshold <= 1:
        raise ConfigError("sweep.budget, sweep.aux_cycles or cnn.argmax_threshold out of range")
    return config


def load_config(path: Union[str, Path], base: SimConfig = None) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    config = build_config(parse_pairs(text), base)
    logger.debug(f"Loaded config {path}: {config.chip.hct_count} HCTs, adc={config.chip.adc_kind.value}")
    return config


def load_noise(path: Union[str, Path]) -> NoiseConfig:
    """A file holding only ``noise.*`` keys."""
    pairs = parse_pairs(Path(path).read_text())
    unknown = [k for k in pairs if not k.startswith("noise.")]
    if unknown:
        raise ConfigError(f"Noise file {path} holds non-noise keys {unknown}")
    return build_config(pairs).noise
