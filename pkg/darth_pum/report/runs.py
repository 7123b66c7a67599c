"""
One-call application runs that end in a ``RunReport``.

Each runner builds a fresh chip from the configuration, draws its model and
inputs from ``numpy.random.default_rng(seed)`` unless they are given, and
optionally checks the result against the host oracle.
"""

from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..ace.noise import NoiseConfig
from ..apps.aes import BLOCKS_PER_LANE, COLUMN_BITS, aes_encrypt, aes_init_arrays
from ..apps.cnn import (
    IMAGE_SIZE,
    INPUT_BITS,
    TinyCnn,
    cnn_argmax_agreement,
    cnn_change_activation,
    cnn_reference,
    cnn_run_inference,
    cnn_set_model,
)
from ..apps.encoder import (
    DIM,
    SEQ_LEN,
    TinyEncoder,
    encoder_reference,
    llm_build_encoder,
    llm_change_activation,
    llm_run_inference,
)
from ..config import SimConfig, load_noise
from ..errors import ConfigError, OracleMismatchError
from ..helpers import ceil_div
from ..logger import logger
from ..runtime.chip import Chip
from .run_report import RunReport

APPS = ("aes", "cnn", "llm")
DEFAULT_NOISE = {"aes": "default", "cnn": "off", "llm": "off"}
ENCODER_TOLERANCE = 2.0 ** -4


def resolve_noise(choice: Optional[str], app: str, seed: int) -> NoiseConfig:
    """``off``, ``default`` or a path to a file of ``noise.*`` keys; ``None`` picks the app default."""
    choice = choice or DEFAULT_NOISE[app]
    if choice == "off":
        return NoiseConfig.off(seed)
    if choice == "default":
        return NoiseConfig(rng_seed=seed)
    if not Path(choice).is_file():
        raise ConfigError(f"--noise must be off, default or a noise file, got {choice!r}")
    return replace(load_noise(choice), rng_seed=seed)


def build_chip(config: SimConfig, noise: NoiseConfig, trace=None) -> Chip:
    return Chip(replace(config.chip, noise=noise), trace=trace)


def _report(app: str, chip: Chip, cost, batch: int, seed: int, **extra) -> RunReport:
    extra["hcts_used"] = chip.next_placement()
    return RunReport.from_cost(app, chip.config, cost, batch, seed=seed, extra=extra)


def run_aes(config: SimConfig, seed: int = 0, blocks: Union[int, Sequence[bytes]] = 1,
            key: Optional[bytes] = None, noise: Optional[str] = None, check_oracle: bool = False,
            trace=None) -> RunReport:
    rng = np.random.default_rng(seed)
    if key is None:
        key = rng.integers(0, 256, 16, dtype=np.uint8).tobytes()
    if isinstance(blocks, int):
        blocks = [rng.integers(0, 256, 16, dtype=np.uint8).tobytes() for _ in range(blocks)]

    chip = build_chip(config, resolve_noise(noise, "aes", seed), trace)
    ctx = aes_init_arrays(chip, key, lanes=max(1, ceil_div(len(blocks), BLOCKS_PER_LANE)))
    out, cost = aes_encrypt(ctx, blocks, check_oracle=check_oracle)
    logger.debug(f"run_aes: {len(blocks)} blocks, seed {seed}")
    return _report(
        "aes", chip, cost, len(blocks), seed,
        rounds=ctx.rounds, ciphertext=b"".join(out).hex(), oracle_checked=check_oracle,
        mixcolumns_conversion_cycles=ctx.adc.latency(COLUMN_BITS, chip.costs),
    )


def run_cnn(config: SimConfig, seed: int = 0, images: Union[int, np.ndarray] = 1, batch: int = 1,
            model: Optional[TinyCnn] = None, activation=None, noise: Optional[str] = None,
            check_oracle: bool = False, trace=None) -> RunReport:
    rng = np.random.default_rng(seed)
    model = model or TinyCnn.random(rng)
    if activation is not None:
        model = cnn_change_activation(model, activation)
    if isinstance(images, int):
        images = rng.integers(0, 1 << INPUT_BITS, (images, IMAGE_SIZE, IMAGE_SIZE))

    chip = build_chip(config, resolve_noise(noise, "cnn", seed), trace)
    setup = cnn_set_model(chip, model)
    logits, cost = cnn_run_inference(chip, model, images, batch=batch)
    reference = cnn_reference(model, images)
    agreement = cnn_argmax_agreement(logits, reference)
    if check_oracle:
        noiseless = chip.config.noise.is_off
        if noiseless and not np.array_equal(logits, reference):
            raise OracleMismatchError("CNN logits differ from the fixed-point reference")
        if not noiseless and agreement < config.cnn_argmax_threshold:
            raise OracleMismatchError(
                f"CNN argmax agreement {agreement:.3f} below {config.cnn_argmax_threshold}"
            )
    return _report(
        "cnn", chip, cost, len(logits), seed,
        argmax_agreement=agreement, setup_cycles=setup.report.cycles, oracle_checked=check_oracle,
    )


def run_llm(config: SimConfig, seed: int = 0, sequences: Union[int, np.ndarray] = 1,
            model: Optional[TinyEncoder] = None, activation=None, noise: Optional[str] = None,
            check_oracle: bool = False, trace=None) -> RunReport:
    rng = np.random.default_rng(seed)
    model = model or TinyEncoder.random(rng)
    if activation is not None:
        model = llm_change_activation(model, activation)
    if isinstance(sequences, int):
        sequences = rng.normal(0.0, 1.0, (sequences, SEQ_LEN, DIM))

    chip = build_chip(config, resolve_noise(noise, "llm", seed), trace)
    setup = llm_build_encoder(chip, model)
    outputs, cost = llm_run_inference(chip, model, sequences)
    error = float(np.abs(outputs - encoder_reference(model, sequences)).max())
    if check_oracle and error > ENCODER_TOLERANCE:
        raise OracleMismatchError(f"Encoder output off the reference by {error:.4f}")
    return _report(
        "llm", chip, cost, len(outputs), seed,
        max_abs_error=error, setup_cycles=setup.report.cycles, oracle_checked=check_oracle,
    )


RUNNERS = {"aes": run_aes, "cnn": run_cnn, "llm": run_llm}


def run_app(app: str, config: SimConfig, seed: int = 0, size: int = 1, **kwargs) -> RunReport:
    """``size`` is blocks, images or sequences depending on ``app``."""
    if app not in RUNNERS:
        raise ConfigError(f"Unknown application {app!r}, expected one of {', '.join(APPS)}")
    return RUNNERS[app](config, seed, size, **kwargs)
