from dataclasses import dataclass, fields

import numpy as np


@dataclass(frozen=True)
class NoiseConfig:
    """
    Parameterised proxies for analog non-idealities.

    Sigmas are in conductance-level units. ``ir_drop_alpha`` is the fraction
    of the positive-rail bitline current lost to droop. All three at zero give
    bit-exact ideal arithmetic.
    """

    programming_sigma: float = 0.002
    read_sigma: float = 0.002
    ir_drop_alpha: float = 0.11
    rng_seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"NoiseConfig.{f.name} must be non-negative")

    @classmethod
    def off(cls, rng_seed: int = 0) -> "NoiseConfig":
        return cls(0.0, 0.0, 0.0, rng_seed)

    @property
    def is_off(self) -> bool:
        return not (self.programming_sigma or self.read_sigma or self.ir_drop_alpha)

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Independent generator per stream (one per ACE) derived from the seed."""
        return np.random.default_rng([self.rng_seed, stream])
