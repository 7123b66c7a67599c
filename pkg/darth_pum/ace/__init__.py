from .adc import AdcKind, AdcModel, compensate, digitize
from .crossbar import ConductanceArray, Remap, apply_input_bit, positive_current, program_matrix
from .element import AnalogComputeElement
from .noise import NoiseConfig

__all__ = [
    "AdcKind",
    "AdcModel",
    "AnalogComputeElement",
    "ConductanceArray",
    "NoiseConfig",
    "Remap",
    "apply_input_bit",
    "compensate",
    "digitize",
    "positive_current",
    "program_matrix",
]
