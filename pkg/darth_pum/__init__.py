from .config import SimConfig, load_config
from .runtime import Chip, ChipConfig, Precision, exec_mvm_api, set_matrix

__all__ = [
    "Chip",
    "ChipConfig",
    "Precision",
    "SimConfig",
    "exec_mvm_api",
    "load_config",
    "set_matrix",
]

__version__ = '0.1.0'
