from .element import DigitalComputeElement
from .macros import DEFAULT_MICROOPS, SCRATCH_REGISTERS, MacroName, MacroProgram, expand_macro, macro_library
from .microops import Direction, LogicFamily, MicroopKind, NorMicroop, ShiftFill, gate, nor
from .pipeline import DigitalPipeline, pack_planes, unpack_planes

__all__ = [
    "DigitalComputeElement",
    "DigitalPipeline",
    "DEFAULT_MICROOPS",
    "SCRATCH_REGISTERS",
    "MacroName",
    "MacroProgram",
    "expand_macro",
    "macro_library",
    "Direction",
    "LogicFamily",
    "MicroopKind",
    "NorMicroop",
    "ShiftFill",
    "gate",
    "nor",
    "pack_planes",
    "unpack_planes",
]
