from .api import (
    MatrixHandle,
    MatrixTile,
    Precision,
    disable_analog_mode,
    disable_digital_mode,
    enable_analog_mode,
    enable_digital_mode,
    exec_mvm_api,
    set_matrix,
    update_col,
    update_row,
)
from .chip import DEFAULT_HCT_COUNT, Chip, ChipConfig, FrontEnd
from .isa import (
    Instruction,
    Opcode,
    ProgramResult,
    ProgramRunner,
    StepResult,
    assemble,
    disassemble,
    frontend_step,
    parse_line,
    run_program,
)

__all__ = [
    "Chip",
    "ChipConfig",
    "DEFAULT_HCT_COUNT",
    "FrontEnd",
    "Instruction",
    "MatrixHandle",
    "MatrixTile",
    "Opcode",
    "Precision",
    "ProgramResult",
    "ProgramRunner",
    "StepResult",
    "assemble",
    "disable_analog_mode",
    "disable_digital_mode",
    "disassemble",
    "enable_analog_mode",
    "enable_digital_mode",
    "exec_mvm_api",
    "frontend_step",
    "parse_line",
    "run_program",
    "set_matrix",
    "update_col",
    "update_row",
]
