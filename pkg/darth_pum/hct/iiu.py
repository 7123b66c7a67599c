from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

from ..dce.macros import MacroName
from ..logger import logger


@dataclass(frozen=True)
class IiuProgram:
    """
    A one-entry template table plus a repetition counter.

    Repetition ``k`` accumulates partial-bank slot ``first + k * stride`` into
    the accumulator. Repetitions from ``subtract_from`` on subtract instead
    (the sign-bit partials of a two's-complement input).
    """

    template: MacroName = MacroName.ADD
    stride: int = 1
    repetitions: int = 0

    def expand(self, accumulator: int, first: int = 0, count: Optional[int] = None,
               subtract_from: Optional[int] = None) -> Iterator[Tuple[MacroName, int, int]]:
        count = self.repetitions if count is None else count
        for k in range(count):
            macro = self.template
            if subtract_from is not None and k >= subtract_from:
                macro = MacroName.SUB
            yield macro, accumulator, first + k * self.stride


class InstructionInjector:
    """
    Expands reduction programs next to the DCE.

    With the injector enabled a whole reduction costs the front end one issue
    slot (the trigger); disabled, every expanded macro is a front-end issue.
    """

    def __init__(self, enabled: bool = True, hct_id: int = 0):
        self.enabled = enabled
        self.hct_id = hct_id
        self.triggers = 0
        self.injected = 0

    def frontend_issues(self, expanded: int) -> int:
        if self.enabled:
            return 1
        return 1 + expanded

    def run(self, program: IiuProgram, accumulator: int, first: int = 0, count: Optional[int] = None,
            subtract_from: Optional[int] = None):
        ops = list(program.expand(accumulator, first, count, subtract_from))
        self.triggers += 1
        if self.enabled:
            self.injected += len(ops)
        logger.debug(f"HCT {self.hct_id}: IIU expanded {len(ops)} x {program.template.value} (enabled={self.enabled})")
        return ops
