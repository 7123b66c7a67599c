from collections import defaultdict
from enum import Enum
from typing import Dict, Hashable, Optional

from ..errors import AlreadyReservedError, ArbiterConflictError
from ..helpers import OrderedSet
from ..logger import logger


class ArrayMode(Enum):
    ANALOG = "analog"
    DIGITAL = "digital"
    IDLE = "idle"


class Arbiter:
    """
    Per-locus analog/digital arbitration of one HCT.

    A locus (an ACE array or a DCE pipeline) runs one domain at a time and
    serves claims in program order: a claim never starts before the previous
    claim on the same locus has finished.
    """

    __slots__ = ("modes", "busy_until", "reserved", "owners", "trace", "hct_id")

    def __init__(self, trace=None, hct_id: int = 0):
        self.modes: Dict[Hashable, ArrayMode] = defaultdict(lambda: ArrayMode.IDLE)
        self.busy_until: Dict[Hashable, int] = defaultdict(int)
        self.reserved = OrderedSet()
        self.owners: Dict[int, object] = {}
        self.trace = trace
        self.hct_id = hct_id

    def reserve(self, pipeline: int, owner=None, cycle: int = 0):
        if pipeline in self.reserved:
            raise AlreadyReservedError(f"Pipeline {pipeline} of HCT {self.hct_id} is already reserved")
        self.reserved.add(pipeline)
        self.owners[pipeline] = owner
        self._log(cycle, f"pipe{pipeline}", f"reserve owner={owner}")

    def release(self, pipeline: int, cycle: int = 0):
        self.reserved.discard(pipeline)
        self.owners.pop(pipeline, None)
        self._log(cycle, f"pipe{pipeline}", "release")

    def is_reserved(self, pipeline: int) -> bool:
        return pipeline in self.reserved

    def claim(self, locus: Hashable, mode: ArrayMode, start: int, duration: int,
              stall: bool = True) -> int:
        """
        Book ``locus`` in ``mode`` for ``duration`` cycles at or after ``start``.

        With ``stall=False`` a claim that would overlap an in-flight operation
        of the other domain raises ``ArbiterConflictError`` instead of waiting.
        """
        busy = self.busy_until[locus]
        current = self.modes[locus]
        if busy > start and current not in (mode, ArrayMode.IDLE) and not stall:
            raise ArbiterConflictError(
                f"{locus} is busy in {current.value} mode until {busy}; {mode.value} claim at {start}"
            )

        begin = max(start, busy)
        self.modes[locus] = mode
        self.busy_until[locus] = begin + duration
        self._log(begin, locus, f"grant {mode.value} {duration}")
        return begin

    def observe(self, locus: Hashable, mode: ArrayMode, until: int):
        """Record that ``locus`` is occupied in ``mode`` until cycle ``until``."""
        if until > self.busy_until[locus]:
            self.busy_until[locus] = until
            self.modes[locus] = mode

    def _log(self, cycle: int, locus, detail: str):
        if self.trace is not None:
            self.trace.add(cycle, f"hct{self.hct_id}.{locus}", detail, kind="arbiter")
        logger.debug(f"HCT {self.hct_id} arbiter: {locus} {detail} @ {cycle}")

    def mode(self, locus: Hashable) -> ArrayMode:
        return self.modes[locus]

    def owner(self, pipeline: int) -> Optional[object]:
        return self.owners.get(pipeline)
