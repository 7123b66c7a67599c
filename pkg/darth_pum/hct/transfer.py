from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.costs import CostReport
from ..helpers import ceil_div
from ..logger import logger


@dataclass(frozen=True)
class TransferEvent:
    bytes: int
    source: str
    dest: str
    shift_amount: int = 0
    transpose: bool = False


class TransferNetwork:
    """
    The intra-HCT network between the ACE outputs and the DCE write ports.

    One transfer at a time; ``free_at`` is the first cycle the network is idle.
    Shift and transposition happen in flight and add no cycles.
    """

    def __init__(self, bytes_per_cycle: int = 8, trace=None, hct_id: int = 0):
        self.bytes_per_cycle = bytes_per_cycle
        self.trace = trace
        self.hct_id = hct_id
        self.free_at = 0
        self.last_start = 0
        self.last_end = 0
        self.bytes_moved = 0

    def cycles(self, nbytes: int) -> int:
        return ceil_div(nbytes, self.bytes_per_cycle)

    def send(self, event: TransferEvent, payload: Optional[np.ndarray] = None,
             earliest: int = 0):
        """
        Move ``payload`` and return ``(delivered, CostReport)``.

        The delivered payload is left-shifted by ``event.shift_amount``; a 2-D
        payload is transposed when ``event.transpose`` is set.
        """
        cycles = self.cycles(event.bytes)
        start = max(earliest, self.free_at)
        self.free_at = start + cycles
        self.last_start, self.last_end = start, start + cycles
        self.bytes_moved += event.bytes

        if self.trace is not None and cycles:
            self.trace.add(
                start, f"hct{self.hct_id}.net",
                f"{event.source}->{event.dest} {event.bytes}B shift={event.shift_amount} transpose={int(event.transpose)}",
                kind="transfer",
            )

        delivered = payload
        if payload is not None:
            delivered = np.asarray(payload, dtype=np.int64)
            if event.shift_amount:
                delivered = delivered << event.shift_amount
            if event.transpose and delivered.ndim == 2:
                delivered = delivered.T

        logger.debug(f"HCT {self.hct_id}: transfer {event.bytes}B {event.source}->{event.dest} @ {start}+{cycles}")
        return delivered, CostReport(cycles=cycles).count("transfer_bytes", event.bytes)
