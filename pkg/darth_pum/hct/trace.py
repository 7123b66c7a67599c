"""
Cycle-stamped event trace.

Events are indexed two ways: by cycle in a ``SortedDict`` for range queries,
and by locus (``hct0.pipe3``, ``hct0.ace``, ``hct0.net`` ...) in insertion
order. One event serialises to one line: ``cycle,locus,kind,detail``.
"""

from collections import defaultdict
from dataclasses import dataclass
from itertools import chain
from typing import IO, Iterator, List, Optional

from sortedcontainers import SortedDict


@dataclass(frozen=True)
class Event:
    __slots__ = ("cycle", "locus", "kind", "detail")

    cycle: int
    locus: str
    kind: str
    detail: str

    def line(self) -> str:
        return f"{self.cycle},{self.locus},{self.kind},{self.detail}"


class EventTrace:
    __slots__ = ("by_cycle", "by_locus", "_count")

    def __init__(self):
        self.by_cycle = SortedDict()
        self.by_locus = defaultdict(list)
        self._count = 0

    def add(self, cycle: int, locus: str, detail: str, kind: str = "microop") -> Event:
        event = Event(cycle, locus, kind, detail)
        if cycle in self.by_cycle:
            self.by_cycle[cycle].append(event)
        else:
            self.by_cycle[cycle] = [event]
        self.by_locus[locus].append(event)
        self._count += 1
        return event

    def query(self, gt=None, gte=None, lt=None, lte=None) -> Iterator[Event]:
        """Events whose cycle falls in the given bounds, in cycle order."""
        min_key = gte if gte is not None else gt
        max_key = lte if lte is not None else lt

        cycles = self.by_cycle.irange(
            minimum=min_key,
            maximum=max_key,
            inclusive=(gte is not None, lte is not None or lt is None),
        )
        return chain.from_iterable(self.by_cycle[c] for c in cycles)

    def at(self, locus: str, kind: Optional[str] = None) -> List[Event]:
        events = self.by_locus.get(locus, [])
        if kind is None:
            return list(events)
        return [e for e in events if e.kind == kind]

    def of_kind(self, kind: str) -> List[Event]:
        return [e for e in self if e.kind == kind]

    def dump(self, fp: IO[str]):
        for event in self:
            fp.write(event.line())
            fp.write("\n")

    def __iter__(self) -> Iterator[Event]:
        return chain.from_iterable(self.by_cycle.values())

    def __len__(self) -> int:
        return self._count
