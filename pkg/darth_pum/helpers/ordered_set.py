from typing import Generic, Hashable, Iterable, Iterator, List, TypeVar

T = TypeVar("T", bound=Hashable)


class OrderedSet(Generic[T]):
    """Insertion-ordered set; ``take`` hands out the oldest members first."""

    __slots__ = ("_data",)

    def __init__(self, items: Iterable[T] = ()):
        self._data = dict.fromkeys(items)

    def add(self, item: T):
        self._data[item] = None

    def update(self, items: Iterable[T]):
        for item in items:
            self._data[item] = None

    def discard(self, item: T):
        self._data.pop(item, None)

    def remove(self, item: T):
        del self._data[item]

    def take(self, count: int) -> List[T]:
        if count > len(self._data):
            raise KeyError(f"Only {len(self._data)} members left, {count} requested")
        taken = list(self._data)[:count]
        for item in taken:
            del self._data[item]
        return taken

    def clear(self):
        self._data.clear()

    def __contains__(self, item) -> bool:
        return item in self._data

    def __iter__(self) -> Iterator[T]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __bool__(self) -> bool:
        return bool(self._data)

    def __repr__(self):
        return f"OrderedSet({list(self._data)!r})"
