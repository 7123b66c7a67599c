from itertools import islice
from typing import Iterable, Iterator, List, TypeVar

T = TypeVar("T")


def chunked(items: Iterable[T], size: int) -> Iterator[List[T]]:
    """
    Lazily split ``items`` into lists of at most ``size`` members.

    The last chunk may be shorter.
    """
    if size < 1:
        raise ValueError(f"Chunk size must be positive, got {size}")
    it = iter(items)
    while True:
        chunk = list(islice(it, size))
        if not chunk:
            return
        yield chunk


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)
