from .ordered_set import OrderedSet
from .utils import ceil_div, chunked

__all__ = ["OrderedSet", "ceil_div", "chunked"]
