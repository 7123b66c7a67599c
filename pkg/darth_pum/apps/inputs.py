"""
Reading application inputs.

AES keys and plaintexts are hex strings or raw binary files. Arrays for the
CNN and the encoder are CSV files whose first line is a header::

    # dims=4x8x8 frac_bits=0

followed by the values in row-major order, any number per line.
"""

import re
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from ..errors import ConfigError

_HEADER = re.compile(r"#\s*dims=(?P<dims>\d+(?:x\d+)*)\s+frac_bits=(?P<frac>\d+)\s*$")


def parse_hex(text: str) -> bytes:
    cleaned = "".join(text.split()).lower()
    if cleaned.startswith("0x"):
        cleaned = cleaned[2:]
    try:
        return bytes.fromhex(cleaned)
    except ValueError as e:
        raise ConfigError(f"Not a hex string: {text!r}") from e


def read_bytes(source: Union[str, Path]) -> bytes:
    """A hex string, or a path to a binary file when one exists there."""
    path = Path(str(source))
    if path.is_file():
        return path.read_bytes()
    return parse_hex(str(source))


def split_blocks(data: bytes, size: int = 16) -> List[bytes]:
    if len(data) % size:
        raise ConfigError(f"Input of {len(data)} bytes is not a whole number of {size}-byte blocks")
    return [data[i:i + size] for i in range(0, len(data), size)]


def read_array(path: Union[str, Path]) -> Tuple[np.ndarray, int]:
    """Integer codes and their fraction bits from a headed CSV file."""
    lines = Path(path).read_text().splitlines()
    match = _HEADER.match(lines[0].strip()) if lines else None
    if match is None:
        raise ConfigError(f"{path}: first line must read '# dims=AxB... frac_bits=N'")
    dims = tuple(int(d) for d in match["dims"].split("x"))
    try:
        values = [int(v) for line in lines[1:] for v in line.replace(",", " ").split()]
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    if len(values) != int(np.prod(dims)):
        raise ConfigError(f"{path}: header promises {dims}, found {len(values)} values")
    return np.array(values, dtype=np.int64).reshape(dims), int(match["frac"])


def write_array(path: Union[str, Path], codes, frac_bits: int = 0):
    codes = np.asarray(codes, dtype=np.int64)
    rows = codes.reshape(-1, codes.shape[-1]) if codes.ndim > 1 else codes[None]
    with open(path, "w") as fp:
        fp.write(f"# dims={'x'.join(str(d) for d in codes.shape)} frac_bits={frac_bits}\n")
        for row in rows:
            fp.write(",".join(str(int(v)) for v in row))
            fp.write("\n")
