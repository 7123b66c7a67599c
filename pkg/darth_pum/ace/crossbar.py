"""
Differential-pair crossbars and the programming / read path.

A matrix is stored input-major: crossbar row ``r`` is driven by input ``r``
and bitline ``c`` accumulates output ``c``.
"""

from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from ..core.slicing import SlicePlan, slice_array
from ..errors import CapacityError, PlanMismatchError
from ..logger import logger
from .noise import NoiseConfig


class Remap(Enum):
    RAW = "raw"
    SYMMETRIC = "symmetric"


class ConductanceArray:
    """One ``rows`` x ``cols`` crossbar of (g_plus, g_minus) cell pairs."""

    __slots__ = ("index", "rows", "cols", "bits_per_cell", "g_plus", "g_minus",
                 "p_plus", "p_minus", "scale", "remap", "shape")

    def __init__(self, index: int = 0, rows: int = 64, cols: int = 64):
        self.index = index
        self.rows = rows
        self.cols = cols
        self.clear()

    def clear(self):
        self.bits_per_cell = 1
        self.g_plus = np.zeros((self.rows, self.cols), dtype=np.int16)
        self.g_minus = np.zeros((self.rows, self.cols), dtype=np.int16)
        self.p_plus = np.zeros((self.rows, self.cols))
        self.p_minus = np.zeros((self.rows, self.cols))
        self.scale = 1.0
        self.remap = Remap.RAW
        self.shape = (0, 0)

    @property
    def stored(self) -> np.ndarray:
        """Ideal stored level difference per cell."""
        return self.g_plus.astype(np.int64) - self.g_minus

    def conductance(self) -> np.ndarray:
        return self.scale * ((self.g_plus + self.p_plus) - (self.g_minus + self.p_minus))

    def positive_rail(self) -> np.ndarray:
        return self.scale * (self.g_plus + self.p_plus)

    def __repr__(self):
        return f"ConductanceArray(index={self.index}, shape={self.shape}, M={self.bits_per_cell}, {self.remap.value})"


def _perturbation(rng: Optional[np.random.Generator], sigma: float, shape) -> np.ndarray:
    if not sigma or rng is None:
        return np.zeros(shape)
    return np.clip(rng.normal(0.0, sigma, shape), -3 * sigma, 3 * sigma)


def program_matrix(arrays: Sequence[ConductanceArray], matrix, plan: SlicePlan,
                   remap: Remap = Remap.RAW, noise: Optional[NoiseConfig] = None,
                   rng: Optional[np.random.Generator] = None) -> List[ConductanceArray]:
    """
    Store ``matrix`` (rows = inputs, cols = outputs) bit-sliced over ``arrays``.

    Slice ``i`` goes to ``arrays[i]``. Signed values place their magnitude on
    the plus or minus device of the pair. SYMMETRIC stores each 0/1 bit as a
    half-scaled pair (``+1/2`` for 1, ``-1/2`` for 0).
    """
    matrix = np.asarray(matrix, dtype=np.int64)
    if matrix.ndim != 2:
        raise PlanMismatchError(f"Expected a 2-D matrix, got shape {matrix.shape}")
    if plan.slice_count > len(arrays):
        raise CapacityError(f"{plan.slice_count} slices need as many arrays, {len(arrays)} given")

    rows, cols = matrix.shape
    if any(rows > a.rows or cols > a.cols for a in arrays[:plan.slice_count]):
        raise CapacityError(f"Matrix {matrix.shape} does not fit a {arrays[0].rows}x{arrays[0].cols} array")

    if remap is Remap.SYMMETRIC:
        if plan.element_bits != 1 or plan.bits_per_cell != 1:
            raise PlanMismatchError("SYMMETRIC remap needs a 1-bit matrix at 1 bit per cell")
        if matrix.size and (matrix.min() < 0 or matrix.max() > 1):
            raise PlanMismatchError("SYMMETRIC remap needs a 0/1 matrix")
        plus_slices = matrix[None]
        minus_slices = 1 - matrix[None]
        scale = 0.5
    else:
        magnitude = np.abs(matrix)
        slices = slice_array(magnitude, plan)
        plus_slices = np.where(matrix > 0, slices, 0)
        minus_slices = np.where(matrix < 0, slices, 0)
        scale = 1.0

    sigma = noise.programming_sigma if noise is not None else 0.0
    for i in range(plan.slice_count):
        array = arrays[i]
        array.clear()
        array.bits_per_cell = plan.bits_per_cell
        array.scale = scale
        array.remap = remap
        array.shape = (rows, cols)
        array.g_plus[:rows, :cols] = plus_slices[i]
        array.g_minus[:rows, :cols] = minus_slices[i]
        array.p_plus[:rows, :cols] = _perturbation(rng, sigma, (rows, cols))
        array.p_minus[:rows, :cols] = _perturbation(rng, sigma, (rows, cols))

    logger.debug(f"Programmed {matrix.shape} matrix into arrays {[a.index for a in arrays[:plan.slice_count]]} ({remap.value})")
    return list(arrays[:plan.slice_count])


def _input_vector(array: ConductanceArray, input_bits) -> np.ndarray:
    bits = np.asarray(input_bits, dtype=float)
    x = np.zeros(bits.shape[:-1] + (array.rows,))
    x[..., :bits.shape[-1]] = bits
    return x


def positive_current(array: ConductanceArray, input_bits) -> np.ndarray:
    """Raw positive-rail bitline currents before any droop."""
    return _input_vector(array, input_bits) @ array.positive_rail()


def apply_input_bit(array: ConductanceArray, input_bits, noise: Optional[NoiseConfig] = None,
                    rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Drive one bit per wordline and return the analog sum of every bitline.

    A 2-D ``input_bits`` applies a batch of independent input vectors.
    """
    x = _input_vector(array, input_bits)
    sums = x @ array.conductance()
    if noise is None:
        return sums

    if noise.read_sigma and rng is not None:
        sums = sums + rng.normal(0.0, noise.read_sigma, sums.shape)
    if noise.ir_drop_alpha:
        sums = sums - noise.ir_drop_alpha * (x @ array.positive_rail())
    return sums
