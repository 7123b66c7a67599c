"""
A tiny CNN on the chip: two 3x3 same-padded convolutions, each followed by
activation and 2x2 max pooling, then a fully connected layer.

Convolutions run as Toeplitz MVMs in the ACE. Their output rows are ordered
by pooling-window position, so the four candidates of every window land in
four DCE registers and pooling, bias, activation and requantisation are
plain element-wise macros.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.costs import CostReport
from ..errors import ShapeError
from ..logger import logger
from ..runtime.api import MatrixHandle, Precision, exec_mvm_api, set_matrix
from ..runtime.chip import Chip
from .kernels import Workspace

IMAGE_SIZE = 8
KERNEL_SIZE = 3
MAX_CHANNELS = 16
WEIGHT_BITS = 8
INPUT_BITS = 8


class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"

    @property
    def bounds(self) -> Tuple[int, int]:
        """Range activations are clipped to before feeding the next layer."""
        hi = (1 << (INPUT_BITS - 1)) - 1
        return (0, hi) if self is Activation.RELU else (-hi - 1, hi)


def conv_toeplitz(kernels, size: int) -> np.ndarray:
    """
    Same-padded convolution of a ``(channels, size, size)`` input as a matrix.

    Rows are outputs in ``(out_channel, y, x)`` order, columns inputs in
    ``(in_channel, y, x)`` order.
    """
    kernels = np.asarray(kernels, dtype=np.int64)
    cout, cin, k, _ = kernels.shape
    pad = k // 2
    matrix = np.zeros((cout * size * size, cin * size * size), dtype=np.int64)
    for co in range(cout):
        for oy in range(size):
            for ox in range(size):
                row = (co * size + oy) * size + ox
                for ci in range(cin):
                    for ky in range(k):
                        for kx in range(k):
                            iy, ix = oy + ky - pad, ox + kx - pad
                            if 0 <= iy < size and 0 <= ix < size:
                                matrix[row, (ci * size + iy) * size + ix] = kernels[co, ci, ky, kx]
    return matrix


def pooling_order(channels: int, size: int) -> np.ndarray:
    """
    Row permutation grouping outputs by 2x2 window position: four blocks of
    ``(channel, y / 2, x / 2)`` rows, one per offset in the window.
    """
    half = size // 2
    order = [
        (c * size + 2 * py + dy) * size + 2 * px + dx
        for dy in range(2)
        for dx in range(2)
        for c in range(channels)
        for py in range(half)
        for px in range(half)
    ]
    return np.array(order, dtype=np.int64)


@dataclass
class CnnDeployment:
    chip: Chip
    handles: List[MatrixHandle]
    post_hct: int
    width: int
    workspaces: Dict[int, Workspace] = field(default_factory=dict)
    biases: Dict[Tuple[int, int, int], int] = field(default_factory=dict)
    report: CostReport = field(default_factory=CostReport)


@dataclass(eq=False)
class TinyCnn:
    conv1: np.ndarray
    bias1: np.ndarray
    conv2: np.ndarray
    bias2: np.ndarray
    fc: np.ndarray
    fc_bias: np.ndarray
    shift1: int = 8
    shift2: int = 8
    activation: Activation = Activation.RELU
    deployment: Optional[CnnDeployment] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("conv1", "bias1", "conv2", "bias2", "fc", "fc_bias"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        c1, c2 = self.conv1.shape[0], self.conv2.shape[0]
        half = IMAGE_SIZE // 4
        expected = {
            "conv1": (c1, 1, KERNEL_SIZE, KERNEL_SIZE),
            "bias1": (c1,),
            "conv2": (c2, c1, KERNEL_SIZE, KERNEL_SIZE),
            "bias2": (c2,),
            "fc": (self.fc.shape[0], c2 * half * half),
            "fc_bias": (self.fc.shape[0],),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeError(f"TinyCnn.{name} has shape {getattr(self, name).shape}, expected {shape}")
        if max(c1, c2) > MAX_CHANNELS:
            raise ShapeError(f"TinyCnn supports at most {MAX_CHANNELS} channels, got {c1} and {c2}")
        limit = 1 << (WEIGHT_BITS - 1)
        for name in ("conv1", "conv2", "fc"):
            if np.abs(getattr(self, name)).max(initial=0) >= limit:
                raise ShapeError(f"TinyCnn.{name} weights must fit {WEIGHT_BITS} signed bits")
        self.activation = Activation(self.activation)

    @property
    def classes(self) -> int:
        return self.fc.shape[0]

    @property
    def channels(self) -> Tuple[int, int]:
        return self.conv1.shape[0], self.conv2.shape[0]

    @classmethod
    def random(cls, rng: np.random.Generator, channels: Tuple[int, int] = (4, 8), classes: int = 10,
               weight_range: int = 32, **kwargs) -> "TinyCnn":
        c1, c2 = channels
        half = IMAGE_SIZE // 4

        def weights(*shape):
            return rng.integers(-weight_range, weight_range + 1, size=shape)

        return cls(
            conv1=weights(c1, 1, KERNEL_SIZE, KERNEL_SIZE),
            bias1=rng.integers(-256, 257, size=c1),
            conv2=weights(c2, c1, KERNEL_SIZE, KERNEL_SIZE),
            bias2=rng.integers(-256, 257, size=c2),
            fc=weights(classes, c2 * half * half),
            fc_bias=rng.integers(-256, 257, size=classes),
            **kwargs,
        )


def _check_images(images) -> np.ndarray:
    images = np.asarray(images, dtype=np.int64)
    if images.ndim == 2:
        images = images[None]
    if images.ndim != 3 or images.shape[1:] != (IMAGE_SIZE, IMAGE_SIZE):
        raise ShapeError(f"Expected images of shape (n, {IMAGE_SIZE}, {IMAGE_SIZE}), got {images.shape}")
    if images.size and (images.min() < 0 or images.max() >= 1 << INPUT_BITS):
        raise ShapeError(f"Image pixels must fit {INPUT_BITS} unsigned bits")
    return images


# Host oracle


def _conv_same(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    cout, cin, k, _ = kernels.shape
    pad = k // 2
    size = x.shape[-1]
    padded = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    out = np.zeros((cout, size, size), dtype=np.int64)
    for ky in range(k):
        for kx in range(k):
            window = padded[:, ky:ky + size, kx:kx + size]
            out += np.einsum("oc,cyx->oyx", kernels[:, :, ky, kx], window)
    return out


def _pool(x: np.ndarray) -> np.ndarray:
    c, size, _ = x.shape
    return x.reshape(c, size // 2, 2, size // 2, 2).max(axis=(2, 4))


def cnn_reference(model: TinyCnn, images) -> np.ndarray:
    """Fixed-point host inference the chip must reproduce bit for bit."""
    images = _check_images(images)
    lo, hi = model.activation.bounds
    logits = []
    for image in images:
        a = image[None]
        for kernels, bias, shift in ((model.conv1, model.bias1, model.shift1),
                                     (model.conv2, model.bias2, model.shift2)):
            z = _conv_same(a, kernels) + bias[:, None, None]
            if model.activation is Activation.RELU:
                z = np.maximum(z, 0)
            a = _pool(np.clip(z >> shift, lo, hi))
        logits.append(model.fc @ a.ravel() + model.fc_bias)
    return np.array(logits, dtype=np.int64).reshape(len(images), model.classes)


def cnn_argmax_agreement(logits, reference) -> float:
    logits, reference = np.asarray(logits), np.asarray(reference)
    if len(logits) == 0:
        return 1.0
    return float(np.mean(logits.argmax(axis=1) == reference.argmax(axis=1)))


# Chip mapping


def cnn_set_model(chip: Chip, model: TinyCnn) -> CnnDeployment:
    """Program every layer and reserve one HCT for pooling and activations."""
    c1, c2 = model.channels
    report = CostReport()
    handles = []
    for kernels, channels, size in ((model.conv1, c1, IMAGE_SIZE), (model.conv2, c2, IMAGE_SIZE // 2)):
        matrix = conv_toeplitz(kernels, size)[pooling_order(channels, size)]
        handles.append(set_matrix(chip, matrix, WEIGHT_BITS, Precision.HIGH, input_bits=INPUT_BITS, signed=True))
    handles.append(set_matrix(chip, model.fc, WEIGHT_BITS, Precision.HIGH, input_bits=INPUT_BITS, signed=True))
    for handle in handles:
        report.alongside(handle.program_report)

    post = chip.reserve_hct()
    width = min(64, max(h.acc_bits for h in handles) + 1)
    model.deployment = CnnDeployment(chip, handles, post, width, report=report)
    logger.debug(f"cnn_set_model: channels {model.channels}, layers on HCTs "
                 f"{[h.hcts for h in handles]}, post-processing on HCT {post}")
    return model.deployment


def cnn_change_activation(model: TinyCnn, activation) -> TinyCnn:
    """Swap the activation; it runs in the DCE, so no array is reprogrammed."""
    model.activation = Activation(activation)
    return model


def _bias_register(dep: CnnDeployment, ws: Workspace, layer: int, chunk: int, lanes: np.ndarray) -> int:
    key = (ws.index, layer, chunk)
    if key not in dep.biases:
        dep.biases[key] = ws.load(lanes)
    return dep.biases[key]


def _workspace(dep: CnnDeployment, slot: int) -> Workspace:
    if slot not in dep.workspaces:
        dep.workspaces[slot] = Workspace(dep.chip.hct(dep.post_hct), slot, dep.width)
    return dep.workspaces[slot]


def _pool_layer(model: TinyCnn, dep: CnnDeployment, ws: Workspace, layer: int, out: np.ndarray,
                bias: np.ndarray, shift: int) -> np.ndarray:
    """Max-pool, bias, activation and requantisation of one conv layer's MVM output."""
    lo, hi = model.activation.bounds
    quarter = len(out) // 4
    per_channel = quarter // len(bias)
    lane_bias = np.repeat(bias, per_channel)

    pooled = []
    for chunk, start in enumerate(range(0, quarter, ws.rows)):
        stop = min(quarter, start + ws.rows)
        regs = [
            ws.receive(out[q * quarter + start:q * quarter + stop], f"mvm.conv{layer}")
            for q in range(4)
        ]
        v = regs[0]
        for r in regs[1:]:
            ws.maximum(v, r, v)
        ws.add(v, _bias_register(dep, ws, layer, chunk, lane_bias[start:stop]), v)
        if model.activation is Activation.RELU:
            ws.relu(v, v)
        ws.shr(v, shift, v)
        ws.clip(v, lo, hi, v)
        pooled.append(ws.read(v, stop - start))
        ws.release(*regs)
    return np.concatenate(pooled)


def cnn_run_inference(chip: Chip, model: TinyCnn, images, batch: int = 1) -> Tuple[np.ndarray, CostReport]:
    """
    Logits of every image. Up to ``batch`` images are in flight at once,
    each post-processed on its own pipeline of the reserved HCT.
    """
    images = _check_images(images)
    if batch < 1:
        raise ShapeError(f"Batch size must be positive, got {batch}")
    dep = model.deployment
    if dep is None or dep.chip is not chip:
        dep = cnn_set_model(chip, model)
    conv1, conv2, fc = dep.handles
    slots = min(batch, chip.config.pipelines)
    signed = model.activation is not Activation.RELU

    begin = chip.finish_time
    total = CostReport()
    logits = np.zeros((len(images), model.classes), dtype=np.int64)
    for n, image in enumerate(images):
        ws = _workspace(dep, n % slots)

        out, report = exec_mvm_api(chip, conv1, image.ravel())
        total.alongside(report)
        a = _pool_layer(model, dep, ws, 1, out, model.bias1, model.shift1)

        out, report = exec_mvm_api(chip, conv2, a, signed_input=signed)
        total.alongside(report)
        a = _pool_layer(model, dep, ws, 2, out, model.bias2, model.shift2)

        out, report = exec_mvm_api(chip, fc, a, signed_input=signed)
        total.alongside(report)
        r = ws.receive(out, "mvm.fc")
        ws.add(r, _bias_register(dep, ws, 3, 0, model.fc_bias), r)
        logits[n] = ws.read(r, model.classes)
        ws.release(r)

    for ws in dep.workspaces.values():
        total.alongside(ws.report)
        ws.report = CostReport()
    total.cycles = chip.finish_time - begin
    logger.debug(f"cnn_run_inference: {len(images)} images in {total.cycles} cycles")
    total.count("images", len(images))
    total.tag("cnn", total.cycles)
    return logits, total
