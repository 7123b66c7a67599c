"""
A one-layer transformer encoder split across the two halves of the chip.

Attention changes with every input, so it stays in the DCE: the Q/K/V
weights sit in pipeline registers and projections, scores, softmax and the
weighted sum of values are long-multiplication macro programs. Only the
feed-forward weights are programmed into crossbars.

Layout of the attention HCT (lanes are register rows):

  - pipelines 0-5: Q, K, V per head; lane ``8 * token + d``, one weight
    register per model input
  - pipelines 6-7: scores and weighted values of head 0 and 1; lane
    ``8 * query + key`` for scores, ``8 * token + d`` for outputs
  - pipeline 8: softmax; register ``j`` holds key ``j``, lane ``8 * head + query``
  - pipelines 9 and 11: residual plus layer norm; one register per channel,
    lane ``token``
  - pipeline 10: feed-forward activation; lane ``32 * token + hidden``, in
    four register blocks
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.costs import CostReport
from ..errors import ShapeError
from ..helpers import chunked
from ..logger import logger
from ..runtime.api import MatrixHandle, Precision, exec_mvm_api, set_matrix
from ..runtime.chip import Chip
from . import intmath
from .intmath import ACT_FRAC, PROB_FRAC, WEIGHT_FRAC
from .kernels import Workspace, gelu, layernorm, softmax

DIM = 16
HEADS = 2
HEAD_DIM = DIM // HEADS
SEQ_LEN = 8
HIDDEN = 32

WEIGHT_BITS = 8
ACT_BITS = 14
"""Multiplier width for activations: codes within +-32 in real units."""
PROB_BITS = PROB_FRAC + 2
FFN_INPUT_BITS = 16

PROJ_WIDTH = 28
SOFTMAX_WIDTH = 40
NORM_WIDTH = 40
GELU_WIDTH = 32

QKV_PIPELINES = range(0, 6)
HEAD_PIPELINES = (6, 7)
SOFTMAX_PIPELINE = 8
NORM1_PIPELINE = 9
FFN_PIPELINE = 10
NORM2_PIPELINE = 11


class FfnActivation(str, Enum):
    GELU = "gelu"
    RELU = "relu"


@dataclass
class EncoderDeployment:
    chip: Chip
    ffn1: MatrixHandle
    ffn2: MatrixHandle
    hct_id: int
    workspaces: Dict[int, Workspace]
    weights: Dict[Tuple[int, int], int]
    """``(chunk, input) -> register`` of the staged projection weights."""
    report: CostReport = field(default_factory=CostReport)


@dataclass(eq=False)
class TinyEncoder:
    """Weights are fixed-point codes with ``WEIGHT_FRAC`` fraction bits, laid out inputs x outputs."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    activation: FfnActivation = FfnActivation.GELU
    deployment: Optional[EncoderDeployment] = field(default=None, repr=False)

    def __post_init__(self):
        expected = {
            "wq": (DIM, DIM), "wk": (DIM, DIM), "wv": (DIM, DIM),
            "w1": (DIM, HIDDEN), "w2": (HIDDEN, DIM),
        }
        limit = 1 << (WEIGHT_BITS - 1)
        for name, shape in expected.items():
            value = np.asarray(getattr(self, name), dtype=np.int64)
            if value.shape != shape:
                raise ShapeError(f"TinyEncoder.{name} has shape {value.shape}, expected {shape}")
            if np.abs(value).max(initial=0) >= limit:
                raise ShapeError(f"TinyEncoder.{name} codes must fit {WEIGHT_BITS} signed bits")
            setattr(self, name, value)
        self.activation = FfnActivation(self.activation)

    @property
    def projection(self) -> np.ndarray:
        """Q, K and V weights side by side, ``DIM x 3 * DIM``."""
        return np.hstack([self.wq, self.wk, self.wv])

    @classmethod
    def random(cls, rng: np.random.Generator, attention_scale: float = 0.5, ffn_scale: float = 0.5,
               output_scale: float = 0.25, **kwargs) -> "TinyEncoder":
        def weights(shape, scale):
            return intmath.quantize(rng.uniform(-scale, scale, size=shape), WEIGHT_FRAC, WEIGHT_BITS)

        return cls(
            wq=weights((DIM, DIM), attention_scale),
            wk=weights((DIM, DIM), attention_scale),
            wv=weights((DIM, DIM), attention_scale),
            w1=weights((DIM, HIDDEN), ffn_scale),
            w2=weights((HIDDEN, DIM), output_scale),
            **kwargs,
        )


def encode_tokens(tokens) -> np.ndarray:
    """Real-valued embeddings ``(n, SEQ_LEN, DIM)`` to activation codes."""
    tokens = np.asarray(tokens, dtype=float)
    if tokens.ndim == 2:
        tokens = tokens[None]
    if tokens.ndim != 3 or tokens.shape[1:] != (SEQ_LEN, DIM):
        raise ShapeError(f"Expected token embeddings of shape (n, {SEQ_LEN}, {DIM}), got {tokens.shape}")
    return intmath.quantize(tokens, ACT_FRAC, ACT_BITS)


# Host oracles


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _layernorm(x: np.ndarray) -> np.ndarray:
    eps = intmath.LN_EPS_CODE / (x.shape[-1] << 16)
    centred = x - x.mean(axis=-1, keepdims=True)
    return centred / np.sqrt((centred ** 2).mean(axis=-1, keepdims=True) + eps)


def _gelu(x: np.ndarray) -> np.ndarray:
    erf = np.vectorize(math.erf)
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def encoder_reference(model: TinyEncoder, tokens) -> np.ndarray:
    """Float64 evaluation of the layer on the decoded weights and inputs."""
    x = intmath.dequantize(encode_tokens(tokens), ACT_FRAC)
    wq, wk, wv, w1, w2 = (intmath.dequantize(getattr(model, n), WEIGHT_FRAC) for n in ("wq", "wk", "wv", "w1", "w2"))
    q, k, v = x @ wq, x @ wk, x @ wv

    heads = []
    for h in range(HEADS):
        cols = slice(h * HEAD_DIM, (h + 1) * HEAD_DIM)
        scores = q[..., cols] @ np.swapaxes(k[..., cols], -1, -2) / math.sqrt(HEAD_DIM)
        heads.append(_softmax(scores) @ v[..., cols])
    h1 = _layernorm(x + np.concatenate(heads, axis=-1))

    u = h1 @ w1
    g = _gelu(u) if model.activation is FfnActivation.GELU else np.maximum(u, 0.0)
    return _layernorm(h1 + g @ w2)


def encoder_reference_int(model: TinyEncoder, tokens) -> np.ndarray:
    """Integer evaluation the chip reproduces bit for bit with noise off; returns codes."""
    x = encode_tokens(tokens)
    q, k, v = ((x @ w) >> WEIGHT_FRAC for w in (model.wq, model.wk, model.wv))
    scale = intmath.softmax_scale(HEAD_DIM)

    heads = []
    for h in range(HEADS):
        cols = slice(h * HEAD_DIM, (h + 1) * HEAD_DIM)
        scores = (q[..., cols] @ np.swapaxes(k[..., cols], -1, -2)) >> ACT_FRAC
        p = intmath.softmax(scores, scale)
        heads.append((p @ v[..., cols]) >> PROB_FRAC)
    h1 = intmath.layernorm(x + np.concatenate(heads, axis=-1))

    u = (h1 @ model.w1) >> WEIGHT_FRAC
    g = intmath.gelu(u) if model.activation is FfnActivation.GELU else intmath.relu(u)
    return intmath.layernorm(h1 + ((g @ model.w2) >> WEIGHT_FRAC))


# Chip mapping


def llm_build_encoder(chip: Chip, model: TinyEncoder) -> EncoderDeployment:
    """
    Program the feed-forward weights into the ACE and stage the attention
    weights in DCE registers of a reserved HCT.
    """
    ffn1 = set_matrix(chip, model.w1.T, WEIGHT_BITS, Precision.HIGH, input_bits=FFN_INPUT_BITS, signed=True)
    ffn2 = set_matrix(chip, model.w2.T, WEIGHT_BITS, Precision.HIGH, input_bits=FFN_INPUT_BITS, signed=True)

    hct_id = chip.reserve_hct()
    hct = chip.hct(hct_id)

    workspaces = {p: Workspace(hct, p, PROJ_WIDTH) for p in (*QKV_PIPELINES, *HEAD_PIPELINES)}
    workspaces[SOFTMAX_PIPELINE] = Workspace(hct, SOFTMAX_PIPELINE, SOFTMAX_WIDTH)
    workspaces[NORM1_PIPELINE] = Workspace(hct, NORM1_PIPELINE, NORM_WIDTH)
    workspaces[FFN_PIPELINE] = Workspace(hct, FFN_PIPELINE, GELU_WIDTH)
    workspaces[NORM2_PIPELINE] = Workspace(hct, NORM2_PIPELINE, NORM_WIDTH)

    projection = model.projection
    weights = {}
    for chunk in QKV_PIPELINES:
        ws = workspaces[chunk]
        outputs = projection[:, chunk * HEAD_DIM:(chunk + 1) * HEAD_DIM]
        for i in range(DIM):
            weights[(chunk, i)] = ws.load(np.tile(outputs[i], SEQ_LEN))

    report = CostReport().alongside(ffn1.program_report).alongside(ffn2.program_report)
    for ws in workspaces.values():
        report.alongside(ws.report)
        ws.report = CostReport()
    _, issued = chip.issue(hct_id, len(weights))
    report.alongside(issued)

    model.deployment = EncoderDeployment(chip, ffn1, ffn2, hct_id, workspaces, weights, report)
    logger.debug(f"llm_build_encoder: FFN on HCTs {ffn1.hcts + ffn2.hcts}, attention weights in "
                 f"{len(weights)} registers of HCT {hct_id}")
    return model.deployment


def llm_change_activation(model: TinyEncoder, activation) -> TinyEncoder:
    """Swap the feed-forward activation; it runs in the DCE, so nothing is reprogrammed."""
    model.activation = FfnActivation(activation)
    return model


def _project(dep: EncoderDeployment, x: np.ndarray) -> np.ndarray:
    """Q, K and V codes of one sequence, ``(SEQ_LEN, 3 * DIM)``."""
    out = np.zeros((SEQ_LEN, 3 * DIM), dtype=np.int64)
    for chunk in QKV_PIPELINES:
        ws = dep.workspaces[chunk]
        acc = ws.copy(ws.const(0))
        xk = ws.alloc()
        for i in range(DIM):
            ws.load(np.repeat(x[:, i], HEAD_DIM), xk)
            ws.mul(xk, dep.weights[(chunk, i)], WEIGHT_BITS, accumulate=acc)
        ws.shr(acc, WEIGHT_FRAC, acc)
        out[:, chunk * HEAD_DIM:(chunk + 1) * HEAD_DIM] = ws.read(acc, SEQ_LEN * HEAD_DIM).reshape(SEQ_LEN, HEAD_DIM)
        ws.release(acc, xk)
    return out


def _scores(ws: Workspace, q: np.ndarray, k: np.ndarray) -> np.ndarray:
    """``(q @ k.T) >> ACT_FRAC`` for one head, lane ``8 * query + key``."""
    acc = ws.copy(ws.const(0))
    for d in range(HEAD_DIM):
        qd = ws.receive(np.repeat(q[:, d], SEQ_LEN), f"head.q{d}")
        kd = ws.receive(np.tile(k[:, d], SEQ_LEN), f"head.k{d}")
        ws.mul(kd, qd, ACT_BITS, accumulate=acc)
        ws.release(qd, kd)
    ws.shr(acc, ACT_FRAC, acc)
    scores = ws.read(acc, SEQ_LEN * SEQ_LEN).reshape(SEQ_LEN, SEQ_LEN)
    ws.release(acc)
    return scores


def _attend(ws: Workspace, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``(p @ v) >> PROB_FRAC`` for one head, lane ``8 * token + d``."""
    acc = ws.copy(ws.const(0))
    for j in range(SEQ_LEN):
        pj = ws.receive(np.repeat(p[:, j], HEAD_DIM), f"softmax.p{j}")
        vj = ws.receive(np.tile(v[j], SEQ_LEN), f"head.v{j}")
        ws.mul(vj, pj, PROB_BITS, accumulate=acc)
        ws.release(pj, vj)
    ws.shr(acc, PROB_FRAC, acc)
    out = ws.read(acc, SEQ_LEN * HEAD_DIM).reshape(SEQ_LEN, HEAD_DIM)
    ws.release(acc)
    return out


def _softmax_heads(ws: Workspace, scores: List[np.ndarray]) -> List[np.ndarray]:
    """Row softmax of every head at once: one register per key."""
    regs = [
        ws.receive(np.concatenate([s[:, j] for s in scores]), f"head.s{j}")
        for j in range(SEQ_LEN)
    ]
    softmax(ws, regs, intmath.softmax_scale(HEAD_DIM))
    probs = np.stack([ws.read(r, HEADS * SEQ_LEN) for r in regs], axis=-1)
    ws.release(*regs)
    return [probs[h * SEQ_LEN:(h + 1) * SEQ_LEN] for h in range(HEADS)]


def _residual_norm(ws: Workspace, base: np.ndarray, update: np.ndarray, update_shift: int,
                   label: str) -> np.ndarray:
    """``layernorm(base + (update >> update_shift))`` across channels, one register each."""
    regs = []
    for c in range(DIM):
        r = ws.receive(update[:, c], f"{label}.c{c}")
        if update_shift:
            ws.shr(r, update_shift, r)
        b = ws.receive(base[:, c], f"residual.c{c}")
        ws.add(r, b, r)
        ws.release(b)
        regs.append(r)
    layernorm(ws, regs, ACT_BITS + 2)
    out = np.stack([ws.read(r, SEQ_LEN) for r in regs], axis=-1)
    ws.release(*regs)
    return out


def _activate(model: TinyEncoder, ws: Workspace, u: np.ndarray) -> np.ndarray:
    """FFN activation of ``u >> WEIGHT_FRAC`` in register blocks of ``ws.rows`` lanes."""
    flat = u.ravel()
    out = []
    for block in chunked(flat, ws.rows):
        r = ws.receive(block, "mvm.ffn1")
        ws.shr(r, WEIGHT_FRAC, r)
        if model.activation is FfnActivation.GELU:
            g = gelu(ws, r)
        else:
            g = ws.relu(r)
        out.append(ws.read(g, len(block)))
        ws.release(r, g)
    return np.concatenate(out).reshape(u.shape)


def _ffn(chip: Chip, handle: MatrixHandle, rows: np.ndarray, total: CostReport) -> np.ndarray:
    out = []
    for row in rows:
        y, report = exec_mvm_api(chip, handle, row, signed_input=True)
        total.alongside(report)
        out.append(y)
    return np.array(out, dtype=np.int64)


def llm_run_inference(chip: Chip, model: TinyEncoder, tokens) -> Tuple[np.ndarray, CostReport]:
    """
    Encoder outputs (real-valued, ``(n, SEQ_LEN, DIM)``) for each sequence of
    token embeddings.
    """
    x_all = encode_tokens(tokens)
    dep = model.deployment
    if dep is None or dep.chip is not chip:
        dep = llm_build_encoder(chip, model)
    ws = dep.workspaces

    begin = chip.finish_time
    total = CostReport()
    outputs = np.zeros(x_all.shape, dtype=np.int64)
    for n, x in enumerate(x_all):
        qkv = _project(dep, x)
        q, k, v = qkv[:, :DIM], qkv[:, DIM:2 * DIM], qkv[:, 2 * DIM:]

        scores = []
        for h, pipe in enumerate(HEAD_PIPELINES):
            cols = slice(h * HEAD_DIM, (h + 1) * HEAD_DIM)
            scores.append(_scores(ws[pipe], q[:, cols], k[:, cols]))
        probs = _softmax_heads(ws[SOFTMAX_PIPELINE], scores)
        attended = np.hstack([
            _attend(ws[pipe], probs[h], v[:, h * HEAD_DIM:(h + 1) * HEAD_DIM])
            for h, pipe in enumerate(HEAD_PIPELINES)
        ])

        h1 = _residual_norm(ws[NORM1_PIPELINE], x, attended, 0, "attention")
        u = _ffn(chip, dep.ffn1, h1, total)
        g = _activate(model, ws[FFN_PIPELINE], u)
        f = _ffn(chip, dep.ffn2, g, total)
        outputs[n] = _residual_norm(ws[NORM2_PIPELINE], h1, f, WEIGHT_FRAC, "mvm.ffn2")
        logger.debug(f"llm sequence {n}: done at cycle {chip.finish_time}")

    for w in ws.values():
        total.alongside(w.report)
        w.report = CostReport()
    total.cycles = chip.finish_time - begin
    total.count("sequences", len(x_all))
    total.tag("llm", total.cycles)
    return intmath.dequantize(outputs, ACT_FRAC), total
