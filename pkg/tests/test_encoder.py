import numpy as np
import pytest

from darth_pum.apps import intmath
from darth_pum.apps.encoder import (
    DIM,
    HIDDEN,
    SEQ_LEN,
    FfnActivation,
    TinyEncoder,
    encode_tokens,
    encoder_reference,
    encoder_reference_int,
    llm_build_encoder,
    llm_change_activation,
    llm_run_inference,
)
from darth_pum.errors import ShapeError
from darth_pum.hct.trace import EventTrace
from darth_pum.runtime import Chip, ChipConfig

TOLERANCE = 2.0 ** -4


@pytest.fixture
def model(rng):
    return TinyEncoder.random(rng)


@pytest.fixture
def tokens(rng):
    return rng.normal(0.0, 1.0, (2, SEQ_LEN, DIM))


class TestHostOracles:
    @pytest.mark.parametrize("activation", list(FfnActivation))
    def test_integer_layer_tracks_float(self, rng, activation):
        model = TinyEncoder.random(rng, activation=activation)
        tokens = rng.normal(0.0, 1.0, (8, SEQ_LEN, DIM))
        codes = encoder_reference_int(model, tokens)
        error = np.abs(intmath.dequantize(codes, intmath.ACT_FRAC) - encoder_reference(model, tokens))
        assert error.max() <= TOLERANCE

    def test_uniform_softmax(self):
        probs = intmath.softmax(np.zeros((1, SEQ_LEN), dtype=np.int64), intmath.softmax_scale(8))
        np.testing.assert_array_equal(probs, np.full((1, SEQ_LEN), (1 << intmath.PROB_FRAC) // SEQ_LEN))

    def test_encode_tokens(self, tokens):
        codes = encode_tokens(tokens)
        assert codes.shape == (2, SEQ_LEN, DIM)
        assert encode_tokens(tokens[0]).shape == (1, SEQ_LEN, DIM)
        with pytest.raises(ShapeError):
            encode_tokens(np.zeros((SEQ_LEN, DIM + 1)))

    def test_bad_weights(self, model):
        with pytest.raises(ShapeError):
            TinyEncoder(model.wq, model.wk, model.wv, model.w1[:, :-1], model.w2)
        with pytest.raises(ShapeError):
            TinyEncoder(model.wq + 200, model.wk, model.wv, model.w1, model.w2)


class TestEncoderOnChip:
    def test_matches_integer_oracle(self, chip, model, tokens):
        out, report = llm_run_inference(chip, model, tokens[:1])
        expected = intmath.dequantize(encoder_reference_int(model, tokens[:1]), intmath.ACT_FRAC)
        np.testing.assert_array_equal(out, expected)
        assert np.abs(out - encoder_reference(model, tokens[:1])).max() <= TOLERANCE
        assert report.counters["sequences"] == 1
        assert report.kernels["llm"] == report.cycles > 0

    def test_only_feed_forward_weights_are_programmed(self, model):
        trace = EventTrace()
        chip = Chip(ChipConfig(hct_count=4), trace=trace)
        dep = llm_build_encoder(chip, model)

        programs = trace.of_kind("program")
        assert len(programs) == 2
        assert {e.locus for e in programs} == {"hct0.ace"}
        assert dep.hct_id == 1
        assert dep.ffn1.shape == (HIDDEN, DIM)
        assert len(dep.weights) == 6 * DIM

    def test_change_activation_keeps_the_deployment(self, chip, model):
        dep = llm_build_encoder(chip, model)
        llm_change_activation(model, "relu")
        assert model.activation is FfnActivation.RELU
        assert model.deployment is dep
        with pytest.raises(ValueError):
            llm_change_activation(model, "swish")
