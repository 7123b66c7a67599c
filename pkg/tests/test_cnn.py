import numpy as np
import pytest

from darth_pum.apps.cnn import (
    IMAGE_SIZE,
    Activation,
    TinyCnn,
    _conv_same,
    cnn_argmax_agreement,
    cnn_change_activation,
    cnn_reference,
    cnn_run_inference,
    cnn_set_model,
    conv_toeplitz,
    pooling_order,
)
from darth_pum.errors import ShapeError


@pytest.fixture
def model(rng):
    return TinyCnn.random(rng)


@pytest.fixture
def images(rng):
    return rng.integers(0, 256, (3, IMAGE_SIZE, IMAGE_SIZE))


class TestLowering:
    def test_toeplitz_is_convolution(self, rng):
        kernels = rng.integers(-8, 9, (3, 2, 3, 3))
        x = rng.integers(0, 16, (2, 4, 4))
        np.testing.assert_array_equal(conv_toeplitz(kernels, 4) @ x.ravel(), _conv_same(x, kernels).ravel())

    def test_pooling_order(self):
        order = pooling_order(2, 4)
        assert sorted(order) == list(range(32))
        # First block: top-left corner of every window, channel-major
        np.testing.assert_array_equal(order[:4], [0, 2, 8, 10])

    def test_reference_shape(self, model, images):
        assert cnn_reference(model, images).shape == (3, 10)
        assert cnn_reference(model, images[0]).shape == (1, 10)


class TestCnnOnChip:
    def test_bit_exact(self, chip, model, images):
        logits, report = cnn_run_inference(chip, model, images)
        np.testing.assert_array_equal(logits, cnn_reference(model, images))
        assert report.counters["images"] == 3
        assert report.kernels["cnn"] == report.cycles > 0

    def test_layout(self, chip, model):
        dep = cnn_set_model(chip, model)
        assert [len(h.tiles) for h in dep.handles] == [4, 2, 1]
        assert dep.post_hct not in {h for handle in dep.handles for h in handle.hcts}

    def test_change_activation_keeps_the_arrays(self, chip, model, images):
        dep = cnn_set_model(chip, model)
        cnn_change_activation(model, "identity")
        assert model.activation is Activation.IDENTITY
        assert model.deployment is dep

        logits, _ = cnn_run_inference(chip, model, images[:1])
        np.testing.assert_array_equal(logits, cnn_reference(model, images[:1]))
        assert len(chip.handles) == 3

    def test_batch(self, chip, model, images):
        logits, _ = cnn_run_inference(chip, model, images, batch=2)
        np.testing.assert_array_equal(logits, cnn_reference(model, images))
        assert sorted(model.deployment.workspaces) == [0, 1]

    def test_bad_batch(self, chip, model, images):
        with pytest.raises(ShapeError):
            cnn_run_inference(chip, model, images, batch=0)


class TestValidation:
    @pytest.mark.parametrize("images", [
        np.zeros((2, 4, 4), dtype=int),
        np.full((1, IMAGE_SIZE, IMAGE_SIZE), 256),
        np.full((1, IMAGE_SIZE, IMAGE_SIZE), -1),
    ])
    def test_bad_images(self, model, images):
        with pytest.raises(ShapeError):
            cnn_reference(model, images)

    def test_bad_model(self, rng):
        with pytest.raises(ShapeError):
            TinyCnn.random(rng, channels=(4, 17))
        good = TinyCnn.random(rng)
        wide = good.conv1.copy()
        wide[0, 0, 0, 0] = 128
        with pytest.raises(ShapeError):
            TinyCnn(wide, good.bias1, good.conv2, good.bias2, good.fc, good.fc_bias)
        with pytest.raises(ShapeError):
            TinyCnn(good.conv1, good.bias1, good.conv2, good.bias2, good.fc[:, 1:], good.fc_bias)

    def test_argmax_agreement(self):
        reference = np.array([[0, 1], [1, 0], [2, 3]])
        assert cnn_argmax_agreement(reference, reference) == 1.0
        assert cnn_argmax_agreement([[1, 0], [1, 0], [3, 2]], reference) == pytest.approx(1 / 3)
        assert cnn_argmax_agreement(np.zeros((0, 2)), np.zeros((0, 2))) == 1.0
