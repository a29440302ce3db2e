"""Tests for the tape, masked cross-entropy and Adam."""

import numpy as np
import pytest

from src.autodiff import (
    Adam,
    AdamState,
    Tape,
    Tensor,
    accumulate_grad,
    adam_update,
    backward,
    finite_difference_gradient,
    masked_softmax_cross_entropy,
    mul,
    relative_error,
    set_default_dtype,
    softmax,
    total,
)
from src.models.extractor import extractor_forward
from src.models.params import init_extractor
from src.utils.exceptions import GradientError, NoLabeledCellsError, ValidationError


class TestTape:
    """Test recording, backward and live-element accounting."""

    def test_backward_requires_scalar(self):
        """Test a non-scalar loss is rejected."""
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            y = mul(x, x)
        with pytest.raises(GradientError):
            backward(tape, y)

    def test_backward_requires_recorded_loss(self):
        """Test a loss from another tape is rejected."""
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape():
            loss = total(x)
        with pytest.raises(GradientError):
            backward(Tape(), loss)

    def test_gradients_overwrite(self):
        """Test a second backward replaces the first one's gradient."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        for scale in (3.0, 5.0):
            with Tape() as tape:
                loss = total(mul(x, Tensor([scale, scale])))
            backward(tape, loss)
        assert np.array_equal(x.grad, [5.0, 5.0])

    def test_accumulate_grad(self):
        """Test explicit accumulation sums gradients."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        accumulate_grad(x, np.array([1.0, 1.0]))
        accumulate_grad(x, np.array([0.5, 2.0]))
        assert np.array_equal(x.grad, [1.5, 3.0])
        with pytest.raises(GradientError):
            accumulate_grad(x, np.zeros(3))

    def test_shared_input_gradients_add(self):
        """Test a tensor used twice receives the sum of both paths."""
        x = Tensor([2.0, -1.0], requires_grad=True)
        with Tape() as tape:
            loss = total(mul(x, x))
        backward(tape, loss)
        assert np.array_equal(x.grad, [4.0, -2.0])

    def test_non_recording_tape_keeps_nothing(self):
        """Test a non-recording tape only tracks transient sizes."""
        x = Tensor(np.ones((4, 4)), requires_grad=True)
        with Tape(record=False) as tape:
            total(mul(x, x))
        assert tape.nodes == []
        assert tape.live_elements == 0
        assert tape.peak_live_elements >= 2 * x.size

    def test_retain(self):
        """Test retained buffers stay live and count toward the peak until the tape is cleared."""
        tape = Tape()
        tape.retain(10)
        tape.retain(5)
        assert tape.live_elements == 15
        assert tape.peak_live_elements == 15
        tape.clear()
        assert (tape.live_elements, tape.peak_live_elements) == (0, 0)

    def test_forward_peak_linear_in_batch(self, toy_arch):
        """Test the recorded extractor footprint grows linearly with patch count."""
        params = init_extractor(0, toy_arch)
        rng = np.random.default_rng(0)
        sizes = np.array([8, 16, 32, 64])
        peaks = []
        for n in sizes:
            with Tape() as tape:
                extractor_forward(params, Tensor(rng.uniform(-0.5, 0.5, size=(n, 3, 8, 8))))
            peaks.append(tape.peak_live_elements)
        peaks = np.array(peaks, dtype=np.float64)

        slope, intercept = np.polyfit(sizes, peaks, 1)
        residual = peaks - (slope * sizes + intercept)
        r_squared = 1.0 - np.sum(residual ** 2) / np.sum((peaks - peaks.mean()) ** 2)
        assert r_squared > 0.99

    def test_unsupported_dtype(self):
        """Test only 64- and 32-bit storage can be selected."""
        with pytest.raises(ValidationError):
            set_default_dtype(np.float16)


class TestMaskedCrossEntropy:
    """Test the masked softmax cross-entropy."""

    def _logits(self, seed=0, cells=6):
        rng = np.random.default_rng(seed)
        return Tensor(rng.normal(size=(cells, 2)), requires_grad=True)

    def test_softmax_rows_sum_to_one(self):
        """Test per-cell probabilities sum to 1."""
        probs = softmax(np.random.default_rng(1).normal(size=(50, 2)) * 10)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_masked_cells_get_exact_zero_gradient(self):
        """Test masked-out rows receive bit-exact zero gradients."""
        logits = self._logits()
        mask = np.array([1, 0, 1, 0, 1, 0])
        with Tape() as tape:
            loss = masked_softmax_cross_entropy(logits, np.array([0, 1, 1, 0, 1, 1]), mask)
        backward(tape, loss)
        assert np.all(logits.grad[mask == 0] == 0.0)
        assert np.any(logits.grad[mask == 1] != 0.0)

    def test_masked_labels_do_not_matter(self):
        """Test changing labels on masked cells leaves value and gradient unchanged."""
        mask = np.array([1, 1, 0, 0, 1, 0])
        results = []
        for labels in ([0, 1, 0, 0, 1, 0], [0, 1, 1, 1, 1, 1]):
            logits = self._logits()
            with Tape() as tape:
                loss = masked_softmax_cross_entropy(logits, np.array(labels), mask)
            backward(tape, loss)
            results.append((loss.item(), logits.grad.copy()))
        assert results[0][0] == results[1][0]
        assert np.array_equal(results[0][1], results[1][1])

    @pytest.mark.parametrize("reduction", ["mean", "sum"])
    def test_gradient_matches_finite_differences(self, reduction):
        """Test the loss gradient against central differences."""
        logits = self._logits(seed=2)
        labels = np.array([0, 1, 1, 0, 1, 0])
        mask = np.array([1, 1, 0, 1, 1, 1])
        with Tape() as tape:
            loss = masked_softmax_cross_entropy(logits, labels, mask, reduction)
        backward(tape, loss)
        numeric = finite_difference_gradient(
            lambda t: masked_softmax_cross_entropy(t, labels, mask, reduction).item(), logits
        )
        assert relative_error(logits.grad, numeric) <= 1e-4

    def test_mean_divides_by_labeled_count(self):
        """Test mean reduction equals the sum over labeled cells divided by their count."""
        logits = self._logits(seed=3)
        labels = np.array([1, 0, 1, 0, 1, 0])
        mask = np.array([1, 1, 1, 0, 0, 0])
        mean = masked_softmax_cross_entropy(logits, labels, mask, "mean").item()
        summed = masked_softmax_cross_entropy(logits, labels, mask, "sum").item()
        assert mean == pytest.approx(summed / 3, rel=1e-12)

    def test_all_masked(self):
        """Test a fully masked batch raises."""
        with pytest.raises(NoLabeledCellsError):
            masked_softmax_cross_entropy(self._logits(), np.zeros(6), np.zeros(6))


class TestAdam:
    """Test the Adam update."""

    def test_first_step(self):
        """Test the bias-corrected first step moves by lr * g / (|g| + eps)."""
        param = Tensor([1.0, -2.0], requires_grad=True, name="w")
        param.grad = np.array([0.5, -4.0])
        adam_update(param, AdamState.fresh(param), lr=0.1)
        expected = np.array([1.0, -2.0]) - 0.1 * np.array([0.5, -4.0]) / (
            np.abs([0.5, -4.0]) + 1e-8
        )
        np.testing.assert_allclose(param.data, expected, rtol=1e-12)

    def test_missing_gradient(self):
        """Test updating a parameter without gradient raises."""
        param = Tensor([1.0], requires_grad=True, name="w")
        with pytest.raises(GradientError):
            adam_update(param, AdamState.fresh(param), lr=0.1)

    def test_optimizer_keeps_state_per_name(self):
        """Test Adam creates one state per parameter and advances it."""
        params = {"a": Tensor([1.0], requires_grad=True), "b": Tensor([2.0], requires_grad=True)}
        for p in params.values():
            p.grad = np.array([1.0])
        optimizer = Adam(lr=0.01)
        optimizer.step(params)
        optimizer.step(params)
        assert set(optimizer.states) == {"a", "b"}
        assert optimizer.states["a"].t == 2

    def test_minimizes_quadratic(self):
        """Test repeated steps reduce a simple quadratic."""
        x = Tensor([3.0, -2.0], requires_grad=True)
        optimizer = Adam(lr=0.1)
        for _ in range(200):
            with Tape() as tape:
                loss = total(mul(x, x))
            backward(tape, loss)
            optimizer.step({"x": x})
        assert float(np.sum(x.data ** 2)) < 0.1
