"""
Tests for argmax, softmax, integral and two-step decoding and their gradients.
"""

import numpy as np
import pytest

from posecast.core import ContractError, GridSpec, Heatmap, HeatVector, NormalizedHeatmap
from posecast.decode import (
    DecodeGradient,
    argmax_decode,
    decode,
    integral_backward,
    integral_decode,
    marginalize,
    normalize,
    softmax_backward,
    two_step_backward,
    two_step_decode,
    vector_integral,
)
from posecast.gradcheck import numerical_grad, relative_error


def line(values):
    """1 x 1 x 1 x N heatmap from a list of scores."""
    values = np.asarray(values, dtype=np.float64)
    return Heatmap(GridSpec(K=1, D=1, H=1, W=values.size), values)


def random_spec(rng, max_k=4, max_d=8, max_hw=32):
    return GridSpec(
        K=int(rng.integers(1, max_k + 1)),
        D=int(rng.integers(1, max_d + 1)),
        H=int(rng.integers(1, max_hw + 1)),
        W=int(rng.integers(1, max_hw + 1)),
    )


class TestArgmaxDecode:
    """Test maximum-likelihood decoding."""

    def test_one_hot(self, one_hot):
        """A one-hot heatmap decodes to its cell."""
        spec = GridSpec(K=1, D=1, H=8, W=8)
        assert argmax_decode(one_hot(spec, [(3, 2, 0)])).coords.tolist() == [[3.0, 2.0, 0.0]]

    def test_ties_go_to_lowest_index(self):
        """All-equal scores decode to the first cell."""
        h = Heatmap(GridSpec(K=2, D=2, H=3, W=3), np.ones((2, 2, 3, 3)))
        assert argmax_decode(h).coords.tolist() == [[0.0, 0.0, 0.0]] * 2

    def test_direct_max(self):
        """The largest score wins."""
        joints = argmax_decode(line([1.0, 5.0, 2.0]))
        assert joints.coords[0, 0] == 1.0
        assert joints.mask.all()


class TestNormalize:
    """Test the per-joint softmax."""

    def test_documented_values(self):
        """Symmetric, constant and log-spaced scores give known probabilities."""
        np.testing.assert_allclose(normalize(line([0.0, 0.0])).probs.reshape(-1), [0.5, 0.5])
        np.testing.assert_allclose(normalize(line([7.0, 7.0, 7.0])).probs.reshape(-1), [1 / 3] * 3)
        np.testing.assert_allclose(
            normalize(line([0.0, np.log(2.0), np.log(4.0)])).probs.reshape(-1),
            [1 / 7, 2 / 7, 4 / 7],
            rtol=0,
            atol=1e-15,
        )

    def test_sums_and_shift_invariance(self, rng):
        """Probabilities sum to one and ignore constant shifts of the scores."""
        for _ in range(10000):
            spec = random_spec(rng, max_k=2, max_d=3, max_hw=5)
            scores = rng.normal(scale=float(rng.uniform(0.1, 20.0)), size=spec.shape)
            probs = normalize(Heatmap(spec, scores)).probs
            assert np.all(probs >= 0)
            assert np.max(np.abs(probs.reshape(spec.K, -1).sum(axis=1) - 1.0)) < 1e-9
            shifted = normalize(Heatmap(spec, scores + float(rng.uniform(-100, 100)))).probs
            assert np.max(np.abs(shifted - probs)) < 1e-12

    def test_large_scores_do_not_overflow(self):
        """Max subtraction keeps huge scores finite."""
        probs = normalize(line([1000.0, 1000.0])).probs
        np.testing.assert_allclose(probs.reshape(-1), [0.5, 0.5])

    def test_softmax_backward(self, rng):
        """A weighted sum of probabilities differentiates like central differences; a constant one gives zero."""
        spec = GridSpec(K=2, D=2, H=3, W=4)
        scores = rng.normal(size=spec.shape)
        weights = rng.normal(size=spec.shape)
        nh = normalize(Heatmap(spec, scores))

        def weighted(s):
            return float(np.sum(weights * normalize(Heatmap(spec, s)).probs))

        analytic = softmax_backward(nh, weights).d_scores
        assert relative_error(analytic, numerical_grad(weighted, scores)) < 1e-6
        assert np.max(np.abs(softmax_backward(nh, np.ones(spec.shape)).d_scores)) < 1e-12


class TestIntegralDecode:
    """Test expectation decoding."""

    def test_documented_values(self, one_hot):
        """Point mass, uniform and hand-computed expectations."""
        spec = GridSpec(K=1, D=1, H=8, W=8)
        np.testing.assert_allclose(
            integral_decode(normalize(one_hot(spec, [(3, 2, 0)]))).coords, [[3.0, 2.0, 0.0]], atol=1e-12
        )
        uniform = NormalizedHeatmap(GridSpec(K=1, D=1, H=1, W=5), np.full(5, 0.2))
        assert integral_decode(uniform).coords[0, 0] == pytest.approx(2.0)
        probs = NormalizedHeatmap(GridSpec(K=1, D=1, H=1, W=3), [1 / 7, 2 / 7, 4 / 7])
        assert integral_decode(probs).coords[0, 0] == pytest.approx(10 / 7, abs=1e-12)

    def test_range(self, rng):
        """Decoded coordinates stay inside [0, L - 1]."""
        for _ in range(200):
            spec = random_spec(rng, max_d=4, max_hw=8)
            coords = decode(Heatmap(spec, rng.normal(scale=5.0, size=spec.shape)), "integral").coords
            upper = np.array(spec.axis_lengths()) - 1.0
            assert np.all(coords >= -1e-12)
            assert np.all(coords <= upper + 1e-12)


class TestMarginals:
    """Test marginalization and the 1D integral."""

    def test_marginalize(self, one_hot):
        """Marginals of uniform, point-mass and hand-built grids."""
        uniform = NormalizedHeatmap(GridSpec(K=1, D=1, H=2, W=2), np.full(4, 0.25))
        np.testing.assert_allclose(marginalize(uniform, "x").probs, [[0.5, 0.5]])

        spec = GridSpec(K=1, D=1, H=8, W=8)
        y = marginalize(normalize(one_hot(spec, [(3, 2, 0)])), "y").probs[0]
        assert np.argmax(y) == 2
        assert y[2] == pytest.approx(1.0)

        # rows are y, columns x: (x, y) = (0,0) 0.1, (1,0) 0.2, (0,1) 0.3, (1,1) 0.4
        nh = NormalizedHeatmap(GridSpec(K=1, D=1, H=2, W=2), [[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_allclose(marginalize(nh, "x").probs, [[0.4, 0.6]])
        np.testing.assert_allclose(marginalize(nh, "z").probs, [[1.0]])

    def test_vector_integral(self):
        """Expected index of 1D heat vectors."""
        assert vector_integral(HeatVector("x", [[0, 0, 0, 0, 1.0]]))[0] == 4.0
        assert vector_integral(HeatVector("y", [[1 / 3, 1 / 3, 1 / 3]]))[0] == pytest.approx(1.0)
        assert vector_integral(HeatVector("z", [[0.4, 0.6]]))[0] == pytest.approx(0.6)

    def test_two_step_equals_direct(self, rng):
        """Marginal integration reproduces the direct expectation."""
        worst = 0.0
        for _ in range(1000):
            spec = random_spec(rng)
            nh = normalize(Heatmap(spec, rng.normal(scale=3.0, size=spec.shape)))
            worst = max(worst, np.max(np.abs(two_step_decode(nh).coords - integral_decode(nh).coords)))
        assert worst < 1e-9

    def test_decode_dispatch(self):
        """Unknown decoder names are rejected."""
        with pytest.raises(ContractError):
            decode(line([0.0, 1.0]), "median")


class TestIntegralBackward:
    """Test the closed-form gradient of normalize + integral_decode."""

    def test_zero_upstream(self, random_heatmap):
        """Zero upstream gives zero gradient."""
        h = random_heatmap(GridSpec(K=2, D=2, H=3, W=3))
        assert not np.any(integral_backward(h, np.zeros((2, 3))).d_scores)

    def test_uniform_pair(self):
        """Two equal cells with dL/dx = 1 give [-0.25, +0.25]."""
        grad = integral_backward(line([0.0, 0.0]), [[1.0, 0.0, 0.0]])
        np.testing.assert_allclose(grad.d_scores.reshape(-1), [-0.25, 0.25])

    def test_matches_finite_differences(self, rng):
        """Analytic gradient agrees with central differences on a 2x1x4x4 grid."""
        spec = GridSpec(K=2, D=1, H=4, W=4)
        scores = rng.normal(size=spec.shape)
        upstream = rng.normal(size=(2, 3))

        def f(x):
            return float(np.sum(upstream * integral_decode(normalize(Heatmap(spec, x))).coords))

        analytic = integral_backward(Heatmap(spec, scores), upstream).d_scores
        assert relative_error(analytic, numerical_grad(f, scores)) < 1e-6

    def test_rows_sum_to_zero_and_joints_decouple(self, random_heatmap, rng):
        """Each joint's gradient sums to zero and ignores other joints' upstream."""
        h = random_heatmap(GridSpec(K=3, D=2, H=4, W=3))
        upstream = np.zeros((3, 3))
        upstream[1] = rng.normal(size=3)
        grad = integral_backward(h, upstream)
        assert np.max(np.abs(grad.per_joint_sums())) < 1e-9
        assert not np.any(grad.d_scores[0]) and not np.any(grad.d_scores[2])

    def test_two_step_backward_agrees(self, random_heatmap, rng):
        """The chained two-step gradient equals the closed form."""
        for _ in range(50):
            spec = random_spec(rng, max_k=3, max_d=4, max_hw=6)
            h = random_heatmap(spec)
            upstream = rng.normal(size=(spec.K, 3))
            np.testing.assert_allclose(
                two_step_backward(h, upstream).d_scores, integral_backward(h, upstream).d_scores, atol=1e-12
            )

    def test_shape_mismatch(self, random_heatmap):
        """Upstream must be (K, 3)."""
        with pytest.raises(ContractError):
            integral_backward(random_heatmap(GridSpec(K=2, D=1, H=2, W=2)), np.zeros((1, 3)))


class TestDecodeGradient:
    """Test the gradient container."""

    def test_arithmetic(self):
        """Addition and scaling act elementwise; mismatched grids are rejected."""
        spec = GridSpec(K=1, D=1, H=1, W=2)
        a = DecodeGradient(spec, [1.0, -1.0])
        total = (a + DecodeGradient.zeros(spec)).scaled(2.0)
        assert total.d_scores.reshape(-1).tolist() == [2.0, -2.0]
        with pytest.raises(ContractError):
            a + DecodeGradient.zeros(GridSpec(K=1, D=1, H=2, W=1))


if __name__ == "__main__":
    pytest.main([__file__])
