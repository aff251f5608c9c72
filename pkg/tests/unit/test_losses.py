"""
Tests for target construction, heatmap/joint losses and loss composition.
"""

import logging

import numpy as np
import pytest

from posecast.core import AXES, ContractError, GridSpec, Heatmap, HeatVector, JointSet
from posecast.decode import integral_decode, marginalize, normalize
from posecast.gradcheck import numerical_grad, relative_error
from posecast.losses import (
    H1,
    H2,
    H3,
    NONE,
    LossSpec,
    clamp_joints,
    compose_loss,
    gaussian_target,
    h1_loss,
    h2_loss,
    h3_loss,
    joint_loss,
    round_half_down,
    vector_ce_loss,
    vector_loss,
    vector_target,
)
from posecast.utils.config import ConfigError


def random_joints(rng, spec, planar=False):
    upper = np.array(spec.axis_lengths(), dtype=np.float64) - 1.0
    coords = rng.uniform(0.0, 1.0, size=(spec.K, 3)) * upper
    if planar:
        coords[:, 2] = np.nan
        return JointSet.planar(coords)
    return JointSet.full_mask(coords)


def check_gradient(f, x, analytic):
    assert relative_error(analytic, numerical_grad(f, x)) < 1e-6


class TestTargets:
    """Test Gaussian targets, clamping and rounding."""

    def test_gaussian_values(self):
        """Peak 1 at the centre and closed-form values at neighbours."""
        spec = GridSpec(K=1, D=1, H=5, W=5)
        target = gaussian_target(spec, JointSet.full_mask([[2.0, 2.0, 0.0]]), sigma=1.0).scores[0, 0]
        assert target[2, 2] == pytest.approx(1.0)
        assert target[2, 3] == pytest.approx(np.exp(-0.5), abs=1e-12)
        assert target[3, 3] == pytest.approx(np.exp(-1.0), abs=1e-12)

    def test_planar_target_is_constant_along_depth(self):
        """A joint without depth supervision gets the same target on every z slice."""
        spec = GridSpec(K=1, D=3, H=4, W=4)
        target = gaussian_target(spec, JointSet.planar([[1.0, 2.0, np.nan]]), sigma=1.0).scores[0]
        np.testing.assert_allclose(target[0], target[2])
        assert target[1, 2, 1] == pytest.approx(1.0)

    def test_out_of_grid_centre_is_clamped_and_logged(self, caplog):
        """Centres outside the grid are clamped and reported."""
        spec = GridSpec(K=2, D=1, H=4, W=4)
        gt = JointSet.full_mask([[5.5, 1.0, 0.0], [1.0, 1.0, 0.0]])
        clamped, flagged = clamp_joints(spec, gt)
        assert clamped.coords[0, 0] == 3.0
        assert flagged.tolist() == [True, False]
        with caplog.at_level(logging.WARNING, logger="posecast"):
            target = gaussian_target(spec, gt, sigma=1.0)
        assert target.scores[0, 0, 1, 3] == pytest.approx(1.0)
        assert "joint(s) [0]" in caplog.text

    def test_round_half_down(self):
        """Ties round toward the lower index."""
        assert round_half_down(np.array([0.5, 1.5, 1.51, 2.49])).tolist() == [0, 1, 2, 2]

    def test_vector_target_sums_to_one(self):
        """1D targets are renormalized and clamp their centre."""
        target = vector_target(6, 2.0, 1.0)
        assert target.sum() == pytest.approx(1.0)
        assert np.argmax(target) == 2
        assert np.argmax(vector_target(6, 9.0, 1.0)) == 5

    def test_vector_target_clamp_is_logged(self, caplog):
        """A 1D centre outside the axis is reported like a 3D one; an inside centre is not."""
        with caplog.at_level(logging.WARNING, logger="posecast"):
            vector_target(6, 2.5, 1.0)
        assert not caplog.records
        with caplog.at_level(logging.WARNING, logger="posecast"):
            target = vector_target(6, -3.0, 1.0)
        assert np.argmax(target) == 0
        assert "Clamped out-of-grid target centre -3.0 to 0.0" in caplog.text


class TestHeatmapLosses:
    """Test H1, H2 and H3."""

    def setup_method(self):
        """Setup a small random problem."""
        self.rng = np.random.default_rng(7)
        self.spec = GridSpec(K=2, D=2, H=4, W=3)
        self.scores = self.rng.normal(size=self.spec.shape)
        self.gt = random_joints(self.rng, self.spec)

    def test_h1_values(self):
        """Zero at the target, one for a unit offset everywhere."""
        target = gaussian_target(self.spec, self.gt, 1.0)
        assert h1_loss(target, target).value == 0.0
        assert h1_loss(Heatmap(self.spec, target.scores + 1.0), target).value == pytest.approx(1.0)
        with pytest.raises(ContractError):
            h1_loss(target, Heatmap(GridSpec(K=2, D=1, H=4, W=3), np.zeros((2, 1, 4, 3))))

    def test_h1_gradient(self):
        """H1 gradient matches finite differences."""
        target = gaussian_target(self.spec, self.gt, 1.0)
        check_gradient(
            lambda x: h1_loss(Heatmap(self.spec, x), target).value,
            self.scores,
            h1_loss(Heatmap(self.spec, self.scores), target).grad.d_scores,
        )

    def test_h2_values(self):
        """Uniform scores cost log N per joint; a confident hit costs ~0."""
        uniform = Heatmap(self.spec, np.zeros(self.spec.shape))
        assert h2_loss(uniform, self.gt).value == pytest.approx(np.log(self.spec.cells))

        spec = GridSpec(K=1, D=1, H=3, W=3)
        scores = np.zeros(spec.shape)
        scores[0, 0, 1, 2] = 60.0
        assert h2_loss(Heatmap(spec, scores), JointSet.full_mask([[2.2, 0.6, 0.0]])).value < 1e-12

    def test_h2_gradient(self):
        """H2 gradient matches finite differences, planar gt included."""
        for gt in (self.gt, random_joints(self.rng, self.spec, planar=True)):
            check_gradient(
                lambda x: h2_loss(Heatmap(self.spec, x), gt).value,
                self.scores,
                h2_loss(Heatmap(self.spec, self.scores), gt).grad.d_scores,
            )

    def test_h2_planar_uses_cell_set(self):
        """Without depth supervision H2 is -log of the mass of the matching column."""
        spec = GridSpec(K=1, D=4, H=2, W=2)
        uniform = Heatmap(spec, np.zeros(spec.shape))
        loss = h2_loss(uniform, JointSet.planar([[1.0, 0.0, np.nan]]))
        assert loss.value == pytest.approx(np.log(4.0))

    def test_h2_outside_grid(self):
        """Ground truth rounding outside the grid is a contract error."""
        spec = GridSpec(K=1, D=1, H=2, W=2)
        with pytest.raises(ContractError):
            h2_loss(Heatmap(spec, np.zeros(spec.shape)), JointSet.full_mask([[2.6, 0.0, 0.0]]))

    def test_h3_values(self):
        """Saturated correct logits cost ~0; zero logits cost ln 2."""
        spec = GridSpec(K=1, D=1, H=9, W=9)
        gt = JointSet.full_mask([[4.0, 4.0, 0.0]])
        x, y = np.meshgrid(np.arange(9), np.arange(9))
        inside = (x - 4.0) ** 2 + (y - 4.0) ** 2 <= 4.0
        saturated = np.where(inside, 20.0, -20.0)[None, None]
        assert h3_loss(Heatmap(spec, saturated), gt, radius=2.0).value < 1e-8
        assert h3_loss(Heatmap(spec, np.zeros(spec.shape)), gt, radius=2.0).value == pytest.approx(np.log(2.0))

    def test_h3_gradient(self):
        """H3 gradient matches finite differences."""
        check_gradient(
            lambda x: h3_loss(Heatmap(self.spec, x), self.gt, 1.5).value,
            self.scores,
            h3_loss(Heatmap(self.spec, self.scores), self.gt, 1.5).grad.d_scores,
        )


class TestJointLoss:
    """Test L1/L2 coordinate losses."""

    def test_documented_values(self):
        """Hand sums with and without depth supervision."""
        pred = JointSet.full_mask([[1.0, 2.0, 0.0]])
        gt = JointSet.full_mask([[0.0, 0.0, 0.0]])
        assert joint_loss(pred, pred, "L1").value == 0.0
        assert joint_loss(pred, gt, "L1").value == pytest.approx(1.0)
        assert joint_loss(pred, gt.with_mask([[True, True, False]]), "L1").value == pytest.approx(1.5)
        assert joint_loss(pred, gt, "L2").value == pytest.approx(5.0 / 3.0)

    def test_gradient_is_zero_on_unsupervised_axes(self):
        """Masked-off axes receive no gradient."""
        term = joint_loss(
            JointSet.full_mask([[1.0, -2.0, 7.0]]),
            JointSet.planar([[0.0, 0.0, np.nan]]),
            "L1",
        )
        assert term.grad.tolist() == [[0.5, -0.5, 0.0]]

    def test_errors(self):
        """No supervised axis, unknown kind or mismatched K are contract errors."""
        pred = JointSet.full_mask([[1.0, 2.0, 0.0]])
        with pytest.raises(ContractError):
            joint_loss(pred, pred.with_mask(np.zeros((1, 3), dtype=bool)), "L1")
        with pytest.raises(ContractError):
            joint_loss(pred, pred, "Huber")
        with pytest.raises(ContractError):
            joint_loss(pred, JointSet.full_mask(np.zeros((2, 3))), "L2")


class TestVectorLosses:
    """Test the two-step marginal losses."""

    def setup_method(self):
        """Setup a 3D grid with one random heatmap."""
        self.rng = np.random.default_rng(11)
        self.spec = GridSpec(K=2, D=3, H=4, W=5)
        self.scores = self.rng.normal(size=self.spec.shape)

    def vectors(self, scores):
        nh = normalize(Heatmap(self.spec, scores))
        return nh, {axis: marginalize(nh, axis) for axis in AXES}

    def test_exact_match_is_zero(self):
        """Marginals equal to the targets cost nothing."""
        gt = JointSet.full_mask([[1.0, 2.0, 1.0]])
        vectors = [HeatVector(axis, [vector_target(n, c, 1.0)]) for axis, n, c in zip(AXES, (5, 4, 3), (1, 2, 1))]
        assert vector_loss(vectors, gt, 1.0).value == pytest.approx(0.0, abs=1e-15)

    def test_unsupervised_axis_contributes_nothing(self):
        """The z term vanishes for planar ground truth whatever the z marginal is."""
        gt = JointSet.planar([[1.0, 2.0, np.nan], [3.0, 0.5, np.nan]])
        _, vectors = self.vectors(self.scores)
        term = vector_loss(vectors, gt, 1.0)
        assert not np.any(term.grad["z"])

        other = dict(vectors)
        other["z"] = HeatVector("z", [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert vector_loss(other, gt, 1.0).value == term.value

    def test_gradient_through_marginals(self):
        """vector_loss chained through marginalize and normalize matches finite differences."""
        from posecast.decode import marginal_backward

        gt = random_joints(self.rng, self.spec)
        nh, vectors = self.vectors(self.scores)
        analytic = marginal_backward(nh, vector_loss(vectors, gt, 1.0).grad).d_scores
        check_gradient(lambda x: vector_loss(self.vectors(x)[1], gt, 1.0).value, self.scores, analytic)

    def test_ce_matches_rounded_index(self):
        """Marginal cross-entropy is -log of the probability at the rounded coordinate."""
        gt = JointSet.full_mask([[1.5, 2.4, 0.0]])
        vectors = {"x": HeatVector("x", [[0.2, 0.5, 0.3]]), "y": HeatVector("y", [[0.1, 0.1, 0.8]])}
        assert vector_ce_loss(vectors, gt).value == pytest.approx(-(np.log(0.5) + np.log(0.8)) / 2)


class TestLossSpec:
    """Test loss configuration and named variants."""

    def test_variants(self):
        """Named methods map onto heatmap/joint pairs."""
        assert LossSpec.variant("H2").heatmap_loss == H2
        assert not LossSpec.variant("H2").uses_joints
        assert LossSpec.variant("I*").heatmap_loss == NONE
        assert LossSpec.variant("I3").joint_loss == "L1"
        assert LossSpec.variant("I1", decomposition="two_step").decomposition == "two_step"
        with pytest.raises(ConfigError):
            LossSpec.variant("R1")

    def test_validation(self):
        """Invalid combinations are configuration errors."""
        with pytest.raises(ConfigError):
            LossSpec(heatmap_loss=NONE, joint_loss=NONE)
        with pytest.raises(ConfigError):
            LossSpec(gaussian_sigma=0.0)
        with pytest.raises(ConfigError):
            LossSpec.from_dict({"heatmap_loss": H1, "weight": 2.0})

    def test_heatmap_only(self):
        """Pretraining drops the joint term and falls back to H1 for I*."""
        assert LossSpec.variant("I3").heatmap_only() == LossSpec(heatmap_loss=H3)
        assert LossSpec.variant("I*").heatmap_only().heatmap_loss == H1

    def test_dict_round_trip(self):
        """to_dict/from_dict preserve every field."""
        spec = LossSpec(heatmap_loss=H3, joint_loss="L2", joint_weight=0.5, h3_radius=2.0)
        assert LossSpec.from_dict(spec.to_dict()) == spec


class TestComposeLoss:
    """Test the composite loss and its accumulated gradient."""

    def setup_method(self):
        """Setup a random 3D problem."""
        self.rng = np.random.default_rng(3)
        self.spec = GridSpec(K=2, D=2, H=4, W=4)
        self.pred = Heatmap(self.spec, self.rng.normal(size=self.spec.shape))
        self.gt = random_joints(self.rng, self.spec)

    def test_joint_only_reduces_to_joint_loss(self):
        """I* is the L1 loss of the integral decode."""
        value = compose_loss(LossSpec.variant("I*"), self.pred, self.gt)
        expected = joint_loss(integral_decode(normalize(self.pred)), self.gt, "L1").value
        assert value.total == pytest.approx(expected)
        assert value.heatmap_term == 0.0

    def test_heatmap_only_reduces_to_h1(self):
        """H1 is plain h1_loss against the Gaussian target."""
        value = compose_loss(LossSpec.variant("H1"), self.pred, self.gt)
        expected = h1_loss(self.pred, gaussian_target(self.spec, self.gt, 1.0))
        assert value.total == pytest.approx(expected.value)
        assert value.joint_term == 0.0
        np.testing.assert_allclose(value.d_scores.d_scores, expected.grad.d_scores)

    def test_total_is_weighted_sum(self):
        """total = heatmap_term + weight * joint_term."""
        value = compose_loss(LossSpec.variant("I2", joint_weight=0.3), self.pred, self.gt)
        assert value.total == pytest.approx(value.heatmap_term + 0.3 * value.joint_term)
        assert value.decoded is not None

    @pytest.mark.parametrize("variant", ["H1", "H2", "H3", "I*", "I1", "I2", "I3"])
    @pytest.mark.parametrize("decomposition", ["direct", "two_step"])
    def test_full_gradient(self, variant, decomposition):
        """Every variant's accumulated gradient matches finite differences."""
        spec = LossSpec.variant(variant, decomposition=decomposition, h3_radius=1.5)
        for gt in (self.gt, random_joints(self.rng, self.spec, planar=True)):
            check_gradient(
                lambda x: compose_loss(spec, Heatmap(self.spec, x), gt).total,
                self.pred.scores,
                compose_loss(spec, self.pred, gt).d_scores.d_scores,
            )

    def test_direct_and_two_step_joint_losses_agree(self):
        """With joint loss only the decomposition does not change the value."""
        for _ in range(20):
            pred = Heatmap(self.spec, self.rng.normal(size=self.spec.shape))
            direct = compose_loss(LossSpec.variant("I*"), pred, self.gt).total
            two_step = compose_loss(LossSpec.variant("I*", decomposition="two_step"), pred, self.gt).total
            assert abs(direct - two_step) < 1e-9


if __name__ == "__main__":
    pytest.main([__file__])
