"""
Finite-difference verification of every analytic backward pass.

Each op draws ``cases`` random small instances, evaluates a scalar function
of its input, and compares the analytic gradient with central differences.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .core import AXES, GridSpec, Heatmap, JointSet
from .decode import (
    integral_backward,
    integral_decode,
    marginal_backward,
    marginalize,
    normalize,
    two_step_backward,
    two_step_decode,
)
from .losses import (
    DECOMPOSITIONS,
    HEATMAP_LOSSES,
    NONE,
    LossSpec,
    compose_loss,
    gaussian_target,
    h1_loss,
    h2_loss,
    h3_loss,
    joint_loss,
    vector_loss,
)
from .train import ModelConfig, RegressionHead, ToyModel
from .utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_EPS = 1e-5
DEFAULT_TOLERANCE = 1e-6
SAMPLED_PARAMETERS = 20

GRADCHECK_COLUMNS = ["op", "cases", "max_rel_error", "passed"]

# f(x) -> scalar, and the analytic gradient at x
Case = Tuple[Callable[[np.ndarray], float], np.ndarray, np.ndarray, Optional[np.ndarray]]


def numerical_grad(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    eps: float = DEFAULT_EPS,
    indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Central-difference gradient of ``f`` at ``x``.

    Args:
        f: Scalar function of an array shaped like ``x``
        x: Evaluation point (not modified)
        eps: Step size
        indices: Flat indices to differentiate (all if None); others stay 0

    Returns:
        Array shaped like ``x``
    """
    x = np.array(x, dtype=np.float64, copy=True)
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    for i in (range(flat.size) if indices is None else indices):
        saved = flat[i]
        flat[i] = saved + eps
        upper = f(x)
        flat[i] = saved - eps
        lower = f(x)
        flat[i] = saved
        grad[i] = (upper - lower) / (2.0 * eps)
    return grad.reshape(x.shape)


def relative_error(analytic: np.ndarray, numerical: np.ndarray) -> float:
    """``|a - n| / max(|a|, |n|)`` in the Euclidean norm (0 when both vanish)."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numerical))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numerical) / scale)


@dataclass
class GradcheckRow:
    op: str
    cases: int
    max_rel_error: float
    passed: bool


def _random_spec(rng: np.random.Generator) -> GridSpec:
    return GridSpec(
        K=int(rng.integers(1, 3)),
        D=int(rng.integers(1, 4)),
        H=int(rng.integers(2, 5)),
        W=int(rng.integers(2, 5)),
    )


def _random_joints(rng: np.random.Generator, spec: GridSpec, planar: Optional[bool] = None) -> JointSet:
    upper = np.array(spec.axis_lengths(), dtype=np.float64) - 1.0
    coords = rng.uniform(0.0, 1.0, size=(spec.K, 3)) * upper
    mask = np.ones((spec.K, 3), dtype=bool)
    if planar is None:
        planar = bool(rng.random() < 0.5)
    if planar:
        mask[:, 2] = False
        coords[:, 2] = np.nan
    return JointSet(coords, mask)


def _scores(spec: GridSpec, x: np.ndarray) -> Heatmap:
    return Heatmap(spec, x)


def _case_normalize_integral(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    x = rng.normal(size=spec.shape)
    upstream = rng.normal(size=(spec.K, 3))

    def f(v: np.ndarray) -> float:
        return float(np.sum(upstream * integral_decode(normalize(_scores(spec, v))).coords))

    return f, x, integral_backward(_scores(spec, x), upstream).d_scores, None


def _case_two_step(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    x = rng.normal(size=spec.shape)
    upstream = rng.normal(size=(spec.K, 3))

    def f(v: np.ndarray) -> float:
        return float(np.sum(upstream * two_step_decode(normalize(_scores(spec, v))).coords))

    return f, x, two_step_backward(_scores(spec, x), upstream).d_scores, None


def _case_h1(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    x = rng.normal(size=spec.shape)
    target = gaussian_target(spec, _random_joints(rng, spec), sigma=float(rng.uniform(0.5, 2.0)))
    return (
        lambda v: h1_loss(_scores(spec, v), target).value,
        x,
        h1_loss(_scores(spec, x), target).grad.d_scores,
        None,
    )


def _case_h2(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    x = rng.normal(size=spec.shape)
    gt = _random_joints(rng, spec)
    return lambda v: h2_loss(_scores(spec, v), gt).value, x, h2_loss(_scores(spec, x), gt).grad.d_scores, None


def _case_h3(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    x = rng.normal(size=spec.shape)
    gt = _random_joints(rng, spec)
    radius = float(rng.uniform(0.5, 3.0))
    return (
        lambda v: h3_loss(_scores(spec, v), gt, radius).value,
        x,
        h3_loss(_scores(spec, x), gt, radius).grad.d_scores,
        None,
    )


def _case_vector_loss(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    x = rng.normal(size=spec.shape)
    gt = _random_joints(rng, spec)
    sigma = float(rng.uniform(0.5, 2.0))

    def term(v: np.ndarray):
        nh = normalize(_scores(spec, v))
        return nh, vector_loss({axis: marginalize(nh, axis) for axis in AXES}, gt, sigma)

    nh, loss = term(x)
    return lambda v: term(v)[1].value, x, marginal_backward(nh, loss.grad).d_scores, None


def _random_loss_spec(rng: np.random.Generator) -> LossSpec:
    joint = str(rng.choice(["L1", "L2", NONE]))
    heatmaps = [h for h in HEATMAP_LOSSES if joint != NONE or h != NONE]
    return LossSpec(
        heatmap_loss=str(rng.choice(heatmaps)),
        joint_loss=joint,
        joint_weight=float(rng.uniform(0.1, 2.0)),
        decomposition=str(rng.choice(DECOMPOSITIONS)),
        gaussian_sigma=float(rng.uniform(0.5, 2.0)),
        h3_radius=float(rng.uniform(0.5, 3.0)),
    )


def _case_compose_loss(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    x = rng.normal(size=spec.shape)
    gt = _random_joints(rng, spec)
    loss_spec = _random_loss_spec(rng)
    return (
        lambda v: compose_loss(loss_spec, _scores(spec, v), gt).total,
        x,
        compose_loss(loss_spec, _scores(spec, x), gt).d_scores.d_scores,
        None,
    )


def _flatten(params: Dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([p.reshape(-1) for p in params.values()])


def _unflatten(template: Dict[str, np.ndarray], flat: np.ndarray) -> Dict[str, np.ndarray]:
    out, start = {}, 0
    for name, p in template.items():
        out[name] = flat[start:start + p.size].reshape(p.shape)
        start += p.size
    return out


def _case_toy_model(rng: np.random.Generator) -> Case:
    base = _random_spec(rng)
    spec = GridSpec(K=base.K, D=base.D, H=base.H + 1, W=base.W + 1)
    config = ModelConfig(width=int(rng.integers(1, 4)), kernel=int(rng.choice([1, 3])))
    params = {
        name: rng.normal(0.0, 0.3, size=shape)
        for name, shape in ToyModel.parameter_shapes(spec, config).items()
    }
    model = ToyModel(spec, config, params)
    evidence = Heatmap(spec, rng.uniform(0.0, 1.0, size=spec.shape))
    gt = _random_joints(rng, spec)
    loss_spec = _random_loss_spec(rng)

    def f(theta: np.ndarray) -> float:
        candidate = ToyModel(spec, config, _unflatten(model.params, theta))
        return compose_loss(loss_spec, candidate.forward(evidence), gt).total

    scores, cache = model.forward_with_cache(evidence)
    analytic = _flatten(model.backward(cache, compose_loss(loss_spec, scores, gt).d_scores))
    theta = _flatten(model.params)
    indices = rng.choice(theta.size, size=min(SAMPLED_PARAMETERS, theta.size), replace=False)
    return f, theta, analytic, indices


def _case_regression_head(rng: np.random.Generator) -> Case:
    spec = _random_spec(rng)
    head = RegressionHead(spec)
    head = RegressionHead(spec, {name: rng.normal(0.0, 0.3, size=p.shape) for name, p in head.params.items()})
    evidence = Heatmap(spec, rng.uniform(0.0, 1.0, size=spec.shape))
    gt = _random_joints(rng, spec)

    def f(theta: np.ndarray) -> float:
        candidate = RegressionHead(spec, _unflatten(head.params, theta))
        return joint_loss(candidate.predict(evidence), gt, "L2").value

    coords, cache = head.forward_with_cache(evidence)
    analytic = _flatten(head.backward(cache, joint_loss(coords, gt, "L2").grad))
    return f, _flatten(head.params), analytic, None


GRADCHECK_OPS: Dict[str, Callable[[np.random.Generator], Case]] = {
    "normalize_integral": _case_normalize_integral,
    "two_step": _case_two_step,
    "h1": _case_h1,
    "h2": _case_h2,
    "h3": _case_h3,
    "vector_loss": _case_vector_loss,
    "compose_loss": _case_compose_loss,
    "toy_model": _case_toy_model,
    "regression_head": _case_regression_head,
}


def run_gradcheck(
    seed: int = 0,
    cases: int = 100,
    tolerance: float = DEFAULT_TOLERANCE,
    inject_sign_error: Optional[str] = None,
    ops: Optional[Sequence[str]] = None,
    eps: float = DEFAULT_EPS,
) -> List[GradcheckRow]:
    """
    Check every op's analytic gradient against central differences.

    Args:
        seed: Seed of the random instances
        cases: Instances per op (0 gives an empty table)
        tolerance: Maximum accepted relative error
        inject_sign_error: Name of an op whose analytic gradient is negated
            (negative control)
        ops: Subset of op names (all if None)
        eps: Finite-difference step

    Returns:
        One row per op
    """
    if cases <= 0:
        return []
    names = list(GRADCHECK_OPS) if ops is None else list(ops)
    unknown = [name for name in names if name not in GRADCHECK_OPS]
    if unknown:
        raise ValueError(f"Unknown gradcheck op(s): {unknown}")

    rows = []
    for index, name in enumerate(GRADCHECK_OPS):
        if name not in names:
            continue
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
        worst = 0.0
        for _ in range(cases):
            f, x, analytic, indices = GRADCHECK_OPS[name](rng)
            if name == inject_sign_error:
                analytic = -analytic
            numerical = numerical_grad(f, x, eps, indices)
            if indices is not None:
                analytic = analytic.reshape(-1)[indices]
                numerical = numerical.reshape(-1)[indices]
            worst = max(worst, relative_error(analytic, numerical))
        passed = worst < tolerance
        rows.append(GradcheckRow(name, cases, worst, passed))
        log = logger.info if passed else logger.error
        log(f"gradcheck {name}: {cases} cases, max rel error {worst:.3e} {'PASS' if passed else 'FAIL'}")
    return rows


def gradcheck_frame(rows: Sequence[GradcheckRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [[row.op, row.cases, row.max_rel_error, row.passed] for row in rows],
        columns=GRADCHECK_COLUMNS,
    )
