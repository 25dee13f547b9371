"""Loss, analytic gradient, and Adam refinement."""

import numpy as np
import pytest

from landreg.core import AffineParams9, PointSet, compose, decompose, transform_array
from landreg.errors import CorrespondenceError, DivergenceError, InvalidParameterError
from landreg.refine import RefineConfig, RefineResult, loss, loss_gradient, refine
from landreg.umeyama import umeyama_fit

TETRA = np.array([[0.0, 0.0, 0.0], [20.0, 0.0, 0.0], [0.0, 20.0, 0.0], [0.0, 0.0, 20.0]])


def random_instance(rng: np.random.Generator, n: int | None = None):
    n = n if n is not None else int(rng.integers(3, 11))
    src = rng.uniform(-30, 30, size=(n, 3))
    dst = rng.uniform(-30, 30, size=(n, 3))
    params = AffineParams9(
        t=tuple(rng.uniform(-10, 10, 3)),
        r=tuple(rng.uniform(-1, 1, 3)),
        s=tuple(rng.uniform(0.5, 2.0, 3)),
    )
    return params, PointSet(src), PointSet(dst)


def finite_difference(params, moving, fixed, h=1e-6):
    v = params.as_vector()
    out = np.empty(9)
    for i in range(9):
        vp, vm = v.copy(), v.copy()
        vp[i] += h
        vm[i] -= h
        out[i] = (
            loss(AffineParams9.from_vector(vp), moving, fixed)
            - loss(AffineParams9.from_vector(vm), moving, fixed)
        ) / (2 * h)
    return out


def test_config_defaults():
    cfg = RefineConfig()
    assert cfg.iterations == 10_000
    assert cfg.step_size == 1e-5
    assert (cfg.beta1, cfg.beta2, cfg.epsilon, cfg.loss_epsilon) == (0.9, 0.999, 1e-8, 1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"iterations": 0},
        {"iterations": -3},
        {"step_size": 0.0},
        {"step_size": -1e-5},
        {"beta1": 0.0},
        {"beta1": 1.0},
        {"beta2": 1.5},
        {"epsilon": 0.0},
        {"loss_epsilon": 0.0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        RefineConfig(**kwargs)


def test_loss_at_exact_fit_is_epsilon_floor():
    params = AffineParams9((1, 2, 3), (0.1, -0.2, 0.3), (1.1, 0.9, 1.3))
    moving = PointSet(TETRA)
    fixed = PointSet(transform_array(compose(params), TETRA))
    assert loss(params, moving, fixed) <= 1e-6


def test_loss_three_four_five():
    value = loss(
        AffineParams9.identity(),
        PointSet(np.array([[0.0, 0.0, 0.0]])),
        PointSet(np.array([[3.0, 4.0, 0.0]])),
    )
    assert abs(value - 5.0) < 1e-6


def test_loss_is_mean_over_points():
    value = loss(
        AffineParams9.identity(),
        PointSet(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])),
        PointSet(np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])),
    )
    assert abs(value - 1.5) < 1e-6


def test_loss_size_mismatch():
    with pytest.raises(CorrespondenceError):
        loss(AffineParams9.identity(), PointSet(TETRA), PointSet(TETRA[:2]))


def test_gradient_unit_translation_direction():
    grad = loss_gradient(
        AffineParams9.identity(),
        PointSet(np.array([[0.0, 0.0, 0.0]])),
        PointSet(np.array([[1.0, 0.0, 0.0]])),
    )
    assert abs(grad[0] - (-1.0)) < 1e-6
    assert np.abs(grad[1:3]).max() < 1e-9


def test_gradient_vanishes_at_exact_fit():
    params = AffineParams9((1, -1, 2), (0.2, 0.1, -0.3), (1.2, 0.8, 1.0))
    moving = PointSet(TETRA)
    fixed = PointSet(transform_array(compose(params), TETRA))
    assert np.linalg.norm(loss_gradient(params, moving, fixed)) < 1e-4


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1234)
    for _ in range(20):
        params, moving, fixed = random_instance(rng)
        grad = loss_gradient(params, moving, fixed)
        fd = finite_difference(params, moving, fixed)
        mask = np.abs(grad) > 1e-8
        rel = np.abs(grad[mask] - fd[mask]) / np.abs(fd[mask])
        assert rel.max() < 1e-4


def test_refine_stationary_at_optimum():
    moving = PointSet(TETRA)
    result = refine(AffineParams9.identity(), moving, moving, RefineConfig(iterations=50))
    assert result.params == AffineParams9.identity()
    assert result.final_loss <= result.initial_loss


def test_refine_beats_uniform_fit_on_diagonal_scaling():
    rng = np.random.default_rng(0)
    src = rng.uniform(-25, 25, size=(4, 3))
    dst = src * np.array([1.0, 2.0, 3.0])
    moving, fixed = PointSet(src), PointSet(dst)
    result = refine(decompose(umeyama_fit(moving, fixed)), moving, fixed)
    assert result.final_loss < 0.9 * result.initial_loss


def test_refine_does_not_regress_on_similarity_data():
    params = AffineParams9((4, -2, 1), (0.2, -0.1, 0.25), (1.15, 1.15, 1.15))
    moving = PointSet(TETRA)
    fixed = PointSet(transform_array(compose(params), TETRA))
    result = refine(decompose(umeyama_fit(moving, fixed)), moving, fixed)
    assert result.final_loss <= result.initial_loss
    assert result.initial_loss <= 1e-6
    assert result.final_loss <= 1e-6


def test_refine_final_never_exceeds_initial():
    rng = np.random.default_rng(99)
    for _ in range(5):
        params, moving, fixed = random_instance(rng, n=5)
        result = refine(params, moving, fixed, RefineConfig(iterations=300))
        assert result.final_loss <= result.initial_loss
        assert result.final_loss <= loss(params, moving, fixed)


def test_refine_is_deterministic():
    rng = np.random.default_rng(7)
    params, moving, fixed = random_instance(rng, n=6)
    cfg = RefineConfig(iterations=500)
    a = refine(params, moving, fixed, cfg)
    b = refine(params, moving, fixed, cfg)
    assert a.loss_trace == b.loss_trace
    assert a.params == b.params


def test_trace_covers_first_every_100th_and_last():
    moving = PointSet(TETRA)
    fixed = PointSet(TETRA + np.array([5.0, 0.0, 0.0]))
    result = refine(AffineParams9.identity(), moving, fixed, RefineConfig(iterations=250))
    iterations = [it for it, _ in result.loss_trace]
    assert iterations == [0, 1, 100, 200, 250]
    assert result.loss_trace[0][1] == result.initial_loss


def test_divergence_reported_with_iteration():
    small = PointSet(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    huge = PointSet(np.array([[1e200, 0.0, 0.0], [0.0, 1e200, 0.0], [0.0, 0.0, 1e200]]))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergenceError) as info:
            refine(AffineParams9.identity(), huge, small, RefineConfig(iterations=5))
    assert info.value.iteration == 0

    grown = PointSet(np.array([[1e150, 0.0, 0.0], [0.0, 1e150, 0.0], [0.0, 0.0, 1e150]]))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergenceError) as info:
            refine(
                AffineParams9.identity(), grown, small,
                RefineConfig(iterations=5, step_size=1e150),
            )
    assert info.value.iteration >= 1


def test_refine_result_is_frozen():
    moving = PointSet(TETRA)
    result = refine(AffineParams9.identity(), moving, moving, RefineConfig(iterations=2))
    assert isinstance(result, RefineResult)
    with pytest.raises(Exception):
        result.final_loss = 0.0
