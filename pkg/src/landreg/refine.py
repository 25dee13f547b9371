"""Gradient-descent refinement of the nine transform parameters.

Starting from any parameter vector (typically the decomposed similarity
fit), Adam descends the mean point-to-point Euclidean distance between the
fixed set and the transformed moving set. Per-axis scales are free to move
independently, which is exactly the family the closed-form fit cannot
reach. The result is the best-loss iterate visited, never the last one,
so refinement can only match or improve its starting point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    AffineParams9,
    PointSet,
    require_correspondence,
    rotation_x,
    rotation_y,
    rotation_z,
)
from .errors import DivergenceError, InvalidParameterError

_DRX = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
_DRY = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
_DRZ = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

TRACE_STRIDE = 100


@dataclass(frozen=True)
class RefineConfig:
    """Adam settings. The iteration count and step size default to the
    values the registration pipeline was tuned with (10^4 steps of 1e-5);
    the moment coefficients are the optimizer's standard defaults.

    ``loss_epsilon`` regularizes the square root in the distance loss so
    its gradient stays finite at exact alignment.
    """

    iterations: int = 10_000
    step_size: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    loss_epsilon: float = 1e-12

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations <= 0:
            raise InvalidParameterError(f"iterations must be a positive integer, got {self.iterations}")
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise InvalidParameterError(f"step_size must be positive, got {self.step_size}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise InvalidParameterError(f"{name} must lie in (0, 1), got {b}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not (self.loss_epsilon > 0 and math.isfinite(self.loss_epsilon)):
            raise InvalidParameterError(f"loss_epsilon must be positive, got {self.loss_epsilon}")


@dataclass(frozen=True)
class RefineResult:
    """Outcome of a refinement run.

    ``params`` and ``final_loss`` describe the best iterate visited, so
    ``final_loss <= initial_loss`` always. ``loss_trace`` holds
    (iteration, loss) samples: iteration 0, every 100th, and the last.
    """

    params: AffineParams9
    loss_trace: tuple[tuple[int, float], ...]
    initial_loss: float
    final_loss: float


def _loss_and_gradient(theta: np.ndarray, src: np.ndarray, dst: np.ndarray,
                       loss_epsilon: float) -> tuple[float, np.ndarray]:
    """Mean regularized distance and its 9-vector gradient at ``theta``.

    ``theta`` is (tx, ty, tz, rx, ry, rz, sx, sy, sz); ``src``/``dst`` are
    (n, 3) coordinate arrays. Scales may be arbitrary here: the optimizer
    owns the raw vector and only converts back to validated parameters at
    the end.
    """
    t = theta[0:3]
    rx, ry, rz = theta[3:6]
    s = theta[6:9]

    mx = rotation_x(rx)
    my = rotation_y(ry)
    mz = rotation_z(rz)
    rot = mz @ my @ mx
    # derivative of the rotation w.r.t. each angle, same composition order
    drot = (
        mz @ my @ (_DRX @ mx),
        mz @ (_DRY @ my) @ mx,
        (_DRZ @ mz) @ my @ mx,
    )

    scaled = src * s  # diag(s) @ p for every point
    predicted = scaled @ rot.T + t
    resid = dst - predicted
    dist = np.sqrt((resid * resid).sum(axis=1) + loss_epsilon)
    n = src.shape[0]
    loss = float(dist.mean())

    # d(loss)/d(predicted_i) = -resid_i / (n * dist_i)
    gpred = -resid / (n * dist)[:, None]
    grad = np.empty(9)
    grad[0:3] = gpred.sum(axis=0)
    for a in range(3):
        grad[3 + a] = float(((gpred @ drot[a]) * scaled).sum())
    grad[6:9] = ((gpred @ rot) * src).sum(axis=0)
    return loss, grad


def loss(params: AffineParams9, moving: PointSet, fixed: PointSet,
         loss_epsilon: float = 1e-12) -> float:
    """Mean per-correspondence Euclidean distance in mm.

    Each distance is ``sqrt(||fixed_i - T(moving_i)||^2 + loss_epsilon)``,
    so the value at exact alignment is ``sqrt(loss_epsilon)`` rather than
    zero. This is the quantity :func:`refine` descends, and it matches the
    registration error metric up to the regularizer.
    """
    require_correspondence(moving, fixed)
    value, _ = _loss_and_gradient(params.as_vector(), moving.coords, fixed.coords, loss_epsilon)
    return value


def loss_gradient(params: AffineParams9, moving: PointSet, fixed: PointSet,
                  loss_epsilon: float = 1e-12) -> np.ndarray:
    """Analytic partial derivatives of :func:`loss`.

    Ordered (tx, ty, tz, rx, ry, rz, sx, sy, sz), by the chain rule through
    the matrix composition. Agrees with central finite differences to a
    relative error below 1e-4 on any non-vanishing component.
    """
    require_correspondence(moving, fixed)
    _, grad = _loss_and_gradient(params.as_vector(), moving.coords, fixed.coords, loss_epsilon)
    return grad


def refine(init: AffineParams9, moving: PointSet, fixed: PointSet,
           config: RefineConfig | None = None) -> RefineResult:
    """Adam descent of :func:`loss` from ``init``.

    Runs exactly ``config.iterations`` bias-corrected Adam updates, records
    a loss trace, and returns the best-loss parameters visited (including
    the start, so the result never regresses). Deterministic: identical
    inputs produce bit-identical traces.

    Raises :class:`DivergenceError`, tagged with the iteration, if the
    loss becomes non-finite.
    """
    require_correspondence(moving, fixed)
    cfg = config if config is not None else RefineConfig()
    src = moving.coords
    dst = fixed.coords

    theta = init.as_vector()
    m = np.zeros(9)
    v = np.zeros(9)
    trace: list[tuple[int, float]] = []

    value, grad = _loss_and_gradient(theta, src, dst, cfg.loss_epsilon)
    if not math.isfinite(value):
        raise DivergenceError("loss is non-finite at the initial parameters", iteration=0)
    initial_loss = value
    best_loss = value
    best_theta = theta.copy()
    trace.append((0, value))

    for k in range(1, cfg.iterations + 1):
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
        m_hat = m / (1.0 - cfg.beta1**k)
        v_hat = v / (1.0 - cfg.beta2**k)
        theta = theta - cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.epsilon)

        value, grad = _loss_and_gradient(theta, src, dst, cfg.loss_epsilon)
        if not math.isfinite(value):
            raise DivergenceError(f"loss became non-finite at iteration {k}", iteration=k)
        if value < best_loss:
            best_loss = value
            best_theta = theta.copy()
        if k == 1 or k % TRACE_STRIDE == 0 or k == cfg.iterations:
            trace.append((k, value))

    return RefineResult(
        params=AffineParams9.from_vector(best_theta),
        loss_trace=tuple(trace),
        initial_loss=initial_loss,
        final_loss=best_loss,
    )
