"""Karcher means and Fréchet variances of Grassmann point sets.

The Karcher (Fréchet) mean minimizes the mean squared geodesic distance to
the points; it is found by full-batch gradient descent on the manifold, with
the gradient assembled from logarithmic maps.  The Fréchet variance is the
mean squared distance of the points to a given frame.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, CutLocusError, DimensionMismatch, SpreadWarning
from .manifold import (
    OrthoFrame,
    TangentVector,
    exp_map,
    geodesic_distance,
    log_map,
    pairwise_distances,
    stack_frames,
)

# Uniqueness of the mean is only guaranteed within a ball of this radius.
UNIQUENESS_RADIUS = np.pi / 4


@dataclass(frozen=True)
class KarcherConfig:
    """Hyperparameters of the gradient-descent mean solver."""

    max_iters: int = 200
    step_size: float = 1.0
    tol: float = 1e-9

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 < self.step_size <= 1.0:
            raise ValueError("step_size must lie in (0, 1]")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class KarcherResult:
    """Converged mean plus solver diagnostics."""

    mean: OrthoFrame
    residual: float
    n_iters: int
    spread_warning: bool


def karcher_mean(points, config: KarcherConfig | None = None) -> KarcherResult:
    """Karcher mean of a set of frames.

    Iterates ``mu <- exp_mu(step * mean_i log_mu(U_i))`` until the Frobenius
    norm of the mean tangent falls below ``config.tol``.  The first point
    initializes the iteration; on a log-map failure the solver restarts from
    the next point.  Data spread beyond the uniqueness radius raises a
    :class:`SpreadWarning` but the iteration is still attempted.
    """
    points = list(points)
    if not points:
        raise ValueError("karcher_mean needs at least one point")
    n, p = points[0].n, points[0].p
    for pt in points:
        if pt.n != n or pt.p != p:
            raise DimensionMismatch("all points must live on the same manifold")
    cfg = config or KarcherConfig()
    last_error = None
    for start in range(len(points)):
        try:
            return _descend(points, points[start], cfg)
        except CutLocusError as exc:
            last_error = exc
    raise ConvergenceError("data too spread for unique Karcher mean") from last_error


def _descend(points, init: OrthoFrame, cfg: KarcherConfig) -> KarcherResult:
    spread = float(pairwise_distances(stack_frames(points), init.data[None]).max())
    spread_flag = spread > UNIQUENESS_RADIUS
    if spread_flag:
        warnings.warn(
            "points spread beyond pi/4 of the initializer; the Karcher mean may not be unique",
            SpreadWarning,
            stacklevel=3,
        )
    mu = init
    residual = np.inf
    for iteration in range(cfg.max_iters):
        grad = np.zeros_like(mu.data)
        for pt in points:
            grad += log_map(mu, pt).data
        grad /= len(points)
        residual = float(np.linalg.norm(grad))
        if residual <= cfg.tol:
            return KarcherResult(mu, residual, iteration, spread_flag)
        mu = exp_map(mu, TangentVector(cfg.step_size * grad, mu, copy=False))
    raise ConvergenceError(
        f"Karcher mean did not converge in {cfg.max_iters} iterations "
        f"(residual {residual:.3e})",
        residual=residual,
    )


def frechet_variance(points, mean: OrthoFrame) -> float:
    """Mean squared geodesic distance of ``points`` to ``mean``."""
    points = list(points)
    if not points:
        raise ValueError("frechet_variance needs at least one point")
    total = 0.0
    for pt in points:
        total += geodesic_distance(pt, mean) ** 2
    return total / len(points)
