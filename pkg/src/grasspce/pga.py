"""Principal geodesic analysis of a concentrated cluster of Grassmann points.

Points are lifted to the tangent space at their Karcher mean, where ordinary
PCA of the (flattened) tangent vectors yields an orthonormal basis of
principal directions.  Coordinates along the retained directions identify
each point; the exponential map carries reconstructions back to the manifold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import CutLocusError, DimensionMismatch, FitError, SpreadWarning
from .manifold import OrthoFrame, TangentVector, exp_map, log_map, pairwise_distances, stack_frames
from .stats import UNIQUENESS_RADIUS, KarcherConfig, karcher_mean

# Eigenvalues below this fraction of the leading one are treated as zero.
_EIGEN_FLOOR = 1e-15


@dataclass(frozen=True)
class PGAModel:
    """Tangent-space PCA at the Karcher mean of one cluster.

    ``basis`` holds the retained principal directions as rows, each a
    flattened horizontal n x p tangent matrix; ``tangent_mean`` is the sample
    mean of the lifted tangent vectors.  For a zero-variance cluster a single
    all-zero basis row is kept so downstream consumers see a fixed dimension.
    """

    mean: OrthoFrame
    basis: np.ndarray          # (d, n*p), orthonormal rows
    eigenvalues: np.ndarray    # full spectrum, nonincreasing, clamped >= 0
    tangent_mean: np.ndarray   # (n*p,)
    d: int
    explained_fraction: float
    variance_threshold: float

    @property
    def n(self) -> int:
        return self.mean.n

    @property
    def p(self) -> int:
        return self.mean.p


@dataclass(frozen=True)
class PGACoordinates:
    """Coordinates of a point along the retained principal directions."""

    coeffs: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("coordinates must be finite")


def fit_pga(points, variance_threshold: float = 0.99,
            karcher: KarcherConfig | None = None) -> PGAModel:
    """Fit a PGA model to a cluster of frames.

    The retained dimension is the smallest d whose eigenvalues explain at
    least ``variance_threshold`` of the total tangent variance (always >= 1).
    """
    points = list(points)
    if len(points) < 2:
        raise FitError("PGA needs at least two points")
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError("variance_threshold must lie in (0, 1]")
    mean = karcher_mean(points, karcher).mean
    spread = float(pairwise_distances(stack_frames(points), mean.data[None]).max())
    if spread > UNIQUENESS_RADIUS:
        warnings.warn(
            "cluster radius at the mean exceeds pi/4; tangent-space projections may distort",
            SpreadWarning,
            stacklevel=2,
        )
    try:
        lifts = np.stack([log_map(mean, pt).data.ravel() for pt in points])
    except CutLocusError as exc:
        raise FitError("cluster not concentrated: a point is at the cut locus of the mean") from exc
    tangent_mean = lifts.mean(axis=0)
    centered = lifts - tangent_mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eigenvalues = svals * svals / len(points)
    if eigenvalues[0] > 0.0:
        eigenvalues = np.where(eigenvalues < eigenvalues[0] * _EIGEN_FLOOR, 0.0, eigenvalues)
    total = float(eigenvalues.sum())
    if total == 0.0:
        return PGAModel(
            mean=mean,
            basis=np.zeros((1, lifts.shape[1])),
            eigenvalues=eigenvalues,
            tangent_mean=tangent_mean,
            d=1,
            explained_fraction=1.0,
            variance_threshold=variance_threshold,
        )
    cumulative = np.cumsum(eigenvalues)
    ratios = cumulative / cumulative[-1]
    d = int(np.searchsorted(ratios, variance_threshold - 1e-12)) + 1
    return PGAModel(
        mean=mean,
        basis=vt[:d],
        eigenvalues=eigenvalues,
        tangent_mean=tangent_mean,
        d=d,
        explained_fraction=float(ratios[d - 1]),
        variance_threshold=variance_threshold,
    )


def project(model: PGAModel, point: OrthoFrame) -> PGACoordinates:
    """Coordinates of ``point``: inner products of its centered lift with the basis."""
    lift = log_map(model.mean, point).data.ravel()
    return PGACoordinates(model.basis @ (lift - model.tangent_mean))


def reconstruct(model: PGAModel, coords) -> OrthoFrame:
    """Map coordinates back to the manifold through the exponential map.

    ``coords`` may be a :class:`PGACoordinates` or a plain vector of length
    at most ``model.d``; shorter vectors use only the leading directions.
    """
    vec = np.asarray(coords.coeffs if isinstance(coords, PGACoordinates) else coords, dtype=float)
    if vec.ndim != 1 or vec.size > model.d:
        raise DimensionMismatch(f"expected at most {model.d} coordinates, got shape {vec.shape}")
    gamma = model.tangent_mean + vec @ model.basis[: vec.size]
    tangent = TangentVector(gamma.reshape(model.mean.data.shape), model.mean, copy=False)
    return exp_map(model.mean, tangent)
