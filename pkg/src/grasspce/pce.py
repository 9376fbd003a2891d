"""Polynomial chaos expansions with a total-degree Legendre basis.

Inputs with independent uniform marginals are standardized to [-1, 1] per
dimension; the basis is the tensor product of Legendre polynomials
normalized to unit variance, truncated to multi-indices of total degree at
most ``s``.  Coefficients are fit by (optionally ridge-regularized) least
squares with a closed-form solution, solved through a stable factorization.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, ExtrapolationWarning, FitError

_MAX_TERMS = 10**6
_SUPPORT_SLACK = 1e-12


@dataclass(frozen=True)
class MultiIndexSet:
    """All multi-indices alpha with ||alpha||_1 <= s, in graded-lex order."""

    d: int
    s: int
    indices: np.ndarray  # (P, d) integer matrix; first row is zero

    @property
    def n_terms(self) -> int:
        return self.indices.shape[0]


def n_total_degree_terms(d: int, s: int) -> int:
    """Number of multi-indices of total degree <= s in d variables: (s+d)!/(s!d!)."""
    return math.comb(s + d, d)


def build_index_set(d: int, s: int) -> MultiIndexSet:
    """Enumerate the total-degree truncation set.

    Indices are ordered by total degree, then lexicographically within each
    degree, so the zero index always comes first.
    """
    if d < 1:
        raise ValueError("input dimension d must be >= 1")
    if s < 0:
        raise ValueError("max total degree s must be >= 0")
    n_terms = n_total_degree_terms(d, s)
    if n_terms > _MAX_TERMS:
        raise FitError(f"index set would hold {n_terms} terms (limit {_MAX_TERMS})")
    rows = []
    for degree in range(s + 1):
        rows.extend(_compositions(degree, d))
    indices = np.array(rows, dtype=np.int64).reshape(n_terms, d)
    return MultiIndexSet(d=d, s=s, indices=indices)


def _compositions(total: int, d: int):
    """All d-tuples of nonnegative integers summing to ``total``, in lex order."""
    if d == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class UniformDistribution:
    """Independent uniform marginals, one (lo, hi) interval per input dimension."""

    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self):
        lows = np.atleast_1d(np.asarray(self.lows, dtype=float))
        highs = np.atleast_1d(np.asarray(self.highs, dtype=float))
        if lows.shape != highs.shape or lows.ndim != 1:
            raise DimensionMismatch("lows and highs must be vectors of equal length")
        if not np.all(lows < highs):
            raise ValueError("every marginal needs lo < hi")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)

    @property
    def d(self) -> int:
        return self.lows.size

    def standardize(self, thetas: np.ndarray) -> np.ndarray:
        """Affine map of inputs onto [-1, 1] per dimension."""
        return 2.0 * (thetas - self.lows) / (self.highs - self.lows) - 1.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n i.i.d. inputs; shape (n, d)."""
        return rng.uniform(self.lows, self.highs, size=(n, self.d))


@dataclass(frozen=True)
class PCEModel:
    """A fitted expansion: index set, input distribution, coefficient matrix."""

    index_set: MultiIndexSet
    distribution: UniformDistribution
    coefficients: np.ndarray   # (P, n_out)
    ridge: float
    condition_number: float

    @property
    def n_outputs(self) -> int:
        return self.coefficients.shape[1]


def _legendre_table(z: np.ndarray, s: int) -> np.ndarray:
    """Normalized Legendre values; shape (s+1,) + z.shape.

    Uses the three-term recurrence (k+1) P_{k+1} = (2k+1) z P_k - k P_{k-1},
    scaled by sqrt(2k+1) so each polynomial has unit variance on U(-1, 1).
    """
    table = np.empty((s + 1,) + z.shape)
    table[0] = 1.0
    if s >= 1:
        table[1] = z
    for k in range(1, s):
        table[k + 1] = ((2 * k + 1) * z * table[k] - k * table[k - 1]) / (k + 1)
    norms = np.sqrt(2.0 * np.arange(s + 1) + 1.0)
    return table * norms.reshape((-1,) + (1,) * z.ndim)


def design_matrix(thetas: np.ndarray, index_set: MultiIndexSet,
                  distribution: UniformDistribution) -> np.ndarray:
    """Evaluate every basis polynomial at every input; shape (N, P)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != index_set.d or distribution.d != index_set.d:
        raise DimensionMismatch(
            f"inputs have dimension {thetas.shape[1]}, index set expects {index_set.d}"
        )
    z = distribution.standardize(thetas)
    if np.any(np.abs(z) > 1.0 + _SUPPORT_SLACK):
        warnings.warn(
            "input outside the distribution support; evaluating the basis anyway",
            ExtrapolationWarning,
            stacklevel=2,
        )
    table = _legendre_table(z, index_set.s)  # (s+1, N, d)
    psi = np.ones((thetas.shape[0], index_set.n_terms))
    for dim in range(index_set.d):
        psi *= table[index_set.indices[:, dim], :, dim].T
    return psi


def eval_basis(theta, index_set: MultiIndexSet,
               distribution: UniformDistribution) -> np.ndarray:
    """Basis values at a single input; vector of length P."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise DimensionMismatch("theta must be a single input vector")
    return design_matrix(theta[None], index_set, distribution)[0]


def fit(thetas, outputs, index_set: MultiIndexSet, distribution: UniformDistribution,
        ridge: float = 0.0) -> PCEModel:
    """Least-squares coefficients C = (Psi^T Psi + ridge I)^{-1} Psi^T Y.

    ``ridge = 0`` requires at least P samples and a full-rank design; with a
    positive ridge the augmented system [Psi; sqrt(ridge) I] is solved
    instead.  Either way a stable least-squares factorization is used rather
    than forming the normal equations.
    """
    if ridge < 0.0:
        raise ValueError("ridge must be nonnegative")
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    psi = design_matrix(thetas, index_set, distribution)
    n_samples, n_terms = psi.shape
    if outputs.shape[0] != n_samples:
        raise DimensionMismatch("thetas and outputs disagree on the sample count")
    svals = np.linalg.svd(psi, compute_uv=False)
    condition = float(svals[0] / svals[-1]) if svals[-1] > 0 else math.inf
    if ridge == 0.0:
        if n_samples < n_terms:
            raise FitError(
                f"{n_samples} samples cannot determine {n_terms} coefficients; "
                "use ridge > 0 or lower the degree"
            )
        coeffs, _, rank, _ = np.linalg.lstsq(psi, outputs, rcond=None)
        if rank < n_terms:
            raise FitError(
                "design matrix is rank-deficient; use ridge > 0 or lower the degree"
            )
    else:
        augmented = np.vstack([psi, math.sqrt(ridge) * np.eye(n_terms)])
        padded = np.vstack([outputs, np.zeros((n_terms, outputs.shape[1]))])
        coeffs, _, _, _ = np.linalg.lstsq(augmented, padded, rcond=None)
    return PCEModel(
        index_set=index_set,
        distribution=distribution,
        coefficients=coeffs,
        ridge=ridge,
        condition_number=condition,
    )


def predict(model: PCEModel, theta) -> np.ndarray:
    """Expansion value at one input; vector of length n_out."""
    return model.coefficients.T @ eval_basis(theta, model.index_set, model.distribution)


def predict_batch(model: PCEModel, thetas) -> np.ndarray:
    """Expansion values at many inputs; shape (N, n_out)."""
    return design_matrix(thetas, model.index_set, model.distribution) @ model.coefficients
