"""Grassmann manifold points, principal angles, and the exp/log maps.

A p-dimensional subspace of R^n is represented by an orthonormal frame
spanning it: an n x p matrix with orthonormal columns (:class:`OrthoFrame`).
Tangent vectors at a frame are n x p matrices orthogonal to the frame
(:class:`TangentVector`).  The geodesic distance between two subspaces is the
arc length ``sqrt(sum(theta_i^2))`` over their principal angles, which is the
metric induced by the exponential/logarithmic maps implemented here.

All functions are pure and all values are immutable after construction, so
they are safe to share between threads.
"""

from __future__ import annotations

import numpy as np

from .exceptions import CutLocusError, DimensionMismatch

ORTHONORMALITY_TOL = 1e-10
HORIZONTALITY_TOL = 1e-8

# Singular values of tangent matrices below this are treated as exact zeros.
_TINY_SV = 1e-14
# Smallest singular value of base^T x at which the log map is still attempted.
_CUT_LOCUS_TOL = 1e-12
# Above this cosine, arccos loses ~sqrt(eps) of precision; switch to arcsin.
_COS_REFINE = 0.99


class OrthoFrame:
    """A point on the Grassmann manifold G(p, n).

    Stored as an n x p matrix with orthonormal columns; the matrix is frozen
    (read-only) after validation.
    """

    __slots__ = ("data",)

    def __init__(self, data, *, copy=True):
        mat = np.array(data, dtype=float) if copy else np.asarray(data, dtype=float)
        if mat.ndim != 2:
            raise DimensionMismatch(f"frame must be a 2-d matrix, got shape {mat.shape}")
        n, p = mat.shape
        if not 1 <= p <= n:
            raise DimensionMismatch(f"frame needs 1 <= p <= n, got n={n}, p={p}")
        gram_err = np.max(np.abs(mat.T @ mat - np.eye(p)))
        if not gram_err <= ORTHONORMALITY_TOL:
            raise ValueError(
                f"columns are not orthonormal: max |U^T U - I| = {gram_err:.3e}"
            )
        mat.flags.writeable = False
        self.data = mat

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"OrthoFrame(n={self.n}, p={self.p})"


class TangentVector:
    """An element of the horizontal tangent space at ``base``.

    Horizontality means ``base^T data = 0``: the vector carries no in-subspace
    rotation, only motion of the subspace itself.
    """

    __slots__ = ("data", "base")

    def __init__(self, data, base: OrthoFrame, *, copy=True):
        mat = np.array(data, dtype=float) if copy else np.asarray(data, dtype=float)
        if mat.shape != base.data.shape:
            raise DimensionMismatch(
                f"tangent shape {mat.shape} does not match base shape {base.data.shape}"
            )
        horiz_err = np.max(np.abs(base.data.T @ mat))
        if not horiz_err <= HORIZONTALITY_TOL:
            raise ValueError(
                f"matrix is not horizontal at base: max |base^T v| = {horiz_err:.3e}"
            )
        mat.flags.writeable = False
        self.data = mat
        self.base = base

    @property
    def norm(self) -> float:
        """Frobenius norm; for log-map outputs this equals the geodesic distance."""
        return float(np.linalg.norm(self.data))

    def __repr__(self):
        return f"TangentVector(n={self.data.shape[0]}, p={self.data.shape[1]}, norm={self.norm:.3e})"


class PrincipalAngles:
    """Canonical angles between two subspaces, in [0, pi/2], sorted ascending."""

    __slots__ = ("angles",)

    def __init__(self, angles):
        arr = np.asarray(angles, dtype=float)
        if arr.ndim != 1:
            raise ValueError("angles must be a vector")
        if arr.size and (arr.min() < -1e-12 or arr.max() > np.pi / 2 + 1e-12):
            raise ValueError("principal angles must lie in [0, pi/2]")
        if np.any(np.diff(arr) < -1e-12):
            raise ValueError("principal angles must be nondecreasing")
        arr = np.clip(arr, 0.0, np.pi / 2)
        arr.flags.writeable = False
        self.angles = arr

    def __len__(self):
        return self.angles.size

    def __repr__(self):
        return f"PrincipalAngles({np.array2string(self.angles, precision=4)})"


def _angles_from_cosines(cosines, sines_ascending):
    """Combine cosine- and sine-derived angle estimates.

    ``cosines`` are the singular values of a^T b in descending order, so the
    corresponding angles come out ascending.  For angles near zero the arccos
    of a cosine loses about sqrt(eps) of absolute precision; there the sine
    path (accurate for small angles) is used instead.
    """
    cosines = np.clip(cosines, -1.0, 1.0)
    theta = np.arccos(cosines)
    needs_refine = cosines > _COS_REFINE
    if np.any(needs_refine) and sines_ascending is not None:
        refined = np.arcsin(np.clip(sines_ascending, 0.0, 1.0))
        theta = np.where(needs_refine, refined, theta)
    return theta


def principal_angles(a: OrthoFrame, b: OrthoFrame) -> PrincipalAngles:
    """Principal angles between span(a) and span(b).

    Computed from the singular values of ``a^T b``; the min(p_a, p_b) angles
    are returned sorted ascending.
    """
    if a.n != b.n:
        raise DimensionMismatch(f"ambient dimensions differ: {a.n} vs {b.n}")
    inner = a.data.T @ b.data
    cosines = np.linalg.svd(inner, compute_uv=False)
    k = min(a.p, b.p)
    sines = None
    if np.any(cosines > _COS_REFINE):
        resid = b.data - a.data @ inner
        sines = np.sort(np.linalg.svd(resid, compute_uv=False))[:k]
    return PrincipalAngles(_angles_from_cosines(cosines[:k], sines))


def geodesic_distance(a: OrthoFrame, b: OrthoFrame) -> float:
    """Arc-length (geodesic) distance sqrt(sum of squared principal angles)."""
    if a.p != b.p:
        raise DimensionMismatch(f"subspace dimensions differ: {a.p} vs {b.p}")
    theta = principal_angles(a, b).angles
    return float(np.sqrt(np.sum(theta * theta)))


def stack_frames(frames) -> np.ndarray:
    """Stack a list of same-shape frames into an (N, n, p) array."""
    return np.stack([f.data for f in frames])


def pairwise_distances(stack_a: np.ndarray, stack_b: np.ndarray) -> np.ndarray:
    """Geodesic distances between two stacks of frames.

    Parameters
    ----------
    stack_a : (Na, n, p) array
    stack_b : (Nb, n, p) array

    Returns
    -------
    (Na, Nb) array of distances.
    """
    inner = np.einsum("inp,knq->ikpq", stack_a, stack_b)
    cosines = np.clip(np.linalg.svd(inner, compute_uv=False), -1.0, 1.0)
    theta = np.arccos(cosines)
    refine = cosines > _COS_REFINE
    if np.any(refine):
        ii, kk = np.nonzero(refine.any(axis=2))
        resid = stack_a[ii] - np.einsum("mnq,mpq->mnp", stack_b[kk], inner[ii, kk])
        sines = np.sort(np.linalg.svd(resid, compute_uv=False), axis=1)
        refined = np.arcsin(np.clip(sines, 0.0, 1.0))
        theta[ii, kk] = np.where(refine[ii, kk], refined, theta[ii, kk])
    return np.sqrt(np.sum(theta * theta, axis=2))


def log_map(base: OrthoFrame, x: OrthoFrame) -> TangentVector:
    """Lift ``x`` to the tangent space at ``base``.

    Computes M = (x - base base^T x)(base^T x)^{-1}, takes its thin SVD
    M = W T Z^T and returns W arctan(T) Z^T.  Defined only while ``base^T x``
    is invertible, i.e. while no principal angle reaches pi/2.
    """
    if base.n != x.n or base.p != x.p:
        raise DimensionMismatch(
            f"frames live on different manifolds: ({x.n}, {x.p}) vs ({base.n}, {base.p})"
        )
    inner = base.data.T @ x.data
    sv = np.linalg.svd(inner, compute_uv=False)
    if sv[-1] <= _CUT_LOCUS_TOL:
        raise CutLocusError("log map undefined: subspaces contain orthogonal directions")
    resid = x.data - base.data @ inner
    m = np.linalg.solve(inner.T, resid.T).T
    w, t, zt = np.linalg.svd(m, full_matrices=False)
    t = np.where(t < _TINY_SV, 0.0, t)
    gamma = (w * np.arctan(t)) @ zt
    # absorb O(eps) drift so the horizontality invariant holds exactly enough
    gamma -= base.data @ (base.data.T @ gamma)
    return TangentVector(gamma, base, copy=False)


def exp_map(base: OrthoFrame, v: TangentVector) -> OrthoFrame:
    """Follow the geodesic defined by ``v`` from ``base`` for unit time.

    With the thin SVD v = W T Z^T the endpoint is
    ``base Z cos(T) Z^T + W sin(T) Z^T``, re-orthonormalized to absorb
    rounding drift.
    """
    if v.base is not base and not np.array_equal(v.base.data, base.data):
        raise DimensionMismatch("tangent vector is anchored at a different frame")
    w, t, zt = np.linalg.svd(v.data, full_matrices=False)
    t = np.where(t < _TINY_SV, 0.0, t)
    y = (base.data @ (zt.T * np.cos(t)) + w * np.sin(t)) @ zt
    return OrthoFrame(_reorthonormalize(y), copy=False)


def _reorthonormalize(y: np.ndarray) -> np.ndarray:
    """QR-based cleanup for a nearly-orthonormal matrix, preserving column signs."""
    q, r = np.linalg.qr(y)
    signs = np.sign(np.diagonal(r)).copy()
    signs[signs == 0] = 1.0
    return q * signs


def random_frame(n: int, p: int, rng: np.random.Generator) -> OrthoFrame:
    """Draw a frame uniformly (Haar) on G(p, n)."""
    return OrthoFrame(_reorthonormalize(rng.standard_normal((n, p))), copy=False)


def random_tangent(base: OrthoFrame, rng: np.random.Generator, norm: float = 1.0) -> TangentVector:
    """Draw a random horizontal tangent vector at ``base`` with given Frobenius norm."""
    g = rng.standard_normal(base.data.shape)
    h = g - base.data @ (base.data.T @ g)
    scale = np.linalg.norm(h)
    if scale < 1e-12:  # astronomically unlikely; resample
        return random_tangent(base, rng, norm)
    return TangentVector(h * (norm / scale), base, copy=False)
