"""End-to-end surrogate pipeline for matrix-valued simulation responses.

Training factorizes every response by thin SVD, clusters the resulting
subspace frames on the Grassmann manifold, reduces each cluster's left and
right factors by principal geodesic analysis, and fits three polynomial
chaos expansions per cluster: one for each factor's tangent coordinates and
one for the singular values.  Prediction locates the cluster of the nearest
training input, evaluates the expansions, and lifts the result back through
exponential maps and the inverse SVD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import pce as _pce
from . import pga as _pga
from .clustering import Clustering, ClusterSelectConfig, SweepEntry, sweep_cluster_counts
from .exceptions import DimensionMismatch, FitError
from .manifold import OrthoFrame
from .pce import PCEModel, UniformDistribution, build_index_set, n_total_degree_terms
from .pga import PGAModel
from .stats import KarcherConfig


@dataclass(frozen=True)
class Dataset:
    """Paired inputs and matrix responses of a simulation model."""

    thetas: np.ndarray      # (N, d)
    responses: np.ndarray   # (N, m_f, n_f)
    distribution: UniformDistribution

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = thetas[:, None]
        responses = np.asarray(self.responses, dtype=float)
        if thetas.ndim != 2 or responses.ndim != 3:
            raise DimensionMismatch("thetas must be (N, d) and responses (N, m_f, n_f)")
        if thetas.shape[0] != responses.shape[0]:
            raise DimensionMismatch("thetas and responses disagree on the sample count")
        if thetas.shape[0] < 1:
            raise ValueError("dataset needs at least one sample")
        if thetas.shape[1] != self.distribution.d:
            raise DimensionMismatch("input dimension does not match the distribution")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "responses", responses)

    @property
    def n(self) -> int:
        return self.thetas.shape[0]

    @property
    def d(self) -> int:
        return self.thetas.shape[1]

    @property
    def response_shape(self) -> tuple[int, int]:
        return self.responses.shape[1], self.responses.shape[2]


@dataclass(frozen=True)
class SVDTriple:
    """Thin SVD of one response: y = u diag(sigma) v^T with sign-canonical frames."""

    u: OrthoFrame
    sigma: np.ndarray
    v: OrthoFrame


@dataclass(frozen=True)
class SurrogateConfig:
    """Knobs of the training pipeline."""

    rank_tol: float = 1e-8
    variance_threshold: float = 0.99
    p_max: int = 2
    ridge: float = 1e-10
    cluster: ClusterSelectConfig = field(default_factory=ClusterSelectConfig)
    karcher: KarcherConfig = field(default_factory=KarcherConfig)
    seed: int = 0
    cluster_on: str = "auto"   # "auto" | "left" | "right"

    def __post_init__(self):
        if not 0.0 < self.rank_tol < 1.0:
            raise ValueError("rank_tol must lie in (0, 1)")
        if self.p_max < 1:
            raise ValueError("p_max must be >= 1")
        if self.cluster_on not in ("auto", "left", "right"):
            raise ValueError("cluster_on must be 'auto', 'left', or 'right'")


@dataclass(frozen=True)
class LocalModel:
    """Everything needed to predict within one cluster."""

    pga_u: PGAModel
    pga_v: PGAModel
    pce_bu: PCEModel
    pce_bv: PCEModel
    pce_sigma: PCEModel
    member_thetas: np.ndarray
    centroid: OrthoFrame

    @property
    def size(self) -> int:
        return self.member_thetas.shape[0]


@dataclass(frozen=True)
class TrainedSurrogate:
    """A trained pipeline; immutable and safe for concurrent prediction."""

    locals: list
    p: int
    m_f: int
    n_f: int
    distribution: UniformDistribution
    thetas: np.ndarray          # all training inputs
    labels: np.ndarray          # cluster id per training input
    config: SurrogateConfig
    cluster_side: str           # "left" or "right"
    sweep: list
    warning: str | None = None

    @property
    def n_clusters(self) -> int:
        return len(self.locals)

    def predict(self, theta) -> np.ndarray:
        return predict(self, theta)

    def predict_batch(self, thetas) -> np.ndarray:
        return predict_batch(self, thetas)


def project_dataset(dataset: Dataset, rank_tol: float = 1e-8):
    """Thin-SVD every response and align all triples to a common rank.

    The common subspace dimension is the largest numerical rank found across
    samples (singular values above ``rank_tol`` relative to the largest); all
    triples keep exactly that many leading singular vectors.  Each pair of
    singular vectors is sign-flipped so the largest-magnitude entry of the
    left vector is positive, making the factorization deterministic and
    continuous across nearby inputs.

    Returns (list of :class:`SVDTriple`, common p).
    """
    n_samples, m_f, n_f = dataset.responses.shape
    u_all, s_all, vt_all = np.linalg.svd(dataset.responses, full_matrices=False)
    leading = s_all[:, 0]
    if np.any(leading == 0.0):
        bad = int(np.argmax(leading == 0.0))
        raise ValueError(f"response {bad} is identically zero and has no subspace")
    ranks = np.sum(s_all > rank_tol * leading[:, None], axis=1)
    p = int(ranks.max())
    triples = []
    for i in range(n_samples):
        u = u_all[i, :, :p].copy()
        v = vt_all[i, :p, :].T.copy()
        cols = np.argmax(np.abs(u), axis=0)
        signs = np.sign(u[cols, np.arange(p)])
        signs[signs == 0] = 1.0
        u *= signs
        v *= signs
        triples.append(SVDTriple(u=OrthoFrame(u, copy=False), sigma=s_all[i, :p].copy(),
                                 v=OrthoFrame(v, copy=False)))
    return triples, p


def _resolve_side(cluster_on: str, m_f: int, n_f: int) -> str:
    if cluster_on != "auto":
        return cluster_on
    # cluster on the factor with the larger ambient dimension: when one side
    # of the factorization is square its Grassmannian collapses to a point
    return "left" if m_f >= n_f else "right"


def _fallback_degree(p_max: int, d: int, thetas: np.ndarray) -> int:
    """Largest degree the cluster's sample count can support, capped at p_max.

    Counts distinct inputs rather than raw samples so duplicated inputs do
    not inflate the apparent information content.
    """
    n_distinct = np.unique(thetas, axis=0).shape[0]
    degree = 0
    for s in range(1, p_max + 1):
        if n_total_degree_terms(d, s) <= n_distinct - 1:
            degree = s
    return degree


def train(dataset: Dataset, config: SurrogateConfig | None = None) -> TrainedSurrogate:
    """Train the full pipeline on a dataset."""
    config = config or SurrogateConfig()
    min_size = config.cluster.min_cluster_size
    if dataset.n < 2 * min_size:
        raise ValueError(f"training needs at least {2 * min_size} samples, got {dataset.n}")
    triples, p = project_dataset(dataset, config.rank_tol)
    m_f, n_f = dataset.response_shape
    side = _resolve_side(config.cluster_on, m_f, n_f)
    frames = [t.u for t in triples] if side == "left" else [t.v for t in triples]
    cluster_cfg = replace(config.cluster, seed=config.seed, karcher=config.karcher)
    clustering, sweep = sweep_cluster_counts(frames, cluster_cfg)
    locals_ = [
        _fit_local(dataset, triples, clustering, h, config, side)
        for h in range(clustering.n_clusters)
    ]
    return TrainedSurrogate(
        locals=locals_,
        p=p,
        m_f=m_f,
        n_f=n_f,
        distribution=dataset.distribution,
        thetas=dataset.thetas,
        labels=clustering.assignments,
        config=config,
        cluster_side=side,
        sweep=sweep,
        warning=clustering.warning,
    )


def _fit_local(dataset: Dataset, triples, clustering: Clustering, h: int,
               config: SurrogateConfig, side: str) -> LocalModel:
    members = clustering.members(h)
    thetas = dataset.thetas[members]
    u_frames = [triples[i].u for i in members]
    v_frames = [triples[i].v for i in members]
    sigmas = np.stack([triples[i].sigma for i in members])
    try:
        pga_u = _pga.fit_pga(u_frames, config.variance_threshold, config.karcher)
        pga_v = _pga.fit_pga(v_frames, config.variance_threshold, config.karcher)
        coords_u = np.stack([_pga.project(pga_u, f).coeffs for f in u_frames])
        coords_v = np.stack([_pga.project(pga_v, f).coeffs for f in v_frames])
        degree = _fallback_degree(config.p_max, dataset.d, thetas)
        index_set = build_index_set(dataset.d, degree)
        pce_bu = _pce.fit(thetas, coords_u, index_set, dataset.distribution, config.ridge)
        pce_bv = _pce.fit(thetas, coords_v, index_set, dataset.distribution, config.ridge)
        pce_sigma = _pce.fit(thetas, sigmas, index_set, dataset.distribution, config.ridge)
    except FitError as exc:
        raise FitError(f"cluster {h} ({members.size} members): {exc}") from exc
    return LocalModel(
        pga_u=pga_u,
        pga_v=pga_v,
        pce_bu=pce_bu,
        pce_bv=pce_bv,
        pce_sigma=pce_sigma,
        member_thetas=thetas,
        centroid=clustering.centroids[h],
    )


def locate_cluster(surrogate: TrainedSurrogate, theta) -> int:
    """Cluster id of the training input nearest to ``theta`` (Euclidean).

    Ties resolve to the lowest training index.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != surrogate.thetas.shape[1]:
        raise DimensionMismatch(
            f"theta has dimension {theta.size}, expected {surrogate.thetas.shape[1]}"
        )
    diffs = surrogate.thetas - theta
    nearest = int(np.argmin(np.einsum("ij,ij->i", diffs, diffs)))
    return int(surrogate.labels[nearest])


def predict(surrogate: TrainedSurrogate, theta) -> np.ndarray:
    """Predict the full response matrix at a new input."""
    h = locate_cluster(surrogate, theta)
    local = surrogate.locals[h]
    theta = np.asarray(theta, dtype=float).ravel()
    b_u = _pce.predict(local.pce_bu, theta)
    b_v = _pce.predict(local.pce_bv, theta)
    sigma = np.maximum(_pce.predict(local.pce_sigma, theta), 0.0)
    u = _pga.reconstruct(local.pga_u, b_u)
    v = _pga.reconstruct(local.pga_v, b_v)
    return (u.data * sigma) @ v.data.T


def predict_batch(surrogate: TrainedSurrogate, thetas) -> np.ndarray:
    """Predict many inputs; shape (N, m_f, n_f)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    out = np.empty((thetas.shape[0], surrogate.m_f, surrogate.n_f))
    for i, theta in enumerate(thetas):
        out[i] = predict(surrogate, theta)
    return out


def l2_error(pred: np.ndarray, ref: np.ndarray) -> float:
    """Relative L2 (Frobenius) error of a prediction against a reference."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise DimensionMismatch(f"shape mismatch: {pred.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ValueError("reference is zero; relative error undefined")
    return float(np.linalg.norm(pred - ref) / denom)


def r2_score(pred: np.ndarray, ref: np.ndarray) -> float:
    """Coefficient of determination over all response entries."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise DimensionMismatch(f"shape mismatch: {pred.shape} vs {ref.shape}")
    ss_tot = float(np.sum((ref - ref.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("reference is constant; R^2 undefined")
    ss_res = float(np.sum((pred - ref) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class EvaluationResult:
    """Per-sample error metrics of a surrogate on a test dataset."""

    l2: np.ndarray
    r2: np.ndarray
    worst_index: int
    worst_prediction: np.ndarray
    worst_reference: np.ndarray

    @property
    def mean_l2(self) -> float:
        return float(self.l2.mean())

    @property
    def max_l2(self) -> float:
        return float(self.l2.max())

    @property
    def mean_r2(self) -> float:
        return float(self.r2.mean())

    @property
    def min_r2(self) -> float:
        return float(self.r2.min())


def evaluate(surrogate: TrainedSurrogate, dataset: Dataset) -> EvaluationResult:
    """Predict every test input and score against the reference responses."""
    if dataset.response_shape != (surrogate.m_f, surrogate.n_f):
        raise DimensionMismatch(
            f"test responses are {dataset.response_shape}, "
            f"model predicts ({surrogate.m_f}, {surrogate.n_f})"
        )
    l2 = np.empty(dataset.n)
    r2 = np.empty(dataset.n)
    worst = (-1.0, 0, None)
    for i in range(dataset.n):
        pred = predict(surrogate, dataset.thetas[i])
        ref = dataset.responses[i]
        l2[i] = l2_error(pred, ref)
        r2[i] = r2_score(pred, ref)
        if l2[i] > worst[0]:
            worst = (l2[i], i, pred)
    return EvaluationResult(
        l2=l2,
        r2=r2,
        worst_index=worst[1],
        worst_prediction=worst[2],
        worst_reference=dataset.responses[worst[1]],
    )


def estimate_moments(surrogate: TrainedSurrogate, n_samples: int, seed: int):
    """Entrywise mean and standard deviation fields by Monte Carlo sampling.

    Draws inputs from the training distribution with a seeded generator and
    accumulates the moments with Welford updates (sample std, N-1 in the
    denominator).  Returns (mean, std) matrices of the response shape.
    """
    if n_samples < 2:
        raise ValueError("moment estimation needs at least two samples")
    rng = np.random.default_rng(seed)
    thetas = surrogate.distribution.sample(rng, n_samples)
    mean = np.zeros((surrogate.m_f, surrogate.n_f))
    m2 = np.zeros_like(mean)
    for i, theta in enumerate(thetas, start=1):
        y = predict(surrogate, theta)
        delta = y - mean
        mean += delta / i
        m2 += delta * (y - mean)
    std = np.sqrt(m2 / (n_samples - 1))
    return mean, std
