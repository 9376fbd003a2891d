"""Binary containers for datasets and trained surrogates.

Two little-endian formats, each opening with a four-byte magic and a u32
format version:

* ``PGDS`` datasets: header (N, d, m_f, n_f, distribution descriptor)
  followed by N records of (theta vector, response matrix) as f64 row-major.
* ``PGSM`` models: global header, then one length-prefixed section per local
  model holding its matrices as f64 row-major.

Both formats round-trip bitwise: floats are stored exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from .clustering import ClusterSelectConfig, SweepEntry
from .exceptions import FormatError
from .manifold import OrthoFrame
from .pce import MultiIndexSet, PCEModel, UniformDistribution
from .pga import PGAModel
from .stats import KarcherConfig
from .surrogate import Dataset, LocalModel, SurrogateConfig, TrainedSurrogate

DATASET_MAGIC = b"PGDS"
MODEL_MAGIC = b"PGSM"
FORMAT_VERSION = 1
_UNIFORM_KIND = 1


class _Writer:
    def __init__(self):
        self.buf = bytearray()

    def magic(self, tag: bytes):
        self.buf += tag
        self.u32(FORMAT_VERSION)

    def u8(self, x):
        self.buf += struct.pack("<B", x)

    def u32(self, x):
        self.buf += struct.pack("<I", x)

    def u64(self, x):
        self.buf += struct.pack("<Q", x)

    def i64(self, x):
        self.buf += struct.pack("<q", x)

    def f64(self, x):
        self.buf += struct.pack("<d", float(x))

    def text(self, s: str | None):
        raw = (s or "").encode("utf-8")
        self.u64(len(raw))
        self.buf += raw

    def vector(self, arr):
        arr = np.ascontiguousarray(arr, dtype="<f8")
        self.u64(arr.size)
        self.buf += arr.tobytes()

    def matrix(self, arr):
        arr = np.ascontiguousarray(arr, dtype="<f8")
        self.u64(arr.shape[0])
        self.u64(arr.shape[1])
        self.buf += arr.tobytes()

    def int_matrix(self, arr):
        arr = np.ascontiguousarray(arr, dtype="<i8")
        self.u64(arr.shape[0])
        self.u64(arr.shape[1])
        self.buf += arr.tobytes()

    def section(self, payload: bytes):
        self.u64(len(payload))
        self.buf += payload


class _Reader:
    def __init__(self, data: bytes, label: str):
        self.data = data
        self.offset = 0
        self.label = label

    def _take(self, count: int) -> bytes:
        if self.offset + count > len(self.data):
            raise FormatError(
                f"{self.label}: truncated file, needed {count} more bytes",
                offset=self.offset,
            )
        chunk = self.data[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def magic(self, tag: bytes):
        found = self._take(4)
        if found != tag:
            raise FormatError(
                f"{self.label}: bad magic {found!r}, expected {tag!r}", offset=0
            )
        version = self.u32()
        if version != FORMAT_VERSION:
            raise FormatError(
                f"{self.label}: unsupported format version {version}", offset=4
            )

    def u8(self):
        return struct.unpack("<B", self._take(1))[0]

    def u32(self):
        return struct.unpack("<I", self._take(4))[0]

    def u64(self):
        return struct.unpack("<Q", self._take(8))[0]

    def i64(self):
        return struct.unpack("<q", self._take(8))[0]

    def f64(self):
        return struct.unpack("<d", self._take(8))[0]

    def text(self):
        n = self.u64()
        return self._take(n).decode("utf-8")

    def vector(self):
        n = self.u64()
        return np.frombuffer(self._take(8 * n), dtype="<f8").astype(float)

    def matrix(self):
        rows = self.u64()
        cols = self.u64()
        raw = np.frombuffer(self._take(8 * rows * cols), dtype="<f8")
        return raw.astype(float).reshape(rows, cols)

    def int_matrix(self):
        rows = self.u64()
        cols = self.u64()
        raw = np.frombuffer(self._take(8 * rows * cols), dtype="<i8")
        return raw.astype(np.int64).reshape(rows, cols)

    def done(self):
        if self.offset != len(self.data):
            raise FormatError(
                f"{self.label}: {len(self.data) - self.offset} trailing bytes",
                offset=self.offset,
            )


# --------------------------------------------------------------------------
# dataset container

def _write_distribution(w: _Writer, dist: UniformDistribution):
    w.u32(_UNIFORM_KIND)
    for lo, hi in zip(dist.lows, dist.highs):
        w.f64(lo)
        w.f64(hi)


def _read_distribution(r: _Reader, d: int) -> UniformDistribution:
    kind = r.u32()
    if kind != _UNIFORM_KIND:
        raise FormatError(f"{r.label}: unknown distribution kind {kind}", offset=r.offset - 4)
    bounds = [(r.f64(), r.f64()) for _ in range(d)]
    lows = np.array([b[0] for b in bounds])
    highs = np.array([b[1] for b in bounds])
    return UniformDistribution(lows=lows, highs=highs)


def save_dataset(dataset: Dataset, path):
    w = _Writer()
    w.magic(DATASET_MAGIC)
    n, d = dataset.thetas.shape
    m_f, n_f = dataset.response_shape
    w.u64(n)
    w.u64(d)
    w.u64(m_f)
    w.u64(n_f)
    _write_distribution(w, dataset.distribution)
    for i in range(n):
        w.buf += np.ascontiguousarray(dataset.thetas[i], dtype="<f8").tobytes()
        w.buf += np.ascontiguousarray(dataset.responses[i], dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(w.buf))


def load_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), label=str(path))
    r.magic(DATASET_MAGIC)
    n = r.u64()
    d = r.u64()
    m_f = r.u64()
    n_f = r.u64()
    dist = _read_distribution(r, d)
    thetas = np.empty((n, d))
    responses = np.empty((n, m_f, n_f))
    for i in range(n):
        thetas[i] = np.frombuffer(r._take(8 * d), dtype="<f8")
        responses[i] = np.frombuffer(r._take(8 * m_f * n_f), dtype="<f8").reshape(m_f, n_f)
    r.done()
    return Dataset(thetas=thetas, responses=responses, distribution=dist)


# --------------------------------------------------------------------------
# model container

def _write_pga(w: _Writer, model: PGAModel):
    w.matrix(model.mean.data)
    w.matrix(model.basis)
    w.vector(model.eigenvalues)
    w.vector(model.tangent_mean)
    w.u64(model.d)
    w.f64(model.explained_fraction)
    w.f64(model.variance_threshold)


def _read_pga(r: _Reader) -> PGAModel:
    mean = OrthoFrame(r.matrix(), copy=False)
    basis = r.matrix()
    eigenvalues = r.vector()
    tangent_mean = r.vector()
    d = r.u64()
    explained = r.f64()
    threshold = r.f64()
    return PGAModel(
        mean=mean,
        basis=basis,
        eigenvalues=eigenvalues,
        tangent_mean=tangent_mean,
        d=d,
        explained_fraction=explained,
        variance_threshold=threshold,
    )


def _write_pce(w: _Writer, model: PCEModel):
    w.u64(model.index_set.d)
    w.u64(model.index_set.s)
    w.int_matrix(model.index_set.indices)
    w.vector(model.distribution.lows)
    w.vector(model.distribution.highs)
    w.matrix(model.coefficients)
    w.f64(model.ridge)
    w.f64(model.condition_number)


def _read_pce(r: _Reader) -> PCEModel:
    d = r.u64()
    s = r.u64()
    indices = r.int_matrix()
    lows = r.vector()
    highs = r.vector()
    coefficients = r.matrix()
    ridge = r.f64()
    condition = r.f64()
    return PCEModel(
        index_set=MultiIndexSet(d=d, s=s, indices=indices),
        distribution=UniformDistribution(lows=lows, highs=highs),
        coefficients=coefficients,
        ridge=ridge,
        condition_number=condition,
    )


def _write_local(local: LocalModel) -> bytes:
    w = _Writer()
    w.matrix(local.centroid.data)
    _write_pga(w, local.pga_u)
    _write_pga(w, local.pga_v)
    _write_pce(w, local.pce_bu)
    _write_pce(w, local.pce_bv)
    _write_pce(w, local.pce_sigma)
    w.matrix(local.member_thetas)
    return bytes(w.buf)


def _read_local(r: _Reader) -> LocalModel:
    centroid = OrthoFrame(r.matrix(), copy=False)
    pga_u = _read_pga(r)
    pga_v = _read_pga(r)
    pce_bu = _read_pce(r)
    pce_bv = _read_pce(r)
    pce_sigma = _read_pce(r)
    member_thetas = r.matrix()
    return LocalModel(
        pga_u=pga_u,
        pga_v=pga_v,
        pce_bu=pce_bu,
        pce_bv=pce_bv,
        pce_sigma=pce_sigma,
        member_thetas=member_thetas,
        centroid=centroid,
    )


def save_surrogate(surrogate: TrainedSurrogate, path):
    w = _Writer()
    w.magic(MODEL_MAGIC)
    w.u8(0 if surrogate.cluster_side == "left" else 1)
    w.u64(surrogate.p)
    w.u64(surrogate.m_f)
    w.u64(surrogate.n_f)
    n, d = surrogate.thetas.shape
    w.u64(n)
    w.u64(d)
    _write_distribution(w, surrogate.distribution)
    cfg = surrogate.config
    w.f64(cfg.rank_tol)
    w.f64(cfg.variance_threshold)
    w.u64(cfg.p_max)
    w.f64(cfg.ridge)
    w.i64(cfg.seed)
    w.u8({"auto": 0, "left": 1, "right": 2}[cfg.cluster_on])
    w.u64(cfg.cluster.min_cluster_size)
    w.u64(cfg.cluster.k_start)
    w.u64(cfg.cluster.max_k or 0)
    w.u64(cfg.cluster.restarts)
    w.i64(cfg.cluster.seed)
    w.u64(cfg.karcher.max_iters)
    w.f64(cfg.karcher.step_size)
    w.f64(cfg.karcher.tol)
    w.matrix(surrogate.thetas)
    w.buf += np.ascontiguousarray(surrogate.labels, dtype="<i8").tobytes()
    w.u64(len(surrogate.sweep))
    for entry in surrogate.sweep:
        w.u64(entry.k)
        w.f64(entry.score)
        w.u8(1 if entry.valid else 0)
        w.u64(entry.min_size)
    w.text(surrogate.warning)
    w.u64(len(surrogate.locals))
    for local in surrogate.locals:
        w.section(_write_local(local))
    with open(path, "wb") as fh:
        fh.write(bytes(w.buf))


def load_surrogate(path) -> TrainedSurrogate:
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), label=str(path))
    r.magic(MODEL_MAGIC)
    side = "left" if r.u8() == 0 else "right"
    p = r.u64()
    m_f = r.u64()
    n_f = r.u64()
    n = r.u64()
    d = r.u64()
    dist = _read_distribution(r, d)
    rank_tol = r.f64()
    variance_threshold = r.f64()
    p_max = r.u64()
    ridge = r.f64()
    seed = r.i64()
    cluster_on = {0: "auto", 1: "left", 2: "right"}[r.u8()]
    cluster = ClusterSelectConfig(
        min_cluster_size=r.u64(),
        k_start=r.u64(),
        max_k=r.u64() or None,
        restarts=r.u64(),
        seed=r.i64(),
    )
    karcher = KarcherConfig(max_iters=r.u64(), step_size=r.f64(), tol=r.f64())
    cluster = ClusterSelectConfig(
        min_cluster_size=cluster.min_cluster_size,
        k_start=cluster.k_start,
        max_k=cluster.max_k,
        restarts=cluster.restarts,
        seed=cluster.seed,
        karcher=karcher,
    )
    config = SurrogateConfig(
        rank_tol=rank_tol,
        variance_threshold=variance_threshold,
        p_max=p_max,
        ridge=ridge,
        cluster=cluster,
        karcher=karcher,
        seed=seed,
        cluster_on=cluster_on,
    )
    thetas = r.matrix()
    labels = np.frombuffer(r._take(8 * n), dtype="<i8").astype(np.int64)
    sweep = []
    for _ in range(r.u64()):
        sweep.append(SweepEntry(k=r.u64(), score=r.f64(), valid=bool(r.u8()), min_size=r.u64()))
    warning = r.text() or None
    locals_ = []
    for _ in range(r.u64()):
        length = r.u64()
        section = _Reader(r._take(length), label=r.label)
        locals_.append(_read_local(section))
        section.done()
    r.done()
    return TrainedSurrogate(
        locals=locals_,
        p=p,
        m_f=m_f,
        n_f=n_f,
        distribution=dist,
        thetas=thetas,
        labels=labels,
        config=config,
        cluster_side=side,
        sweep=sweep,
        warning=warning,
    )
