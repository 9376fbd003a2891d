"""Report rendering: delimited tables plus matplotlib figures.

Every report writes CSV files (floats via ``repr`` so they parse back
losslessly) and a PNG figure alongside.  Nothing here is random or
time-dependent, so reports are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

import numpy as np  # noqa: E402

from .surrogate import EvaluationResult, TrainedSurrogate  # noqa: E402


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def write_matrix_csv(path: Path, matrix: np.ndarray):
    header = ["row"] + [f"c{j}" for j in range(matrix.shape[1])]
    rows = [[i] + [float(v) for v in matrix[i]] for i in range(matrix.shape[0])]
    _write_csv(path, header, rows)


def read_matrix_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([[float(v) for v in row[1:]] for row in reader])


def write_training_report(surrogate: TrainedSurrogate, out_dir) -> list[Path]:
    """Cluster-sweep and per-cluster diagnostic tables, a summary, and the
    score-vs-k figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep_path = out / "cluster_sweep.csv"
    _write_csv(
        sweep_path,
        ["k", "score", "valid", "min_cluster_size"],
        [[e.k, e.score, int(e.valid), e.min_size] for e in surrogate.sweep],
    )
    clusters_path = out / "clusters.csv"
    _write_csv(
        clusters_path,
        ["cluster", "size", "d_u", "d_v", "degree", "cond_bu", "cond_bv", "cond_sigma"],
        [
            [
                h,
                lm.size,
                lm.pga_u.d,
                lm.pga_v.d,
                lm.pce_bu.index_set.s,
                lm.pce_bu.condition_number,
                lm.pce_bv.condition_number,
                lm.pce_sigma.condition_number,
            ]
            for h, lm in enumerate(surrogate.locals)
        ],
    )
    summary_path = out / "training_summary.txt"
    lines = [
        f"clusters: {surrogate.n_clusters}",
        f"subspace dimension p: {surrogate.p}",
        f"response shape: {surrogate.m_f} x {surrogate.n_f}",
        f"training samples: {surrogate.thetas.shape[0]}",
        f"clustered factor: {surrogate.cluster_side}",
        "cluster sizes: " + " ".join(str(lm.size) for lm in surrogate.locals),
        "pce degrees: " + " ".join(str(lm.pce_bu.index_set.s) for lm in surrogate.locals),
    ]
    if surrogate.warning:
        lines.append(f"warning: {surrogate.warning}")
    summary_path.write_text("\n".join(lines) + "\n")

    fig_path = out / "cluster_sweep.png"
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = [e.k for e in surrogate.sweep]
    scores = [e.score if math.isfinite(e.score) else float("nan") for e in surrogate.sweep]
    if ks:
        ax.plot(ks, scores, "o-")
        ax.axvline(surrogate.n_clusters, color="tab:red", ls="--", lw=1,
                   label=f"selected k = {surrogate.n_clusters}")
        ax.legend()
    ax.set_xlabel("number of clusters k")
    ax.set_ylabel("clustering score")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=110)
    plt.close(fig)
    return [sweep_path, clusters_path, summary_path, fig_path]


def write_evaluation_report(result: EvaluationResult, out_dir) -> list[Path]:
    """Per-sample metric table, aggregate summary, and a worst-case overlay
    figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / "metrics.csv"
    _write_csv(
        metrics_path,
        ["sample", "l2", "r2"],
        [[i, float(result.l2[i]), float(result.r2[i])] for i in range(result.l2.size)],
    )
    summary_path = out / "metrics_summary.csv"
    _write_csv(
        summary_path,
        ["metric", "value"],
        [
            ["mean_l2", result.mean_l2],
            ["max_l2", result.max_l2],
            ["mean_r2", result.mean_r2],
            ["min_r2", result.min_r2],
            ["worst_sample", result.worst_index],
        ],
    )
    fig_path = out / "worst_case.png"
    fig, ax = plt.subplots(figsize=(7, 4))
    ref = np.atleast_2d(result.worst_reference)
    pred = np.atleast_2d(result.worst_prediction)
    if ref.shape[1] >= 4:
        for r in range(ref.shape[0]):
            ax.plot(ref[r], color="black", lw=1.2, alpha=0.8)
            ax.plot(pred[r], color="tab:red", lw=1.0, ls="--")
        ax.set_xlabel("column index")
        ax.set_ylabel("value")
    else:
        ax.plot(ref.ravel(), "ko-", label="reference")
        ax.plot(pred.ravel(), "r^--", label="prediction")
        ax.legend()
        ax.set_xlabel("entry")
    ax.set_title(f"worst-case sample {result.worst_index} "
                 f"(relative L2 = {result.max_l2:.3g})")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=110)
    plt.close(fig)
    return [metrics_path, summary_path, fig_path]


def write_moments_report(mean: np.ndarray, std: np.ndarray, out_dir) -> list[Path]:
    """Entrywise mean/std fields as matrices, an aggregate summary, and a
    band figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mean_path = out / "mean.csv"
    std_path = out / "std.csv"
    write_matrix_csv(mean_path, mean)
    write_matrix_csv(std_path, std)
    summary_path = out / "moments_summary.csv"
    _write_csv(
        summary_path,
        ["metric", "value"],
        [
            ["mean_min", float(mean.min())],
            ["mean_max", float(mean.max())],
            ["std_min", float(std.min())],
            ["std_max", float(std.max())],
        ],
    )
    fig_path = out / "moments.png"
    fig, ax = plt.subplots(figsize=(7, 4))
    x = np.arange(mean.shape[1])
    for r in range(mean.shape[0]):
        line, = ax.plot(x, mean[r], lw=1.2)
        ax.fill_between(x, mean[r] - std[r], mean[r] + std[r],
                        color=line.get_color(), alpha=0.25)
    ax.set_xlabel("column index")
    ax.set_ylabel("mean +- std")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=110)
    plt.close(fig)
    return [mean_path, std_path, summary_path, fig_path]
