"""Command-line front end: generate, train, predict, evaluate, moments.

Options can come from a flat ``key=value`` config file (``--config``), with
command-line flags taking precedence.  Every command is deterministic given
its options and exits 0 on success, nonzero with a diagnostic otherwise.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import benchmarks, reports, serialize, surrogate as sg
from .clustering import ClusterSelectConfig
from .exceptions import ExtrapolationWarning, GrasspceError
from .surrogate import SurrogateConfig

_USAGE_ERROR = 2


@dataclass
class RunConfig:
    problem: str | None = None
    dataset: str | None = None
    model: str | None = None
    n: int | None = None
    seed: int = 0
    p_max: int = 2
    variance_threshold: float = 0.99
    rank_tol: float = 1e-8
    ridge: float = 1e-10
    min_cluster_size: int = 5
    restarts: int = 4
    cluster_on: str = "auto"
    theta: list | None = None
    out: str = "."

    def surrogate_config(self) -> SurrogateConfig:
        return SurrogateConfig(
            rank_tol=self.rank_tol,
            variance_threshold=self.variance_threshold,
            p_max=self.p_max,
            ridge=self.ridge,
            cluster=ClusterSelectConfig(
                min_cluster_size=self.min_cluster_size,
                restarts=self.restarts,
                seed=self.seed,
            ),
            seed=self.seed,
            cluster_on=self.cluster_on,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_KEYS = {"n", "seed", "p_max", "min_cluster_size", "restarts"}
_FLOAT_KEYS = {"variance_threshold", "rank_tol", "ridge"}


def load_config_file(path) -> dict:
    """Parse a flat key=value file; '#' starts a comment, blank lines skipped."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GrasspceError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES or key == "theta":
            raise GrasspceError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        else:
            values[key] = value
    return values


def _merge_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, value in load_config_file(args.config).items():
            setattr(cfg, key, value)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
    return cfg


def _add_common(parser):
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--out", help="output directory")


def _add_surrogate_flags(parser):
    parser.add_argument("--p-max", dest="p_max", type=int, help="max PCE total degree")
    parser.add_argument("--variance-threshold", dest="variance_threshold", type=float,
                        help="retained tangent-variance fraction")
    parser.add_argument("--rank-tol", dest="rank_tol", type=float,
                        help="relative singular-value cutoff")
    parser.add_argument("--ridge", type=float, help="ridge regularization weight")
    parser.add_argument("--min-cluster-size", dest="min_cluster_size", type=int,
                        help="smallest admissible cluster")
    parser.add_argument("--restarts", type=int, help="k-means restarts")
    parser.add_argument("--cluster-on", dest="cluster_on", choices=["auto", "left", "right"],
                        help="which SVD factor to cluster")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="grasspce",
        description="Surrogate models for matrix-valued simulation responses",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a benchmark problem into a dataset file")
    _add_common(p)
    p.add_argument("--problem", help="benchmark name")
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--dataset", help="output dataset path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a surrogate on a dataset file")
    _add_common(p)
    _add_surrogate_flags(p)
    p.add_argument("--dataset", help="training dataset path")
    p.add_argument("--model", help="output model path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model against a test dataset")
    _add_common(p)
    p.add_argument("--model", help="model path")
    p.add_argument("--dataset", help="test dataset path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict responses at new inputs")
    _add_common(p)
    p.add_argument("--model", help="model path")
    p.add_argument("--dataset", help="dataset whose inputs to predict")
    p.add_argument("--theta", action="append",
                   help="comma-separated input vector; repeatable")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("moments", help="Monte Carlo mean/std fields of a model")
    _add_common(p)
    p.add_argument("--model", help="model path")
    p.add_argument("--n", type=int, help="number of Monte Carlo samples")
    p.set_defaults(func=cmd_moments)

    return parser


def _require(cfg, attr, message):
    value = getattr(cfg, attr)
    if not value:
        raise GrasspceError(message)
    return value


def cmd_generate(args) -> int:
    cfg = _merge_config(args)
    name = _require(cfg, "problem", "generate needs --problem")
    if name not in benchmarks.PROBLEMS:
        valid = ", ".join(sorted(benchmarks.PROBLEMS))
        print(f"error: unknown problem {name!r}; valid problems: {valid}", file=sys.stderr)
        return _USAGE_ERROR
    n = _require(cfg, "n", "generate needs --n")
    problem = benchmarks.get_problem(name)
    dataset = benchmarks.generate_dataset(problem, n, cfg.seed)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = Path(cfg.dataset) if cfg.dataset else out_dir / f"{name}_n{n}_seed{cfg.seed}.pgds"
    benchmarks.save_dataset(dataset, path)
    m_f, n_f = dataset.response_shape
    print(f"wrote {path}: {dataset.n} samples, inputs d={dataset.d}, "
          f"responses {m_f}x{n_f}, seed {cfg.seed}")
    return 0


def cmd_train(args) -> int:
    cfg = _merge_config(args)
    dataset_path = _require(cfg, "dataset", "train needs --dataset")
    dataset = serialize.load_dataset(dataset_path)
    trained = sg.train(dataset, cfg.surrogate_config())
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = Path(cfg.model) if cfg.model else out_dir / "model.pgsm"
    serialize.save_surrogate(trained, model_path)
    paths = reports.write_training_report(trained, out_dir)
    print(f"trained on {dataset.n} samples: {trained.n_clusters} clusters "
          f"(factor: {trained.cluster_side}), p = {trained.p}")
    if trained.warning:
        print(f"warning: {trained.warning}")
    print(f"wrote {model_path}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _merge_config(args)
    trained = serialize.load_surrogate(_require(cfg, "model", "evaluate needs --model"))
    dataset = serialize.load_dataset(_require(cfg, "dataset", "evaluate needs --dataset"))
    result = sg.evaluate(trained, dataset)
    paths = reports.write_evaluation_report(result, cfg.out)
    print(f"mean L2 = {result.mean_l2:.6g}, max L2 = {result.max_l2:.6g} "
          f"(worst sample {result.worst_index}), mean R2 = {result.mean_r2:.6g}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _parse_thetas(cfg) -> np.ndarray:
    if cfg.theta:
        return np.array([[float(v) for v in spec.split(",")] for spec in cfg.theta])
    if cfg.dataset:
        return serialize.load_dataset(cfg.dataset).thetas
    raise GrasspceError("predict needs --theta or --dataset")


def cmd_predict(args) -> int:
    cfg = _merge_config(args)
    trained = serialize.load_surrogate(_require(cfg, "model", "predict needs --model"))
    thetas = _parse_thetas(cfg)
    if thetas.shape[1] != trained.thetas.shape[1]:
        raise GrasspceError(
            f"inputs have dimension {thetas.shape[1]}, model expects {trained.thetas.shape[1]}"
        )
    predictions = np.empty((thetas.shape[0], trained.m_f, trained.n_f))
    for i, theta in enumerate(thetas):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ExtrapolationWarning)
            predictions[i] = sg.predict(trained, theta)
        cluster = sg.locate_cluster(trained, theta)
        note = " (extrapolating)" if any(
            issubclass(w.category, ExtrapolationWarning) for w in caught) else ""
        print(f"theta {np.array2string(theta, separator=', ')}: cluster {cluster}{note}")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "predictions.pgds"
    serialize.save_dataset(
        sg.Dataset(thetas=thetas, responses=predictions, distribution=trained.distribution),
        path,
    )
    print(f"wrote {path}")
    return 0


def cmd_moments(args) -> int:
    cfg = _merge_config(args)
    trained = serialize.load_surrogate(_require(cfg, "model", "moments needs --model"))
    n = _require(cfg, "n", "moments needs --n")
    mean, std = sg.estimate_moments(trained, n, cfg.seed)
    paths = reports.write_moments_report(mean, std, cfg.out)
    print(f"estimated moments from {n} samples (seed {cfg.seed})")
    for path in paths:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GrasspceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
