"""Command-line front end.

Exit codes: 0 success, 1 validation / usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_from_mapping, dumps, load_config
from .dataset import load_dataset, save_dataset, write_matrix_f64
from .errors import ConfigError, GmblError, NumericalError
from .graph import dump_edges
from .metrics import evaluate, kmeans_codes
from .modelio import load_model, save_model
from .pipeline import PipelineResult, prepare_dataset, report_dict, restrict_to_view, run_pipeline

logger = logging.getLogger("gmbl")

DEFAULT_LENGTHS = (8, 16, 32, 64, 128)

# flag -> config key; flags default to None so that only explicit ones override the file
RUN_FLAGS = {
    "--data": ("data", str),
    "--data-format": ("data_format", str),
    "--views": ("synth_views", int),
    "--clusters": ("synth_clusters", int),
    "--per-cluster": ("synth_per_cluster", int),
    "--dims": ("synth_dims", str),
    "--noise": ("synth_noise", float),
    "--complementary": ("synth_complementary", str),
    "--anchors": ("anchors", int),
    "--shared-anchors": ("shared_anchors", str),
    "--kernel-width": ("kernel_width", float),
    "--neighbors": ("neighbors", int),
    "--lle-reg": ("lle_reg", float),
    "--bits": ("r", int),
    "--n-clusters": ("n_clusters", int),
    "--kmeans-restarts": ("kmeans_restarts", int),
    "--delta": ("delta", float),
    "--lambda": ("lam", float),
    "--beta": ("beta", float),
    "--mu": ("mu", float),
    "--rho": ("rho", float),
    "--c": ("c", float),
    "--eta": ("eta", float),
    "--max-iters": ("max_iters", int),
    "--tol": ("tol", float),
    "--inner-b-steps": ("inner_b_steps", int),
    "--eta-backtrack": ("eta_backtrack", str),
    "--decorrelation-centered": ("decorrelation_centered", str),
    "--refresh-graph": ("refresh_graph_each_iter", str),
    "--seed": ("seed", int),
    "--out": ("out", str),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat YAML/JSON config file or a run manifest.json")
    for flag, (_, typ) in RUN_FLAGS.items():
        p.add_argument(flag, dest=RUN_FLAGS[flag][0], type=typ, default=None)
    p.add_argument("--dump-embeddings", action="store_true", help="write embed<v>.f64 per view")
    p.add_argument("--dump-graph", action="store_true", help="write graph.txt edge list")


def resolve_config(args) -> RunConfig:
    base = load_config(args.config).to_dict() if args.config else {}
    for key, _ in RUN_FLAGS.values():
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    return config_from_mapping(base)


def write_run(result: PipelineResult, out: Path, extra: dict | None = None, dump_embeddings=False, dump_graph=False) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    save_model(result.model, out)
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective"])
        for i, v in enumerate(result.model.objective_trace):
            w.writerow([i, repr(float(v))])
    np.savetxt(out / "pred_labels.csv", result.assignment.labels, fmt="%d")
    report = {**report_dict(result), **(extra or {})}
    (out / "report.json").write_text(dumps(report))
    manifest = {"version": version_string(), "config": result.config.to_dict()}
    (out / "manifest.json").write_text(dumps(manifest))
    if dump_embeddings:
        shapes = {}
        for v, ev in enumerate(result.embeds):
            write_matrix_f64(out / f"embed{v}.f64", ev.g)
            shapes[f"embed{v}"] = list(ev.g.shape)
        (out / "embeddings.json").write_text(dumps({"shapes": shapes, "xi": [ev.xi for ev in result.embeds]}))
    if dump_graph:
        dump_edges(result.graph, out / "graph.txt")
    return report


def cmd_fit(args) -> int:
    cfg = resolve_config(args)
    result = run_pipeline(prepare_dataset(cfg), cfg)
    report = write_run(result, Path(cfg.out), dump_embeddings=args.dump_embeddings, dump_graph=args.dump_graph)
    print(json.dumps(report, sort_keys=True))
    return 0


def _sweep_one(job):
    cfg_dict, bits, out = job
    cfg = config_from_mapping({**cfg_dict, "r": bits, "out": str(out)})
    result = run_pipeline(prepare_dataset(cfg), cfg)
    return bits, write_run(result, out)


def parse_lengths(text: str) -> list[int]:
    lengths = [int(x) for x in text.split(",") if x.strip()]
    if not lengths:
        raise ConfigError("--lengths needs at least one code length")
    return lengths


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    lengths = parse_lengths(args.lengths)
    root = Path(cfg.out)
    jobs = [(cfg.to_dict(), bits, root / f"bits_{bits}") for bits in lengths]
    if args.parallel and args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bits", "acc", "nmi", "purity", "f_score"])
        for bits, rep in results:
            w.writerow([bits, rep["acc"], rep["nmi"], rep["purity"], rep["f_score"]])
    print((root / "sweep.csv").read_text(), end="")
    return 0


def cmd_single_view(args) -> int:
    cfg = resolve_config(args)
    data = restrict_to_view(prepare_dataset(cfg), args.view_id)
    result = run_pipeline(data, cfg)
    report = write_run(result, Path(cfg.out), extra={"view": args.view_id})
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    cfg = resolve_config(args)
    if cfg.data is not None:
        raise ConfigError("synth generates data; drop --data")
    data = prepare_dataset(cfg)
    path = save_dataset(data, cfg.out, args.format)
    print(f"wrote {data.n_views} views x {data.n_samples} samples to {path}")
    return 0


def _read_labels(path) -> np.ndarray:
    return np.loadtxt(path, dtype=np.int64, ndmin=1, delimiter=",")


def cmd_eval(args) -> int:
    if args.pred:
        pred = _read_labels(args.pred)
        extra = {}
    elif args.model:
        model = load_model(args.model)
        k = args.n_clusters
        truth_for_k = _read_labels(args.truth) if args.truth else None
        if k is None:
            if truth_for_k is None:
                raise ConfigError("eval --model needs --n-clusters or --truth")
            k = len(np.unique(truth_for_k))
        assignment = kmeans_codes(model.b, k, args.seed, n_restarts=args.kmeans_restarts)
        pred = assignment.labels
        extra = {"n_clusters": k, "seed": args.seed, "inertia": assignment.inertia, "code_length": model.r}
    else:
        raise ConfigError("eval needs --pred or --model")
    if not args.truth:
        raise ConfigError("eval needs --truth")
    truth = _read_labels(args.truth)
    report = {**evaluate(pred, truth).as_dict(), **extra}
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmbl", description="Graph-based multi-view binary code learning")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="learn codes, cluster, evaluate")
    _add_run_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="fit + evaluate for several code lengths")
    _add_run_flags(p)
    p.add_argument("--lengths", default=",".join(map(str, DEFAULT_LENGTHS)))
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("single-view", help="run the pipeline on one view only")
    _add_run_flags(p)
    p.add_argument("--view-id", type=int, required=True)
    p.set_defaults(func=cmd_single_view)

    p = sub.add_parser("synth", help="write a synthetic dataset directory")
    _add_run_flags(p)
    p.add_argument("--format", choices=["csv", "binary"], default="csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score predicted labels or a saved model against ground truth")
    p.add_argument("--pred", help="predicted labels, one per line")
    p.add_argument("--model", help="model directory written by fit")
    p.add_argument("--truth", help="ground-truth labels, one per line")
    p.add_argument("--n-clusters", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmeans-restarts", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (GmblError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
