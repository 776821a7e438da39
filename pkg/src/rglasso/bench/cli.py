"""Command-line entry point: ``bench run | identify | trace``.

Exit codes: 0 success, 2 bad configuration or input, 3 numerical failure
(a homotopy exceeded its event budget).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .._path import write_trace_csv
from ..engine import RecursiveGroupLasso
from ..errors import BadConfig, PathStall
from ..groups import GroupPartition, make_partition
from .config import ExperimentConfig, load_config
from .harness import aggregate_and_emit, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("rglasso.bench")


def parse_groups(text: str, p: int) -> GroupPartition:
    """Group layout from a compact string.

    ``5x20`` (twenty groups of five), ``3,3,4`` (contiguous sizes) or
    ``1-3;4,6;5`` (explicit 1-based index lists, ranges allowed).
    """
    text = text.strip()
    try:
        if ";" in text or "-" in text:
            groups = []
            for chunk in text.split(";"):
                idx = []
                for part in chunk.split(","):
                    if "-" in part:
                        lo, hi = part.split("-")
                        idx.extend(range(int(lo), int(hi) + 1))
                    else:
                        idx.append(int(part))
                groups.append(idx)
            return make_partition(p, groups=groups, one_based=True)
        if "x" in text:
            size, count = text.split("x")
            return make_partition(p, sizes=[int(size)] * int(count))
        return make_partition(p, sizes=[int(s) for s in text.split(",")])
    except ValueError as exc:
        raise BadConfig(f"bad --groups {text!r}: {exc}") from exc


def read_samples(path) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``x_1, ..., x_p, y``; a non-numeric first row is a header."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise BadConfig(f"cannot read {path}: {exc}") from exc
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise BadConfig(f"{path} holds no samples")
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise BadConfig(f"non-numeric sample in {path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] < 2:
        raise BadConfig("each row needs at least one regressor and a response")
    return data[:, :-1], data[:, -1]


def _stream_engine(args, keep_traces=False):
    X, Y = read_samples(args.input)
    part = parse_groups(args.groups, X.shape[1])
    eng = RecursiveGroupLasso(part, args.gamma, args.lam, args.delta, max_events=args.max_events,
                              keep_traces=keep_traces)
    return eng, X, Y


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = cfg.with_overrides(trials=args.trials, seed=args.seed, output_dir=args.out,
                             icap_every=args.icap_every)
    results = run_experiment(cfg, workers=args.workers)
    summary = aggregate_and_emit(results, cfg.output_dir, cfg)
    ss = summary["steady_state_mse"]
    for phase in ("phase1", "phase2"):
        log.info("%s steady-state MSE: %s", phase, ", ".join(f"{k}={v:.4g}" for k, v in ss[phase].items()))
    log.info("savings 1 - k/k' = %.3f", summary["savings_ratio"])
    print(Path(cfg.output_dir).resolve())
    return EXIT_OK


def cmd_identify(args) -> int:
    eng, X, Y = _stream_engine(args)
    preds = []
    for x, y in zip(X, Y):
        preds.append(eng.predict(x))
        eng.update(x, y)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "coefficients.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "w"])
        for i, v in enumerate(eng.w, start=1):
            w.writerow([i, repr(float(v))])
    with open(out / "predictions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample", "y", "prediction", "prior_error"])
        for j, (y, yp) in enumerate(zip(Y, preds), start=1):
            w.writerow([j, repr(float(y)), repr(float(yp)), repr(float(y - yp))])
    c = eng.counters
    (out / "counters.json").write_text(json.dumps(
        {"samples": c.samples, "k1_total": c.k1_total, "k2_total": c.k2_total, "rebuilds": c.rebuilds}, indent=2) + "\n")
    print(out.resolve())
    return EXIT_OK


def cmd_trace(args) -> int:
    eng, X, Y = _stream_engine(args, keep_traces=True)
    lam_events, beta_events = [], []
    for x, y in zip(X, Y):
        info = eng.update(x, y)
        if info.lambda_trace is not None:
            lam_events.extend(info.lambda_trace.events)
        beta_events.extend(info.beta_trace.events)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(lam_events, out / "lambda_trace.csv", "lambda")
    write_trace_csv(beta_events, out / "beta_trace.csv", "beta")
    print(out.resolve())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description="Recursive group-lasso benchmark tools")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo system-identification experiment")
    run.add_argument("--config", help="JSON experiment config (defaults reproduce the reference setup)")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory")
    run.add_argument("--icap-every", type=int, dest="icap_every")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=cmd_run)

    for name, func, helptext in (("identify", cmd_identify, "stream samples, emit coefficients and predictions"),
                                 ("trace", cmd_trace, "stream samples, dump every path event")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--input", required=True, help="CSV rows x_1..x_p,y")
        p.add_argument("--groups", required=True, help="5x20 | 3,3,4 | 1-3;4,6;5")
        p.add_argument("--lambda", type=float, required=True, dest="lam")
        p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("--delta", type=float, default=1e-2)
        p.add_argument("--out", default=f"{name}_out")
        p.add_argument("--max-events", type=int, dest="max_events",
                       help="event budget per homotopy run (default 50 p)")
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (BadConfig, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PathStall as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        print(f"state: {exc.state}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
