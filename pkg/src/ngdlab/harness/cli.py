"""Command-line entry point: ``ngdlab <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import sys

from .. import oracle
from ..errors import NGDLabError
from ..optim import OptimConfig
from .bench import loglog_slope, scaling_bench
from .logs import emit_bench, emit_logs, emit_verify
from .training import DEFAULT_ALPHAS, RunConfig, batch_sweep, final_loss, grid_search_lr, sweep_table, train_run


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dataset", help="CSV file with a header row")
    src.add_argument("--synthetic", choices=["linreg_gaussian", "blobs_classification"], default=None)
    p.add_argument("--target", help="target column name (with --dataset)")
    p.add_argument("--task", choices=["regression", "classification"], default="regression")
    p.add_argument("--n", type=int, default=2048, help="synthetic sample count")
    p.add_argument("--d", type=int, default=8, help="synthetic feature count")
    p.add_argument("--hidden", type=_ints, default=(4,), help="comma-separated hidden widths")
    p.add_argument("--activation", choices=["tanh", "relu"], default="tanh")
    p.add_argument("--method", choices=["sgd", "exact-ngd", "block-ngd", "tengrad"], default="tengrad")
    p.add_argument("--alpha", type=float, default=1e-2)
    p.add_argument("--beta", type=float, default=1e-2)
    p.add_argument("--lr-decay", type=float, default=1.0)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record-time", action="store_true", help="log wall-clock step times (makes output non-reproducible)")
    p.add_argument("--out", required=True, help="output CSV path")


def _run_config(args) -> RunConfig:
    synthetic = args.synthetic
    if args.dataset is None and synthetic is None:
        synthetic = "linreg_gaussian" if args.task == "regression" else "blobs_classification"
    task = args.task
    if synthetic == "blobs_classification":
        task = "classification"
    return RunConfig(
        optim=OptimConfig(
            alpha=args.alpha,
            beta=args.beta,
            lr_decay=args.lr_decay,
            weight_decay=args.weight_decay,
            method=args.method,
        ),
        hidden=tuple(args.hidden),
        activation=args.activation,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        dataset_path=args.dataset,
        target=args.target,
        task=task,
        synthetic=synthetic,
        n=args.n,
        d=args.d,
        record_time=args.record_time,
        out=args.out,
    )


def cmd_train(args) -> int:
    records = train_run(_run_config(args))
    emit_logs(records, args.out)
    print(f"{len(records)} steps, final-epoch loss {final_loss(records):.6g}, status {records[-1].status}")
    return 0


def cmd_grid_search(args) -> int:
    best, runs = grid_search_lr(_run_config(args), args.alphas)
    emit_logs([r for a in args.alphas for r in runs[float(a)]], args.out)
    for a in args.alphas:
        print(f"alpha={a:g}  final loss={final_loss(runs[float(a)]):.6g}")
    print(f"best alpha: {best:g}")
    return 0


def cmd_batch_sweep(args) -> int:
    results = batch_sweep(_run_config(args), args.sizes, args.alphas)
    emit_logs([r for res in results for r in res.records], args.out)
    print(f"{'batch':>6} {'alpha':>8} {'final loss':>12}")
    for m, a, loss in sweep_table(results):
        print(f"{m:>6} {a:>8g} {loss:>12.6g}")
    return 0


def cmd_bench_scaling(args) -> int:
    rows = scaling_bench(
        args.depths,
        args.methods,
        width=args.width,
        batch_size=args.batch_size,
        warmup=args.warmup,
        timed=args.timed_steps,
        seed=args.seed,
        dense_cap=args.dense_cap,
    )
    emit_bench(rows, args.out)
    for r in rows:
        print(f"{r.method:>10} depth={r.depth:<3} p={r.params:<6} {r.status:>10} "
              f"median={r.median_step_ns / 1e6:9.3f} ms bytes={r.optimizer_bytes}")
    for method in dict.fromkeys(r.method for r in rows):
        try:
            print(f"{method}: log-log slope {loglog_slope(rows, method):.2f}")
        except ValueError:
            pass
    return 0


def cmd_verify(args) -> int:
    reports = oracle.run_battery(args.seed)
    if args.out:
        emit_verify(reports, args.out)
    width = max(len(r.name) for r in reports)
    for r in reports:
        print(f"{r.name:<{width}}  {r.metric:<28} {r.value:>12.4g}  tol {r.tolerance:<10.4g} {'PASS' if r.passed else 'FAIL'}")
    return 0 if all(r.passed for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngdlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one configuration")
    _add_run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid-search", help="learning-rate grid search")
    _add_run_flags(p)
    p.add_argument("--alphas", type=_floats, default=DEFAULT_ALPHAS)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("batch-sweep", help="compare batch sizes")
    _add_run_flags(p)
    p.add_argument("--sizes", type=_ints, default=(8, 32, 1024))
    p.add_argument("--alphas", type=_floats, default=None, help="grid-search alpha per size")
    p.set_defaults(func=cmd_batch_sweep)

    p = sub.add_parser("bench-scaling", help="time/memory scaling with depth")
    p.add_argument("--depths", type=_ints, default=(1, 2, 3, 4, 6, 12))
    p.add_argument("--methods", type=lambda s: tuple(s.split(",")), default=("sgd", "exact-ngd", "tengrad"))
    p.add_argument("--width", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--timed-steps", type=int, default=20)
    p.add_argument("--dense-cap", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench_scaling)

    p = sub.add_parser("verify", help="run the identity oracle battery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NGDLabError, OSError, KeyError, ValueError) as exc:
        print(f"ngdlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
