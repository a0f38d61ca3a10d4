"""Command-line front end.

Subcommands: ``preprocess`` (CSV to feature dump + stats), ``synth``
(generate a schema-compatible synthetic dataset), ``train`` (one
configuration end to end), ``sweep`` (the full grid), ``report`` (metrics
CSV to frontier + heatmap SVGs). Exit codes: 0 success, 1 usage error,
2 data error, 3 run failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .data import (
    DataError,
    parse_csv,
    synth_dataset,
    transform,
    write_csv,
    write_feature_csv,
)
from .dp import DpConfig
from .federation import write_manifest
from .harness import (
    RunConfig,
    STAGES,
    SweepGrid,
    emit_metrics_csv,
    parse_metrics_csv,
    prepare_experiment,
    run_cell,
    run_stage,
    stage_settings,
)
from .nn import TrainingConfig
from .reports import emit_epsilon_heatmap, emit_frontier


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _comma_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _comma_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="fedfront", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fedfront {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add_common(p: _Parser) -> None:
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="base random seed")

    p_syn = sub.add_parser("synth", help="generate a synthetic stroke-schema CSV")
    add_common(p_syn)
    p_syn.add_argument("--n", type=int, default=5109, help="number of records")
    p_syn.add_argument("--positive-rate", type=float, default=0.05)

    p_pre = sub.add_parser("preprocess", help="split, fit and dump feature matrices")
    add_common(p_pre)
    p_pre.add_argument("--data", required=True, help="stroke CSV path")

    def add_run_flags(p: _Parser) -> None:
        p.add_argument("--data", required=True, help="stroke CSV path")
        p.add_argument("--rounds", type=int, default=30)
        p.add_argument("--epochs", type=int, default=5)
        p.add_argument("--clients", type=int, default=10)
        p.add_argument("--delta", type=float, default=1e-5)

    p_train = sub.add_parser("train", help="train and evaluate one configuration")
    add_common(p_train)
    add_run_flags(p_train)
    p_train.add_argument("--mu", type=float, default=0.0, help="proximal strength")
    p_train.add_argument("--sigma", type=float, default=1.0, help="noise multiplier")
    p_train.add_argument("--clip", type=float, default=1.0, help="clipping norm")
    p_train.add_argument(
        "--no-resample", action="store_true", help="skip client-side SMOTETomek"
    )
    p_train.add_argument(
        "--stage", choices=STAGES, default=None,
        help="named stage; overrides --mu/--no-resample",
    )

    p_sweep = sub.add_parser("sweep", help="run the mu x sigma x clip x seed grid")
    p_sweep.add_argument("--out-dir", default="out")
    add_run_flags(p_sweep)
    p_sweep.add_argument("--mu", type=_comma_floats, default=(1.0, 0.1, 0.01))
    p_sweep.add_argument("--sigma", type=_comma_floats, default=(0.5, 1.0, 1.5, 2.0))
    p_sweep.add_argument("--clip", type=_comma_floats, default=(0.8, 1.0, 1.5))
    p_sweep.add_argument("--seed", type=_comma_ints, default=(0, 1, 2))

    p_rep = sub.add_parser("report", help="metrics CSV to frontier + heatmap SVGs")
    p_rep.add_argument("--data", required=True, help="metrics CSV path")
    p_rep.add_argument("--out-dir", default="out")
    return parser


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_records(path: str):
    csv_path = Path(path)
    if not csv_path.exists():
        raise DataError(f"data file not found: {csv_path}")
    return parse_csv(csv_path)


def cmd_synth(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    records = synth_dataset(args.n, args.positive_rate, args.seed)
    target = out / "synthetic.csv"
    write_csv(records, target)
    write_manifest(
        out / "manifest.txt",
        {
            "command": "synth",
            "version": __version__,
            "n": args.n,
            "positive_rate": args.positive_rate,
            "seed": args.seed,
            "output": target,
        },
    )
    print(f"wrote {len(records)} records to {target}")
    return 0


def cmd_preprocess(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    records = _load_records(args.data)
    data = prepare_experiment(records, num_clients=1, split_seed=args.seed)
    write_feature_csv(data.train_features, data.train_labels, out / "train_features.csv")
    write_feature_csv(data.test_features, data.test_labels, out / "test_features.csv")
    stats = data.stats
    (out / "preprocess_stats.json").write_text(
        json.dumps(
            {
                "bmi_mean": stats.bmi_mean,
                "scaler_means": list(stats.scaler_means),
                "scaler_stds": list(stats.scaler_stds),
                "feature_columns": list(data.train_features.column_names),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    write_manifest(
        out / "manifest.txt",
        {
            "command": "preprocess",
            "version": __version__,
            "data": args.data,
            "seed": args.seed,
            "train_rows": data.train_features.n_rows,
            "test_rows": data.test_features.n_rows,
        },
    )
    print(
        f"wrote {data.train_features.n_rows} train / {data.test_features.n_rows} "
        f"test rows to {out}"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    records = _load_records(args.data)
    data = prepare_experiment(records, num_clients=args.clients, split_seed=args.seed)
    training = TrainingConfig(local_epochs=args.epochs)
    dp = DpConfig(noise_multiplier=args.sigma, max_grad_norm=args.clip, delta=args.delta)
    cfg = RunConfig(training=training, rounds=args.rounds, delta=args.delta)

    if args.stage is not None:
        resample, mu = stage_settings(args.stage)
        row = run_stage(args.stage, data, dp, args.seed, cfg)
    else:
        resample, mu = not args.no_resample, args.mu
        row = run_cell(data, replace(cfg, resample=resample), dp, mu, args.seed)

    target = out / "metrics.csv"
    emit_metrics_csv([row], target)
    write_manifest(
        out / "manifest.txt",
        {
            "command": "train",
            "version": __version__,
            "data": args.data,
            "seed": args.seed,
            "rounds": args.rounds,
            "local_epochs": args.epochs,
            "num_clients": args.clients,
            "learning_rate": training.learning_rate,
            "batch_size": training.batch_size,
            "mu": mu,
            "sigma": args.sigma,
            "clip": args.clip,
            "delta": args.delta,
            "resample": resample,
            "stage": row.stage,
            "partition_sizes": ",".join(str(p.n_samples) for p in data.partitions),
        },
    )
    print(
        f"{row.stage}: accuracy={row.accuracy:.4f} recall={row.recall:.4f} "
        f"precision={row.precision:.4f} f1={row.f1:.4f} epsilon={row.epsilon:.4f}"
    )
    print(f"wrote {target}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    records = _load_records(args.data)
    grid = SweepGrid(
        mu_values=args.mu,
        sigma_values=args.sigma,
        clip_values=args.clip,
        seeds=args.seed,
    )
    split_seed = grid.seeds[0]
    data = prepare_experiment(records, num_clients=args.clients, split_seed=split_seed)
    cfg = RunConfig(
        training=TrainingConfig(local_epochs=args.epochs),
        rounds=args.rounds,
        delta=args.delta,
    )
    rows = run_sweep(grid, data, cfg)
    target = out / "metrics.csv"
    emit_metrics_csv(rows, target)
    write_manifest(
        out / "manifest.txt",
        {
            "command": "sweep",
            "version": __version__,
            "data": args.data,
            "mu_values": ",".join(str(v) for v in grid.mu_values),
            "sigma_values": ",".join(str(v) for v in grid.sigma_values),
            "clip_values": ",".join(str(v) for v in grid.clip_values),
            "seeds": ",".join(str(v) for v in grid.seeds),
            "split_seed": split_seed,
            "rounds": args.rounds,
            "local_epochs": args.epochs,
            "num_clients": args.clients,
            "delta": args.delta,
            "partition_sizes": ",".join(str(p.n_samples) for p in data.partitions),
        },
    )
    print(f"wrote {len(rows)} rows to {target}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    csv_path = Path(args.data)
    if not csv_path.exists():
        raise DataError(f"metrics CSV not found: {csv_path}")
    try:
        rows = parse_metrics_csv(csv_path)
    except ValueError as exc:
        raise DataError(str(exc))
    if not rows:
        raise DataError(f"{csv_path}: metrics CSV has a header but no rows")
    try:
        emit_frontier(rows, out / "frontier.svg")
        emit_epsilon_heatmap(rows, out / "heatmap.svg")
    except ValueError as exc:
        raise DataError(str(exc))
    print(f"wrote {out / 'frontier.svg'} and {out / 'heatmap.svg'}")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        print(parser.format_usage(), file=sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - run failures map to exit 3
        print(f"run failed: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
