"""Command-line entry point.

Subcommands: generate-data, train, evaluate, attack, stealth, report.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric or
training error. Flags override config-file values, which override defaults.
"""

from __future__ import annotations

import argparse
import sys

from . import report as report_mod
from . import runner
from .config import ExperimentConfig, load_config, override, override_section
from .errors import ConfigError, DataError, NumericError, ShapeError


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aquaprobe",
        description="Train an LSTM water-demand forecaster and probe it with "
                    "gradient-sign attacks, adaptive attack scheduling, and stealth scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="run seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")
        return p

    p = common(sub.add_parser("generate-data", help="write a synthetic consumption CSV"))
    p.add_argument("--days", type=int, help="series length in days")
    p.add_argument("--emit", help="explicit CSV path (default <out>/data.csv)")

    p = common(sub.add_parser("train", help="train a forecaster and save it"))
    p.add_argument("--data", help="input CSV (default: synthesize from config)")
    p.add_argument("--model-tag", choices=("LSTM", "LSTM+"), dest="model_tag")
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden-units", type=int, dest="hidden_units")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--sequence-length", type=int, dest="sequence_length")
    p.add_argument("--no-plots", action="store_true")

    p = common(sub.add_parser("evaluate", help="evaluate a saved model on the test split"))
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="input CSV (default: synthesize from config)")

    p = common(sub.add_parser("attack", help="run a budget sweep (fgsm, pgd) or a scheduled campaign (la, rla)"))
    p.add_argument("--kind", required=True, choices=("fgsm", "pgd", "la", "rla"))
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="input CSV (default: synthesize from config)")
    p.add_argument("--epsilons", type=_floats, help="sweep grid, e.g. 0,0.001,0.005")
    p.add_argument("--pgd-iterations", type=int, dest="pgd_iterations")
    p.add_argument("--iterations", type=int, help="campaign iterations")
    p.add_argument("--delay", type=int, help="campaign delivery delay")
    p.add_argument("--actions", type=_floats, help="campaign action set, e.g. 0.0001,0.0005")
    p.add_argument("--k-domain", type=_ints, dest="k_domain", help="multi-action sizes, e.g. 1,2,3")
    p.add_argument("--label", help="artifact suffix (default: the kind)")
    p.add_argument("--no-plots", action="store_true")

    p = common(sub.add_parser("stealth", help="score a campaign stream with the rolling z-score detector"))
    p.add_argument("--stream", required=True, help="stream CSV written by a campaign")
    p.add_argument("--window", type=int)
    p.add_argument("--zstar", type=float, help="flag threshold on |z|")
    p.add_argument("--name", help="artifact suffix (default: stream file stem)")
    p.add_argument("--no-plots", action="store_true")

    common(sub.add_parser("report", help="aggregate an output directory into report.json"))
    return parser


def _resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    config = override(config, seed=args.seed, out=args.out)
    if args.command == "generate-data":
        config = override_section(config, "data", days=args.days)
    elif args.command == "train":
        config = override_section(config, "model", tag=args.model_tag, epochs=args.epochs,
                                  hidden_units=args.hidden_units, learning_rate=args.learning_rate,
                                  batch_size=args.batch_size)
        config = override_section(config, "windowing", sequence_length=args.sequence_length)
    elif args.command == "attack":
        config = override_section(config, "sweep", epsilons=args.epsilons,
                                  pgd_iterations=args.pgd_iterations)
        config = override_section(config, "campaign", iterations=args.iterations,
                                  delay=args.delay, actions=args.actions, k_domain=args.k_domain)
    elif args.command == "stealth":
        config = override_section(config, "stealth", window=args.window, z_threshold=args.zstar)
    return config


def _run(args) -> int:
    config = _resolve_config(args)
    render = not getattr(args, "no_plots", False)
    if args.command == "generate-data":
        path = runner.cmd_generate_data(config, args.emit)
        print(f"wrote {path}")
    elif args.command == "train":
        result = runner.cmd_train(config, args.data, render=render)
        print(f"wrote {result['model']} (final train MSE {result['final_train_mse']:.6g}, "
              f"val MSE {result['final_val_mse']:.6g})")
    elif args.command == "evaluate":
        report = runner.cmd_evaluate(config, args.model, args.data)
        print(f"test metrics: MAE {report.mae:.4f}  RMSE {report.rmse:.4f}  "
              f"MAPE {report.mape:.4f}%  (n={report.n})")
    elif args.command == "attack":
        if args.kind in runner.SWEEP_KINDS:
            rows = runner.cmd_attack_sweep(config, args.model, args.kind, args.data, render=render)
            for r in rows:
                print(f"{r['model']}  eps={r['epsilon']:<8g} MAE {r['mae']:.4f}  "
                      f"RMSE {r['rmse']:.4f}  MAPE {r['mape']:.4f}%")
        else:
            result = runner.cmd_attack_campaign(config, args.model, args.kind, args.data,
                                                label=args.label, render=render)
            print(f"campaign {args.kind}: baseline MAPE {result.baseline_mape:.4f}%, "
                  f"mean {result.mean_mape:.4f}%, final probs "
                  f"{[round(p, 4) for p in result.final_probs]}")
    elif args.command == "stealth":
        report = runner.cmd_stealth(config, args.stream, args.name, render=render)
        print(f"flagged {report.n_flagged}/{report.n_evaluated} "
              f"({report.flagged_fraction:.4f}) at |z| > {report.z_threshold:g}")
    elif args.command == "report":
        path = report_mod.write_report(config.out)
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (ShapeError, NumericError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
