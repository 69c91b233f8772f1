"""Command-line harness.

Subcommands: calibrate (aperture radius), collect (random dataset),
train-ann (reverse model), align (one strategy), bench (side-by-side
comparison).  Exit codes: 0 success, 1 configuration error, 2 internal
error.  Non-convergence is a report field, not an error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, beamwalk, bench, dataset, mlp, regression, reporting
from .config import load_config, substream_seed
from .errors import BeamAlignError, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTERNAL = 2


def _write_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    radius = dataset.calibrate_aperture(
        cfg.geometry,
        target_block_fraction=args.target,
        mc_samples=args.samples,
        rng_seed=args.seed if args.seed is not None else cfg.master_seed,
        scales=cfg.scales,
    )
    _write_json(
        {
            "aperture_radius_1_mm": radius,
            "target_block_fraction": args.target,
            "mc_samples": args.samples,
        },
        args.out,
    )
    return EXIT_OK


def _cmd_collect(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    plant = cfg.make_plant()
    ds = dataset.collect_random(
        plant, args.n, substream_seed(cfg.master_seed, "ann/collect")
    )
    dataset.write_csv(ds, args.out)
    blocked = sum(1 for r in ds.records if not r.complete)
    print(
        f"collected {len(ds)} samples ({blocked} blocked) "
        f"using {plant.readings_used()} readings -> {args.out}"
    )
    return EXIT_OK


def _cmd_train_ann(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    ds = dataset.read_csv(args.dataset)
    complete = dataset.filter_complete(ds)
    train_set, test_set = dataset.split_train_test(
        complete, cfg.ann_train_fraction, substream_seed(cfg.master_seed, "ann/split")
    )
    result = mlp.train(
        train_set, cfg.ann_train, substream_seed(cfg.master_seed, "ann/train")
    )
    _, r2_train = mlp.r_squared(result.model, train_set)
    _, r2_test = mlp.r_squared(result.model, test_set)
    mlp.save(result.model, args.out)
    if args.loss_out:
        with open(args.loss_out, "w", newline="\n") as fh:
            fh.write("epoch,mse\n")
            for i, mse in enumerate(result.loss_trace):
                fh.write(f"{i + 1},{format(mse, '.17g')}\n")
    print(
        f"trained on {len(train_set)} samples ({result.backend} backend): "
        f"mean R^2 train {r2_train:.4f}, test {r2_test:.4f} -> {args.out}"
    )
    return EXIT_OK


def _cmd_align(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    plant = cfg.make_plant()
    if args.strategy == "ann":
        outcome = mlp.align(plant, cfg.ann_config())
    elif args.strategy == "beamwalk":
        outcome = beamwalk.align(plant, cfg.walk)
        if args.trace:
            beamwalk.write_trace_csv(outcome.trace, args.trace)
    else:
        outcome = regression.align(plant, cfg.regression_config())
        if args.models:
            regression.save_models(outcome, args.models)
        if args.samples:
            dataset.write_csv(outcome.step1.samples, f"{args.samples}_step1.csv")
            dataset.write_csv(outcome.step2.samples, f"{args.samples}_step2.csv")
    report = outcome.report
    _write_json(report.to_json_dict(), args.out)
    res = report.residuals
    r2 = "blocked" if res.a2 is None else f"{res.radius_a2:.4g} mm"
    print(
        f"{report.strategy}: readings {report.readings}, "
        f"converged {report.converged}, residual A1 {res.radius_a1:.4g} mm, "
        f"A2 {r2}"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.strategy:
        cfg.strategy = args.strategy
    report = bench.run(cfg)
    reporting.emit(report, args.out, args.format)
    for rep in report.reports:
        print(
            f"{rep.strategy:>10}: {rep.readings:5d} readings, "
            f"converged {str(rep.converged):5}, "
            f"residual A1 {rep.residuals.radius_a1:.4g} mm"
        )
    ordering = report.ordering_check
    if ordering is not None:
        print(f"budget ordering regression < beamwalk < ann: {ordering}")
    print(f"report -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamalign",
        description="Two-mirror beamline alignment: simulator, aligners, benchmark",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate the Aperture-1 radius")
    p.add_argument("--config", default=None)
    p.add_argument("--target", type=float, default=0.375)
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("collect", help="collect a random-sampling dataset CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_collect)

    p = sub.add_parser("train-ann", help="train the reverse network on a dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--loss-out", default=None)
    p.set_defaults(func=_cmd_train_ann)

    p = sub.add_parser("align", help="run one alignment strategy")
    p.add_argument("--config", default=None)
    p.add_argument("--strategy", required=True,
                   choices=["ann", "beamwalk", "regression"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--trace", default=None, help="beam-walk trace CSV path")
    p.add_argument("--models", default=None, help="regression models JSON path")
    p.add_argument("--samples", default=None,
                   help="regression sample-log prefix (writes *_step1.csv, *_step2.csv)")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("bench", help="compare strategies side by side")
    p.add_argument("--config", default=None)
    p.add_argument("--strategy", default=None,
                   choices=["ann", "beamwalk", "regression", "all"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BeamAlignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
