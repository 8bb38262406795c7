"""``mmder`` command line: gen-synthetic, preprocess, train, eval, run, inspect.

Every RunConfig key is also a flag (``--epochs 50``, ``--rfas-seed 3``).
``--config FILE`` loads a ``key = value`` file and flags override it.

Exit codes: 0 ok, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .config import FIELD_TYPES, _base_type, coerce, dump_config, load_config
from .errors import ContractError, DataError, MMDERError, NumericError, ShapeError
from .manifest import read_manifest
from .model import init_params
from .training import evaluate, make_folds, train
from .weights import load_params, save_params

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("mmder")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; we reserve 2 for data errors."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_config_flags(parser):
    group = parser.add_argument_group("run configuration (overrides --config)")
    for key, kind in FIELD_TYPES.items():
        base, _ = _base_type(kind)
        flag = "--" + key.replace("_", "-")
        if base is bool:
            group.add_argument(flag, dest=key, default=None, action=argparse.BooleanOptionalAction)
        else:
            group.add_argument(flag, dest=key, default=None, metavar=base.__name__.upper())
    parser.add_argument("--config", type=Path, default=None, help="key = value configuration file")


def _run_config(args):
    overrides = {}
    for key in FIELD_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = coerce(key, value) if isinstance(value, str) else value
    return load_config(args.config, **overrides)


def build_parser():
    parser = _Parser(prog="mmder", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-synthetic", help="write a seeded synthetic corpus and manifest")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--clips-per-class", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cue", choices=("redundant", "complementary"), default="redundant")
    p.add_argument("--subjects", type=int, default=8)
    p.add_argument("--frames", type=int, default=96, help="frames per clip")
    p.add_argument("--fps", type=int, default=30)
    p.add_argument("--frame-size", type=int, default=48)
    p.add_argument("--image-height", type=int, default=32, help="model image height the tones target")

    p = sub.add_parser("preprocess", help="cache aligned clips for one or all strategies")
    _add_config_flags(p)
    p.add_argument("--all", action="store_true", help="cache for every strategy in --strategies")

    p = sub.add_parser("train", help="train on all clips, or on the training side of one fold")
    _add_config_flags(p)
    p.add_argument("--fold", type=int, default=None)
    p.add_argument("--weights", type=Path, default=None, help="output weight file")

    p = sub.add_parser("eval", help="evaluate a weight file on all clips or one held-out fold")
    _add_config_flags(p)
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--fold", type=int, default=None)
    p.add_argument("--report", type=Path, default=None, help="output JSON report")

    p = sub.add_parser("run", help="full subject-independent cross-validation")
    _add_config_flags(p)
    p.add_argument("--compare", action="store_true", help="rank every strategy on identical folds")

    p = sub.add_parser("inspect", help="dump the token layout map for a clip and strategy")
    _add_config_flags(p)
    p.add_argument("--clip-id", default="clip")
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("show-config", help="print the merged configuration")
    _add_config_flags(p)
    return parser


def _fold_split(samples, run_cfg, fold):
    if fold is None:
        return samples, samples
    plan = make_folds([s.subject_id for s in samples], run_cfg.folds, run_cfg.fold_seed)
    return plan.split(samples, fold)


def cmd_gen_synthetic(args):
    from .synthetic import gen_synthetic

    rows = gen_synthetic(
        args.out_dir, classes=args.classes, clips_per_class=args.clips_per_class, seed=args.seed,
        cue=args.cue, subjects=args.subjects, n_frames=args.frames, fps=args.fps,
        frame_size=args.frame_size, image_height=args.image_height,
    )
    print(f"wrote {len(rows)} clips to {args.out_dir / 'manifest.csv'}")
    return EXIT_OK


def cmd_preprocess(args):
    run_cfg = _run_config(args)
    manifest = read_manifest(run_cfg.manifest, run_cfg.num_classes)
    strategies = run_cfg.strategy_list() if args.all else [run_cfg.strategy]
    result = pipeline.preprocess(manifest, run_cfg, strategies, workers=run_cfg.workers)
    print(f"written {len(result.written)}  skipped {len(result.skipped)}  failed {len(result.failed)}")
    for clip_id, message in sorted(result.failed.items()):
        print(f"[{clip_id}] {message}", file=sys.stderr)
    return EXIT_DATA if result.failed else EXIT_OK


def cmd_train(args):
    run_cfg = _run_config(args)
    manifest = read_manifest(run_cfg.manifest, run_cfg.num_classes)
    samples = pipeline.fused_samples(manifest, run_cfg)
    train_set, _ = _fold_split(samples, run_cfg, args.fold)
    result = train(train_set, run_cfg.train_config(), run_cfg.model_config(), dtype=run_cfg.dtype)
    out = Path(run_cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = "model" if args.fold is None else f"fold{args.fold}"
    weights = args.weights or out / f"{stem}.mmdw"
    save_params(weights, result.params)
    (out / f"{stem}.curve.json").write_text(json.dumps(result.curve(), indent=1) + "\n")
    print(f"final loss {result.epoch_losses[-1]:.6f} after {len(result.epoch_losses)} epochs; weights {weights}")
    return EXIT_OK


def cmd_eval(args):
    run_cfg = _run_config(args)
    manifest = read_manifest(run_cfg.manifest, run_cfg.num_classes)
    samples = pipeline.fused_samples(manifest, run_cfg)
    _, test_set = _fold_split(samples, run_cfg, args.fold)
    params = init_params(run_cfg.model_config(), seed=0, dtype=np.dtype(run_cfg.dtype))
    load_params(args.weights, params)
    report = evaluate(params, test_set)
    if args.report is not None:
        args.report.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    print(report.to_text())
    return EXIT_OK


def cmd_run(args):
    run_cfg = _run_config(args)
    if args.compare:
        rows = pipeline.compare_strategies(run_cfg)
        print(pipeline.comparison_table(rows))
        return EXIT_OK
    result = pipeline.run_experiment(run_cfg)
    print(result.pooled.to_text())
    return EXIT_OK


def cmd_inspect(args):
    run_cfg = _run_config(args)
    layout = pipeline.token_layout_map(run_cfg, run_cfg.strategy, args.clip_id)
    text = json.dumps(layout, indent=1)
    if args.output is not None:
        args.output.write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_show_config(args):
    print(dump_config(_run_config(args)), end="")
    return EXIT_OK


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "run": cmd_run,
    "inspect": cmd_inspect,
    "show-config": cmd_show_config,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ShapeError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MMDERError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
