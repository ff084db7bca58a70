"""Command-line entry point: ``logitbayes <subcommand> ...``.

Subcommands: fit, tune, score, eval, pc-crop, pc-cluster, pc-resample.
Randomness comes only from ``--seed`` (environment fallback ``LB_SEED``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import dataio, pointcloud
from .exceptions import FitError, ModelFormatError, NotFittedError, ParameterError, ParseError
from .inference import fit_scorer, predict
from .metrics import evaluate, format_comparison
from .tuner import Bounds, GaConfig, tune

log = logging.getLogger("logitbayes")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_FIT = 4
EXIT_MODEL = 5
EXIT_IO = 6


def _add_common(p, suppress):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=default, help="random seed (default: $LB_SEED or 0)")
    p.add_argument("--classes", default=default, help="comma-separated class names expected in inputs")
    p.add_argument("--output", default=default, help="output file or directory")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logitbayes",
        description="Bayesian ML/MAP re-scoring of classifier logits and LiDAR crop tools.",
    )
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def command(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        _add_common(p, suppress=True)
        return p

    p = command("fit", "fit a scorer from labelled training logits")
    p.add_argument("--train", required=True)
    p.add_argument("--mode", choices=["ml", "map"], default="ml")
    p.add_argument("--h", type=float, nargs="+", required=True, metavar="H", help="bandwidth per class")
    p.add_argument("--nbins", type=int, nargs="+", metavar="N", help="histogram bins per class (MAP)")
    p.add_argument("--lam", type=float, default=1e-7)
    p.add_argument("--condition", choices=["label", "prediction"], default="label")

    p = command("tune", "genetic-algorithm search of h, nbins and lambda")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--mode", choices=["ml", "map"], default="ml")
    p.add_argument("--h-bounds", type=float, nargs=2, default=Bounds.h, metavar=("LO", "HI"))
    p.add_argument("--lam-bounds", type=float, nargs=2, default=Bounds.lam, metavar=("LO", "HI"))
    p.add_argument("--nbins-bounds", type=int, nargs=2, default=Bounds.nbins, metavar=("LO", "HI"))
    p.add_argument("--population", type=int, default=GaConfig.population_size)
    p.add_argument("--crossover", type=float, default=GaConfig.crossover_fraction)
    p.add_argument("--generations", type=int, default=None, help="default: 100 x number of variables")
    p.add_argument("--elite", type=int, default=GaConfig.elite_count)
    p.add_argument("--stall", type=int, default=None, help="stop after this many generations without improvement")
    p.add_argument("--condition", choices=["label", "prediction"], default="label")

    p = command("score", "score logits with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--rule", choices=["ml", "map", "softmax"], default=None, help="default: the model's mode")

    p = command("eval", "evaluate predictions, or compare decision rules on raw logits")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--predictions", help="CSV with id,label,prediction columns")
    src.add_argument("--logits", help="labelled logit CSV")
    p.add_argument("--rule", action="append", choices=["softmax", "ml", "map"],
                   help="rule(s) to compare with --logits; repeatable")
    p.add_argument("--model", help="model file for the ml/map rules")

    p = command("pc-crop", "keep LiDAR points projecting into a 2D box")
    p.add_argument("--cloud", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--box", type=float, nargs=4, required=True, metavar=("XMIN", "YMIN", "XMAX", "YMAX"))
    p.add_argument("--camera", type=int, default=2)
    p.add_argument("--min-forward", type=float, default=pointcloud.MIN_FORWARD)

    p = command("pc-cluster", "keep the dominant distance cluster of a crop")
    p.add_argument("--cloud", required=True)
    p.add_argument("--gap", type=float, default=0.25)
    p.add_argument("--confidence", type=float, default=1.0)

    p = command("pc-resample", "down- or up-sample a crop to a fixed size")
    p.add_argument("--cloud", required=True)
    p.add_argument("--target", type=int, default=512)
    p.add_argument("--k", type=int, default=4)
    return parser


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ParameterError(f"LB_SEED must be an integer, got {env!r}") from None


def _classes(args):
    return None if args.classes is None else [c.strip() for c in args.classes.split(",")]


def _need_output(args):
    if args.output is None:
        raise ParameterError(f"{args.command} needs --output")
    return args.output


def _labelled(table, path):
    if not table.is_labelled:
        raise ParseError("every row needs a label", path=path)
    return table


def cmd_fit(args):
    path = args.train
    table = _labelled(dataio.read_logits(path, _classes(args)), path)
    scorer = fit_scorer(table.logits, args.h, args.nbins, args.lam, args.mode,
                        labels=table.labels, class_names=table.class_names, condition=args.condition)
    prov = {"inputs": {"train": dataio.file_digest(path)}, "seed": _seed(args),
            "condition": args.condition}
    dataio.save_model(scorer, _need_output(args), prov)


def cmd_tune(args):
    out_dir = _need_output(args)
    classes = _classes(args)
    train = _labelled(dataio.read_logits(args.train, classes), args.train)
    val = _labelled(dataio.read_logits(args.val, train.class_names), args.val)
    seed = _seed(args)
    bounds = Bounds(tuple(args.h_bounds), tuple(args.lam_bounds), tuple(args.nbins_bounds))
    config = GaConfig(population_size=args.population, crossover_fraction=args.crossover,
                      max_generations=args.generations, elite_count=args.elite,
                      stall_generations=args.stall, seed=seed)
    result = tune(train.split(), val.split(), args.mode, bounds, config,
                  class_names=train.class_names, condition=args.condition)

    os.makedirs(out_dir, exist_ok=True)
    names = list(train.class_names)
    params = result.params.to_dict(names)
    params["validation_cost"] = result.report.cost
    inputs = {"train": dataio.file_digest(args.train), "val": dataio.file_digest(args.val)}
    dataio.write_json(params, os.path.join(out_dir, "params.json"))
    dataio.write_json(result.report.to_dict(names), os.path.join(out_dir, "report.json"))
    with open(os.path.join(out_dir, "history.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generation", "best_cost"])
        for g, c in enumerate(result.history):
            w.writerow([g, repr(float(c))])
    scorer = fit_scorer(train.logits, result.params.h, result.params.nbins, result.params.lam,
                        args.mode, labels=train.labels, class_names=train.class_names,
                        condition=args.condition)
    prov = {"inputs": inputs, "seed": seed, "condition": args.condition,
            "ga": {"population_size": config.population_size,
                   "crossover_fraction": config.crossover_fraction,
                   "generations": len(result.history) - 1, "elite_count": config.elite_count}}
    dataio.save_model(scorer, os.path.join(out_dir, "model.json"), prov)
    print(format_comparison({args.mode: result.report}, names))


def _rule_for(rule, scorer):
    if rule == "softmax":
        return "softmax"
    return (scorer, rule)


def cmd_score(args):
    scorer = dataio.load_model(args.model)
    table = dataio.read_logits(args.test, _classes(args) or scorer.class_names)
    if list(table.class_names) != list(scorer.class_names):
        raise ParameterError(f"test classes {table.class_names} differ from model classes {scorer.class_names}")
    rule = args.rule or scorer.mode
    pred, scores = predict(_rule_for(rule, scorer), table.logits)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["id", "label", "prediction"] + [f"score_{c}" for c in scorer.class_names])
        for i, y, p, s in zip(table.ids, table.labels, pred, scores):
            w.writerow([i, "" if y < 0 else int(y), int(p)] + [repr(float(v)) for v in s])
    finally:
        if out is not sys.stdout:
            out.close()


def _read_predictions(path, classes):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "label" not in fields or "prediction" not in fields:
            raise ParseError("predictions file needs 'label' and 'prediction' columns", 1, path)
        names = classes or [f[len("score_"):] for f in fields if f.startswith("score_")]
        if not names:
            raise ParseError("cannot infer classes: pass --classes or include score_<class> columns", 1, path)
        labels, preds = [], []
        for lineno, row in enumerate(reader, 2):
            pair = []
            for key in ("label", "prediction"):
                raw = (row.get(key) or "").strip()
                if raw in names:
                    pair.append(names.index(raw))
                    continue
                try:
                    pair.append(int(raw))
                except ValueError:
                    raise ParseError(f"bad {key} {raw!r}", lineno, path) from None
            labels.append(pair[0])
            preds.append(pair[1])
    return names, np.array(preds, dtype=int), np.array(labels, dtype=int)


def cmd_eval(args):
    classes = _classes(args)
    reports = {}
    if args.predictions:
        names, preds, labels = _read_predictions(args.predictions, classes)
        reports["predictions"] = evaluate(preds, labels, len(names))
    else:
        table = _labelled(dataio.read_logits(args.logits, classes), args.logits)
        names = list(table.class_names)
        rules = args.rule or ["softmax"]
        scorer = None
        if any(r != "softmax" for r in rules):
            if not args.model:
                raise ParameterError("--model is required for the ml and map rules")
            scorer = dataio.load_model(args.model)
            if list(scorer.class_names) != names:
                raise ParameterError(f"model classes {scorer.class_names} differ from {names}")
        for rule in rules:
            pred, _ = predict(_rule_for(rule, scorer), table.logits)
            reports[rule] = evaluate(pred, table.labels, table.nc)
    print(format_comparison(reports, names))
    if args.output:
        dataio.write_json({k: r.to_dict(names) for k, r in reports.items()}, args.output)


def cmd_pc_crop(args):
    pc = pointcloud.read_velodyne_bin(args.cloud)
    calib = pointcloud.read_calibration(args.calib, camera=args.camera)
    crop = pointcloud.crop_to_bbox(pc, calib, pointcloud.BBox2D(*args.box), min_forward=args.min_forward)
    pointcloud.write_velodyne_bin(crop, _need_output(args))
    log.info("kept %d of %d points", len(crop), len(pc))


def cmd_pc_cluster(args):
    pc = pointcloud.read_velodyne_bin(args.cloud)
    out = pointcloud.cluster_foreground(pc, gap=args.gap, confidence=args.confidence)
    pointcloud.write_velodyne_bin(out, _need_output(args))
    log.info("kept %d of %d points", len(out), len(pc))


def cmd_pc_resample(args):
    pc = pointcloud.read_velodyne_bin(args.cloud)
    out = pointcloud.resample(pc, target=args.target, k=args.k, seed=_seed(args))
    pointcloud.write_velodyne_bin(out, _need_output(args))
    log.info("resampled %d -> %d points", len(pc), len(out))


COMMANDS = {
    "fit": cmd_fit,
    "tune": cmd_tune,
    "score": cmd_score,
    "eval": cmd_eval,
    "pc-crop": cmd_pc_crop,
    "pc-cluster": cmd_pc_cluster,
    "pc-resample": cmd_pc_resample,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "tune" else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"logitbayes: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ModelFormatError as exc:
        print(f"logitbayes: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (FitError, ParameterError, NotFittedError) as exc:
        print(f"logitbayes: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"logitbayes: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
