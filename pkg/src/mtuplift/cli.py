"""Command-line front end: simulate -> train -> score -> select -> evaluate.

Every subcommand accepts ``--config FILE``, a flat ``key=value`` file whose
keys are long flag names (``top-fraction=0.3`` or ``top_fraction=0.3``).
Flags given on the command line override the file.  Repeatable flags take
``;``-separated values in the file.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 model-fit failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import datagen, modelio
from ._fileutil import atomic_directory
from .baselearn import FitConfig
from .calibrate import DEFAULT_FOLDS, expected_calibration_error
from .dataset import load_csv, validate_feature_names, write_csv
from .errors import DatasetError, FitError, ValidationError
from .evaluate import (
    DEFAULT_BINS,
    auuc,
    auuc_random_baseline,
    lift_at_quantile,
    outcome_accuracy,
    policy_value,
    uplift_curve,
    write_curves_csv,
    write_metrics_csv,
    write_policy_csv,
)
from .metalearn import KINDS, fit_multi_treatment, predict_outcome, predict_uplift_matrix
from .selection import STRATEGIES, UpliftScores, read_scores_csv, select, write_assignment_csv, write_scores_csv

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_FIT = 0, 2, 3, 4

DATASET_FILE = "dataset.csv"
GROUND_TRUTH_FILE = "ground_truth.csv"
METRICS_FILE = "metrics.csv"
CURVES_FILE = "curves.csv"
POLICY_FILE = "policy_value.csv"


def _floats_list(text, flag):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _labelled(items, flag):
    out = {}
    for item in items or ():
        label, sep, value = item.partition("=")
        if not sep or not label or not value:
            raise ValidationError(f"{flag}: expected LABEL=PATH, got {item!r}")
        if label in out:
            raise ValidationError(f"{flag}: label {label!r} given twice")
        out[label] = value
    return out


def _fraction(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {value}")
    return value


def _add_columns(p):
    p.add_argument("--id-column", default="customer_id", help="customer id column (default: %(default)s)")
    p.add_argument("--treatment-column", default="treatment", help="treatment label column (default: %(default)s)")
    p.add_argument("--outcome-column", default="outcome", help="outcome column (default: %(default)s)")


def _load(args, path, require_control=True):
    return load_csv(
        path,
        outcome_column=args.outcome_column,
        treatment_column=args.treatment_column,
        id_column=args.id_column,
        require_control=require_control,
    )


# simulate


def _generator_config(args) -> datagen.GeneratorConfig:
    if args.n is not None and args.n < 1:
        raise ValidationError(f"--n must be >= 1, got {args.n}")
    if args.preset == "default":
        extra = [f for f in ("d", "probs", "tau", "base_weights", "base_intercept") if getattr(args, f)]
        if extra:
            flags = ", ".join("--" + f.replace("_", "-") for f in extra)
            raise ValidationError(f"{flags} only apply to --preset custom")
        return datagen.default_config(seed=args.seed, n=args.n or 20_000)

    if args.d is None or args.probs is None or not args.tau:
        raise ValidationError("--preset custom needs --d, --probs and at least one --tau")
    if args.d < 1:
        raise ValidationError(f"--d must be >= 1, got {args.d}")
    probs = _floats_list(args.probs, "--probs")
    if len(probs) != len(args.tau) + 1:
        raise ValidationError(
            f"--probs: need {len(args.tau) + 1} values (control plus one per --tau), got {len(probs)}"
        )
    if any(p <= 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
        raise ValidationError(f"--probs: values must be > 0 and sum to 1, got {args.probs!r}")
    weights = _floats_list(args.base_weights, "--base-weights") if args.base_weights else (0.0,) * args.d
    if len(weights) != args.d:
        raise ValidationError(f"--base-weights: need {args.d} values, got {len(weights)}")
    taus = []
    for text in args.tau:
        try:
            taus.append(datagen.parse_tau_spec(text, args.d))
        except ValidationError as exc:
            raise ValidationError(f"--tau: {exc}") from None
    try:
        return datagen.GeneratorConfig(
            n=args.n or 20_000,
            d=args.d,
            assignment_probs=probs,
            base_weights=weights,
            base_intercept=float(args.base_intercept or 0.0),
            tau_specs=tuple(taus),
            seed=args.seed,
        )
    except ValidationError as exc:
        raise ValidationError(f"invalid generator flags: {exc}") from None


def cmd_simulate(args) -> int:
    config = _generator_config(args)
    out = Path(args.out)
    dataset, truth = datagen.generate(config)
    out.mkdir(parents=True, exist_ok=True)
    # stage both files before moving either into place
    staged = [out / f".{DATASET_FILE}.staged", out / f".{GROUND_TRUTH_FILE}.staged"]
    try:
        write_csv(dataset, staged[0])
        datagen.write_ground_truth_csv(truth, staged[1])
        os.replace(staged[0], out / DATASET_FILE)
        os.replace(staged[1], out / GROUND_TRUTH_FILE)
    finally:
        for p in staged:
            if p.exists():
                p.unlink()
    print(
        f"wrote {dataset.n} rows x {dataset.d} features, {config.K} treatment(s) "
        f"to {out / DATASET_FILE} and {out / GROUND_TRUTH_FILE}"
    )
    return EXIT_OK


# train / score


def _fit_config(args) -> FitConfig:
    return FitConfig(l2=args.l2, max_iter=args.max_iter, tol=args.tol, learning_rate=args.learning_rate)


def cmd_train(args) -> int:
    cfg = _fit_config(args)
    if args.folds < 2:
        raise ValidationError(f"--folds must be >= 2, got {args.folds}")
    dataset = _load(args, args.data, require_control=False)
    model = fit_multi_treatment(dataset, args.kind, cfg, args.calibrated, args.folds, args.seed)
    extra = {
        "binary_outcome": str(dataset.binary_outcome).lower(),
        "folds": args.folds if args.calibrated else 0,
        "seed": args.seed,
        "l2": repr(cfg.l2),
        "max_iter": cfg.max_iter,
        "tol": repr(cfg.tol),
        "learning_rate": repr(cfg.learning_rate),
    }
    modelio.save_multi(model, args.out, extra)
    labels = ",".join(str(t) for t in model.treatment_labels)
    print(f"trained {args.kind}-learner{' (calibrated)' if args.calibrated else ''} "
          f"for treatments [{labels}] -> {args.out}")
    return EXIT_OK


def _load_model(path):
    path = Path(path)
    if not (path / modelio.MANIFEST).is_file():
        raise FileNotFoundError(f"{path}: not a model directory (no {modelio.MANIFEST})")
    return modelio.load_multi(path)


def _score_matrix(model, dataset) -> UpliftScores:
    validate_feature_names(model.feature_names, dataset.feature_names)
    return UpliftScores(dataset.customer_ids, model.treatment_labels, predict_uplift_matrix(model, dataset.features))


def cmd_score(args) -> int:
    model = _load_model(args.model)
    dataset = _load(args, args.data, require_control=False)
    scores = _score_matrix(model, dataset)
    write_scores_csv(scores, args.out)
    print(f"scored {scores.n} customers for treatments {list(scores.treatment_labels)} -> {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    scores = read_scores_csv(args.scores)
    assignment = select(scores, args.strategy, args.top_fraction)
    write_assignment_csv(assignment, args.out)
    chosen = int(np.sum(assignment.assigned != -1))
    print(f"{args.strategy}: {chosen} of {assignment.n} customers assigned a treatment -> {args.out}")
    return EXIT_OK


# evaluate


def _align(ids, reference, what):
    """Row index into ``ids`` that puts it in ``reference`` order."""
    ids = [str(c) for c in ids]
    if list(ids) == list(reference):
        return np.arange(len(ids))
    pos = {c: i for i, c in enumerate(ids)}
    if len(pos) != len(ids) or set(pos) != set(reference):
        missing = len(set(reference) - set(pos))
        extra = len(set(pos) - set(reference))
        raise ValidationError(
            f"{what}: customer_ids do not match the data file ({missing} missing, {extra} extra)"
        )
    return np.array([pos[c] for c in reference])


def _evaluation_inputs(args, dataset):
    """label -> (UpliftScores aligned to dataset, model or None)."""
    models = _labelled(args.model, "--model")
    score_files = _labelled(args.scores, "--scores")
    clash = set(models) & set(score_files)
    if clash:
        raise ValidationError(f"labels used for both --model and --scores: {sorted(clash)}")
    if not models and not score_files:
        raise ValidationError("give at least one --model or --scores")
    reserved = {"random", "oracle"} & (set(models) | set(score_files))
    if reserved:
        raise ValidationError(f"labels {sorted(reserved)} are reserved")
    ref = [str(c) for c in dataset.customer_ids]
    loaded = {}
    for label, path in models.items():
        model = _load_model(path)
        loaded[label] = (_score_matrix(model, dataset), model)
    for label, path in score_files.items():
        scores = read_scores_csv(path)
        idx = _align(scores.customer_ids, ref, path)
        loaded[label] = (UpliftScores(dataset.customer_ids, scores.treatment_labels, scores.scores[idx]), None)
    for label, (scores, _) in loaded.items():
        unknown = set(scores.treatment_labels) - set(dataset.treatment_labels)
        if unknown:
            raise ValidationError(f"{label}: treatments {sorted(unknown)} do not occur in the data")
    return loaded


def cmd_evaluate(args) -> int:
    fractions = [_fraction(v) for v in args.top_fractions.split(",")] if args.top_fractions else []
    if args.n_shuffles < 1:
        raise ValidationError(f"--n-shuffles must be >= 1, got {args.n_shuffles}")
    dataset = _load(args, args.data)
    truth = None
    if args.ground_truth:
        truth = datagen.read_ground_truth_csv(args.ground_truth)
        idx = _align(truth.customer_ids, [str(c) for c in dataset.customer_ids], args.ground_truth)
        truth = datagen.GroundTruth(dataset.customer_ids, truth.tau[idx], truth.base_prob[idx])
    inputs = _evaluation_inputs(args, dataset)

    metrics, curves, baselines = [], [], {}
    for label, (scores, model) in inputs.items():
        for j, t in enumerate(scores.treatment_labels):
            rows = np.flatnonzero((dataset.treatments == 0) | (dataset.treatments == t))
            treated = (dataset.treatments[rows] == t).astype(np.int8)
            y = dataset.outcomes[rows]
            s = scores.scores[rows, j]
            if not treated.any():
                raise ValidationError(f"{label}: no rows with treatment {t}")
            if not 1 <= args.n_bins <= len(rows):
                raise ValidationError(f"--n-bins must be in [1, {len(rows)}], got {args.n_bins}")
            if t not in baselines:
                baselines[t] = auuc_random_baseline(treated, y, args.n_shuffles, args.seed, args.n_bins)
            curve = uplift_curve(s, treated, y, args.n_bins)
            curves.append((label, t, curve))
            row = {
                "model": label,
                "treatment": t,
                "auuc": auuc(curve),
                "auuc_random_mean": baselines[t].mean,
                "lift_top10": lift_at_quantile(s, treated, y, 0.1).lift_ratio,
                "lift_top20": lift_at_quantile(s, treated, y, 0.2).lift_ratio,
            }
            if model is not None and dataset.binary_outcome:
                p = predict_outcome(model.per_treatment[t], dataset.features[rows], treated)
                row["accuracy"] = outcome_accuracy(p, y)
                row["ece"] = expected_calibration_error(p, y)
            metrics.append(row)
    for t, base in sorted(baselines.items()):
        metrics.append({"model": "random", "treatment": t, "auuc": base.mean, "auuc_random_mean": base.mean})

    policy = []
    if truth is not None:
        K = truth.tau.shape[1]
        for label, (scores, _) in inputs.items():
            if max(scores.treatment_labels) > K:
                raise ValidationError(f"{label}: treatments exceed the {K} ground-truth columns")
        candidates = dict((label, scores) for label, (scores, _) in inputs.items())
        candidates["oracle"] = UpliftScores(dataset.customer_ids, truth.treatment_labels, truth.tau)
        for label, scores in candidates.items():
            tau = truth.tau[:, [t - 1 for t in scores.treatment_labels]]
            for strategy in STRATEGIES:
                for f in fractions:
                    value = policy_value(select(scores, strategy, f), tau, scores.treatment_labels)
                    policy.append({"model": label, "strategy": strategy, "top_fraction": f, "policy_value": value})

    out = Path(args.out)
    with atomic_directory(out) as tmp:
        write_metrics_csv(metrics, tmp / METRICS_FILE)
        write_curves_csv(curves, tmp / CURVES_FILE)
        if truth is not None:
            write_policy_csv(policy, tmp / POLICY_FILE)
    print(f"evaluated {len(inputs)} model(s) on {dataset.n} customers -> {out}")
    return EXIT_OK


# argument handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtuplift",
        description="Multi-treatment uplift modelling: simulate, train, score, select, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    config_help = "flat key=value file of defaults; command-line flags override it"

    p = sub.add_parser("simulate", help="generate a synthetic RCT campaign with known effects")
    p.add_argument("--config", help=config_help)
    p.add_argument("--preset", choices=("default", "custom"), default="default",
                   help="'default' is the 2-treatment acceptance scenario; 'custom' uses the flags below")
    p.add_argument("--n", type=int, help="number of customers (default: 20000)")
    p.add_argument("--d", type=int, help="number of features (custom preset)")
    p.add_argument("--probs", help="assignment probabilities, control first, e.g. 0.4,0.3,0.3 (custom)")
    p.add_argument("--tau", action="append",
                   help="effect of one treatment, repeat per treatment: constant:C, "
                        "linear:B:W1,..,Wd[:LO:HI], step:J:TH:LOW:HIGH, sigmoid:OFF:SCALE:SLOPE:J, "
                        "logitshift:DELTA (custom)")
    p.add_argument("--base-weights", help="comma-separated baseline logit weights (custom, default zeros)")
    p.add_argument("--base-intercept", type=float, help="baseline logit intercept (custom, default 0)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default: %(default)s)")
    p.add_argument("--out", required=True, help=f"output directory for {DATASET_FILE} and {GROUND_TRUTH_FILE}")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit one meta-learner per treatment and save a model directory")
    p.add_argument("--config", help=config_help)
    p.add_argument("--data", required=True, help="campaign CSV")
    p.add_argument("--kind", choices=KINDS, default="T", help="meta-learner (default: %(default)s)")
    p.add_argument("--calibrated", action="store_true", help="cross-fitted isotonic calibration of outcome models")
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS, help="calibration folds (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="fold assignment seed (default: %(default)s)")
    defaults = FitConfig()
    p.add_argument("--l2", type=float, default=defaults.l2, help="L2 penalty (default: %(default)s)")
    p.add_argument("--max-iter", type=int, default=defaults.max_iter, help="gradient steps (default: %(default)s)")
    p.add_argument("--tol", type=float, default=defaults.tol, help="gradient tolerance (default: %(default)s)")
    p.add_argument("--learning-rate", type=float, default=defaults.learning_rate,
                   help="initial step size (default: %(default)s)")
    p.add_argument("--out", required=True, help="model directory to write")
    _add_columns(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="write per-treatment CATE scores for a CSV")
    p.add_argument("--config", help=config_help)
    p.add_argument("--model", required=True, help="model directory from 'train'")
    p.add_argument("--data", required=True, help="campaign CSV to score")
    p.add_argument("--out", required=True, help="scores CSV to write (customer_id,cate_1,...)")
    _add_columns(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", help="assign each customer one treatment or none")
    p.add_argument("--config", help=config_help)
    p.add_argument("--scores", required=True, help="scores CSV from 'score'")
    p.add_argument("--strategy", choices=STRATEGIES, default="zscore",
                   help="compare treatments by within-treatment rank or by z-score (default: %(default)s)")
    p.add_argument("--top-fraction", type=_fraction, default=1.0,
                   help="fraction of customers to target, by deciding score (default: %(default)s)")
    p.add_argument("--out", required=True, help="assignment CSV to write")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="AUUC, lift, calibration and policy value report")
    p.add_argument("--config", help=config_help)
    p.add_argument("--data", required=True, help="campaign CSV with observed treatments and outcomes")
    p.add_argument("--model", action="append", metavar="LABEL=DIR",
                   help="model directory to score and evaluate (repeatable)")
    p.add_argument("--scores", action="append", metavar="LABEL=CSV",
                   help="precomputed scores CSV to evaluate (repeatable)")
    p.add_argument("--ground-truth", help="ground-truth CSV; adds policy values per strategy")
    p.add_argument("--top-fractions", default="0.3,1.0",
                   help="comma-separated cutoffs for policy values (default: %(default)s)")
    p.add_argument("--n-bins", type=int, default=DEFAULT_BINS, help="uplift curve points (default: %(default)s)")
    p.add_argument("--n-shuffles", type=int, default=200,
                   help="random-score AUUC draws for the baseline (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="random baseline seed (default: %(default)s)")
    p.add_argument("--out", required=True,
                   help=f"report directory ({METRICS_FILE}, {CURVES_FILE}, {POLICY_FILE})")
    _add_columns(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def _read_config(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DatasetError(f"{path}: expected key=value", row=line_no)
            values[key.strip().replace("_", "-")] = value.strip()
    return values


def _expand_config(parser, argv):
    """Turn ``--config FILE`` into flags placed before the command-line flags."""
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not known.config or not argv or argv[0].startswith("-"):
        return argv
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = sub.choices.get(argv[0])
    if command is None:
        return argv
    actions = {
        opt[2:]: action
        for action in command._actions
        for opt in action.option_strings
        if opt.startswith("--")
    }
    given = {a.split("=", 1)[0] for a in argv[1:] if a.startswith("--")}
    tokens = []
    for key, value in _read_config(known.config).items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise ValidationError(f"{known.config}: unknown key {key!r} for '{argv[0]}'")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(f"--{key}")
            elif value.lower() not in ("0", "false", "no", "off"):
                raise ValidationError(f"{known.config}: {key} must be true or false, got {value!r}")
        elif isinstance(action, argparse._AppendAction):
            if f"--{key}" not in given:
                for item in value.split(";"):
                    if item.strip():
                        tokens.extend([f"--{key}", item.strip()])
        else:
            tokens.append(f"--{key}={value}")
    return [argv[0], *tokens, *argv[1:]]


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        argv = _expand_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
