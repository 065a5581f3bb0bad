"""Pipeline driver: synth -> validate -> pca -> prune -> train -> evaluate
-> codegen -> report, each as a subcommand.

Exit codes: 0 success, 1 usage error, 2 data validation error. Every output
is byte-deterministic given the same flags and inputs; all randomness flows
from --seed through tagged streams.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import codegen, dataset, pruning, report, selector_models, synthetic
from .errors import DataError

DEFAULT_SEED = 42
DEFAULT_TEST_FRACTION = 0.2
DEFAULT_BUDGETS = tuple(range(4, 16))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_budgets(text: str) -> tuple[int, ...]:
    try:
        budgets = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"--budgets expects comma-separated integers, got {text!r}")
    if not budgets or any(b < 1 for b in budgets):
        raise UsageError(f"--budgets values must be >= 1, got {text!r}")
    return budgets


def _parse_names(text: str, allowed, flag: str) -> tuple[str, ...]:
    names = tuple(part.strip() for part in text.split(","))
    for name in names:
        if name not in allowed:
            raise UsageError(f"{flag}: unknown value {name!r}, "
                             f"expected one of {', '.join(allowed)}")
    return names


def _load_matrix(path, drop_incomplete: bool) -> dataset.PerformanceMatrix:
    records = dataset.load_records(path)
    if drop_incomplete:
        records, dropped = dataset.drop_incomplete_problems(records)
        if dropped:
            print(f"dropped {len(dropped)} incomplete problems")
    matrix = dataset.normalize(dataset.build_matrix(records))
    matrix.validate()
    return matrix


def _split_matrix(matrix, fraction: float, seed: int) -> dataset.DataSplit:
    if fraction == 0.0:
        return dataset.DataSplit(matrix, matrix, seed)
    return dataset.split(matrix, fraction, seed)


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ------------------------------------------------------------ subcommands

def _cmd_synth(args) -> int:
    if args.spec:
        spec = synthetic.load_spec(args.spec)
    else:
        problems = synthetic.canonical_problems(args.count, args.seed)
        spec = synthetic.SyntheticSpec(problems, args.seed,
                                       args.noise_sigma, args.peak_gflops)
    records = synthetic.generate(spec)
    dataset.write_records(records, args.out)
    print(f"wrote {len(records)} records ({len(spec.problems)} problems) to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    matrix = _load_matrix(args.data, args.drop_incomplete)
    print(f"ok: {len(matrix.problems)} problems x {len(matrix.configs)} configs")
    return 0


def _cmd_pca(args) -> int:
    matrix = _load_matrix(args.data, args.drop_incomplete)
    _write_text(args.out, report.variance_csv(matrix))
    print(f"wrote variance table to {args.out}")
    return 0


def _cmd_prune(args) -> int:
    matrix = _load_matrix(args.data, args.drop_incomplete)
    part = _split_matrix(matrix, args.test_fraction, args.seed)
    opts = report.default_prune_options(part.train)
    selection = pruning.prune(args.method, part.train, args.budget, args.seed, opts)
    pruning.save_selection(selection, part.train.configs, args.out)
    print(f"selected {len(selection.config_indices)} configs -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    matrix = _load_matrix(args.data, args.drop_incomplete)
    part = _split_matrix(matrix, args.test_fraction, args.seed)
    selection = pruning.load_selection(args.selection, part.train.configs)
    labeled = selector_models.make_labels(part.train, selection)
    model = selector_models.train_model(args.kind, labeled, args.seed,
                                        epochs=args.epochs, trees=args.trees)
    selector_models.save_model(model, args.out)
    print(f"trained {args.kind} model -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    if bool(args.selection) == bool(args.model):
        raise UsageError("pass exactly one of --selection or --model")
    matrix = _load_matrix(args.data, args.drop_incomplete)
    part = _split_matrix(matrix, args.test_fraction, args.seed)
    if args.selection:
        selection = pruning.load_selection(args.selection, matrix.configs)
        score = pruning.evaluate_selection(selection, part.test)
    else:
        model = selector_models.load_model(args.model)
        score = selector_models.evaluate_model(model, part.test)
    print(f"score {score.formatted()}")
    return 0


def _cmd_codegen(args) -> int:
    if not (args.header or args.doc or args.predictions):
        raise UsageError("pass at least one of --header, --doc, --predictions")
    model = selector_models.load_model(args.model)
    doc = codegen.export_tree(model)
    if args.doc:
        codegen.save_document(doc, args.doc)
        print(f"wrote tree document to {args.doc}")
    if args.header:
        _write_text(args.header, codegen.emit_selector_source(doc, args.symbol))
        print(f"wrote selector header to {args.header}")
    if args.predictions:
        grid = codegen.parity_grid()
        _write_text(args.predictions, codegen.emit_reference_predictions(doc, grid))
        print(f"wrote {len(grid)} reference predictions to {args.predictions}")
    return 0


def _cmd_report(args) -> int:
    matrix = _load_matrix(args.data, args.drop_incomplete)
    part = _split_matrix(matrix, args.test_fraction, args.seed)
    budgets = _parse_budgets(args.budgets) if args.budgets else DEFAULT_BUDGETS
    methods = (_parse_names(args.methods, pruning.METHODS, "--methods")
               if args.methods else pruning.METHODS)
    kinds = (_parse_names(args.kinds, selector_models.MODEL_KINDS, "--kinds")
             if args.kinds else selector_models.MODEL_KINDS)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wanted = {
        "counts": args.counts, "curves": args.curves,
        "variance": args.variance, "classifiers": args.classifiers,
    }
    if not any(wanted.values()):
        wanted = dict.fromkeys(wanted, True)
    opts = report.default_prune_options(part.train)
    if wanted["counts"]:
        _write_text(out_dir / "counts.csv", report.counts_csv(matrix))
        print(f"wrote {out_dir / 'counts.csv'}")
    if wanted["curves"]:
        _write_text(out_dir / "curves.csv",
                    report.curves_csv(part, budgets, methods, opts))
        print(f"wrote {out_dir / 'curves.csv'}")
    if wanted["variance"]:
        _write_text(out_dir / "variance.csv", report.variance_csv(matrix))
        print(f"wrote {out_dir / 'variance.csv'}")
    if wanted["classifiers"]:
        _write_text(out_dir / "classifiers.csv",
                    report.classifiers_csv(part, budgets, args.method, kinds,
                                           opts, epochs=args.epochs,
                                           trees=args.trees))
        print(f"wrote {out_dir / 'classifiers.csv'}")
    return 0


# ----------------------------------------------------------------- parser

def _add_common_data_flags(sub) -> None:
    sub.add_argument("--data", required=True, help="benchmark CSV path")
    sub.add_argument("--drop-incomplete", action="store_true",
                     help="drop problems missing some configs instead of failing")


def _add_split_flags(sub) -> None:
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sub.add_argument("--test-fraction", type=float, default=DEFAULT_TEST_FRACTION,
                     help="holdout fraction; 0 evaluates on the training data")


def build_parser() -> _Parser:
    parser = _Parser(prog="kernelprune",
                     description="prune kernel config spaces and train runtime selectors")
    subs = parser.add_subparsers(dest="command", required=True)

    synth = subs.add_parser("synth", help="generate a synthetic benchmark CSV")
    synth.add_argument("--out", required=True)
    synth.add_argument("--spec", help="synthetic spec JSON (overrides other flags)")
    synth.add_argument("--count", type=int, default=synthetic.CANONICAL_PROBLEM_COUNT)
    synth.add_argument("--seed", type=int, default=DEFAULT_SEED)
    synth.add_argument("--noise-sigma", type=float,
                       default=synthetic.CANONICAL_NOISE_SIGMA)
    synth.add_argument("--peak-gflops", type=float,
                       default=synthetic.CANONICAL_PEAK_GFLOPS)
    synth.set_defaults(func=_cmd_synth)

    validate = subs.add_parser("validate", help="check a benchmark CSV")
    _add_common_data_flags(validate)
    validate.set_defaults(func=_cmd_validate)

    pca = subs.add_parser("pca", help="emit the cumulative variance table")
    _add_common_data_flags(pca)
    pca.add_argument("--out", required=True)
    pca.set_defaults(func=_cmd_pca)

    prune = subs.add_parser("prune", help="select a config subset")
    _add_common_data_flags(prune)
    _add_split_flags(prune)
    prune.add_argument("--method", required=True, choices=pruning.METHODS)
    prune.add_argument("--budget", required=True, type=int)
    prune.add_argument("--out", required=True)
    prune.set_defaults(func=_cmd_prune)

    train = subs.add_parser("train", help="fit a runtime selector model")
    _add_common_data_flags(train)
    _add_split_flags(train)
    train.add_argument("--selection", required=True, help="selection JSON path")
    train.add_argument("--kind", required=True, choices=selector_models.MODEL_KINDS)
    train.add_argument("--epochs", type=int, default=100)
    train.add_argument("--trees", type=int, default=100)
    train.add_argument("--out", required=True)
    train.set_defaults(func=_cmd_train)

    evaluate = subs.add_parser("evaluate", help="score a selection or model")
    _add_common_data_flags(evaluate)
    _add_split_flags(evaluate)
    evaluate.add_argument("--selection")
    evaluate.add_argument("--model")
    evaluate.set_defaults(func=_cmd_evaluate)

    gen = subs.add_parser("codegen", help="export a tree model as C source")
    gen.add_argument("--model", required=True)
    gen.add_argument("--symbol", default="select_kernel")
    gen.add_argument("--header", help="output path for the C header")
    gen.add_argument("--doc", help="output path for the tree document JSON")
    gen.add_argument("--predictions", help="output path for the parity-grid CSV")
    gen.set_defaults(func=_cmd_codegen)

    rep = subs.add_parser("report", help="emit plot-ready CSV tables")
    _add_common_data_flags(rep)
    _add_split_flags(rep)
    rep.add_argument("--out-dir", default=".")
    rep.add_argument("--budgets", help="comma-separated, default 4..15")
    rep.add_argument("--methods", help="comma-separated pruning methods")
    rep.add_argument("--method", default="decision-tree",
                     help="pruning method for the classifier table")
    rep.add_argument("--kinds", help="comma-separated model kinds")
    rep.add_argument("--epochs", type=int, default=100)
    rep.add_argument("--trees", type=int, default=100)
    rep.add_argument("--counts", action="store_true")
    rep.add_argument("--curves", action="store_true")
    rep.add_argument("--variance", action="store_true")
    rep.add_argument("--classifiers", action="store_true")
    rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"data error: cannot open {exc.filename}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
