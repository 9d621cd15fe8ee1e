"""``augmenta`` command-line entry point.

Every subcommand that writes a file also writes ``<output>.manifest.json``
recording the argv, resolved options and backend configs of the run;
``augmenta rerun <manifest>`` replays it. Exit codes: 0 success, 1 input or
configuration error, 2 backend failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, corpus
from .augmentors import METHODS, AugmentationConfig, run_augmentation
from .backends import (
    BackendError,
    ClassifierBackend,
    CompleterBackend,
    ConfigError,
    load_backend_config,
    load_backend_set,
)
from .corpus import Dataset, DatasetError, LabeledExample, load_dataset, load_texts, write_dataset
from .evalharness import (
    EvaluationReport,
    ReportConflictError,
    ReportEntry,
    evaluate,
    evaluate_predictions,
    merge_reports,
    parse_report_csv,
    render_report,
)
from .generative import completion_run, pseudo_label_run, write_training_manifest
from .textprep import clean_text

logger = logging.getLogger("augmenta")

ENV_BACKEND_CONFIG = "AUGMENTA_BACKEND_CONFIG"
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}", self.format_usage())


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read_json(path) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return None


def write_manifest(args, outputs, inputs, backend_configs=()) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "argv")}
    manifest = {
        "tool": "augmenta",
        "version": __version__,
        "subcommand": args.command,
        "argv": args.argv,
        "cwd": os.getcwd(),
        "config": config,
        "seed": getattr(args, "seed", None),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "backend_configs": {str(p): _read_json(p) for p in backend_configs},
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    for out in outputs:
        _write_text(Path(f"{out}.manifest.json"), json.dumps(manifest, ensure_ascii=False, indent=2, default=str) + "\n")


def _backend_path(value, flag):
    path = value or os.environ.get(ENV_BACKEND_CONFIG)
    if not path:
        raise ConfigError(f"missing {flag} (or set {ENV_BACKEND_CONFIG})")
    return path


def _load_role(path, cls, flag):
    backend = load_backend_config(path)
    if not isinstance(backend, cls):
        raise ConfigError(f"{flag} {path}: backend {backend.kind!r} is not a {cls.role}")
    return backend


def _dataset_format(path, explicit=None):
    if explicit:
        return explicit
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".json") else "tsv"


# --- subcommands -------------------------------------------------------------


def cmd_preprocess(args) -> int:
    ds = load_dataset(args.inp, args.in_format, domain=args.domain, split=args.split)
    kept, dropped = [], 0
    for ex in ds:
        text = clean_text(ex.text, drop_hashtag_words=args.drop_hashtag_words)
        if not text:
            dropped += 1
            continue
        kept.append(LabeledExample(ex.id, text, ex.label, ex.source, ex.params))
    write_dataset(Dataset(kept, ds.domain, ds.split), args.out, _dataset_format(args.out, args.format))
    write_manifest(args, [args.out], [args.inp])
    print(f"kept={len(kept)} dropped={dropped}")
    return 0


def cmd_augment(args) -> int:
    backend_path = _backend_path(args.backend_config, "--backend-config")
    config = AugmentationConfig(
        method=args.method,
        ratio=args.ratio,
        seed=args.seed,
        pivot_lang=args.pivot,
        source_lang=args.source_lang,
        keep_original=args.keep_original,
    )
    backends = load_backend_set(backend_path)
    ds = load_dataset(args.inp, args.in_format, domain=args.domain, split=args.split)
    result = run_augmentation(ds, config, backends, jobs=args.jobs)
    write_dataset(result.dataset, args.out, _dataset_format(args.out, args.format))
    write_manifest(args, [args.out], [args.inp], [backend_path])
    print(f"augmented={result.produced} skipped={result.skipped}")
    return 0


def cmd_pseudolabel(args) -> int:
    path = _backend_path(args.classifier_config, "--classifier-config")
    clf = _load_role(path, ClassifierBackend, "--classifier-config")
    texts = load_texts(args.inp)
    result = pseudo_label_run(texts, clf, labeler=args.labeler, domain=args.domain, jobs=args.jobs)
    write_dataset(result.dataset, args.out, _dataset_format(args.out, args.format))
    outputs = [args.out]
    if args.training_manifest:
        write_training_manifest(args.training_manifest, [(args.labeler, args.out, args.base_checkpoint)])
        outputs.append(args.training_manifest)
    write_manifest(args, outputs, [args.inp], [path])
    print(f"labeled={result.produced} skipped={result.skipped}")
    return 0


def cmd_complete(args) -> int:
    path = _backend_path(args.generator_config, "--generator-config")
    gen = _load_role(path, CompleterBackend, "--generator-config")
    ds = load_dataset(args.inp, args.in_format, domain=args.domain, split=args.split)
    result = completion_run(ds, gen, seed=args.seed, jobs=args.jobs)
    write_dataset(result.dataset, args.out, _dataset_format(args.out, args.format))
    outputs = [args.out]
    if args.training_manifest:
        write_training_manifest(args.training_manifest, [(corpus.GPT_COMPLETION, args.out, args.base_checkpoint)])
        outputs.append(args.training_manifest)
    write_manifest(args, outputs, [args.inp], [path])
    print(f"generated={result.produced} skipped={result.skipped}")
    return 0


def load_predictions(path) -> dict[str, int]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DatasetError("empty predictions file", path)
    delim = "\t" if "\t" in lines[0] else ","
    header = [h.strip() for h in lines[0].split(delim)]
    if header[:2] != ["id", "predicted"]:
        raise DatasetError("predictions header must be 'id' and 'predicted'", path, 1)
    preds = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(delim)
        if len(fields) < 2:
            raise DatasetError("expected id and predicted columns", path, lineno)
        try:
            preds[fields[0].strip()] = corpus.validate_label(fields[1])
        except ValueError as exc:
            raise corpus.LabelValidationError(str(exc), path, lineno) from None
    return preds


def cmd_evaluate(args) -> int:
    gold = load_dataset(args.gold, args.in_format, domain=args.eval_domain, split=args.split)
    backend_paths = []
    if args.predictions:
        result = evaluate_predictions(gold, load_predictions(args.predictions))
        tag = args.model_tag or Path(args.predictions).stem
    else:
        path = _backend_path(args.classifier_config, "--classifier-config")
        clf = _load_role(path, ClassifierBackend, "--classifier-config")
        backend_paths.append(path)
        result = evaluate(clf, gold, jobs=args.jobs)
        tag = args.model_tag or clf.describe()
    entry = ReportEntry(
        tag, args.train_domain, gold.domain, gold.split, result.accuracy, result.confusion, result.skipped
    )
    fmt = args.format or ("csv" if Path(args.report).suffix.lower() == ".csv" else "markdown")
    _write_text(Path(args.report), render_report(EvaluationReport([entry]), fmt))
    inputs = [args.gold] + ([args.predictions] if args.predictions else [])
    write_manifest(args, [args.report], inputs, backend_paths)
    acc = "-" if result.accuracy is None else f"{result.accuracy:.4f}"
    print(f"accuracy={acc} evaluated={result.confusion.total} skipped={result.skipped}")
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DatasetError(f"cannot read report: {exc.strerror or exc}", path) from None
        reports.append(parse_report_csv(text, str(path)))
    merged = merge_reports(reports)
    out = render_report(merged, args.format)
    if args.out:
        _write_text(Path(args.out), out)
        write_manifest(args, [args.out], args.inputs)
    else:
        sys.stdout.write(out)
    return 0


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    argv = manifest.get("argv")
    if not isinstance(argv, list) or not argv:
        raise ConfigError(f"{args.manifest}: manifest has no argv")
    cwd = args.cwd or manifest.get("cwd") or os.getcwd()
    prev = os.getcwd()
    os.chdir(cwd)
    try:
        return main(argv)
    finally:
        os.chdir(prev)


# --- parser ------------------------------------------------------------------


def _common(p, seed=False, jobs=True):
    if seed:
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="base seed for all randomness (default 42)")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="worker cap; 1 forces serial execution")


def _dataset_io(p, in_help="input dataset (.tsv or .jsonl)"):
    p.add_argument("--in", dest="inp", required=True, help=in_help)
    p.add_argument("--out", required=True)
    p.add_argument("--in-format", choices=corpus.FORMATS)
    p.add_argument("--format", choices=corpus.FORMATS, help="output format (default: from --out extension)")
    p.add_argument("--domain")
    p.add_argument("--split", default="train")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="augmenta", description="Text augmentation and evaluation for low-resource sentiment data.")
    parser.add_argument("--version", action="version", version=f"augmenta {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="strip links, hashtags, punctuation and non-Devanagari text")
    _dataset_io(p)
    p.add_argument("--drop-hashtag-words", action="store_true", help="delete whole hashtags instead of just '#'")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("augment", help="augment a labeled dataset")
    _dataset_io(p)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--ratio", type=float, default=0.4)
    p.add_argument("--pivot", default="en")
    p.add_argument("--source-lang", default="mr")
    p.add_argument("--keep-original", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--backend-config", help=f"backend config JSON (default: ${ENV_BACKEND_CONFIG})")
    _common(p, seed=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("pseudolabel", help="label unlabeled sentences with a classifier")
    p.add_argument("--in", dest="inp", required=True, help="one sentence per line (or a dataset file)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=corpus.FORMATS)
    p.add_argument("--domain", default="pseudo")
    p.add_argument("--classifier-config")
    p.add_argument("--labeler", choices=(corpus.BERT_PSEUDO, corpus.GPT_LABEL), default=corpus.BERT_PSEUDO)
    p.add_argument("--training-manifest", help="also write a fine-tuning manifest (JSONL)")
    p.add_argument("--base-checkpoint", default="l3cube-pune/marathi-bert-v2")
    _common(p)
    p.set_defaults(func=cmd_pseudolabel)

    p = sub.add_parser("complete", help="add label-conditioned completions of halved sentences")
    _dataset_io(p)
    p.add_argument("--generator-config")
    p.add_argument("--training-manifest", help="also write a fine-tuning manifest (JSONL)")
    p.add_argument("--base-checkpoint", default="l3cube-pune/marathi-bert-v2")
    _common(p, seed=True)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("evaluate", help="accuracy and confusion matrix on a gold dataset")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--classifier-config")
    src.add_argument("--predictions", help="precomputed predictions, columns id,predicted")
    p.add_argument("--gold", required=True)
    p.add_argument("--in-format", choices=corpus.FORMATS)
    p.add_argument("--report", required=True)
    p.add_argument("--format", choices=("markdown", "csv"))
    p.add_argument("--model-tag")
    p.add_argument("--train-domain", default="unknown")
    p.add_argument("--eval-domain")
    p.add_argument("--split", default="test")
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="merge evaluation CSVs into one table")
    p.add_argument("inputs", nargs="+", help="CSV files written by 'evaluate --format csv'")
    p.add_argument("--out")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rerun", help="replay the run recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--cwd", help="directory to resolve relative paths from (default: the recorded one)")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        message, usage = exc.args
        sys.stderr.write(usage + message + "\n")
        return 1
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"augmenta: backend error: {exc}", file=sys.stderr)
        return 2
    except ReportConflictError as exc:
        print(f"augmenta: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"augmenta: error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())
