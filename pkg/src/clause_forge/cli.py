"""``clause-forge`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
Results go to stdout, diagnostics to stderr. Stages exchange line-delimited
JSON, so ``expand | tag | graph`` composes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Iterator, Sequence, TextIO

from . import __version__
from . import candle, config as config_mod, corpus as corpus_mod, grammar
from .core import AnnotationError, Utterance, to_bio
from .corpus import Corpus, CorpusError, Split
from .evaluation import EvalError, evaluate, render, score_external
from .graph import GraphError, create_graph, export_graph
from .restructure import SYNTAX_PROVIDERS, analyze, expand_clauses, get_provider
from .tagger import ModelFormatError, TrainingConfig, TrainingError
from .tagger.features import FEATURE_VERSION
from .tagger.model import FORMAT_VERSION

log = logging.getLogger("clause_forge")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

_KNOWN_SUFFIXES = {".bio", ".conll", ".tsv", ".json", ".jsonl", ".ndjson"}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2; usage errors are 1 here
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


# -- input helpers ------------------------------------------------------------


def load_corpus(path: str, fmt: str = "auto", split: Split | None = None) -> Corpus:
    """A corpus file in the standard formats, a release file, or one split of a release directory."""
    p = Path(path)
    if p.is_dir():
        splits = candle.load_release(p)
        return splits[split or Split.TRAIN]
    if not p.exists():
        raise DataError(f"{path}: no such file")
    if fmt == "candle" or (fmt == "auto" and p.suffix.lower() not in _KNOWN_SUFFIXES):
        corpus = candle.read_release(p, split)
    else:
        corpus = corpus_mod.load(p, None if fmt == "auto" else fmt, split)
    if corpus.quarantined:
        log.warning("%s: %d record(s) quarantined", corpus.name, len(corpus.quarantined))
    return corpus


def _open_input(path: str | None) -> TextIO:
    if path in (None, "-"):
        return sys.stdin
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _read_utterances(stream: TextIO) -> Iterator[Utterance]:
    """Plain text lines, or JSON lines carrying ``text`` (and optionally ``tokens``)."""
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.lstrip().startswith("{"):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
            if "text" in obj:
                yield Utterance.from_text(obj["text"])
            elif "tokens" in obj:
                yield Utterance.from_tokens(obj["tokens"])
            else:
                raise DataError(f"line {lineno}: JSON record has no text")
        else:
            yield Utterance.from_text(line)


def _provider(args, cfg) -> str:
    name = args.syntax_provider or cfg.syntax_provider
    if name not in SYNTAX_PROVIDERS:
        raise UsageError(f"unknown syntax provider {name!r}; known: {', '.join(sorted(SYNTAX_PROVIDERS))}")
    return name


# -- subcommands --------------------------------------------------------------


def cmd_stats(args, cfg) -> int:
    columns: dict[str, Any] = {}
    for path in args.corpus:
        p = Path(path)
        if p.is_dir():
            for split, c in candle.load_release(p).items():
                columns[split.value] = corpus_mod.stats(c)
        else:
            c = load_corpus(path, args.corpus_format)
            columns[c.split.value if c.split else c.name] = corpus_mod.stats(c)
    if args.format == "json":
        print(_dumps({name: s.as_dict() for name, s in columns.items()}))
        return EXIT_OK
    names = list(columns)
    rows = [["Tag", *names]]
    keys = list(next(iter(columns.values())).as_dict())
    for k in keys:
        rows.append([k, *(str(columns[n].as_dict()[k]) for n in names)])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join([r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]))
    return EXIT_OK


def cmd_convert(args, cfg) -> int:
    c = load_corpus(args.corpus, args.corpus_format)
    data = corpus_mod.convert(c, args.to)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    if args.quarantine:
        with open(args.quarantine, "w", encoding="utf-8") as fh:
            corpus_mod.write_quarantine(c, fh)
    return EXIT_OK


def cmd_expand(args, cfg) -> int:
    provider = get_provider(_provider(args, cfg))
    with _open_input(args.input) as stream:
        for utt in _read_utterances(stream):
            trace = expand_clauses(utt, analyze(utt, provider))
            print(_dumps({"text": utt.text, "expanded": trace.expanded.text, "trace": trace.to_json()}))
    return EXIT_OK


def _rules_arg(value: str | None):
    if value is None or value.lower() == "none":
        return None
    return value


def _ensemble(args, cfg):
    from .ensemble import Ensemble, EnsembleConfig, EnsembleError

    rules = _rules_arg(args.rules if args.rules is not None else cfg.rules)
    model = args.model or cfg.model
    expand = cfg.expand if args.no_expand is None else not args.no_expand
    try:
        return Ensemble(EnsembleConfig(rules, model, _provider(args, cfg), expand))
    except EnsembleError as exc:
        raise UsageError(str(exc)) from exc


def cmd_tag(args, cfg) -> int:
    ens = _ensemble(args, cfg)
    fmt = args.format or ("bio" if cfg.format == "bio" else "json")
    first = True
    with _open_input(args.input) as stream:
        for utt in _read_utterances(stream):
            result = ens.run(utt)
            if fmt == "json":
                print(_dumps(result.to_json()))
                continue
            if not first:
                print()
            first = False
            ann = result.projected()
            for word, label in zip(ann.utterance.words, to_bio(ann)):
                print(f"{word}\t{label}")
    return EXIT_OK


def cmd_train(args, cfg) -> int:
    from .tagger import save, train

    corpus = load_corpus(args.corpus, args.corpus_format, Split.TRAIN)
    validation = None
    if args.validation:
        validation = load_corpus(args.validation, args.corpus_format, Split.VALIDATION)
    elif Path(args.corpus).is_dir():
        validation = load_corpus(args.corpus, args.corpus_format, Split.VALIDATION)
    try:
        tc = TrainingConfig(
            epochs=args.epochs if args.epochs is not None else cfg.epochs,
            learning_rate=args.learning_rate if args.learning_rate is not None else cfg.learning_rate,
            l2=args.l2 if args.l2 is not None else cfg.l2,
            seed=args.seed if args.seed is not None else cfg.seed,
            shuffle=not args.no_shuffle,
            optimizer=args.optimizer or cfg.optimizer,
            expand_inputs=args.expand_inputs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    def report(r):
        extra = f" validation-F1={r.validation_f1:.4f}" if r.validation_f1 is not None else ""
        print(f"epoch {r.epoch} loss={r.loss:.6f}{extra}", file=sys.stderr)

    model = train(corpus.examples, tc, validation.examples if validation else None, on_epoch=report)
    model.metadata["corpus_fingerprint"] = corpus.fingerprint()
    save(model, args.out)
    print(_dumps({"model": str(args.out), "features": len(model.features), "sentences": len(corpus)}))
    return EXIT_OK


def cmd_eval(args, cfg) -> int:
    gold = load_corpus(args.gold, args.corpus_format, Split.TEST)
    if gold.quarantined:
        raise DataError(f"{args.gold}: {len(gold.quarantined)} gold record(s) could not be read")
    name = args.name
    if args.pred:
        report = score_external(args.pred, gold.examples, args.level)
        name = name or Path(args.pred).stem
    else:
        if args.model is None and args.rules is None:
            raise UsageError("eval needs --pred, or --model/--rules to produce predictions")
        ens = _ensemble(args, cfg)
        preds = [ens.run(g.utterance).projected() for g in gold.examples]
        report = evaluate(preds, gold.examples, args.level)
        name = name or "ensemble"
    sys.stdout.write(render({name: report}, args.format))
    return EXIT_OK


def cmd_graph(args, cfg) -> int:
    fmt = args.format
    with _open_input(args.input) as stream:
        for lineno, line in enumerate(stream, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
            rec = corpus_mod.record_from_json(obj)
            if not isinstance(rec, corpus_mod.AnnotationSet):
                raise DataError(f"line {lineno}: {rec.reason}: {rec.detail}")
            g = create_graph(rec)
            out = export_graph(g, fmt).decode("utf-8")
            sys.stdout.write(out if fmt == "dot" else out + "\n")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="clause-forge", description="Decompose conditional and multi-intent utterances.")
    p.add_argument("--version", action="store_true", help="print version information as JSON and exit")
    p.add_argument("--config", help="key=value config file (default: $%s)" % config_mod.ENV_VAR)
    p.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    def corpus_format(sp):
        sp.add_argument("--corpus-format", choices=["auto", "bio", "json", "candle"], default="auto")

    s = sub.add_parser("stats", help="per-tag span counts")
    s.add_argument("--corpus", action="append", required=True, help="corpus file or release directory; repeatable")
    s.add_argument("--format", choices=["text", "json"], default="text")
    corpus_format(s)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("convert", help="convert between BIO and JSON spans")
    s.add_argument("--corpus", required=True)
    s.add_argument("--to", choices=["bio", "json"], required=True)
    s.add_argument("--out")
    s.add_argument("--quarantine", help="write quarantined records here as JSON lines")
    corpus_format(s)
    s.set_defaults(func=cmd_convert)

    s = sub.add_parser("expand", help="restore elided predicates in coordinated clauses")
    s.add_argument("--input", help="text or JSON lines (default: stdin)")
    s.add_argument("--syntax-provider")
    s.set_defaults(func=cmd_expand)

    def ensemble_flags(sp):
        sp.add_argument("--rules", help="rule file, 'default' or 'none'")
        sp.add_argument("--model", help="trained tagger model")
        sp.add_argument("--no-expand", action="store_true", default=None)
        sp.add_argument("--syntax-provider")

    s = sub.add_parser("tag", help="tag utterances with rules and tagger")
    ensemble_flags(s)
    s.add_argument("--input", help="text or JSON lines (default: stdin)")
    s.add_argument("--format", choices=["json", "bio"])
    s.set_defaults(func=cmd_tag)

    s = sub.add_parser("train", help="train the sequence tagger")
    s.add_argument("--corpus", required=True, help="training file or release directory")
    s.add_argument("--validation")
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int)
    s.add_argument("--learning-rate", "--lr", type=float)
    s.add_argument("--l2", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--optimizer", choices=["sgd", "batch"])
    s.add_argument("--no-shuffle", action="store_true")
    s.add_argument("--expand-inputs", action="store_true")
    corpus_format(s)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score predictions against gold")
    s.add_argument("--gold", required=True, help="gold file or release directory (test split)")
    s.add_argument("--pred", help="prediction file (BIO or JSON spans)")
    ensemble_flags(s)
    s.add_argument("--level", choices=["span", "token"], default="span")
    s.add_argument("--format", choices=["text", "json", "csv"], default="text")
    s.add_argument("--name", help="row label in the report")
    corpus_format(s)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("graph", help="compile annotations into condition/action graphs")
    s.add_argument("--input", help="annotation JSON lines (default: stdin)")
    s.add_argument("--format", choices=["json", "dot"], default="json")
    s.set_defaults(func=cmd_graph)
    return p


def version_info() -> dict[str, Any]:
    return {
        "name": "clause-forge",
        "version": __version__,
        "model_format": FORMAT_VERSION,
        "feature_version": FEATURE_VERSION,
    }


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.version:
        print(_dumps(version_info()))
        return EXIT_OK
    if args.command is None:
        sys.stderr.write(parser.format_help())
        return EXIT_USAGE
    try:
        cfg = config_mod.load(args.config)
    except config_mod.ConfigError as exc:
        print(f"clause-forge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    level = (args.log_level or cfg.log_level).upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"clause-forge {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CorpusError, ModelFormatError, grammar.RuleCompileError, EvalError, GraphError,
            AnnotationError, TrainingError, OSError) as exc:
        print(f"clause-forge {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(dispatch(argv))
