"""Reading, validating, converting and counting annotated corpora.

Two on-disk formats are supported:

* ``bio``: one ``token<TAB>label`` pair per line, blank line between sentences.
* ``json``: JSON lines, one record per sentence::

      {"text": "...", "tokens": [...], "spans": [{"tag": "CND", "start_token": 1, "end_token": 5}]}

  ``tokens`` is optional (the text is tokenized when it is missing). A record
  may carry ``labels`` (one BIO label per token) instead of ``spans``.

Malformed records never abort a load; they are quarantined with a reason code.
"""

from __future__ import annotations

import enum
import hashlib
import io
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, TextIO

from .core import (
    AnnotationError,
    AnnotationSet,
    Provenance,
    SpanAnnotation,
    TagType,
    Utterance,
    bio_spans,
    parse_label,
    parse_tag,
    to_bio,
)

log = logging.getLogger(__name__)


class CorpusFormat(str, enum.Enum):
    BIO = "bio"
    JSON_SPANS = "json"


class Split(str, enum.Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


class CorpusError(Exception):
    """Raised when a corpus file cannot be read at all."""


# quarantine reason codes
LENGTH_MISMATCH = "LENGTH_MISMATCH"
UNKNOWN_LABEL = "UNKNOWN_LABEL"
OVERLAP = "OVERLAP"
MALFORMED = "MALFORMED"


@dataclass(frozen=True)
class QuarantinedRecord:
    index: int
    reason: str
    detail: str
    line: int | None = None

    def to_json(self, corpus_name: str = "") -> str:
        return json.dumps(
            {"corpus": corpus_name, "index": self.index, "line": self.line,
             "reason": self.reason, "detail": self.detail},
            sort_keys=True,
        )


@dataclass(frozen=True)
class Corpus:
    name: str
    examples: tuple[AnnotationSet, ...]
    split: Split | None = None
    quarantined: tuple[QuarantinedRecord, ...] = ()
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[AnnotationSet]:
        return iter(self.examples)

    def fingerprint(self) -> str:
        return hashlib.sha256(convert(self, CorpusFormat.JSON_SPANS)).hexdigest()


@dataclass(frozen=True)
class SplitStats:
    counts: dict[TagType, int] = field(default_factory=dict)
    sentences: int = 0

    def __getitem__(self, tag: TagType) -> int:
        return self.counts.get(tag, 0)

    def as_dict(self) -> dict[str, int]:
        out = {tag.long_name: self[tag] for tag in TagType}
        out["SENTENCES"] = self.sentences
        return out


def guess_split(name: str) -> Split | None:
    low = Path(name).name.lower()
    if "train" in low:
        return Split.TRAIN
    if "test" in low:
        return Split.TEST
    if any(k in low for k in ("valid", "dev", "val.")):
        return Split.VALIDATION
    return None


def guess_format(path: str | os.PathLike, head: str = "") -> CorpusFormat:
    suffix = Path(path).suffix.lower()
    if suffix in (".json", ".jsonl", ".ndjson"):
        return CorpusFormat.JSON_SPANS
    if suffix in (".bio", ".conll", ".tsv", ".txt"):
        return CorpusFormat.BIO
    return CorpusFormat.JSON_SPANS if head.lstrip().startswith(("{", "[")) else CorpusFormat.BIO


def load(
    path: str | os.PathLike,
    format: CorpusFormat | str | None = None,
    split: Split | None = None,
) -> Corpus:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    fmt = CorpusFormat(format) if format else guess_format(path, text[:200])
    return loads(text, fmt, name=Path(path).name, split=split or guess_split(str(path)))


def loads(
    text: str,
    format: CorpusFormat | str,
    name: str = "<memory>",
    split: Split | None = None,
) -> Corpus:
    fmt = CorpusFormat(format)
    if fmt is CorpusFormat.BIO:
        records = _bio_records(text)
    else:
        records = _json_records(text)
    return build_corpus(records, name=name, split=split)


def build_corpus(
    records: Iterable[tuple[int | None, Any]],
    name: str,
    split: Split | None = None,
) -> Corpus:
    """Turn ``(line, record)`` pairs into a corpus, quarantining bad records.

    A record is either an :class:`AnnotationSet` or an exception raised while
    parsing it (a :class:`_RecordError`).
    """
    examples: list[AnnotationSet] = []
    quarantined: list[QuarantinedRecord] = []
    warnings: list[str] = []
    for index, (line, rec) in enumerate(records):
        if isinstance(rec, _RecordError):
            quarantined.append(QuarantinedRecord(index, rec.reason, rec.detail, line))
            continue
        for problem in rec.issues():
            warnings.append(f"record {index}: {problem}")
        examples.append(rec)
    corpus = Corpus(name, tuple(examples), split, tuple(quarantined), ())
    warnings.extend(_sanity_warnings(corpus))
    for w in warnings:
        log.warning("%s: %s", name, w)
    return Corpus(name, corpus.examples, split, corpus.quarantined, tuple(warnings))


def _sanity_warnings(corpus: Corpus) -> list[str]:
    s = stats(corpus)
    if abs(s[TagType.CND] - s[TagType.CSQ]) > 1:
        return [f"CONDITIONAL ({s[TagType.CND]}) and CONSEQUENCE ({s[TagType.CSQ]}) counts differ by more than 1"]
    return []


@dataclass
class _RecordError:
    reason: str
    detail: str


def _from_labels(words: list[str], labels: list[str]) -> AnnotationSet | _RecordError:
    if len(words) != len(labels):
        return _RecordError(LENGTH_MISMATCH, f"{len(words)} tokens, {len(labels)} labels")
    try:
        for label in labels:
            parse_label(label)
    except AnnotationError as exc:
        return _RecordError(UNKNOWN_LABEL, str(exc))
    try:
        utt = Utterance.from_tokens(words)
    except ValueError as exc:
        return _RecordError(MALFORMED, str(exc))
    spans = bio_spans(labels) + _none_runs(labels)
    return AnnotationSet(utt, tuple(spans), Provenance.GOLD)


def _is_none_label(label: str) -> bool:
    name = label.strip().upper().split("-", 1)[-1]
    return name in ("NN", "NONE")


def _none_runs(labels: list[str]) -> list[SpanAnnotation]:
    """Explicit NN/NONE labels, which BIO decoding maps to ``O``, as NN spans."""
    runs = []
    start = None
    for i, label in enumerate(labels + ["O"]):
        is_nn = _is_none_label(label)
        begins = is_nn and label.strip().upper().startswith("B-")
        if start is not None and (not is_nn or begins):
            runs.append(SpanAnnotation(TagType.NN, start, i))
            start = None
        if is_nn and start is None:
            start = i
    return runs


def _bio_records(text: str) -> Iterator[tuple[int | None, AnnotationSet | _RecordError]]:
    words: list[str] = []
    labels: list[str] = []
    start_line: int | None = None
    short = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r\n")
        if line.startswith("-DOCSTART-"):
            continue
        if not line.strip():
            if words:
                rec = _from_labels(words, labels)
                if short and not isinstance(rec, _RecordError):
                    rec = _RecordError(LENGTH_MISMATCH, f"{len(words)} tokens, {len(labels)} labels")
                yield start_line, rec
            words, labels, start_line, short = [], [], None, False
            continue
        if start_line is None:
            start_line = lineno
        cols = line.split("\t") if "\t" in line else line.split()
        words.append(cols[0])
        if len(cols) >= 2:
            labels.append(cols[-1])
        else:
            short = True
    if words:
        rec = _from_labels(words, labels)
        if short and not isinstance(rec, _RecordError):
            rec = _RecordError(LENGTH_MISMATCH, f"{len(words)} tokens, {len(labels)} labels")
        yield start_line, rec


def _json_records(text: str) -> Iterator[tuple[int | None, AnnotationSet | _RecordError]]:
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid JSON array: {exc}") from exc
        for obj in items:
            yield None, record_from_json(obj)
        return
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, _RecordError(MALFORMED, f"invalid JSON: {exc.msg}")
            continue
        yield lineno, record_from_json(obj)


def record_from_json(obj: Any) -> AnnotationSet | _RecordError:
    """Parse one JSON record; problems are returned, not raised."""
    if not isinstance(obj, dict):
        return _RecordError(MALFORMED, "record is not an object")
    try:
        if "tokens" in obj:
            utt = Utterance.from_tokens(obj["tokens"])
            if "text" in obj and obj["text"] != utt.text:
                # keep the original spacing when it tokenizes to the same words
                alt = Utterance.from_text(obj["text"])
                if alt.words == utt.words:
                    utt = alt
        elif "text" in obj:
            utt = Utterance.from_text(obj["text"])
        else:
            return _RecordError(MALFORMED, "record has neither text nor tokens")
    except (TypeError, ValueError) as exc:
        return _RecordError(MALFORMED, str(exc))
    if "labels" in obj and "spans" not in obj:
        return _from_labels(utt.words, list(obj["labels"]))
    spans = []
    try:
        for raw in obj.get("spans", []):
            tag = parse_tag(str(raw["tag"]))
            spans.append(SpanAnnotation(tag, int(raw["start_token"]), int(raw["end_token"])))
    except AnnotationError as exc:
        if "unknown tag" in str(exc):
            return _RecordError(UNKNOWN_LABEL, str(exc))
        return _RecordError(MALFORMED, str(exc))
    except (KeyError, TypeError, ValueError) as exc:
        return _RecordError(MALFORMED, f"bad span: {exc}")
    try:
        prov = Provenance(obj.get("provenance", "GOLD"))
        return AnnotationSet(utt, tuple(spans), prov)
    except AnnotationError as exc:
        reason = OVERLAP if "overlapping" in str(exc) else LENGTH_MISMATCH
        return _RecordError(reason, str(exc))
    except ValueError as exc:
        return _RecordError(MALFORMED, str(exc))


def annotation_to_json(ann: AnnotationSet, with_text: bool = True) -> dict[str, Any]:
    spans = []
    for s in ann.spans:
        item: dict[str, Any] = {"tag": s.tag.value, "start_token": s.token_start, "end_token": s.token_end}
        if with_text:
            item["text"] = ann.span_text(s)
        spans.append(item)
    return {"text": ann.utterance.text, "tokens": ann.utterance.words, "spans": spans}


def stats(corpus: Corpus | Iterable[AnnotationSet]) -> SplitStats:
    """Span counts per tag; NN counts sentences that carry no action span."""
    counts = {tag: 0 for tag in TagType}
    n = 0
    for ann in corpus:
        n += 1
        tagged = False
        for s in ann.spans:
            if s.tag is not TagType.NN:
                counts[s.tag] += 1
                tagged = True
        if not tagged:
            counts[TagType.NN] += 1
    return SplitStats(counts, n)


def convert(corpus: Corpus | Iterable[AnnotationSet], format: CorpusFormat | str) -> bytes:
    fmt = CorpusFormat(format)
    buf = io.StringIO()
    if fmt is CorpusFormat.BIO:
        write_bio(corpus, buf)
    else:
        for ann in corpus:
            buf.write(json.dumps(annotation_to_json(ann, with_text=False), ensure_ascii=False, sort_keys=True))
            buf.write("\n")
    return buf.getvalue().encode("utf-8")


def write_bio(annotations: Iterable[AnnotationSet], out: TextIO) -> None:
    first = True
    for ann in annotations:
        if not first:
            out.write("\n")
        first = False
        labels = to_bio(ann)
        if not labels and ann.spans == ():
            # empty utterances have no lines; skip to keep the file loadable
            first = True
            continue
        for s in ann.spans:
            if s.tag is TagType.NN:
                labels[s.token_start] = "B-NN"
                for i in range(s.token_start + 1, s.token_end):
                    labels[i] = "I-NN"
        for word, label in zip(ann.utterance.words, labels):
            out.write(f"{word}\t{label}\n")


def write_quarantine(corpus: Corpus, out: TextIO) -> None:
    for rec in corpus.quarantined:
        out.write(rec.to_json(corpus.name) + "\n")
