"""Adapter for the public CANDLE release.

The release layout is not pinned down anywhere we can check offline, so this
module sniffs a few common sequence-labelling layouts and maps them onto
:mod:`clause_forge.corpus`. Everything layout-specific lives here.

Handled layouts:

* token-per-line text, whitespace or tab separated, label in the last column
  (or in the first column when only that one parses as labels);
* CSV/TSV with a header naming a sentence-id, word and tag column;
* JSON / JSON lines records with a word list and a label list under any of the
  usual key names.

Label spellings ``B-CONDITIONAL``, ``B-CND``, ``CONDITIONAL`` (IO style) and
``NONE``/``NN`` are all accepted.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import Any, Iterator

from .core import AnnotationError, parse_label, parse_tag
from .corpus import (
    LENGTH_MISMATCH,
    MALFORMED,
    UNKNOWN_LABEL,
    Corpus,
    CorpusError,
    Split,
    _from_labels,
    _RecordError,
    build_corpus,
    guess_split,
)

_WORD_KEYS = ("tokens", "words", "word", "token", "sentence", "text")
_LABEL_KEYS = ("labels", "tags", "ner_tags", "label", "tag", "bio")
_SID_KEYS = ("sentence #", "sentence_id", "sentence", "sent_id", "sid", "id")

SPLIT_NAMES = {
    Split.TRAIN: ("train",),
    Split.VALIDATION: ("validation", "valid", "val", "dev"),
    Split.TEST: ("test",),
}


def normalize_label(raw: str) -> str:
    """Canonical ``B-CND`` style label; IO-style bare tags become ``I-``."""
    label = raw.strip()
    if not label or label.upper() == "O":
        return "O"
    if label.upper() in ("NN", "NONE"):
        return "I-NN"
    prefix, sep, name = label.partition("-")
    if sep and prefix.upper() in ("B", "I"):
        return f"{prefix.upper()}-{parse_tag(name).value}"
    return f"I-{parse_tag(label).value}"


def _is_label(value: str) -> bool:
    try:
        parse_label(normalize_label(value))
    except AnnotationError:
        return False
    return True


def _normalized(words: list[str], labels: list[str]) -> Any:
    try:
        fixed = [normalize_label(l) for l in labels]
    except AnnotationError as exc:
        return _RecordError(UNKNOWN_LABEL, str(exc))
    return _from_labels(words, fixed)


def _column_records(text: str) -> Iterator[tuple[int | None, Any]]:
    blocks: list[tuple[int, list[list[str]]]] = []
    rows: list[list[str]] = []
    start = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("-DOCSTART-"):
            continue
        if not line.strip():
            if rows:
                blocks.append((start, rows))
            rows = []
            continue
        if not rows:
            start = lineno
        rows.append(line.split("\t") if "\t" in line else line.split())
    if rows:
        blocks.append((start, rows))

    sample = [r for _, b in blocks[:50] for r in b if len(r) >= 2]
    label_first = (
        bool(sample)
        and all(_is_label(r[0]) for r in sample)
        and not all(_is_label(r[-1]) for r in sample)
    )
    for start, block in blocks:
        if any(len(r) < 2 for r in block):
            yield start, _RecordError(LENGTH_MISMATCH, "line without label column")
            continue
        if label_first:
            yield start, _normalized([r[-1] for r in block], [r[0] for r in block])
        else:
            yield start, _normalized([r[0] for r in block], [r[-1] for r in block])


def _pick(keys: dict[str, str], candidates: tuple[str, ...]) -> str | None:
    for c in candidates:
        if c in keys:
            return keys[c]
    return None


def _csv_records(text: str, delimiter: str) -> Iterator[tuple[int | None, Any]]:
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    fields = {f.strip().lower(): f for f in reader.fieldnames or []}
    sid_col = _pick(fields, _SID_KEYS)
    word_col = _pick(fields, ("word", "token", "words", "tokens"))
    tag_col = _pick(fields, ("tag", "label", "labels", "tags", "bio"))
    if word_col is None or tag_col is None:
        raise CorpusError(f"unrecognised CSV header {reader.fieldnames}")
    words: list[str] = []
    labels: list[str] = []
    sid = None
    start = 2
    for lineno, row in enumerate(reader, 2):
        cur = (row.get(sid_col) or "").strip() if sid_col else ""
        if sid_col and cur and cur != sid and words:
            yield start, _normalized(words, labels)
            words, labels = [], []
        if not words:
            start = lineno
        if cur:
            sid = cur
        word = (row.get(word_col) or "").strip()
        if not word:
            if not sid_col and words:
                yield start, _normalized(words, labels)
                words, labels = [], []
            continue
        words.append(word)
        labels.append(row.get(tag_col) or "")
    if words:
        yield start, _normalized(words, labels)


def _json_record(obj: Any) -> Any:
    if not isinstance(obj, dict):
        return _RecordError(MALFORMED, "record is not an object")
    keys = {k.lower(): k for k in obj}
    wkey = _pick(keys, _WORD_KEYS)
    lkey = _pick(keys, _LABEL_KEYS)
    if wkey is None or lkey is None:
        return _RecordError(MALFORMED, f"no word/label keys in {sorted(obj)}")
    words, labels = obj[wkey], obj[lkey]
    if isinstance(words, str):
        words = words.split()
    if isinstance(labels, str):
        labels = labels.split()
    return _normalized([str(w) for w in words], [str(l) for l in labels])


def _json_records(text: str) -> Iterator[tuple[int | None, Any]]:
    stripped = text.lstrip()
    if stripped.startswith("["):
        for obj in json.loads(text):
            yield None, _json_record(obj)
        return
    if stripped.startswith("{") and "\n{" not in stripped:
        obj = json.loads(text)
        # {"data": [...]} style wrapper
        for value in obj.values():
            if isinstance(value, list):
                for item in value:
                    yield None, _json_record(item)
                return
        yield None, _json_record(obj)
        return
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip():
            yield lineno, _json_record(json.loads(line))


def read_release(path: str | os.PathLike, split: Split | None = None) -> Corpus:
    """Load one released CANDLE file in whatever layout it uses."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read {p}: {exc}") from exc
    head = text.lstrip()[:1]
    first = text.splitlines()[0].lower() if text.strip() else ""
    if head in ("{", "["):
        records = _json_records(text)
    elif p.suffix.lower() == ".csv" or ("word" in first and "," in first):
        records = _csv_records(text, ",")
    elif "\t" in first and any(k in first.split("\t") for k in ("word", "token", "tag", "label")):
        records = _csv_records(text, "\t")
    else:
        records = _column_records(text)
    try:
        return build_corpus(records, name=p.name, split=split or guess_split(p.name))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{p}: invalid JSON: {exc}") from exc


def find_splits(directory: str | os.PathLike) -> dict[Split, Path]:
    """Locate train/validation/test files under ``directory`` (searched recursively)."""
    root = Path(directory)
    found: dict[Split, Path] = {}
    files = sorted(f for f in root.rglob("*") if f.is_file() and not f.name.startswith("."))
    for split, names in SPLIT_NAMES.items():
        for f in files:
            stem = f.stem.lower()
            tokens = stem.replace("-", "_").replace(".", "_").split("_")
            if any(n in tokens for n in names):
                found[split] = f
                break
    return found


def load_release(directory: str | os.PathLike) -> dict[Split, Corpus]:
    splits = find_splits(directory)
    missing = [s.value for s in Split if s not in splits]
    if missing:
        raise CorpusError(f"{directory}: no file found for split(s) {', '.join(missing)}")
    return {split: read_release(path, split) for split, path in splits.items()}
