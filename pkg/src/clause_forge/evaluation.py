"""Per-tag precision, recall and F1 over predicted vs. gold annotations.

Two matching levels are offered:

``span``
    A predicted span is correct when its tag and both token boundaries equal
    a gold span's. This is the primary metric.
``token``
    Every token carrying tag X in both prediction and gold is a hit.

NN is never scored. A precision or recall with an empty denominator is
reported as ``undefined`` in text output and counts as 0 everywhere else.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import AnnotationSet, TagType

SCORED_TAGS: tuple[TagType, ...] = (
    TagType.CND,
    TagType.CSQ,
    TagType.ALT,
    TagType.FA,
    TagType.SA,
    TagType.TA,
)
LEVELS = ("span", "token")


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class TagScore:
    tag: TagType
    correct: int
    predicted: int
    support: int  # gold count

    @property
    def precision_defined(self) -> bool:
        return self.predicted > 0

    @property
    def recall_defined(self) -> bool:
        return self.support > 0

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.support if self.support else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def to_json(self) -> dict:
        return {
            "tag": self.tag.value,
            "precision": self.precision if self.precision_defined else None,
            "recall": self.recall if self.recall_defined else None,
            "f1": self.f1,
            "correct": self.correct,
            "predicted": self.predicted,
            "support": self.support,
        }


@dataclass(frozen=True)
class EvalReport:
    scores: Mapping[TagType, TagScore]
    level: str = "span"
    sentences: int = 0

    def __getitem__(self, tag: TagType | str) -> TagScore:
        return self.scores[TagType(tag) if not isinstance(tag, TagType) else tag]

    @property
    def average(self) -> float:
        """Unweighted mean of the six per-tag F1 values."""
        return sum(self.scores[t].f1 for t in SCORED_TAGS) / len(SCORED_TAGS)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "sentences": self.sentences,
            "tags": {t.value: self.scores[t].to_json() for t in SCORED_TAGS},
            "average": self.average,
        }


def _units(ann: AnnotationSet, level: str) -> Counter:
    """Scorable items of one sentence as a multiset of (tag, key)."""
    out: Counter = Counter()
    for s in ann.spans:
        if s.tag is TagType.NN:
            continue
        if level == "span":
            out[(s.tag, s.token_start, s.token_end)] += 1
        else:
            for i in range(s.token_start, s.token_end):
                out[(s.tag, i)] += 1
    return out


def evaluate(
    predictions: Sequence[AnnotationSet],
    gold: Iterable[AnnotationSet],
    level: str = "span",
) -> EvalReport:
    """Score predictions against gold, aligned by index."""
    if level not in LEVELS:
        raise EvalError(f"unknown level {level!r}; expected one of {LEVELS}")
    gold = list(gold)
    predictions = list(predictions)
    if len(predictions) != len(gold):
        raise EvalError(f"{len(predictions)} predictions for {len(gold)} gold sentences")
    correct: Counter = Counter()
    predicted: Counter = Counter()
    support: Counter = Counter()
    for k, (p, g) in enumerate(zip(predictions, gold)):
        if level == "token" and len(p.utterance) != len(g.utterance):
            raise EvalError(
                f"sentence {k}: prediction has {len(p.utterance)} tokens, gold has {len(g.utterance)}"
            )
        pu, gu = _units(p, level), _units(g, level)
        for key, c in pu.items():
            predicted[key[0]] += c
        for key, c in gu.items():
            support[key[0]] += c
        for key in pu.keys() & gu.keys():
            correct[key[0]] += min(pu[key], gu[key])
    scores = {t: TagScore(t, correct[t], predicted[t], support[t]) for t in SCORED_TAGS}
    return EvalReport(scores, level, len(gold))


def score_external(
    predictions: str | os.PathLike,
    gold: Iterable[AnnotationSet],
    level: str = "span",
    format: str | None = None,
) -> EvalReport:
    """Score a prediction file (BIO or JSON spans) against gold, aligned by index.

    Alignment is positional: a reordered prediction file is scored as-is and
    its scores collapse rather than being silently re-matched.
    """
    from . import corpus as corpus_mod

    gold = list(gold)
    try:
        pred = corpus_mod.load(predictions, format=format)
    except corpus_mod.CorpusError as exc:
        raise EvalError(str(exc)) from exc
    if pred.quarantined:
        q = pred.quarantined[0]
        raise EvalError(
            f"{predictions}: {len(pred.quarantined)} unreadable prediction record(s); first at #{q.index}: {q.reason} {q.detail}"
        )
    if len(pred) != len(gold):
        raise EvalError(f"{predictions}: {len(pred)} predictions for {len(gold)} gold sentences")
    for k, (p, g) in enumerate(zip(pred.examples, gold)):
        if len(p.utterance) != len(g.utterance):
            raise EvalError(
                f"{predictions}: sentence {k} has {len(p.utterance)} tokens, gold has {len(g.utterance)}"
            )
    return evaluate(pred.examples, gold, level)


# -- report rendering ---------------------------------------------------------


def _pct(value: float, defined: bool = True) -> str:
    return f"{100 * value:.2f}" if defined else "undefined"


def render(reports: Mapping[str, EvalReport] | EvalReport, format: str = "text") -> str:
    """One row per system: P/R/F1 for each of the six tags, then the average.

    Values are percentages with two decimals in text and CSV output and
    fractions in JSON output.
    """
    if isinstance(reports, EvalReport):
        reports = {"system": reports}
    if format == "json":
        return json.dumps({name: r.to_json() for name, r in reports.items()}, indent=2, sort_keys=True) + "\n"
    header = ["Model"]
    for t in SCORED_TAGS:
        header += [f"{t.long_name} P", f"{t.long_name} R", f"{t.long_name} F1"]
    header.append("Average")
    rows = []
    for name, r in reports.items():
        row = [name]
        for t in SCORED_TAGS:
            s = r.scores[t]
            row += [_pct(s.precision, s.precision_defined), _pct(s.recall, s.recall_defined), _pct(s.f1)]
        row.append(_pct(r.average))
        rows.append(row)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    if format != "text":
        raise EvalError(f"unknown report format {format!r}")
    return _text_table(rows)


def _text_table(rows: list[list[str]]) -> str:
    # two header lines: tag group names, then P/R/F1 under each
    top = [""]
    sub = ["Model"]
    for t in SCORED_TAGS:
        top += [t.long_name, "", ""]
        sub += ["P", "R", "F1"]
    top.append("")
    sub.append("Average")
    table = [top, sub] + rows
    widths = [max(len(r[i]) for r in table) for i in range(len(sub))]
    # a group label may be wider than its three columns; widen the F1 column
    for g, t in enumerate(SCORED_TAGS):
        a = 1 + 3 * g
        span = widths[a] + widths[a + 1] + widths[a + 2] + 4
        if len(t.long_name) > span:
            widths[a + 2] += len(t.long_name) - span
    lines = []
    for k, r in enumerate(table):
        cells = []
        i = 0
        while i < len(r):
            if k == 0 and 1 <= i < 1 + 3 * len(SCORED_TAGS):
                w = widths[i] + widths[i + 1] + widths[i + 2] + 4
                cells.append(r[i].center(w))
                i += 3
                continue
            cells.append(r[i].ljust(widths[i]) if i == 0 else r[i].rjust(widths[i]))
            i += 1
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"

