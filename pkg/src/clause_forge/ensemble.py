"""Rules first, tagger second.

Each sentence of the input is expanded, offered to the grammar, and only
handed to the tagger when no rule produces spans. Spans come back in the
coordinates of the expanded utterance; :meth:`EnsembleResult.projected`
maps them onto the original tokens.
"""

from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import grammar
from .core import AnnotationSet, Provenance, SpanAnnotation, TagType, Utterance
from .lexicon import SENTENCE_END
from .restructure import ExpansionTrace, analyze, expand_clauses, get_provider, identity_trace, project_back
from .tagger import TaggerModel
from .tagger import load as load_model

log = logging.getLogger(__name__)


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleConfig:
    """``rules`` / ``model`` may be loaded objects or paths; ``"default"`` picks the shipped rules."""

    rules: grammar.RuleSet | str | os.PathLike | None = "default"
    model: TaggerModel | str | os.PathLike | None = None
    syntax_provider: str = "heuristic"
    expand: bool = True

    def __post_init__(self) -> None:
        if self.rules is None and self.model is None:
            raise EnsembleError("the ensemble needs a rule set, a tagger model, or both")


@dataclass(frozen=True)
class SentenceResult:
    token_start: int  # range in the expanded utterance
    token_end: int
    provenance: Provenance | None  # None: nothing ran (no rules matched, no model)
    rule: str | None = None
    dropped: bool = False  # spans discarded because they clashed with earlier sentences

    def to_json(self) -> dict:
        return {
            "start_token": self.token_start,
            "end_token": self.token_end,
            "provenance": self.provenance.value if self.provenance else None,
            "rule": self.rule,
            "dropped": self.dropped,
        }


@dataclass(frozen=True)
class EnsembleResult:
    annotations: AnnotationSet  # over trace.expanded
    trace: ExpansionTrace
    sentences: tuple[SentenceResult, ...] = ()

    @property
    def provenance(self) -> Provenance:
        return self.annotations.provenance

    def projected(self) -> AnnotationSet:
        """The same spans over the original tokens."""
        return project_back(self.annotations, self.trace)

    def to_json(self) -> dict:
        from .corpus import annotation_to_json

        doc = annotation_to_json(self.annotations)
        doc["provenance"] = self.provenance.value
        doc["trace"] = self.trace.to_json()
        doc["sentences"] = [s.to_json() for s in self.sentences]
        doc["original_spans"] = annotation_to_json(self.projected())["spans"]
        return doc


def split_sentences(utterance: Utterance) -> list[tuple[int, int]]:
    """Token ranges ending at (and including) runs of ``.``, ``?`` or ``!``."""
    words = utterance.words
    out = []
    start = 0
    i = 0
    while i < len(words):
        if words[i] in SENTENCE_END:
            while i + 1 < len(words) and words[i + 1] in SENTENCE_END:
                i += 1
            out.append((start, i + 1))
            start = i + 1
        i += 1
    if start < len(words):
        out.append((start, len(words)))
    return out


class Ensemble:
    """A loaded rule set, tagger and syntax provider. Safe to share across threads."""

    def __init__(self, config: EnsembleConfig) -> None:
        self.config = config
        self.rules = _resolve_rules(config.rules)
        self.model = _resolve_model(config.model)
        self.provider = get_provider(config.syntax_provider)
        self._lock = threading.Lock()
        self._model_calls = 0

    @property
    def model_calls(self) -> int:
        """How many sentences have been handed to the tagger so far."""
        return self._model_calls

    def _decode(self, sentence: Utterance) -> AnnotationSet:
        with self._lock:
            self._model_calls += 1
        assert self.model is not None
        return self.model.annotate(sentence)

    def run(self, utterance: Utterance | str) -> EnsembleResult:
        if isinstance(utterance, str):
            utterance = Utterance.from_text(utterance)
        if self.config.expand:
            trace = expand_clauses(utterance, analyze(utterance, self.provider))
        else:
            trace = identity_trace(utterance)
        expanded = trace.expanded
        spans: list[SpanAnnotation] = []
        results = []
        used_model = used_grammar = False
        for a, b in split_sentences(expanded):
            sentence = expanded.slice(a, b)
            got, provenance, rule = self._run_sentence(sentence)
            if provenance is Provenance.GRAMMAR:
                used_grammar = True
            shifted = [SpanAnnotation(s.tag, s.token_start + a, s.token_end + a) for s in got.spans] if got else []
            dropped = False
            if shifted:
                trial = AnnotationSet(expanded, tuple(spans + shifted))
                if trial.is_valid:
                    spans.extend(shifted)
                    if provenance is Provenance.MODEL:
                        used_model = True
                else:
                    dropped = True
                    log.info("dropping sentence %d-%d spans: %s", a, b, "; ".join(trial.issues()))
            results.append(SentenceResult(a, b, provenance, rule, dropped))
        # MODEL when the tagger contributed spans or nothing else fired
        if used_model:
            overall = Provenance.MODEL
        elif used_grammar:
            overall = Provenance.GRAMMAR
        else:
            overall = Provenance.MODEL if self.model is not None else Provenance.GRAMMAR
        return EnsembleResult(AnnotationSet(expanded, tuple(spans), overall), trace, tuple(results))

    def _run_sentence(self, sentence: Utterance) -> tuple[AnnotationSet | None, Provenance | None, str | None]:
        if self.rules is not None:
            hit = grammar.match_rule(sentence, self.rules)
            if hit is not None:
                rule, ann = hit
                if ann.spans and ann.is_valid:
                    return ann, Provenance.GRAMMAR, rule.id
                if ann.spans:
                    log.info("rule %s produced invalid spans (%s); falling back", rule.id, "; ".join(ann.issues()))
        if self.model is None:
            return None, None, None
        ann = self._decode(sentence)
        if not ann.is_valid:
            ann = _repair(ann)
        return ann, Provenance.MODEL, None

    def run_many(self, utterances: Iterable[Utterance | str]) -> list[EnsembleResult]:
        return [self.run(u) for u in utterances]


def _repair(ann: AnnotationSet) -> AnnotationSet:
    """Keep the first span of each tag, then drop SA without FA and TA without SA."""
    seen = set()
    keep = []
    for s in ann.spans:
        if s.tag not in seen:
            seen.add(s.tag)
            keep.append(s)
    if TagType.FA not in seen:
        keep = [s for s in keep if s.tag is not TagType.SA]
        seen.discard(TagType.SA)
    if TagType.SA not in seen:
        keep = [s for s in keep if s.tag is not TagType.TA]
    log.info("repaired tagger output: kept %d of %d spans", len(keep), len(ann.spans))
    return AnnotationSet(ann.utterance, tuple(keep), ann.provenance)


def _resolve_rules(rules) -> grammar.RuleSet | None:
    if rules is None or isinstance(rules, grammar.RuleSet):
        return rules
    if str(rules) == "default":
        return grammar.load_rules()
    return grammar.load_rules(Path(rules))


def _resolve_model(model) -> TaggerModel | None:
    if model is None or isinstance(model, TaggerModel):
        return model
    return load_model(model)


def run_ensemble(utterance: Utterance | str, config: EnsembleConfig) -> EnsembleResult:
    """One-shot convenience wrapper; build an :class:`Ensemble` to reuse loaded resources."""
    return Ensemble(config).run(utterance)
