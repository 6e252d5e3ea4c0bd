"""Clause expansion: copy an elided predicate into a gapped conjunct.

``Transfer $400 to John and Sam.`` becomes
``Transfer $400 to John and Transfer $400 to Sam.`` so that every conjunct
reads as a stand-alone action.

Syntax information comes from a :class:`SyntaxProvider`. The bundled
:class:`HeuristicSyntaxProvider` uses word lists and suffix rules; a real
dependency parser can be adapted to the same interface.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol

from .core import AnnotationSet, SpanAnnotation, Token, Utterance
from .lexicon import (
    AUXILIARIES,
    BOUNDARY_PUNCT,
    CLAUSE_OPENERS,
    CONJUNCTIONS,
    DETERMINERS,
    FUNCTION_OTHER,
    NOUNS,
    PREPOSITIONS,
    PRONOUNS,
    is_number,
    verb_lemma_known,
)


class Category(str, enum.Enum):
    VERB = "VERB"
    NOUN = "NOUN"
    FUNCTION = "FUNCTION"
    NUMBER = "NUMBER"
    OTHER = "OTHER"


@dataclass(frozen=True)
class SyntaxHints:
    """Coarse per-token categories plus coordination sites.

    ``fine`` refines the category (DET, PREP, PRON, AUX, CONJ, PUNCT, ADJ, ...)
    and is what the predicate-boundary scan looks at.
    """

    categories: tuple[Category, ...]
    fine: tuple[str, ...]
    coordination_sites: tuple[int, ...]
    protected: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if len(self.categories) != len(self.fine):
            raise ValueError("categories and fine tags differ in length")


class SyntaxProvider(Protocol):
    name: str

    def analyze(self, utterance: Utterance) -> SyntaxHints: ...


_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism", "ist", "ure", "age", "ery", "er", "or")
_VERB_SUFFIXES = ("ize", "ise", "ify")
_ADJ_SUFFIXES = ("ful", "ous", "ive", "able", "ible", "less", "ical", "ic")


def _classify(word: str, position: int) -> tuple[Category, str]:
    w = word.lower()
    if all(not ch.isalnum() for ch in word):
        return Category.FUNCTION, "PUNCT"
    if is_number(word):
        return Category.NUMBER, "NUM"
    if w in CONJUNCTIONS:
        return Category.FUNCTION, "CONJ"
    if w in DETERMINERS:
        return Category.FUNCTION, "DET"
    if w in PRONOUNS:
        return Category.NOUN, "PRON"
    if w in AUXILIARIES:
        return Category.VERB, "AUX"
    if w in PREPOSITIONS:
        return Category.FUNCTION, "PREP"
    if w in FUNCTION_OTHER:
        return Category.FUNCTION, "MARK"
    if verb_lemma_known(w):
        return Category.VERB, "VERB"
    if w in NOUNS:
        return Category.NOUN, "NOUN"
    if w.endswith(("'s", "s'")):
        return Category.NOUN, "POSS"
    if position > 0 and word[:1].isupper():
        return Category.NOUN, "PROPN"
    if w.endswith(_VERB_SUFFIXES):
        return Category.VERB, "VERB"
    if w.endswith(_ADJ_SUFFIXES):
        return Category.OTHER, "ADJ"
    if w.endswith(_NOUN_SUFFIXES) and len(w) > 4:
        return Category.NOUN, "NOUN"
    return Category.OTHER, "X"


def _protected_regions(words: list[str]) -> frozenset[int]:
    """Indices inside double quotes or parentheses."""
    inside = set()
    depth = 0
    quoted = False
    for i, w in enumerate(words):
        if w == '"':
            quoted = not quoted
            continue
        if w == "(":
            depth += 1
            continue
        if w == ")":
            depth = max(0, depth - 1)
            continue
        if quoted or depth:
            inside.add(i)
    return frozenset(inside)


class HeuristicSyntaxProvider:
    """Deterministic lexicon + suffix tagger standing in for a dependency parse."""

    name = "heuristic"

    def analyze(self, utterance: Utterance) -> SyntaxHints:
        words = utterance.words
        cats: list[Category] = []
        fine: list[str] = []
        for i, w in enumerate(words):
            cat, f = _classify(w, i)
            # a verb right after a determiner is being used as a noun ("the check")
            if f == "VERB" and i and fine[i - 1] in ("DET", "POSS"):
                cat, f = Category.NOUN, "NOUN"
            cats.append(cat)
            fine.append(f)
        protected = _protected_regions(words)
        sites = [i for i, f in enumerate(fine) if f == "CONJ" and words[i].lower() in ("and", "or") and i not in protected]
        sites += [i for i in _list_commas(words, cats, fine, sites) if i not in protected]
        return SyntaxHints(tuple(cats), tuple(fine), tuple(sorted(sites)), protected)


def _list_commas(words, cats, fine, conj_sites) -> list[int]:
    """Commas separating verbless items of a list that ends in and/or."""
    def np_like(i: int) -> bool:
        return cats[i] is not Category.VERB and fine[i] not in ("PUNCT", "CONJ", "PREP", "MARK")

    out = []
    for j in conj_sites:
        tail = j + 1
        while tail < len(words) and words[tail] not in BOUNDARY_PUNCT and fine[tail] != "CONJ":
            tail += 1
        if tail == j + 1 or any(cats[i] is Category.VERB for i in range(j + 1, tail)):
            continue
        k = j - 1
        while k > 0:
            m = k
            while m >= 0 and np_like(m):
                m -= 1
            if m == k or m < 1 or words[m] != ",":
                break
            out.append(m)
            k = m - 1
    return sorted(set(out))


def analyze(utterance: Utterance, provider: SyntaxProvider | None = None) -> SyntaxHints:
    return (provider or HeuristicSyntaxProvider()).analyze(utterance)


SYNTAX_PROVIDERS: dict[str, type] = {"heuristic": HeuristicSyntaxProvider}


def get_provider(name: str = "heuristic") -> SyntaxProvider:
    try:
        return SYNTAX_PROVIDERS[name]()
    except KeyError:
        raise ValueError(f"unknown syntax provider {name!r}; known: {sorted(SYNTAX_PROVIDERS)}") from None


@dataclass(frozen=True)
class CopiedSegment:
    source_start: int  # token range in the original utterance
    source_end: int
    insert_at: int  # index of the first copied token in the expanded utterance


@dataclass(frozen=True)
class ExpansionTrace:
    original: Utterance
    expanded: Utterance
    copied_segments: tuple[CopiedSegment, ...]
    origin: tuple[int | None, ...]  # expanded token -> original token, None if copied
    inserted_chars: tuple[tuple[int, int], ...]  # char ranges of expanded.text added by copying

    @property
    def changed(self) -> bool:
        return bool(self.copied_segments)

    def reconstruct(self) -> Utterance:
        """Recover the original utterance from the expanded one."""
        text = self.expanded.text
        pieces = []
        prev = 0
        for a, b in self.inserted_chars:
            pieces.append(text[prev:a])
            prev = b
        pieces.append(text[prev:])
        rebuilt = "".join(pieces)
        tokens = []
        shift = 0
        ranges = list(self.inserted_chars)
        r = 0
        for tok, src in zip(self.expanded.tokens, self.origin):
            while r < len(ranges) and ranges[r][1] <= tok.start:
                shift += ranges[r][1] - ranges[r][0]
                r += 1
            if src is not None:
                tokens.append(Token(tok.surface, tok.start - shift, tok.end - shift))
        return Utterance(rebuilt, tuple(tokens))

    def to_json(self) -> dict:
        return {
            "original": self.original.text,
            "expanded": self.expanded.text,
            "copied_segments": [
                {"source_start": c.source_start, "source_end": c.source_end, "insert_at": c.insert_at}
                for c in self.copied_segments
            ],
            "origin": list(self.origin),
        }


def identity_trace(utterance: Utterance) -> ExpansionTrace:
    return ExpansionTrace(utterance, utterance, (), tuple(range(len(utterance))), ())


def _right_conjunct(words, hints: SyntaxHints, site: int) -> tuple[int, int]:
    end = site + 1
    while end < len(words):
        w = words[end].lower()
        if w in BOUNDARY_PUNCT or w in CLAUSE_OPENERS or end in hints.coordination_sites:
            break
        end += 1
    return site + 1, end


def _has_verb(hints: SyntaxHints, start: int, end: int) -> bool:
    return any(hints.categories[i] is Category.VERB for i in range(start, end))


def _left_conjunct_start(hints: SyntaxHints, site: int, floor: int) -> int:
    """First index of the noun group that ends right before ``site``."""
    i = site - 1
    while i >= floor:
        if hints.fine[i] in ("DET", "POSS", "NUM", "ADJ", "PRON", "PROPN", "NOUN", "X"):
            i -= 1
            continue
        break
    return i + 1


def _clause_start(words, hints: SyntaxHints, before: int) -> int:
    i = before - 1
    while i >= 0:
        w = words[i].lower()
        if w in BOUNDARY_PUNCT or w in CLAUSE_OPENERS or i in hints.coordination_sites:
            return i + 1
        i -= 1
    return 0


def expand_clauses(utterance: Utterance, hints: SyntaxHints | None = None) -> ExpansionTrace:
    """Copy the shared predicate prefix after each coordination whose right conjunct has no verb.

    Never raises; anything unexpected degrades to the identity expansion.
    """
    if hints is None:
        hints = analyze(utterance)
    try:
        plan = _plan(utterance, hints)
    except (IndexError, ValueError):
        plan = []
    if not plan:
        return identity_trace(utterance)
    return _apply(utterance, plan)


def _plan(utterance: Utterance, hints: SyntaxHints) -> list[tuple[int, int, int]]:
    """``(site, prefix_start, prefix_end)`` triples, left to right."""
    words = utterance.words
    if len(hints.categories) != len(words):
        raise ValueError("hints do not belong to this utterance")
    sites = list(hints.coordination_sites)
    plan = []
    # list groups: a run of sites where all items are verbless share the first item's prefix
    group_prefix: tuple[int, int] | None = None
    for n, site in enumerate(sites):
        if site in hints.protected:
            continue
        r_start, r_end = _right_conjunct(words, hints, site)
        if r_end == r_start or _has_verb(hints, r_start, r_end):
            group_prefix = None
            continue
        if any(i in hints.protected for i in range(r_start, r_end)):
            group_prefix = None
            continue
        prev_site = sites[n - 1] if n else -1
        chained = group_prefix is not None and prev_site >= 0 and _right_conjunct(words, hints, prev_site)[1] == site
        if chained:
            prefix = group_prefix
        else:
            start = _clause_start(words, hints, site)
            left = _left_conjunct_start(hints, site, start)
            if left >= site:
                group_prefix = None
                continue
            prefix = (start, left)
        p0, p1 = prefix
        if p1 <= p0 or not _has_verb(hints, p0, p1):
            group_prefix = None
            continue
        plan.append((site, p0, p1))
        group_prefix = prefix
    return plan


def _apply(utterance: Utterance, plan: list[tuple[int, int, int]]) -> ExpansionTrace:
    text = utterance.text
    toks = utterance.tokens
    by_site = {site: (p0, p1) for site, p0, p1 in plan}
    out_text: list[str] = []
    out_tokens: list[Token] = []
    origin: list[int | None] = []
    segments: list[CopiedSegment] = []
    inserted: list[tuple[int, int]] = []
    cursor = 0  # position in original text
    length = 0  # length of output text so far
    for i, tok in enumerate(toks):
        chunk = text[cursor:tok.end]
        out_text.append(chunk)
        out_tokens.append(Token(tok.surface, length + (tok.start - cursor), length + len(chunk)))
        origin.append(i)
        length += len(chunk)
        cursor = tok.end
        if i in by_site:
            p0, p1 = by_site[i]
            base = toks[p0].start
            copy = text[base:toks[p1 - 1].end]
            segments.append(CopiedSegment(p0, p1, len(out_tokens)))
            inserted.append((length, length + 1 + len(copy)))
            for j in range(p0, p1):
                s = length + 1 + (toks[j].start - base)
                out_tokens.append(Token(toks[j].surface, s, s + len(toks[j].surface)))
                origin.append(None)
            out_text.append(" " + copy)
            length += 1 + len(copy)
    out_text.append(text[cursor:])
    expanded = Utterance("".join(out_text), tuple(out_tokens))
    return ExpansionTrace(utterance, expanded, tuple(segments), tuple(origin), tuple(inserted))


def project_back(annotations: AnnotationSet, trace: ExpansionTrace) -> AnnotationSet:
    """Map spans over the expanded utterance onto the original tokens.

    Copied tokens have no original position and are dropped; a span made only
    of copied tokens disappears.
    """
    spans = []
    for s in annotations.spans:
        src = [trace.origin[i] for i in range(s.token_start, s.token_end) if trace.origin[i] is not None]
        if src:
            spans.append(SpanAnnotation(s.tag, min(src), max(src) + 1))
    return AnnotationSet(trace.original, tuple(spans), annotations.provenance)


def project_forward(annotations: AnnotationSet, trace: ExpansionTrace) -> AnnotationSet:
    """Map original spans into expanded coordinates.

    A copied run joins the span that starts immediately after it, so the
    restored predicate belongs to the conjunct it was copied into.
    """
    new_index = {src: i for i, src in enumerate(trace.origin) if src is not None}
    spans = []
    for s in annotations.spans:
        start = new_index[s.token_start]
        end = new_index[s.token_end - 1] + 1
        for seg in trace.copied_segments:
            run = seg.source_end - seg.source_start
            if seg.insert_at + run == start:
                start = seg.insert_at
        spans.append(SpanAnnotation(s.tag, start, end))
    return AnnotationSet(trace.expanded, tuple(spans), annotations.provenance)
