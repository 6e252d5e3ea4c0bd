"""Tags, tokens, spans and BIO label sequences shared by every stage."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence


class TagType(str, enum.Enum):
    CND = "CND"  # condition
    CSQ = "CSQ"  # consequence of a condition
    ALT = "ALT"  # alternative when the condition fails
    FA = "FA"  # first action
    SA = "SA"  # second action
    TA = "TA"  # third action
    NN = "NN"  # none of the above

    @property
    def long_name(self) -> str:
        return _LONG_NAMES[self]


_LONG_NAMES = {
    TagType.CND: "CONDITIONAL",
    TagType.CSQ: "CONSEQUENCE",
    TagType.ALT: "ALTERNATIVE",
    TagType.FA: "FIRST_ACTION",
    TagType.SA: "SECOND_ACTION",
    TagType.TA: "THIRD_ACTION",
    TagType.NN: "NONE",
}

#: Tags that can be realised in BIO space (NN is always ``O``).
SPAN_TAGS: tuple[TagType, ...] = (
    TagType.CND,
    TagType.CSQ,
    TagType.ALT,
    TagType.FA,
    TagType.SA,
    TagType.TA,
)

#: Fixed label alphabet. Index order is the Viterbi tie-break order.
BIO_LABELS: tuple[str, ...] = ("O",) + tuple(
    f"{prefix}-{tag.value}" for tag in SPAN_TAGS for prefix in ("B", "I")
)


class Provenance(str, enum.Enum):
    GOLD = "GOLD"
    GRAMMAR = "GRAMMAR"
    MODEL = "MODEL"


class AnnotationError(ValueError):
    """Raised when spans or labels cannot form a valid annotation."""


def parse_tag(name: str) -> TagType:
    """Accept both the short (``CND``) and long (``CONDITIONAL``) spellings."""
    key = name.strip().upper()
    try:
        return TagType(key)
    except ValueError:
        pass
    for tag, long_name in _LONG_NAMES.items():
        if key == long_name:
            return tag
    raise AnnotationError(f"unknown tag {name!r}")


@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad token offsets [{self.start}, {self.end})")
        if len(self.surface) != self.end - self.start:
            raise ValueError(f"surface {self.surface!r} does not fit [{self.start}, {self.end})")


_EDGE_PUNCT = ",.;:?!()\""
_WORD_RE = re.compile(r"\S+")


def _split_word(word: str, offset: int) -> list[Token]:
    lead = 0
    while lead < len(word) and word[lead] in _EDGE_PUNCT:
        lead += 1
    trail = len(word)
    while trail > lead and word[trail - 1] in _EDGE_PUNCT:
        trail -= 1
    out = [Token(ch, offset + i, offset + i + 1) for i, ch in enumerate(word[:lead])]
    if trail > lead:
        out.append(Token(word[lead:trail], offset + lead, offset + trail))
    out.extend(Token(word[i], offset + i, offset + i + 1) for i in range(trail, len(word)))
    return out


def tokenize(text: str) -> list[Token]:
    """Whitespace split, then detach leading/trailing punctuation one char at a time.

    Internal characters are kept, so ``$400``, ``1,000`` and ``wife's`` stay whole.
    """
    tokens: list[Token] = []
    for m in _WORD_RE.finditer(text):
        tokens.extend(_split_word(m.group(), m.start()))
    return tokens


@dataclass(frozen=True, slots=True)
class Utterance:
    text: str
    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        prev_end = 0
        for tok in self.tokens:
            if tok.start < prev_end:
                raise ValueError("tokens overlap or are out of order")
            if self.text[tok.start:tok.end] != tok.surface:
                raise ValueError(f"token {tok.surface!r} does not match text")
            if self.text[prev_end:tok.start].strip():
                raise ValueError("non-whitespace text between tokens")
            prev_end = tok.end
        if self.text[prev_end:].strip():
            raise ValueError("non-whitespace text after last token")

    @classmethod
    def from_text(cls, text: str) -> Utterance:
        return cls(text, tuple(tokenize(text)))

    @classmethod
    def from_tokens(cls, words: Iterable[str]) -> Utterance:
        """Build an utterance whose text is the words joined by single spaces."""
        tokens = []
        pos = 0
        for w in words:
            if not w or any(ch.isspace() for ch in w):
                raise ValueError(f"invalid token {w!r}")
            tokens.append(Token(w, pos, pos + len(w)))
            pos += len(w) + 1
        return cls(" ".join(t.surface for t in tokens), tuple(tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def span_text(self, start: int, end: int) -> str:
        """Original text covered by tokens ``[start, end)``."""
        if start >= end:
            return ""
        return self.text[self.tokens[start].start:self.tokens[end - 1].end]

    def slice(self, start: int, end: int) -> Utterance:
        """Sub-utterance for tokens ``[start, end)`` with offsets rebased."""
        if start >= end:
            return Utterance("", ())
        base = self.tokens[start].start
        text = self.text[base:self.tokens[end - 1].end]
        toks = tuple(Token(t.surface, t.start - base, t.end - base) for t in self.tokens[start:end])
        return Utterance(text, toks)


@dataclass(frozen=True, slots=True)
class SpanAnnotation:
    tag: TagType
    token_start: int
    token_end: int

    def __post_init__(self) -> None:
        if not isinstance(self.tag, TagType):
            object.__setattr__(self, "tag", parse_tag(str(self.tag)))
        if not 0 <= self.token_start < self.token_end:
            raise AnnotationError(f"empty or negative span [{self.token_start}, {self.token_end})")

    @property
    def sort_key(self) -> tuple[int, int, str]:
        return (self.token_start, self.token_end, self.tag.value)

    def overlaps(self, other: SpanAnnotation) -> bool:
        return self.token_start < other.token_end and other.token_start < self.token_end


@dataclass(frozen=True)
class AnnotationSet:
    """Spans over one utterance.

    Overlapping spans are rejected at construction. Cardinality and ordering
    rules (one span per tag, SA needs FA, TA needs SA) are reported by
    :meth:`issues` rather than raised, because gold data may break them.
    """

    utterance: Utterance
    spans: tuple[SpanAnnotation, ...] = ()
    provenance: Provenance = Provenance.GOLD

    def __post_init__(self) -> None:
        spans = tuple(sorted(self.spans, key=lambda s: s.sort_key))
        object.__setattr__(self, "spans", spans)
        n = len(self.utterance)
        for s in spans:
            if s.token_end > n:
                raise AnnotationError(f"span {s} exceeds {n} tokens")
        for a, b in zip(spans, spans[1:]):
            if a.overlaps(b):
                raise AnnotationError(f"overlapping spans {a} and {b}")

    @property
    def tags(self) -> frozenset[TagType]:
        return frozenset(s.tag for s in self.spans)

    def span_text(self, span: SpanAnnotation) -> str:
        return self.utterance.span_text(span.token_start, span.token_end)

    def by_tag(self) -> dict[TagType, list[str]]:
        out: dict[TagType, list[str]] = {}
        for s in self.spans:
            out.setdefault(s.tag, []).append(self.span_text(s))
        return out

    def issues(self) -> list[str]:
        problems = []
        counts: dict[TagType, int] = {}
        for s in self.spans:
            counts[s.tag] = counts.get(s.tag, 0) + 1
        for tag, c in counts.items():
            if c > 1 and tag is not TagType.NN:
                problems.append(f"{c} {tag.value} spans")
        if TagType.SA in counts and TagType.FA not in counts:
            problems.append("SA without FA")
        if TagType.TA in counts and TagType.SA not in counts:
            problems.append("TA without SA")
        return problems

    @property
    def is_valid(self) -> bool:
        return not self.issues()

    def with_provenance(self, provenance: Provenance) -> AnnotationSet:
        return AnnotationSet(self.utterance, self.spans, provenance)


def to_bio(annotations: AnnotationSet) -> list[str]:
    """One BIO label per token; NN spans are written as ``O``."""
    labels = ["O"] * len(annotations.utterance)
    owner: list[SpanAnnotation | None] = [None] * len(labels)
    for span in annotations.spans:
        for i in range(span.token_start, span.token_end):
            if owner[i] is not None:
                raise AnnotationError(f"overlapping spans {owner[i]} and {span}")
            owner[i] = span
        if span.tag is TagType.NN:
            continue
        labels[span.token_start] = f"B-{span.tag.value}"
        for i in range(span.token_start + 1, span.token_end):
            labels[i] = f"I-{span.tag.value}"
    return labels


def parse_label(label: str) -> tuple[str, TagType | None]:
    """Split a BIO label into ``(prefix, tag)``; ``("O", None)`` for outside.

    Long tag spellings are accepted; ``NN``/``NONE`` labels map to outside.
    """
    label = label.strip()
    if label.upper() == "O":
        return "O", None
    prefix, sep, name = label.partition("-")
    if not sep or prefix.upper() not in ("B", "I"):
        tag = parse_tag(label)
        if tag is TagType.NN:
            return "O", None
        raise AnnotationError(f"malformed BIO label {label!r}")
    tag = parse_tag(name)
    if tag is TagType.NN:
        return "O", None
    return prefix.upper(), tag


def bio_spans(labels: Sequence[str]) -> list[SpanAnnotation]:
    """Maximal B/I runs as spans. An orphan ``I-X`` opens a new span."""
    spans = []
    cur_tag: TagType | None = None
    cur_start = 0
    for i, label in enumerate(labels):
        prefix, tag = parse_label(label)
        continues = prefix == "I" and tag is cur_tag
        if cur_tag is not None and not continues:
            spans.append(SpanAnnotation(cur_tag, cur_start, i))
            cur_tag = None
        if tag is not None and not continues:
            cur_tag, cur_start = tag, i
    if cur_tag is not None:
        spans.append(SpanAnnotation(cur_tag, cur_start, len(labels)))
    return spans


def from_bio(
    labels: Sequence[str],
    utterance: Utterance,
    provenance: Provenance = Provenance.GOLD,
) -> AnnotationSet:
    if len(labels) != len(utterance):
        raise AnnotationError(f"{len(labels)} labels for {len(utterance)} tokens")
    return AnnotationSet(utterance, tuple(bio_spans(labels)), provenance)


def is_well_formed_bio(labels: Sequence[str]) -> bool:
    """True when no ``I-X`` follows anything other than ``B-X``/``I-X``."""
    prev: TagType | None = None
    for label in labels:
        prefix, tag = parse_label(label)
        if prefix == "I" and tag is not prev:
            return False
        prev = tag
    return True
