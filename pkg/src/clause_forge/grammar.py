"""Priority-ordered surface patterns that map marker templates to tagged spans.

Rule files are plain UTF-8 text::

    # comment
    marker provided that
    capture cond -> CND
    capture rest -> _            # matched but not emitted
    rule provided_else priority 20: provided that {capture:cond} , {capture:csq}
        [,] (otherwise|else) {capture:alt}

A rule may continue on indented lines. Pattern elements:

``word``            literal token, case-insensitive (punctuation tokens too)
``(a b|c)``         alternation of token sequences
``[a|b c]``         optional group
``{capture:name}``  lazy wildcard of one or more tokens

Patterns must cover the whole utterance; trailing ``.``/``?``/``!`` tokens are
always allowed. The first rule, by priority, that matches wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .core import AnnotationSet, Provenance, SpanAnnotation, TagType, Utterance, parse_tag
from .lexicon import PUNCT

IGNORE = "_"


class RuleCompileError(ValueError):
    def __init__(self, message: str, rule_id: str | None = None, line: int | None = None, column: int | None = None):
        where = []
        if rule_id:
            where.append(f"rule {rule_id!r}")
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"col {column}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.rule_id = rule_id
        self.line = line
        self.column = column


@dataclass(frozen=True)
class RuleTemplate:
    id: str
    priority: int
    pattern: str
    captures: dict[str, TagType | None]  # None = matched but not emitted
    regex: re.Pattern = field(repr=False, compare=False)

    @property
    def emitted_tags(self) -> frozenset[TagType]:
        return frozenset(t for t in self.captures.values() if t is not None)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[RuleTemplate, ...] = ()
    markers: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def emitted_tags(self) -> frozenset[TagType]:
        out: frozenset[TagType] = frozenset()
        for r in self.rules:
            out |= r.emitted_tags
        return out


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(r"\{capture:(?P<cap>[A-Za-z_][A-Za-z0-9_]*)\}|(?P<sym>[()\[\]|])|(?P<lit>[^\s()\[\]|{}]+)|(?P<bad>\S)")


class _PatternParser:
    def __init__(self, pattern: str, rule_id: str, line: int):
        self.items = [(m.start(), m) for m in _TOKEN_RE.finditer(pattern)]
        self.pos = 0
        self.rule_id = rule_id
        self.line = line
        self.captures: list[str] = []

    def error(self, msg: str, col: int | None = None) -> RuleCompileError:
        return RuleCompileError(msg, self.rule_id, self.line, col)

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else None

    def parse(self) -> str:
        regex = self.alternation(top=True)
        if self.peek() is not None:
            col, m = self.peek()
            raise self.error(f"unexpected {m.group()!r}", col)
        if not regex:
            raise self.error("empty pattern")
        return regex

    def alternation(self, top: bool = False) -> str:
        options = [self.sequence()]
        while (p := self.peek()) is not None and p[1].group("sym") == "|":
            if top:
                raise self.error("'|' outside a group", p[0])
            self.pos += 1
            options.append(self.sequence())
        if any(not o for o in options):
            col = self.peek()[0] if self.peek() else None
            raise self.error("empty alternative", col)
        return options[0] if len(options) == 1 else "(?:" + "|".join(options) + ")"

    def sequence(self) -> str:
        parts = []
        while (p := self.peek()) is not None:
            col, m = p
            sym = m.group("sym")
            if sym in ("|", ")", "]"):
                break
            self.pos += 1
            if m.group("bad"):
                raise self.error(f"unexpected character {m.group()!r}", col)
            if m.group("cap"):
                name = m.group("cap")
                if name in self.captures:
                    raise self.error(f"capture {name!r} used twice", col)
                self.captures.append(name)
                parts.append(f"(?P<{name}>(?:\\S+ )+?)")
            elif m.group("lit"):
                parts.append(re.escape(m.group("lit").lower()) + " ")
            elif sym in ("(", "["):
                close = ")" if sym == "(" else "]"
                inner = self.alternation()
                end = self.peek()
                if end is None or end[1].group("sym") != close:
                    raise self.error(f"unclosed {sym!r}", col)
                self.pos += 1
                parts.append(f"(?:{inner})" + ("?" if sym == "[" else ""))
        return "".join(parts)


_DECL_RE = re.compile(r"^rule\s+(?P<id>[A-Za-z0-9_.-]+)\s+priority\s+(?P<prio>-?\d+)\s*:\s*(?P<pattern>.*)$")
_CAPTURE_RE = re.compile(r"^capture\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*->\s*(?P<tag>\S+)\s*$")
_MARKER_RE = re.compile(r"^marker\s+(?P<phrase>.+?)\s*$")


def compile_rules(source: bytes | str) -> RuleSet:
    """Parse and validate a rule file."""
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    bindings: dict[str, TagType | None] = {}
    markers: list[str] = []
    raw_rules: list[tuple[str, int, str, int]] = []  # id, priority, pattern, line

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip() if not raw.lstrip().startswith("#") else ""
        if not line.strip():
            continue
        if raw[:1].isspace():
            if not raw_rules:
                raise RuleCompileError("continuation line before any rule", line=lineno)
            rid, prio, pat, start = raw_rules[-1]
            raw_rules[-1] = (rid, prio, pat + " " + line.strip(), start)
            continue
        line = line.strip()
        if m := _DECL_RE.match(line):
            raw_rules.append((m["id"], int(m["prio"]), m["pattern"], lineno))
        elif m := _CAPTURE_RE.match(line):
            tag = m["tag"]
            if tag == IGNORE:
                bindings[m["name"]] = None
            else:
                try:
                    bindings[m["name"]] = parse_tag(tag)
                except ValueError:
                    raise RuleCompileError(f"capture {m['name']!r} mapped to unknown tag {tag!r}", line=lineno) from None
                if bindings[m["name"]] is TagType.NN:
                    raise RuleCompileError("captures cannot emit NN", line=lineno)
        elif m := _MARKER_RE.match(line):
            markers.append(" ".join(m["phrase"].lower().split()))
        else:
            raise RuleCompileError(f"cannot parse {line!r}", line=lineno)

    seen_ids: set[str] = set()
    seen_prio: dict[int, str] = {}
    rules = []
    for rid, prio, pattern, lineno in raw_rules:
        if rid in seen_ids:
            raise RuleCompileError("duplicate rule id", rid, lineno)
        if prio in seen_prio:
            raise RuleCompileError(f"priority {prio} already used by {seen_prio[prio]!r}", rid, lineno)
        seen_ids.add(rid)
        seen_prio[prio] = rid
        parser = _PatternParser(pattern, rid, lineno)
        body = parser.parse()
        captures = {}
        for name in parser.captures:
            if name not in bindings:
                raise RuleCompileError(f"capture {name!r} is not mapped to a tag", rid, lineno)
            captures[name] = bindings[name]
        _check_tags(rid, lineno, list(captures.values()))
        try:
            regex = re.compile("^" + body + r"(?:[.?!] )*$")
        except re.error as exc:
            raise RuleCompileError(f"malformed pattern: {exc}", rid, lineno) from None
        rules.append(RuleTemplate(rid, prio, pattern, captures, regex))

    rules.sort(key=lambda r: r.priority)
    return RuleSet(tuple(rules), tuple(markers))


def _check_tags(rid: str, line: int, tags: list[TagType | None]) -> None:
    emitted = [t for t in tags if t is not None]
    if len(set(emitted)) != len(emitted):
        raise RuleCompileError("a tag is emitted by two captures", rid, line)
    present = set(emitted)
    needs = {TagType.CSQ: TagType.CND, TagType.ALT: TagType.CND, TagType.SA: TagType.FA, TagType.TA: TagType.SA}
    for tag, req in needs.items():
        if tag in present and req not in present:
            raise RuleCompileError(f"{tag.value} capture without {req.value}", rid, line)


def load_rules(path: str | Path | None = None) -> RuleSet:
    """Compile a rule file; ``None`` or ``"default"`` gives the shipped rules."""
    if path is None or str(path) == "default":
        data = resources.files("clause_forge").joinpath("data/default.rules").read_bytes()
    else:
        data = Path(path).read_bytes()
    return compile_rules(data)


# ---------------------------------------------------------------- matching


def _normalized(utterance: Utterance) -> tuple[str, dict[int, int]]:
    """Lowercased tokens joined by single spaces, plus char offset -> token index."""
    pieces = []
    starts = {}
    pos = 0
    for i, tok in enumerate(utterance.tokens):
        starts[pos] = i
        pieces.append(tok.surface.lower() + " ")
        pos += len(tok.surface) + 1
    starts[pos] = len(utterance.tokens)
    return "".join(pieces), starts


def _trim(words: list[str], start: int, end: int, markers: list[tuple[str, ...]]) -> tuple[int, int]:
    low = [w.lower() for w in words]
    changed = True
    while changed and start < end:
        changed = False
        if low[start] in PUNCT:
            start += 1
            changed = True
            continue
        if low[end - 1] in PUNCT:
            end -= 1
            changed = True
            continue
        for phrase in markers:
            n = len(phrase)
            if end - start >= n and tuple(low[start:start + n]) == phrase:
                start += n
                changed = True
                break
            if end - start >= n and tuple(low[end - n:end]) == phrase:
                end -= n
                changed = True
                break
    return start, end


def match(utterance: Utterance, ruleset: RuleSet) -> AnnotationSet | None:
    """First matching rule's spans, or ``None`` when no rule fires.

    A rule whose tagged capture trims down to nothing does not count as a match.
    """
    if not ruleset.rules or not utterance.tokens:
        return None
    text, starts = _normalized(utterance)
    markers = sorted((tuple(m.split()) for m in ruleset.markers), key=len, reverse=True)
    words = utterance.words
    for rule in ruleset.rules:
        m = rule.regex.match(text)
        if m is None:
            continue
        spans = []
        for name, tag in rule.captures.items():
            if tag is None:
                continue
            a, b = starts[m.start(name)], starts[m.end(name)]
            a, b = _trim(words, a, b, markers)
            if a >= b:
                break
            spans.append(SpanAnnotation(tag, a, b))
        else:
            return AnnotationSet(utterance, tuple(spans), Provenance.GRAMMAR)
    return None


def match_rule(utterance: Utterance, ruleset: RuleSet) -> tuple[RuleTemplate, AnnotationSet] | None:
    """Like :func:`match` but also reports which rule fired."""
    for rule in ruleset.rules:
        single = RuleSet((rule,), ruleset.markers)
        got = match(utterance, single)
        if got is not None:
            return rule, got
    return None
