"""Sparse binary features for the CRF tagger."""

from __future__ import annotations

from typing import Sequence

from ..lexicon import is_currency, is_number, marker_spans

#: Bump when the template list changes; saved models record it.
FEATURE_VERSION = 1

#: A token's active features. Each key has weight 1.
FeatureVector = tuple[str, ...]

_OFFSETS = (-2, -1, 1, 2)


def word_shape(word: str) -> str:
    """``$400`` -> ``$ddd``, ``Donald`` -> ``Xxxx``; runs longer than 3 are cut to 3."""
    out = []
    run = 0
    for ch in word:
        c = "d" if ch.isdigit() else "X" if ch.isupper() else "x" if ch.isalpha() else ch
        if out and out[-1] == c:
            run += 1
            if run >= 3:
                continue
        else:
            run = 0
        out.append(c)
    return "".join(out)


def _markers_by_position(words: Sequence[str]) -> list[str | None]:
    covering: list[str | None] = [None] * len(words)
    for a, b, phrase in marker_spans(list(words)):
        for i in range(a, b):
            covering[i] = phrase
    return covering


def sentence_features(words: Sequence[str]) -> list[FeatureVector]:
    """Features for every position of a sentence."""
    n = len(words)
    low = [w.lower() for w in words]
    shapes = [word_shape(w) for w in words]
    markers = _markers_by_position(words)

    # nearest marker phrase to the left / right, and whether a comma sits between
    last_mk: list[str] = []
    comma_since: list[bool] = []
    cur, comma = "NONE", False
    for i in range(n):
        last_mk.append(cur)
        comma_since.append(comma)
        if markers[i] is not None and (i + 1 == n or markers[i + 1] != markers[i]):
            cur, comma = markers[i], False
        elif low[i] == ",":
            comma = True
    next_mk = ["NONE"] * n
    cur = "NONE"
    for i in range(n - 1, -1, -1):
        next_mk[i] = cur
        if markers[i] is not None and (i == 0 or markers[i - 1] != markers[i]):
            cur = markers[i]

    out = []
    for i, w in enumerate(low):
        f = ["bias", f"w0={w}", f"shape={shapes[i]}", f"s2={w[-2:]}", f"s3={w[-3:]}"]
        if len(w) > 2:
            f += [f"p2={w[:2]}", f"p3={w[:3]}"]
        if is_number(w):
            f.append("is-number")
        if is_currency(w):
            f.append("is-currency")
        if words[i][:1].isupper():
            f.append("is-title")
        if markers[i] is not None:
            f += ["marker=true", f"mkp={markers[i]}"]
        for d in _OFFSETS:
            j = i + d
            tag = f"{d:+d}"
            if j < 0:
                f.append(f"BOS{tag}")
            elif j >= n:
                f.append(f"EOS{tag}")
            else:
                f += [f"w{tag}={low[j]}", f"shape{tag}={shapes[j]}", f"s3{tag}={low[j][-3:]}"]
                if markers[j] is not None:
                    f.append(f"marker{tag}=true")
        if i > 0 and (markers[i] or markers[i - 1]):
            f.append(f"mbg-1={low[i - 1]}|{w}")
        if i + 1 < n and (markers[i] or markers[i + 1]):
            f.append(f"mbg+1={w}|{low[i + 1]}")
        f += [f"lastmk={last_mk[i]}", f"nextmk={next_mk[i]}"]
        if comma_since[i]:
            f.append("comma-since-mk")
        if i == 0:
            f.append("first")
        if i == n - 1:
            f.append("last")
        out.append(tuple(dict.fromkeys(f)))
    return out


def featurize(tokens: Sequence[str], position: int) -> FeatureVector:
    if not 0 <= position < len(tokens):
        raise IndexError(f"position {position} outside 0..{len(tokens) - 1}")
    return sentence_features(tokens)[position]
