"""Decompose conditional and multi-intent utterances into tagged spans and action graphs."""

__version__ = "0.1.0"

from .core import (
    AnnotationSet,
    Provenance,
    SpanAnnotation,
    TagType,
    Token,
    Utterance,
    from_bio,
    to_bio,
    tokenize,
)

__all__ = [
    "AnnotationSet",
    "Provenance",
    "SpanAnnotation",
    "TagType",
    "Token",
    "Utterance",
    "__version__",
    "from_bio",
    "to_bio",
    "tokenize",
]
