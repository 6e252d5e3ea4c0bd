from __future__ import annotations

import base64
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..core import BIO_LABELS, AnnotationSet, Provenance, Utterance, from_bio
from . import crf
from .features import FEATURE_VERSION, sentence_features

FORMAT_NAME = "clause-forge-crf"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """The file is not a readable tagger model."""


class ModelVersionError(ModelFormatError):
    pass


class ModelChecksumError(ModelFormatError):
    pass


@dataclass
class TaggerModel:
    """Emission weights per (feature, label) and label-to-label transition weights.

    ``start``/``end`` hold the transition scores out of the sentence-start and
    into the sentence-end state. Features unseen in training score zero.
    """

    labels: tuple[str, ...]
    features: dict[str, int]
    emissions: np.ndarray  # (n_features, n_labels)
    transitions: np.ndarray  # (n_labels, n_labels)
    start: np.ndarray
    end: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)
    feature_version: int = FEATURE_VERSION

    def __post_init__(self) -> None:
        L = len(self.labels)
        if self.emissions.shape != (len(self.features), L):
            raise ValueError(f"emission shape {self.emissions.shape} != ({len(self.features)}, {L})")
        if self.transitions.shape != (L, L) or self.start.shape != (L,) or self.end.shape != (L,):
            raise ValueError("transition arrays do not match the label alphabet")
        self._mask_trans, self._mask_start = crf.bio_constraints(self.labels)

    @classmethod
    def zeros(cls, features: Sequence[str] = (), labels: Sequence[str] = BIO_LABELS) -> TaggerModel:
        L = len(labels)
        return cls(
            tuple(labels),
            {f: i for i, f in enumerate(features)},
            np.zeros((len(features), L)),
            np.zeros((L, L)),
            np.zeros(L),
            np.zeros(L),
        )

    def feature_ids(self, words: Sequence[str]) -> list[list[int]]:
        index = self.features
        return [[index[k] for k in fv if k in index] for fv in sentence_features(words)]

    def emission_scores(self, words: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(words), len(self.labels)))
        for i, ids in enumerate(self.feature_ids(words)):
            if ids:
                out[i] = self.emissions[ids].sum(axis=0)
        return out

    def constrained(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.transitions + self._mask_trans, self.start + self._mask_start, self.end

    def decode_words(self, words: Sequence[str]) -> tuple[list[str], float]:
        if len(words) == 0:
            return [], 0.0
        trans, start, end = self.constrained()
        path, score = crf.viterbi(self.emission_scores(words), trans, start, end)
        return [self.labels[k] for k in path], score

    def annotate(self, utterance: Utterance) -> AnnotationSet:
        labels, _ = self.decode_words(utterance.words)
        return from_bio(labels, utterance, Provenance.MODEL)


def decode(model: TaggerModel, utterance: Utterance | Sequence[str]) -> tuple[list[str], float]:
    """Viterbi labels and their path score; empty input gives ``([], 0.0)``."""
    words = utterance.words if isinstance(utterance, Utterance) else list(utterance)
    return model.decode_words(words)


def _pack(a: np.ndarray) -> dict[str, Any]:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _unpack(d: dict[str, Any]) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(d["shape"]).copy()


def _checksum(payload: dict[str, Any]) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save(model: TaggerModel, path: str | os.PathLike) -> None:
    payload = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "feature_version": model.feature_version,
        "labels": list(model.labels),
        "features": sorted(model.features, key=model.features.__getitem__),
        "emissions": _pack(model.emissions),
        "transitions": _pack(model.transitions),
        "start": _pack(model.start),
        "end": _pack(model.end),
        "metadata": model.metadata,
    }
    doc = {"checksum": _checksum(payload), "payload": payload}
    tmp = Path(f"{path}.tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


def load(path: str | os.PathLike) -> TaggerModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelChecksumError(f"{path}: unreadable or corrupted model ({exc})") from exc
    if not isinstance(doc, dict) or "payload" not in doc or "checksum" not in doc:
        raise ModelFormatError(f"{path}: not a {FORMAT_NAME} model")
    payload = doc["payload"]
    if _checksum(payload) != doc["checksum"]:
        raise ModelChecksumError(f"{path}: checksum mismatch")
    if payload.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path}: not a {FORMAT_NAME} model")
    if payload.get("format_version") != FORMAT_VERSION:
        raise ModelVersionError(f"{path}: format version {payload.get('format_version')} (expected {FORMAT_VERSION})")
    if payload.get("feature_version") != FEATURE_VERSION:
        raise ModelVersionError(
            f"{path}: feature version {payload.get('feature_version')} (this build uses {FEATURE_VERSION})"
        )
    feats = payload["features"]
    return TaggerModel(
        tuple(payload["labels"]),
        {f: i for i, f in enumerate(feats)},
        _unpack(payload["emissions"]),
        _unpack(payload["transitions"]),
        _unpack(payload["start"]),
        _unpack(payload["end"]),
        payload.get("metadata", {}),
    )
