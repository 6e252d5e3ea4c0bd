"""Maximum-likelihood training of the CRF tagger.

The objective is the mean negative conditional log-likelihood over the
training sentences plus ``l2 / 2 * ||theta||^2``.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ..core import BIO_LABELS, AnnotationSet, to_bio
from . import crf
from .features import FEATURE_VERSION, sentence_features
from .model import TaggerModel

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 25
    learning_rate: float = 0.1
    l2: float = 1e-4
    seed: int = 0
    shuffle: bool = True
    optimizer: str = "sgd"  # "sgd" (per sentence) or "batch" (full batch)
    expand_inputs: bool = False  # train on clause-expanded sentences

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be > 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.optimizer not in ("sgd", "batch"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class Params:
    emissions: np.ndarray
    transitions: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def arrays(self) -> tuple[np.ndarray, ...]:
        return self.emissions, self.transitions, self.start, self.end

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def like(cls, other: Params, flat: np.ndarray) -> Params:
        out, pos = [], 0
        for a in other.arrays():
            out.append(flat[pos:pos + a.size].reshape(a.shape).copy())
            pos += a.size
        return cls(*out)

    def sq_norm(self) -> float:
        return float(sum(np.sum(a * a) for a in self.arrays()))


@dataclass
class Sequence_:
    """One training sentence: flat feature ids, their positions, gold label ids."""

    ids: np.ndarray
    pos: np.ndarray
    offsets: np.ndarray  # index into ids where each position starts
    gold: np.ndarray

    @property
    def n(self) -> int:
        return len(self.gold)


def encode(feature_lists: Sequence[Sequence[int]], gold: Sequence[int]) -> Sequence_:
    ids, pos, offsets = [], [], []
    for i, fl in enumerate(feature_lists):
        offsets.append(len(ids))
        ids.extend(fl)
        pos.extend([i] * len(fl))
    return Sequence_(np.asarray(ids, dtype=np.int64), np.asarray(pos, dtype=np.int64),
                     np.asarray(offsets, dtype=np.int64), np.asarray(gold, dtype=np.int64))


def _emission(W: np.ndarray, seq: Sequence_) -> np.ndarray:
    # every position carries the bias feature, so no segment is empty
    return np.add.reduceat(W[seq.ids], seq.offsets, axis=0)


def _sentence_terms(params: Params, seq: Sequence_, mask_t: np.ndarray, mask_s: np.ndarray,
                    emission_scale: float = 1.0):
    emit = _emission(params.emissions, seq)
    if emission_scale != 1.0:
        emit *= emission_scale
    trans = params.transitions + mask_t
    start = params.start + mask_s
    log_z, node, edge = crf.marginals(emit, trans, start, params.end)
    gold_score = crf.path_score(emit, trans, start, params.end, seq.gold)
    nll = log_z - gold_score
    # observed minus expected counts = gradient of the log-likelihood
    d_node = -node
    d_node[np.arange(seq.n), seq.gold] += 1.0
    d_trans = -edge.sum(axis=0)
    np.add.at(d_trans, (seq.gold[:-1], seq.gold[1:]), 1.0)
    d_start = -node[0]
    d_start[seq.gold[0]] += 1.0
    d_end = -node[-1]
    d_end[seq.gold[-1]] += 1.0
    return nll, d_node, d_trans, d_start, d_end


def nll_and_gradient(
    params: Params,
    sequences: Sequence[Sequence_],
    labels: Sequence[str] = BIO_LABELS,
    l2: float = 0.0,
    constrain: bool = True,
) -> tuple[float, Params]:
    """Objective and its gradient with respect to every parameter."""
    L = len(labels)
    if constrain:
        mask_t, mask_s = crf.bio_constraints(labels)
    else:
        mask_t, mask_s = np.zeros((L, L)), np.zeros(L)
    g = Params(*(np.zeros_like(a) for a in params.arrays()))
    total = 0.0
    for seq in sequences:
        nll, d_node, d_trans, d_start, d_end = _sentence_terms(params, seq, mask_t, mask_s)
        total += nll
        np.add.at(g.emissions, seq.ids, -d_node[seq.pos])
        g.transitions -= d_trans
        g.start -= d_start
        g.end -= d_end
    m = max(len(sequences), 1)
    for a in g.arrays():
        a /= m
    loss = total / m
    if l2:
        loss += 0.5 * l2 * params.sq_norm()
        for a, p in zip(g.arrays(), params.arrays()):
            a += l2 * p
    # forbidden moves have zero marginal, so only the L2 term touches them
    return loss, g


@dataclass
class EpochReport:
    epoch: int
    loss: float
    validation_f1: float | None = None


def _prepare(corpus: Iterable[AnnotationSet], expand: bool) -> list[tuple[list[str], list[str]]]:
    out = []
    for ann in corpus:
        if expand:
            from ..restructure import expand_clauses, project_forward

            trace = expand_clauses(ann.utterance)
            ann = project_forward(ann, trace)
        if len(ann.utterance):
            out.append((ann.utterance.words, to_bio(ann)))
    return out


def train(
    corpus: Iterable[AnnotationSet],
    config: TrainingConfig = TrainingConfig(),
    validation: Iterable[AnnotationSet] | None = None,
    on_epoch: Callable[[EpochReport], None] | None = None,
) -> TaggerModel:
    """Fit a :class:`TaggerModel`. Deterministic for a fixed corpus, config and seed."""
    data = _prepare(corpus, config.expand_inputs)
    if not data:
        raise TrainingError("empty training corpus")
    labels = BIO_LABELS
    label_index = {l: i for i, l in enumerate(labels)}

    feats_per_sentence = [sentence_features(words) for words, _ in data]
    index: dict[str, int] = {}
    for fs in feats_per_sentence:
        for fv in fs:
            for k in fv:
                if k not in index:
                    index[k] = len(index)
    sequences = [
        encode([[index[k] for k in fv] for fv in fs], [label_index[l] for l in gold])
        for fs, (_, gold) in zip(feats_per_sentence, data)
    ]
    L = len(labels)
    params = Params(np.zeros((len(index), L)), np.zeros((L, L)), np.zeros(L), np.zeros(L))
    val = list(validation) if validation is not None else None

    def snapshot(p: Params, history: list[EpochReport]) -> TaggerModel:
        return TaggerModel(
            labels, dict(index), p.emissions.copy(), p.transitions.copy(), p.start.copy(), p.end.copy(),
            metadata={
                "config": asdict(config),
                "history": [asdict(h) for h in history],
                "sentences": len(data),
                "feature_version": FEATURE_VERSION,
            },
        )

    rng = random.Random(config.seed)
    order = list(range(len(sequences)))
    history: list[EpochReport] = []
    step = _sgd_epoch if config.optimizer == "sgd" else _batch_epoch
    for epoch in range(1, config.epochs + 1):
        if config.shuffle and config.optimizer == "sgd":
            rng.shuffle(order)
        step(params, [sequences[i] for i in order], labels, config)
        loss, _ = nll_and_gradient(params, sequences, labels, config.l2)
        if not math.isfinite(loss):
            raise TrainingError(
                f"non-finite loss at epoch {epoch}; max |w| = {max(np.max(np.abs(a)) for a in params.arrays()):.3g}, "
                f"learning rate {config.learning_rate}"
            )
        report = EpochReport(epoch, loss)
        if val:
            from ..evaluation import evaluate

            model = snapshot(params, history)
            report.validation_f1 = evaluate([model.annotate(a.utterance) for a in val], val).average
        history.append(report)
        log.info("epoch %d loss %.5f%s", epoch, loss,
                 f" val-F1 {report.validation_f1:.4f}" if report.validation_f1 is not None else "")
        if on_epoch:
            on_epoch(report)
    model = snapshot(params, history)
    model.metadata["corpus_size"] = len(data)
    return model


def _batch_epoch(params: Params, sequences, labels, config: TrainingConfig) -> None:
    _, g = nll_and_gradient(params, sequences, labels, config.l2)
    for p, d in zip(params.arrays(), g.arrays()):
        p -= config.learning_rate * d


def _sgd_epoch(params: Params, sequences, labels, config: TrainingConfig) -> None:
    lr, l2 = config.learning_rate, config.l2
    mask_t, mask_s = crf.bio_constraints(labels)
    decay = 1.0 - lr * l2
    # emissions are held as scale * V so the L2 shrink costs O(1) per step
    V = params.emissions
    scale = 1.0
    for seq in sequences:
        _, d_node, d_trans, d_start, d_end = _sentence_terms(params, seq, mask_t, mask_s, scale)
        scale *= decay
        np.add.at(V, seq.ids, (lr / scale) * d_node[seq.pos])
        params.transitions *= decay
        params.transitions += lr * d_trans
        params.start *= decay
        params.start += lr * d_start
        params.end *= decay
        params.end += lr * d_end
        if scale < 1e-6:
            V *= scale
            scale = 1.0
    V *= scale
