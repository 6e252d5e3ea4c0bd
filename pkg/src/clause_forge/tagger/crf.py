"""Linear-chain CRF inference over dense score matrices.

All functions take

* ``emit``  -- ``(n, L)`` per-position label scores,
* ``trans`` -- ``(L, L)`` score of moving from label ``i`` to label ``j``,
* ``start`` / ``end`` -- ``(L,)`` scores for the first and last label.

Forbidden moves carry ``-inf``. Everything is float64 and in log space.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

NEG_INF = -np.inf


def logsumexp(a: np.ndarray, axis: int | None = None) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())


def forward(emit, trans, start, end) -> tuple[np.ndarray, float]:
    n, _ = emit.shape
    alpha = np.empty_like(emit)
    alpha[0] = start + emit[0]
    for i in range(1, n):
        alpha[i] = logsumexp(alpha[i - 1][:, None] + trans, axis=0) + emit[i]
    return alpha, float(logsumexp(alpha[-1] + end))


def backward(emit, trans, end) -> np.ndarray:
    n, _ = emit.shape
    beta = np.empty_like(emit)
    beta[-1] = end
    for i in range(n - 2, -1, -1):
        beta[i] = logsumexp(trans + (emit[i + 1] + beta[i + 1])[None, :], axis=1)
    return beta


def marginals(emit, trans, start, end) -> tuple[float, np.ndarray, np.ndarray]:
    """``(log_z, node, edge)``; ``node[i, y]`` and ``edge[i, y, y']`` are probabilities."""
    alpha, log_z = forward(emit, trans, start, end)
    beta = backward(emit, trans, end)
    node = np.exp(alpha + beta - log_z)
    edge = np.exp(
        alpha[:-1, :, None] + trans[None, :, :] + (emit[1:] + beta[1:])[:, None, :] - log_z
    )
    return log_z, node, edge


def path_score(emit, trans, start, end, path: Sequence[int]) -> float:
    if len(path) == 0:
        return 0.0
    s = start[path[0]] + emit[0, path[0]]
    for i in range(1, len(path)):
        s += trans[path[i - 1], path[i]] + emit[i, path[i]]
    return float(s + end[path[-1]])


def viterbi(emit, trans, start, end) -> tuple[list[int], float]:
    """Best label path and its score. Ties go to the lowest label index."""
    n, L = emit.shape
    if n == 0:
        return [], 0.0
    delta = start + emit[0]
    back = np.zeros((n, L), dtype=np.int64)
    for i in range(1, n):
        cand = delta[:, None] + trans  # (prev, cur)
        back[i] = np.argmax(cand, axis=0)  # argmax returns the first maximum
        delta = cand[back[i], np.arange(L)] + emit[i]
    final = delta + end
    best = int(np.argmax(final))
    path = [best]
    for i in range(n - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    path.reverse()
    return path, path_score(emit, trans, start, end, path)


def bio_constraints(labels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Additive masks forbidding ``I-X`` unless it follows ``B-X`` or ``I-X``."""
    L = len(labels)
    trans = np.zeros((L, L))
    start = np.zeros(L)
    for j, lab in enumerate(labels):
        if not lab.startswith("I-"):
            continue
        tag = lab[2:]
        start[j] = NEG_INF
        for i, prev in enumerate(labels):
            if prev not in (f"B-{tag}", f"I-{tag}"):
                trans[i, j] = NEG_INF
    return trans, start
