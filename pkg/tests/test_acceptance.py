"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
Criteria 1 to 4 need the released dataset in ``$CANDLE_DATA_DIR`` or
``data/candle/``; without it they fail and say so.
"""

from __future__ import annotations

import itertools
import random
import sys
import time
import warnings
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from clause_forge import grammar  # noqa: E402
from clause_forge.candle import load_release  # noqa: E402
from clause_forge.core import (  # noqa: E402
    BIO_LABELS,
    AnnotationSet,
    SpanAnnotation,
    TagType,
    Utterance,
    from_bio,
    to_bio,
)
from clause_forge.corpus import Split, stats  # noqa: E402
from clause_forge.ensemble import Ensemble, EnsembleConfig  # noqa: E402
from clause_forge.evaluation import SCORED_TAGS, evaluate  # noqa: E402
from clause_forge.graph import EMPTY, EdgeLabel, create_graph  # noqa: E402
from clause_forge.tagger import TrainingConfig, crf, train  # noqa: E402
from clause_forge.tagger.train import Params, encode, nll_and_gradient  # noqa: E402

from conftest import EXAMPLE_1, EXAMPLE_2, candle_dir, spans_by_text  # noqa: E402

SPLIT_SIZES = {Split.TRAIN: 3426, Split.VALIDATION: 428, Split.TEST: 428}
TAG_COUNTS = {
    Split.TRAIN: {"ALTERNATIVE": 795, "CONDITIONAL": 2585, "CONSEQUENCE": 2584, "FIRST_ACTION": 645,
                  "SECOND_ACTION": 645, "THIRD_ACTION": 165, "NONE": 199},
    Split.VALIDATION: {"ALTERNATIVE": 108, "CONDITIONAL": 330, "CONSEQUENCE": 330, "FIRST_ACTION": 77,
                       "SECOND_ACTION": 77, "THIRD_ACTION": 20, "NONE": 23},
    Split.TEST: {"ALTERNATIVE": 100, "CONDITIONAL": 315, "CONSEQUENCE": 315, "FIRST_ACTION": 78,
                 "SECOND_ACTION": 78, "THIRD_ACTION": 24, "NONE": 35},
}
REFERENCE_BILSTM_AVERAGE = 82.29


def report(request, number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    capman = request.config.pluginmanager.getplugin("capturemanager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


# -- shared fixtures ----------------------------------------------------------------


@pytest.fixture(scope="module")
def release():
    d = candle_dir()
    if d is None:
        return None
    t0 = time.perf_counter()
    splits = load_release(d)
    return splits, time.perf_counter() - t0


def _need(request, number, release):
    if release is None:
        report(request, number, False,
               "dataset not found (set CANDLE_DATA_DIR or place the release under data/candle/)")


@pytest.fixture(scope="module")
def trained(release):
    if release is None:
        return None
    splits, _ = release
    t0 = time.perf_counter()
    model = train(splits[Split.TRAIN].examples, TrainingConfig())
    return model, time.perf_counter() - t0


# -- 1 ---------------------------------------------------------------------------------


def test_criterion_1_dataset_fidelity(request, release):
    _need(request, 1, release)
    splits, seconds = release
    problems = []
    for split, size in SPLIT_SIZES.items():
        if split not in splits:
            problems.append(f"{split.value} split missing")
            continue
        s = stats(splits[split]).as_dict()
        if s["SENTENCES"] != size:
            problems.append(f"{split.value}: {s['SENTENCES']} sentences, expected {size}")
        for tag, want in TAG_COUNTS[split].items():
            if s[tag] != want:
                problems.append(f"{split.value} {tag}: {s[tag]} != {want}")
    if seconds >= 5:
        problems.append(f"loading took {seconds:.1f}s")
    report(request, 1, not problems, "; ".join(problems) or f"split sizes and tag counts exact ({seconds:.2f}s)")


# -- 2 ---------------------------------------------------------------------------------


def test_criterion_2_tagger_quality(request, release, trained):
    _need(request, 2, release)
    splits, _ = release
    model, train_seconds = trained
    t0 = time.perf_counter()
    test = splits[Split.TEST].examples
    preds = [model.annotate(g.utterance) for g in test]
    f1 = evaluate(preds, test).average
    eval_seconds = time.perf_counter() - t0
    ok = f1 >= 0.70 and train_seconds <= 600 and eval_seconds <= 10
    report(request, 2, ok,
           f"macro span-F1 {100 * f1:.2f} (threshold 70.00, reference BiLSTM-CRF {REFERENCE_BILSTM_AVERAGE}); "
           f"train {train_seconds:.0f}s, eval {eval_seconds:.1f}s")


# -- 3 ---------------------------------------------------------------------------------


def test_criterion_3_grammar_signature(request, release):
    rules = grammar.load_rules()
    if TagType.TA in rules.emitted_tags:
        report(request, 3, False, "shipped rules emit THIRD_ACTION")
    _need(request, 3, release)
    splits, _ = release
    test = splits[Split.TEST].examples
    ens = Ensemble(EnsembleConfig(rules=rules))
    preds = [ens.run(g.utterance).projected() for g in test]
    r = evaluate(preds, test)
    emitted = [t for t in SCORED_TAGS if r[t].predicted > 0]
    bad = [f"{t.value} P={100 * r[t].precision:.2f} < R={100 * r[t].recall:.2f}"
           for t in emitted if r[t].precision < r[t].recall]
    detail = ", ".join(f"{t.value} {100 * r[t].precision:.2f}/{100 * r[t].recall:.2f}" for t in emitted)
    report(request, 3, not bad and r[TagType.TA].predicted == 0,
           ("; ".join(bad) if bad else "precision >= recall for every emitted tag") + f" [{detail}]")


# -- 4 ---------------------------------------------------------------------------------


def test_criterion_4_ensemble_non_regression(request, release, trained):
    _need(request, 4, release)
    splits, _ = release
    model, _ = trained
    test = splits[Split.TEST].examples
    alone = evaluate([model.annotate(g.utterance) for g in test], test).average
    ens = Ensemble(EnsembleConfig(model=model))
    combined = evaluate([ens.run(g.utterance).projected() for g in test], test).average
    report(request, 4, 100 * combined >= 100 * alone - 1.0,
           f"ensemble {100 * combined:.2f} vs model {100 * alone:.2f} (allowed drop 1.00)")


# -- 5 ---------------------------------------------------------------------------------


def _enumerate(emit, trans, start, end):
    n, L = emit.shape
    best, best_score = None, -np.inf
    for path in itertools.product(range(L), repeat=n):
        s = start[path[0]] + emit[0, path[0]] + end[path[-1]]
        for i in range(1, n):
            s += trans[path[i - 1], path[i]] + emit[i, path[i]]
        if s > best_score:
            best, best_score = list(path), s
    return best


def test_criterion_5_viterbi_oracle(request):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        L, n = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        emit, trans = rng.normal(size=(n, L)), rng.normal(size=(L, L))
        start, end = rng.normal(size=L), rng.normal(size=L)
        if crf.viterbi(emit, trans, start, end)[0] != _enumerate(emit, trans, start, end):
            mismatches += 1
    seconds = time.perf_counter() - t0
    report(request, 5, mismatches == 0 and seconds < 30,
           f"{100 - mismatches}/100 trials match exhaustive argmax ({seconds:.1f}s)")


# -- 6 ---------------------------------------------------------------------------------


def test_criterion_6_gradient_check(request):
    rng = np.random.default_rng(6)
    labels = ("O", "B-CND", "I-CND")
    seqs = [encode([[0, 1], [1, 2], [2, 3]], [1, 2, 0])]
    p = Params(rng.normal(size=(4, 3)), rng.normal(size=(3, 3)), rng.normal(size=3), rng.normal(size=3))
    _, grad = nll_and_gradient(p, seqs, labels)
    x, h = p.flat(), 1e-6
    num = np.zeros_like(x)
    for i in range(len(x)):
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        num[i] = (nll_and_gradient(Params.like(p, up), seqs, labels)[0]
                  - nll_and_gradient(Params.like(p, down), seqs, labels)[0]) / (2 * h)
    rel = np.linalg.norm(num - grad.flat()) / (np.linalg.norm(num) + np.linalg.norm(grad.flat()))
    emit = rng.normal(size=(3, 3))
    _, node, _ = crf.marginals(emit, p.transitions, p.start, p.end)
    dev = float(np.max(np.abs(node.sum(axis=1) - 1.0)))
    report(request, 6, rel <= 1e-4 and dev <= 1e-9,
           f"gradient relative error {rel:.2e} (<= 1e-4), marginal sum deviation {dev:.1e} (<= 1e-9)")


# -- 7 ---------------------------------------------------------------------------------

_TAG_SETS = [(), ("CND", "CSQ"), ("CND", "CSQ", "ALT"), ("CSQ", "CND"), ("FA", "SA"), ("FA", "SA", "TA"),
             ("CND",), ("CSQ",), ("FA",), ("ALT", "CND", "CSQ")]


def _random_valid_set(rng):
    tags = list(rng.choice(_TAG_SETS))
    n = rng.randint(max(1, 2 * len(tags)), 16)
    cuts = sorted(rng.sample(range(n + 1), 2 * len(tags)))
    spans = tuple(SpanAnnotation(TagType(t), cuts[2 * k], cuts[2 * k + 1]) for k, t in enumerate(tags)
                  if cuts[2 * k] < cuts[2 * k + 1])
    return AnnotationSet(Utterance.from_tokens([f"w{i}" for i in range(n)]), spans)


def _well_formed(n, prev=None):
    """Every BIO string of length n with no I-X after anything but B-X/I-X."""
    if n == 0:
        yield ()
        return
    for label in BIO_LABELS:
        if label.startswith("I-") and prev != label[2:]:
            continue
        nxt = None if label == "O" else label[2:]
        for rest in _well_formed(n - 1, nxt):
            yield (label,) + rest


def test_criterion_7_bio_round_trip(request):
    rng = random.Random(7)
    bad_sets = 0
    for _ in range(1000):
        ann = _random_valid_set(rng)
        assert ann.is_valid
        if from_bio(to_bio(ann), ann.utterance).spans != ann.spans:
            bad_sets += 1
    checked = bad_strings = 0
    for n in range(1, 6):
        utt = Utterance.from_tokens([f"w{i}" for i in range(n)])
        for labels in _well_formed(n):
            checked += 1
            if tuple(to_bio(from_bio(labels, utt))) != labels:
                bad_strings += 1
    report(request, 7, bad_sets == 0 and bad_strings == 0,
           f"annotation sets {1000 - bad_sets}/1000, well-formed strings {checked - bad_strings}/{checked}")


# -- 8 ---------------------------------------------------------------------------------

_GOLDEN = [
    (EXAMPLE_1, False, {"CND": "I have at least 1000 bucks in my account",
                        "CSQ": "please transfer $400 to Donald", "ALT": "check my account balance"}),
    (EXAMPLE_2, True, {"FA": "I would like to add myself to the insurance policy", "SA": "my wife's bank account"}),
    ("Transfer $400 to John and Sam.", False, {"FA": "Transfer $400 to John", "SA": "Transfer $400 to Sam"}),
]
_PREDICTIONS = [
    ("Kindly verify that I have $5000 in my saving, if yes, then move 3000 to checking, else apply for a loan.",
     {"CND": "I have $5000 in my saving", "CSQ": "move 3000 to checking", "ALT": "apply for a loan"}),
    ("As long as it's not raining, don't buy me a raincoat. It's cold outside.",
     {"CND": "it's not raining", "CSQ": "don't buy me a raincoat"}),
]


def test_criterion_8_golden_examples(request, trained, synthetic_model):
    ens = Ensemble(EnsembleConfig())
    failures = []
    for text, projected, want in _GOLDEN:
        r = ens.run(text)
        got = spans_by_text(r.projected() if projected else r.annotations)
        if got != want:
            failures.append(f"{text!r}: {got}")
    snippet = ens.run("Transfer $400 to John and Sam.").trace.expanded.text
    if snippet != "Transfer $400 to John and Transfer $400 to Sam.":
        failures.append(f"restructuring gave {snippet!r}")
    # learned-weight predictions are report-only
    model = trained[0] if trained else synthetic_model
    with_model = Ensemble(EnsembleConfig(model=model))
    notes = []
    for text, want in _PREDICTIONS:
        got = spans_by_text(with_model.run(text).annotations)
        if got != want:
            warnings.warn(f"prediction differs for {text!r}: {got}")
            notes.append("differs")
        else:
            notes.append("matches")
    which = "dataset" if trained else "synthetic"
    report(request, 8, not failures,
           ("; ".join(failures) or "conditional-alternative, shared-prefix and gapped-object examples reproduced")
           + f"; model predictions ({which} model, report-only): {', '.join(notes)}")


# -- 9 ---------------------------------------------------------------------------------


def test_criterion_9_graph_construction(request):
    problems = []
    g = create_graph(Ensemble(EnsembleConfig()).run(EXAMPLE_1).annotations)
    if len(g.nodes) != 3 or sorted(e.label for e in g.edges) != [EdgeLabel.FALSE, EdgeLabel.TRUE]:
        problems.append(f"conditional-alternative graph: {g}")
    words = Utterance.from_tokens("a b c".split())
    seq = AnnotationSet(words, tuple(SpanAnnotation(t, i, i + 1) for i, t in enumerate((TagType.FA, TagType.SA, TagType.TA))))
    g = create_graph(seq)
    if len(g.nodes) != 3 or [(e.source, e.target, e.label) for e in g.edges] != [
        ("n0", "n1", EdgeLabel.NEXT), ("n1", "n2", EdgeLabel.NEXT)
    ]:
        problems.append(f"FA/SA/TA graph: {g}")
    supported = {frozenset(s) for s in [("CND", "CSQ"), ("CND", "CSQ", "ALT"), ("FA", "SA"), ("FA", "SA", "TA")]}
    tags = ["CND", "CSQ", "ALT", "FA", "SA", "TA"]
    for r in range(0, 7):
        for combo in itertools.combinations(tags, r):
            if frozenset(combo) in supported:
                continue
            utt = Utterance.from_tokens(["x"] * max(1, len(combo)))
            ann = AnnotationSet(utt, tuple(SpanAnnotation(TagType(t), i, i + 1) for i, t in enumerate(combo)))
            if create_graph(ann) is not EMPTY:
                problems.append(f"{combo} produced a graph")
    report(request, 9, not problems, "; ".join(problems) or "conditional, chain and all 60 unsupported sets correct")


# -- 10 --------------------------------------------------------------------------------


def _oracle(preds, gold, tag):
    c = p = g = 0
    for pa, ga in zip(preds, gold):
        ps = [(s.token_start, s.token_end) for s in pa.spans if s.tag is tag]
        gs = [(s.token_start, s.token_end) for s in ga.spans if s.tag is tag]
        p += len(ps)
        g += len(gs)
        left = list(gs)
        for x in ps:
            if x in left:
                left.remove(x)
                c += 1
    return c, p, g


def _random_sentence(rng, n):
    utt = Utterance.from_tokens([f"w{i}" for i in range(n)])
    k = rng.randint(0, min(3, n))
    cuts = sorted(rng.sample(range(n + 1), 2 * k)) if 2 * k <= n + 1 else []
    spans = tuple(SpanAnnotation(rng.choice(list(TagType)), cuts[2 * j], cuts[2 * j + 1])
                  for j in range(len(cuts) // 2) if cuts[2 * j] < cuts[2 * j + 1])
    return AnnotationSet(utt, spans)


def test_criterion_10_metric_oracle(request):
    rng = random.Random(10)
    mismatches = 0
    for _ in range(500):
        gold, preds = [], []
        for _ in range(rng.randint(1, 4)):
            n = rng.randint(1, 8)
            g = _random_sentence(rng, n)
            p = g if rng.random() < 0.3 else _random_sentence(rng, n)
            gold.append(g)
            preds.append(p)
        r = evaluate(preds, gold)
        for t in SCORED_TAGS:
            if (r[t].correct, r[t].predicted, r[t].support) != _oracle(preds, gold, t):
                mismatches += 1
    report(request, 10, mismatches == 0, f"500 seeded corpora, {mismatches} count mismatches")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
