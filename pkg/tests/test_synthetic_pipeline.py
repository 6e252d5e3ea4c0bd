"""End-to-end checks on generated data, standing in for the dataset-dependent criteria."""

import random

from clause_forge import grammar
from clause_forge.core import TagType
from clause_forge.ensemble import Ensemble, EnsembleConfig
from clause_forge.evaluation import SCORED_TAGS, evaluate

import synthetic


def test_tagger_learns_the_generator(synthetic_split, synthetic_model):
    _, test = synthetic_split
    f1 = evaluate([synthetic_model.annotate(g.utterance) for g in test], test).average
    assert f1 >= 0.70


def test_rules_favour_precision(synthetic_split):
    _, test = synthetic_split
    ens = Ensemble(EnsembleConfig())
    r = evaluate([ens.run(g.utterance).projected() for g in test], test)
    for t in SCORED_TAGS:
        if r[t].predicted:
            assert r[t].precision >= r[t].recall, t
    assert r[TagType.TA].predicted == 0
    assert TagType.TA not in grammar.load_rules().emitted_tags


def test_ensemble_does_not_regress(synthetic_split, synthetic_model):
    _, test = synthetic_split
    alone = evaluate([synthetic_model.annotate(g.utterance) for g in test], test).average
    ens = Ensemble(EnsembleConfig(model=synthetic_model))
    combined = evaluate([ens.run(g.utterance).projected() for g in test], test).average
    assert combined >= alone - 0.01


def test_covered_sentences_never_reach_the_model(synthetic_model):
    rng = random.Random(21)
    ens = Ensemble(EnsembleConfig(model=synthetic_model))
    covered = [a for a, ok in (synthetic.sentence(rng) for _ in range(80)) if ok]
    for ann in covered:
        ens.run(ann.utterance)
    assert covered and ens.model_calls == 0
