import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from clause_forge.core import AnnotationSet, SpanAnnotation, TagType, Utterance  # noqa: E402

EXAMPLE_1 = (
    "Provided that I have at least 1000 bucks in my account, "
    "please transfer $400 to Donald otherwise check my account balance"
)
EXAMPLE_2 = "I would like to add myself to the insurance policy and my wife's bank account."


def spans_by_text(ann: AnnotationSet) -> dict[str, str]:
    return {s.tag.value: ann.span_text(s) for s in ann.spans}


def annotate(text: str, **tagged: str) -> AnnotationSet:
    """Gold annotation where each keyword names a tag and its value is the span text."""
    utt = Utterance.from_text(text)
    words = utt.words
    spans = []
    for tag, phrase in tagged.items():
        target = Utterance.from_text(phrase).words
        for i in range(len(words) - len(target) + 1):
            if words[i : i + len(target)] == target:
                spans.append(SpanAnnotation(TagType(tag), i, i + len(target)))
                break
        else:
            raise AssertionError(f"{phrase!r} not in {text!r}")
    return AnnotationSet(utt, tuple(spans))


@pytest.fixture(scope="session")
def synthetic_split():
    import synthetic

    return synthetic.corpus(400, seed=11), synthetic.corpus(150, seed=12)


@pytest.fixture(scope="session")
def synthetic_model(synthetic_split):
    from clause_forge.tagger import TrainingConfig, train

    train_set, _ = synthetic_split
    return train(train_set, TrainingConfig(epochs=12))


def candle_dir() -> Path | None:
    env = os.environ.get("CANDLE_DATA_DIR")
    for cand in (env, Path(__file__).resolve().parent.parent / "data" / "candle"):
        if cand and Path(cand).is_dir():
            return Path(cand)
    return None
