"""Feature-based linear-chain CRF sequence tagger."""

from .features import FEATURE_VERSION, featurize, sentence_features, word_shape
from .model import (
    ModelChecksumError,
    ModelFormatError,
    ModelVersionError,
    TaggerModel,
    decode,
    load,
    save,
)
from .train import TrainingConfig, TrainingError, train

__all__ = [
    "FEATURE_VERSION",
    "ModelChecksumError",
    "ModelFormatError",
    "ModelVersionError",
    "TaggerModel",
    "TrainingConfig",
    "TrainingError",
    "decode",
    "featurize",
    "load",
    "save",
    "sentence_features",
    "train",
    "word_shape",
]
