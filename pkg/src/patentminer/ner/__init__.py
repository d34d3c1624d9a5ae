"""Neural linear-chain CRF tagger for manufacturing entities."""

from ..iob import ENTITY_CLASSES, EntitySpan, decode_entities, label_space
from .crf import crf_forward_logZ, crf_neg_log_likelihood, crf_viterbi
from .data import AnnotatedSentence, load_annotations, read_annotations, split_sentences, write_annotations
from .model import TaggerConfig
from .tagger import (
    TaggerModel,
    encode,
    load_embeddings,
    load_tagger,
    predict,
    save_tagger,
    tag,
    train_tagger,
)

__all__ = [
    "ENTITY_CLASSES", "EntitySpan", "decode_entities", "label_space", "crf_forward_logZ",
    "crf_neg_log_likelihood", "crf_viterbi", "AnnotatedSentence", "load_annotations", "read_annotations",
    "split_sentences", "write_annotations", "TaggerConfig", "TaggerModel", "encode", "load_embeddings",
    "load_tagger", "predict", "save_tagger", "tag", "train_tagger",
]
