"""Dialogue-act to utterance generation: gated recurrent generator with
convolutional and backward-LM reranking, plus retrieval / n-gram baselines."""

from importlib import resources as _resources

from ._core import (
    DaParseError,
    DataError,
    DialogueAct,
    DivergenceError,
    Model,
    Ontology,
    act_pairs,
    act_type,
    bleu4,
    canonicalize_da,
    da_key,
    delexicalize,
    encode_control,
    generate_corpus,
    parse_da,
    relexicalize,
    render_da,
    slot_error,
    tokenize,
)

__all__ = [
    "DaParseError",
    "DataError",
    "DialogueAct",
    "DivergenceError",
    "Model",
    "Ontology",
    "act_pairs",
    "act_type",
    "bleu4",
    "canonicalize_da",
    "da_key",
    "data_path",
    "delexicalize",
    "encode_control",
    "generate_corpus",
    "parse_da",
    "relexicalize",
    "render_da",
    "slot_error",
    "tokenize",
]

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Absolute path of a bundled data file, e.g. ``restaurant_templates.json``."""
    return str(_resources.files(__package__) / "data" / name)
