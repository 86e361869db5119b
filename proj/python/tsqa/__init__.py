"""Temporal question answering core (C++), exposed for scripting and tests."""

from ._core import (
    dilate,
    evaluate_checkpoint,
    exact_match,
    f1,
    generate_synthetic,
    mine,
    normalize_answer,
    parse_question_time,
    resolve,
    reward,
    score_prediction,
    tag,
    tokenize,
)

__all__ = [
    "dilate",
    "evaluate_checkpoint",
    "exact_match",
    "f1",
    "generate_synthetic",
    "mine",
    "normalize_answer",
    "parse_question_time",
    "resolve",
    "reward",
    "score_prediction",
    "tag",
    "tokenize",
]
