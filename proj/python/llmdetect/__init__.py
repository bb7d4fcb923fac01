"""Human-vs-LLM text detectors backed by the C++ core."""

from ._llmdetect import (
    Detector,
    LlmdetectError,
    clean_text,
    det_curve,
    evaluate,
    generate_paired_stub,
    probit,
    roc_curve,
    tokenize,
    train,
)

__all__ = [
    "Detector",
    "LlmdetectError",
    "clean_text",
    "det_curve",
    "evaluate",
    "generate_paired_stub",
    "probit",
    "roc_curve",
    "tokenize",
    "train",
]
