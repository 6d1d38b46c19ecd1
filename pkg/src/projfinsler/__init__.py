"""Projective invariants of complex Finsler metrics, evaluated semi-symbolically."""

from __future__ import annotations

__version__ = "0.1.0"

from .expr import EvalPoint, EvaluationError, Expr, ExprError, Var
from .syntax import ParseError, parse, to_source
from .tensors import FinslerMetric, IndexSignature, NotPositiveDefinite, Sampling, TensorField, sample_points, validate

__all__ = [
    "EvalPoint",
    "EvaluationError",
    "Expr",
    "ExprError",
    "FinslerMetric",
    "IndexSignature",
    "NotPositiveDefinite",
    "ParseError",
    "Sampling",
    "TensorField",
    "Var",
    "__version__",
    "parse",
    "sample_points",
    "to_source",
    "validate",
]
