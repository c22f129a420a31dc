"""Binomial Boolean functions over GF(2^m0) with m0 even.

Layers, bottom up: :mod:`field` (GF(2^m0) arithmetic and the subfield tower),
:mod:`polar` (unit circles and characters), :mod:`sums` (Kloosterman and cubic
sums), :mod:`walsh` (f_{a,b}, Walsh transforms, bentness) and :mod:`sweep`
(resumable verification runs behind the ``bentforge`` command).
"""
from .field import (
    ContextMismatch,
    FieldContext,
    FieldElement,
    FieldError,
    GF4Element,
    context_new,
)
from .walsh import BinomialFunction, bent_certify, walsh_bruteforce, walsh_spectrum_bruteforce

__version__ = "0.1.0"

__all__ = [
    "BinomialFunction",
    "ContextMismatch",
    "FieldContext",
    "FieldElement",
    "FieldError",
    "GF4Element",
    "bent_certify",
    "context_new",
    "walsh_bruteforce",
    "walsh_spectrum_bruteforce",
]
