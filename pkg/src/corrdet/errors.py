"""Exception types shared across the toolkit."""

from __future__ import annotations

__all__ = [
    "CorrdetError",
    "DegenerateInput",
    "EmptyEvaluation",
    "NoGroundTruth",
    "ParseError",
    "SchemaError",
    "ReferenceError",
    "DimensionError",
]


class CorrdetError(Exception):
    """Base class for all toolkit errors."""


class DegenerateInput(CorrdetError):
    """A correlation coefficient is undefined for the given input
    (fewer than two samples, or a required variance term is zero)."""


class EmptyEvaluation(CorrdetError):
    """Every image/class was skipped; there is nothing to average."""


class NoGroundTruth(CorrdetError):
    """A PR curve was requested for a class with no ground-truth objects."""


class ParseError(CorrdetError):
    """Input file is not valid JSON or not the expected top-level shape."""


class SchemaError(CorrdetError):
    """Input parses but violates the file schema (missing/ill-typed fields,
    degenerate boxes, out-of-range scores, iscrowd != 0)."""


class ReferenceError(CorrdetError):  # noqa: A001 - name fixed by the file-format contract
    """An entry references an image or category id that does not exist."""


class DimensionError(CorrdetError):
    """A raw-detection score vector does not match the category count."""
