"""Input coercion shared by the estimator and the CLI. Raises ValueError/TypeError."""
from __future__ import annotations

import json
import os

from .geometry import Box, as_fraction
from .rulefile import parse_rule
from .substitution import SubstitutionRule


def check_rule(x) -> SubstitutionRule:
    """Accept a rule object, a rule document dict, JSON text or a path to a JSON file."""
    if isinstance(x, SubstitutionRule):
        return x
    if isinstance(x, dict):
        return parse_rule(json.dumps(x))
    if isinstance(x, os.PathLike) or (isinstance(x, str) and not x.lstrip().startswith("{")):
        with open(x, encoding="utf-8") as fh:
            return parse_rule(fh.read())
    if isinstance(x, str):
        return parse_rule(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a substitution rule")


def check_word(word) -> str:
    if not isinstance(word, str):
        raise TypeError("words are strings over the letters P and Q")
    w = word.upper()
    if not w or set(w) - {"P", "Q"}:
        raise ValueError(f"words are nonempty strings over P and Q, got {word!r}")
    return w


def check_box(x, dim: int | None = None) -> Box:
    """A Box, a pair (lo, hi) of corners, or a flat sequence lo + hi."""
    if isinstance(x, Box):
        box = x
    else:
        seq = list(x)
        if len(seq) == 2 and all(isinstance(c, (tuple, list)) for c in seq):
            lo, hi = seq
        else:
            if len(seq) % 2 or not seq:
                raise ValueError("a flat box needs an even, nonzero number of coordinates")
            lo, hi = seq[: len(seq) // 2], seq[len(seq) // 2:]
        lo = [as_fraction(c) for c in lo]
        hi = [as_fraction(c) for c in hi]
        if len(lo) != len(hi) or any(h < l for l, h in zip(lo, hi)):
            raise ValueError("box corners are mismatched or inverted")
        box = Box.from_bounds(lo, hi)
    if dim is not None and box.dim != dim:
        raise ValueError(f"expected a {dim}-dimensional box, got dimension {box.dim}")
    return box


def check_points(points, dim: int | None = None) -> tuple:
    out = tuple(tuple(as_fraction(c) for c in p) for p in points)
    dims = {len(p) for p in out}
    if len(dims) > 1:
        raise ValueError("points have mixed dimensions")
    if dim is not None and dims and dims != {dim}:
        raise ValueError(f"expected {dim}-dimensional points")
    return out


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_tolerance(value) -> float:
    value = float(value)
    if not 0 < value < 1:
        raise ValueError(f"tolerance must lie in (0, 1), got {value}")
    return value

