"""Deterministic JSON analysis reports. Rationals are written as "p/q" strings."""
from __future__ import annotations

import json
from fractions import Fraction

import mpmath

from .bdanalysis import bound_constants, divergence_table
from .construction import NestedFamily
from .geometry import Patch
from .rulefile import format_rational
from .spectral import CONTINUUM, SpectralReport, rule_report
from .substitution import DEFAULT_BUDGET, SubstitutionRule

DIGITS = 12


def decimal(x, digits: int = DIGITS) -> str:
    """Fixed-width decimal string: ``digits`` significant digits, complex as a+bj."""
    with mpmath.workdps(40):
        if isinstance(x, complex):
            if x.imag == 0:
                return decimal(x.real, digits)
            return f"{decimal(x.real, digits)}{'+' if x.imag >= 0 else '-'}{decimal(abs(x.imag), digits)}j"
        value = mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpmath.mpf(x)
        return mpmath.nstr(value, digits, strip_zeros=False, min_fixed=-4, max_fixed=digits)


def _scalar(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    return decimal(x)


def _vector(v):
    return None if v is None else [_scalar(x) for x in v]


def spectral_section(rep: SpectralReport) -> dict:
    eig = []
    for s in rep.eigenspaces:
        eig.append({
            "value": decimal(s.value),
            "exact": s.exact,
            "rational": format_rational(s.value) if s.exact else None,
            "multiplicity": s.multiplicity,
            "eigenvectors": [_vector(v) for v in s.basis],
        })
    return {
        "matrix": [list(r) for r in rep.matrix],
        "primitive_power": rep.primitive_power,
        "eigenvalues": eig,
        "exact": rep.exact,
        "u1": _vector(rep.u1),
        "lambda1": decimal(rep.lambda1),
        "threshold": _scalar(rep.threshold),
        "t_index": rep.t_index,
        "lambda_t": None if rep.lambda_t is None else decimal(rep.lambda_t),
        "v_t": _vector(rep.v_t),
        "classification": rep.classification,
        "condition": [
            {"eigenvalue": decimal(c["eigenvalue"]), "inner_product": _scalar(c["inner_product"]), "holds": c["holds"]}
            for c in rep.condition2
        ],
    }


def row_document(row) -> dict:
    return {
        "m": row.m,
        "index": row.index,
        "k": row.k,
        "cube_count": row.cube_count,
        "boundary": format_rational(row.boundary),
        "count_1": row.count_1,
        "count_2": row.count_2,
        "quotient": None if row.quotient is None else format_rational(row.quotient),
        "nested_difference": row.nested_difference,
        "algebraic_quotient": None if row.algebraic_quotient is None else format_rational(row.algebraic_quotient),
        "lower_bound": row.lower_bound,
        "decomposition": row.decomposition,
    }


def constants_document(family: NestedFamily) -> dict:
    c = bound_constants(family)
    return {
        "c0": decimal(c.c0),
        "c1_squared": format_rational(c.c1_squared),
        "c2": decimal(c.c2),
        "c3": format_rational(c.c3),
        "c_d": decimal(c.cd),
    }


def analysis_report(rule: SubstitutionRule, p_name: str | None, q_name: str | None, omega: str = "PPPPPP",
                    eta: str = "QQQQQQ", m_max: int = 2, budget: int = DEFAULT_BUDGET, workers: int = 1) -> dict:
    """Everything the analyze command prints, as a JSON-ready dict.

    Without named patches only the spectral section is filled in.
    """
    if p_name is None or q_name is None:
        p = q = None
        rep = rule_report(rule)
    else:
        p: Patch = rule.named_patches[p_name]
        q: Patch = rule.named_patches[q_name]
        rep = rule_report(rule, p.count_vector(rule.n), q.count_vector(rule.n))
    doc = {
        "dimension": rule.dimension,
        "inflation": format_rational(rule.inflation),
        "prototiles": [pt.label for pt in rule.prototiles],
        "patches": {"P": p_name, "Q": q_name},
        "spectral": spectral_section(rep),
    }
    if rep.classification != CONTINUUM or p is None:
        return doc
    family = NestedFamily(rule, p, q, rep, budget)
    doc["construction"] = {
        "a": family.a,
        "h": family.h,
        "k_schedule": [family.k(i) for i in range(1, 7)],
        "marks": {letter: _vector(mp.mark) for letter, mp in sorted(family.marked.items())},
        "constants": constants_document(family),
    }
    if m_max > 0:
        rows = divergence_table(family, omega, eta, m_max, budget, workers)
        doc["divergence"] = {"omega": omega.upper(), "eta": eta.upper(), "rows": [row_document(r) for r in rows]}
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"

