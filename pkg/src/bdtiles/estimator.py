"""Estimator-style front end over the analysis pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bdanalysis import bound_constants, divergence_table
from .construction import NestedFamily, OmegaTiling
from .rulefile import named_pair
from .spectral import CONTINUUM, DEFAULT_TOLERANCE, rule_report
from .substitution import DEFAULT_BUDGET
from .validation import check_positive_int, check_rule, check_tolerance, check_word


class BDClassifier(BaseEstimator):
    """Classify substitution rules by the growth of their counting discrepancies.

    ``fit`` runs the full analysis on one rule; ``predict`` labels each rule in
    a sequence as uniformly-spread-regime, critical or continuum-regime. The
    labels depend on each rule alone, so ``predict`` does not need ``fit``.

    Parameters
    ----------
    p, q : str or None
        Named patches used as P and Q; the first two declared names by default.
    tolerance : float
        Relative band for the critical classification.
    budget : int
        Tile budget for geometric work.
    m_max : int
        Divergence rows computed during ``fit`` (0 skips the table).
    omega, eta : str
        Words for the divergence table.
    n_jobs : int
        Worker threads for row computations.
    """

    def __init__(self, p=None, q=None, tolerance=DEFAULT_TOLERANCE, budget=DEFAULT_BUDGET, m_max=0,
                 omega="PPPPPP", eta="QQQQQQ", n_jobs=1):
        self.p = p
        self.q = q
        self.tolerance = tolerance
        self.budget = budget
        self.m_max = m_max
        self.omega = omega
        self.eta = eta
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        tol = check_tolerance(self.tolerance)
        budget = check_positive_int(self.budget, "budget")
        jobs = check_positive_int(self.n_jobs, "n_jobs")
        if self.m_max:
            check_positive_int(self.m_max, "m_max")
        rule = check_rule(X)
        self.rule_ = rule
        self.p_name_ = self.q_name_ = None
        if len(rule.named_patches) >= 2 or (self.p and self.q):
            self.p_name_, self.q_name_ = named_pair(rule, self.p, self.q)
        if self.p_name_ is None:
            self.report_ = rule_report(rule, tolerance=tol)
        else:
            pv = rule.named_patches[self.p_name_].count_vector(rule.n)
            qv = rule.named_patches[self.q_name_].count_vector(rule.n)
            self.report_ = rule_report(rule, pv, qv, tol)
        self.classification_ = self.report_.classification
        self.family_ = None
        self.divergence_ = []
        if self.classification_ == CONTINUUM and self.p_name_ is not None:
            fam = NestedFamily(rule, rule.named_patches[self.p_name_], rule.named_patches[self.q_name_],
                               self.report_, budget)
            self.family_ = fam
            self.a_, self.h_ = fam.a, fam.h
            self.k_schedule_ = tuple(fam.k(i) for i in range(1, 7))
            self.constants_ = bound_constants(fam)
            if self.m_max:
                self.divergence_ = divergence_table(fam, check_word(self.omega), check_word(self.eta),
                                                    check_positive_int(self.m_max, "m_max"), budget, jobs)
        return self

    def predict(self, X):
        tol = check_tolerance(self.tolerance)
        return np.array([rule_report(check_rule(x), tolerance=tol).classification for x in X], dtype=object)

    def tiling(self, word: str) -> OmegaTiling:
        """The tiling assembled from ``word`` for the fitted rule."""
        check_is_fitted(self, "family_")
        if self.family_ is None:
            raise ValueError("no nested family: the rule is not in the continuum regime or lacks P and Q")
        return OmegaTiling(self.family_, check_word(word))
