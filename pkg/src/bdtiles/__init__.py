"""Exact substitution tilings and bounded-displacement analysis."""
