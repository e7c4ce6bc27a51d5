"""Representations of lattice cosets by sums of odd squares."""

from .core import CosetSpec, GramMatrix, enumerate_reduced, is_minkowski_reduced, is_positive_definite
from .criteria import find_split, necessary_conditions
from .oddsq import decompose_odd_squares, min_odd_squares
from .repsearch import SearchBudget, cosets_isometric, find_representation, min_representation

__version__ = "0.1.0"
