"""Exact-arithmetic toolkit for affine finite automata and the models they simulate."""

from .automata import (
    LEFT,
    RIGHT,
    Afa,
    EndMarkedAlphabet,
    ErrorMode,
    Evaluator,
    Ga,
    Nfa,
    Pfa,
    Qfa,
    afa_accept_prob,
    afa_final_state,
    ga_value,
    nfa_accepts,
    nfa_path_vector,
    pfa_accept_prob,
    qfa_accept_prob,
)
from .numerics import EXACT, ColVec, Regime, SqMat

__version__ = "0.1.0"

__all__ = [
    "Afa",
    "ColVec",
    "EXACT",
    "EndMarkedAlphabet",
    "ErrorMode",
    "Evaluator",
    "Ga",
    "LEFT",
    "Nfa",
    "Pfa",
    "Qfa",
    "RIGHT",
    "Regime",
    "SqMat",
    "afa_accept_prob",
    "afa_final_state",
    "ga_value",
    "nfa_accepts",
    "nfa_path_vector",
    "pfa_accept_prob",
    "qfa_accept_prob",
]
