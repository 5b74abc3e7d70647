"""Exact symbolic verification for gauge theory on the q-deformed twistor space.

Modules, bottom up: ``exactcore`` (Laurent scalars, tensors), ``rmx``
(R-matrices, epsilon symbols), ``ncengine`` (free algebras and rewriting),
``twistoralg`` (the twistor presentation), ``gaugeforms`` (forms, duality,
trace), ``instantons`` (t'Hooft and ADHM drivers) and ``qtwcli``.
"""
from .exactcore import Laurent, Tensor, qpow
from .instantons import VerificationReport, build_adhm, build_thooft
from .ncengine import Alphabet, Family, NcPoly, RewriteSystem, compile_rules
from .qtwcli import parse, run_suite
from .rmx import build_glq_rmatrix, build_q_epsilon4, build_slq2_rmatrix
from .twistoralg import BSector, build_twistor_system

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "BSector", "Family", "Laurent", "NcPoly", "RewriteSystem", "Tensor",
    "VerificationReport", "build_adhm", "build_glq_rmatrix", "build_q_epsilon4",
    "build_slq2_rmatrix", "build_thooft", "build_twistor_system", "compile_rules", "parse",
    "qpow", "run_suite",
]
