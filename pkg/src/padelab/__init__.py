"""High-precision diagonal Padé approximants of algebraic test functions and
the potential theory needed to check their limit laws."""
from .bigseries import DEFAULT_PREC, GermAtInfinity, germ
from .pade import PadePair, pade_pair, residual_order
from .potential import IntervalSystem, EquilibriumData, solve_equilibrium
from .roots import ZeroMultiset, roots
from .testfn import TestFunctionSpec, germ_at_infinity, stahl_compact

__version__ = "0.1.0"
