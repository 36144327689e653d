"""Length spectrum of SL2(Z) via indefinite binary quadratic forms, and exact
mean squares of the smoothed explicit-formula sum for Z'/Z."""

from .arith import PellSolution, kronecker, pell_fundamental, pell_power, log_unit
from .qforms import QuadForm, class_number
from .spectrum import SpectrumTable, WeightMode, build_table, multiplicity, parse_weight, read_cache, write_cache
from .zeta import EvalPoint, SquareIntegralResult, c_constant, phi, prime_geodesic_count, square_integral_mean

__version__ = "0.1.0"
