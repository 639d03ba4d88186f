"""Ratio asymptotics of multiple orthogonal polynomials for Nikishin systems.

Modules
-------
measures
    Generator and derived measures, Cauchy transforms, quadrature and the
    measure algebra (products, inverse measures).
mop
    Multi-indices, index classes and paths, and the monic multiple
    orthogonal polynomials ``Q_n``.
second_type
    Second-type function chains ``Psi_{n,k}``, their zeros, interlacing,
    orthogonality residuals and normalisation constants.
limits
    Boundary-value solver for the limit functions and the branches of the
    associated algebraic function.
harness
    Config-driven experiments, report emission and the ``nikishin`` CLI.
"""

from .errors import NikishinError
from .limits import LimitSolution, SurfaceSpec, conformal_map, g0, solve_bvp, szego_function
from .measures import (
    Generator,
    Interval,
    NikishinSystem,
    WeightSpec,
    arcsine,
    cauchy_transform,
    integrate,
    inverse_measure,
    nikishin_components,
    point_mass,
    product_measure,
)
from .mop import MultiIndex, classify, increment, solve_monic_mop, staircase_path
from .precision import working_precision
from .second_type import SecondTypeChain, build_chain, check_interlacing

__all__ = [
    "Generator", "Interval", "LimitSolution", "MultiIndex", "NikishinError", "NikishinSystem",
    "SecondTypeChain", "SurfaceSpec", "WeightSpec", "arcsine", "build_chain", "cauchy_transform",
    "check_interlacing", "classify", "conformal_map", "g0", "increment", "integrate",
    "inverse_measure", "nikishin_components", "point_mass", "product_measure", "solve_bvp",
    "solve_monic_mop", "staircase_path", "szego_function", "working_precision",
]

__version__ = "0.1.0"
