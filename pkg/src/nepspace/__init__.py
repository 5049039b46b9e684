"""Interpolatory subspace methods for rational and nonlinear eigenvalue problems.

The two entry points are :func:`solve_rep` for ``R(s) = P(s) + C (sI - A)^{-1} B``
and :func:`solve_nep` for split-form problems ``T(s) = sum_j f_j(s) T_j``.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DecompositionError,
    IncreaseProbes,
    MatrixMarketError,
    NepspaceError,
    NoConvergence,
    PoleError,
    ReducedSpectrumEmpty,
    SingularMatrixError,
)
from .nep import PartitionedNEP, ScalarFn, SplitNEP, fn_derivs, residual_split, solve_chain  # noqa: E402
from .nep_solver import solve_nep  # noqa: E402
from .oracle import oracle_nep, oracle_rep, oracle_scalar_root  # noqa: E402
from .rational import (  # noqa: E402
    PartialFractionREP,
    RationalTerm,
    StateSpaceREP,
    build_linearization,
    eval_R,
    realize,
    residual_rational,
)
from .report import EigEstimate, Mode, SolveReport, Strategy  # noqa: E402
from .rep_solver import solve_rep  # noqa: E402

__all__ = [
    "DecompositionError",
    "EigEstimate",
    "IncreaseProbes",
    "MatrixMarketError",
    "Mode",
    "NepspaceError",
    "NoConvergence",
    "PartialFractionREP",
    "PartitionedNEP",
    "PoleError",
    "RationalTerm",
    "ReducedSpectrumEmpty",
    "ScalarFn",
    "SingularMatrixError",
    "SolveReport",
    "SplitNEP",
    "StateSpaceREP",
    "Strategy",
    "build_linearization",
    "eval_R",
    "fn_derivs",
    "oracle_nep",
    "oracle_rep",
    "oracle_scalar_root",
    "realize",
    "residual_rational",
    "residual_split",
    "solve_chain",
    "solve_nep",
    "solve_rep",
]
