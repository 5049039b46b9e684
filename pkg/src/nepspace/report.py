"""Result records shared by the rational and nonlinear solvers."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Strategy(str, Enum):
    """How the next interpolation points are picked from the candidates.

    ALL
        every unconverged candidate among the ``k`` closest;
    BR
        the unconverged candidate with the smallest residual;
    WR
        the unconverged candidate with the largest residual.
    """

    ALL = "ALL"
    BR = "BR"
    WR = "WR"


class Mode(str, Enum):
    TWO_SIDED = "two-sided"
    ONE_SIDED = "one-sided"


@dataclass
class EigEstimate:
    """A Ritz pair lifted to the full problem."""

    lam: complex
    v_reduced: np.ndarray
    v_full: np.ndarray
    residual: float
    converged: bool


@dataclass
class IterationRecord:
    iter: int
    points: list
    candidates: list
    residuals: list
    subdim: int
    nfact: int
    elapsed: float
    selected: list = field(default_factory=list)
    pole_shifts: list = field(default_factory=list)


@dataclass
class SolveReport:
    """Everything a solver run produced.

    ``iterations[i].candidates`` are the ``k`` closest admissible reduced
    eigenvalues after the ``i``-th expansion; ``selected`` are the ones chosen
    as interpolation points for the next expansion.  ``V`` and ``W`` are the
    final projection bases, so every estimate can be re-checked from scratch.
    """

    tau: complex
    k_eigs: int
    strategy: Strategy
    mode: Mode
    estimates: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    converged: bool = False
    message: str = ""
    counts: dict = field(default_factory=dict)
    permutation: object = None
    V: np.ndarray = None
    W: np.ndarray = None

    @property
    def eigenvalues(self):
        return np.array([e.lam for e in self.estimates], dtype=complex)

    @property
    def residuals(self):
        return np.array([e.residual for e in self.estimates])

    @property
    def niter(self):
        return len(self.iterations)

    def residual_history(self):
        """Residuals per iteration, one row per iteration (ragged rows padded with nan)."""
        width = max((len(r.residuals) for r in self.iterations), default=0)
        out = np.full((len(self.iterations), width), np.nan)
        for i, rec in enumerate(self.iterations):
            out[i, : len(rec.residuals)] = rec.residuals
        return out


def closeness_key(tau):
    """Sort key: distance to ``tau``, then real part, then imaginary part."""

    def key(lam):
        lam = complex(lam)
        return (abs(lam - tau), lam.real, lam.imag)

    return key


def select_points(candidates, residuals, tol, strategy):
    """Indices of the candidates used as the next interpolation points."""
    unconverged = [i for i, r in enumerate(residuals) if not r < tol]
    if not unconverged:
        return []
    strategy = Strategy(strategy)
    if strategy is Strategy.ALL:
        return unconverged
    if strategy is Strategy.BR:
        return [min(unconverged, key=lambda i: (residuals[i], i))]
    return [max(unconverged, key=lambda i: (residuals[i], -i))]
