"""Run configuration files (YAML or JSON).

Complex numbers are written as ``[re, im]`` pairs (a bare real number is
also accepted).  Matrix paths are Matrix Market files, resolved relative to
the directory holding the configuration.

Example::

    problem:
      kind: rational-statespace
      A: A.mtx
      B: B.mtx
      C: C.mtx
    target: [0.5, 0.0]
    num_eigs: 3
    strategy: ALL
    tol: 1.0e-10
"""

from pathlib import Path
from typing import Annotated, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, ValidationInfo, field_validator, model_validator

from .nep import ScalarFn, SplitNEP
from .rational import PartialFractionREP, RationalTerm, StateSpaceREP, realize
from .report import Mode, Strategy
from .sparse import read_dense, read_matrix_market


def _to_complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError("complex numbers must be [re, im] pairs")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, bool):
        raise ValueError("expected a number")
    if isinstance(v, (int, float, complex)):
        return complex(v)
    raise ValueError("expected a number or an [re, im] pair")


Complex = Annotated[complex, BeforeValidator(_to_complex), PlainSerializer(lambda z: [z.real, z.imag], return_type=list)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_path(v, info: ValidationInfo):
    if v is None:
        return v
    base = Path((info.context or {}).get("base", "."))
    p = Path(v)
    if not p.is_absolute():
        p = base / p
    if not p.is_file():
        raise ValueError(f"file not found: {p}")
    return str(p)


MatrixPath = Annotated[str, Field(min_length=1)]


class FunctionSpec(_Strict):
    kind: Literal["monomial", "constant", "exponential", "sqrt", "rational"]
    coef: Complex = 1.0
    power: int = Field(0, ge=0)
    alpha: Complex = 0.0
    shift: Complex = 0.0
    num: list[Complex] = []
    den: list[Complex] = []

    def build(self):
        return ScalarFn(self.kind, coef=self.coef, power=self.power, alpha=self.alpha, shift=self.shift,
                        num=tuple(self.num), den=tuple(self.den))


class SplitTerm(_Strict):
    fn: FunctionSpec
    matrix: MatrixPath

    @field_validator("matrix")
    @classmethod
    def _path(cls, v, info: ValidationInfo):
        return _check_path(v, info)


class FractionTerm(_Strict):
    num: list[Complex]
    den: list[Complex]
    L: MatrixPath
    U: MatrixPath

    @field_validator("L", "U")
    @classmethod
    def _paths(cls, v, info: ValidationInfo):
        return _check_path(v, info)


class ProblemSpec(_Strict):
    kind: Literal["rational-statespace", "rational-partialfraction", "split-nep"]
    A: Optional[MatrixPath] = None
    B: Optional[MatrixPath] = None
    C: Optional[MatrixPath] = None
    P: list[MatrixPath] = []
    fractions: list[FractionTerm] = []
    terms: list[SplitTerm] = []

    @field_validator("A", "B", "C")
    @classmethod
    def _paths(cls, v, info: ValidationInfo):
        return _check_path(v, info)

    @field_validator("P")
    @classmethod
    def _p_paths(cls, v, info: ValidationInfo):
        return [_check_path(p, info) for p in v]

    @model_validator(mode="after")
    def _complete(self):
        if self.kind == "rational-statespace" and None in (self.A, self.B, self.C):
            raise ValueError("rational-statespace problems need A, B and C")
        if self.kind == "rational-partialfraction" and not self.fractions:
            raise ValueError("rational-partialfraction problems need at least one entry in 'fractions'")
        if self.kind == "split-nep" and not self.terms:
            raise ValueError("split-nep problems need at least one entry in 'terms'")
        return self

    @property
    def is_rational(self):
        return self.kind != "split-nep"

    def build(self):
        """The problem object: a StateSpaceREP or a SplitNEP."""
        P = tuple(read_dense(p) for p in self.P)
        if self.kind == "rational-statespace":
            return StateSpaceREP(A=read_matrix_market(self.A), B=read_dense(self.B), C=read_dense(self.C), P=P)
        if self.kind == "rational-partialfraction":
            terms = tuple(
                RationalTerm(np.array(t.num), np.array(t.den), read_dense(t.L), read_dense(t.U)) for t in self.fractions
            )
            return realize(PartialFractionREP(terms, P))
        return SplitNEP(tuple((t.fn.build(), read_matrix_market(t.matrix)) for t in self.terms))


class InitSpec(_Strict):
    points: Optional[list[Complex]] = None
    radius: float = Field(1.0, gt=0)


class RunConfig(_Strict):
    problem: ProblemSpec
    target: Complex
    num_eigs: int = Field(1, ge=1)
    strategy: Strategy = Strategy.ALL
    mode: Mode = Mode.TWO_SIDED
    q: Optional[int] = None
    m: int = Field(2, ge=1)
    tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(50, ge=1)
    seed: int = 0
    init: InitSpec = InitSpec()
    filter_tol: float = Field(1e-8, gt=0)
    perm: Optional[list[int]] = None
    embedded_norm: bool = False
    out: str = "out"

    @model_validator(mode="after")
    def _check_q(self):
        need = 2 if self.mode is Mode.TWO_SIDED else 3
        if self.q is not None and self.q < need:
            raise ValueError(f"q must be at least {need} in {self.mode.value} mode")
        return self

    @property
    def q_effective(self):
        if self.q is not None:
            return self.q
        return 2 if self.mode is Mode.TWO_SIDED else 3


def load_config(path):
    """Parse and validate a configuration file; raises pydantic.ValidationError."""
    path = Path(path)
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return RunConfig.model_validate(data, context={"base": str(path.parent)})
