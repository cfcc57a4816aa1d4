"""Projection families, invariance and the compatibility regimes."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .basespace import BasePoint
from .core import (AxiomReport, GridSpec, NormKind, REL_FLOOR, SkewEvolution,
                   _Worst, norm)
from .errors import DimensionError, EmptyGridError, FamilyCountError, IndexKindError


class Indexing(str, enum.Enum):
    POINT = "point"
    TIME = "time"


class ProjKind(str, enum.Enum):
    COORDINATE = "coordinate"
    ZERO = "zero"
    IDENTITY = "identity"
    COMPLEMENT_OF = "complement_of"
    PRODUCT_OF = "product_of"
    SCHEDULED = "scheduled"


@dataclass(frozen=True)
class ProjectionFamily:
    """An index-dependent projection on R^dim.

    Coordinates are 1-based. ``SCHEDULED`` families pick their kept
    coordinates from ``schedule(index)``; ``PRODUCT_OF`` is ``refs[0] @ refs[1]``.
    """

    kind: ProjKind
    indexing: Indexing = Indexing.POINT
    coords: frozenset = frozenset()
    refs: tuple = ()
    schedule: Optional[Callable] = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", ProjKind(self.kind))
        object.__setattr__(self, "indexing", Indexing(self.indexing))
        object.__setattr__(self, "coords", frozenset(int(c) for c in self.coords))
        if any(c < 1 for c in self.coords):
            raise ValueError("coordinates are 1-based")

    def matrix(self, index, dim: int) -> np.ndarray:
        if self.kind is ProjKind.ZERO:
            return np.zeros((dim, dim))
        if self.kind is ProjKind.IDENTITY:
            return np.eye(dim)
        if self.kind in (ProjKind.COORDINATE, ProjKind.SCHEDULED):
            keep = self.coords if self.kind is ProjKind.COORDINATE else frozenset(self.schedule(index))
            if any(c > dim for c in keep):
                raise DimensionError(f"coordinate set {sorted(keep)} exceeds dimension {dim}")
            diag = np.zeros(dim)
            for c in keep:
                diag[c - 1] = 1.0
            return np.diag(diag)
        if self.kind is ProjKind.COMPLEMENT_OF:
            return np.eye(dim) - self.refs[0].matrix(index, dim)
        a, b = self.refs
        return a.matrix(index, dim) @ b.matrix(index, dim)

    def describe(self) -> str:
        if self.name:
            return self.name
        if self.kind is ProjKind.COORDINATE:
            return "COORD{" + ",".join(str(c) for c in sorted(self.coords)) + "}"
        if self.kind is ProjKind.COMPLEMENT_OF:
            return f"I-{self.refs[0].describe()}"
        if self.kind is ProjKind.PRODUCT_OF:
            return f"{self.refs[0].describe()}*{self.refs[1].describe()}"
        return self.kind.value.upper()

    def reindexed(self, indexing: Indexing) -> "ProjectionFamily":
        """Same family read with the other index kind (only for index-free kinds)."""
        refs = tuple(r.reindexed(indexing) for r in self.refs)
        return ProjectionFamily(self.kind, indexing, self.coords, refs, self.schedule, self.name)


def coord(*coords, indexing: Indexing = Indexing.POINT) -> ProjectionFamily:
    return ProjectionFamily(ProjKind.COORDINATE, indexing, frozenset(coords))


def zero(indexing: Indexing = Indexing.POINT) -> ProjectionFamily:
    return ProjectionFamily(ProjKind.ZERO, indexing)


def identity(indexing: Indexing = Indexing.POINT) -> ProjectionFamily:
    return ProjectionFamily(ProjKind.IDENTITY, indexing)


def product(a: ProjectionFamily, b: ProjectionFamily) -> ProjectionFamily:
    if a.indexing is not b.indexing:
        raise IndexKindError("cannot multiply families with different indexing")
    return ProjectionFamily(ProjKind.PRODUCT_OF, a.indexing, refs=(a, b))


def _index_free(P: ProjectionFamily) -> bool:
    if P.kind is ProjKind.SCHEDULED:
        return False
    return all(_index_free(r) for r in P.refs)


def as_indexing(P: ProjectionFamily, indexing: Indexing) -> ProjectionFamily:
    """Return ``P`` read with ``indexing``; constant families convert freely."""
    if P.indexing is Indexing(indexing):
        return P
    if not _index_free(P):
        raise IndexKindError(f"{P.describe()} is {P.indexing.value}-indexed and cannot be re-read")
    return P.reindexed(indexing)


def _check_index(P: ProjectionFamily, index) -> None:
    if P.indexing is Indexing.POINT and not isinstance(index, BasePoint):
        raise IndexKindError("point-indexed family needs a BasePoint index")
    if P.indexing is Indexing.TIME and isinstance(index, BasePoint):
        raise IndexKindError("time-indexed family needs a real index")


def apply_projection(P: ProjectionFamily, index, v) -> np.ndarray:
    _check_index(P, index)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionError("expected a vector")
    return P.matrix(index, v.shape[0]) @ v


def complementary_projector(P: ProjectionFamily, dim: Optional[int] = None) -> ProjectionFamily:
    """``v -> v - P v``; simplified to a closed kind whenever possible."""
    if P.kind is ProjKind.ZERO:
        return identity(P.indexing)
    if P.kind is ProjKind.IDENTITY:
        return zero(P.indexing)
    if P.kind is ProjKind.COMPLEMENT_OF:
        return P.refs[0]
    if P.kind is ProjKind.COORDINATE and dim is not None:
        return ProjectionFamily(ProjKind.COORDINATE, P.indexing, frozenset(range(1, dim + 1)) - P.coords)
    return ProjectionFamily(ProjKind.COMPLEMENT_OF, P.indexing, refs=(P,))


# --------------------------------------------------------------------------
# invariance
# --------------------------------------------------------------------------


def _rel(lhs, rhs, kind) -> float:
    scale = max(norm(lhs, kind), norm(rhs, kind), REL_FLOOR)
    return norm(lhs - rhs, kind) / scale


def _points(xi: SkewEvolution, grid: GridSpec, x0: Optional[BasePoint]) -> list:
    return [x0] if x0 is not None else grid.points(xi.spaces)


def check_invariance(P: ProjectionFamily, xi: SkewEvolution, grid: GridSpec,
                     x0: Optional[BasePoint] = None, norm_kind: NormKind = NormKind.L2) -> AxiomReport:
    """Relative gap between the two sides of the invariance identity.

    Point-indexed: ``P(psi(t,s,x)) Psi(t,s,x) v = Psi(t,s,x) P(x) v``.
    Time-indexed:  ``P(t+s) Psi(t,s,psi(t,s,x)) v = Psi(t,s,psi(t,s,x)) P(s) v``.
    """
    grid.require_nonempty()
    dim = xi.dimension
    probes = grid.probe_vectors(dim)
    worst = _Worst()
    for x in _points(xi, grid, x0):
        for t, s in grid.pairs():
            if P.indexing is Indexing.POINT:
                psi_mult = np.exp(xi.log_Psi(t, s, x))
                left_P, right_P = P.matrix(xi.psi(t, s, x), dim), P.matrix(x, dim)
            else:
                psi_mult = np.exp(xi.log_Psi_along(t, s, x))
                left_P, right_P = P.matrix(t + s, dim), P.matrix(s, dim)
            for k, v in enumerate(probes):
                lhs = left_P @ (psi_mult * v)
                rhs = psi_mult * (right_P @ v)
                worst.update(_rel(lhs, rhs, norm_kind), t=t, s=s, x=x.label(), probe=k)
    return AxiomReport("invariance", worst.value, worst.where, grid.tol)


# --------------------------------------------------------------------------
# compatibility
# --------------------------------------------------------------------------


class Regime(str, enum.Enum):
    THREE_GLOBAL = "three_global"
    THREE_POINTWISE = "three_pointwise"
    TWO = "two"
    FOUR = "four"


FAMILY_COUNT = {Regime.THREE_GLOBAL: 3, Regime.THREE_POINTWISE: 3, Regime.TWO: 2, Regime.FOUR: 4}


@dataclass
class CompatibilityReport:
    regime: Regime
    residuals: dict
    norm_kind: NormKind
    tolerance: float
    witnesses: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = all(r <= self.tolerance for r in self.residuals.values())

    def to_dict(self) -> dict:
        return {
            "regime": Regime(self.regime).value,
            "norm": NormKind(self.norm_kind).value,
            "residuals": dict(self.residuals),
            "witnesses": self.witnesses,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


class _Cond:
    """Running max of one labelled condition."""

    def __init__(self, labels):
        self.w = {lab: _Worst() for lab in labels}

    def add(self, label, r, **where):
        self.w[label].update(r, **where)

    def residuals(self):
        return {lab: w.value for lab, w in self.w.items()}

    def witnesses(self):
        return {lab: w.where for lab, w in self.w.items()}


def _pyth(a, b, kind) -> float:
    """``| ||a + b||^2 - ||a||^2 - ||b||^2 |``."""
    return abs(norm(a + b, kind) ** 2 - norm(a, kind) ** 2 - norm(b, kind) ** 2)


def _time_indices(grid: GridSpec) -> list:
    ts = set()
    for t, s in grid.pairs():
        ts.update({t, s, t + s})
    return sorted(ts)


def check_compatibility(regime, families: Sequence[ProjectionFamily], xi: SkewEvolution, grid: GridSpec,
                        x0: Optional[BasePoint] = None, norm_kind: NormKind = NormKind.L2) -> CompatibilityReport:
    """Evaluate every labelled condition of a compatibility regime.

    Family order: ``(P0, P1, P2)`` for the three-family regimes,
    ``(Q1, Q2)`` for TWO and ``(R1, R2, R3, R4)`` for FOUR.
    """
    regime = Regime(regime)
    families = tuple(families)
    if len(families) != FAMILY_COUNT[regime]:
        raise FamilyCountError(f"{regime.value} needs {FAMILY_COUNT[regime]} families, got {len(families)}")
    want = Indexing.POINT if regime is Regime.THREE_GLOBAL else Indexing.TIME
    families = tuple(as_indexing(P, want) for P in families)
    grid.require_nonempty()
    dim = xi.dimension
    probes = grid.probe_vectors(dim)
    if regime is Regime.THREE_GLOBAL:
        indices = grid.points(xi.spaces) if x0 is None else [x0]
    else:
        indices = _time_indices(grid)
    I = np.eye(dim)

    def inv(P):
        return check_invariance(P, xi, grid, x0=x0, norm_kind=norm_kind)

    if regime in (Regime.THREE_GLOBAL, Regime.THREE_POINTWISE):
        labels = ("c1", "c2") if regime is Regime.THREE_GLOBAL else ("cp1", "cp2", "cp3")
        cond = _Cond(labels)
        for P in families:
            rep = inv(P)
            cond.add(labels[0], rep.max_residual, family=P.describe(), **(rep.worst_case or {}))
        for idx in indices:
            mats = [P.matrix(idx, dim) for P in families]
            where = {"index": idx.label() if isinstance(idx, BasePoint) else idx}
            for k, v in enumerate(probes):
                cond.add(labels[1], norm(sum(mats) @ v - v, norm_kind), probe=k, **where)
                for i, j in itertools.permutations(range(3), 2):
                    cond.add(labels[1], norm(mats[i] @ (mats[j] @ v), norm_kind), probe=k, pair=[i, j], **where)
                    if regime is Regime.THREE_POINTWISE:
                        cond.add("cp3", _pyth(mats[i] @ v, mats[j] @ v, norm_kind), probe=k, pair=[i, j], **where)
    elif regime is Regime.TWO:
        cond = _Cond(("cq1", "cq2", "cq3", "cq4", "cq5"))
        for idx in indices:
            q1, q2 = (P.matrix(idx, dim) for P in families)
            for k, v in enumerate(probes):
                w = dict(index=idx, probe=k)
                cond.add("cq1", max(norm(q1 @ q2 @ v, norm_kind), norm(q2 @ q1 @ v, norm_kind)), **w)
                cond.add("cq2", _pyth(q1 @ v, q2 @ v, norm_kind), **w)
                rest = (I - q1 - q2) @ v
                cond.add("cq3", abs(norm((I - q1) @ v, norm_kind) ** 2 - norm(rest, norm_kind) ** 2
                                    - norm(q2 @ v, norm_kind) ** 2), **w)
                cond.add("cq4", abs(norm((I - q2) @ v, norm_kind) ** 2 - norm(rest, norm_kind) ** 2
                                    - norm(q1 @ v, norm_kind) ** 2), **w)
        for P in families:
            rep = inv(P)
            cond.add("cq5", rep.max_residual, family=P.describe(), **(rep.worst_case or {}))
    else:
        cond = _Cond(("cr1", "cr2", "cr3", "cr4", "cr5", "cr6"))
        for idx in indices:
            r1, r2, r3, r4 = (P.matrix(idx, dim) for P in families)
            r34 = r3 @ r4
            for k, v in enumerate(probes):
                w = dict(index=idx, probe=k)
                cond.add("cr1", max(norm((r1 + r3) @ v - v, norm_kind), norm((r2 + r4) @ v - v, norm_kind)), **w)
                cond.add("cr2", max(norm(r1 @ r2 @ v, norm_kind), norm(r2 @ r1 @ v, norm_kind),
                                    norm(r34 @ v - r4 @ r3 @ v, norm_kind)), **w)
                cond.add("cr3", _pyth(r1 @ v, r2 @ v, norm_kind), **w)
                cond.add("cr4", _pyth(r1 @ v, r34 @ v, norm_kind), **w)
                cond.add("cr5", _pyth(r2 @ v, r34 @ v, norm_kind), **w)
        for P in families:
            rep = inv(P)
            cond.add("cr6", rep.max_residual, family=P.describe(), **(rep.worst_case or {}))
    return CompatibilityReport(regime, cond.residuals(), NormKind(norm_kind), grid.tol, cond.witnesses())


def require_compatible(regime, families, xi, grid, x0=None, norm_kind=NormKind.L2) -> CompatibilityReport:
    from .errors import IncompatibleFamiliesError

    rep = check_compatibility(regime, families, xi, grid, x0=x0, norm_kind=norm_kind)
    if not rep.passed:
        bad = sorted(k for k, r in rep.residuals.items() if r > rep.tolerance)
        raise IncompatibleFamiliesError(f"{Regime(regime).value} compatibility fails on {bad}", rep)
    return rep
