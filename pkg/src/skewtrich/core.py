"""Time domain, semiflow/cocycle evaluation and axiom sweeps."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .basespace import BasePoint, BaseSpace, metric_d
from .closed_form import point_log_growth
from .errors import DimensionError, DomainError, EmptyGridError, TimeOrderError

REL_FLOOR = 1e-300
DEFAULT_TOL = 1e-9


# --------------------------------------------------------------------------
# time and state
# --------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class TimePair:
    t: float
    t0: float

    def __post_init__(self):
        check_times(self.t, self.t0)

    @property
    def gap(self) -> float:
        return self.t - self.t0


def check_times(t: float, t0: float) -> None:
    if not (math.isfinite(t) and math.isfinite(t0)):
        raise TimeOrderError(f"times must be finite, got ({t}, {t0})")
    if t0 < 0:
        raise TimeOrderError(f"times must be nonnegative, got t0={t0}")
    if t < t0:
        raise TimeOrderError(f"need t >= t0, got t={t}, t0={t0}")


class NormKind(str, enum.Enum):
    L1 = "L1"
    L2 = "L2"


def norm(v, kind: NormKind = NormKind.L2) -> float:
    v = np.asarray(v, dtype=float)
    if NormKind(kind) is NormKind.L1:
        return float(np.abs(v).sum())
    return float(np.sqrt(np.dot(v, v)))


def log_norm(log_mult, v, kind: NormKind = NormKind.L2) -> float:
    """``log || diag(exp(log_mult)) v ||`` without forming the exponentials.

    Returns ``-inf`` for a zero result.
    """
    v = np.abs(np.asarray(v, dtype=float))
    nz = v > 0
    if not nz.any():
        return -math.inf
    terms = np.asarray(log_mult, dtype=float)[nz] + np.log(v[nz])
    if NormKind(kind) is NormKind.L1:
        return float(np.logaddexp.reduce(terms))
    return 0.5 * float(np.logaddexp.reduce(2.0 * terms))


# --------------------------------------------------------------------------
# semiflow
# --------------------------------------------------------------------------


def _identity_offset(gap: float) -> float:
    return gap


@dataclass(frozen=True)
class SemiflowSpec:
    """Shift semiflow ``psi(t, s, x) = x_{offset(t - s)}``.

    ``offset`` is the identity for the genuine shift semiflow; other choices
    exist only to exercise the axiom checks.
    """

    spaces: tuple
    offset: Callable[[float], float] = _identity_offset
    kind: str = "SHIFT"

    def __post_init__(self):
        if isinstance(self.spaces, BaseSpace):
            object.__setattr__(self, "spaces", (self.spaces,))
        else:
            object.__setattr__(self, "spaces", tuple(self.spaces))

    def contains(self, x: BasePoint) -> bool:
        return x.space in self.spaces


def eval_semiflow(spec: SemiflowSpec, t: float, s: float, x: BasePoint) -> BasePoint:
    check_times(t, s)
    if not spec.contains(x):
        raise DomainError(f"{x.label()} is not in the semiflow's base space")
    off = spec.offset(t - s)
    if off == 0:
        return x
    return x.shifted(off)


# --------------------------------------------------------------------------
# cocycle
# --------------------------------------------------------------------------


class LawKind(str, enum.Enum):
    PLUS_X = "+x"
    MINUS_X = "-x"
    RATE_PLUS_X = "-mu+x"
    NEUTRAL = "-x(0)+x"


class Anchor(str, enum.Enum):
    # x(0) read at the start of the orbit the point lies on (fixed along psi)
    ORBIT = "orbit"
    # x(0) read at the point itself (re-read after every shift)
    POINT = "point"


@dataclass(frozen=True)
class ComponentLaw:
    kind: LawKind
    mu: float = 0.0
    anchor: Anchor = Anchor.ORBIT

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        object.__setattr__(self, "anchor", Anchor(self.anchor))
        if self.kind is LawKind.RATE_PLUS_X and not self.mu > 0:
            raise ValueError(f"law -mu+x needs mu > 0, got {self.mu}")

    def exponent(self, gap: float, x: BasePoint) -> float:
        g = point_log_growth(x, gap)
        if self.kind is LawKind.PLUS_X:
            return g
        if self.kind is LawKind.MINUS_X:
            return -g
        if self.kind is LawKind.RATE_PLUS_X:
            return -self.mu * gap + g
        return -gap * anchor_value(x, self.anchor) + g

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is LawKind.RATE_PLUS_X:
            d["mu"] = self.mu
        if self.kind is LawKind.NEUTRAL:
            d["anchor"] = self.anchor.value
        return d


def anchor_value(x: BasePoint, anchor: Anchor) -> float:
    if anchor is Anchor.POINT or x.is_limit:
        return float(x(0.0))
    return float(x.space.generator(0.0))


@dataclass(frozen=True)
class CocycleSpec:
    laws: tuple

    def __post_init__(self):
        laws = tuple(self.laws)
        if not laws:
            raise DimensionError("cocycle needs at least one component")
        object.__setattr__(self, "laws", laws)

    @property
    def dimension(self) -> int:
        return len(self.laws)

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "laws": [law.to_dict() for law in self.laws]}


def log_multipliers(spec: CocycleSpec, t: float, t0: float, x: BasePoint) -> np.ndarray:
    """Log of the diagonal entries of ``Psi(t, t0, x)``."""
    check_times(t, t0)
    gap = t - t0
    return np.array([law.exponent(gap, x) for law in spec.laws])


def eval_cocycle(spec: CocycleSpec, t: float, t0: float, x: BasePoint, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.dimension,):
        raise DimensionError(f"expected a vector of length {spec.dimension}, got shape {v.shape}")
    return np.exp(log_multipliers(spec, t, t0, x)) * v


# --------------------------------------------------------------------------
# sampling plan
# --------------------------------------------------------------------------


def default_probes(dim: int, seed: int = 0, n_random: int = 8) -> np.ndarray:
    """All nonzero 0/1 indicator vectors (basis included) plus seeded random unit vectors."""
    rows = [np.array(bits, dtype=float) for bits in itertools.product((0.0, 1.0), repeat=dim) if any(bits)]
    rows.sort(key=lambda r: (r.sum(), tuple(-r)))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        w = rng.standard_normal(dim)
        rows.append(w / np.linalg.norm(w))
    return np.vstack(rows)


@dataclass(frozen=True)
class GridSpec:
    """Finite sampling plan.

    Triples are ``t0 in t0_values``, ``s = t0 + a``, ``t = s + b`` for
    ``a in s_gaps``, ``b in t_gaps``.
    """

    t0_values: tuple = (0.0, 1.0, 2.0)
    s_gaps: tuple = (0.0, 0.5, 1.0, 2.0, 5.0)
    t_gaps: tuple = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    shifts: tuple = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0)
    include_limit: bool = True
    probes: Optional[np.ndarray] = field(default=None, compare=False)
    tol: float = DEFAULT_TOL
    tau_step: float = 0.01
    depth: int = 20
    seed: int = 0

    def __post_init__(self):
        for name in ("t0_values", "s_gaps", "t_gaps", "shifts"):
            vals = tuple(float(v) for v in getattr(self, name))
            if any(v < 0 or not math.isfinite(v) for v in vals):
                raise ValueError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, vals)

    def is_empty(self) -> bool:
        return not (self.t0_values and self.s_gaps and self.t_gaps)

    def require_nonempty(self) -> None:
        if self.is_empty():
            raise EmptyGridError("grid has no time samples")

    def triples(self) -> Iterator[tuple]:
        for t0 in self.t0_values:
            for a in self.s_gaps:
                for b in self.t_gaps:
                    s = t0 + a
                    yield (s + b, s, t0)

    def pairs(self) -> list:
        """All ``(t, t0)`` pairs occurring inside the triples."""
        out = set()
        for t, s, t0 in self.triples():
            out.update({(t, t0), (s, t0), (t, s)})
        return sorted(out, key=lambda p: (p[1], p[0]))

    def gaps(self) -> list:
        return sorted({t - t0 for t, t0 in self.pairs()})

    def probe_vectors(self, dim: int) -> np.ndarray:
        if self.probes is not None:
            p = np.atleast_2d(np.asarray(self.probes, dtype=float))
            if p.shape[1] != dim:
                raise DimensionError(f"probe vectors have length {p.shape[1]}, expected {dim}")
            return p
        return default_probes(dim, seed=self.seed)

    def points(self, spaces: Sequence[BaseSpace]) -> list:
        pts = []
        for space in spaces:
            pts.extend(space.sample_points(self.shifts, self.include_limit))
        return pts

    def echo(self) -> dict:
        return {
            "t0_values": list(self.t0_values),
            "s_gaps": list(self.s_gaps),
            "t_gaps": list(self.t_gaps),
            "shifts": list(self.shifts),
            "include_limit": self.include_limit,
            "tol": self.tol,
            "tau_step": self.tau_step,
            "depth": self.depth,
            "seed": self.seed,
        }


FINE_GAPS = (0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)

GRID_PRESETS = {
    "small": dict(t0_values=(0.0, 1.0), s_gaps=(0.0, 1.0, 2.0), t_gaps=(0.0, 1.0, 5.0), shifts=(0.0, 1.0, 5.0)),
    "default": {},
    "dense": dict(t0_values=(0.0, 1.0, 2.0), s_gaps=FINE_GAPS[:8], t_gaps=FINE_GAPS, shifts=(0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0)),
}


def grid_preset(name: str = "default", **overrides) -> GridSpec:
    if name not in GRID_PRESETS:
        raise ValueError(f"unknown grid preset {name!r}; choose from {sorted(GRID_PRESETS)}")
    kw = dict(GRID_PRESETS[name])
    kw.update(overrides)
    return GridSpec(**kw)


# --------------------------------------------------------------------------
# axiom sweeps
# --------------------------------------------------------------------------


class Law(str, enum.Enum):
    ES1 = "ES1"
    ES2 = "ES2"
    EC1 = "EC1"
    EC2 = "EC2"


@dataclass
class AxiomReport:
    law: Law
    max_residual: float
    worst_case: Optional[dict]
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.max_residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "law": Law(self.law).value,
            "max_residual": self.max_residual,
            "worst_case": self.worst_case,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


class _Worst:
    def __init__(self):
        self.value = 0.0
        self.where = None

    def update(self, r: float, **where):
        if self.where is None or r > self.value:
            self.value = max(self.value, float(r))
            self.where = where


def _point_distance(a: BasePoint, b: BasePoint, grid: GridSpec) -> float:
    if a == b:
        return 0.0
    return metric_d(a, b, depth=grid.depth, tau_step=grid.tau_step)[0]


def check_semiflow_axioms(spec: SemiflowSpec, grid: GridSpec) -> dict:
    """Residuals of ``psi(t,t,x) = x`` and of the two-step composition law."""
    grid.require_nonempty()
    pts = grid.points(spec.spaces)
    if not pts:
        raise EmptyGridError("grid has no base points")
    es1, es2 = _Worst(), _Worst()
    times = sorted({t for trip in grid.triples() for t in trip})
    for x in pts:
        for t in times:
            es1.update(_point_distance(eval_semiflow(spec, t, t, x), x, grid), t=t, x=x.label())
        for t, s, t0 in grid.triples():
            lhs = eval_semiflow(spec, t, s, eval_semiflow(spec, s, t0, x))
            rhs = eval_semiflow(spec, t, t0, x)
            es2.update(_point_distance(lhs, rhs, grid), t=t, s=s, t0=t0, x=x.label())
    return {
        Law.ES1: AxiomReport(Law.ES1, es1.value, es1.where, grid.tol),
        Law.ES2: AxiomReport(Law.ES2, es2.value, es2.where, grid.tol),
    }


def _rel_gap(lhs: np.ndarray, rhs: np.ndarray, kind: NormKind) -> float:
    scale = max(norm(lhs, kind), norm(rhs, kind), REL_FLOOR)
    return norm(lhs - rhs, kind) / scale


def check_cocycle_axioms(cocycle: CocycleSpec, semiflow: SemiflowSpec, grid: GridSpec,
                         norm_kind: NormKind = NormKind.L2) -> dict:
    """Residuals of ``Psi(t,t,x) = I`` and of the cocycle composition law.

    Both residuals are relative to the size of the compared vectors, since
    multipliers range over many orders of magnitude.
    """
    grid.require_nonempty()
    probes = grid.probe_vectors(cocycle.dimension)
    if probes.size == 0:
        raise EmptyGridError("grid has no probe vectors")
    pts = grid.points(semiflow.spaces)
    ec1, ec2 = _Worst(), _Worst()
    times = sorted({t for trip in grid.triples() for t in trip})
    for x in pts:
        for t in times:
            for k, v in enumerate(probes):
                ec1.update(_rel_gap(eval_cocycle(cocycle, t, t, x, v), v, norm_kind), t=t, x=x.label(), probe=k)
        for t, s, t0 in grid.triples():
            direct = np.exp(log_multipliers(cocycle, t, t0, x))
            step = (np.exp(log_multipliers(cocycle, t, s, eval_semiflow(semiflow, s, t0, x)))
                    * np.exp(log_multipliers(cocycle, s, t0, x)))
            for k, v in enumerate(probes):
                ec2.update(_rel_gap(direct * v, step * v, norm_kind), t=t, s=s, t0=t0, x=x.label(), probe=k)
    return {
        Law.EC1: AxiomReport(Law.EC1, ec1.value, ec1.where, grid.tol),
        Law.EC2: AxiomReport(Law.EC2, ec2.value, ec2.where, grid.tol),
    }


# --------------------------------------------------------------------------
# the pair (psi, Psi)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SkewEvolution:
    """A skew-evolution semiflow: the base semiflow and the cocycle over it."""

    semiflow: SemiflowSpec
    cocycle: CocycleSpec

    @property
    def dimension(self) -> int:
        return self.cocycle.dimension

    @property
    def spaces(self) -> tuple:
        return self.semiflow.spaces

    def psi(self, t: float, s: float, x: BasePoint) -> BasePoint:
        return eval_semiflow(self.semiflow, t, s, x)

    def log_Psi(self, t: float, t0: float, x: BasePoint) -> np.ndarray:
        return log_multipliers(self.cocycle, t, t0, x)

    def log_Psi_along(self, t: float, t0: float, x0: BasePoint) -> np.ndarray:
        """``log Psi(t, t0, psi(t, t0, x0))``, the orbit-evaluated form used pointwise."""
        return log_multipliers(self.cocycle, t, t0, self.psi(t, t0, x0))

    def __call__(self, t: float, s: float, x: BasePoint, v):
        return self.psi(t, s, x), eval_cocycle(self.cocycle, t, s, x, v)


def orbit_exponents(cocycle: CocycleSpec, x0: BasePoint, gaps) -> np.ndarray:
    """Vectorised ``log Psi(t0 + a, t0, psi(t0 + a, t0, x0))`` over an array of gaps ``a``.

    Shape ``(dimension, len(gaps))``. Relies on the closed form
    ``int_0^a g(shift + a + u) du = L a + A e^{-(shift + a)} (1 - e^{-a})``.
    """
    a = np.atleast_1d(np.asarray(gaps, dtype=float))
    if np.any(a < 0):
        raise TimeOrderError("gaps must be nonnegative")
    gen = x0.space.generator
    if x0.is_limit:
        growth = gen.level * a
        here = np.full(a.shape, gen.level)
    else:
        start = x0.shift + a
        growth = gen.level * a + gen.amplitude * np.exp(-start) * -np.expm1(-a)
        here = gen.level + gen.amplitude * np.exp(-start)
    rows = []
    for law in cocycle.laws:
        if law.kind is LawKind.PLUS_X:
            rows.append(growth)
        elif law.kind is LawKind.MINUS_X:
            rows.append(-growth)
        elif law.kind is LawKind.RATE_PLUS_X:
            rows.append(-law.mu * a + growth)
        else:
            anchor = here if law.anchor is Anchor.POINT else anchor_value(x0, Anchor.ORBIT)
            rows.append(-a * anchor + growth)
    return np.vstack(rows)
