"""Uniform exponential trichotomy: verification, rate estimation,
dichotomy/stability specialisations and falsification by escalation.

Every inequality is reduced to a log-space margin of the form

    margin = log N_k + sign * nu_k * gap + data

where ``data`` depends only on the sampled cell (times, base point, probe).
Verification evaluates the margin for a given certificate; estimation
solves for the smallest admissible ``N_k`` at each candidate rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .basespace import BasePoint
from .core import GridSpec, NormKind, SkewEvolution, log_norm
from .errors import EmptyGridError, ScopeMismatchError
from .projectors import Indexing, Regime, as_indexing, check_compatibility, require_compatible, zero

N_INFLATE = 1e-12
DEFAULT_NU_GRID = tuple(np.logspace(-3, 1, 40))
DEFAULT_N_CAP = 1e6


class Mode(str, enum.Enum):
    GLOBAL = "global"
    POINTWISE = "pointwise"


GLOBAL_LABELS = ("t0-lower", "t0-upper", "t1", "t2")
POINTWISE_LABELS = ("pt01", "pt02", "pt1", "pt2")
# direction index and sign of the nu*gap term for each inequality
_LABEL_INFO = {
    "t0-lower": (0, +1), "t0-upper": (0, +1), "t1": (1, -1), "t2": (2, -1),
    "pt01": (0, +1), "pt02": (0, +1), "pt1": (1, -1), "pt2": (2, -1),
}


@dataclass(frozen=True)
class RateCertificate:
    N: tuple
    nu: tuple
    mode: Mode = Mode.GLOBAL
    x0: Optional[str] = None

    def __post_init__(self):
        N = tuple(float(n) for n in self.N)
        nu = tuple(float(v) for v in self.nu)
        if len(N) != 3 or len(nu) != 3:
            raise ValueError("a certificate carries exactly three (N, nu) pairs")
        if any(not n > 1 for n in N):
            raise ValueError(f"every N_k must exceed 1, got {N}")
        if any(not v > 0 for v in nu):
            raise ValueError(f"every nu_k must be positive, got {nu}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "mode", Mode(self.mode))

    @classmethod
    def uniform(cls, N: float, nu0: float, nu1: float, nu2: float, **kw) -> "RateCertificate":
        return cls((N, N, N), (nu0, nu1, nu2), **kw)

    def to_dict(self) -> dict:
        return {"N": list(self.N), "nu": list(self.nu), "mode": self.mode.value, "x0": self.x0}


@dataclass(frozen=True)
class NoCertificate:
    """Estimation failed for the listed directions."""

    failed: tuple
    reason: str = ""

    def __bool__(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {"failed": list(self.failed), "reason": self.reason}


@dataclass
class VerificationVerdict:
    margins: dict
    witnesses: dict
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = all(m >= -self.tolerance for m in self.margins.values())

    @property
    def min_margin(self) -> float:
        return min(self.margins.values()) if self.margins else math.inf

    def to_dict(self) -> dict:
        return {
            "margins": {k: _finite(v) for k, v in self.margins.items()},
            "witnesses": self.witnesses,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _finite(v: float):
    # JSON has no infinities; vacuous inequalities are reported as null
    return None if math.isinf(v) else float(v)


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


@dataclass
class MarginSamples:
    """Per-label arrays of ``gap`` and ``data`` plus witness metadata."""

    gap: dict
    data: dict
    where: dict

    def labels(self):
        return list(self.gap)


def _as_points(x0) -> list:
    if x0 is None:
        return []
    if isinstance(x0, BasePoint):
        return [x0]
    return list(x0)


def collect_samples(mode, xi: SkewEvolution, families: Sequence, grid: GridSpec, x0=None,
                    norm_kind: NormKind = NormKind.L2) -> MarginSamples:
    """Tabulate the data term of every inequality over grid x probes.

    Cells where both sides vanish are dropped; a cell with only the left-hand
    side zero is dropped as satisfied, one with only the right-hand side zero
    is kept with ``data = -inf``.
    """
    mode = Mode(mode)
    grid.require_nonempty()
    dim = xi.dimension
    probes = grid.probe_vectors(dim)
    labels = GLOBAL_LABELS if mode is Mode.GLOBAL else POINTWISE_LABELS
    gap = {lab: [] for lab in labels}
    data = {lab: [] for lab in labels}
    where = {lab: [] for lab in labels}

    def push(lab, g, lhs, rhs, meta):
        if lhs == -math.inf:
            return
        d = rhs - lhs if rhs > -math.inf else -math.inf
        gap[lab].append(g)
        data[lab].append(d)
        where[lab].append(meta)

    if mode is Mode.GLOBAL:
        fams = [as_indexing(P, Indexing.POINT) for P in families]
        points = _as_points(x0) or grid.points(xi.spaces)
        for x in points:
            mats = [P.matrix(x, dim) for P in fams]
            for t, t0 in grid.pairs():
                E = xi.log_Psi(t, t0, x)
                g = t - t0
                for k, v in enumerate(probes):
                    meta = {"t": t, "t0": t0, "x": x.label(), "probe": k}
                    w0, w1, w2 = (m @ v for m in mats)
                    p0, q0 = log_norm(np.zeros(dim), w0, norm_kind), log_norm(E, w0, norm_kind)
                    push("t0-lower", g, p0, q0, meta)
                    push("t0-upper", g, q0, p0, meta)
                    push("t1", g, log_norm(E, w1, norm_kind), log_norm(np.zeros(dim), w1, norm_kind), meta)
                    push("t2", g, log_norm(np.zeros(dim), w2, norm_kind), log_norm(E, w2, norm_kind), meta)
    else:
        fams = [as_indexing(P, Indexing.TIME) for P in families]
        points = _as_points(x0)
        if not points:
            raise ScopeMismatchError("pointwise mode needs a base point x0")
        for x in points:
            cache = {}

            def along(t, t0):
                key = (t, t0)
                if key not in cache:
                    cache[key] = xi.log_Psi_along(t, t0, x)
                return cache[key]

            for t, s, t0 in grid.triples():
                mats = [P.matrix(t0, dim) for P in fams]
                Et, Es = along(t, t0), along(s, t0)
                g = t - s
                for k, v in enumerate(probes):
                    meta = {"t": t, "s": s, "t0": t0, "x": x.label(), "probe": k}
                    w = [m @ v for m in mats]
                    a0, b0 = log_norm(Es, w[0], norm_kind), log_norm(Et, w[0], norm_kind)
                    push("pt01", g, a0, b0, meta)
                    push("pt02", g, b0, a0, meta)
                    a1, b1 = log_norm(Es, w[1], norm_kind), log_norm(Et, w[1], norm_kind)
                    push("pt1", g, b1, a1, meta)
                    a2, b2 = log_norm(Es, w[2], norm_kind), log_norm(Et, w[2], norm_kind)
                    push("pt2", g, a2, b2, meta)
    return MarginSamples(
        {k: np.asarray(v, dtype=float) for k, v in gap.items()},
        {k: np.asarray(v, dtype=float) for k, v in data.items()},
        where,
    )


def _margins(samples: MarginSamples, N: Sequence[float], nu: Sequence[float]):
    out, wit = {}, {}
    for lab in samples.labels():
        k, sign = _LABEL_INFO[lab]
        g, d = samples.gap[lab], samples.data[lab]
        if g.size == 0:
            out[lab], wit[lab] = math.inf, None
            continue
        m = math.log(N[k]) + sign * nu[k] * g + d
        i = int(np.argmin(m))
        out[lab], wit[lab] = float(m[i]), samples.where[lab][i]
    return out, wit


def margin_rows(samples: MarginSamples, cert: RateCertificate):
    """Flat ``(t, s, t0, probe, label, log_margin)`` rows, one per sampled cell."""
    rows = []
    for lab in samples.labels():
        k, sign = _LABEL_INFO[lab]
        m = math.log(cert.N[k]) + sign * cert.nu[k] * samples.gap[lab] + samples.data[lab]
        for meta, val in zip(samples.where[lab], m):
            rows.append((meta.get("t"), meta.get("s"), meta.get("t0"), meta.get("probe"), lab, float(val)))
    return rows


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------


def _compat_regime(mode: Mode) -> Regime:
    return Regime.THREE_GLOBAL if mode is Mode.GLOBAL else Regime.THREE_POINTWISE


def verify_trichotomy(mode, xi: SkewEvolution, families: Sequence, cert: RateCertificate, grid: GridSpec,
                      x0=None, norm_kind: NormKind = NormKind.L2, check_compat: bool = True,
                      samples: Optional[MarginSamples] = None) -> VerificationVerdict:
    """Check the trichotomy inequalities for ``cert`` on every grid cell.

    ``families`` is ``(P0, P1, P2)``. Raises ``IncompatibleFamiliesError``
    when ``check_compat`` is set and the families fail the matching regime.
    """
    mode = Mode(mode)
    if cert.mode is not mode:
        raise ScopeMismatchError(f"certificate is {cert.mode.value}, verification mode is {mode.value}")
    if check_compat:
        pts = _as_points(x0)
        require_compatible(_compat_regime(mode), families, xi, grid,
                           x0=pts[0] if len(pts) == 1 else None, norm_kind=norm_kind)
    if samples is None:
        samples = collect_samples(mode, xi, families, grid, x0=x0, norm_kind=norm_kind)
    margins, wit = _margins(samples, cert.N, cert.nu)
    return VerificationVerdict(margins, wit, grid.tol)


# --------------------------------------------------------------------------
# estimation
# --------------------------------------------------------------------------


def minimal_log_N(samples: MarginSamples, k: int, nu_grid) -> np.ndarray:
    """For each candidate rate, ``log`` of the smallest ``N_k >= 1`` that works."""
    nu_grid = np.asarray(nu_grid, dtype=float)
    need = np.zeros(nu_grid.shape)
    for lab in samples.labels():
        kk, sign = _LABEL_INFO[lab]
        if kk != k or samples.gap[lab].size == 0:
            continue
        g, d = samples.gap[lab], samples.data[lab]
        with np.errstate(invalid="ignore"):
            viol = -(sign * np.outer(nu_grid, g) + d[None, :])
        need = np.maximum(need, viol.max(axis=1))
    return need


def estimate_rate_constants(xi: SkewEvolution, families: Sequence, mode, grid: GridSpec,
                            nu_grid=DEFAULT_NU_GRID, N_cap: float = DEFAULT_N_CAP, x0=None,
                            norm_kind: NormKind = NormKind.L2, check_compat: bool = True,
                            samples: Optional[MarginSamples] = None):
    """Tightest certificate on a rate grid.

    Directions 1 and 2 take the largest candidate rate whose minimal ``N``
    stays within ``N_cap``; direction 0 (a two-sided growth bound, where a
    smaller rate is the stronger statement) takes the smallest such rate.
    Returns a ``RateCertificate`` or a falsy ``NoCertificate``.
    """
    mode = Mode(mode)
    nu_grid = np.asarray(sorted(float(v) for v in nu_grid))
    if nu_grid.size == 0 or np.any(nu_grid <= 0):
        raise ValueError("nu_grid must be a nonempty set of positive rates")
    if N_cap < 1:
        raise ValueError("N_cap must be >= 1")
    if check_compat:
        pts = _as_points(x0)
        require_compatible(_compat_regime(mode), families, xi, grid,
                           x0=pts[0] if len(pts) == 1 else None, norm_kind=norm_kind)
    if samples is None:
        samples = collect_samples(mode, xi, families, grid, x0=x0, norm_kind=norm_kind)
    if not any(samples.gap[lab].size for lab in samples.labels()) and grid.is_empty():
        raise EmptyGridError("no samples")
    log_cap = math.log(N_cap)
    Ns, nus, failed = [], [], []
    for k in range(3):
        need = minimal_log_N(samples, k, nu_grid)
        ok = np.flatnonzero(need <= log_cap)
        if ok.size == 0:
            failed.append(k)
            continue
        i = int(ok[0] if k == 0 else ok[-1])
        Ns.append(math.exp(max(need[i], 0.0)) * (1.0 + N_INFLATE))
        nus.append(float(nu_grid[i]))
    if failed:
        return NoCertificate(tuple(failed), f"no candidate rate keeps N <= {N_cap:g}")
    label = None
    pts = _as_points(x0)
    if mode is Mode.POINTWISE:
        label = ",".join(p.label() for p in pts)
    return RateCertificate(tuple(Ns), tuple(nus), mode, label)


# --------------------------------------------------------------------------
# special cases
# --------------------------------------------------------------------------


class SpecialCase(str, enum.Enum):
    DICHOTOMY = "dichotomy"
    STABILITY = "stability"


def derive_special_case(kind, families: Sequence, xi: Optional[SkewEvolution] = None,
                        grid: Optional[GridSpec] = None, mode=Mode.GLOBAL, x0=None,
                        norm_kind: NormKind = NormKind.L2):
    """Zero out the neutral (and, for stability, the unstable) family.

    Returns ``(families, report)``; ``report`` is the compatibility check of
    the reduced families (``None`` unless ``xi`` and ``grid`` are given). With
    ``P0 = 0`` the sum condition reads ``P1 + P2 = I``, and ``P1 = I`` once
    ``P2 = 0`` as well.
    """
    kind = SpecialCase(kind)
    p0, p1, p2 = families
    p0 = zero(p0.indexing)
    if kind is SpecialCase.STABILITY:
        p2 = zero(p2.indexing)
    reduced = (p0, p1, p2)
    report = None
    if xi is not None and grid is not None:
        pts = _as_points(x0)
        report = check_compatibility(_compat_regime(Mode(mode)), reduced, xi, grid,
                                     x0=pts[0] if len(pts) == 1 else None, norm_kind=norm_kind)
    return reduced, report


# --------------------------------------------------------------------------
# falsification of global trichotomy
# --------------------------------------------------------------------------


@dataclass
class FalsificationReport:
    rates: list
    certificates: list
    thresholds: list
    joint_certificate: object
    conclusion: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rates": [{"point": p, "nu1": r} for p, r in self.rates],
            "certificates": [c.to_dict() for c in self.certificates],
            "thresholds": list(self.thresholds),
            "joint_certificate": self.joint_certificate.to_dict() if self.joint_certificate is not None else None,
            "conclusion": self.conclusion,
            "notes": list(self.notes),
        }


def falsify_global(xi: SkewEvolution, families: Sequence, points: Sequence[BasePoint], thresholds: Sequence[float],
                   grid: GridSpec, nu_grid=DEFAULT_NU_GRID, N_cap: float = 1.0 + 1e-6,
                   joint_N_cap: float = DEFAULT_N_CAP, norm_kind: NormKind = NormKind.L2,
                   rate_tol: float = 1e-12, check_compat: bool = True) -> FalsificationReport:
    """Escalation test: per-point stable rates that fall below every threshold.

    Each member point gets its own pointwise certificate. The conclusion is
    true when every member is certified, the stable rates are nonincreasing
    along the family, and every threshold is undercut by some member. A
    joint certificate over all members (at ``joint_N_cap``) is attempted and
    reported alongside; on a finite grid its existence does not contradict
    the escalation.
    """
    thresholds = sorted((float(t) for t in thresholds), reverse=True)
    rates, certs, notes = [], [], []
    all_certified = True
    for x in points:
        cert = estimate_rate_constants(xi, families, Mode.POINTWISE, grid, nu_grid=nu_grid, N_cap=N_cap,
                                       x0=x, norm_kind=norm_kind, check_compat=check_compat)
        if not cert:
            all_certified = False
            notes.append(f"no pointwise certificate at {x.label()}")
            rates.append((x.label(), None))
            continue
        certs.append(cert)
        rates.append((x.label(), cert.nu[1]))
    joint = estimate_rate_constants(xi, families, Mode.POINTWISE, grid, nu_grid=nu_grid, N_cap=joint_N_cap,
                                    x0=list(points), norm_kind=norm_kind, check_compat=False)
    if len(points) < 3:
        notes.append("fewer than three members: escalation cannot be demonstrated")
        return FalsificationReport(rates, certs, thresholds, joint, False, notes)
    vals = [r for _, r in rates if r is not None]
    monotone = all(b <= a + rate_tol for a, b in zip(vals, vals[1:]))
    undercut = all(any(r < th for r in vals) for th in thresholds)
    if not monotone:
        notes.append("estimated stable rates are not nonincreasing along the family")
    if not undercut:
        notes.append("some threshold is not undercut by any member")
    return FalsificationReport(rates, certs, thresholds, joint, bool(all_certified and monotone and undercut and thresholds), notes)


def fit_rate(gap, data, sign: int, nu_grid, N_cap: float, prefer: str = "largest"):
    """Fit ``(N, nu)`` to ``log N + sign * nu * gap + data >= 0`` on every sample.

    ``prefer="largest"`` returns the largest admissible rate (decay/growth
    lower bounds), ``"smallest"`` the smallest (growth upper bounds).
    Returns ``None`` when no candidate keeps ``N <= N_cap``.
    """
    gap = np.asarray(gap, dtype=float)
    data = np.asarray(data, dtype=float)
    nu_grid = np.asarray(sorted(float(v) for v in nu_grid))
    if gap.size == 0:
        need = np.zeros(nu_grid.shape)
    else:
        need = np.maximum(0.0, (-(sign * np.outer(nu_grid, gap) + data[None, :])).max(axis=1))
    ok = np.flatnonzero(need <= math.log(N_cap))
    if ok.size == 0:
        return None
    i = int(ok[-1] if prefer == "largest" else ok[0])
    return math.exp(need[i]) * (1.0 + N_INFLATE), float(nu_grid[i])
