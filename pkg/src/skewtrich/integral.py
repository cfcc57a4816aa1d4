"""Characterisations of pointwise trichotomy.

* the function-class form: two projection families and two decreasing
  functions ``phi1, phi2`` vanishing at infinity;
* the integral form: four projection families, the growth hypotheses
  (st), (in), (eg), (ed) and the integral bounds U0, U0', U1, U2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .basespace import BasePoint
from .core import GridSpec, NormKind, SkewEvolution, log_norm, norm, orbit_exponents
from .errors import HypothesisFailError, NoDeltaError, TailUnboundedError
from .projectors import Indexing, Regime, as_indexing, product, require_compatible
from .quadrature import quadrature
from .trichotomy import N_INFLATE, Mode, RateCertificate, VerificationVerdict, fit_rate

CLAMP_N = 1.0 + N_INFLATE
DELTA_EPS = 1e-12


# --------------------------------------------------------------------------
# the function class
# --------------------------------------------------------------------------


class PhiForm(str, enum.Enum):
    EXPONENTIAL = "exponential"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class PhiFunction:
    """A positive, strictly decreasing function on ``[0, inf)`` tending to 0.

    ``EXPONENTIAL`` is ``N * exp(-nu * t)``. ``TABULATED`` interpolates
    ``log`` values linearly between the knots and continues the last
    segment's (negative) log-slope beyond them, which forces the limit 0.
    """

    form: PhiForm
    N: float = 1.0
    nu: float = 1.0
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        form = PhiForm(self.form)
        object.__setattr__(self, "form", form)
        if form is PhiForm.EXPONENTIAL:
            if not (self.N > 0 and self.nu > 0):
                raise ValueError(f"exponential member needs N > 0 and nu > 0, got N={self.N}, nu={self.nu}")
            return
        ts = tuple(float(t) for t in self.times)
        vs = tuple(float(v) for v in self.values)
        if len(ts) < 2 or len(ts) != len(vs):
            raise ValueError("tabulated member needs at least two (time, value) knots")
        if ts[0] != 0.0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("knot times must start at 0 and increase strictly")
        if any(v <= 0 for v in vs):
            raise ValueError("values must be positive")
        if any(b >= a for a, b in zip(vs, vs[1:])):
            raise ValueError("values must decrease strictly (a member has to tend to 0)")
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "values", vs)

    @classmethod
    def exponential(cls, N: float, nu: float) -> "PhiFunction":
        return cls(PhiForm.EXPONENTIAL, N=N, nu=nu)

    def log(self, t):
        t = np.asarray(t, dtype=float)
        if self.form is PhiForm.EXPONENTIAL:
            out = math.log(self.N) - self.nu * t
        else:
            ts, lv = np.array(self.times), np.log(self.values)
            slope = (lv[-1] - lv[-2]) / (ts[-1] - ts[-2])
            out = np.where(t <= ts[-1], np.interp(t, ts, lv), lv[-1] + slope * (t - ts[-1]))
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, t):
        return np.exp(self.log(t)) if np.ndim(t) else math.exp(self.log(t))

    def to_dict(self) -> dict:
        if self.form is PhiForm.EXPONENTIAL:
            return {"form": "exponential", "N": self.N, "nu": self.nu}
        return {"form": "tabulated", "times": list(self.times), "values": list(self.values)}


def phi_from_constants(cert: RateCertificate):
    """``phi1 = N0 e^{-nu0 t}``, ``phi2 = max(N1, N2) e^{-min(nu1, nu2) t}``."""
    N0, N1, N2 = cert.N
    nu0, nu1, nu2 = cert.nu
    return PhiFunction.exponential(N0, nu0), PhiFunction.exponential(max(N1, N2), min(nu1, nu2))


def delta_grid(delta_max: float) -> list:
    # 1+eps first, then the integers: the extraction steps by whole units
    return [1.0 + DELTA_EPS] + [float(k) for k in range(2, int(math.floor(delta_max)) + 1)]


def find_delta(phi: PhiFunction, delta_max: float = 64.0) -> float:
    """Smallest grid ``delta > 1`` with ``phi(delta) < 1`` (bisection over the grid)."""
    grid = delta_grid(delta_max)
    if phi.log(grid[-1]) >= 0:
        raise NoDeltaError(f"phi >= 1 on the whole search range (1, {delta_max}]")
    lo, hi = -1, len(grid) - 1     # invariant: phi(grid[hi]) < 1, phi(grid[lo]) >= 1 (lo=-1 is virtual)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if phi.log(grid[mid]) < 0:
            hi = mid
        else:
            lo = mid
    return grid[hi]


def extract_constants(phi: PhiFunction, delta_max: float = 64.0):
    """``(N, nu, delta)`` with ``N = max(phi(1), 1 + 1e-9)``, ``nu = -ln phi(delta)``."""
    delta = find_delta(phi, delta_max)
    return max(phi(1.0), CLAMP_N), -phi.log(delta), delta


def constants_from_phi(phi1: PhiFunction, phi2: PhiFunction, delta_search_max: float = 64.0,
                       x0: Optional[str] = None) -> RateCertificate:
    N0, nu0, _ = extract_constants(phi1, delta_search_max)
    N12, nu12, _ = extract_constants(phi2, delta_search_max)
    return RateCertificate((N0, N12, N12), (nu0, nu12, nu12), Mode.POINTWISE, x0)


def check_phi_characterization(xi: SkewEvolution, x0: BasePoint, Q1, Q2, phi1: PhiFunction, phi2: PhiFunction,
                               grid: GridSpec, norm_kind: NormKind = NormKind.L2,
                               check_compat: bool = True) -> VerificationVerdict:
    """Log-space margins of the four function-class inequalities over ``(t, s)`` pairs."""
    Q1 = as_indexing(Q1, Indexing.TIME)
    Q2 = as_indexing(Q2, Indexing.TIME)
    if check_compat:
        require_compatible(Regime.TWO, (Q1, Q2), xi, grid, x0=x0, norm_kind=norm_kind)
    dim = xi.dimension
    I = np.eye(dim)
    probes = grid.probe_vectors(dim)
    labels = ("puet0", "puet0'", "puet1", "puet2")
    worst = {lab: (math.inf, None) for lab in labels}

    def lg(v):
        n = norm(v, norm_kind)
        return math.log(n) if n > 0 else -math.inf

    def push(lab, lhs, rhs, meta):
        if lhs == -math.inf:
            return
        m = rhs - lhs if rhs > -math.inf else -math.inf
        if m < worst[lab][0]:
            worst[lab] = (m, meta)

    for t, s in grid.pairs():
        gap = t - s
        mult = np.exp(xi.log_Psi_along(t, s, x0))
        l1, l2 = phi1.log(gap), phi2.log(gap)
        q1s, q2s = Q1.matrix(s, dim), Q2.matrix(s, dim)
        q1ts, q2ts = Q1.matrix(t + s, dim), Q2.matrix(t + s, dim)
        for k, v in enumerate(probes):
            meta = {"t": t, "s": s, "probe": k}
            Pv = mult * v
            push("puet0", l1 + lg((I - q1s) @ v), lg((I - q1ts) @ Pv), meta)
            push("puet0'", l1 + lg((I - q2ts) @ Pv), lg((I - q2s) @ v), meta)
            push("puet1", lg(mult * (q1s @ v)), l2 + lg(q1s @ v), meta)
            push("puet2", lg(q2s @ v), l2 + lg(mult * (q2s @ v)), meta)
    return VerificationVerdict({k: m for k, (m, _) in worst.items()},
                               {k: w for k, (_, w) in worst.items()}, grid.tol)


# --------------------------------------------------------------------------
# integral bounds
# --------------------------------------------------------------------------


class IntegralKind(str, enum.Enum):
    U0 = "U0"
    U0P = "U0P"
    U1 = "U1"
    U2 = "U2"


@dataclass
class IntegralCheckResult:
    kind: IntegralKind
    integral: float          # value at the worst cell
    reference: float         # bound constant times reference norm at that cell
    bound_constant: float
    alpha: Optional[float]
    error_estimate: float
    worst_ratio: float       # max over cells of integral / (bound * reference norm)
    worst_cell: Optional[dict]
    tail: float = 0.0
    passed: bool = field(init=False)
    n_cells: int = 0
    failures: int = 0

    def __post_init__(self):
        self.passed = self.failures == 0

    def to_dict(self) -> dict:
        return {
            "kind": IntegralKind(self.kind).value,
            "integral": self.integral,
            "reference": self.reference,
            "bound_constant": self.bound_constant,
            "alpha": self.alpha,
            "error_estimate": self.error_estimate,
            "tail": self.tail,
            "worst_ratio": self.worst_ratio,
            "worst_cell": self.worst_cell,
            "cells": self.n_cells,
            "pass": self.passed,
        }


def _orbit_norms(xi: SkewEvolution, x0: BasePoint, w: np.ndarray, gaps, norm_kind: NormKind) -> np.ndarray:
    vals = np.exp(orbit_exponents(xi.cocycle, x0, gaps)) * w[:, None]
    if NormKind(norm_kind) is NormKind.L1:
        return np.abs(vals).sum(axis=0)
    return np.sqrt((vals ** 2).sum(axis=0))


def fit_tail_decay(xi: SkewEvolution, x0: BasePoint, w: np.ndarray, horizon_gap: float,
                   norm_kind: NormKind = NormKind.L2, K_cap: float = 10.0, n: int = 41):
    """Fit ``||Psi(a) w|| <= K e^{-r (a - b)} ||Psi(b) w||`` on ``[horizon/2, horizon]``.

    Returns ``(K, r)``; raises ``TailUnboundedError`` unless some ``r > 0`` fits.
    """
    a = np.linspace(0.5 * horizon_gap, horizon_gap, n)
    E = orbit_exponents(xi.cocycle, x0, a)
    logs = np.array([log_norm(E[:, i], w, norm_kind) for i in range(n)])
    i, j = np.triu_indices(n, k=1)       # a[j] > a[i]
    gaps = a[j] - a[i]
    data = logs[i] - logs[j]
    rates = np.linspace(1e-3, 20.0, 4000)
    fit = fit_rate(gaps, data, -1, rates, K_cap, prefer="largest")
    if fit is None:
        raise TailUnboundedError("integrand shows no certified exponential decay near the horizon")
    return fit


def integral_bound(kind, xi: SkewEvolution, x0: BasePoint, R, grid: GridSpec, *, alpha: Optional[float] = None,
                   M: Optional[float] = None, M1: Optional[float] = None, M2: Optional[float] = None,
                   horizon: float = 40.0, tol: float = 1e-8, rel_tol: float = 1e-12, decay=None,
                   literal_weight: bool = False, norm_kind: NormKind = NormKind.L2) -> IntegralCheckResult:
    """Check one of the integral conditions at ``x0`` for projection family ``R``.

    U1's improper integral is quadrature over ``[t0, t0 + horizon]`` plus the
    tail ``K ||Psi(t0 + horizon) w|| / r`` from a decay fit (or ``decay=(K, r)``).
    The U0' weight is ``e^{-alpha (t - tau)}``; ``literal_weight=True`` uses
    the growing weight ``e^{+alpha (t - tau)}`` instead.
    """
    kind = IntegralKind(kind)
    R = as_indexing(R, Indexing.TIME)
    dim = xi.dimension
    probes = grid.probe_vectors(dim)
    grid.require_nonempty()
    if kind in (IntegralKind.U0, IntegralKind.U0P):
        if alpha is None or not alpha > 0 or M is None:
            raise ValueError(f"{kind.value} needs alpha > 0 and M")
        const = M
    elif kind is IntegralKind.U1:
        if M1 is None:
            raise ValueError("U1 needs M1")
        const = M1
    else:
        if M2 is None:
            raise ValueError("U2 needs M2")
        const = M2

    def f_norm(w):
        return lambda gaps: _orbit_norms(xi, x0, w, gaps, norm_kind)

    cells = []
    if kind is IntegralKind.U1:
        cells = [(None, None, t0) for t0 in grid.t0_values]
    elif kind is IntegralKind.U0P:
        cells = list(grid.triples())
    else:
        cells = [(t, None, t0) for t, t0 in grid.pairs()]

    worst = dict(ratio=-math.inf, integral=0.0, ref=0.0, err=0.0, cell=None, tail=0.0)
    failures = 0
    count = 0
    for t, s, t0 in cells:
        w_all = [R.matrix(t0, dim) @ v for v in probes]
        for k, w in enumerate(w_all):
            if not np.any(w):
                continue
            fw = f_norm(w)
            tail = 0.0
            if kind is IntegralKind.U1:
                value, err = quadrature(fw, 0.0, horizon, tol=tol, rel_tol=rel_tol)
                K, r = decay if decay is not None else fit_tail_decay(xi, x0, w, horizon, norm_kind)
                tail = K * float(fw(np.array([horizon]))[0]) / r
                value += tail
                ref = norm(w, norm_kind)
            elif kind is IntegralKind.U2:
                value, err = quadrature(fw, 0.0, t - t0, tol=tol, rel_tol=rel_tol)
                ref = float(fw(np.array([t - t0]))[0])
            elif kind is IntegralKind.U0:
                g = lambda a, fw=fw: np.exp(-alpha * a) * fw(a)
                value, err = quadrature(g, 0.0, t - t0, tol=tol, rel_tol=rel_tol)
                ref = norm(w, norm_kind)
            else:
                sign = 1.0 if literal_weight else -1.0
                g = lambda a, fw=fw, t=t, t0=t0: np.exp(sign * alpha * (t - t0 - a)) * fw(a)
                value, err = quadrature(g, s - t0, t - t0, tol=tol, rel_tol=rel_tol)
                ref = float(fw(np.array([t - t0]))[0])
            count += 1
            bound = const * ref
            if value > bound + err:
                failures += 1
            ratio = value / bound if bound > 0 else math.inf
            if ratio > worst["ratio"]:
                worst.update(ratio=ratio, integral=value, ref=bound, err=err, tail=tail,
                             cell={"t": t, "s": s, "t0": t0, "probe": k})
    return IntegralCheckResult(kind, worst["integral"], worst["ref"], const, alpha, worst["err"],
                               worst["ratio"] if count else 0.0, worst["cell"], worst["tail"],
                               n_cells=count, failures=failures)


def necessity_constants(cert: RateCertificate) -> dict:
    """Integral-bound constants built from a trichotomy certificate."""
    N = max(cert.N)
    nu0, nu1, nu2 = cert.nu
    return {"M1": N / nu1, "M2": N / nu2, "alpha": 2.0 * nu0, "M": N / nu0}


# --------------------------------------------------------------------------
# hypotheses of the integral characterisation and the sufficiency pipeline
# --------------------------------------------------------------------------


DEFAULT_OMEGA_GRID = tuple(np.round(np.arange(0.05, 10.0001, 0.05), 10))


@dataclass
class HypothesisReport:
    st_found: Optional[tuple]      # (s0 - t0, c) for (st)
    in_found: Optional[tuple]      # (s0 - t0, c) for (in)
    c: Optional[float]             # one constant serving both (st) and (in)
    eg_constants: Optional[tuple]  # (N, omega)
    ed_constants: Optional[tuple]  # (N~, omega~)
    failed: list = field(default_factory=list)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = not self.failed

    def to_dict(self) -> dict:
        return {
            "st": list(self.st_found) if self.st_found else None,
            "in": list(self.in_found) if self.in_found else None,
            "c": self.c,
            "eg": list(self.eg_constants) if self.eg_constants else None,
            "ed": list(self.ed_constants) if self.ed_constants else None,
            "failed": list(self.failed),
            "pass": self.passed,
        }


def _contraction(xi, R, grid, gap, norm_kind, expanding: bool) -> float:
    """Max over (t0, x, v) of the (st) ratio, or of the (in) ratio when ``expanding``."""
    dim = xi.dimension
    probes = grid.probe_vectors(dim)
    worst = 0.0
    for x in grid.points(xi.spaces):
        for t0 in grid.t0_values:
            E = xi.log_Psi_along(t0 + gap, t0, x)
            zero = np.zeros(dim)
            for v in probes:
                w = R.matrix(t0, dim) @ v
                if not np.any(w):
                    continue
                moved, still = log_norm(E, w, norm_kind), log_norm(zero, w, norm_kind)
                worst = max(worst, math.exp(still - moved) if expanding else math.exp(moved - still))
    return worst


def _growth_samples(xi, families, grid, norm_kind, backward: bool):
    """Data for (eg) (``backward=False``) or (ed) over triples, plain cocycle form."""
    dim = xi.dimension
    probes = grid.probe_vectors(dim)
    gaps, data = [], []
    for x in grid.points(xi.spaces):
        for t, s, t0 in grid.triples():
            Et, Es = xi.log_Psi(t, t0, x), xi.log_Psi(s, t0, x)
            for R in families:
                mat = R.matrix(t0, dim)
                for v in probes:
                    w = mat @ v
                    if not np.any(w):
                        continue
                    lt, ls = log_norm(Et, w, norm_kind), log_norm(Es, w, norm_kind)
                    gaps.append(t - s)
                    data.append(lt - ls if backward else ls - lt)
    return np.array(gaps), np.array(data)


def check_integral_hypotheses(xi: SkewEvolution, families: Sequence, grid: GridSpec, s0_gaps=(2.0,),
                               omega_grid=DEFAULT_OMEGA_GRID, N_cap: float = 1.0 + 1e-6,
                               norm_kind: NormKind = NormKind.L2, check_compat: bool = True,
                               raise_on_fail: bool = True) -> HypothesisReport:
    """Search ``s0`` and ``c`` for (st)/(in) and fit the growth constants of (eg)/(ed).

    ``families`` is ``(R1, R2, R3, R4)``. For each candidate gap ``s0 - t0``
    the smallest ``c`` is the worst sampled ratio; the first gap for which
    both ratios are below 1 is kept, and ``c`` is the larger of the two since
    a single constant has to serve both conditions.
    """
    fams = tuple(as_indexing(R, Indexing.TIME) for R in families)
    if check_compat:
        require_compatible(Regime.FOUR, fams, xi, grid, norm_kind=norm_kind)
    R1, R2, R3, R4 = fams
    st = inn = None
    c = None
    failed = []
    for gap in s0_gaps:
        if not gap > 0:
            continue
        c_st = _contraction(xi, R1, grid, gap, norm_kind, expanding=False)
        c_in = _contraction(xi, R2, grid, gap, norm_kind, expanding=True)
        if c_st < 1 and c_in < 1:
            st, inn, c = (gap, c_st), (gap, c_in), max(c_st, c_in)
            break
    if st is None:
        failed.extend(["st", "in"])
    g, d = _growth_samples(xi, (R1, R3), grid, norm_kind, backward=False)
    eg = fit_rate(g, d, +1, omega_grid, N_cap, prefer="smallest")
    g, d = _growth_samples(xi, (R2, R4), grid, norm_kind, backward=True)
    ed = fit_rate(g, d, +1, omega_grid, N_cap, prefer="smallest")
    if eg is None:
        failed.append("eg")
    if ed is None:
        failed.append("ed")
    report = HypothesisReport(st, inn, c, eg, ed, failed)
    if failed and raise_on_fail:
        raise HypothesisFailError(",".join(failed))
    return report


@dataclass
class SufficiencyResult:
    certificate: RateCertificate
    families: tuple            # (P0, P1, P2) = (R3 R4, R1, R2)
    raw: dict                  # rate formulas exactly as printed (nu1 = ln c / gap)
    stability: dict            # fitted (K, beta) for the rescaled cocycle

    def to_dict(self) -> dict:
        return {"certificate": self.certificate.to_dict(), "families": [P.describe() for P in self.families],
                "raw": self.raw, "stability": self.stability}


def certificate_from_hypotheses(xi: SkewEvolution, x0: BasePoint, families: Sequence, hyp: HypothesisReport,
                                alpha: float, grid: GridSpec, beta_grid=DEFAULT_OMEGA_GRID, K_cap: float = 1e6,
                                norm_kind: NormKind = NormKind.L2) -> SufficiencyResult:
    """Assemble a pointwise certificate from the hypotheses and the integral data.

    The neutral constants come from exponential-stability fits of the rescaled
    cocycle ``e^{-alpha (t - s)} Psi`` on R3 (upper growth) and of its dual on
    R4 (lower growth): ``nu0 = alpha - beta`` if positive, else 1.
    """
    if not hyp.passed:
        raise HypothesisFailError(",".join(hyp.failed))
    R1, R2, R3, R4 = (as_indexing(R, Indexing.TIME) for R in families)
    gap, c = hyp.st_found[0], hyp.c
    N, omega = hyp.eg_constants
    Nt, omegat = hyp.ed_constants
    nu1 = -math.log(c) / gap
    nu2 = -math.log(c) / gap
    N1 = N * math.exp((omega + nu1) * gap)
    N2 = Nt * math.exp((omegat + nu2) * gap)

    dim = xi.dimension
    probes = grid.probe_vectors(dim)
    up_g, up_d, lo_g, lo_d = [], [], [], []
    for t, s, t0 in grid.triples():
        Et, Es = xi.log_Psi_along(t, t0, x0), xi.log_Psi_along(s, t0, x0)
        d = t - s
        for v in probes:
            w3, w4 = R3.matrix(t0, dim) @ v, R4.matrix(t0, dim) @ v
            if np.any(w3):
                # ||Psi_a(t) w|| <= K e^{-beta d} ||Psi_a(s) w||, Psi_a = e^{-alpha (.)} Psi
                up_g.append(d)
                up_d.append(log_norm(Es, w3, norm_kind) - log_norm(Et, w3, norm_kind) + alpha * d)
            if np.any(w4):
                lo_g.append(d)
                lo_d.append(log_norm(Et, w4, norm_kind) - log_norm(Es, w4, norm_kind) + alpha * d)
    up = fit_rate(up_g, up_d, -1, beta_grid, K_cap, prefer="largest")
    lo = fit_rate(lo_g, lo_d, -1, beta_grid, K_cap, prefer="largest")
    if up is None or lo is None:
        raise HypothesisFailError("upet0")
    (K, beta), (Kp, betap) = up, lo
    nu0 = max(alpha - beta, alpha - betap)
    if nu0 <= 0:
        nu0 = 1.0
    N0 = max(K, Kp, CLAMP_N)
    cert = RateCertificate((N0, max(N1, CLAMP_N), max(N2, CLAMP_N)), (nu0, nu1, nu2), Mode.POINTWISE, x0.label())
    raw = {"nu1": math.log(c) / gap, "nu2": -math.log(c) / gap,
           "N1": N * math.exp((omega + math.log(c) / gap) * gap), "N2": Nt * math.exp(omegat * gap)}
    return SufficiencyResult(cert, (product(R3, R4), R1, R2), raw,
                             {"K": K, "beta": beta, "K_dual": Kp, "beta_dual": betap, "alpha": alpha})
