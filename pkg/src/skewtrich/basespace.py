"""Base metric space of shifted trajectories.

Points are time-shifts ``f_t(tau) = f(t + tau)`` of a single positive,
decreasing generator living on ``[0, inf)``, plus (optionally) the constant
trajectory equal to ``lim f`` which is the only closure point we keep.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ParamError, SpaceMismatchError


class TrajectoryForm(str, enum.Enum):
    EXP_DECAY_TO_L = "exp_decay_to_l"
    INTERVAL_DECAY = "interval_decay"
    CONSTANT = "constant"


@dataclass(frozen=True)
class TrajectorySpec:
    """Closed-form generator.

    * ``EXP_DECAY_TO_L``: ``l + a*exp(-u)``
    * ``INTERVAL_DECAY``: ``1/(2n+1) + exp(-u) / (4n(2n+1))``
    * ``CONSTANT``: ``c``
    """

    form: TrajectoryForm
    l: float = 0.0
    a: float = 0.0
    c: float = 0.0
    n: int = 0

    def __post_init__(self):
        form = TrajectoryForm(self.form)
        object.__setattr__(self, "form", form)
        if form is TrajectoryForm.EXP_DECAY_TO_L:
            if not self.l > 0:
                raise ParamError(f"EXP_DECAY_TO_L needs l > 0, got l={self.l}")
            if self.a < 0:
                raise ParamError(f"EXP_DECAY_TO_L needs a >= 0, got a={self.a}")
        elif form is TrajectoryForm.INTERVAL_DECAY:
            if int(self.n) != self.n or self.n < 1:
                raise ParamError(f"INTERVAL_DECAY needs a positive integer n, got {self.n}")
            object.__setattr__(self, "n", int(self.n))
        elif not self.c > 0:
            raise ParamError(f"CONSTANT trajectory must be positive, got c={self.c}")

    @classmethod
    def exp_decay(cls, l: float, a: float) -> "TrajectorySpec":
        return cls(TrajectoryForm.EXP_DECAY_TO_L, l=l, a=a)

    @classmethod
    def interval_decay(cls, n: int) -> "TrajectorySpec":
        return cls(TrajectoryForm.INTERVAL_DECAY, n=n)

    @classmethod
    def constant(cls, c: float) -> "TrajectorySpec":
        return cls(TrajectoryForm.CONSTANT, c=c)

    @property
    def level(self) -> float:
        """Asymptotic value ``lim_{u -> inf} f(u)``."""
        if self.form is TrajectoryForm.EXP_DECAY_TO_L:
            return self.l
        if self.form is TrajectoryForm.INTERVAL_DECAY:
            return 1.0 / (2 * self.n + 1)
        return self.c

    @property
    def amplitude(self) -> float:
        """Coefficient of ``exp(-u)``."""
        if self.form is TrajectoryForm.EXP_DECAY_TO_L:
            return self.a
        if self.form is TrajectoryForm.INTERVAL_DECAY:
            n = self.n
            return 1.0 / (4 * n * (2 * n + 1))
        return 0.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise DomainError("generator is defined on [0, inf) only")
        out = self.level + self.amplitude * np.exp(-u)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        d = {"form": self.form.value}
        if self.form is TrajectoryForm.EXP_DECAY_TO_L:
            d.update(l=self.l, a=self.a)
        elif self.form is TrajectoryForm.INTERVAL_DECAY:
            d.update(n=self.n)
        else:
            d.update(c=self.c)
        return d


@dataclass(frozen=True)
class BaseSpace:
    generator: TrajectorySpec
    includes_limits: bool = True
    name: str = ""

    @property
    def limit_value(self) -> float:
        return self.generator.level

    def point(self, shift: Optional[float]) -> "BasePoint":
        return BasePoint(self, shift)

    def limit_point(self) -> "BasePoint":
        if not self.includes_limits:
            raise DomainError("this base space does not include its limit point")
        return BasePoint(self, None)

    def sample_points(self, shifts, include_limit: bool = True) -> list["BasePoint"]:
        pts = [BasePoint(self, float(s)) for s in shifts]
        if include_limit and self.includes_limits:
            pts.append(BasePoint(self, None))
        return pts


@dataclass(frozen=True)
class BasePoint:
    """A member of the base space: ``shift=None`` marks the constant limit point."""

    space: BaseSpace
    shift: Optional[float]

    def __post_init__(self):
        if self.shift is None:
            if not self.space.includes_limits:
                raise DomainError("limit point requested in a space without limits")
            return
        if not (math.isfinite(self.shift) and self.shift >= 0):
            raise DomainError(f"shift must be finite and >= 0, got {self.shift}")

    @property
    def is_limit(self) -> bool:
        return self.shift is None

    @property
    def lower_bound(self) -> float:
        """Smallest admissible ``tau`` for this trajectory."""
        return -math.inf if self.is_limit else -self.shift

    def shifted(self, by: float) -> "BasePoint":
        if self.is_limit:
            return self
        return BasePoint(self.space, self.shift + by)

    def label(self) -> str:
        tag = self.space.name or self.space.generator.form.value
        return f"{tag}@limit" if self.is_limit else f"{tag}@{self.shift:g}"

    def __call__(self, tau):
        return trajectory_eval(self, tau)


def trajectory_eval(x: BasePoint, tau):
    """Value of the trajectory ``x`` at ``tau`` (scalar or array)."""
    if x.is_limit:
        tau = np.asarray(tau, dtype=float)
        out = np.full(tau.shape, x.space.limit_value)
        return float(out) if out.ndim == 0 else out
    u = x.shift + np.asarray(tau, dtype=float)
    # tolerate rounding right at the domain edge
    if np.any(u < -1e-12):
        raise DomainError(f"tau below domain: shift + tau must be >= 0 (shift={x.shift})")
    return x.space.generator(np.maximum(u, 0.0))


def _sup_gap(x: BasePoint, y: BasePoint, lo: float, hi: float, step: float) -> float:
    if hi <= lo:
        return abs(float(x(hi)) - float(y(hi)))
    m = max(int(math.ceil((hi - lo) / step)), 1)
    taus = np.linspace(lo, hi, m + 1)
    gaps = np.abs(x(taus) - y(taus))
    # generators are monotone, so the window endpoints are checked explicitly
    return float(max(gaps.max(), abs(gaps[0]), abs(gaps[-1])))


def metric_d(x: BasePoint, y: BasePoint, depth: int = 20, tau_step: float = 0.01):
    """Truncated compact-convergence metric.

    Returns ``(value, bound)`` where ``bound = 2**-depth`` bounds the omitted
    tail of the series.
    """
    if x.space != y.space:
        raise SpaceMismatchError("points belong to different base spaces")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    total = 0.0
    floor = max(x.lower_bound, y.lower_bound)
    for n in range(1, depth + 1):
        dn = _sup_gap(x, y, max(-float(n), floor), float(n), tau_step)
        total += 2.0 ** -n * dn / (1.0 + dn)
    return total, 2.0 ** -depth
