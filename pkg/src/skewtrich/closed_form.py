"""Exact antiderivatives of the built-in generators.

Every exponent appearing in the built-in cocycles is an integral
``int_s^t x(tau - s) dtau = int_0^{t-s} x(u) du`` of a shifted generator,
which for ``level + amp * exp(-u)`` is elementary.
"""

from __future__ import annotations

import math
from typing import Optional

from .basespace import BasePoint, TrajectorySpec
from .errors import TimeOrderError


def closed_form_log_growth(traj: TrajectorySpec, shift: Optional[float], s: float, t: float) -> float:
    """``int_s^t g(shift + tau - s) dtau`` for the generator ``g``.

    ``shift=None`` integrates the constant limit trajectory instead.
    """
    if t < s:
        raise TimeOrderError(f"need t >= s, got t={t}, s={s}")
    dur = t - s
    if shift is None:
        return traj.level * dur
    # -expm1(-dur) = 1 - e^{-dur}, accurate for short intervals
    return traj.level * dur + traj.amplitude * math.exp(-shift) * -math.expm1(-dur)


def point_log_growth(x: BasePoint, duration: float) -> float:
    """``int_0^duration x(u) du`` for a base point."""
    return closed_form_log_growth(x.space.generator, x.shift, 0.0, duration)
