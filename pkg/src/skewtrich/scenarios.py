"""Built-in scenarios with closed-form oracles."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .basespace import BaseSpace, BasePoint, TrajectoryForm, TrajectorySpec
from .closed_form import closed_form_log_growth, point_log_growth  # noqa: F401  (re-exported oracle)
from .core import Anchor, CocycleSpec, ComponentLaw, NormKind, SemiflowSpec, SkewEvolution
from .errors import ParamError
from .projectors import complementary_projector, coord, identity, zero


class ScenarioName(str, enum.Enum):
    EXAMPLE1 = "example1"
    EXAMPLE2 = "example2"
    EXAMPLE3 = "example3"
    CUSTOM = "custom"


@dataclass
class Scenario:
    name: str
    spaces: tuple
    xi: SkewEvolution
    three: tuple           # (P0, P1, P2)
    two: tuple             # (Q1, Q2)
    four: tuple            # (R1, R2, R3, R4)
    norm_kind: NormKind
    params: dict
    members: list = field(default_factory=list)

    @property
    def semiflow(self) -> SemiflowSpec:
        return self.xi.semiflow

    @property
    def cocycle(self) -> CocycleSpec:
        return self.xi.cocycle

    @property
    def dimension(self) -> int:
        return self.xi.dimension

    def base_point(self, shift: Optional[float] = 0.0, space: int = 0) -> BasePoint:
        return BasePoint(self.spaces[space], shift)

    def echo(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "generators": [s.generator.to_dict() for s in self.spaces],
            "cocycle": self.cocycle.to_dict(),
            "norm": self.norm_kind.value,
            "families": {
                "three": [P.describe() for P in self.three],
                "two": [P.describe() for P in self.two],
                "four": [P.describe() for P in self.four],
            },
        }


def _families_from_three(p0, p1, p2, dim):
    r3 = complementary_projector(p1, dim)
    r4 = complementary_projector(p2, dim)
    return (p1, p2), (p1, p2, r3, r4)


def _example1(params) -> Scenario:
    l, a = float(params.get("l", 1.0)), float(params.get("a", 1.0))
    space = BaseSpace(TrajectorySpec.exp_decay(l, a), name="f")
    xi = SkewEvolution(SemiflowSpec(space), CocycleSpec((ComponentLaw("+x"),)))
    three = (zero(), zero(), identity())
    two, four = _families_from_three(*three, 1)
    norm_kind = NormKind(params.get("norm", "L2"))
    return Scenario("example1", (space,), xi, three, two, four, norm_kind, {"l": l, "a": a})


def _example2(params) -> Scenario:
    l, a, mu = float(params.get("l", 1.0)), float(params.get("a", 1.0)), float(params.get("mu", 3.0))
    anchor = Anchor(params.get("anchor", "orbit"))
    gen = TrajectorySpec.exp_decay(l, a)
    f0 = gen(0.0)
    if not mu > f0 > 0:
        raise ParamError(f"example2 requires mu > f(0) > 0, got mu={mu}, f(0)={f0}")
    space = BaseSpace(gen, name="f")
    laws = (ComponentLaw("-mu+x", mu=mu), ComponentLaw("+x"), ComponentLaw("-x(0)+x", anchor=anchor))
    xi = SkewEvolution(SemiflowSpec(space), CocycleSpec(laws))
    three = (coord(3), coord(1), coord(2))
    two, four = _families_from_three(*three, 3)
    norm_kind = NormKind(params.get("norm", "L1"))
    return Scenario("example2", (space,), xi, three, two, four, norm_kind,
                    {"l": l, "a": a, "mu": mu, "anchor": anchor.value})


def _example3(params) -> Scenario:
    n_list = tuple(int(n) for n in params.get("n_list", (1, 2, 5, 10)))
    if not n_list or any(n < 1 for n in n_list):
        raise ParamError(f"example3 needs positive integers n, got {n_list}")
    spaces = []
    for n in n_list:
        gen = TrajectorySpec.interval_decay(n)
        lo, hi = 1.0 / (2 * n + 1), 1.0 / (2 * n)
        # decreasing generator: sup at u = 0, inf approached as u -> inf
        if not (lo < gen(0.0) < hi and gen.level == lo):
            raise ParamError(f"x_{n} leaves the interval (1/{2 * n + 1}, 1/{2 * n})")
        spaces.append(BaseSpace(gen, name=f"x{n}"))
    laws = (ComponentLaw("-x"), ComponentLaw("+x"), ComponentLaw("+x"))
    xi = SkewEvolution(SemiflowSpec(tuple(spaces)), CocycleSpec(laws))
    three = (coord(3), coord(1), coord(2))
    two, four = _families_from_three(*three, 3)
    members = [BasePoint(s, 0.0) for s in spaces]
    norm_kind = NormKind(params.get("norm", "L1"))
    return Scenario("example3", tuple(spaces), xi, three, two, four, norm_kind,
                    {"n_list": list(n_list)}, members)


def _family_from_config(spec, dim):
    if spec in ("zero", "ZERO"):
        return zero()
    if spec in ("identity", "IDENTITY"):
        return identity()
    return coord(*spec)


def _custom(params) -> Scenario:
    try:
        gen_cfg = dict(params["generator"])
        form = TrajectoryForm(gen_cfg.pop("form"))
        gen = TrajectorySpec(form, **gen_cfg)
        laws = tuple(ComponentLaw(**law) for law in params["laws"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParamError(f"custom scenario: {exc}") from exc
    space = BaseSpace(gen, name=params.get("label", "g"))
    dim = len(laws)
    fam_cfg = params.get("families")
    if fam_cfg is None:
        three = (zero(), zero(), identity()) if dim == 1 else (coord(3), coord(1), coord(2))
    else:
        three = tuple(_family_from_config(f, dim) for f in fam_cfg)
    xi = SkewEvolution(SemiflowSpec(space), CocycleSpec(laws))
    two, four = _families_from_three(*three, dim)
    return Scenario("custom", (space,), xi, three, two, four, NormKind(params.get("norm", "L2")), dict(params))


_BUILDERS = {
    ScenarioName.EXAMPLE1: _example1,
    ScenarioName.EXAMPLE2: _example2,
    ScenarioName.EXAMPLE3: _example3,
    ScenarioName.CUSTOM: _custom,
}


def build_scenario(name, params: Optional[dict] = None) -> Scenario:
    """Wire up a built-in scenario.

    Families: ``P1 = COORD{1}``, ``P2 = COORD{2}``, ``P0 = COORD{3}`` for the
    three-dimensional examples; the two-family set is ``(P1, P2)`` and the
    four-family set is ``(P1, P2, I - P1, I - P2)``.
    """
    try:
        key = ScenarioName(str(name).lower())
    except ValueError:
        raise ParamError(f"unknown scenario {name!r}") from None
    return _BUILDERS[key](dict(params or {}))
