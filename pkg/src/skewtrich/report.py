"""Config parsing, the analysis pipeline and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .core import GRID_PRESETS, NormKind, check_cocycle_axioms, check_semiflow_axioms, grid_preset
from .errors import ConfigError, NonConvergenceError, SkewTrichError, TailUnboundedError
from .integral import (certificate_from_hypotheses, check_phi_characterization, check_integral_hypotheses,
                       constants_from_phi, integral_bound, necessity_constants, phi_from_constants)
from .projectors import Regime, check_compatibility
from .scenarios import Scenario, build_scenario
from .trichotomy import (Mode, RateCertificate, collect_samples, estimate_rate_constants, falsify_global,
                         margin_rows, verify_trichotomy)

SCHEMA_VERSION = 1

ANALYSES = ("axioms", "compat", "verify", "estimate", "phi", "integrals", "hypotheses", "falsify")

DEFAULT_ANALYSES = {
    "example1": ["axioms", "compat", "verify"],
    "example2": ["axioms", "compat", "verify", "estimate", "phi", "integrals", "hypotheses"],
    "example3": ["axioms", "compat", "falsify"],
    "custom": ["axioms", "compat", "estimate"],
}

# certificates checked by "verify" when the config names none
DEFAULT_CERTIFICATES = {
    "example1": {"N": [1.0 + 1e-9] * 3, "nu": [2.0, 1.0, 1.0], "mode": "global"},
    "example2": {"N": [1.0 + 1e-9] * 3, "nu": [2.0, 1.0, 1.0], "mode": "global"},
}

_TOP = {"schema_version", "scenario", "grid", "probes", "tolerances", "analyses", "seed", "options"}
_SCENARIO = {"name", "params"}
_GRID = {"preset", "t0_values", "s_gaps", "t_gaps", "shifts", "include_limit", "tau_step", "depth"}
_TOL = {"verify", "quadrature"}
_OPTIONS = {"certificate", "nu_step", "N_cap", "thresholds", "compat_norm", "x0_shift", "hypothesis_gap",
            "integral_x0"}


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------


@dataclass
class Config:
    scenario: str = "example2"
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=lambda: {"preset": "default"})
    probes: object = "default"          # "default", "basis" or a list of vectors
    tolerances: dict = field(default_factory=dict)
    analyses: Optional[list] = None     # None: the scenario's default pipeline
    seed: int = 0
    options: dict = field(default_factory=dict)

    def resolved_analyses(self) -> list:
        if self.analyses is not None:
            return list(self.analyses)
        return list(DEFAULT_ANALYSES.get(self.scenario, DEFAULT_ANALYSES["custom"]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["analyses"] = self.resolved_analyses()
        return {"schema_version": SCHEMA_VERSION, **d}


def _unknown(section: dict, allowed: set, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown field in {where}", field=f"{where}.{key}" if where != "config" else key)


def parse_config(text: str) -> Config:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _unknown(raw, _TOP, "config")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}", field="schema_version")
    cfg = Config()
    sc = raw.get("scenario", {})
    if isinstance(sc, str):
        sc = {"name": sc}
    if not isinstance(sc, dict):
        raise ConfigError("scenario must be a name or an object", field="scenario")
    _unknown(sc, _SCENARIO, "scenario")
    cfg.scenario = str(sc.get("name", cfg.scenario)).lower()
    cfg.params = dict(sc.get("params", {}))
    grid = raw.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid must be an object", field="grid")
    _unknown(grid, _GRID, "grid")
    if grid.get("preset", "default") not in GRID_PRESETS:
        raise ConfigError(f"unknown grid preset {grid.get('preset')!r}", field="grid.preset")
    cfg.grid = {"preset": "default", **grid}
    cfg.probes = raw.get("probes", "default")
    if not (cfg.probes in ("default", "basis") or isinstance(cfg.probes, list)):
        raise ConfigError("probes must be 'default', 'basis' or a list of vectors", field="probes")
    tol = raw.get("tolerances", {})
    _unknown(tol, _TOL, "tolerances")
    cfg.tolerances = dict(tol)
    if "analyses" in raw:
        an = raw["analyses"]
        if not isinstance(an, list):
            raise ConfigError("analyses must be a list", field="analyses")
        for a in an:
            if a not in ANALYSES:
                raise ConfigError(f"unknown analysis {a!r}; choose from {list(ANALYSES)}", field="analyses")
        cfg.analyses = list(an)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer", field="seed")
    cfg.seed = seed
    opts = raw.get("options", {})
    _unknown(opts, _OPTIONS, "options")
    cfg.options = dict(opts)
    return cfg


def load_config(path: str) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# --------------------------------------------------------------------------
# report document
# --------------------------------------------------------------------------


@dataclass
class ReportDocument:
    schema_version: int
    tool_version: str
    timestamp: str
    scenario: dict
    grid: dict
    config: dict
    sections: dict
    passed: bool
    exit_code: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReportDocument":
        return cls(**d)


def serialize(report: ReportDocument) -> str:
    return json.dumps(_clean(report.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_report(text: str) -> ReportDocument:
    return ReportDocument.from_dict(json.loads(text))


def _clean(obj):
    """Make a value JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "s", "t0", "probe_id", "label", "log_margin"])
    for row in rows:
        w.writerow(["" if c is None else (repr(c) if isinstance(c, float) else c) for c in row])
    write_atomic(path, buf.getvalue())


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


class _Context:
    def __init__(self, cfg: Config, tol_override: Optional[float] = None, preset: Optional[str] = None):
        self.cfg = cfg
        self.scenario: Scenario = build_scenario(cfg.scenario, cfg.params)
        dim = self.scenario.dimension
        g = dict(cfg.grid)
        name = preset or g.pop("preset", "default")
        g.pop("preset", None)
        if cfg.probes == "basis":
            probes = np.eye(dim)
        elif isinstance(cfg.probes, list):
            probes = np.asarray(cfg.probes, dtype=float)
        else:
            probes = None
        tol = tol_override if tol_override is not None else cfg.tolerances.get("verify", 1e-9)
        try:
            self.grid = grid_preset(name, probes=probes, seed=cfg.seed, tol=tol, **g)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field="grid") from None
        if probes is not None and (probes.ndim != 2 or probes.shape[1] != dim):
            raise ConfigError(f"probe vectors must have length {dim}", field="probes")
        self.quad_tol = float(cfg.tolerances.get("quadrature", 1e-8))
        opts = cfg.options
        self.nu_step = float(opts.get("nu_step", 0.01))
        self.N_cap = float(opts.get("N_cap", 1.0 + 1e-6))
        self.compat_norm = NormKind(opts.get("compat_norm", "L2"))
        self.x0 = self.scenario.base_point(float(opts.get("x0_shift", 0.0)))
        self.norm = self.scenario.norm_kind
        self.rows = []

    def nu_grid(self, hi: float = 3.0):
        return np.round(np.arange(self.nu_step, hi + 1e-12, self.nu_step), 10)

    def certificate(self) -> Optional[RateCertificate]:
        spec = self.cfg.options.get("certificate") or DEFAULT_CERTIFICATES.get(self.scenario.name)
        if spec is None:
            return None
        try:
            return RateCertificate(tuple(spec["N"]), tuple(spec["nu"]), Mode(spec.get("mode", "global")),
                                   spec.get("x0"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad certificate: {exc}", field="options.certificate") from None

    def pointwise(self):
        return estimate_rate_constants(self.scenario.xi, self.scenario.three, Mode.POINTWISE, self.grid,
                                       nu_grid=self.nu_grid(), N_cap=self.N_cap, x0=self.x0,
                                       norm_kind=self.norm, check_compat=False)


def _axioms(ctx: _Context) -> dict:
    sc = ctx.scenario
    reps = {**check_semiflow_axioms(sc.semiflow, ctx.grid),
            **check_cocycle_axioms(sc.cocycle, sc.semiflow, ctx.grid, norm_kind=ctx.norm)}
    out = {law.value: rep.to_dict() for law, rep in reps.items()}
    return {"laws": out, "pass": all(r.passed for r in reps.values())}


def _compat(ctx: _Context) -> dict:
    sc = ctx.scenario
    runs = [
        (Regime.THREE_GLOBAL, sc.three, None),
        (Regime.THREE_POINTWISE, sc.three, ctx.x0),
        (Regime.TWO, sc.two, ctx.x0),
        (Regime.FOUR, sc.four, ctx.x0),
    ]
    reps = [check_compatibility(r, fams, sc.xi, ctx.grid, x0=x, norm_kind=ctx.compat_norm) for r, fams, x in runs]
    return {"regimes": [r.to_dict() for r in reps], "pass": all(r.passed for r in reps)}


def _verify(ctx: _Context) -> dict:
    sc = ctx.scenario
    cert = ctx.certificate()
    if cert is None:
        cert = ctx.pointwise()
        if not cert:
            return {"certificate": cert.to_dict(), "pass": False}
    x0 = ctx.x0 if cert.mode is Mode.POINTWISE else None
    samples = collect_samples(cert.mode, sc.xi, sc.three, ctx.grid, x0=x0, norm_kind=ctx.norm)
    verdict = verify_trichotomy(cert.mode, sc.xi, sc.three, cert, ctx.grid, x0=x0, norm_kind=ctx.norm,
                                check_compat=False, samples=samples)
    ctx.rows = margin_rows(samples, cert)
    return {"certificate": cert.to_dict(), "verdict": verdict.to_dict(), "pass": verdict.passed}


def _estimate(ctx: _Context) -> dict:
    sc = ctx.scenario
    glob = estimate_rate_constants(sc.xi, sc.three, Mode.GLOBAL, ctx.grid, nu_grid=ctx.nu_grid(),
                                   N_cap=ctx.N_cap, norm_kind=ctx.norm, check_compat=False)
    point = ctx.pointwise()
    out = {"global": glob.to_dict(), "pointwise": point.to_dict(), "x0": ctx.x0.label()}
    if point:
        v = verify_trichotomy(Mode.POINTWISE, sc.xi, sc.three, point, ctx.grid, x0=ctx.x0,
                              norm_kind=ctx.norm, check_compat=False)
        out["pointwise_verdict"] = v.to_dict()
    # the global estimate may legitimately fail (example 3); the pointwise one is the check
    out["pass"] = bool(point) and out["pointwise_verdict"]["pass"]
    return out


def _phi(ctx: _Context) -> dict:
    sc = ctx.scenario
    cert = ctx.pointwise()
    if not cert:
        return {"certificate": cert.to_dict(), "pass": False}
    phi1, phi2 = phi_from_constants(cert)
    q1, q2 = sc.two
    forward = check_phi_characterization(sc.xi, ctx.x0, q1, q2, phi1, phi2, ctx.grid, norm_kind=ctx.norm,
                                         check_compat=False)
    back = constants_from_phi(phi1, phi2, x0=ctx.x0.label())
    verdict = verify_trichotomy(Mode.POINTWISE, sc.xi, sc.three, back, ctx.grid, x0=ctx.x0, norm_kind=ctx.norm,
                                check_compat=False)
    return {
        "certificate": cert.to_dict(),
        "phi1": phi1.to_dict(),
        "phi2": phi2.to_dict(),
        "characterization": forward.to_dict(),
        "recovered": back.to_dict(),
        "recovered_verdict": verdict.to_dict(),
        "pass": forward.passed and verdict.passed,
    }


def _integrals(ctx: _Context) -> dict:
    """Necessity constants from the verified certificate, checked at one point.

    The default point is the constant limit trajectory; ``options.integral_x0``
    may name a shift instead.
    """
    sc = ctx.scenario
    R1, R2, R3, R4 = sc.four
    cert = ctx.certificate()
    if cert is None:
        cert = ctx.pointwise()
        if not cert:
            return {"certificate": cert.to_dict(), "pass": False}
    where = ctx.cfg.options.get("integral_x0", "limit")
    if where == "limit" and sc.spaces[0].includes_limits:
        x = sc.spaces[0].limit_point()
    else:
        x = sc.base_point(float(0.0 if where == "limit" else where))
    k = necessity_constants(cert)
    checks = [integral_bound(kind, sc.xi, x, R, ctx.grid, tol=ctx.quad_tol, norm_kind=ctx.norm, **k)
              for kind, R in (("U0", R3), ("U0P", R4), ("U1", R1), ("U2", R2))]
    return {"certificate": cert.to_dict(), "x0": x.label(), "constants": k,
            "checks": [r.to_dict() for r in checks], "pass": all(r.passed for r in checks)}


def _hypotheses(ctx: _Context) -> dict:
    sc = ctx.scenario
    gap = float(ctx.cfg.options.get("hypothesis_gap", 2.0))
    rep = check_integral_hypotheses(sc.xi, sc.four, ctx.grid, s0_gaps=(gap,), norm_kind=ctx.norm,
                                     check_compat=False, raise_on_fail=False)
    out = {"hypotheses": rep.to_dict()}
    if not rep.passed:
        out["pass"] = False
        return out
    cert = ctx.certificate()
    alpha = 2.0 * cert.nu[0] if cert is not None else 4.0
    suff = certificate_from_hypotheses(sc.xi, ctx.x0, sc.four, rep, alpha, ctx.grid, norm_kind=ctx.norm)
    verdict = verify_trichotomy(Mode.POINTWISE, sc.xi, suff.families, suff.certificate, ctx.grid, x0=ctx.x0,
                                norm_kind=ctx.norm, check_compat=False)
    out.update(sufficiency=suff.to_dict(), verdict=verdict.to_dict())
    out["pass"] = verdict.passed
    return out


def _falsify(ctx: _Context) -> dict:
    sc = ctx.scenario
    members = sc.members or [ctx.x0]
    thresholds = ctx.cfg.options.get("thresholds", [0.3, 0.2, 0.1, 0.05])
    rep = falsify_global(sc.xi, sc.three, members, thresholds, ctx.grid,
                         nu_grid=np.round(np.arange(0.002, 1.0, 0.002), 10), N_cap=ctx.N_cap, norm_kind=ctx.norm, check_compat=False)
    d = rep.to_dict()
    d["verdict"] = "falsified" if rep.conclusion else "not falsified"
    d["pass"] = rep.conclusion
    return d


_RUNNERS = {
    "axioms": _axioms,
    "compat": _compat,
    "verify": _verify,
    "estimate": _estimate,
    "phi": _phi,
    "integrals": _integrals,
    "hypotheses": _hypotheses,
    "falsify": _falsify,
}

_NUMERIC = (NonConvergenceError, TailUnboundedError, FloatingPointError, OverflowError, ZeroDivisionError)


def _guarded(name: str, ctx: _Context) -> dict:
    try:
        return _RUNNERS[name](ctx)
    except ConfigError:
        raise
    except _NUMERIC as exc:
        return {"error": {"type": type(exc).__name__, "message": str(exc), "numeric": True}, "pass": False}
    except SkewTrichError as exc:
        return {"error": {"type": type(exc).__name__, "message": str(exc), "numeric": False}, "pass": False}


def run_report(cfg: Config, out: Optional[str] = None, csv_path: Optional[str] = None,
               tol: Optional[float] = None, preset: Optional[str] = None, workers: int = 4) -> ReportDocument:
    """Run the configured analyses and assemble (and optionally write) the report.

    Analyses run concurrently; sections are assembled in the fixed order of
    ``ANALYSES`` so the document does not depend on scheduling.
    """
    ctx = _Context(cfg, tol, preset)
    names = [a for a in ANALYSES if a in cfg.resolved_analyses()]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {n: pool.submit(_guarded, n, ctx) for n in names}
        sections = {n: futures[n].result() for n in names}
    passed = all(bool(s.get("pass")) for s in sections.values())
    numeric = any(s.get("error", {}).get("numeric") for s in sections.values())
    code = 0 if passed else (3 if numeric else 1)
    grid_echo = ctx.grid.echo()
    grid_echo["probes"] = ctx.grid.probe_vectors(ctx.scenario.dimension).tolist()
    report = ReportDocument(
        schema_version=SCHEMA_VERSION,
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
        scenario=ctx.scenario.echo(),
        grid=grid_echo,
        config=cfg.to_dict(),
        sections=sections,
        passed=passed,
        exit_code=code,
    )
    report = parse_report(serialize(report))   # normalise to the JSON image
    if out:
        write_atomic(out, serialize(report))
    if csv_path:
        write_csv(csv_path, ctx.rows)
    return report
