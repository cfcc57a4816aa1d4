"""Acceptance criteria, one test per criterion (criterion 4 split into 4a/4b).

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""

import functools
import math
import os
import subprocess
import sys

import numpy as np

from skewtrich.basespace import BaseSpace, TrajectorySpec
from skewtrich.closed_form import closed_form_log_growth
from skewtrich.core import Law, NormKind, check_cocycle_axioms, check_semiflow_axioms, grid_preset
from skewtrich.integral import (certificate_from_hypotheses, check_phi_characterization, check_integral_hypotheses,
                                constants_from_phi, integral_bound, necessity_constants, phi_from_constants)
from skewtrich.projectors import Regime, check_compatibility
from skewtrich.quadrature import quadrature
from skewtrich.scenarios import build_scenario
from skewtrich.trichotomy import (Mode, RateCertificate, estimate_rate_constants, falsify_global,
                                  verify_trichotomy)

RESULTS = {}
ORDER = ["1", "2", "3", "4a", "4b", "5", "6", "7", "8", "9"]

EX2 = build_scenario("example2")
X0 = EX2.base_point(0.0)
BASIS = np.eye(3)
GLOBAL_CERT = RateCertificate.uniform(1.0 + 1e-9, 2.0, 1.0, 1.0, mode="global")


def criterion(key, title):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                msg = str(exc).strip().splitlines()[0] if str(exc).strip() else ""
                RESULTS[key] = (False, title, f"{type(exc).__name__}: {msg}"[:200])
                raise
            RESULTS[key] = (True, title, detail or "")
        return wrapper
    return deco


def summary_lines():
    out = []
    for key in ORDER:
        if key in RESULTS:
            ok, title, detail = RESULTS[key]
            out.append(f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
    return out


@criterion("1", "axiom residuals <= 1e-9 on examples 1-3")
def test_criterion_1_axioms():
    worst = {}
    for name in ("example1", "example2", "example3"):
        sc = build_scenario(name)
        grid = grid_preset("default")
        reps = {**check_semiflow_axioms(sc.semiflow, grid),
                **check_cocycle_axioms(sc.cocycle, sc.semiflow, grid, norm_kind=sc.norm_kind)}
        for law in Law:
            assert reps[law].max_residual <= 1e-9, (name, law, reps[law].max_residual)
            worst[law.value] = max(worst.get(law.value, 0.0), reps[law].max_residual)
    return ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


@criterion("2", "compatibility regimes under L2 (<= 1e-12); cq2 L1 witness = 2")
def test_criterion_2_compatibility():
    grid = grid_preset("default")
    worst = 0.0
    for regime, fams, x0 in ((Regime.THREE_GLOBAL, EX2.three, None), (Regime.THREE_POINTWISE, EX2.three, X0),
                             (Regime.TWO, EX2.two, X0), (Regime.FOUR, EX2.four, X0)):
        rep = check_compatibility(regime, fams, EX2.xi, grid, x0=x0, norm_kind=NormKind.L2)
        r = max(rep.residuals.values())
        assert rep.passed and r <= 1e-12, (regime, rep.residuals)
        worst = max(worst, r)
    witness = grid_preset("default", probes=[[1.0, 1.0, 0.0]])
    rep = check_compatibility(Regime.TWO, EX2.two, EX2.xi, witness, x0=X0, norm_kind=NormKind.L1)
    assert not rep.passed and rep.residuals["cq2"] == 2.0
    return f"max L2 residual {worst:.1e}, L1 cq2 {rep.residuals['cq2']}"


@criterion("3", "example 2 global certificate and rate recovery")
def test_criterion_3_example2():
    grid = grid_preset("default", probes=BASIS)
    v = verify_trichotomy("global", EX2.xi, EX2.three, GLOBAL_CERT, grid, norm_kind=EX2.norm_kind)
    assert v.passed and max(GLOBAL_CERT.N) <= 1 + 1e-6, v.margins
    dense = grid_preset("dense", probes=BASIS)
    nu_grid = np.round(np.arange(0.05, 2.0001, 0.05), 10)
    est = estimate_rate_constants(EX2.xi, EX2.three, "global", dense, nu_grid=nu_grid, N_cap=1 + 1e-6,
                                  norm_kind=EX2.norm_kind)
    assert est and abs(est.nu[1] - 1.0) <= 0.1 and abs(est.nu[2] - 1.0) <= 0.1, est
    return f"min margin {v.min_margin:.1e}; estimated nu={est.nu}"


def _example3_pointwise():
    ex3 = build_scenario("example3", {"n_list": [1, 2, 5, 10]})
    grid = grid_preset("default", probes=BASIS)
    fine = np.round(np.arange(0.002, 1.0, 0.002), 10)
    rep = falsify_global(ex3.xi, ex3.three, ex3.members, [0.3, 0.2, 0.1, 0.05], grid, nu_grid=fine,
                         N_cap=1 + 1e-6, norm_kind=ex3.norm_kind)
    return ex3, grid, rep


@criterion("4a", "example 3 per-point certificates, bands, strict decrease")
def test_criterion_4a_pointwise_rates():
    _, _, rep = _example3_pointwise()
    rates = [r for _, r in rep.rates]
    assert all(r is not None for r in rates)
    for n, r in zip((1, 2, 5, 10), rates):
        assert 1 / (2 * n + 1) - 0.02 <= r <= 1 / (2 * n) + 0.02, (n, r)
    assert all(b < a for a, b in zip(rates, rates[1:]))
    assert rep.conclusion
    return "nu1 = " + ", ".join(f"{r:.3f}" for r in rates)


@criterion("4b", "no single certificate with N <= 1e6 across all four points")
def test_criterion_4b_no_joint_certificate():
    ex3 = build_scenario("example3", {"n_list": [1, 2, 5, 10]})
    grid = grid_preset("default", probes=BASIS)
    joint = estimate_rate_constants(ex3.xi, ex3.three, "pointwise", grid, N_cap=1e6, x0=ex3.members,
                                    norm_kind=ex3.norm_kind, check_compat=False)
    assert not joint, f"joint certificate exists on the grid: N={joint.N}, nu={joint.nu}"
    return "no joint certificate"


@criterion("5", "function-class round trip on example 2")
def test_criterion_5_phi_round_trip():
    dense = grid_preset("dense", probes=BASIS)
    cert = estimate_rate_constants(EX2.xi, EX2.three, "pointwise", dense, nu_grid=np.arange(0.01, 3, 0.01),
                                   N_cap=1 + 1e-6, x0=X0, norm_kind=EX2.norm_kind)
    assert cert
    phi1, phi2 = phi_from_constants(cert)
    q1, q2 = EX2.two
    fwd = check_phi_characterization(EX2.xi, X0, q1, q2, phi1, phi2, dense, norm_kind=EX2.norm_kind)
    back = constants_from_phi(phi1, phi2, x0=X0.label())
    v = verify_trichotomy("pointwise", EX2.xi, EX2.three, back, dense, x0=X0, norm_kind=EX2.norm_kind)
    assert fwd.passed and min(fwd.margins.values()) >= -1e-9, fwd.margins
    assert v.passed and min(v.margins.values()) >= -1e-9, v.margins
    return f"phi margins >= {min(fwd.margins.values()):.1e}; recovered nu={tuple(round(n, 4) for n in back.nu)}"


@criterion("6", "necessity integral bounds with the certificate's constants; U1 oracle 0.5")
def test_criterion_6_necessity():
    k = necessity_constants(GLOBAL_CERT)
    limit = EX2.spaces[0].limit_point()
    grid = grid_preset("default", probes=BASIS)
    R1, R2, R3, R4 = EX2.four
    results = {kind: integral_bound(kind, EX2.xi, limit, R, grid, tol=1e-8, norm_kind=EX2.norm_kind, **k)
               for kind, R in (("U0", R3), ("U0P", R4), ("U1", R1), ("U2", R2))}
    for kind, r in results.items():
        assert r.passed, (kind, r.worst_ratio, r.worst_cell)
    assert abs(results["U1"].integral - 0.5) < 1e-6
    return f"at {limit.label()}: U1 integral {results['U1'].integral:.9f}; worst ratios " + \
        ", ".join(f"{kk}={r.worst_ratio:.3f}" for kk, r in results.items())


@criterion("7", "sufficiency hypotheses (c = e^-2 at gap 2) and derived certificate")
def test_criterion_7_sufficiency():
    grid = grid_preset("default", probes=BASIS)
    hyp = check_integral_hypotheses(EX2.xi, EX2.four, grid, s0_gaps=(2.0,), norm_kind=EX2.norm_kind)
    assert hyp.passed and hyp.st_found[0] == 2.0 and hyp.in_found[0] == 2.0
    assert abs(hyp.c - math.exp(-2)) <= 1e-6, hyp.c
    assert hyp.eg_constants and hyp.ed_constants
    suff = certificate_from_hypotheses(EX2.xi, X0, EX2.four, hyp, 2.0 * GLOBAL_CERT.nu[0], grid,
                                       norm_kind=EX2.norm_kind)
    v = verify_trichotomy(Mode.POINTWISE, EX2.xi, suff.families, suff.certificate, grid, x0=X0,
                          norm_kind=EX2.norm_kind)
    assert v.passed, v.margins
    return f"c={hyp.c:.6f}; certificate nu={suff.certificate.nu}"


@criterion("8", "closed form vs quadrature, 200 pairs per generator, t <= 40")
def test_criterion_8_oracle():
    gens = [TrajectorySpec.exp_decay(1.0, 1.0), TrajectorySpec.constant(1.0)]
    gens += [TrajectorySpec.interval_decay(n) for n in (1, 2, 5, 10)]
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for gen in gens:
        space = BaseSpace(gen)
        for _ in range(200):
            s, t = np.sort(rng.uniform(0.0, 40.0, size=2))
            shift = float(rng.uniform(0.0, 10.0))
            x = space.point(shift)
            exact = closed_form_log_growth(gen, shift, float(s), float(t))
            approx, _ = quadrature(lambda tau: x(tau - s), float(s), float(t), tol=1e-10)
            worst = max(worst, abs(exact - approx))
    assert worst <= 1e-8, worst
    return f"max abs diff {worst:.1e}"


@criterion("9", "report determinism (seed 7) and exit code 0")
def test_criterion_9_determinism(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        proc = subprocess.run([sys.executable, "-m", "skewtrich.cli", "report", "--scenario", "example2",
                               "--seed", "7", "--out", str(path)], capture_output=True, text=True,
                              env={**os.environ})
        assert proc.returncode == 0, proc.stderr
        outs.append([ln for ln in path.read_text().splitlines() if '"timestamp"' not in ln])
    assert outs[0] == outs[1]
    return f"{len(outs[0])} identical lines"


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for key, fn in [("1", test_criterion_1_axioms), ("2", test_criterion_2_compatibility),
                    ("3", test_criterion_3_example2), ("4a", test_criterion_4a_pointwise_rates),
                    ("4b", test_criterion_4b_no_joint_certificate), ("5", test_criterion_5_phi_round_trip),
                    ("6", test_criterion_6_necessity), ("7", test_criterion_7_sufficiency),
                    ("8", test_criterion_8_oracle)]:
        try:
            fn()
        except BaseException:
            pass
    with tempfile.TemporaryDirectory() as d:
        try:
            test_criterion_9_determinism(Path(d))
        except BaseException:
            pass
    print("\n".join(summary_lines()))
