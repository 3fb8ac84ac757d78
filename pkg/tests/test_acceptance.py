"""Acceptance criteria. Each test prints one PASS/FAIL line, then asserts."""

import dataclasses

import numpy as np
import pytest

from activemech.analysis import CONVERGENCE_DTS, DEAD_BAND, REFERENCE_DT, oscillation_score
from activemech.core import (
    LagrangianMoments,
    MinimalModelParams,
    MomentPair,
    active_energy,
    active_stiffness_minimal,
    active_tension_lagrangian,
    active_tension_minimal,
    stiffness_fd,
    to_eulerian,
    to_lagrangian,
)
from activemech.coupling import SchemeKind, simulate
from activemech.mechanics import MechanicsParams
from activemech.models import build_model
from activemech.models.rdq20 import N_PI
from activemech.params import find_params_file
from activemech.presets import fig3_config, run_preset, twitch_config
from activemech.stability import (
    EigenSet,
    assemble,
    closed_form_eigs,
    eig3,
    instability_windows,
    jacobian_radius,
    log_grid,
    match_eigs,
    minimal_iteration_map,
    sweep,
    threshold_dt,
)

P = MinimalModelParams()
SCHEMES = (SchemeKind.MONOLITHIC, SchemeKind.SEGREGATED, SchemeKind.STABILIZED)
SEED = 20240611


@pytest.fixture
def report(capsys):
    def _report(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return _report


def test_c01_eigenvalue_oracle(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(1000):
        mu0, dt = rng.uniform(0.0, 0.22), 10 ** rng.uniform(-5, 0)
        for s in SCHEMES:
            cf = closed_form_eigs(s, mu0, dt)
            err = match_eigs(eig3(assemble(s, mu0, dt)), cf) / cf.radius
            worst = max(worst, err)
    report(1, worst <= 1e-10, f"max relative eigenvalue mismatch {worst:.2e} over 1000 samples x 3 schemes (tol 1e-10)")


def test_c02_quasistatic_stability(report):
    grid = log_grid(1e-6, 10.0, 200)
    max_rho = {}
    for k_p in (1e6, 4e6):
        mech = MechanicsParams(k_p=k_p)
        for s in (SchemeKind.MONOLITHIC, SchemeKind.STABILIZED):
            max_rho[(s.value, k_p)] = float(np.max(sweep(s, grid, mech=mech).rho))
    seg = sweep(SchemeKind.SEGREGATED, grid, mech=MechanicsParams(k_p=1e6))
    thr = threshold_dt(seg)
    below = [r.rho for r in seg.rows if thr is not None and r.dt <= thr]
    limit = eig3(assemble(SchemeKind.SEGREGATED, P.mu0_steady, 1e-10)).radius
    ok = (
        all(v < 1 for v in max_rho.values())
        and thr is not None
        and len(below) > 0
        and all(r > 1 for r in below)
        and abs(limit - 3.9) <= 1e-3
    )
    report(
        2,
        ok,
        f"max radius stabilized/monolithic {max(max_rho.values()):.6f}; segregated unstable below dt={thr:.3g} s "
        f"({len(below)} grid points); radius at dt=1e-10 s {limit:.6f} (target 3.9 +- 1e-3)",
    )


def test_c03_damped_inertial_windows(report):
    grid = log_grid(1e-6, 10.0, 200)
    details, ok = [], True
    for mass in (0.0, 0.1):
        mech = MechanicsParams(mass=mass, sigma=10.0, k_p=1e6)
        seg = sweep(SchemeKind.SEGREGATED, grid, mech=mech)
        windows = instability_windows(seg)
        interior = len(windows) == 1 and grid[0] < windows[0][0] and windows[0][1] < grid[-1]
        stable = max(float(np.max(sweep(s, grid, mech=mech).rho)) for s in (SchemeKind.MONOLITHIC, SchemeKind.STABILIZED))
        ok &= interior and stable <= 1.0
        details.append(f"M={mass}: segregated window {windows}, stable-scheme max radius {stable:.6f}")
    report(3, ok, "; ".join(details))


def test_c04_fractional_equivalence(report):
    cfg = twitch_config("MDM", SchemeKind.STABILIZED, dt=1e-3, t_end=1.0, r0=(P.mu0_steady, 0.0))
    stab = simulate(cfg)
    frac = simulate(dataclasses.replace(cfg, scheme=SchemeKind.FRACTIONAL))
    d_lam = float(np.max(np.abs(stab.lam - frac.lam)))
    d_mu1 = float(np.max(np.abs(stab.states[:, 1] - frac.extra["mu1_tilde_star"])))
    ok = stab.ok and frac.ok and len(stab) == 1001 and d_lam <= 1e-12 and d_mu1 <= 1e-12
    report(4, ok, f"max |lambda_stab - lambda_frac| = {d_lam:.2e}, max |mu1 - mu1_tilde*| = {d_mu1:.2e} (tol 1e-12)")


def test_c05_convergence_order(report):
    bundle = run_preset("convergence", model="MDM")
    conv = bundle.summary["convergence"]
    slope = conv["slopes"]["stabilized_segregated"]["e_inf"]
    stab, mono = np.array(conv["e_inf"]["stabilized_segregated"]), np.array(conv["e_inf"]["monolithic"])
    ratio = stab / mono
    ok = not conv["failures"] and 0.85 <= slope <= 1.15 and bool(np.all(ratio < 5))
    report(
        5,
        ok,
        f"stabilized e_inf slope {slope:.3f} (target [0.85, 1.15]); stabilized/monolithic e_inf ratios "
        f"{np.array2string(ratio, precision=2)} (target < 5) at dt {list(CONVERGENCE_DTS)} vs reference {REFERENCE_DT}",
    )


def test_c06_oscillation_removal(report):
    scores = {}
    for k_p in (1e6, 4e6):
        for s in SCHEMES:
            tr = simulate(fig3_config(s, k_p, dt=1e-3, t_end=1.0))
            scores[(s.value, k_p)] = (oscillation_score(tr.lam), tr.status)
    seg, stab = scores[("segregated", 1e6)][0], scores[("stabilized_segregated", 1e6)][0]
    kp4 = [scores[(s.value, 4e6)] for s in SCHEMES]
    ok = seg >= 10 * stab and seg > 0 and all(sc == 0.0 and st == "ok" for sc, st in kp4)
    report(
        6,
        ok,
        f"K_p=1 MPa: segregated score {seg:.3f} vs stabilized {stab:.3g}; "
        f"K_p=4 MPa scores {[sc for sc, _ in kp4]} (dead band {DEAD_BAND})",
    )


def _states(model_id, rng, n):
    states = []
    for _ in range(n):
        lam = rng.uniform(-0.15, 0.15)
        ca = rng.uniform(0.05, 2.0)
        lam_dot = rng.uniform(-2.0, 2.0)
        if model_id == "MDM":
            r = np.array([rng.uniform(0.01, 0.22), rng.uniform(-2e-3, 4e-3)])
        elif model_id == "NHS06":
            r = np.array([rng.uniform(0, 70), rng.uniform(0.05, 1.0), *rng.uniform(-0.05, 0.05, 3)])
        elif model_id == "L17":
            b, w, s, _ = rng.dirichlet(np.ones(4))
            r = np.array([rng.uniform(0.01, 1.0), b, w, s, *rng.uniform(-0.05, 0.05, 2)])
        else:
            # analytic stiffness is the exact derivative only where |lambda_dot| is differentiable
            lam_dot = 0.0
            r = np.concatenate((rng.dirichlet(np.ones(N_PI)), rng.uniform(0.01, 0.3, 2), rng.uniform(-0.01, 0.01, 2)))
        states.append((r, ca, lam, lam_dot))
    return states


def test_c07_stiffness_oracle(report):
    rng = np.random.default_rng(SEED)
    worst, counts, skipped = {}, {}, []
    for model_id in ("MDM", "NHS06", "L17", "RDQ20-MF"):
        if model_id != "MDM" and find_params_file(model_id) is None:
            skipped.append(model_id)
            continue
        m = build_model(model_id)
        errs = []
        for r, ca, lam, lam_dot in _states(model_id, rng, 120):
            ka = m.stiffness(r, lam)
            errs.append(abs(stiffness_fd(m, r, ca, lam, lam_dot) - ka) / abs(ka))
        worst[model_id], counts[model_id] = max(errs), len(errs)
    ok = all(v <= 1e-5 for v in worst.values()) and all(c >= 100 for c in counts.values())
    detail = ", ".join(f"{k} {v:.1e} ({counts[k]} states)" for k, v in worst.items())
    if skipped:
        detail += f"; skipped (no parameter file): {', '.join(skipped)}"
    report(7, ok, f"max relative |K_a - K_fd|: {detail} (tol 1e-5)")


def test_c08_steady_state_calibration(report):
    ta = active_tension_minimal(P.mu1_steady, P.a_xb)
    ka = active_stiffness_minimal(P.mu0_steady, P.a_xb)
    ok = abs(ta / 60e3 - 1) <= 1e-3 and abs(ka / 3.9e6 - 1) <= 1e-3
    report(8, ok, f"T_a = {ta / 1e3:.4f} kPa (60 +- 0.1%), K_a = {ka / 1e6:.5f} MPa (3.9 +- 0.1%)")


def test_c09_frame_and_energy_identities(report):
    rng = np.random.default_rng(SEED)
    eps = np.finfo(float).eps
    rt, tension_gap, fd_ratio = 0.0, 0.0, 0.0
    for _ in range(1000):
        mu0, mu1, mu2 = rng.uniform(0, 0.3), rng.uniform(-0.01, 0.01), rng.uniform(0, 1e-3)
        lam = rng.uniform(-0.3, 0.3)
        hat = to_lagrangian(MomentPair(mu0, mu1), lam, mu2)
        back, mu2b = to_eulerian(hat, lam)
        scale = abs(mu0) + abs(mu1) + abs(mu2) + 1e-300
        rt = max(rt, abs(back.mu0 - mu0) / scale, abs(back.mu1 - mu1) / scale, abs(mu2b - mu2) / scale)
        t1 = active_tension_minimal(mu1, P.a_xb)
        t2 = active_tension_lagrangian(hat, lam, P.a_xb)
        tension_gap = max(tension_gap, abs(t1 - t2) / (P.a_xb * (abs(mu1) + abs(lam * mu0)) * eps))
        exact = P.a_xb * (hat.mu0_hat * lam + hat.mu1_hat)
        for delta in (1e-2, 1e-3):
            fd = (active_energy(hat, lam + delta, P.a_xb) - active_energy(hat, lam - delta, P.a_xb)) / (2 * delta)
            # O(delta^2) truncation plus round-off of the energy difference
            bound = delta**2 * P.a_xb * scale + 8 * eps * P.a_xb * (mu0 + abs(mu1) + mu2) / delta
            fd_ratio = max(fd_ratio, abs(fd - exact) / bound)
    ok = rt <= 1e-14 and tension_gap <= 4.0 and fd_ratio <= 1.0
    report(
        9,
        ok,
        f"round trip {rt:.1e} (tol 1e-14); F1/F2 tension gap {tension_gap:.2f} ulp-scale units (<= 4); "
        f"FD energy derivative error / O(delta^2) bound {fd_ratio:.2e} (<= 1)",
    )


def test_c10_jacobian_structure(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for s in SCHEMES:
        for _ in range(20):
            dt = 10 ** rng.uniform(-4, -1)
            psi = np.array([rng.uniform(0, 0.22), rng.uniform(-2e-3, 2e-3), rng.uniform(-0.05, 0.0), rng.uniform(-0.05, 0.0)])
            phi = minimal_iteration_map(s, dt)
            _, eigs = jacobian_radius(phi, psi, delta=np.array([1e-2, 1e-3, 1e-2, 1e-2]))
            want = np.append(eig3(assemble(s, phi(psi)[0], dt)).values, 1.0 / (1.0 + P.r * dt))
            err = match_eigs(EigenSet(eigs), EigenSet(want)) / max(1.0, float(np.max(np.abs(want))))
            worst = max(worst, err)
    report(10, worst <= 1e-6, f"max spectrum mismatch {worst:.2e} over 20 points x 3 schemes (tol 1e-6)")
