"""Acceptance suite: one PASS/FAIL line per criterion in the terminal summary.

Tolerances and runtime limits are the contractual ones; nothing here is tuned
to the observed results.
"""
import time
from fractions import Fraction as F

import numpy as np
import pytest

from chaoticlms import stats, theory
from chaoticlms.cli import main
from chaoticlms.logistic import Constant, LogisticParams, Switched, center, generate_orbit
from chaoticlms.sim import (REFERENCE_CHANNEL, ChaoticDrive, GaussianDrive, fourth_moment_estimate,
                            run_estimation)

M = 128
MU_MAX = 16 / (3 + 2 * M)
SEEDS = range(8)

TABLE1 = [F(1), F(1, 2), F(3, 8), F(5, 16), F(35, 128), F(63, 256), F(231, 1024), F(429, 2048)]
TABLE2 = [F(1), F(0), F(1, 8), F(0), F(3, 128), F(0), F(5, 1024), F(0), F(35, 32768), F(0),
          F(63, 262144), F(0), F(231, 4194304), F(0), F(429, 33554432)]


def _db(x):
    return 10 * np.log10(x)


def _mean_mma(drive, mu, steps, seeds=SEEDS):
    """Linear MMA averaged over seeds; a diverged run makes the average infinite."""
    traces = [run_estimation(drive, REFERENCE_CHANNEL, M, mu, steps, seed=s) for s in seeds]
    return np.array([[t.at(k) for k in range(steps + 1)] for t in traces]).mean(axis=0)


def test_c1_exact_moments(report):
    t0 = time.perf_counter()
    raw = [stats.theoretical_moment(k) for k in range(8)]
    cen = [stats.centered_moment(k) for k in range(15)]
    dt = time.perf_counter() - t0
    ok = raw == TABLE1 and cen == TABLE2 and dt < 1.0
    report(1, ok, f"raw 0..7 and centered 0..14 exact: {raw == TABLE1 and cen == TABLE2}, "
                  f"{dt:.3f} s (< 1 s)")


def test_c2_quadrature_oracle(report):
    t0 = time.perf_counter()
    mom_err = max(abs(stats.quadrature_moment(k) - float(stats.theoretical_moment(k)))
                  for k in range(11))
    ac_err = max(abs(stats.quadrature_autocorr(m) - (0.375 if m == 0 else 0.25))
                 for m in range(11))
    dt = time.perf_counter() - t0
    ok = mom_err < 1e-9 and ac_err < 1e-7 and dt < 10
    report(2, ok, f"max moment err {mom_err:.2e} (< 1e-9), max autocorr err {ac_err:.2e} "
                  f"(< 1e-7), {dt:.2f} s (< 10 s)")


def test_c3_monte_carlo(report):
    t0 = time.perf_counter()
    orbit = generate_orbit(LogisticParams(burn_in=1000), 1_000_000)
    emp = stats.empirical_moments(orbit.samples, 7)
    mom_err = max(abs(e - float(t)) for e, t in zip(emp, TABLE1))
    ac = stats.empirical_autocorr(center(orbit).samples, 50).values
    dt = time.perf_counter() - t0
    tail = np.max(np.abs(ac[1:]))
    ok = mom_err < 0.01 and tail < 0.005 and abs(ac[0] - 0.125) <= 0.005 and dt < 30
    report(3, ok, f"moment err {mom_err:.4f} (< 0.01), C(0) = {ac[0]:.4f} (0.125 +/- 0.005), "
                  f"max |C(1..50)| {tail:.4f} (< 0.005), {dt:.1f} s (< 30 s)")


def test_c4_spectrum_vs_eigensolver(report):
    worst = 0.0
    for m in (1, 4, 16, 64):
        for centered in (False, True):
            R = theory.build_correlation_matrix(m, centered).entries
            numeric = np.sort(np.linalg.eigvalsh(R))
            analytic = np.sort([float(v) for v in theory.analytic_spectrum(m, centered).eigenvalues])
            worst = max(worst, np.max(np.abs(numeric - analytic)))
    centered_one = all(theory.analytic_spectrum(m, True).sigma == 1 for m in (1, 4, 16, 64))
    report("4a", worst < 1e-10 and centered_one,
           f"max |analytic - eigvalsh| {worst:.1e} (< 1e-10), centered sigma = 1: {centered_one}")


@pytest.mark.xfail(strict=True, reason="3/8 diagonal with 1/4 off-diagonal has top eigenvalue "
                                       "(2m+3)/8, so the raw spread is 2m+3; see decisions ledger")
def test_c4_raw_spread_formula(report):
    got = {m: int(theory.analytic_spectrum(m).sigma) for m in (1, 4, 16, 64)}
    numeric = {}
    for m in got:
        ev = np.linalg.eigvalsh(theory.build_correlation_matrix(m).entries)
        numeric[m] = round(float(ev.max() / ev.min()), 9)
    ok = all(got[m] == 2 * m + 1 for m in got)
    report("4b", ok, f"raw sigma = 2m+1 required; analytic {got}, eigvalsh {numeric}")


def test_c5_fourth_moment(report):
    x = center(generate_orbit(LogisticParams(), 1_000_000 + 5)).samples
    est = fourth_moment_estimate(x, 5)
    diag = np.max(np.abs(np.diag(est) - 0.1015625))
    off = np.max(np.abs(est - np.diag(np.diag(est))))
    report(5, diag < 0.01 and off < 0.01,
           f"max diag err {diag:.5f} (< 0.01), max |off-diag| {off:.5f} (< 0.01)")


def test_c6_stability_boundary(report):
    t0 = time.perf_counter()
    drive = ChaoticDrive(Constant(4.0), centered=True)
    ok_run = run_estimation(drive, REFERENCE_CHANNEL, M, MU_MAX, 5000, seed=0)
    bad_run = run_estimation(drive, REFERENCE_CHANNEL, M, 3 * MU_MAX, 5000, seed=0)
    dt = time.perf_counter() - t0
    drop = ok_run.mma_db[0] - ok_run.mma_db[5000] if ok_run.mma.size > 5000 else -np.inf
    ok = not ok_run.diverged and drop >= 40 and bad_run.diverged and dt < 60
    report(6, ok, f"mu_max drop {drop:.1f} dB (>= 40), 3*mu_max diverged: {bad_run.diverged}, "
                  f"{dt:.1f} s (< 60 s)")


def test_c7_drive_ordering(report):
    step = 2000
    cen = _mean_mma(ChaoticDrive(Constant(4.0), centered=True), MU_MAX, step)[step]
    # the raw drive diverges at mu_max, so it runs with the normalized step size
    raw = _mean_mma(ChaoticDrive(Constant(4.0), centered=False), "normalized", step)[step]
    white = _mean_mma(GaussianDrive(std=np.sqrt(1 / 8)), MU_MAX, step)[step]
    gap_raw = _db(raw) - _db(cen)
    gap_white = abs(_db(cen) - _db(white))
    report(7, gap_raw >= 10 and gap_white <= 10,
           f"centered {_db(cen):.1f} dB, raw {_db(raw):.1f} dB (gap {gap_raw:.1f} >= 10), "
           f"white {_db(white):.1f} dB (|gap| {gap_white:.1f} <= 10)")


def test_c8_switching_degradation(report):
    drive = ChaoticDrive(Switched(((0, 4.0), (400, 3.95), (1400, 4.0))), centered=True)
    db = _db(_mean_mma(drive, MU_MAX, 2300))
    slope = {}
    for lo, hi in ((500, 1300), (1500, 2300)):
        k = np.arange(lo, hi + 1)
        slope[lo] = 100 * np.polyfit(k, db[k], 1)[0]
    report(8, slope[500] > slope[1500],
           f"slope 500-1300 {slope[500]:.2f} dB/100 steps vs 1500-2300 {slope[1500]:.2f}")


def test_c9_mu_sweep(report):
    drive = ChaoticDrive(Constant(4.0), centered=True)
    level = {s: _mean_mma(drive, s * MU_MAX, 2000)[2000] for s in (0.25, 0.5, 1.0, 1.5)}
    stable = [s for s in (0.25, 0.5, 1.0) if np.isfinite(level[s])]
    monotone = all(level[a] > level[b] for a, b in zip(stable, stable[1:]))
    worse = not np.isfinite(level[1.5]) or level[1.5] > level[1.0]
    dbs = ", ".join(f"{s}: {_db(v):.1f}" for s, v in level.items())
    report(9, monotone and worse and len(stable) >= 2, f"step-2000 MMA dB by mu/mu_max {{{dbs}}}")


def test_c10_determinism(report, tmp_path):
    same = {}
    for preset in ("fig3", "fig4", "fig6"):
        outs = [tmp_path / f"{preset}_{k}" for k in range(2)]
        for out in outs:
            main(["estimate", "--preset", preset, "--no-plot", "--out", str(out)])
        files = sorted(p.name for p in outs[0].glob("*.csv"))
        same[preset] = bool(files) and all(
            (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    for out in (tmp_path / "t1_a", tmp_path / "t1_b"):
        main(["stats", "--preset", "table1", "--samples", "100000", "--out", str(out)])
    same["table1"] = ((tmp_path / "t1_a" / "moments.csv").read_bytes()
                      == (tmp_path / "t1_b" / "moments.csv").read_bytes())
    report(10, all(same.values()), f"byte-identical reruns: {same}")
