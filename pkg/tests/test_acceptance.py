"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``. Tolerances are the stated ones;
a failing line is a faithful report, not a flaky test.
"""

import io
import math

import numpy as np
import pytest

from rci_secrecy import rmt
from rci_secrecy.cli import main
from rci_secrecy.experiments import normalized_loss_trials
from rci_secrecy.montecarlo import (
    SystemConfig,
    build_rci,
    compute_rates,
    ergodic_run,
    leave_one_out_forms,
    rewritten_sinrs,
    sample_channel,
    trial_rng,
)
from rci_secrecy.optimize import solve_beta_fixedpoint


def verdict(report, n, ok, detail):
    report(f"CRITERION {n:>2}: {'PASS' if ok else 'FAIL'} | {detail}")
    return ok


def admissible_grid(beta, n=1000, clip=50.0):
    """``n`` points of the large-system admissible set, dense near the spectrum edges."""
    lo, hi = rmt.excluded_interval(beta)
    left = lo - np.geomspace(1e-9, clip + lo, 300)[::-1]
    right = hi + np.geomspace(1e-9, clip - hi, n - 300)
    xs = np.concatenate([left, right])
    return xs[xs != 0.0]


def test_c01_quadratic_identity(report):
    rng = np.random.default_rng(2024)
    worst, n = 0.0, 0
    while n < 10_000:
        beta = rng.uniform(0.01, 5.0)
        xi = rng.uniform(-50.0, 50.0)
        lo, hi = rmt.excluded_interval(beta)
        if lo <= xi <= hi or xi == 0.0:
            continue
        g = rmt.g_deteq(beta, xi)
        worst = max(worst, abs(xi * g * g + (xi + beta - 1.0) * g - 1.0))
        n += 1
    ok = verdict(report, 1, worst < 1e-10, f"max residual {worst:.2e} over {n} points")
    assert ok


def test_c02_rewritten_sinrs_agree(report):
    worst = 0.0
    for M, K in ((8, 8), (16, 12), (10, 15)):
        xi = rmt.xi_star(K / M, 10.0)
        for t in range(100):
            H = sample_channel(SystemConfig(M, K, 10.0), trial_rng(202, t)).H
            P = build_rci(H, xi)
            rep = compute_rates(H, P, 10.0)
            su, se = rewritten_sinrs(leave_one_out_forms(H, xi), P.gamma, 10.0)
            worst = max(worst,
                        np.max(np.abs(su - rep.sinr_user) / np.maximum(1.0, rep.sinr_user)),
                        np.max(np.abs(se - rep.sinr_eve) / np.maximum(1.0, rep.sinr_eve)))
    ok = verdict(report, 2, worst < 1e-9, f"max relative SINR difference {worst:.2e}")
    assert ok


@pytest.mark.slow
def test_c03_mc_converges_to_deteq(report):
    M, fails, lines = 64, [], []
    for beta in (0.8, 1.0, 1.2):
        K = int(round(beta * M))
        for rdb in (0.0, 10.0, 20.0):
            rho = rmt.db_to_linear(rdb)
            res = ergodic_run(SystemConfig(M, K, rho, trials=500, seed=1))
            de = rmt.secrecy_rate_deteq(rmt.LoadPoint(K / M, rho, rmt.xi_star(K / M, rho)))
            diff = abs(res.mean / M - de.rate_per_antenna)
            tol = 0.10 if (beta == 1.0 and rdb == 20.0) else 0.05
            lines.append(f"b={beta} {rdb:g}dB:{diff:.3f}")
            if diff > tol:
                fails.append((beta, rdb, diff))
    ok = verdict(report, 3, not fails, "per-antenna |MC-deteq| " + " ".join(lines))
    assert ok, fails


def test_c04_xi_star_closed_form(report):
    def f(b, r, x):
        return rmt.secrecy_rate_deteq(rmt.LoadPoint(b, r, x)).log_ratio

    worst_grad, worst_dom = 0.0, -math.inf
    for b in (0.5, 0.8, 1.0, 1.2, 1.5):
        for r in (1.0, 10.0, 100.0):
            x = rmt.xi_star(b, r)
            h = 1e-7 * abs(x)
            grad = (f(b, r, x + h) - f(b, r, x - h)) / (2 * h)
            worst_grad = max(worst_grad, abs(grad) / abs(f(b, r, x)))
            best = max(f(b, r, t) for t in admissible_grid(b))
            worst_dom = max(worst_dom, best - f(b, r, x))
    special = max(abs(rmt.xi_star(1.0, r) - 1.0 / (3 * r + 1 + math.sqrt(3 * r + 1)))
                  for r in np.logspace(-2, 6, 50))
    ok = worst_grad < 1e-5 and worst_dom <= 1e-9 and special < 1e-10
    verdict(report, 4, ok, f"rel. gradient {worst_grad:.1e}, grid excess {worst_dom:.1e}, "
                           f"beta=1 form error {special:.1e}")
    assert ok


@pytest.mark.slow
def test_c05_empirical_xi_loss(report):
    worst, lines = 0.0, []
    for M in (16, 32):
        K = int(round(0.8 * M))
        for rdb in (0.0, 10.0, 20.0):
            losses, _ = normalized_loss_trials(M, K, rmt.db_to_linear(rdb), 100, 5)
            worst = max(worst, losses.mean())
            lines.append(f"M={M} {rdb:g}dB:{100 * losses.mean():.2f}%")
    ok = verdict(report, 5, worst < 0.02, "mean loss " + " ".join(lines))
    assert ok


@pytest.mark.slow
def test_c06_rcipr_peak(report):
    beta = 1.2
    grid = np.arange(1.0, 60.0001, 0.25)
    vals = [rmt.secrecy_rate_deteq(rmt.LoadPoint(beta, r, rmt.xi_star(beta, r))).rate_per_user
            for r in grid]
    i = int(np.argmax(vals))
    at_ok = abs(grid[i] - 24.0) <= 0.25
    peak_ok = abs(vals[i] - math.log2(1.8)) <= 1e-6
    # simulated RCI-PR curve over the fig5 SNR grid, common channel draws for every point
    M, K = 10, 12
    curve = {}
    for rdb in np.arange(0.0, 40.001, 2.5):
        curve[rdb] = ergodic_run(SystemConfig(M, K, rmt.db_to_linear(rdb), trials=500, seed=6),
                                 "rci_pr")
    top = max(v.mean for v in curve.values())
    at25 = curve[25.0]
    mc_ok = abs(at25.mean - top) <= at25.stderr
    ok = at_ok and peak_ok and mc_ok
    verdict(report, 6, ok, f"grid argmax rho={grid[i]:g}, peak {vals[i]:.9f} vs "
                           f"{math.log2(1.8):.9f}, MC@25dB {at25.mean:.4f} vs curve max "
                           f"{top:.4f} (stderr {at25.stderr:.4f})")
    assert ok


def test_c07_loss_constants(report):
    target = 0.5 * math.log2(64 / 27)
    loss_law = rmt.sumrate_nosecrecy_highsnr(1.0, 1e6) - rmt.rcipr_rate_highsnr(1.0, 1e6)
    loss_deteq = (rmt.sumrate_nosecrecy_deteq(1.0, 1e6)
                  - rmt.rcipr_rate_deteq(1.0, 1e6).rate_per_user)
    b = 1.2
    g1 = rmt.sumrate_nosecrecy_highsnr(b, 1e6) - rmt.rcipr_rate_highsnr(b, 1e6)
    g2 = rmt.su_secrecy_capacity_highsnr(b, 1e6) - rmt.rcipr_rate_highsnr(b, 1e6)
    e1, e2 = abs(g1 - (2 - math.log2(b))), abs(g2 - (2 - 2 * math.log2(b)))
    ok = (abs(loss_law - 0.62149) <= 0.02 and abs(loss_deteq - 0.62149) <= 0.02
          and e1 < 1e-12 and e2 < 1e-12)
    verdict(report, 7, ok, f"beta=1 loss law {loss_law:.5f}, deteq@1e6 {loss_deteq:.5f} "
                           f"(target {target:.5f}); beta=1.2 gap errors {e1:.1e}, {e2:.1e}")
    assert ok


def test_c08_csi_suite(report):
    rho = 1e6
    exact = all(
        rmt.secrecy_rate_deteq_csi(rmt.LoadPoint(b, r, rmt.xi_star(b, r)), 0.0)
        == rmt.secrecy_rate_deteq(rmt.LoadPoint(b, r, rmt.xi_star(b, r)))
        for b in (0.5, 1.0, 1.2, 2.5) for r in (1.0, 100.0)
    )
    gaps = {}
    for b in (0.5, 0.8, 1.0):
        C = rmt.gap_constant(b, 2.0).C
        gaps[b] = (rmt.rcipr_rate_deteq(b, rho).rate_per_user
                   - rmt.rcipr_rate_deteq(b, rho, C / rho).rate_per_user)
    gap_ok = all(abs(v - 1.0) <= 0.02 for v in gaps.values())
    over = (rmt.rcipr_rate_deteq(1.2, rho).rate_per_user
            - rmt.rcipr_rate_deteq(1.2, rho, 0.1 / rho).rate_per_user)
    over_ok = abs(over) <= 0.02
    bits = rmt.feedback_bits(10, 30.0, 2.0)
    ok = exact and gap_ok and over_ok and bits == 97
    gap_txt = ", ".join(f"beta={k}:{v:.4f}" for k, v in gaps.items())
    verdict(report, 8, ok, f"tau=0 exact {exact}; b=2 gaps {gap_txt} (target 1.0+-0.02); "
                           f"overloaded gap {over:.2e}; feedback bits {bits}")
    assert ok


def test_c09_fixed_point(report):
    rhos = np.logspace(-1, 8, 40)
    roots = [solve_beta_fixedpoint(r) for r in rhos]
    resid = max(abs(rmt.beta_fixedpoint_residual(b, r)) for b, r in zip(roots, rhos))
    high = solve_beta_fixedpoint(1e6)
    mono = bool(np.all(np.diff(roots) > 0))
    ok = resid < 1e-10 and high > 0.9 and mono
    verdict(report, 9, ok, f"max residual {resid:.1e}, beta(1e6)={high:.4f}, "
                           f"monotone {mono}")
    assert ok


def _cli_bytes(tmp_path, name, *argv):
    path = tmp_path / name
    out, err = io.StringIO(), io.StringIO()
    assert main([*argv, "--out", str(path)], stdout=out, stderr=err) == 0, err.getvalue()
    return path.read_bytes()


def test_c10_determinism(tmp_path, report):
    runs = [
        ("mc", "--M", "16", "--K", "12", "--rho-db", "20", "--trials", "50", "--seed", "7"),
        ("mc", "--M", "10", "--K", "12", "--rho-db", "25", "--trials", "50", "--seed", "7",
         "--tau-sq", "0.01", "--threads", "4"),
        ("figure", "fig2", "--M", "16", "--trials", "40", "--seed", "7"),
        ("figure", "fig5", "--trials", "40", "--seed", "3", "--rho-db", "10,20,30"),
    ]
    same = []
    for k, argv in enumerate(runs):
        a = _cli_bytes(tmp_path, f"a{k}.csv", *argv)
        b = _cli_bytes(tmp_path, f"b{k}.csv", *argv)
        same.append(a == b)
    threads = [_cli_bytes(tmp_path, f"t{w}.csv", "mc", "--M", "12", "--K", "12",
                          "--trials", "30", "--seed", "2", "--threads", w) for w in ("1", "3")]
    ok = all(same) and threads[0] == threads[1]
    verdict(report, 10, ok, f"{sum(same)}/{len(same)} invocations byte-identical; "
                            f"thread count invariant {threads[0] == threads[1]}")
    assert ok
