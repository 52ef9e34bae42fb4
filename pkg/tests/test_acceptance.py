"""The nine acceptance criteria at their stated sizes and tolerances."""
import pytest

from excursionlab.cli import main
from excursionlab.core import Interval, Side
from excursionlab.engine import GridSpec
from excursionlab.experiments import (application_limit, check_convergence, check_kernel_identity, p0_sample,
                                      rate_check, run_straddle_study)
from excursionlab.validation import (exit_rate_epsilon_check, ito_tail_check, psi_oracle_check,
                                     sampler_check)

SEED = 20261016
UNIT = Interval(0.0, 1.0)
GRID = GridSpec()
N_STUDY = 20000


@pytest.fixture(scope="module")
def studies():
    return {t: run_straddle_study(t, N_STUDY, 0.0, UNIT, GRID, SEED) for t in (1.0, 50.0)}


def test_criterion_1_psi_against_killed_path_oracle(record):
    cells = psi_oracle_check(UNIT, (0.25, 0.5, 0.75), (0.1, 0.5, 1.0), 10 ** 6, SEED, dt=1e-4)
    worst = max(abs(c.estimate - c.analytic) / c.se for c in cells)
    ok = len(cells) == 9 and all(c.passed for c in cells)
    record(1, ok, f"9 cells, max |z| = {worst:.2f}, bound 3")
    assert ok


def test_criterion_2_exit_rate_epsilon_limit(record):
    cells = exit_rate_epsilon_check(UNIT, (0.25, 0.5, 1.0), epsilon=1e-3, tol=0.01)
    worst = max(c["relative_error"] for c in cells)
    ok = all(c["pass"] for c in cells)
    record(2, ok, f"max relative error {worst:.2e}, bound 1e-2")
    assert ok


def test_criterion_3_ito_tail(record):
    res = ito_tail_check()
    record(3, res["pass"], f"|n(R > 2/pi) - 1| = {abs(res['value_at_2_over_pi'] - 1):.1e}, "
                          f"monotone = {res['monotone']}")
    assert res["pass"]


def test_criterion_4_sampler_against_epsilon_oracle(record):
    cells = [(0, UNIT.a, 0.25), (1, UNIT.b, 0.25), (2, UNIT.a, 1.0), (3, UNIT.b, 1.0)]
    worst, ok = 0.0, True
    for cell, x, s in cells:
        res = sampler_check(UNIT, x, s, 10 ** 4, SEED, GRID, cell, epsilon=1e-3, alpha=0.01)
        for r in res["reports"].values():
            worst = max(worst, r.statistic / r.threshold)
        ok &= res["pass"]
    record(4, ok, f"12 two-sample KS tests, max D / threshold = {worst:.2f}")
    assert ok


def test_criterion_5_conditional_kernel_at_finite_t(record):
    res = check_kernel_identity(10.0, 50000, 0.0, UNIT, GRID, SEED, n_buckets=8)
    record(5, res.passed, f"{res.pass_fraction:.3f} of {res.n_tests} bucket tests pass, bound 0.8")
    assert res.passed


def test_criterion_6_convergence_to_limit_law(record, studies):
    rows, _ = check_convergence([1.0, 50.0], N_STUDY, 0.0, UNIT, GRID, SEED, studies=studies)
    early, late = rows
    ok = (late.ks_age.statistic <= 0.02 and 0.48 <= late.p_a <= 0.52
          and late.ks_age.statistic < early.ks_age.statistic)
    record(6, ok, f"KS(age) {late.ks_age.statistic:.4f} at t=50 vs {early.ks_age.statistic:.4f} at t=1, "
                  f"P(a) = {late.p_a:.4f}")
    assert ok


def test_criterion_7_application_against_limit_law(record, studies):
    limit = p0_sample(10 ** 5, UNIT, GRID, SEED, prefix_only=True)
    pts = application_limit((0.25, 0.5, 1.0), (0.1, 0.3, 0.5), UNIT, studies[50.0], limit)
    z = max(abs(p.comparison.p1 - p.comparison.p2) / p.comparison.combined_se for p in pts)
    b_total = sum(p.b_contribution for p in pts)
    ok = len(pts) == 9 and all(p.passed for p in pts)
    record(7, ok, f"9 cells, max |z| = {z:.2f}, bound 3, x=b contribution {b_total}")
    assert ok


def test_criterion_8_excursion_rate_per_local_time(record):
    rep = rate_check(200.0, 0.5, UNIT, GRID, SEED, n_replicates=50, side=Side.A)
    ok = rep.passed
    record(8, ok, f"ratio {rep.ratio:.3f} +/- {rep.ratio_se:.3f} (count {rep.count}), band [0.9, 1.1]")
    assert ok


def test_criterion_9_byte_identical_reruns(record, tmp_path):
    runs = {
        "simulate": ["--t", "10", "--n", "2000"],
        "analytic": [],
        "check-thm32": ["--t", "2", "--n", "1000", "--buckets", "2", "--n-ref", "100"],
        "application": ["--t", "5", "--n", "500", "--n-limit", "2000"],
    }
    same = True
    for command, flags in runs.items():
        blobs = []
        for k, workers in enumerate((1, 1, 2)):
            out = tmp_path / f"{command}-{k}.csv"
            main([command, *flags, "--seed", str(SEED), "--workers", str(workers), "--out", str(out)])
            blobs.append(out.read_bytes())
        same &= blobs[0] == blobs[1] == blobs[2]
    record(9, same, f"{len(runs)} subcommands, reruns with 1, 1 and 2 workers byte-identical")
    assert same
