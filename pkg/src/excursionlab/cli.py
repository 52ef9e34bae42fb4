"""Command-line front end.

Every subcommand writes a primary CSV and a summary JSON next to it and exits
0 only when all of its in-run checks pass.  Output goes to ``--out`` or, by
default, to ``$EXCURSIONLAB_OUT`` (current directory when unset).
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from . import experiments as ex
from . import validation as val
from .analytic import SeriesConfig, exit_rate_series, limit_cdf_series, psi_series
from .config import KEYS, ConfigError, build_config, load_file, parse_value
from .core import Side
from .functionals import DEFAULT_FUNCTIONALS
from .limit import QConfig
from .output import check, write_csv, write_summary

OUT_ENV = "EXCURSIONLAB_OUT"
COMMANDS = ("simulate", "analytic", "check-thm32", "converge", "application", "rate-check",
            "validate-samplers")
SIMULATE_COLUMNS = ("replicate", "t", "sigma", "d", "x_sigma", "lifetime", "endpoint_disp", "sup_disp",
                    "occ_above_mid", "never_exited")


def _series(cfg):
    return SeriesConfig(tail_tolerance=cfg.tail_tolerance)


def _qcfg(cfg):
    return QConfig(switch=cfg.q_switch, chunk=cfg.q_chunk)


# Subcommands: each returns (columns, rows, checks, extra).

def cmd_simulate(cfg, workers):
    study = ex.run_straddle_study(cfg.t, cfg.n, cfg.start, cfg.interval_obj, cfg.grid, cfg.seed,
                                  DEFAULT_FUNCTIONALS, workers=workers)
    rows = []
    ok = True
    I = cfg.interval_obj
    for i, o in zip(study.indices, study.observations):
        f = o.functionals
        rows.append((int(i), o.t, o.sigma, o.d, o.x_sigma, f.get("lifetime"), f.get("endpoint_disp"),
                     f.get("sup_disp"), f.get("occ_above_mid"), o.never_exited))
        ok &= o.sigma <= o.t < o.d and (o.never_exited or o.x_sigma in (I.a, I.b))
    checks = [check("observation_contract", ok, n=len(rows))]
    extra = {"n_paths": study.n_paths, "acceptance_rate": study.acceptance_rate,
             "never_exited": study.never_exited}
    return SIMULATE_COLUMNS, rows, checks, extra


def cmd_analytic(cfg, workers):
    I = cfg.interval_obj
    sc = _series(cfg)
    rows = []
    for s in cfg.grid_s:
        for x in cfg.grid_x:
            v = psi_series(x, s, I, sc)
            rows.append(("psi", x, s, v.value, v.bound, v.terms, v.method))
        v = limit_cdf_series(s, I, sc)
        rows.append(("limit_cdf", None, s, v.value, v.bound, v.terms, v.method))
        v = exit_rate_series(Side.A, s, I, sc)
        rows.append(("exit_rate", I.a, s, v.value, v.bound, v.terms, v.method))
    worst = max(r[4] for r in rows)
    checks = [check("truncation_bounds", worst <= cfg.tail_tolerance, max_bound=worst)]
    return ("quantity", "x", "s", "value", "bound", "terms", "method"), rows, checks, {}


def cmd_check_kernel(cfg, workers):
    res = ex.check_kernel_identity(cfg.t, cfg.n, cfg.start, cfg.interval_obj, cfg.grid, cfg.seed,
                             n_buckets=cfg.buckets, mode=cfg.mode, n_ref=cfg.n_ref, cfg=_series(cfg),
                             qcfg=_qcfg(cfg), workers=workers)
    cols = ("x_sigma", "s_low", "s_high", "functional", "n_obs", "empirical_mean", "reference_mean",
            "combined_se", "allowance", "status")
    rows = [tuple(b.as_dict()[c] for c in cols) for b in res.buckets]
    summ = res.summary()
    checks = [check("bucket_pass_fraction", res.passed, **{k: v for k, v in summ.items() if k != "pass"})]
    extra = {"buckets": [b.as_dict() for b in res.buckets], "n_paths": res.study.n_paths,
             "never_exited": res.study.never_exited}
    return cols, rows, checks, extra


def cmd_converge(cfg, workers):
    rows_c, _ = ex.check_convergence(cfg.t_list, cfg.n, cfg.start, cfg.interval_obj, cfg.grid, cfg.seed,
                                     n_ref=cfg.n_ref, cfg=_series(cfg), qcfg=_qcfg(cfg), workers=workers)
    names = [f.name for f in DEFAULT_FUNCTIONALS]
    cols = ("t", "n_obs", "acceptance_rate", "never_exited", "ks_age", "ks_age_threshold", "p_a", "p_a_low",
            "p_a_high") + tuple(f"ks_{n}" for n in names)
    rows = [(r.t, r.n_obs, r.acceptance_rate, r.never_exited, r.ks_age.statistic, r.ks_age.threshold, r.p_a,
             r.p_a_ci[0], r.p_a_ci[1]) + tuple(r.ks_functionals[n].statistic for n in names) for r in rows_c]
    first, last = rows_c[0], rows_c[-1]
    checks = [
        check("ks_age_largest_t", last.ks_age.statistic <= 0.02, statistic=last.ks_age.statistic, bound=0.02),
        check("p_a_band", 0.48 <= last.p_a <= 0.52, p_a=last.p_a),
        check("p_a_ci_contains_half", last.p_a_ci[0] <= 0.5 <= last.p_a_ci[1], ci=list(last.p_a_ci)),
    ]
    if len(rows_c) > 1:
        checks.append(check("ks_age_shrinks", last.ks_age.statistic < first.ks_age.statistic,
                            first=first.ks_age.statistic, last=last.ks_age.statistic))
        for n in names:
            a, b = first.ks_functionals[n].statistic, last.ks_functionals[n].statistic
            checks.append(check(f"ks_{n}_shrinks", b < a, first=a, last=b))
    return cols, rows, checks, {"table": [r.as_dict() for r in rows_c]}


def cmd_application(cfg, workers):
    I = cfg.interval_obj
    study = ex.run_straddle_study(cfg.t, cfg.n, cfg.start, I, cfg.grid, cfg.seed, workers=workers)
    limit = ex.p0_sample(cfg.n_limit, I, cfg.grid, cfg.seed, cfg=_series(cfg), qcfg=_qcfg(cfg),
                         workers=workers, prefix_only=True)
    pts = ex.application_limit(cfg.u, cfg.y, I, study, limit)
    cols = ("u", "y", "p_direct", "n_direct", "ci_direct_low", "ci_direct_high", "p_limit", "n_limit",
            "ci_limit_low", "ci_limit_high", "combined_se", "b_contribution", "pass")
    rows = []
    for p in pts:
        c = p.comparison
        rows.append((p.u, p.y, c.p1, c.n1, c.ci1[0], c.ci1[1], c.p2, c.n2, c.ci2[0], c.ci2[1], c.combined_se,
                     p.b_contribution, p.passed))
    checks = [check(f"agree[u={p.u:g},y={p.y:g}]", p.passed, **p.as_dict()) for p in pts]
    return cols, rows, checks, {"n_paths": study.n_paths, "never_exited": study.never_exited}


def cmd_rate_check(cfg, workers):
    I = cfg.interval_obj
    reports = [ex.rate_check(cfg.horizon, cfg.s_threshold, I, cfg.grid, cfg.seed, cfg.replicates, cfg.epsilon,
                             cfg.local_fine_dt, side, _series(cfg), workers) for side in (Side.A, Side.B)]
    ra, rb = reports
    cols = ("side", "replicate", "count", "count_double_threshold", "local_time")
    rows = [(r.side.value, i, rep.count, rep.count_double, rep.local_time)
            for r in reports for i, rep in enumerate(r.replicates)]
    gap = abs(ra.ratio - rb.ratio)
    se = math.hypot(ra.ratio_se, rb.ratio_se)
    checks = [
        check("ratio_within_10pct", ra.passed, **ra.as_dict()),
        check("doubling_threshold_reduces_count", ra.count_double < ra.count, count=ra.count,
              count_double=ra.count_double),
        check("level_b_consistent", gap <= 3 * se, ratio_a=ra.ratio, ratio_b=rb.ratio, combined_se=se),
    ]
    return cols, rows, checks, {"side_b": rb.as_dict()}


SAMPLER_CELLS = ((0, "a", 0.25), (1, "b", 0.25), (2, "a", 1.0), (3, "b", 1.0))


def cmd_validate_samplers(cfg, workers):
    I = cfg.interval_obj
    sc = _series(cfg)
    cols = ("check", "label", "statistic", "threshold", "pass")
    rows, checks = [], []
    psi_checks = val.psi_oracle_check(I, cfg.grid_x, cfg.grid_s, cfg.oracle_paths, cfg.seed, cfg.oracle_dt, sc)
    for c in psi_checks:
        rows.append(("psi_oracle", f"x={c.x:g},s={c.s:g}", abs(c.estimate - c.analytic), 3 * c.se, c.passed))
    checks.append(check("psi_oracle", all(c.passed for c in psi_checks), cells=[c.as_dict() for c in psi_checks]))
    er = val.exit_rate_epsilon_check(I, (0.25, 0.5, 1.0), cfg=sc)
    for e in er:
        rows.append(("exit_rate_epsilon", f"s={e['s']:g}", e["relative_error"], 0.01, e["pass"]))
    checks.append(check("exit_rate_epsilon", all(e["pass"] for e in er), cells=er))
    it = val.ito_tail_check()
    rows.append(("ito_tail", "t=2/pi", abs(it["value_at_2_over_pi"] - 1.0), 1e-15, it["pass"]))
    checks.append(check("ito_tail", it["pass"], **it))
    cells = []
    for cell, side, s in SAMPLER_CELLS:
        x = I.a if side == "a" else I.b
        res = val.sampler_check(I, x, s, cfg.sampler_draws, cfg.seed, cfg.grid, cell, cfg=sc, qcfg=_qcfg(cfg),
                                workers=workers)
        for name, r in res["reports"].items():
            rows.append(("sampler_ks", f"x={side},s={s:g},{name}", r.statistic, r.threshold, r.passed))
        cells.append({"x": side, "s": s, "pass": res["pass"],
                      "reports": {k: v.as_dict() for k, v in res["reports"].items()}})
    checks.append(check("sampler_vs_epsilon_oracle", all(c["pass"] for c in cells), cells=cells))
    lp = val.limit_pair_check(I, cfg.n_limit, cfg.sampler_draws, cfg.seed, sc, cfg.oracle_dt)
    rows.append(("limit_pair", "p_a", abs(lp["p_a"] - 0.5), 0.005, lp["coin_pass"]))
    rows.append(("limit_pair", "ks_cdf", lp["ks_cdf"].statistic, lp["ks_cdf"].threshold, lp["ks_cdf"].passed))
    rows.append(("limit_pair", "ks_oracle", lp["ks_oracle"].statistic, lp["ks_oracle"].threshold,
                 lp["ks_oracle"].passed))
    checks.append(check("limit_pair", lp["pass"], p_a=lp["p_a"], ks_cdf=lp["ks_cdf"].as_dict(),
                        ks_oracle=lp["ks_oracle"].as_dict()))
    return cols, rows, checks, {}


HANDLERS = {
    "simulate": cmd_simulate, "analytic": cmd_analytic, "check-thm32": cmd_check_kernel,
    "converge": cmd_converge, "application": cmd_application, "rate-check": cmd_rate_check,
    "validate-samplers": cmd_validate_samplers,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="excursionlab", description="Straddling-excursion experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--out", help="primary CSV path")
        p.add_argument("--summary", help="summary JSON path (default: next to the CSV)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--figures", action="store_true", help="also render PNG figures (needs matplotlib)")
        for key in KEYS:
            p.add_argument("--" + key.replace("_", "-"), dest="key_" + key, metavar="VALUE")
    return ap


def resolve(args):
    file_values = load_file(args.config) if args.config else {}
    overrides = {}
    for key in KEYS:
        text = getattr(args, "key_" + key)
        if text is not None:
            overrides[key] = parse_value(key, text, "--" + key.replace("_", "-") + ": ")
    return build_config(file_values, overrides)


def default_paths(command: str, out: str = None, summary: str = None):
    if out is None:
        out = os.path.join(os.environ.get(OUT_ENV, "."), command + ".csv")
    if summary is None:
        summary = os.path.splitext(out)[0] + ".summary.json"
    return out, summary


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
    except (ConfigError, OSError) as exc:
        print(f"excursionlab: config error: {exc}", file=sys.stderr)
        return 2
    if args.workers < 1:
        print("excursionlab: --workers must be >= 1", file=sys.stderr)
        return 2
    cols, rows, checks, extra = HANDLERS[args.command](cfg, args.workers)
    out, summary = default_paths(args.command, args.out, args.summary)
    try:
        write_csv(out, args.command, cfg, cols, rows)
        write_summary(summary, args.command, cfg, checks, extra)
        if args.figures:
            from .plotting import render
            render(args.command, cols, rows, os.path.splitext(out)[0])
    except OSError as exc:
        print(f"excursionlab: cannot write output: {exc}", file=sys.stderr)
        return 2
    except ImportError as exc:
        print(f"excursionlab: --figures needs matplotlib ({exc})", file=sys.stderr)
        return 2
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}")
    return 0 if all(c["pass"] for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
