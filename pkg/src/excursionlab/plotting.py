"""Optional PNG figures drawn from the same rows written to CSV."""
from __future__ import annotations

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _col(cols, rows, name, where=None):
    j = cols.index(name)
    return np.array([r[j] for r in rows if where is None or where(r)], dtype=float)


def render(command: str, cols, rows, stem: str) -> list:
    """Write figures for ``command`` to ``<stem>_<name>.png``; returns the paths."""
    plt = _plt()
    paths = []

    def save(fig, name):
        path = f"{stem}_{name}.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)

    if command == "simulate":
        ok = lambda r: not r[cols.index("never_exited")]
        age = _col(cols, rows, "t", ok) - _col(cols, rows, "sigma", ok)
        fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
        ax[0].hist(age, bins=60, density=True)
        ax[0].set_xlabel("t - sigma_t")
        ax[1].hist(_col(cols, rows, "endpoint_disp", ok), bins=60, density=True)
        ax[1].set_xlabel("W_t - W_sigma")
        save(fig, "marginals")
    elif command == "analytic":
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for q in ("limit_cdf", "exit_rate"):
            sel = [r for r in rows if r[0] == q]
            ax.plot([r[2] for r in sel], [r[3] for r in sel], "o-", label=q)
        ax.set_xlabel("s")
        ax.legend()
        save(fig, "series")
    elif command == "converge":
        t = _col(cols, rows, "t")
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for c in cols:
            if c.startswith("ks_") and c != "ks_age_threshold":
                ax.plot(t, _col(cols, rows, c), "o-", label=c)
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("KS distance")
        ax.legend()
        save(fig, "ks")
    elif command == "application":
        fig, ax = plt.subplots(figsize=(4, 4))
        pd, pl = _col(cols, rows, "p_direct"), _col(cols, rows, "p_limit")
        ax.errorbar(pl, pd, yerr=3 * _col(cols, rows, "combined_se"), fmt="o")
        lim = [0, max(pd.max(), pl.max()) * 1.1]
        ax.plot(lim, lim, "k--", lw=0.8)
        ax.set_xlabel("limit-law estimate")
        ax.set_ylabel("direct estimate")
        save(fig, "agreement")
    elif command == "rate-check":
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for side in ("A", "B"):
            sel = lambda r, s=side: r[0] == s
            ax.plot(_col(cols, rows, "local_time", sel), _col(cols, rows, "count", sel), "o", label=side)
        ax.set_xlabel("local time estimate")
        ax.set_ylabel("excursions above threshold")
        ax.legend()
        save(fig, "counts")
    return paths
