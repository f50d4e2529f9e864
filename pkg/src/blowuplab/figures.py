"""Optional PNG rendering for the tables the CLI writes.

Kept out of the core path: the CSV/JSON artifacts are canonical and this
module only redraws them. Requires the `figures` extra (matplotlib).
"""

from __future__ import annotations

import csv
from pathlib import Path


def _load_csv(path: Path):
    with open(path, encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, val in zip(header, row):
                cols[name].append(float(val))
    return cols


def render(outdir: Path, files) -> list:
    """Render figures for any known tables among files; returns PNG paths."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise SystemExit(
            "figure rendering requires matplotlib; install the 'figures' "
            f"extra ({exc})")

    made = []
    outdir = Path(outdir)

    if "corrector_grid.csv" in files:
        cols = _load_csv(outdir / "corrector_grid.csv")
        import numpy as np
        # rows iterate t fastest; the first drop in t marks one period
        t = np.asarray(cols["t"])
        wraps = np.flatnonzero(np.diff(t) < 0)
        nt = int(wraps[0]) + 1 if len(wraps) else len(t)
        nr = len(t) // nt
        R = np.asarray(cols["r"]).reshape(nr, nt)
        T = t.reshape(nr, nt)
        W = np.asarray(cols["w"]).reshape(nr, nt)
        fig, ax = plt.subplots(figsize=(5, 4))
        m = ax.contourf(R, T, W, levels=24)
        fig.colorbar(m, ax=ax, label="w")
        ax.set(xlabel="r", ylabel="t", title="corrector profile",
               xlim=(0, min(10, R.max())), ylim=(0, min(10, T.max())))
        path = outdir / "corrector_grid.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(str(path))

    if "residual_orders.csv" in files:
        cols = _load_csv(outdir / "residual_orders.csv")
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(cols["delta"], cols["norm_without"], "o-",
                  label="without corrector")
        ax.loglog(cols["delta"], cols["norm_with"], "s-",
                  label="with corrector")
        ax.set(xlabel="delta", ylabel="residual norm",
               title="ansatz residual orders")
        ax.legend()
        path = outdir / "residual_orders.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(str(path))

    if "blowup_rate.csv" in files:
        cols = _load_csv(outdir / "blowup_rate.csv")
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(cols["eps"], cols["sup_u"], "o-")
        ax.set(xlabel="eps", ylabel="sup u", title="blow-up rate")
        path = outdir / "blowup_rate.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(str(path))

    if "expansion_sweep.csv" in files:
        cols = _load_csv(outdir / "expansion_sweep.csv")
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.semilogx(cols["eps"], [v / e for v, e in
                                  zip(cols["value"], cols["eps"])], "o-")
        ax.set(xlabel="eps", ylabel="value / eps",
               title="boundary-term expansion")
        path = outdir / "expansion_sweep.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(str(path))

    return made
