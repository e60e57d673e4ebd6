"""Figures for the report path of the CLI (Agg backend, reproducible PNG bytes)."""
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 4.5
params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": (fig_width, fig_width * golden_mean),
    "figure.dpi": 150,
    "lines.markersize": 4,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "mobilegraph",
}


def _save(fig, path):
    # no Software/date metadata so identical data gives identical bytes
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def broadcast_figure(results, summary, path):
    with plt.rc_context(params):
        fig, ax = plt.subplots(constrained_layout=True)
        for s in summary:
            t = [r.t_bc for r in results if r.volume == s["volume"] and math.isfinite(r.t_bc)]
            ax.plot(np.full(len(t), s["volume"]), t, ".", color="0.7")
        vols = [s["volume"] for s in summary]
        ax.plot(vols, [s["median_t_bc"] for s in summary], "o-", color="C0", label="median $T_{bc}$")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("torus volume $n$")
        ax.set_ylabel("$T_{bc}$")
        ax.legend(frameon=False)
        return _save(fig, path)


def survival_figure(grid, surv, fit, path):
    with plt.rc_context(params):
        fig, ax = plt.subplots(constrained_layout=True)
        ax.step(grid, surv, where="post", color="k", label=r"$\hat P(T>t)$")
        t = np.asarray(grid, dtype=float)
        t = t[t > 0]
        if t.size and math.isfinite(fit.stretched_a):
            ax.plot(t, np.exp(-fit.stretched_a * t ** fit.stretched_b), "--",
                    label=f"exp(-a t^b), b={fit.stretched_b:.2f}")
            ax.plot(t, np.minimum(1.0, fit.power_c * t ** (-fit.power_a)), ":",
                    label=f"c t^-a, a={fit.power_a:.2f}")
        if np.any(np.asarray(surv) > 0):
            ax.set_yscale("log")
        ax.set_xlabel("$t$")
        ax.set_ylabel("survival")
        ax.legend(frameon=False)
        return _save(fig, path)


def convergence_figure(dt_list, table, path):
    with plt.rc_context(params):
        fig, ax = plt.subplots(constrained_layout=True)
        table = np.asarray(table, dtype=float)
        for row in table:
            ax.plot(dt_list, row, "-", color="0.8")
        ax.plot(dt_list, np.median(table, axis=0), "o-", color="C0", label="median")
        ax.set_xscale("log", base=2)
        ax.invert_xaxis()
        ax.set_xlabel("observation step $dt$")
        ax.set_ylabel("$T_{bc}$")
        ax.legend(frameon=False)
        return _save(fig, path)


def spread_figure(summary, path):
    with plt.rc_context(params):
        fig, ax = plt.subplots(constrained_layout=True)
        K = [s["K"] for s in summary]
        ax.plot(K, [s["success_fraction"] for s in summary], "o-", label="spread success")
        ax.plot(K, [s["membership_single"] for s in summary], "s--", label="probe membership")
        ax.set_xscale("log", base=2)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("$K$")
        ax.set_ylabel("fraction")
        ax.legend(frameon=False)
        return _save(fig, path)


def connector_figure(rows, fitted_c, path):
    with plt.rc_context(params):
        fig, ax = plt.subplots(constrained_layout=True)
        br = np.array([r["bracket"] for r in rows])
        mean = np.array([r["mean"] for r in rows])
        ax.loglog(br, mean, "o", label="mean count")
        x = np.array([br.min(), br.max()])
        ax.loglog(x, fitted_c * x, "--", label=f"C = {fitted_c:.3g}")
        ax.set_xlabel("bracket")
        ax.set_ylabel("connectors")
        ax.legend(frameon=False)
        return _save(fig, path)
