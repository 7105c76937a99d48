"""Static PNG figures rendered from the CSV artifacts (the CSV is the contract)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .artifacts import read_csv  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (4.8, 3.2),
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def _columns(path: Path) -> dict[str, np.ndarray]:
    header, rows, _ = read_csv(path)
    cols = {}
    for i, h in enumerate(header):
        vals = [r[i] for r in rows]
        try:
            cols[h] = np.array([float(v) for v in vals])
        except ValueError:
            cols[h] = np.array(vals)
    return cols


def _save(fig, png: Path) -> Path:
    fig.savefig(png)
    plt.close(fig)
    return png


def plot_sweep(csv_path: Path) -> Path:
    c = _columns(csv_path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.loglog(c["b_norm"], c["sigma"], "o-", ms=3, label=r"$\sigma$")
        ax.loglog(c["b_norm"], c["lower_bound"], "--", lw=1, label="lower bound")
        ax.loglog(c["b_norm"], c["corrected_bound"], ":", lw=1, label="corrected bound")
        ax.fill_between(c["b_norm"], c["sigma_lo"], c["sigma_hi"], alpha=0.2, lw=0, label="bracket")
        ax.set_xlabel(r"$|b|$")
        ax.set_ylabel(r"$\sigma$")
        ax.legend()
        return _save(fig, Path(csv_path).with_suffix(".png"))


def plot_coefficients(csv_path: Path) -> Path:
    c = _columns(csv_path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(c["p"], c["log_abs_c"] / np.log(10), ".-", ms=3)
        ax.set_xlabel("$p$")
        ax.set_ylabel(r"$\log_{10}|c_p|$")
        return _save(fig, Path(csv_path).with_suffix(".png"))


def plot_time_series(csv_path: Path) -> Path:
    c = _columns(csv_path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.semilogy(c["t"], c["l2"], label=r"$\|\theta\|_{L^2}$")
        if np.all(np.isfinite(c["predicted_exp"])):
            ax.semilogy(c["t"], c["l2"][0] * c["predicted_exp"], "--", label=r"$e^{\sigma t}$")
        ax.set_xlabel("$t$")
        ax.legend()
        return _save(fig, Path(csv_path).with_suffix(".png"))


def plot_growth(csv_path: Path) -> Path:
    c = _columns(csv_path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for eps in np.unique(c["epsilon"]):
            m = c["epsilon"] == eps
            ax.semilogy(c["t"][m], c["amplification"][m], label=f"eps={eps:g}")
        m = c["epsilon"] == c["epsilon"][0]
        ax.semilogy(c["t"][m], c["predicted_exp"][m], "k--", lw=1, label=r"$e^{\sigma t}$")
        ax.set_xlabel("$t$")
        ax.set_ylabel("amplification")
        ax.legend()
        return _save(fig, Path(csv_path).with_suffix(".png"))


def plot_wellposed(csv_path: Path) -> Path:
    c = _columns(csv_path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.semilogy(c["t"], c["gevrey"], label="Gevrey norm")
        ax.semilogy(c["t"], c["running_min"], ":", label="running min")
        ax.set_xlabel("$t$")
        ax2 = ax.twinx()
        ax2.plot(c["t"], c["tau"], "k--", lw=1)
        ax2.set_ylabel(r"$\tau(t)$")
        ax.legend(loc="lower left")
        return _save(fig, Path(csv_path).with_suffix(".png"))


def plot_conditions(csv_path: Path) -> Path:
    c = _columns(csv_path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for cond in ("C5", "C6"):
            m = c["condition"] == cond
            if m.any():
                ax.semilogy(c["j"][m], c["value"][m], ".", ms=3, label=cond)
        ax.set_xlabel("$j$")
        ax.legend()
        return _save(fig, Path(csv_path).with_suffix(".png"))
