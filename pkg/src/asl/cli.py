"""Batch front end: ``asl <command> --config <path> [--out <dir>] [--threads N] [--plots]``.

Exit codes: 0 success, 1 a flagged assertion failed, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import artifacts, plotting
from .conditions import SEQUENCES, verify_conditions
from .config import COMMANDS, ConfigError, ExperimentConfig, parse_config
from .eigensolver import (SWEEP_HEADER, build_recursion, eta_window_violations, normalize,
                          recursion_residuals, sigma_growth_sweep, solve_sigma,
                          synthesize_eigenfunction, tridiagonal_oracle)
from .simulator import (GROWTH_HEADER, TIME_SERIES_HEADER, WELLPOSED_HEADER, SimConfig,
                        growth_experiment, run, steady_state, wellposed_diagnostic)
from .spectral import GevreyParams, random_analytic_field
from .symbols import MultiplierSymbol, check_identities, make_symbol, singular_order_report

log = logging.getLogger("asl")

USAGE = (
    "usage: asl <command> --config <path> [--out <dir>] [--threads N] [--plots]\n"
    f"commands: {', '.join(COMMANDS)}\n"
)


class Job:
    """Per-command context: resolved config, output directory, collected assertions."""

    def __init__(self, cfg: ExperimentConfig, out: Path, threads: int | None, plots: bool):
        self.cfg, self.out, self.threads, self.plots = cfg, out, threads, plots
        self.failures: list[str] = []
        self.written: list[Path] = []

    def check(self, ok: bool, what: str) -> bool:
        if not ok:
            self.failures.append(what)
        return ok

    def csv(self, name: str, header, rows, comments=()) -> Path:
        comments = [f"command={self.cfg.command}", *self.cfg_flags(), *comments]
        p = artifacts.write_csv(self.out / name, header, rows, self.cfg.hash, comments)
        self.written.append(p)
        return p

    def csv_body(self, name: str, body: str, comments=()) -> Path:
        comments = [f"command={self.cfg.command}", *self.cfg_flags(), *comments]
        p = artifacts.write_csv_body(self.out / name, body, self.cfg.hash, comments)
        self.written.append(p)
        return p

    def cfg_flags(self) -> list[str]:
        return [f"flag: {f}" for f in self.cfg.flags]

    def plot(self, fn: Callable[[Path], Path], path: Path) -> None:
        if self.plots:
            self.written.append(fn(path))

    # shared constructors
    def symbol(self) -> MultiplierSymbol:
        sy = self.cfg["symbols"]
        params = {}
        if sy["id"] == "mg":
            params = {"Omega": sy["Omega"], "beta2_over_eta": sy["beta2_over_eta"]}
        return make_symbol(sy["id"], params, sy["alpha"])

    def gevrey(self) -> GevreyParams:
        sp = self.cfg["spectral"]
        return GevreyParams(sp["s"], sp["tau"], sp["r"])

    def conditions_report(self, sym):
        co = self.cfg["conditions"]
        return verify_conditions(sym, self.cfg["eigensolver"]["a"], SEQUENCES[co["sequence"]],
                                 (co["beta1"], co["beta2"], co["beta3"]), co["j_max"], co["n_max"],
                                 co["eps_tail"])

    def sim_config(self, sym, **over) -> SimConfig:
        si = self.cfg["simulator"]
        kw = dict(sym=sym, K=si["K"], dt=si["dt"], t_end=si["t_end"], kappa=si["kappa"],
                  gamma=si["gamma"], dealias=si["dealias"], gevrey=self.gevrey(),
                  linear_method=si["linear_method"], workers=self.threads)
        kw.update(over)
        return SimConfig(**kw)


# -- commands -----------------------------------------------------------------------------

def cmd_symbol_report(job: Job) -> list[str]:
    sym = job.symbol()
    K = job.cfg["symbols"]["K"]
    ident = check_identities(sym, K)
    rows = [["divergence_free", ident.n_checked, int(ident.divergence_free)],
            ["even", ident.n_checked, int(ident.even)],
            ["zero_convention", ident.n_checked, int(ident.zero_convention)]]
    job.csv("identities.csv", ["check", "n_checked", "holds"], rows,
            [f"symbol={sym.name}", f"K={K}", f"first_failure={ident.first_failure}"])
    srows = []
    for k in sorted({max(1, K // 4), max(1, K // 2), K}):
        rep = singular_order_report(sym, k)
        srows.append([k, f"{rep.r0:g}", f"{rep.sup_ratio:.17g}", " ".join(map(str, rep.argmax))])
    job.csv("singular_order.csv", ["K", "r0", "sup_ratio", "argmax"], srows, [f"symbol={sym.name}"])
    job.check(ident.divergence_free, "k . T(k) = 0")
    job.check(ident.even, "T(-k) = T(k)")
    job.check(ident.zero_convention, f"zero convention ({sym.zero_convention})")
    return [f"symbol-report symbol={sym.name} K={K} n_checked={ident.n_checked} "
            f"divergence_free={ident.divergence_free} even={ident.even} "
            f"zero_convention={ident.zero_convention} sup_ratio(K={K})={srows[-1][2]}"]


def cmd_conditions(job: Job) -> list[str]:
    sym = job.symbol()
    rep = job.conditions_report(sym)
    p = job.csv_body("conditions.csv", rep.csv_text(), [f"symbol={sym.name}"])
    job.plot(plotting.plot_conditions, p)
    for c, v in rep.verdicts.items():
        job.check(v.holds, f"{c}: {v.witness}")
    job.check(rep.Ctilde1_stable, "Ctilde1 stable to 10% over the top half of j")
    job.check(rep.Ctilde2_stable, "Ctilde2 stable to 10% over the top half of j")
    return [rep.summary_line()]


def cmd_eigen(job: Job) -> list[str]:
    sym = job.symbol()
    ei = job.cfg["eigensolver"]
    gp = job.gevrey()
    rec = build_recursion(sym, ei["a"], ei["b"], max(ei["P"], ei["oracle_N"]))
    pair = normalize(solve_sigma(rec, tol=ei["tol"]), rec, gp)
    oracle = tridiagonal_oracle(rec.extended(ei["oracle_N"]), ei["oracle_N"])
    res = recursion_residuals(pair, rec, 100)
    window = eta_window_violations(pair, rec)
    lo, hi = pair.bracket
    rel = abs(oracle - pair.sigma) / pair.sigma
    summary = [["sigma", f"{pair.sigma:.17g}"], ["sigma_lo", f"{lo:.17g}"], ["sigma_hi", f"{hi:.17g}"],
               ["alpha1", f"{rec.alpha[1]:.17g}"], ["alpha2", f"{rec.alpha[2]:.17g}"],
               ["oracle_sigma", f"{oracle:.17g}"], ["oracle_rel_diff", f"{rel:.3e}"],
               ["residual_max_p100", f"{float(np.max(res)):.3e}"], ["eta2_gap", f"{pair.eta2_gap:.3e}"],
               ["eta_window_violations", str(len(window))], ["depth", str(pair.depth)],
               ["admissible", str(pair.admissible).lower()],
               ["l2_norm", f"{pair.norm_target.l2_norm:.17g}"], ["gevrey_norm", "1"]]
    job.csv("eigen_summary.csv", ["quantity", "value"], summary,
            [f"symbol={sym.name}", f"a={ei['a']}", f"b={' '.join(map(str, rec.b))}"])
    ps = np.arange(1, pair.depth + 1)
    rows = [[int(p), f"{pair.eta[p]:.17g}" if p >= 2 else "", f"{pair.log_abs_c[p]:.17g}",
             int(pair.sign_c[p])] for p in ps]
    pc = job.csv("eigen_coefficients.csv", ["p", "eta", "log_abs_c", "sign"], rows)
    job.plot(plotting.plot_coefficients, pc)
    phi = synthesize_eigenfunction(pair, rec, gp)
    job.csv_body("eigenfunction.csv", phi.csv_text(), [f"K={phi.K}", "normalised: Gevrey norm 1"])
    job.check(lo < pair.sigma < hi, "sigma inside the closed-form bracket")
    job.check(rel <= 1e-8, f"oracle agreement {rel:.2e} <= 1e-8")
    job.check(float(np.max(res)) <= 1e-10, "recursion residuals <= 1e-10 for p <= 100")
    job.check(not window, f"eta window violations at p={window[:5]}")
    return [f"eigen symbol={sym.name} a={ei['a']} b={rec.b} sigma={summary[0][1]} "
            f"bracket=({summary[1][1]}, {summary[2][1]}) oracle={summary[5][1]} "
            f"oracle_rel_diff={summary[6][1]} residual={summary[7][1]}"]


def cmd_eigen_sweep(job: Job) -> list[str]:
    sym = job.symbol()
    ei = job.cfg["eigensolver"]
    rep = job.conditions_report(sym)
    sw = sigma_growth_sweep(sym, ei["a"], SEQUENCES[rep.sequence_name], ei["j_max"], job.gevrey(),
                            rep, P=ei["P"], oracle_N=ei["oracle_N"], tol=ei["tol"],
                            threads=job.threads)
    comments = [f"symbol={sym.name}", f"sequence={rep.sequence_name}", f"beta3={rep.beta3:g}",
                f"Ctilde2={rep.Ctilde2:.17g}", f"slope_top_decade={sw.slope:.17g}",
                f"C_l2_fit={sw.C_l2:.17g}", f"l2_exponent={sw.l2_exponent:.17g}"]
    p = job.csv("sweep.csv", SWEEP_HEADER, sw.csv_rows(), comments)
    job.plot(plotting.plot_sweep, p)
    bad = [r.j for r in sw.rows if "bracket" in r.flags or "oracle" in r.flags]
    job.check(not bad, f"bracket/oracle failures at j={bad}")
    job.check(sw.slope_ok, f"slope {sw.slope:.4f} >= beta3 - 0.05 = {rep.beta3 - 0.05:g}")
    below = [r.j for r in sw.rows if "below_bound" in r.flags.split(",")]
    job.check(not below, f"sigma > (2 sqrt(Ctilde2)/a)|b|^beta3 fails at j={below}")
    below_c = [r.j for r in sw.rows if "below_corrected_bound" in r.flags]
    job.check(not below_c, f"sigma > (a/2) sqrt(Ctilde2)|b|^beta3 fails at j={below_c}")
    return [f"eigen-sweep symbol={sym.name} j_max={ei['j_max']} slope={sw.slope:.6f} "
            f"all_above_bound={sw.all_above_bound} all_above_corrected={sw.all_above_corrected} "
            f"C_l2={sw.C_l2:.6g}"]


def _initial_field(job: Job, sym, K: int):
    si, ei = job.cfg["simulator"], job.cfg["eigensolver"]
    if si["initial"] == "random":
        return random_analytic_field(sym.d, K, decay=si["decay"], amplitude=si["amplitude"]), None
    if si["initial"] == "steady":
        return steady_state(sym.d, K, ei["a"]), None
    gp = job.gevrey()
    rec = build_recursion(sym, ei["a"], ei["b"], ei["P"])
    pair = normalize(solve_sigma(rec, tol=ei["tol"]), rec, gp)
    return synthesize_eigenfunction(pair, rec, gp, K=K), pair.sigma


def cmd_simulate(job: Job) -> list[str]:
    sym = job.symbol()
    si, ei = job.cfg["simulator"], job.cfg["eigensolver"]
    cfg = job.sim_config(sym)
    theta0, sigma = _initial_field(job, sym, si["K"])
    if si["mode"] == "nonlinear" and si["initial"] == "eigenfunction":
        theta0 = steady_state(sym.d, si["K"], ei["a"]) + theta0 * si["epsilon"][0]
        sigma = None
    ts = run(cfg, theta0, mode=si["mode"], a=ei["a"], sigma=sigma, q=job.cfg["spectral"]["q"],
             sample_every=si["sample_every"])
    comments = [f"symbol={sym.name}", f"mode={si['mode']}", f"initial={si['initial']}",
                f"q={ts.q:g}", f"dt_min={ts.dt_min:.17g}", f"label={ts.label}"]
    p = job.csv("timeseries.csv", TIME_SERIES_HEADER, ts.csv_rows(), comments)
    job.csv_body("final_state.csv", ts.final.csv_text(), [f"t={ts.t[-1]:.17g}"])
    job.plot(plotting.plot_time_series, p)
    line = f"simulate symbol={sym.name} mode={si['mode']} t_end={ts.t[-1]:g} l2_final={ts.l2[-1]:.12g}"
    if sigma is not None and si["mode"] == "linear" and si["kappa"] == 0 and ts.t[-1] > 0:
        rate = ts.log_l2_slope(0.0, ts.t[-1])
        job.check(abs(rate / sigma - 1) <= 0.02, f"log-L2 slope {rate:.6g} within 2% of sigma {sigma:.6g}")
        line += f" rate={rate:.12g} sigma={sigma:.12g}"
    if si["mode"] == "nonlinear" and si["kappa"] == 0 and ts.t[-1] > 0:
        drift = abs(ts.l2[-1] - ts.l2[0]) / ts.l2[0] / ts.t[-1]
        job.check(drift <= 1e-8, f"L2 drift {drift:.2e} per unit time <= 1e-8")
        line += f" l2_drift_per_time={drift:.3e}"
    return [line + f" label={ts.label}"]


def cmd_growth(job: Job) -> list[str]:
    sym = job.symbol()
    si, ei = job.cfg["simulator"], job.cfg["eigensolver"]
    cfg = job.sim_config(sym)
    tab = growth_experiment(cfg, ei["a"], ei["b"], si["epsilon"], P=ei["P"],
                            q=job.cfg["spectral"]["q"], sample_every=si["sample_every"],
                            threads=job.threads)
    comments = [f"symbol={sym.name}", f"a={tab.a}", f"b={' '.join(map(str, tab.b))}",
                f"sigma={tab.sigma:.17g}", f"phi_l2={tab.phi_l2:.17g}", f"label={tab.label}"]
    p = job.csv("growth.csv", GROWTH_HEADER, tab.csv_rows(), comments)
    job.plot(plotting.plot_growth, p)
    err = tab.max_linear_error()
    job.check(err <= 0.10, f"linear-regime amplification within 10% of exp(sigma t) (max {err:.3g})")
    return [f"growth symbol={sym.name} b={tab.b} sigma={tab.sigma:.12g} "
            f"max_linear_rel_err={err:.3e} label={tab.label}"]


def cmd_wellposed(job: Job) -> list[str]:
    sym = job.symbol()
    si = job.cfg["simulator"]
    sp = job.cfg["spectral"]
    gp = GevreyParams(sp["s"], si["tau0"], sp["r"])
    theta0 = random_analytic_field(sym.d, si["K"], decay=si["decay"], amplitude=si["amplitude"])
    res = wellposed_diagnostic(sym, theta0, gp, n_steps=si["n_steps"], fraction=si["fraction"],
                               workers=job.threads)
    comments = [f"symbol={sym.name}", f"C={res.C:.17g}", f"K0={res.K0:.17g}",
                f"t_star={res.t_star:.17g}", f"iterations={res.iterations}"]
    p = job.csv("wellposed.csv", WELLPOSED_HEADER, res.csv_rows(), comments)
    job.plot(plotting.plot_wellposed, p)
    job.check(res.monotone, f"Gevrey norm non-increasing within {res.tolerance:.0%} up to t_star*{si['fraction']:g}")
    job.check(res.ratio.max() <= res.C, "measured constant below the constant in use")
    return [f"wellposed-radius symbol={sym.name} C={res.C:.6g} K0={res.K0:.6g} "
            f"t_star={res.t_star:.6g} monotone={res.monotone}"]


HANDLERS: dict[str, Callable[[Job], list[str]]] = {
    "symbol-report": cmd_symbol_report,
    "conditions": cmd_conditions,
    "eigen": cmd_eigen,
    "eigen-sweep": cmd_eigen_sweep,
    "simulate": cmd_simulate,
    "growth": cmd_growth,
    "wellposed-radius": cmd_wellposed,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(USAGE + f"error: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="asl", add_help=True, usage=USAGE)
    ap.add_argument("command", nargs="?", default="")
    ap.add_argument("--config", type=Path)
    ap.add_argument("--out", type=Path, default=Path("out"))
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--plots", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        sys.stderr.write(USAGE + "error: --threads must be >= 1\n")
        return 2
    if args.command and args.command not in COMMANDS:
        sys.stderr.write(USAGE + f"error: unknown command {args.command!r}\n")
        return 2
    if args.config is None:
        sys.stderr.write(USAGE)
        return 2
    try:
        text = args.config.read_text()
    except OSError as e:
        sys.stderr.write(f"error: cannot read config: {e}\n")
        return 2
    try:
        cfg = parse_config(text, args.command or None)
    except ConfigError as e:
        sys.stderr.write("validation failed:\n" + "".join(f"  {p}\n" for p in e.problems))
        return 2
    if not cfg.command:
        sys.stderr.write(USAGE)
        return 2
    job = Job(cfg, args.out, args.threads, args.plots)
    for f in cfg.flags:
        log.warning("flag: %s", f)
    lines = HANDLERS[cfg.command](job)
    for ln in lines:
        print(ln)
    for p in job.written:
        log.info("wrote %s", p)
    if job.failures:
        for f in job.failures:
            print(f"ASSERTION FAILED: {f}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
