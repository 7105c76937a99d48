"""INI experiment configuration: schema, presets, validation and hashing.

Sections mirror the modules (``symbols``, ``spectral``, ``conditions``,
``eigensolver``, ``simulator``) plus ``experiment`` for the command and
preset.  Unknown sections or keys are errors.  Values are resolved as
defaults < preset < file.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable

COMMANDS = ("symbol-report", "conditions", "eigen", "eigen-sweep", "simulate", "growth",
            "wellposed-radius")


class ConfigError(ValueError):
    """Every violated precondition, each tagged with the module that owns it."""

    def __init__(self, problems: list[str]):
        super().__init__("\n".join(problems))
        self.problems = problems


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "experiment": {"command": str, "preset": str},
    "symbols": {"id": str, "alpha": float, "Omega": float, "beta2_over_eta": float, "K": int},
    "spectral": {"s": float, "tau": float, "r": float, "q": _opt_float},
    "conditions": {"sequence": str, "beta1": float, "beta2": float, "beta3": float,
                   "j_max": int, "n_max": int, "eps_tail": float},
    "eigensolver": {"a": int, "b": _int_list, "P": int, "tol": float, "j_max": int,
                    "oracle_N": int},
    "simulator": {"K": int, "dt": float, "t_end": float, "kappa": float, "gamma": float,
                  "dealias": float, "epsilon": _float_list, "mode": str, "initial": str,
                  "sample_every": int, "linear_method": str, "tau0": float, "n_steps": int,
                  "fraction": float, "amplitude": float, "decay": float},
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "experiment": {"command": "", "preset": ""},
    "symbols": {"id": "mg", "alpha": 0.0, "Omega": 1.0, "beta2_over_eta": 1.0, "K": 64},
    "spectral": {"s": 1.0, "tau": 0.1, "r": 4.0, "q": None},
    "conditions": {"sequence": "mg", "beta1": 3.0, "beta2": -2.0, "beta3": 1.0,
                   "j_max": 20, "n_max": 200, "eps_tail": 1e-6},
    "eigensolver": {"a": 1, "b": (1, 1), "P": 128, "tol": 1e-12, "j_max": 10, "oracle_N": 200},
    "simulator": {"K": 12, "dt": 0.05, "t_end": 10.0, "kappa": 0.0, "gamma": 0.5,
                  "dealias": 2.0 / 3.0, "epsilon": (1e-3, 1e-4, 1e-5), "mode": "linear",
                  "initial": "eigenfunction", "sample_every": 1, "linear_method": "spectral",
                  "tau0": 0.5, "n_steps": 200, "fraction": 0.5, "amplitude": 1.0, "decay": 1.0},
}


def _mg_preset(alpha: float) -> dict[str, dict[str, Any]]:
    return {
        "symbols": {"id": "mg", "alpha": alpha},
        "conditions": {"sequence": "mg", "beta1": 3.0, "beta2": alpha - 2.0, "beta3": alpha + 1.0,
                       "j_max": 20, "n_max": 200},
        "eigensolver": {"b": (1, 1), "j_max": 10},
    }


def _sipm_preset(alpha: float) -> dict[str, dict[str, Any]]:
    return {
        "symbols": {"id": "sipm", "alpha": alpha},
        "conditions": {"sequence": "sipm", "beta1": 2.0, "beta2": alpha - 2.0, "beta3": alpha,
                       "j_max": 50, "n_max": 400},
        "eigensolver": {"b": (1,), "j_max": 20},
    }


PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "mg-alpha0": _mg_preset(0.0),
    "mg-alpha0.5": _mg_preset(0.5),
    "mg-alpha1": _mg_preset(1.0),
    "sipm-alpha1": _sipm_preset(1.0),
    "sipm-alpha1.5": _sipm_preset(1.5),
    "ipm-wellposed": {
        "symbols": {"id": "ipm", "alpha": 0.0},
        "spectral": {"s": 1.0, "tau": 0.5},
        "simulator": {"K": 32, "initial": "random", "mode": "nonlinear"},
    },
}


@dataclass
class ExperimentConfig:
    values: dict[str, dict[str, Any]]
    flags: list[str] = field(default_factory=list)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    @property
    def command(self) -> str:
        return self.values["experiment"]["command"]

    def canonical(self) -> str:
        return json.dumps(self.values, sort_keys=True, separators=(",", ":"), default=list)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def parse_config(text: str, command: str | None = None) -> ExperimentConfig:
    """Parse, resolve and validate; raises ``ConfigError`` listing every problem."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (Omega)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError([f"config: {e}"]) from None
    problems: list[str] = []
    raw: dict[str, dict[str, Any]] = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            problems.append(f"config: unknown section [{sec}]")
            continue
        raw[sec] = {}
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                problems.append(f"{sec}: unknown key {key!r}")
                continue
            try:
                raw[sec][key] = SCHEMA[sec][key](val)
            except ValueError as e:
                problems.append(f"{sec}: bad value for {key!r}: {val!r} ({e})")
    values = {s: dict(v) for s, v in DEFAULTS.items()}
    preset = raw.get("experiment", {}).get("preset", "")
    if preset:
        if preset not in PRESETS:
            problems.append(f"experiment: unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        else:
            for sec, kv in PRESETS[preset].items():
                values[sec].update(kv)
    for sec, kv in raw.items():
        values[sec].update(kv)
    if command:
        values["experiment"]["command"] = command
    cfg = ExperimentConfig(values)
    problems += validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def validate(cfg: ExperimentConfig) -> list[str]:
    """Module preconditions checked before any computation."""
    from .conditions import beta_violations
    from .symbols import SymbolError, make_symbol

    p: list[str] = []
    cmd = cfg.command
    if cmd and cmd not in COMMANDS:
        p.append(f"experiment: unknown command {cmd!r}")
    sy, sp, co, ei, si = (cfg[s] for s in ("symbols", "spectral", "conditions", "eigensolver",
                                           "simulator"))
    params = {}
    if sy["id"] == "mg":
        params = {"Omega": sy["Omega"], "beta2_over_eta": sy["beta2_over_eta"]}
    sym = None
    try:
        sym = make_symbol(sy["id"], params, sy["alpha"])
    except SymbolError as e:
        p.append(f"symbols: {e}")
    if sy["K"] < 1:
        p.append("symbols: K must be >= 1")
    if not sp["s"] >= 1:
        p.append(f"spectral: s={sp['s']} must be >= 1")
    if not sp["tau"] > 0:
        p.append(f"spectral: tau={sp['tau']} must be > 0")
    if not sp["r"] > 3:
        p.append(f"spectral: r={sp['r']} must be > 3")
    if co["sequence"] not in ("mg", "sipm"):
        p.append(f"conditions: unknown sequence {co['sequence']!r}")
    if co["j_max"] < 1 or co["n_max"] < 3:
        p.append("conditions: need j_max >= 1 and n_max >= 3")
    if ei["a"] < 1:
        p.append("eigensolver: a must be a positive integer")
    if ei["P"] < 3 or ei["oracle_N"] < 2 or ei["oracle_N"] > max(ei["P"], 256):
        p.append("eigensolver: need P >= 3 and 2 <= oracle_N <= max(P, 256)")
    if not ei["tol"] > 0:
        p.append("eigensolver: tol must be > 0")
    if ei["j_max"] < 1:
        p.append("eigensolver: j_max must be >= 1")
    if si["K"] < 1 or not si["dt"] > 0 or si["t_end"] < 0:
        p.append("simulator: need K >= 1, dt > 0, t_end >= 0")
    if si["kappa"] < 0:
        p.append("simulator: kappa must be >= 0")
    if not 0 < si["gamma"] < 1:
        p.append("simulator: gamma must lie in (0, 1)")
    if not 0 < si["dealias"] <= 1:
        p.append("simulator: dealias must lie in (0, 1]")
    if si["mode"] not in ("linear", "nonlinear"):
        p.append("simulator: mode must be 'linear' or 'nonlinear'")
    if si["initial"] not in ("eigenfunction", "random", "steady"):
        p.append("simulator: initial must be eigenfunction, random or steady")
    if si["linear_method"] not in ("spectral", "physical"):
        p.append("simulator: linear_method must be 'spectral' or 'physical'")
    if any(not e > 0 for e in si["epsilon"]) or not si["epsilon"]:
        p.append("simulator: epsilon list must be non-empty and positive")
    if si["sample_every"] < 1 or si["n_steps"] < 1 or not 0 < si["fraction"] < 1:
        p.append("simulator: need sample_every >= 1, n_steps >= 1, 0 < fraction < 1")
    if not si["tau0"] > 0:
        p.append("simulator: tau0 must be > 0")
    if sym is None:
        return p
    betas = (co["beta1"], co["beta2"], co["beta3"])
    if cmd in ("conditions", "eigen-sweep", "growth", "eigen"):
        p += [f"conditions: {v}" for v in beta_violations(betas, sym.r0)]
    ei_b = ei["b"]
    needs_b = cmd in ("eigen", "growth") or (cmd == "simulate" and si["initial"] == "eigenfunction")
    if needs_b and (len(ei_b) != sym.d - 1 or 0 in ei_b):
        p.append(f"eigensolver: b must be a nonzero {sym.d - 1}-vector for {sym.name}, got {ei_b}")
    seq_dim = {"mg": 3, "sipm": 2}.get(co["sequence"])
    if cmd in ("conditions", "eigen-sweep") and seq_dim is not None and sym.d != seq_dim:
        p.append(f"conditions: sequence {co['sequence']!r} needs a {seq_dim}-d symbol, got {sym.name}")
    q = sp["q"]
    if q is not None and not q > sym.r0 + sym.d / 4:
        p.append(f"spectral: q={q} must exceed r0 + d/4 = {sym.r0 + sym.d / 4:g}")
    if needs_b and cmd != "eigen" and max(ei_b, default=0) > si["K"]:
        p.append(f"simulator: K={si['K']} cannot hold b={ei_b}")
    if cmd in ("growth", "simulate", "eigen") and ei["a"] > si["K"]:
        p.append(f"simulator: K={si['K']} cannot hold a={ei['a']}")
    # theorem coverage is a flag, not an error
    s = sp["s"]
    if sym.r0 <= 1:
        ok = sym.r0 == 0 or s <= 1 / sym.r0
        if cmd == "wellposed-radius" and not ok:
            cfg.flags.append(f"s={s:g} outside theorem coverage for well-posedness (need s <= 1/r0)")
    if sym.r0 >= 1 and cmd in ("eigen-sweep", "growth", "eigen"):
        thresh = (betas[2] - betas[0]) / (betas[2] * betas[1]) if betas[1] != 0 and betas[2] != 0 else float("inf")
        if not s > thresh:
            cfg.flags.append(f"s={s:g} outside theorem coverage for ill-posedness (need s > {thresh:g})")
    if cmd == "wellposed-radius" and sym.r0 > 1:
        cfg.flags.append(f"r0={sym.r0:g} > 1: outside theorem coverage for well-posedness")
    return p
