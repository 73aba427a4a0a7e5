"""TOML run configuration: parsing, validation and defaults.

Every problem found is collected into one ConfigError instead of stopping at
the first.  Example::

    alpha = 1.0
    c = 1.0
    delta = 1.0
    tau = 0.1
    t_final = 5.0

    [basis]
    kind = "dirichlet_1d"
    n_modes = 16

    [data]
    class = "h2"
    seed = 0
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, MGTError
from .model import ModalBasis, ModalState2, ModalState3, make_params

__all__ = ["RunConfig", "parse_config", "load_config", "default_config", "TOLERANCE_DEFAULTS"]

TOP_KEYS = {
    "alpha", "c", "delta", "tau", "tau_grid", "t_final", "samples_per_unit_time",
    "early_samples", "preparation", "output_dir", "allow_conservative",
    "basis", "data", "tolerances", "check", "decay",
}
BASIS_KEYS = {"kind", "length", "n_modes", "mus"}
DATA_KEYS = {"class", "seed", "u0", "u1", "u2"}
CHECK_KEYS = {"criteria", "perturb_energy"}
DECAY_KEYS = {"window"}
TOLERANCE_DEFAULTS = {
    "slope_lo": 0.8,
    "slope_hi": 1.2,
    "noise_band": 0.05,
    "tail_tol": 1e-12,
    "identity_tol": 1e-6,
}
DATA_CLASSES = ("h0", "h1", "h2", "explicit", "zero")
PREPARATIONS = ("well_prepared", "zero_u2", "random")
GAMMA_ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RunConfig:
    alpha: float = 1.0
    c: float = 1.0
    delta: float = 1.0
    tau: Optional[float] = None
    tau_grid: Optional[Tuple[float, ...]] = None
    basis: ModalBasis = field(default_factory=lambda: ModalBasis.dirichlet_1d(64))
    data_class: str = "h2"
    seed: int = 0
    u0: Optional[np.ndarray] = None
    u1: Optional[np.ndarray] = None
    u2: Optional[np.ndarray] = None
    t_final: float = 5.0
    samples_per_unit_time: float = 40.0
    early_samples: int = 400
    preparation: str = "well_prepared"
    output_dir: Optional[str] = None
    allow_conservative: bool = False
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    check_criteria: Optional[Tuple[int, ...]] = None
    perturb_energy: float = 0.0
    decay_window: Optional[Tuple[float, float]] = None

    def params(self, tau: Optional[float] = None):
        return make_params(self.alpha, self.c, self.delta, self.tau if tau is None else tau)

    def taus(self) -> Tuple[float, ...]:
        if self.tau_grid is not None:
            return self.tau_grid
        if self.tau is not None:
            return (self.tau,)
        return ()

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def explicit_state2(self) -> ModalState2:
        n = self.basis.n_modes
        return ModalState2(np.column_stack([_vec(self.u0, n), _vec(self.u1, n)]))

    def explicit_state3(self) -> ModalState3:
        n = self.basis.n_modes
        return ModalState3(np.column_stack([_vec(self.u0, n), _vec(self.u1, n), _vec(self.u2, n)]))


def _vec(x, n):
    return np.zeros(n) if x is None else np.asarray(x, dtype=float)


def default_config() -> RunConfig:
    return RunConfig()


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _num_list(x):
    return isinstance(x, list) and all(_is_num(v) for v in x)


def _unknown(table, allowed, where, errs):
    for k in sorted(set(table) - allowed):
        errs.append(f"unknown key {where}{k!r}")


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate configuration text."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        where = f" at line {line}, column {col}" if line is not None else ""
        msg = getattr(exc, "msg", str(exc))
        raise ConfigError([f"syntax error{where}: {msg}"]) from None

    errs = []
    kw = {}
    _unknown(raw, TOP_KEYS, "", errs)

    for key in ("alpha", "c", "delta"):
        if key in raw:
            v = raw[key]
            if not _is_num(v) or not math.isfinite(v) or v <= 0:
                errs.append(f"{key} must be a positive number, got {v!r}")
            else:
                kw[key] = float(v)

    if "tau" in raw and "tau_grid" in raw:
        errs.append("give either tau or tau_grid, not both")
    if "tau" in raw:
        v = raw["tau"]
        if not _is_num(v) or not math.isfinite(v) or v < 0:
            errs.append(f"tau must be a number >= 0, got {v!r}")
        else:
            kw["tau"] = float(v)
    if "tau_grid" in raw:
        g = raw["tau_grid"]
        if not _num_list(g) or not g:
            errs.append("tau_grid must be a nonempty list of numbers")
        elif any(t <= 0 for t in g):
            errs.append("tau_grid values must be positive")
        elif any(b >= a for a, b in zip(g, g[1:])):
            errs.append("tau_grid must be strictly decreasing")
        else:
            kw["tau_grid"] = tuple(float(t) for t in g)

    for key, lo in (("t_final", 0.0), ("samples_per_unit_time", 0.0)):
        if key in raw:
            v = raw[key]
            if not _is_num(v) or not math.isfinite(v) or v <= lo:
                errs.append(f"{key} must be a positive number, got {v!r}")
            else:
                kw[key] = float(v)
    if "early_samples" in raw:
        v = raw["early_samples"]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            errs.append(f"early_samples must be an integer >= 0, got {v!r}")
        else:
            kw["early_samples"] = v
    if "preparation" in raw:
        if raw["preparation"] not in PREPARATIONS:
            errs.append(f"preparation must be one of {list(PREPARATIONS)}")
        else:
            kw["preparation"] = raw["preparation"]
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str):
            errs.append("output_dir must be a string")
        else:
            kw["output_dir"] = raw["output_dir"]
    if "allow_conservative" in raw:
        if not isinstance(raw["allow_conservative"], bool):
            errs.append("allow_conservative must be true or false")
        else:
            kw["allow_conservative"] = raw["allow_conservative"]

    n_modes = _parse_basis(raw.get("basis"), kw, errs)
    _parse_data(raw.get("data"), kw, errs, n_modes)
    _parse_tolerances(raw.get("tolerances"), kw, errs)
    _parse_check(raw.get("check"), kw, errs)
    _parse_decay(raw.get("decay"), kw, errs)

    _check_regime(kw, errs)
    if errs:
        raise ConfigError(errs)
    return RunConfig(**kw)


def _table(t, name, errs):
    if t is None:
        return None
    if not isinstance(t, dict):
        errs.append(f"{name} must be a table")
        return None
    return t


def _parse_basis(t, kw, errs):
    t = _table(t, "basis", errs)
    if t is None:
        return 64
    _unknown(t, BASIS_KEYS, "basis.", errs)
    kind = t.get("kind", "dirichlet_1d")
    if kind == "dirichlet_1d":
        if "mus" in t:
            errs.append("basis.mus is only valid with kind = 'explicit'")
        n = t.get("n_modes", 64)
        length = t.get("length", 1.0)
        ok = True
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            errs.append(f"basis.n_modes must be a positive integer, got {n!r}")
            ok = False
        if not _is_num(length) or not math.isfinite(length) or length <= 0:
            errs.append(f"basis.length must be positive, got {length!r}")
            ok = False
        if ok:
            kw["basis"] = ModalBasis.dirichlet_1d(n, float(length))
            return n
        return None
    if kind == "explicit":
        mus = t.get("mus")
        if not _num_list(mus) or not mus:
            errs.append("basis.mus must be a nonempty list of numbers")
            return None
        try:
            kw["basis"] = ModalBasis.explicit(mus)
        except MGTError as exc:
            errs.append(f"basis.mus: {exc}")
            return None
        if "n_modes" in t and t["n_modes"] != len(mus):
            errs.append("basis.n_modes disagrees with len(basis.mus)")
        return len(mus)
    errs.append(f"basis.kind must be 'dirichlet_1d' or 'explicit', got {kind!r}")
    return None


def _parse_data(t, kw, errs, n_modes):
    t = _table(t, "data", errs)
    if t is None:
        return
    _unknown(t, DATA_KEYS, "data.", errs)
    cls = t.get("class", "h2")
    if cls not in DATA_CLASSES:
        errs.append(f"data.class must be one of {list(DATA_CLASSES)}, got {cls!r}")
    else:
        kw["data_class"] = cls
    if "seed" in t:
        s = t["seed"]
        if not isinstance(s, int) or isinstance(s, bool) or s < 0:
            errs.append(f"data.seed must be an integer >= 0, got {s!r}")
        else:
            kw["seed"] = s
    for key in ("u0", "u1", "u2"):
        if key in t:
            if cls != "explicit":
                errs.append(f"data.{key} is only valid with class = 'explicit'")
            elif not _num_list(t[key]) or not all(math.isfinite(x) for x in t[key]):
                errs.append(f"data.{key} must be a list of finite numbers")
            elif n_modes is not None and len(t[key]) != n_modes:
                errs.append(f"data.{key} has {len(t[key])} entries, basis has {n_modes} modes")
            else:
                kw[key] = np.array(t[key], dtype=float)
    if cls == "explicit" and "u0" not in t and "u1" not in t:
        errs.append("explicit data needs at least one of data.u0, data.u1")


def _parse_tolerances(t, kw, errs):
    t = _table(t, "tolerances", errs)
    if t is None:
        return
    _unknown(t, set(TOLERANCE_DEFAULTS), "tolerances.", errs)
    tol = dict(TOLERANCE_DEFAULTS)
    for k, v in t.items():
        if k in tol:
            if not _is_num(v) or not math.isfinite(v) or v <= 0:
                errs.append(f"tolerances.{k} must be a positive number")
            else:
                tol[k] = float(v)
    if tol["slope_lo"] >= tol["slope_hi"]:
        errs.append("tolerances.slope_lo must be below slope_hi")
    kw["tolerances"] = tol


def _parse_check(t, kw, errs):
    t = _table(t, "check", errs)
    if t is None:
        return
    _unknown(t, CHECK_KEYS, "check.", errs)
    if "criteria" in t:
        c = t["criteria"]
        if (not isinstance(c, list) or not c
                or not all(isinstance(i, int) and not isinstance(i, bool) and 1 <= i <= 14 for i in c)):
            errs.append("check.criteria must be a nonempty list of integers in 1..14")
        else:
            kw["check_criteria"] = tuple(sorted(set(c)))
    if "perturb_energy" in t:
        v = t["perturb_energy"]
        if not _is_num(v) or not math.isfinite(v):
            errs.append("check.perturb_energy must be a number")
        else:
            kw["perturb_energy"] = float(v)


def _parse_decay(t, kw, errs):
    t = _table(t, "decay", errs)
    if t is None:
        return
    _unknown(t, DECAY_KEYS, "decay.", errs)
    if "window" in t:
        w = t["window"]
        if not _num_list(w) or len(w) != 2 or not (0 <= w[0] < w[1]):
            errs.append("decay.window must be [t_lo, t_hi] with 0 <= t_lo < t_hi")
        else:
            kw["decay_window"] = (float(w[0]), float(w[1]))


def _check_regime(kw, errs):
    base = make_params(kw.get("alpha", 1.0), kw.get("c", 1.0), kw.get("delta", 1.0))
    taus = list(kw.get("tau_grid", ())) + ([kw["tau"]] if kw.get("tau") else [])
    for tau in taus:
        g = base.with_tau(tau).gamma_tau
        if g > GAMMA_ZERO_TOL * base.alpha:
            continue
        if kw.get("allow_conservative") and abs(g) <= GAMMA_ZERO_TOL * base.alpha:
            continue
        errs.append(f"gamma_tau nonpositive at tau={tau!r} (tau_max={base.tau_max!r})")


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError([f"config is not valid UTF-8: {exc}"]) from None
    return parse_config(text)
