"""Command-line entry point: ``mgtlab {spectrum,evolve,converge,decay,datko,check}``."""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import acceptance
from .config import RunConfig, default_config, load_config
from .convergence import SweepPlan, datko_sweep, rate_sweep, strong_convergence_sweep, uniform_bound_sweep
from .csvio import write_csv
from .dynamics import evolve, prepare_u2, random_initial, uniform_grid
from .energy import build_energy_trace, energy_identity_residual
from .errors import (
    ClassificationError,
    ConfigError,
    HorizonError,
    InternalConsistencyError,
    InvariantViolation,
    MGTError,
    NumericalFailure,
    ParameterDomainError,
    RangeError,
    ResolutionError,
    ShapeError,
    UnsupportedRegimeError,
)
from .model import ModalState2, ModalState3
from .spectrum import continuous_point, limit_spectrum, relaxed_spectrum, vertical_asymptote

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4
EXIT_HORIZON = 5

EXIT_HELP = """\
exit codes:
  0  success
  1  an acceptance criterion, slope band or decay check failed (reports are still written)
  2  usage or configuration error
  3  file I/O error
  4  numerical failure (root polish, classification, overflow, consistency check)
  5  horizon or resolution error (extend t_final or refine the time grid)
"""


# -- helpers -------------------------------------------------------------------


def _out_path(args, cfg: RunConfig, name: str) -> str:
    return os.path.join(args.out or cfg.output_dir or ".", name)


def _initial3(cfg: RunConfig, tau: float) -> ModalState3:
    basis = cfg.basis
    p = cfg.params(tau)
    if cfg.data_class == "zero":
        return ModalState3.zeros(basis.n_modes)
    if cfg.data_class == "explicit":
        if cfg.u2 is not None:
            return cfg.explicit_state3()
        d = cfg.explicit_state2()
        prep = "zero_u2" if cfg.preparation == "random" else cfg.preparation
        return ModalState3(np.column_stack([d.coeffs, prepare_u2(d.u, d.v, basis.mus, p, prep)]))
    if cfg.preparation == "random":
        return random_initial(basis, p, cfg.data_class, cfg.seed)
    return random_initial(basis, p, cfg.data_class, cfg.seed, cfg.preparation)


def _plan(cfg: RunConfig, taus) -> SweepPlan:
    explicit = None
    data_class = cfg.data_class
    preparation = cfg.preparation
    if data_class in ("explicit", "zero"):
        explicit = (cfg.explicit_state2() if data_class == "explicit"
                    else ModalState2.zeros(cfg.basis.n_modes))
        data_class = "explicit"
        if preparation == "random":
            preparation = "zero_u2"
    return SweepPlan(cfg.alpha, cfg.c, cfg.delta, tuple(taus), cfg.basis, data_class, cfg.seed,
                     cfg.t_final, cfg.samples_per_unit_time, preparation, explicit,
                     cfg.early_samples)


def _relaxed_taus(cfg: RunConfig):
    taus = [t for t in cfg.taus() if t > 0]
    if not taus:
        raise ConfigError(["this command needs tau > 0 or a tau_grid"])
    return taus


# -- subcommands ---------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig, args) -> int:
    basis = cfg.basis
    rel_rows, meta_rows = [], []
    lim = limit_spectrum(basis, cfg.params(0.0))
    meta_rows.append((0.0, lim.cont_point, None))
    for tau in sorted(t for t in cfg.taus() if t > 0):
        p = cfg.params(tau)
        sp = relaxed_spectrum(basis, p)
        for n in range(basis.n_modes):
            for label in ("b0", "b1", "b2"):
                z = sp[label][n]
                rel_rows.append((tau, n + 1, basis.mus[n], label, z.real, z.imag))
        meta_rows.append((tau, continuous_point(p, "relaxed"), vertical_asymptote(p)))
    lim_rows = []
    for n in range(basis.n_modes):
        for label in ("b0", "b1"):
            z = lim[label][n]
            lim_rows.append((n + 1, basis.mus[n], label, z.real, z.imag))
    write_csv(_out_path(args, cfg, "spectrum_relaxed.csv"), ("tau", "n", "mu", "branch", "re", "im"), rel_rows)
    write_csv(_out_path(args, cfg, "spectrum_limit.csv"), ("n", "mu", "branch", "re", "im"), lim_rows)
    write_csv(_out_path(args, cfg, "spectrum_meta.csv"), ("tau", "cont_point", "vert_asymptote"), meta_rows)
    print(f"spectrum: {basis.n_modes} modes, {len(meta_rows) - 1} relaxed tau value(s)")
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, args) -> int:
    taus = _relaxed_taus(cfg)
    if len(taus) != 1:
        raise ConfigError(["evolve needs a single tau"])
    tau = taus[0]
    p = cfg.params(tau)
    basis = cfg.basis
    n = max(2, int(math.ceil(cfg.t_final * cfg.samples_per_unit_time)) + 1)
    traj = evolve(_initial3(cfg, tau), basis, p, uniform_grid(cfg.t_final, n))
    trace = build_energy_trace(traj)
    resid = energy_identity_residual(traj, p, basis).running
    X = traj.coeffs
    traj_rows = [
        (t, m + 1, X[i, m, 0], X[i, m, 1], X[i, m, 2])
        for i, t in enumerate(traj.times)
        for m in range(basis.n_modes)
    ]
    en_rows = zip(traj.times, trace.E0, trace.E1, trace.E, trace.script_E, trace.norm_tau0_sq,
                  trace.utt_l2_sq, resid)
    write_csv(_out_path(args, cfg, "trajectory.csv"), ("t", "n", "u", "ut", "utt"), traj_rows)
    write_csv(_out_path(args, cfg, "energy.csv"),
              ("t", "E0", "E1", "E", "scriptE", "norm_tau0_sq", "utt_l2_sq", "identity_residual_running"),
              en_rows)
    print(f"evolve: tau={tau!r}, {len(traj)} samples, max identity residual {float(np.max(resid)):.3e}")
    return EXIT_OK


def cmd_converge(cfg: RunConfig, args) -> int:
    if cfg.tau_grid is None or len(cfg.tau_grid) < 3:
        raise ConfigError(["converge needs a tau_grid with at least three values to fit"])
    plan = _plan(cfg, cfg.tau_grid)
    descriptive = cfg.data_class in ("h0", "h1")
    if descriptive:
        rep = strong_convergence_sweep(plan, threads=args.threads)
    else:
        rep = rate_sweep(plan, threads=args.threads)
    lo, hi = cfg.tolerances["slope_lo"], cfg.tolerances["slope_hi"]
    rows = list(zip(rep.taus, rep.sup_err_sq))
    if rep.fit is not None:
        f = rep.fit
        trailer = f"# slope={f.slope!r},intercept={f.intercept!r},r2={f.r_squared!r}"
        ok = lo <= f.slope <= hi
        print(f"converge: slope={f.slope:.4f} r2={f.r_squared:.4f} band=[{lo}, {hi}] "
              + ("PASS" if ok else "FAIL"))
    else:
        trailer = "# descriptive"
        ok = True
        print(f"converge: {rep.notice}; monotone={rep.monotone}")
    write_csv(_out_path(args, cfg, "converge.csv"), ("tau", "sup_err_sq"), rows, trailer)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_decay(cfg: RunConfig, args) -> int:
    plan = _plan(cfg, sorted(_relaxed_taus(cfg), reverse=True))
    rep = uniform_bound_sweep(plan, threads=args.threads, window=cfg.decay_window)
    rows = list(zip(rep.taus, rep.M_hat, rep.omega_hat))
    write_csv(_out_path(args, cfg, "decay.csv"), ("tau", "M_hat", "omega_hat"), rows)
    ok = bool(np.all(rep.omega_hat > 0))
    print(f"decay: max M_hat={rep.max_M:.4f} min omega_hat={rep.min_omega:.4f} "
          + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_datko(cfg: RunConfig, args) -> int:
    plan = _plan(cfg, sorted(_relaxed_taus(cfg), reverse=True))
    rep = datko_sweep(plan, tail_tol=cfg.tolerances["tail_tol"], threads=args.threads)
    rows = [
        (t, i, i - tl, tl, n0, i / n0 if n0 > 0 else None)
        for t, i, tl, n0 in zip(rep.taus, rep.integrals, rep.tails, rep.initial_norms)
    ]
    write_csv(_out_path(args, cfg, "datko.csv"),
              ("tau", "integral", "horizon", "tail", "initial_norm_sq", "ratio"), rows)
    if np.all(rep.initial_norms > 0):
        print(f"datko: K_bar={rep.K_bar:.4f} max/min integral={rep.spread:.4f}")
    else:
        print("datko: zero data")
    return EXIT_OK


def cmd_check(cfg: RunConfig, args) -> int:
    results = acceptance.run_criteria(cfg.check_criteria, threads=args.threads,
                                      perturb_energy=cfg.perturb_energy)
    path = _out_path(args, cfg, "check_report.csv")
    write_csv(path, acceptance.REPORT_HEADER,
              [(r.id, r.status, r.measured, r.threshold) for r in results])
    for r in results:
        print(r.line())
    ok = acceptance.all_passed(results)
    print(f"check: {sum(r.passed for r in results)}/{len(results)} passed")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "spectrum": (cmd_spectrum, "eigenvalue branches of both generators (spectrum_*.csv)"),
    "evolve": (cmd_evolve, "sample one relaxed trajectory (trajectory.csv, energy.csv)"),
    "converge": (cmd_converge, "tau sweep of the relaxed-to-limit distance (converge.csv)"),
    "decay": (cmd_decay, "uniform growth bound and decay rate per tau (decay.csv)"),
    "datko": (cmd_datko, "Datko integrals per tau (datko.csv)"),
    "check": (cmd_check, "run the acceptance suite (check_report.csv)"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    common.add_argument("--threads", metavar="N", type=int, default=1,
                        help="worker threads for tau sweeps (results do not depend on N)")
    common.add_argument("--seed", metavar="S", type=int, help="random data seed (overrides config)")
    parser = argparse.ArgumentParser(
        prog="mgtlab",
        description="Modal simulator for the relaxed third-order acoustic equation and its limit.",
        epilog=EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text,
                       epilog=EXIT_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, ParameterDomainError, ShapeError, UnsupportedRegimeError)):
        return EXIT_USAGE
    if isinstance(exc, (HorizonError, ResolutionError)):
        return EXIT_HORIZON
    if isinstance(exc, (NumericalFailure, ClassificationError, InternalConsistencyError,
                        RangeError, InvariantViolation)):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else default_config()
        cfg = cfg.with_seed(args.seed)
        out_dir = args.out or cfg.output_dir or "."
        os.makedirs(out_dir, exist_ok=True)
        fn = COMMANDS[args.command][0]
        return fn(cfg, args)
    except (MGTError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
