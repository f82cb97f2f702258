"""Batch command line: ``sddpde run|verify|converge --config FILE``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, verify
from .config import PROBE_NAMES, RunConfig
from .errors import ConfigError, ModeError, StepFailure
from .history import HistorySegment
from .problem import random_history
from .solver import integrate

log = logging.getLogger("sddpde")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_STEP = 3


def _constants(cfg: RunConfig, problem) -> dict:
    out = {
        "M_Vg": problem.measure.M_Vg,
        "M_Vgc": problem.measure.Mvg_c,
        "L_Vgc": problem.measure.Lvg_c,
        "M_f": problem.kernel.bound,
        "Omega": problem.domain.measure,
        "lambda1": problem.operator.lambda1,
        "d": problem.damping,
        "L_b": problem.birth.lipschitz,
        "birth": problem.birth.tag,
    }
    if problem.birth.bounded:
        out.update(
            M_b=problem.birth.bound,
            L_Fc=problem.lipschitz_Fc(),
            F_bound=problem.F_bound(),
            absorbing_radius=problem.absorbing_radius(),
        )
    if problem.measure.discrete is not None:
        out["eta_ign"] = problem.measure.discrete.eta_ign
        out["discrete_tail_bound"] = problem.measure.discrete.tail_bound
    return out


def _prepare(args) -> tuple[RunConfig, Path]:
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = cfg.with_out(args.out)
    out = Path(cfg.run.out)
    out.mkdir(parents=True, exist_ok=True)
    io._atomic_write(out / "config_echo.ini", cfg.to_ini())
    return cfg, out


def cmd_run(args) -> int:
    cfg, out = _prepare(args)
    problem = cfg.build_problem()
    phi0 = cfg.initial_history(problem.domain)
    solver_cfg = cfg.solver_config()
    try:
        rec = integrate(phi0, problem, solver_cfg)
    except StepFailure as exc:
        log.error("step failure at t=%s: %s", exc.time, exc)
        io.write_json(out / "summary.json", {"status": "step_failure", "time": exc.time,
                                             "message": str(exc), "constants": _constants(cfg, problem)})
        return EXIT_STEP
    io.write_csv(out / "trajectory.csv", rec.columns(), rec.rows())
    summary = {
        "status": "ok",
        "t_end": solver_cfg.t_end,
        "dt": solver_cfg.dt,
        "final_l2_norm": rec.l2[-1],
        "final_c_norm": rec.c_norm[-1],
        "final_cdelta": {repr(d): v[-1] for d, v in rec.cdelta.items()},
        "max_fp_iters": int(rec.fp_iters.max()),
        "fp_max_iter": solver_cfg.fp_max_iter,
        "constants": _constants(cfg, problem),
    }
    io.write_json(out / "summary.json", summary)
    log.info("wrote %s", out / "trajectory.csv")
    return EXIT_OK


def run_probe(name: str, cfg: RunConfig, problem) -> verify.ProbeReport:
    """Build the inputs for one named probe from the config and run it."""
    pr = cfg.probes
    rng = np.random.default_rng([cfg.run.seed, 1 + PROBE_NAMES.index(name)])
    n = cfg.n_steps
    r = cfg.delay.r
    phi = cfg.initial_history(problem.domain)
    if name == "ignoring":
        return verify.probe_ignoring(problem, rng, n, pr.n_pairs)
    if name == "lipschitz":
        return verify.probe_lipschitz(problem, rng, n, pr.n_pairs, pr.slack)
    if name == "fc_continuity":
        direction = random_history(rng, problem.domain, r, n)
        return verify.probe_Fc_continuity(problem, phi, direction, pr.n_probes, pr.slack)
    if name == "fd_continuity":
        return verify.probe_Fd_continuity(problem, phi, phi, pr.n_probes, pr.slack)
    if name == "remark1":
        gm = problem.measure
        if gm.has_discrete:
            eta = lambda seg: gm.discrete.lags(seg)[0]
        else:
            eta = lambda seg: 0.5 * r
        return verify.demo_remark1(eta, phi, phi, pr.n_probes, problem)
    if name == "gronwall":
        direction = random_history(rng, problem.domain, r, n, pr.gronwall_distance)
        psi = HistorySegment(r, phi.frames + direction.frames, problem.domain)
        return verify.probe_gronwall(problem, phi, psi, cfg.solver_config(pr.gronwall_T), pr.slack)
    if name == "uniqueness":
        return verify.probe_uniqueness(problem, phi, cfg.solver_config(pr.gronwall_T))
    if name == "dissipativity":
        big = cfg.initial_history(problem.domain, amplitude=pr.dissipativity_amplitude)
        return verify.probe_dissipativity(problem, big, cfg.solver_config(pr.dissipativity_T), pr.slack)
    if name == "convergence":
        s = cfg.solver_config()
        return verify.convergence_study(
            problem, cfg.history_fn(problem.domain), cfg.solver.dt_list, pr.converge_T,
            cfg_kw={"fp_tol": s.fp_tol, "fp_max_iter": s.fp_max_iter,
                    "damping_mode": s.damping_mode},
        )
    raise ConfigError(f"unknown probe '{name}'")


def cmd_verify(args) -> int:
    cfg, out = _prepare(args)
    names = cfg.probe_names(args.probes)
    problem = cfg.build_problem()
    results = {}
    for name in names:
        try:
            rep = run_probe(name, cfg, problem)
        except (ModeError, StepFailure) as exc:
            rep = verify.ProbeReport(name, ["note"], passed=False, notes=[str(exc)])
        rep.write(out)
        results[name] = rep.passed
        log.info("%-14s %s", name, "PASS" if rep.passed else "FAIL")
    io.write_json(out / "summary.json", {"probes": results, "all_passed": all(results.values()),
                                         "constants": _constants(cfg, problem)})
    return EXIT_OK if all(results.values()) else EXIT_FAILED


def cmd_converge(args) -> int:
    cfg, out = _prepare(args)
    problem = cfg.build_problem()
    rep = run_probe("convergence", cfg, problem)
    io.write_csv(out / "order_table.csv", rep.columns, rep.rows)
    rep.write(out)
    io.write_json(out / "summary.json", {"convergence": rep.constants, "passed": rep.passed,
                                         "constants": _constants(cfg, problem)})
    for row in rep.rows:
        log.info("dt=%-8g diff=%-12.4g order=%.3f", *row)
    return EXIT_OK if rep.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sddpde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("run", cmd_run, "integrate one trajectory"),
        ("verify", cmd_verify, "run estimate probes"),
        ("converge", cmd_converge, "dt refinement study"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--out", help="output directory (overrides run.out)")
        p.add_argument("--seed", type=int, help="seed (overrides run.seed)")
        if name == "verify":
            p.add_argument("--probes", help="comma list of probes, or 'all'")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
