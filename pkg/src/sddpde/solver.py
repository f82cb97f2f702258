"""Mild-solution time stepping: exponential Euler with a per-step fixed point.

Each step solves, mode by mode,

    u_j(t+dt) = exp(-mu_j dt) u_j(t) + dt phi1(mu_j dt) F(u_{t+dt})_j,  mu_j = lambda_j + d,

where F depends on the new frame through the history segment u_{t+dt}.
In "integrand" mode the damping stays inside the Duhamel integral instead:
mu_j = lambda_j and the load is F - d u(t+dt).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .delay_term import split_coeffs
from .errors import ConfigError, InvariantViolation, StepFailure
from .history import HistorySegment, extend_flat, shift_append
from .problem import Problem
from .spatial import phi1

ABSORBED = "absorbed"
INTEGRAND = "integrand"
GUESSES = ("predictor", "zero", "previous")


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    fp_tol: float = 1e-10
    fp_max_iter: int = 50
    damping_mode: str = ABSORBED
    fp_guess: str = "predictor"
    deltas: tuple = (0.25,)

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append(f"solver.dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            problems.append(f"solver.t_end must be >= 0, got {self.t_end}")
        if not self.fp_tol > 0:
            problems.append(f"solver.fp_tol must be positive, got {self.fp_tol}")
        if self.fp_max_iter < 1:
            problems.append("solver.fp_max_iter must be >= 1")
        if self.damping_mode not in (ABSORBED, INTEGRAND):
            problems.append(f"solver.damping_mode must be absorbed|integrand, got {self.damping_mode}")
        if self.fp_guess not in GUESSES:
            problems.append(f"solver.fp_guess must be one of {GUESSES}, got {self.fp_guess}")
        if any(not 0.0 <= d < 0.5 for d in self.deltas):
            problems.append(f"solver.deltas must lie in [0, 1/2), got {self.deltas}")
        if self.dt > 0 and self.t_end >= 0 and not _is_multiple(self.t_end, self.dt):
            problems.append(f"solver.t_end={self.t_end} is not a multiple of dt={self.dt}")
        if problems:
            raise ConfigError(problems)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def _is_multiple(a: float, b: float) -> bool:
    q = a / b
    return abs(q - round(q)) < 1e-9 * max(1.0, q)


def history_steps(r: float, dt: float) -> int:
    """Number of history frames for spacing dt over [-r, 0]; dt must divide r."""
    if not _is_multiple(r, dt):
        raise ConfigError(f"dt={dt} does not divide r={r}")
    return int(round(r / dt)) + 1


@dataclass
class TrajectoryRecord:
    """Diagnostics of a run plus every frame from -r to t_end."""

    times: np.ndarray
    frames: np.ndarray
    window: int
    r: float
    l2: np.ndarray
    c_norm: np.ndarray
    cdelta: dict
    fp_iters: np.ndarray
    domain: object = field(repr=False, default=None)

    @property
    def dt(self) -> float:
        return self.r / (self.window - 1)

    def segment(self, k: int) -> HistorySegment:
        """u_{t_k} as a history segment."""
        return HistorySegment(self.r, self.frames[k : k + self.window], self.domain)

    @property
    def final(self) -> HistorySegment:
        return self.segment(len(self.times) - 1)

    def columns(self):
        cols = ["t", "l2_norm", "c_norm"] + [f"cdelta_{d!r}" for d in self.cdelta] + ["fp_iters"]
        return cols

    def rows(self):
        deltas = list(self.cdelta)
        for k, t in enumerate(self.times):
            yield [t, self.l2[k], self.c_norm[k]] + [self.cdelta[d][k] for d in deltas] + [
                int(self.fp_iters[k])
            ]


class _Stepper:
    def __init__(self, problem: Problem, cfg: SolverConfig):
        op = problem.operator
        self.problem = problem
        self.cfg = cfg
        mu = op.eigenvalues + (op.damping if cfg.damping_mode == ABSORBED else 0.0)
        self.decay = np.exp(-mu * cfg.dt)
        self.weight = cfg.dt * phi1(mu * cfg.dt)
        self.damping = op.damping if cfg.damping_mode == INTEGRAND else 0.0

    def load(self, seg: HistorySegment) -> np.ndarray:
        pb = self.problem
        fc, fd = split_coeffs(seg, pb.measure, pb.birth, pb.kernel)
        return fc + fd

    def step(self, seg: HistorySegment, guess: Optional[np.ndarray] = None, time: float = 0.0):
        base = self.decay * seg.frames[-1]
        mode = self.cfg.fp_guess
        if guess is not None:
            u = np.asarray(guess, dtype=float)
        elif mode == "predictor":
            u = base + self.weight * (self.load(seg) - self.damping * seg.frames[-1])
        elif mode == "previous":
            u = seg.frames[-1].copy()
        else:
            u = np.zeros_like(base)
        for it in range(1, self.cfg.fp_max_iter + 1):
            trial = shift_append(seg, u)
            u_new = base + self.weight * (self.load(trial) - self.damping * u)
            inc = float(np.linalg.norm(u_new - u))
            u = u_new
            if not np.isfinite(inc):
                break
            if inc < self.cfg.fp_tol:
                return shift_append(seg, u), it
        raise StepFailure(
            f"fixed point did not converge within {self.cfg.fp_max_iter} iterations at t={time}",
            time=time,
            iterations=self.cfg.fp_max_iter,
        )


def check_contraction(problem: Problem, cfg: SolverConfig) -> None:
    """Refuse dt with dt * L_Fc >= 1 when the constant is defined."""
    if problem.birth.bounded:
        lip = problem.lipschitz_Fc()
        if cfg.dt * lip >= 1.0:
            raise ConfigError(f"dt * L_Fc = {cfg.dt * lip:.3g} >= 1; reduce solver.dt")


def step(seg: HistorySegment, problem: Problem, cfg: SolverConfig, guess=None):
    """Advance u_t to u_{t+dt}. Returns (segment, fixed-point iterations)."""
    _check_grid(seg, cfg)
    return _Stepper(problem, cfg).step(seg, guess)


def _check_grid(seg: HistorySegment, cfg: SolverConfig) -> None:
    if abs(seg.h - cfg.dt) > 1e-12 * max(1.0, cfg.dt):
        raise ConfigError(f"solver dt={cfg.dt} differs from history spacing {seg.h}")


def integrate(phi0: HistorySegment, problem: Problem, cfg: SolverConfig) -> TrajectoryRecord:
    """Run S_t phi0 for t = 0, dt, ..., t_end."""
    _check_grid(phi0, cfg)
    check_contraction(problem, cfg)
    stepper = _Stepper(problem, cfg)
    return _run(phi0, stepper, cfg.n_steps, problem, cfg)


def _run(phi0, stepper, n, problem, cfg, hook=None) -> TrajectoryRecord:
    window = phi0.n_steps
    frames = np.empty((window + n, phi0.domain.n_modes))
    frames[:window] = phi0.frames
    iters = np.zeros(n + 1, dtype=int)
    seg = phi0
    for k in range(1, n + 1):
        t = k * cfg.dt
        if hook is not None:
            hook(k - 1, seg)
        try:
            seg, iters[k] = stepper.step(seg, time=t)
        except StepFailure as exc:
            if exc.time is None:
                exc.time = t
            raise
        frames[window + k - 1] = seg.frames[-1]
    return _record(frames, window, phi0.r, cfg, problem, iters)


def _record(frames, window, r, cfg, problem, iters) -> TrajectoryRecord:
    n = frames.shape[0] - window
    norms = np.linalg.norm(frames, axis=1)
    lam = problem.operator.eigenvalues
    times = cfg.dt * np.arange(n + 1)
    c_norm = np.array([norms[k : k + window].max() for k in range(n + 1)])
    cdelta = {}
    for delta in cfg.deltas:
        fn = np.sqrt(np.sum(lam ** (2 * delta) * frames**2, axis=1))
        cdelta[delta] = np.array([fn[k : k + window].max() for k in range(n + 1)])
    return TrajectoryRecord(
        times, frames, window, r, norms[window - 1 :], c_norm, cdelta, iters, problem.domain
    )


def chain_by_ignoring(phi0: HistorySegment, problem: Problem, cfg: SolverConfig) -> TrajectoryRecord:
    """Integrate in blocks of about eta_ign / 2, checking the ignoring mechanism.

    Inside each block F_d of the live segment must equal F_d of the flat
    extension of the block-start segment; any mismatch means the configured
    measure does not ignore the recent past.
    """
    _check_grid(phi0, cfg)
    check_contraction(problem, cfg)
    gm = problem.measure
    eta_ign = gm.eta_ign
    if eta_ign is None:
        raise InvariantViolation("chain_by_ignoring needs a discrete part with eta_ign > 0")
    block = max(1, int(math.floor(0.5 * eta_ign / cfg.dt + 1e-9)))
    stepper = _Stepper(problem, cfg)
    start = {"seg": phi0}

    def check(k, seg):
        offset = k % block
        if offset == 0:
            start["seg"] = seg
        flat = extend_flat(start["seg"], offset * cfg.dt, eta_ign)
        _, live = split_coeffs(seg, gm, problem.birth, problem.kernel)
        _, ext = split_coeffs(flat, gm, problem.birth, problem.kernel)
        if not np.array_equal(live, ext):
            raise InvariantViolation(
                f"F_d(u_t) != F_d(extension) at step {k} (max diff {np.abs(live - ext).max()})"
            )

    return _run(phi0, stepper, cfg.n_steps, problem, cfg, hook=check)
