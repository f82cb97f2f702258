"""Empirical checks of the continuity, Lipschitz, Gronwall and dissipativity estimates.

Every bound is assembled from closed-form constants (M_f, |Omega|, L_b, M_b,
M_Vg, L_Fc, ...) and never fitted to the measured data. A probe passes when
each observed value is at most ``bound * (1 + slack)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import io
from .delay_term import atom_fields, convolution_table, split_coeffs
from .errors import ModeError
from .history import HistorySegment
from .measure import (
    continuous_node_weights,
    discrete_atoms,
    total_variation,
    variation_distance_c,
)
from .problem import Problem, random_history
from .solver import SolverConfig, chain_by_ignoring, history_steps, integrate

DEFAULT_SLACK = 0.1
CONVERGED = 1e-8


@dataclass
class ProbeReport:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    passed: bool = False
    constants: dict = field(default_factory=dict)
    slack: float = DEFAULT_SLACK
    notes: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "slack": self.slack,
            "constants": self.constants,
            "notes": self.notes,
            "columns": self.columns,
            "rows": self.rows,
        }

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        io.write_json(out / f"probe_{self.name}.json", self.to_dict())
        io.write_csv(out / f"probe_{self.name}.csv", self.columns, self.rows)


def c_distance(a: HistorySegment, b: HistorySegment) -> float:
    return float(np.linalg.norm(a.frames - b.frames, axis=1).max())


def unit_direction(seg: HistorySegment) -> HistorySegment:
    top = seg.frame_norms.max()
    if top == 0:
        return seg
    return HistorySegment(seg.r, seg.frames / top, seg.domain)


def perturbation_sequence(phi: HistorySegment, direction: HistorySegment, n_probes: int):
    """phi^n = phi + 2**-n direction for n = 1..n_probes."""
    for n in range(1, n_probes + 1):
        yield n, HistorySegment(phi.r, phi.frames + 0.5**n * direction.frames, phi.domain)


def _require_bounded(problem: Problem, what: str) -> None:
    if not problem.birth.bounded:
        raise ModeError(f"{what} needs a bounded birth function")


def _le(observed, bound, slack) -> bool:
    return bool(observed <= bound * (1.0 + slack) + 1e-300)


def probe_lipschitz(problem: Problem, rng: np.random.Generator, n_steps: int,
                    n_pairs: int = 1000, slack: float = DEFAULT_SLACK) -> ProbeReport:
    """||F_c(phi) - F_c(psi)|| against L_Fc ||phi - psi||_C over random pairs."""
    _require_bounded(problem, "the Lipschitz probe")
    pb, r = problem, problem.r
    lip = pb.lipschitz_Fc()
    rep = ProbeReport("lipschitz", ["pair", "distance", "bound", "observed", "ratio"], slack=slack)
    worst = 0.0
    for k in range(n_pairs):
        scale = 10.0 ** rng.uniform(-1, 1)
        phi = random_history(rng, pb.domain, r, n_steps, scale)
        if k % 2:
            psi = random_history(rng, pb.domain, r, n_steps, 10.0 ** rng.uniform(-1, 1))
        else:
            pert = random_history(rng, pb.domain, r, n_steps, 10.0 ** rng.uniform(-6, -1))
            psi = HistorySegment(r, phi.frames + pert.frames, pb.domain)
        fc_phi, _ = split_coeffs(phi, pb.measure, pb.birth, pb.kernel)
        fc_psi, _ = split_coeffs(psi, pb.measure, pb.birth, pb.kernel)
        dist = c_distance(phi, psi)
        obs = float(np.linalg.norm(fc_phi - fc_psi))
        bound = lip * dist
        ratio = obs / bound if bound > 0 else 0.0
        worst = max(worst, ratio)
        rep.rows.append([k, dist, bound, obs, ratio])
    violations = int(sum(row[4] > 1.0 + slack for row in rep.rows))
    rep.passed = violations == 0
    rep.constants = {"L_Fc": lip, "worst_ratio": worst, "violations": violations}
    return rep


def probe_Fc_continuity(problem: Problem, phi: HistorySegment, direction: HistorySegment,
                        n_probes: int = 32, slack: float = DEFAULT_SLACK,
                        tol: float = CONVERGED) -> ProbeReport:
    """Split F_c(phi^n) - F_c(phi) = I1 + I2 and bound each part.

    I1 integrates b(phi^n) - b(phi) against g_c(., phi^n); I2 integrates b(phi)
    against g_c(., phi^n) - g_c(., phi).
    """
    _require_bounded(problem, "the I2 bound")
    pb = problem
    gm, b, f, omega = pb.measure, pb.birth, pb.kernel, pb.domain.measure
    direction = unit_direction(direction)
    table = convolution_table(phi, b, f)
    weights = continuous_node_weights(gm, phi)
    rep = ProbeReport(
        "fc_continuity",
        ["n", "distance", "diff", "I1", "I1_bound", "I2", "I2_bound", "split_residual"],
        slack=slack,
    )
    ok = True
    for n, phin in perturbation_sequence(phi, direction, n_probes):
        table_n = convolution_table(phin, b, f)
        weights_n = continuous_node_weights(gm, phin)
        i1 = weights_n @ (table_n - table)
        i2 = (weights_n - weights) @ table
        diff = weights_n @ table_n - weights @ table
        dist = c_distance(phin, phi)
        b1 = b.lipschitz * f.bound * omega * dist * total_variation(gm, phin)
        b2 = b.bound * f.bound * omega**1.5 * variation_distance_c(gm, phin, phi)
        n1, n2 = float(np.linalg.norm(i1)), float(np.linalg.norm(i2))
        resid = float(np.linalg.norm(i1 + i2 - diff))
        ok &= _le(n1, b1, slack) and _le(n2, b2, slack)
        rep.rows.append([n, dist, float(np.linalg.norm(diff)), n1, b1, n2, b2, resid])
    final = rep.rows[-1][2] if rep.rows else 0.0
    rep.passed = bool(ok and final < tol)
    rep.constants = {"L_b": b.lipschitz, "M_b": b.bound, "M_f": f.bound, "Omega": omega,
                     "M_Vg": gm.M_Vg, "L_Vgc": gm.Lvg_c, "tolerance": tol}
    return rep


def _fd_terms(phi, phin, gm, b, f):
    """K1, K2, K3 of F_d(phi^n) - F_d(phi) plus the atom data they use."""
    lags_n, h_n = discrete_atoms(gm, phin)
    lags, h = discrete_atoms(gm, phi)
    at_n_n = atom_fields(phin, lags_n, b, f)  # b(phi^n(-eta_k(phi^n)))
    at_0_n = atom_fields(phi, lags_n, b, f)   # b(phi(-eta_k(phi^n)))
    at_0_0 = atom_fields(phi, lags, b, f)     # b(phi(-eta_k(phi)))
    k1 = h_n @ (at_n_n - at_0_n)
    k2 = (h_n - h) @ at_0_n
    k3 = h @ (at_0_n - at_0_0)
    shift = np.linalg.norm(phi.values_at(-lags_n) - phi.values_at(-lags), axis=1)
    return k1, k2, k3, h_n, h, shift


def probe_Fd_continuity(problem: Problem, phi: HistorySegment, direction: HistorySegment,
                        n_probes: int = 32, slack: float = DEFAULT_SLACK,
                        tol: float = CONVERGED) -> ProbeReport:
    """Split F_d(phi^n) - F_d(phi) = K1 + K2 + K3 and bound each term."""
    pb = problem
    gm, b, f, omega = pb.measure, pb.birth, pb.kernel, pb.domain.measure
    c1, c2 = b.growth
    direction = unit_direction(direction)
    phi_c = float(phi.frame_norms.max())
    fc0, fd0 = split_coeffs(phi, gm, b, f)
    rep = ProbeReport(
        "fd_continuity",
        ["n", "distance", "diff", "F_diff", "K1", "K1_bound", "K2", "K2_bound", "K3", "K3_bound",
         "split_residual"],
        slack=slack,
    )
    if not gm.has_discrete:
        rep.notes.append("measure has no discrete part; F_d vanishes identically")
    ok = True
    for n, phin in perturbation_sequence(phi, direction, n_probes):
        k1, k2, k3, h_n, h, shift = _fd_terms(phi, phin, gm, b, f)
        fcn, fdn = split_coeffs(phin, gm, b, f)
        dist = c_distance(phin, phi)
        b1 = b.lipschitz * f.bound * omega**1.5 * dist * np.abs(h_n).sum()
        b2 = f.bound * (c1 * omega * phi_c + c2 * omega**1.5) * np.abs(h_n - h).sum()
        b3 = f.bound * b.lipschitz * omega * float(np.abs(h) @ shift)
        n1, n2, n3 = (float(np.linalg.norm(k)) for k in (k1, k2, k3))
        diff = float(np.linalg.norm(fdn - fd0))
        resid = float(np.linalg.norm(k1 + k2 + k3 - (fdn - fd0)))
        ok &= _le(n1, b1, slack) and _le(n2, b2, slack) and _le(n3, b3, slack)
        total = float(np.linalg.norm(fcn + fdn - fc0 - fd0))
        rep.rows.append([n, dist, diff, total, n1, b1, n2, b2, n3, b3, resid])
    final = rep.rows[-1] if rep.rows else [0.0] * 11
    rep.passed = bool(ok and final[2] < tol and final[3] < tol)
    rep.constants = {"L_b": b.lipschitz, "C1": c1, "C2": c2, "M_f": f.bound, "Omega": omega,
                     "phi_C": phi_c, "tolerance": tol}
    return rep


def demo_remark1(eta: Callable[[HistorySegment], float], phi: HistorySegment,
                 direction: HistorySegment, n_probes: int = 32,
                 problem: Optional[Problem] = None) -> ProbeReport:
    """Single state-dependent jump g = 1[theta > -eta(phi)] along phi^n -> phi.

    Reports g(theta0, phi^n) - g(theta0, phi) at theta0 = -eta(phi) and, when
    ``problem`` is given, ||F_d(phi^n) - F_d(phi)|| on the same sequence.
    """
    direction = unit_direction(direction)
    eta0 = float(eta(phi))
    theta0 = -eta0
    g0 = float(theta0 > -eta0)
    fd0 = None
    if problem is not None:
        fd0 = split_coeffs(phi, problem.measure, problem.birth, problem.kernel)[1]
    rep = ProbeReport("remark1", ["n", "distance", "eta_n", "eta", "g_gap", "Fd_diff"], slack=0.0)
    gaps, above = [], []
    for n, phin in perturbation_sequence(phi, direction, n_probes):
        eta_n = float(eta(phin))
        gap = abs(float(theta0 > -eta_n) - g0)
        fd_diff = float("nan")
        if problem is not None:
            fdn = split_coeffs(phin, problem.measure, problem.birth, problem.kernel)[1]
            fd_diff = float(np.linalg.norm(fdn - fd0))
        gaps.append(gap)
        above.append(eta_n > eta0)
        rep.rows.append([n, c_distance(phin, phi), eta_n, eta0, gap, fd_diff])
    demonstrated = bool(all(g == 1.0 for g in gaps) and all(above))
    if not any(above):
        rep.notes.append("degenerate: eta does not increase along the sequence, no jump to exhibit")
    rep.passed = True
    rep.constants = {"theta0": theta0, "demonstrated": demonstrated}
    if problem is not None and rep.rows:
        rep.constants["Fd_diff_final"] = rep.rows[-1][5]
    return rep


def fd_difference_integral(rec_a, rec_b, problem: Problem) -> np.ndarray:
    """int_0^t ||F_d(u_tau) - F_d(v_tau)|| dtau by trapezoid on the solver grid."""
    gm, b, f = problem.measure, problem.birth, problem.kernel
    diffs = np.empty(len(rec_a.times))
    for k in range(len(rec_a.times)):
        _, fa = split_coeffs(rec_a.segment(k), gm, b, f)
        _, fb = split_coeffs(rec_b.segment(k), gm, b, f)
        diffs[k] = np.linalg.norm(fa - fb)
    dt = rec_a.dt
    out = np.zeros_like(diffs)
    out[1:] = np.cumsum(0.5 * dt * (diffs[1:] + diffs[:-1]))
    return out


def probe_gronwall(problem: Problem, phi: HistorySegment, psi: HistorySegment,
                   cfg: SolverConfig, slack: float = DEFAULT_SLACK) -> ProbeReport:
    """Continuous dependence: ||u_t - v_t||_C <= G(t) exp(L_Fc t).

    Without atoms G(t) = ||phi - psi||_C; with atoms G adds the integrated
    F_d mismatch measured along the two runs.
    """
    _require_bounded(problem, "the Gronwall probe")
    lip = problem.lipschitz_Fc()
    ra = integrate(phi, problem, cfg)
    rb = integrate(psi, problem, cfg)
    window = ra.window
    diff = np.linalg.norm(ra.frames - rb.frames, axis=1)
    observed = np.array([diff[k : k + window].max() for k in range(len(ra.times))])
    g = np.full(len(ra.times), c_distance(phi, psi))
    if problem.measure.has_discrete:
        g = g + fd_difference_integral(ra, rb, problem)
    bound = g * np.exp(lip * ra.times)
    rep = ProbeReport("gronwall", ["t", "G", "bound", "observed"], slack=slack)
    for k, t in enumerate(ra.times):
        rep.rows.append([t, g[k], bound[k], observed[k]])
    rep.passed = bool(np.all(observed <= bound * (1 + slack) + 1e-300))
    rep.constants = {"L_Fc": lip, "initial_distance": c_distance(phi, psi),
                     "discrete_part": problem.measure.has_discrete, "T": cfg.t_end}
    return rep


def probe_uniqueness(problem: Problem, phi: HistorySegment, cfg: SolverConfig) -> ProbeReport:
    """Runs differing only in the fixed-point starting guess, plus the block-chained run."""
    from dataclasses import replace

    base = integrate(phi, problem, replace(cfg, fp_guess="predictor"))
    other = integrate(phi, problem, replace(cfg, fp_guess="zero"))
    rep = ProbeReport("uniqueness", ["t", "guess_diff", "chain_diff"], slack=0.0)
    chain = None
    if problem.measure.eta_ign is not None:
        chain = chain_by_ignoring(phi, problem, cfg)
    w = base.window
    for k, t in enumerate(base.times):
        gd = float(np.linalg.norm(base.frames[w - 1 + k] - other.frames[w - 1 + k]))
        cd = float("nan") if chain is None else float(
            np.linalg.norm(base.frames[w - 1 + k] - chain.frames[w - 1 + k]))
        rep.rows.append([t, gd, cd])
    gdiff = rep.column("guess_diff")
    cdiff = rep.column("chain_diff")
    rep.passed = bool(np.all(gdiff < cfg.fp_tol) and (chain is None or np.all(cdiff < cfg.fp_tol)))
    rep.constants = {"fp_tol": cfg.fp_tol, "max_guess_diff": float(gdiff.max()),
                     "max_chain_diff": float(np.nanmax(cdiff)) if chain is not None else None}
    return rep


def probe_dissipativity(problem: Problem, phi0: HistorySegment, cfg: SolverConfig,
                        slack: float = DEFAULT_SLACK) -> ProbeReport:
    """Absorbing-ball entry in ||.||_C and boundedness of C_delta norms after T/2.

    The ball has radius ``max(R (1 + slack), slack)`` so a vanishing bound R
    still leaves a ball of radius slack around 0.
    """
    _require_bounded(problem, "the dissipativity probe")
    radius = max(problem.absorbing_radius() * (1 + slack), slack)
    rec = integrate(phi0, problem, cfg)
    deltas = list(rec.cdelta)
    rep = ProbeReport(
        "dissipativity", ["t", "radius", "c_norm"] + [f"cdelta_{d!r}" for d in deltas], slack=slack
    )
    for k, t in enumerate(rec.times):
        rep.rows.append([t, radius, rec.c_norm[k]] + [rec.cdelta[d][k] for d in deltas])
    outside = np.nonzero(rec.c_norm > radius)[0]
    entry = 0.0 if outside.size == 0 else (
        float(rec.times[outside[-1] + 1]) if outside[-1] + 1 < len(rec.times) else None
    )
    late = rec.times >= 0.5 * cfg.t_end
    sups = {repr(d): float(rec.cdelta[d][late].max()) for d in deltas}
    bounded = all(math.isfinite(v) for v in sups.values())
    rep.passed = bool(entry is not None and bounded)
    rep.constants = {
        "absorbing_radius": problem.absorbing_radius(),
        "radius_with_slack": radius,
        "F_bound": problem.F_bound(),
        "lambda1": problem.operator.lambda1,
        "d": problem.damping,
        "M_Vg": problem.measure.M_Vg,
        "entry_time": entry,
        "sup_cdelta_second_half": sups,
        "initial_c_norm": float(rec.c_norm[0]),
        "final_c_norm": float(rec.c_norm[-1]),
    }
    if entry is None:
        rep.notes.append("trajectory did not settle inside the absorbing ball by T")
    return rep


def convergence_study(problem: Problem, history_fn: Callable[[np.ndarray], np.ndarray],
                      dt_list: Sequence[float], t_end: float, min_order: float = 0.9,
                      eps: float = 1e-12, cfg_kw: Optional[dict] = None) -> ProbeReport:
    """Observed order from successive dt halvings, compared at t_end.

    If every difference is at roundoff level the scheme is exact for the
    problem and the study passes without an order.
    """
    dts = [float(d) for d in dt_list]
    rep = ProbeReport("convergence", ["dt", "diff_to_next", "order"], slack=0.0)
    if len(dts) < 3 or any(a <= b for a, b in zip(dts, dts[1:])):
        rep.notes.append("dt_list must hold at least three strictly decreasing values")
        return rep
    finals = []
    for dt in dts:
        n = history_steps(problem.r, dt)
        phi = HistorySegment.from_function(history_fn, problem.r, n, problem.domain)
        cfg = SolverConfig(dt, t_end, **(cfg_kw or {}))
        finals.append(integrate(phi, problem, cfg).frames[-1])
    diffs = [float(np.linalg.norm(a - b)) for a, b in zip(finals, finals[1:])]
    scale = max(1.0, float(np.linalg.norm(finals[-1])))
    orders = [
        math.log(d0 / d1) / math.log(dt0 / dt1) if d0 > 0 and d1 > 0 else float("nan")
        for d0, d1, dt0, dt1 in zip(diffs, diffs[1:], dts, dts[1:])
    ]
    for i, dt in enumerate(dts):
        rep.rows.append([
            dt,
            diffs[i] if i < len(diffs) else float("nan"),
            orders[i] if i < len(orders) else float("nan"),
        ])
    exact = all(d <= eps * scale for d in diffs)
    monotone = all(d1 < d0 for d0, d1 in zip(diffs, diffs[1:]))
    if exact:
        rep.passed = True
        rep.notes.append("differences at roundoff level: integrator exact for this problem")
    else:
        rep.passed = bool(monotone and all(o >= min_order for o in orders))
        if not monotone:
            rep.notes.append("differences do not decrease under refinement")
    rep.constants = {"t_end": t_end, "orders": orders, "diffs": diffs, "exact": exact,
                     "min_order": min_order}
    return rep


def ignoring_pair(rng: np.random.Generator, seg: HistorySegment, eta_ign: float,
                  scale: float = 1.0) -> HistorySegment:
    """A segment whose interpolant equals ``seg`` on [-r, -eta_ign] and differs after."""
    idx, frac = seg.locate(-eta_ign)
    keep = int(idx) + (1 if float(frac) > 0 else 0)
    frames = seg.frames.copy()
    tail = frames[keep + 1 :]
    frames[keep + 1 :] = scale * rng.standard_normal(tail.shape)
    return HistorySegment(seg.r, frames, seg.domain)


def probe_ignoring(problem: Problem, rng: np.random.Generator, n_steps: int,
                   n_pairs: int = 1000) -> ProbeReport:
    """Lags and jumps agree bit for bit on segments sharing [-r, -eta_ign]."""
    gm = problem.measure
    rep = ProbeReport("ignoring", ["pair", "lags_equal", "jumps_equal"], slack=0.0)
    if not gm.has_discrete:
        rep.notes.append("no discrete part")
        rep.passed = True
        return rep
    for k in range(n_pairs):
        a = random_history(rng, problem.domain, problem.r, n_steps, 10.0 ** rng.uniform(-1, 1))
        b = ignoring_pair(rng, a, gm.eta_ign, 10.0 ** rng.uniform(-1, 1))
        la, ha = discrete_atoms(gm, a)
        lb, hb = discrete_atoms(gm, b)
        rep.rows.append([k, bool(np.array_equal(la, lb)), bool(np.array_equal(ha, hb))])
    rep.passed = all(row[1] and row[2] for row in rep.rows)
    rep.constants = {"eta_ign": gm.eta_ign, "n_pairs": n_pairs}
    return rep


__all__ = [
    "ProbeReport",
    "probe_lipschitz",
    "probe_Fc_continuity",
    "probe_Fd_continuity",
    "demo_remark1",
    "probe_gronwall",
    "probe_uniqueness",
    "probe_dissipativity",
    "convergence_study",
    "probe_ignoring",
]
