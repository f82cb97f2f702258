"""The ten acceptance criteria, each at its stated tolerance.

Every criterion is a function returning ``(passed, detail)``. Under pytest
each one becomes a test and its PASS/FAIL line is collected into the
terminal summary; ``python3 tests/test_acceptance.py`` prints the same lines.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from sddpde import cli, verify
from sddpde.history import HistorySegment
from sddpde.measure import (
    cantor,
    default_measure,
    discrete_atoms,
    singular_integrate,
    GeneratingMeasure,
    SingularPart,
    stieltjes_integrate,
)
from sddpde.problem import (
    constant_load_problem,
    nicholson_problem,
    random_history,
    smooth_history,
    smooth_history_fn,
    zero_problem,
)
from sddpde.solver import SolverConfig

pytestmark = pytest.mark.acceptance

R, ETA, N_STEPS, DT = 1.0, 0.2, 51, 0.02
SLACK = 0.1
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _problem():
    return nicholson_problem(p=2.0, d=0.1, r=R, eta_ign=ETA)


# 1. Stieltjes quadrature against a dense Riemann-Stieltjes refinement

def _random_integrand(rng):
    a0 = rng.uniform(2.0, 3.0)
    amps = rng.normal(0.0, 0.5, (2, 3))
    freqs = rng.uniform(0.5, 3.0, 3)

    def chi(th):
        th = np.asarray(th, dtype=float)[..., None]
        return a0 + np.sum(amps[0] * np.cos(freqs * th) + amps[1] * np.sin(freqs * th), axis=-1)

    return chi


def criterion_stieltjes():
    rng = np.random.default_rng(1)
    dom = _problem().domain
    n = 10**6
    edges = np.linspace(-R, 0.0, n + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    d_cantor = np.diff(cantor((edges + R) / R))
    measures = [default_measure(R, ETA), default_measure(R, ETA, ac_shape="exponential", ac_rate=2.0)]
    d_shape = [np.diff(gm.ac.cumulative(edges)) for gm in measures]
    worst = 0.0
    for k in range(100):
        gm = measures[k % 2]
        phi = random_history(rng, dom, R, N_STEPS, 10.0 ** rng.uniform(-1, 1))
        chi = _random_integrand(rng)
        # oracle: midpoint-tagged sums over increments of the explicit g, atoms exact
        dg = gm.ac.factor(phi) * d_shape[k % 2] + gm.singular.amplitude(phi) * d_cantor
        lags, jumps = discrete_atoms(gm, phi)
        oracle = float(chi(mids) @ dg + chi(-lags) @ jumps)
        got = stieltjes_integrate(chi, gm, phi)
        worst = max(worst, abs(got - oracle) / abs(oracle))
    cantor_gm = GeneratingMeasure(R, singular=SingularPart(1.0, R, 0.0, 12))
    seg = HistorySegment(R, np.zeros((N_STEPS, dom.n_modes)), dom)
    sq = singular_integrate(lambda th: ((th + R) / R) ** 2, cantor_gm, seg)
    ok = worst <= 1e-6 and abs(sq - 3 / 8) <= 1e-3
    return ok, f"worst relative error {worst:.2e} over 100 pairs (tol 1e-6); x^2 Cantor {sq:.10f} vs 3/8"


# 2. ignoring condition, bit for bit

def criterion_ignoring():
    pb = _problem()
    rep = verify.probe_ignoring(pb, np.random.default_rng(2), N_STEPS, 1000)
    return rep.passed and len(rep.rows) == 1000, f"{len(rep.rows)} pairs, all lags and jumps bit-identical: {rep.passed}"


# 3. Lipschitz bound for F_c

def criterion_lipschitz():
    pb = _problem()
    rep = verify.probe_lipschitz(pb, np.random.default_rng(3), N_STEPS, 1000, SLACK)
    c = rep.constants
    return c["violations"] == 0 and len(rep.rows) == 1000, (
        f"L_Fc = {c['L_Fc']:.6g}, worst ratio {c['worst_ratio']:.3g}, violations {c['violations']}/1000"
    )


# 4. continuity of F_c and F_d along phi + 2^-n psi

def criterion_continuity():
    pb = _problem()
    rng = np.random.default_rng(4)
    ok, worst_final = True, 0.0
    for k in range(5):
        phi = random_history(rng, pb.domain, R, N_STEPS, 10.0 ** rng.uniform(-0.5, 0.5))
        psi = random_history(rng, pb.domain, R, N_STEPS)
        fc = verify.probe_Fc_continuity(pb, phi, psi, 32, SLACK)
        fd = verify.probe_Fd_continuity(pb, phi, psi, 32, SLACK)
        for rep, pairs in ((fc, [("I1", "I1_bound"), ("I2", "I2_bound")]),
                           (fd, [("K1", "K1_bound"), ("K2", "K2_bound"), ("K3", "K3_bound")])):
            for obs, bound in pairs:
                o, b = rep.column(obs)[:20], rep.column(bound)[:20]
                ok &= bool(np.all(o <= b * (1 + SLACK)))
        final = fd.column("F_diff")[-1]
        worst_final = max(worst_final, final)
        ok &= final < 1e-8 and fc.passed and fd.passed
    return ok, f"I1, I2, K1-K3 within bounds for n <= 20 on 5 sequences; max final ||F(phi^n)-F(phi)|| {worst_final:.2e}"


# 5. jump of g_d at theta0 alongside convergence of F_d

def criterion_jump_demo():
    pb = _problem()
    phi = smooth_history(pb.domain, R, N_STEPS, 2.0)
    gm = pb.measure
    eta = lambda seg: gm.discrete.lags(seg)[0]
    demo = verify.demo_remark1(eta, phi, phi, 32, pb)
    fd = verify.probe_Fd_continuity(pb, phi, phi, 32, SLACK)
    gaps = demo.column("g_gap")
    fd_demo, fd_probe = demo.column("Fd_diff"), fd.column("diff")
    ok = (demo.constants["demonstrated"] and np.all(gaps == 1.0)
          and np.allclose(fd_demo, fd_probe, rtol=0, atol=0) and fd_demo[-1] < 1e-8)
    return bool(ok), (f"|g(theta0, phi^n) - g(theta0, phi)| = 1 for all 32 n; "
                      f"||F_d(phi^n) - F_d(phi)|| from {fd_demo[0]:.2e} to {fd_demo[-1]:.2e}")


# 6. continuous dependence

def criterion_gronwall():
    pb = _problem()
    off = pb.with_measure(pb.measure.without_discrete())
    rng = np.random.default_rng(6)
    cfg = SolverConfig(DT, 2.0)
    ok, worst = True, {"off": 0.0, "on": 0.0}
    for _ in range(20):
        phi = random_history(rng, pb.domain, R, N_STEPS, 10.0 ** rng.uniform(-0.5, 0.5))
        dist = 10.0 ** rng.uniform(-4, -1)
        psi = HistorySegment(R, phi.frames + random_history(rng, pb.domain, R, N_STEPS, dist).frames,
                             pb.domain)
        for tag, problem in (("off", off), ("on", pb)):
            rep = verify.probe_gronwall(problem, phi, psi, cfg, SLACK)
            later = rep.column("t") > 0
            ratio = float(np.max(rep.column("observed")[later] / rep.column("bound")[later]))
            worst[tag] = max(worst[tag], ratio)
            ok &= rep.passed
    return ok, f"20 pairs to T=2: worst observed/bound for t > 0: {worst['off']:.3f} (atoms off), {worst['on']:.3f} (atoms on)"


# 7. uniqueness surrogate

def criterion_uniqueness():
    pb = _problem()
    rng = np.random.default_rng(7)
    cfg = SolverConfig(DT, 2.0)
    ok, g_max, c_max = True, 0.0, 0.0
    for _ in range(3):
        phi = random_history(rng, pb.domain, R, N_STEPS, 10.0 ** rng.uniform(-0.5, 0.7))
        rep = verify.probe_uniqueness(pb, phi, cfg)
        ok &= rep.passed
        g_max = max(g_max, rep.constants["max_guess_diff"])
        c_max = max(c_max, rep.constants["max_chain_diff"])
    return ok, f"max guess difference {g_max:.2e}, max chaining difference {c_max:.2e} (fp_tol {cfg.fp_tol:g})"


# 8. self-convergence

def criterion_convergence():
    dts = [0.04, 0.02, 0.01]
    nich = _problem()
    rep = verify.convergence_study(nich, smooth_history_fn(nich.domain, 2.0), dts, 2.0)
    order = rep.constants["orders"][0]
    exact = {}
    for name, pb in (("b=0", zero_problem()), ("constant F", constant_load_problem())):
        r = verify.convergence_study(pb, smooth_history_fn(pb.domain, 2.0), dts, 2.0)
        exact[name] = max(r.constants["diffs"])
    ok = 0.9 <= order <= 1.5 and all(v <= 1e-12 for v in exact.values())
    detail = f"Nicholson order {order:.3f}; " + ", ".join(f"{k} max diff {v:.1e}" for k, v in exact.items())
    return ok, detail


# 9. absorbing ball and C_0.25 boundedness

def criterion_dissipativity():
    pb = _problem()
    cfg = SolverConfig(DT, 10.0, deltas=(0.25,))
    starts = [smooth_history(pb.domain, R, N_STEPS, 20.0),
              random_history(np.random.default_rng(9), pb.domain, R, N_STEPS, 30.0)]
    ok, parts = True, []
    for phi in starts:
        rep = verify.probe_dissipativity(pb, phi, cfg, SLACK)
        c = rep.constants
        radius = pb.absorbing_radius() * (1 + SLACK)
        inside_after = rep.column("c_norm")[rep.column("t") >= (c["entry_time"] or math.inf)]
        ok &= rep.passed and inside_after.size > 0 and bool(np.all(inside_after <= radius))
        sup = c["sup_cdelta_second_half"]["0.25"]
        ok &= math.isfinite(sup)
        parts.append(f"from ||phi||_C={c['initial_c_norm']:.3g} entry t={c['entry_time']}, sup C_0.25 {sup:.4g}")
    return ok, f"radius {pb.absorbing_radius():.4g} x 1.1; " + "; ".join(parts)


# 10. determinism

def criterion_determinism(tmp_dir):
    cfg = str(CONFIGS / "nicholson.ini")
    for sub in ("a", "b"):
        out = str(Path(tmp_dir) / sub)
        cli.main(["run", "--config", cfg, "--out", out])
        cli.main(["verify", "--config", cfg, "--out", out, "--probes", "all"])
        cli.main(["converge", "--config", cfg, "--out", out])
    names = sorted(p.name for p in (Path(tmp_dir) / "a").glob("*.csv"))
    same = [(Path(tmp_dir) / "a" / n).read_bytes() == (Path(tmp_dir) / "b" / n).read_bytes() for n in names]
    return bool(names) and all(same), f"{sum(same)}/{len(names)} CSV files bit-identical across two runs"


CRITERIA = [
    (1, "Stieltjes quadrature oracle", criterion_stieltjes),
    (2, "ignoring condition exactness", criterion_ignoring),
    (3, "Lipschitz bound for F_c", criterion_lipschitz),
    (4, "continuity of F_c and F_d", criterion_continuity),
    (5, "discontinuous g_d, continuous F_d", criterion_jump_demo),
    (6, "continuous dependence", criterion_gronwall),
    (7, "uniqueness surrogate", criterion_uniqueness),
    (8, "solver self-convergence", criterion_convergence),
    (9, "dissipativity", criterion_dissipativity),
    (10, "determinism", criterion_determinism),
]


def _evaluate(fn, tmp_dir):
    start = time.perf_counter()
    passed, detail = fn(tmp_dir) if fn is criterion_determinism else fn()
    return bool(passed), detail, time.perf_counter() - start


def _line(number, title, passed, detail, seconds):
    return f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail} ({seconds:.1f} s)"


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(number, title, fn, tmp_path, acceptance_log):
    passed, detail, seconds = _evaluate(fn, tmp_path)
    line = _line(number, title, passed, detail, seconds)
    acceptance_log.append(line)
    print(line)
    assert passed, line
    assert seconds <= 60.0, f"criterion {number} took {seconds:.1f} s"


if __name__ == "__main__":
    import tempfile

    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for number, title, fn in CRITERIA:
            passed, detail, seconds = _evaluate(fn, tmp)
            failures += not passed
            print(_line(number, title, passed, detail, seconds), flush=True)
    sys.exit(1 if failures else 0)
