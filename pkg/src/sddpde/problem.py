"""Problem bundles, presets and history samplers."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import delay_term
from .delay_term import BirthFunction
from .history import HistorySegment
from .measure import GeneratingMeasure, default_measure
from .spatial import DomainConfig, Kernel, SpatialOperator, gaussian_kernel


@dataclass(frozen=True, eq=False)
class Problem:
    operator: SpatialOperator
    kernel: Kernel
    birth: BirthFunction
    measure: GeneratingMeasure

    @property
    def domain(self) -> DomainConfig:
        return self.operator.domain

    @property
    def r(self) -> float:
        return self.measure.r

    @property
    def damping(self) -> float:
        return self.operator.damping

    def with_measure(self, measure: GeneratingMeasure) -> "Problem":
        return replace(self, measure=measure)

    def with_birth(self, birth: BirthFunction) -> "Problem":
        return replace(self, birth=birth)

    def lipschitz_Fc(self) -> float:
        return delay_term.lipschitz_constant_Fc(self.measure, self.birth, self.kernel, self.domain)

    def F_bound(self) -> float:
        return delay_term.F_norm_bound(self.measure, self.birth, self.kernel, self.domain)

    def absorbing_radius(self) -> float:
        """M_b M_f |Omega|^(3/2) M_Vg / (lambda_1 + d)."""
        return self.F_bound() / (self.operator.lambda1 + self.damping)


def nicholson_problem(
    p: float = 2.0,
    d: float = 0.1,
    r: float = 1.0,
    eta_ign: float = 0.2,
    n_modes: int = 16,
    n_grid: int = 64,
    measure: GeneratingMeasure | None = None,
    kernel_width: float = 0.5,
) -> Problem:
    dom = DomainConfig(np.pi, n_modes, n_grid)
    return Problem(
        SpatialOperator(dom, d),
        gaussian_kernel(dom, 1.0, kernel_width),
        delay_term.nicholson(p),
        measure if measure is not None else default_measure(r, eta_ign),
    )


def static_measure(r: float, eta_ign: float, **kw) -> GeneratingMeasure:
    """The built-in family with every mass frozen (lags still state-dependent)."""
    kw.setdefault("beta", 0.0)
    kw.setdefault("gamma1", 0.0)
    return default_measure(r, eta_ign, state_jumps=False, **kw)


def constant_load_problem(value: float = 1.0, d: float = 0.1, r: float = 1.0, eta_ign: float = 0.2,
                          n_modes: int = 16, n_grid: int = 64) -> Problem:
    """b constant and all masses frozen, so F is one fixed field."""
    dom = DomainConfig(np.pi, n_modes, n_grid)
    return Problem(
        SpatialOperator(dom, d),
        gaussian_kernel(dom, 1.0, 0.5),
        delay_term.constant(value),
        static_measure(r, eta_ign),
    )


def zero_problem(d: float = 0.1, r: float = 1.0, eta_ign: float = 0.2,
                 n_modes: int = 16, n_grid: int = 64) -> Problem:
    dom = DomainConfig(np.pi, n_modes, n_grid)
    return Problem(
        SpatialOperator(dom, d),
        gaussian_kernel(dom, 1.0, 0.5),
        delay_term.zero(),
        default_measure(r, eta_ign),
    )


def smooth_history_fn(domain: DomainConfig, amplitude: float = 1.0, frequency: float = 2.0):
    """theta -> coefficients of a positive-leaning field oscillating in time.

    Mode j carries amplitude * j**-2 * (1 + 0.5 sin(frequency * pi * theta + j)).
    """
    j = domain.modes.astype(float)

    def fn(thetas):
        thetas = np.asarray(thetas, dtype=float)[:, None]
        return amplitude * j**-2 * (1.0 + 0.5 * np.sin(frequency * np.pi * thetas + j))

    return fn


def smooth_history(domain: DomainConfig, r: float, n_steps: int, amplitude: float = 1.0,
                   frequency: float = 2.0) -> HistorySegment:
    return HistorySegment.from_function(smooth_history_fn(domain, amplitude, frequency), r, n_steps, domain)


def random_history_fn(rng: np.random.Generator, domain: DomainConfig, r: float, scale: float = 1.0):
    """theta -> coefficients: a random low-order cosine series in time per mode.

    Normalised so the max over a fine time grid of the L2 norm equals ``scale``.
    """
    j = domain.modes.astype(float)
    amps = rng.standard_normal((3, domain.n_modes)) * j**-1.5
    freqs = np.arange(3)[:, None]

    def raw(thetas):
        thetas = np.asarray(thetas, dtype=float)
        basis = np.cos(np.pi * freqs[None, :, 0] * thetas[:, None] / r)
        return basis @ amps

    probe = np.linspace(-r, 0.0, 401)
    top = np.linalg.norm(raw(probe), axis=1).max()
    norm = scale / top if top > 0 else 0.0
    return lambda thetas: norm * raw(thetas)


def random_history(rng: np.random.Generator, domain: DomainConfig, r: float, n_steps: int,
                   scale: float = 1.0) -> HistorySegment:
    seg = HistorySegment.from_function(random_history_fn(rng, domain, r, scale), r, n_steps, domain)
    top = seg.frame_norms.max()
    if top > 0:
        seg = HistorySegment(r, seg.frames * (scale / top), domain)
    return seg
