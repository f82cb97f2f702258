"""The nonlocal delay term F(u_t) and its split into continuous and discrete parts.

For a history segment phi the integrand is the field-valued map

    chi(theta) = int_Omega b(phi(theta, y)) f(. - y) dy

and F(phi) = int chi(theta) dg(theta, phi). The continuous parts integrate
a table of chi at the segment nodes (linear in theta between nodes); each
discrete atom evaluates chi directly at its own lag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ModeError
from .history import HistorySegment
from .measure import GeneratingMeasure, continuous_node_weights, discrete_atoms
from .spatial import DomainConfig, Kernel, SpectralField

BOUNDED = "bounded"
GROWTH = "growth"


@dataclass(frozen=True, eq=False)
class BirthFunction:
    """Pointwise nonlinearity b with the constants the estimates need.

    ``growth`` holds (C1, C2) with |b(s)| <= C1 |s| + C2. ``bound`` is M_b and
    is infinite for unbounded maps, which may only run in growth mode.
    """

    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    growth: tuple[float, float]
    bound: float = math.inf
    mode: str = BOUNDED
    tag: str = "custom"

    def __post_init__(self):
        if self.mode not in (BOUNDED, GROWTH):
            raise ModeError(f"unknown birth mode '{self.mode}'")
        if self.mode == BOUNDED and not math.isfinite(self.bound):
            raise ModeError(f"birth function '{self.tag}' is unbounded; use growth mode")

    def __call__(self, w):
        return self.func(np.asarray(w, dtype=float))

    @property
    def bounded(self) -> bool:
        return self.mode == BOUNDED


def nicholson(p: float, mode: str = BOUNDED) -> BirthFunction:
    """b(w) = p w exp(-w) on w >= 0, extended by 0 to negative w.

    The extension keeps b bounded by p/e and Lipschitz with constant p on
    the whole line; negative values only arise from spectral truncation.
    """
    if p < 0:
        raise DomainError("Nicholson parameter p must be >= 0")

    def b(w):
        wp = np.maximum(w, 0.0)
        return p * wp * np.exp(-wp)

    return BirthFunction(b, p, (p, 0.0), p / math.e, mode, f"nicholson(p={p!r})")


def linear_saturating(p: float, mode: str = BOUNDED) -> BirthFunction:
    """b(w) = p tanh(w)."""
    return BirthFunction(
        lambda w: p * np.tanh(w), abs(p), (abs(p), 0.0), abs(p), mode, f"linear-sat(p={p!r})"
    )


def linear(p: float) -> BirthFunction:
    """b(w) = p w; unbounded, so growth mode only."""
    return BirthFunction(lambda w: p * w, abs(p), (abs(p), 0.0), math.inf, GROWTH, f"linear(p={p!r})")


def constant(value: float, mode: str = BOUNDED) -> BirthFunction:
    return BirthFunction(
        lambda w: np.full_like(w, value), 0.0, (0.0, abs(value)), abs(value), mode,
        f"constant({value!r})",
    )


def zero(mode: str = BOUNDED) -> BirthFunction:
    return BirthFunction(np.zeros_like, 0.0, (0.0, 0.0), 0.0, mode, "zero")


def fields_at(coeffs: np.ndarray, b: BirthFunction, f: Kernel) -> np.ndarray:
    """Coefficients of conv(b(u)) for each row u of ``coeffs``."""
    grid = np.atleast_2d(coeffs) @ f.domain.basis
    return f.convolve_coeffs(b(grid))


def convolution_table(phi: HistorySegment, b: BirthFunction, f: Kernel) -> np.ndarray:
    """(n_steps, N): the integrand at every segment node."""
    return fields_at(phi.frames, b, f)


def atom_fields(phi: HistorySegment, lags: np.ndarray, b: BirthFunction, f: Kernel) -> np.ndarray:
    if lags.size == 0:
        return np.zeros((0, phi.domain.n_modes))
    return fields_at(phi.values_at(-lags), b, f)


def split_coeffs(phi: HistorySegment, gm: GeneratingMeasure, b: BirthFunction, f: Kernel):
    """Coefficient arrays (F_c(phi), F_d(phi))."""
    fc = continuous_node_weights(gm, phi) @ convolution_table(phi, b, f)
    lags, jumps = discrete_atoms(gm, phi)
    fd = jumps @ atom_fields(phi, lags, b, f) if lags.size else np.zeros(phi.domain.n_modes)
    return fc, fd


def eval_F_c(phi, gm, b, f) -> SpectralField:
    fc = continuous_node_weights(gm, phi) @ convolution_table(phi, b, f)
    return SpectralField(fc, phi.domain)


def eval_F_d(phi, gm, b, f) -> SpectralField:
    lags, jumps = discrete_atoms(gm, phi)
    if lags.size == 0:
        return SpectralField.zeros(phi.domain)
    return SpectralField(jumps @ atom_fields(phi, lags, b, f), phi.domain)


def eval_F(phi: HistorySegment, gm: GeneratingMeasure, b: BirthFunction, f: Kernel) -> SpectralField:
    """F(phi) = F_c(phi) + F_d(phi)."""
    fc, fd = split_coeffs(phi, gm, b, f)
    return SpectralField(fc + fd, phi.domain)


def lipschitz_constant_Fc(
    gm: GeneratingMeasure, b: BirthFunction, f: Kernel, dom: DomainConfig
) -> float:
    """L_Fc = M_f |Omega| (L_b M_Vgc + M_b |Omega|^(1/2) L_Vgc); bounded b only."""
    if not b.bounded:
        raise ModeError("the F_c Lipschitz constant needs a bounded birth function")
    omega = dom.measure
    return f.bound * omega * (b.lipschitz * gm.Mvg_c + b.bound * math.sqrt(omega) * gm.Lvg_c)


def F_norm_bound(gm: GeneratingMeasure, b: BirthFunction, f: Kernel, dom: DomainConfig) -> float:
    """Uniform bound M_b M_f |Omega|^(3/2) M_Vg on ||F(phi)||."""
    if not b.bounded:
        raise ModeError("a uniform bound on F needs a bounded birth function")
    return b.bound * f.bound * dom.measure**1.5 * gm.M_Vg
