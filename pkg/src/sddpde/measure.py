"""State-dependent generating function g = g_d + g_ac + g_s and Stieltjes integration.

The built-in family:

* discrete part: atoms at theta_k = -eta_k(phi) with jumps h_k(phi), where
  ``eta_k = eta_ign + (r - eta_ign) * sigmoid(a_k + slope * J(phi))`` and
  ``h_k = c_k * tanh(1 + J(phi))`` (or ``c_k`` for static jumps). J is the
  squared-norm energy of phi on [-r, -eta_ign], so both ignore the most
  recent eta_ign of history.
* absolutely continuous part: density ``rho0(theta) * (1 + beta * tanh(I(phi)))``.
* singular part: ``gamma(phi) * cantor((theta + r) / r)`` with
  ``gamma = gamma0 + gamma1 * tanh(I(phi))``.

I(phi) is the integral of ||phi(s)|| over all of [-r, 0].

Integrands ``chi`` are callables taking a 1-d array of thetas and returning an
array whose first axis runs over those thetas; trailing axes (e.g. spectral
coefficients) are carried through, so field-valued integrands work unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvariantViolation
from .history import HistorySegment

Integrand = Callable[[np.ndarray], np.ndarray]

_BOUND_RTOL = 1e-12


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def tail_energy(phi: HistorySegment, eta_ign: float) -> float:
    """J(phi): trapezoidal integral of ||phi(s)||^2 over [-r, -eta_ign]."""
    upper = -eta_ign
    if upper <= -phi.r:
        return 0.0
    idx, frac = phi.locate(upper)
    idx, frac = int(idx), float(frac)
    if idx == phi.n_steps - 2 and frac == 1.0:
        idx, frac = phi.n_steps - 1, 0.0
    sq = phi.frame_norms[: idx + 1] ** 2
    total = phi.h * (sq.sum() - 0.5 * (sq[0] + sq[-1])) if idx > 0 else 0.0
    if frac > 0.0:
        end = np.sum(phi.values_at(upper) ** 2)
        total += 0.5 * frac * phi.h * (sq[-1] + end)
    return float(total)


def segment_mass(phi: HistorySegment) -> float:
    """I(phi): trapezoidal integral of ||phi(s)|| over [-r, 0]."""
    n = phi.frame_norms
    return float(phi.h * (n.sum() - 0.5 * (n[0] + n[-1])))


def cantor(x):
    """The ternary Cantor function on [0, 1], vectorised."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    out = np.zeros_like(x)
    live = x < 1.0
    out[~live] = 1.0
    y = np.where(live, x, 0.0)
    scale = 0.5
    for _ in range(60):
        if not live.any():
            break
        y = 3.0 * y
        digit = np.floor(y)
        y = y - digit
        hit_one = live & (digit == 1)
        out[hit_one] += scale
        out[live & (digit == 2)] += scale
        live = live & ~hit_one
        scale *= 0.5
    return out


@lru_cache(maxsize=32)
def cantor_midpoints(depth: int) -> np.ndarray:
    """Midpoints of the 2**depth intervals of the depth-level Cantor construction."""
    left = np.zeros(1)
    for level in range(1, depth + 1):
        left = np.concatenate([left, left + 2.0 * 3.0**-level])
    mid = left + 0.5 * 3.0**-depth
    mid.flags.writeable = False
    return mid


@dataclass(frozen=True)
class DiscretePart:
    n_atoms: int
    eta_ign: float
    r: float
    c_decay: float = 0.5
    lag_slope: float = 1.0
    state_jumps: bool = True

    def __post_init__(self):
        if self.n_atoms < 0:
            raise DomainError("n_atoms must be >= 0")
        if not 0.0 < self.eta_ign < self.r:
            raise DomainError(f"eta_ign must lie in (0, r), got {self.eta_ign}")
        if not 0.0 < self.c_decay < 1.0:
            raise DomainError(f"c_decay must lie in (0, 1), got {self.c_decay}")

    @cached_property
    def weights(self) -> np.ndarray:
        """c_k = c_decay**k, k = 1..K."""
        return self.c_decay ** np.arange(1, self.n_atoms + 1, dtype=float)

    @cached_property
    def lag_offsets(self) -> np.ndarray:
        if self.n_atoms == 1:
            return np.zeros(1)
        return np.linspace(-2.0, 2.0, self.n_atoms)

    @property
    def jump_bound(self) -> float:
        """Uniform bound on sum_k |h_k(phi)|."""
        return float(self.weights.sum())

    @property
    def tail_bound(self) -> float:
        """sum_{k>K} c_k: what truncating the series at K atoms discards."""
        return self.c_decay ** (self.n_atoms + 1) / (1.0 - self.c_decay)

    def lags(self, phi: HistorySegment) -> np.ndarray:
        j = tail_energy(phi, self.eta_ign)
        return self.eta_ign + (self.r - self.eta_ign) * _sigmoid(
            self.lag_offsets + self.lag_slope * j
        )

    def jumps(self, phi: HistorySegment) -> np.ndarray:
        if not self.state_jumps:
            return self.weights.copy()
        return self.weights * np.tanh(1.0 + tail_energy(phi, self.eta_ign))


@dataclass(frozen=True)
class FixedAtoms:
    """State-independent atoms at theta_k = -lags[k] with jumps[k].

    Ignoring holds trivially. Lags are not range-checked here so that
    ``discrete_atoms`` can report a misconfigured family.
    """

    lags_: tuple
    jumps_: tuple
    eta_ign: float
    r: float

    @property
    def n_atoms(self) -> int:
        return len(self.lags_)

    @property
    def jump_bound(self) -> float:
        return float(np.abs(self.jumps_).sum())

    @property
    def tail_bound(self) -> float:
        return 0.0

    def lags(self, phi: HistorySegment) -> np.ndarray:
        return np.array(self.lags_, dtype=float)

    def jumps(self, phi: HistorySegment) -> np.ndarray:
        return np.array(self.jumps_, dtype=float)


@dataclass(frozen=True)
class AbsContPart:
    mass: float
    r: float
    beta: float = 0.0
    shape: str = "uniform"
    rate: float = 1.0
    n_tab: int = 2001

    def __post_init__(self):
        if self.mass < 0:
            raise DomainError("ac mass must be >= 0")
        if self.beta < -1.0:
            raise DomainError("beta must be >= -1 so the density stays nonnegative")
        if self.shape not in ("uniform", "exponential"):
            raise DomainError(f"unknown ac shape '{self.shape}'")
        if self.n_tab < 2:
            raise DomainError("n_tab must be >= 2")

    def density(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.shape == "uniform":
            return np.full_like(theta, self.mass / self.r)
        k = self.rate
        return self.mass * k * np.exp(k * theta) / -np.expm1(-k * self.r)

    def cumulative(self, theta):
        """Closed-form integral of the base density from -r to theta."""
        theta = np.asarray(theta, dtype=float)
        if self.shape == "uniform":
            return self.mass * (theta + self.r) / self.r
        k = self.rate
        return self.mass * np.expm1(k * (theta + self.r)) / np.expm1(k * self.r)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.r, 0.0, self.n_tab)

    @cached_property
    def node_weights(self) -> np.ndarray:
        """Composite Simpson weights times the density (trapezoid if n_tab is even)."""
        h = self.r / (self.n_tab - 1)
        if self.n_tab % 2:
            w = np.full(self.n_tab, 2.0 * h / 3.0)
            w[1::2] = 4.0 * h / 3.0
            w[0] = w[-1] = h / 3.0
        else:
            w = np.full(self.n_tab, h)
            w[0] = w[-1] = 0.5 * h
        return w * self.density(self.nodes)

    @property
    def base_mass(self) -> float:
        """Tabulated integral of the base density."""
        return float(self.node_weights.sum())

    @property
    def state_lipschitz(self) -> float:
        """L_s: Lipschitz constant of tanh(I(phi)) w.r.t. ||.||_C."""
        return self.r

    def factor(self, phi: HistorySegment) -> float:
        return 1.0 + self.beta * np.tanh(segment_mass(phi))


@dataclass(frozen=True)
class SingularPart:
    gamma0: float
    r: float
    gamma1: float = 0.0
    depth: int = 12

    def __post_init__(self):
        if self.gamma0 < 0 or self.gamma1 < 0:
            raise DomainError("singular amplitudes must be >= 0")
        if self.depth < 1:
            raise DomainError("Cantor depth must be >= 1")

    @property
    def amplitude_bound(self) -> float:
        return self.gamma0 + self.gamma1

    @property
    def amplitude_lipschitz(self) -> float:
        return self.gamma1 * self.r

    def amplitude(self, phi: HistorySegment) -> float:
        return float(self.gamma0 + self.gamma1 * np.tanh(segment_mass(phi)))

    @cached_property
    def nodes(self) -> np.ndarray:
        return -self.r + self.r * cantor_midpoints(self.depth)


@dataclass(frozen=True)
class GeneratingMeasure:
    r: float
    discrete: Optional[DiscretePart | FixedAtoms] = None
    ac: Optional[AbsContPart] = None
    singular: Optional[SingularPart] = None
    max_variation: Optional[float] = None

    def __post_init__(self):
        for part in (self.discrete, self.ac, self.singular):
            if part is not None and part.r != self.r:
                raise DomainError("all measure parts must share the same r")
        if self.max_variation is not None and self.max_variation < self.variation_sup * (
            1 - _BOUND_RTOL
        ):
            raise InvariantViolation(
                f"M_Vg = {self.max_variation} is below the family's variation "
                f"supremum {self.variation_sup}"
            )

    @property
    def eta_ign(self) -> Optional[float]:
        return None if self.discrete is None else self.discrete.eta_ign

    @property
    def has_discrete(self) -> bool:
        return self.discrete is not None and self.discrete.n_atoms > 0

    @property
    def variation_sup(self) -> float:
        """Supremum over phi of the total variation of g(., phi)."""
        return self.Mvg_c + (self.discrete.jump_bound if self.discrete else 0.0)

    @property
    def M_Vg(self) -> float:
        return self.variation_sup if self.max_variation is None else float(self.max_variation)

    @property
    def Mvg_c(self) -> float:
        """M_{Vg_c}: uniform bound on the variation of the continuous part."""
        total = 0.0
        if self.ac is not None:
            total += self.ac.base_mass * max(1.0, 1.0 + self.ac.beta)
        if self.singular is not None:
            total += self.singular.amplitude_bound
        return total

    @property
    def Lvg_c(self) -> float:
        """L_{Vg_c}: Lipschitz constant of the continuous-part variation distance."""
        total = 0.0
        if self.ac is not None:
            total += self.ac.base_mass * abs(self.ac.beta) * self.ac.state_lipschitz
        if self.singular is not None:
            total += self.singular.amplitude_lipschitz
        return total

    def without_discrete(self) -> "GeneratingMeasure":
        return GeneratingMeasure(self.r, None, self.ac, self.singular)

    def only_discrete(self) -> "GeneratingMeasure":
        return GeneratingMeasure(self.r, self.discrete, None, None)


def _weighted_sum(weights: np.ndarray, values) -> float | np.ndarray:
    values = np.asarray(values, dtype=float)
    out = np.tensordot(weights, values, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def discrete_atoms(gm: GeneratingMeasure, phi: HistorySegment):
    """(eta_k(phi), h_k(phi)), with the lag range checked."""
    if not gm.has_discrete:
        return np.zeros(0), np.zeros(0)
    d = gm.discrete
    lags = d.lags(phi)
    if np.any(lags < d.eta_ign) or np.any(lags > d.r):
        raise InvariantViolation(f"discrete lag outside [{d.eta_ign}, {d.r}]: {lags}")
    return lags, d.jumps(phi)


def discrete_integrate(chi: Integrand, gm: GeneratingMeasure, phi: HistorySegment):
    """sum_k chi(-eta_k(phi)) h_k(phi)."""
    lags, jumps = discrete_atoms(gm, phi)
    return _weighted_sum(jumps, chi(-lags))


def ac_integrate(chi: Integrand, gm: GeneratingMeasure, phi: HistorySegment):
    """Tabulated quadrature of chi against the absolutely continuous part."""
    if gm.ac is None:
        return _weighted_sum(np.zeros(0), chi(np.zeros(0)))
    return gm.ac.factor(phi) * _weighted_sum(gm.ac.node_weights, chi(gm.ac.nodes))


def singular_integrate(chi: Integrand, gm: GeneratingMeasure, phi: HistorySegment):
    """Cantor-measure integral via equal-mass atoms at depth-m interval midpoints.

    For continuous chi the error is at most the modulus of continuity of chi
    at r * 3**-m, times gamma(phi).
    """
    sp = gm.singular
    if sp is None:
        return _weighted_sum(np.zeros(0), chi(np.zeros(0)))
    w = np.full(sp.nodes.size, sp.amplitude(phi) * 0.5**sp.depth)
    return _weighted_sum(w, chi(sp.nodes))


def stieltjes_integrate(chi: Integrand, gm: GeneratingMeasure, phi: HistorySegment):
    """int_{-r}^0 chi(theta) dg(theta, phi), summed over the three parts."""
    return (
        discrete_integrate(chi, gm, phi)
        + ac_integrate(chi, gm, phi)
        + singular_integrate(chi, gm, phi)
    )


def total_variation(gm: GeneratingMeasure, phi: HistorySegment, check: bool = True) -> float:
    _, jumps = discrete_atoms(gm, phi)
    total = float(np.abs(jumps).sum())
    if gm.ac is not None:
        total += gm.ac.base_mass * abs(gm.ac.factor(phi))
    if gm.singular is not None:
        total += gm.singular.amplitude(phi)
    if check and total > gm.M_Vg * (1 + _BOUND_RTOL):
        raise InvariantViolation(f"total variation {total} exceeds M_Vg = {gm.M_Vg}")
    return total


def continuous_variation(gm: GeneratingMeasure, phi: HistorySegment) -> float:
    total = 0.0
    if gm.ac is not None:
        total += gm.ac.base_mass * abs(gm.ac.factor(phi))
    if gm.singular is not None:
        total += gm.singular.amplitude(phi)
    return total


def variation_distance_c(
    gm: GeneratingMeasure, phi: HistorySegment, psi: HistorySegment, check: bool = True
) -> float:
    """Variation of g_c(., phi) - g_c(., psi).

    Both parts of g_c are a fixed shape times a state factor, so the
    variation of the difference is the difference of the factors times the
    shape's mass.
    """
    total = 0.0
    if gm.ac is not None:
        total += gm.ac.base_mass * abs(gm.ac.factor(phi) - gm.ac.factor(psi))
    if gm.singular is not None:
        total += abs(gm.singular.amplitude(phi) - gm.singular.amplitude(psi))
    if check:
        dist = float(np.max(np.linalg.norm(phi.frames - psi.frames, axis=1)))
        if total > gm.Lvg_c * dist * (1 + _BOUND_RTOL) + 1e-300:
            raise InvariantViolation(
                f"variation distance {total} exceeds L_Vgc * ||phi - psi||_C = {gm.Lvg_c * dist}"
            )
    return total


def g_discrete(theta, gm: GeneratingMeasure, phi: HistorySegment):
    """g_d(theta, phi) = sum of h_k over atoms strictly left of theta."""
    theta = np.asarray(theta, dtype=float)
    lags, jumps = discrete_atoms(gm, phi)
    return np.sum(jumps * (theta[..., None] > -lags), axis=-1)


def g_ac(theta, gm: GeneratingMeasure, phi: HistorySegment):
    theta = np.asarray(theta, dtype=float)
    if gm.ac is None:
        return np.zeros_like(theta)
    return gm.ac.factor(phi) * gm.ac.cumulative(theta)


def g_singular(theta, gm: GeneratingMeasure, phi: HistorySegment):
    theta = np.asarray(theta, dtype=float)
    if gm.singular is None:
        return np.zeros_like(theta)
    return gm.singular.amplitude(phi) * cantor((theta + gm.r) / gm.r)


def g_value(theta, gm: GeneratingMeasure, phi: HistorySegment):
    return g_discrete(theta, gm, phi) + g_ac(theta, gm, phi) + g_singular(theta, gm, phi)


def hat_matrix(thetas: np.ndarray, r: float, n_steps: int) -> np.ndarray:
    """(m, n_steps) piecewise-linear hat functions of the segment grid at ``thetas``."""
    h = r / (n_steps - 1)
    pos = (np.asarray(thetas, dtype=float) + r) / h
    idx = np.clip(np.floor(pos).astype(int), 0, n_steps - 2)
    frac = pos - idx
    out = np.zeros((pos.size, n_steps))
    rows = np.arange(pos.size)
    out[rows, idx] = 1.0 - frac
    out[rows, idx + 1] += frac
    return out


@lru_cache(maxsize=64)
def _ac_hat_weights(ac: AbsContPart, n_steps: int) -> np.ndarray:
    w = ac.node_weights @ hat_matrix(ac.nodes, ac.r, n_steps)
    w.flags.writeable = False
    return w


@lru_cache(maxsize=64)
def _singular_hat_weights(sp: SingularPart, n_steps: int) -> np.ndarray:
    w = 0.5**sp.depth * hat_matrix(sp.nodes, sp.r, n_steps).sum(axis=0)
    w.flags.writeable = False
    return w


def continuous_node_weights(gm: GeneratingMeasure, phi: HistorySegment) -> np.ndarray:
    """Weights W_i with int chi dg_c(., phi) = sum_i W_i chi(theta_i).

    Exact for integrands that are piecewise linear on the segment grid.
    """
    w = np.zeros(phi.n_steps)
    if gm.ac is not None:
        w = w + gm.ac.factor(phi) * _ac_hat_weights(gm.ac, phi.n_steps)
    if gm.singular is not None:
        w = w + gm.singular.amplitude(phi) * _singular_hat_weights(gm.singular, phi.n_steps)
    return w


def default_measure(
    r: float,
    eta_ign: float,
    n_atoms: int = 16,
    c_decay: float = 0.5,
    lag_slope: float = 1.0,
    state_jumps: bool = True,
    ac_mass: float = 0.5,
    beta: float = 0.5,
    ac_shape: str = "uniform",
    ac_rate: float = 1.0,
    n_tab: int = 2001,
    gamma0: float = 0.2,
    gamma1: float = 0.2,
    cantor_depth: int = 12,
    max_variation: Optional[float] = None,
) -> GeneratingMeasure:
    """The three-part built-in family; zero masses drop the corresponding part."""
    discrete = (
        DiscretePart(n_atoms, eta_ign, r, c_decay, lag_slope, state_jumps) if n_atoms > 0 else None
    )
    ac = AbsContPart(ac_mass, r, beta, ac_shape, ac_rate, n_tab) if ac_mass > 0 else None
    singular = (
        SingularPart(gamma0, r, gamma1, cantor_depth) if (gamma0 > 0 or gamma1 > 0) else None
    )
    return GeneratingMeasure(r, discrete, ac, singular, max_variation)
