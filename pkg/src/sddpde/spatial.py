"""Spatial setting: the Dirichlet Laplacian on (0, L) in an orthonormal sine basis.

Fields are stored as coefficients against ``e_j(x) = sqrt(2/L) sin(j pi x / L)``,
j = 1..N, with a physical-grid view on ``n_grid`` equispaced points including
both endpoints. Grid integrals use the trapezoidal rule, under which the sine
modes are discretely orthonormal, so coefficient -> grid -> coefficient is the
identity and the grid norm of a band-limited field equals its Parseval norm.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DomainError

PHI1_SWITCH = 1e-6


@dataclass(frozen=True)
class DomainConfig:
    length: float = np.pi
    n_modes: int = 16
    n_grid: int = 64

    def __post_init__(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise DomainError(f"length must be positive, got {self.length}")
        if self.n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {self.n_modes}")
        # n_modes + 2 keeps the top mode away from the grid's Nyquist index
        if self.n_grid < max(2 * self.n_modes, self.n_modes + 2):
            raise DomainError(
                f"n_grid must be >= 2*n_modes (and n_modes+2), got {self.n_grid}"
            )

    @property
    def measure(self) -> float:
        """|Omega|, the length of the interval."""
        return float(self.length)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_grid)

    @cached_property
    def weights(self) -> np.ndarray:
        h = self.length / (self.n_grid - 1)
        w = np.full(self.n_grid, h)
        w[0] = w[-1] = 0.5 * h
        return w

    @cached_property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1)

    @cached_property
    def basis(self) -> np.ndarray:
        """(N, n_grid) table of e_j(x_i)."""
        arg = np.outer(self.modes, self.x) * (np.pi / self.length)
        return np.sqrt(2.0 / self.length) * np.sin(arg)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs) @ self.basis

    def from_grid(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values) * self.weights) @ self.basis.T


@dataclass(frozen=True, eq=False)
class SpectralField:
    """An element of L2(Omega) truncated to the first N sine modes."""

    coeffs: np.ndarray
    domain: DomainConfig

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.domain.n_modes,):
            raise DomainError(
                f"expected {self.domain.n_modes} coefficients, got shape {c.shape}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @cached_property
    def values(self) -> np.ndarray:
        return self.domain.to_grid(self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def from_grid(cls, values, domain: DomainConfig) -> "SpectralField":
        return cls(domain.from_grid(values), domain)

    @classmethod
    def from_function(cls, fn: Callable, domain: DomainConfig) -> "SpectralField":
        return cls.from_grid(fn(domain.x), domain)

    @classmethod
    def zeros(cls, domain: DomainConfig) -> "SpectralField":
        return cls(np.zeros(domain.n_modes), domain)

    @classmethod
    def mode(cls, j: int, domain: DomainConfig, amplitude: float = 1.0) -> "SpectralField":
        c = np.zeros(domain.n_modes)
        c[j - 1] = amplitude
        return cls(c, domain)


@dataclass(frozen=True)
class SpatialOperator:
    """A = -d^2/dx^2 with Dirichlet conditions plus the damping constant d."""

    domain: DomainConfig
    damping: float = 0.0

    def __post_init__(self):
        if not self.damping >= 0:
            raise DomainError(f"damping must be >= 0, got {self.damping}")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return (self.domain.modes * np.pi / self.domain.length) ** 2

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])


def semigroup_apply(t: float, v: SpectralField, op: SpatialOperator) -> SpectralField:
    """Apply exp(-A t) to ``v``; the damping term is not included."""
    if t < 0:
        raise DomainError(f"semigroup time must be >= 0, got {t}")
    return SpectralField(np.exp(-op.eigenvalues * t) * v.coeffs, v.domain)


def phi1(z):
    """(1 - exp(-z)) / z with its series below ``PHI1_SWITCH``.

    Accepts scalars or arrays of nonnegative values.
    """
    z = np.asarray(z, dtype=float)
    small = z < PHI1_SWITCH
    safe = np.where(small, 1.0, z)
    out = np.where(small, 1.0 - z / 2.0 + z * z / 6.0, -np.expm1(-safe) / safe)
    return out.item() if out.ndim == 0 else out


def fractional_norm(v: SpectralField, delta: float, op: SpatialOperator) -> float:
    """||A^delta v|| for 0 <= delta < 1/2."""
    if not 0.0 <= delta < 0.5:
        raise DomainError(f"delta must lie in [0, 1/2), got {delta}")
    return float(np.sqrt(np.sum(op.eigenvalues ** (2 * delta) * v.coeffs**2)))


@dataclass(frozen=True, eq=False)
class Kernel:
    """The bounded kernel f on (-L, L) with its bound M_f.

    ``matrix[i, k] = f(x_i - y_k) * w_k`` tabulates the convolution quadrature.
    """

    func: Callable[[np.ndarray], np.ndarray]
    bound: float
    domain: DomainConfig
    name: str = "custom"

    def __post_init__(self):
        if not self.bound >= 0:
            raise DomainError(f"kernel bound must be >= 0, got {self.bound}")
        table = self.samples
        if np.any(np.abs(table) > self.bound * (1 + 1e-12) + 1e-300):
            raise DomainError(
                f"kernel '{self.name}' exceeds its bound {self.bound} "
                f"(max |f| = {np.abs(table).max()})"
            )

    @cached_property
    def samples(self) -> np.ndarray:
        x = self.domain.x
        return np.asarray(self.func(x[:, None] - x[None, :]), dtype=float) * np.ones(
            (x.size, x.size)
        )

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.samples * self.domain.weights[None, :]

    def convolve_grid(self, w: np.ndarray) -> np.ndarray:
        """Grid values of x -> int w(y) f(x - y) dy; ``w`` may be batched (m, n_grid)."""
        return np.asarray(w) @ self.matrix.T

    def convolve_coeffs(self, w: np.ndarray) -> np.ndarray:
        return self.domain.from_grid(self.convolve_grid(w))


def constant_kernel(domain: DomainConfig, bound: float = 1.0) -> Kernel:
    return Kernel(lambda z: np.full_like(z, bound, dtype=float), bound, domain, "constant")


def gaussian_kernel(domain: DomainConfig, bound: float = 1.0, width: float = 0.5) -> Kernel:
    if not width > 0:
        raise DomainError(f"kernel width must be positive, got {width}")
    return Kernel(
        lambda z: bound * np.exp(-0.5 * (z / width) ** 2), bound, domain, "gaussian-bump"
    )


def kernel_convolve(w_values: np.ndarray, f: Kernel) -> SpectralField:
    """Project x -> int_Omega w(y) f(x - y) dy onto the sine modes.

    ``w_values`` are grid values with the birth function already applied.
    """
    return SpectralField(f.convolve_coeffs(w_values), f.domain)
