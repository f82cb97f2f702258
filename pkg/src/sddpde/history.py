"""History segments: u_t on a uniform grid over [-r, 0]."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DomainError
from .spatial import DomainConfig, SpectralField

# a lag within this many grid spacings of a node is treated as the node itself
SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class HistorySegment:
    """Frames of a trajectory at theta_i = -r + i h, i = 0..n_steps-1.

    ``frames`` is an (n_steps, N) coefficient array; row 0 is theta = -r and
    the last row is theta = 0.
    """

    r: float
    frames: np.ndarray
    domain: DomainConfig

    def __post_init__(self):
        fr = np.array(self.frames, dtype=float)
        if fr.ndim != 2 or fr.shape[1] != self.domain.n_modes:
            raise DomainError(f"frames must be (n_steps, {self.domain.n_modes}), got {fr.shape}")
        if fr.shape[0] < 2:
            raise DomainError("a history segment needs at least two frames")
        if not self.r > 0:
            raise DomainError(f"r must be positive, got {self.r}")
        fr.flags.writeable = False
        object.__setattr__(self, "frames", fr)

    @property
    def n_steps(self) -> int:
        return self.frames.shape[0]

    @property
    def h(self) -> float:
        return self.r / (self.n_steps - 1)

    @cached_property
    def thetas(self) -> np.ndarray:
        return np.linspace(-self.r, 0.0, self.n_steps)

    @cached_property
    def frame_norms(self) -> np.ndarray:
        return np.linalg.norm(self.frames, axis=1)

    def locate(self, theta):
        """Bracketing node index and interpolation fraction for each theta.

        Thetas within ``SNAP`` grid spacings of a node get fraction exactly 0.
        """
        theta = np.asarray(theta, dtype=float)
        tol = 1e-12 * self.r
        if np.any(theta < -self.r - tol) or np.any(theta > tol):
            raise DomainError(f"lag outside [-{self.r}, 0]: {theta}")
        pos = (np.clip(theta, -self.r, 0.0) + self.r) / self.h
        nearest = np.rint(pos)
        pos = np.where(np.abs(pos - nearest) < SNAP, nearest, pos)
        idx = np.minimum(np.floor(pos).astype(int), self.n_steps - 2)
        return idx, pos - idx

    def values_at(self, theta) -> np.ndarray:
        """Coefficient arrays at the given lags (piecewise-linear in time)."""
        idx, frac = self.locate(theta)
        lo = self.frames[idx]
        hi = self.frames[idx + 1]
        frac = np.asarray(frac)[..., None]
        return np.where(frac == 0.0, lo, (1.0 - frac) * lo + frac * hi)

    @classmethod
    def from_function(
        cls, fn: Callable[[np.ndarray], np.ndarray], r: float, n_steps: int, domain: DomainConfig
    ) -> "HistorySegment":
        """Sample ``fn(thetas) -> (n_steps, N)`` on the grid."""
        thetas = np.linspace(-r, 0.0, n_steps)
        return cls(r, fn(thetas), domain)

    @classmethod
    def constant(cls, v: SpectralField, r: float, n_steps: int) -> "HistorySegment":
        return cls(r, np.tile(v.coeffs, (n_steps, 1)), v.domain)


def eval_at(seg: HistorySegment, theta: float) -> SpectralField:
    """u_t(theta) by linear interpolation between the bracketing frames."""
    return SpectralField(seg.values_at(float(theta)), seg.domain)


def segment_norm(seg: HistorySegment) -> float:
    """||u_t||_C realised as the max frame norm."""
    return float(seg.frame_norms.max())


def shift_append(seg: HistorySegment, new_frame) -> HistorySegment:
    """Advance the segment by one grid spacing, with ``new_frame`` at theta = 0."""
    coeffs = new_frame.coeffs if isinstance(new_frame, SpectralField) else np.asarray(new_frame)
    frames = np.empty_like(seg.frames)
    frames[:-1] = seg.frames[1:]
    frames[-1] = coeffs
    return HistorySegment(seg.r, frames, seg.domain)


def extend_flat(seg: HistorySegment, s: float, eta_ign: float) -> HistorySegment:
    """The segment at time s of the path that holds seg(0) constant after time 0.

    Valid for 0 <= s < eta_ign.
    """
    if not 0.0 <= s < eta_ign:
        raise DomainError(f"extension time must lie in [0, {eta_ign}), got {s}")
    if s == 0.0:
        return seg
    shifted = seg.thetas + s
    past = shifted <= 0.0
    frames = np.empty_like(seg.frames)
    frames[past] = seg.values_at(shifted[past])
    frames[~past] = seg.frames[-1]
    return HistorySegment(seg.r, frames, seg.domain)
