"""Domain types, physical constants, and the c=1 normalization conventions.

The whole package computes in normalized units: speed of sound c = 1,
positions in meters, time in "normalized seconds" (t_phys = t / c_phys).
Physical units only appear at the CLI / file boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhysicalConstants",
    "Normalization",
    "DomainSpec",
    "GaussianSource",
    "RationalAdmittance",
    "Neumann",
    "FrequencyIndependent",
    "FrequencyDependent",
    "BoundarySpec",
    "analytic_free_field",
    "ic_pressure",
    "ic_velocity",
    "to_physical_time",
    "to_normalized_time",
    "to_normalized_frequency",
    "to_physical_frequency",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """Air properties used to map between normalized and physical units."""

    c_phys: float = 343.0  # speed of sound, m/s
    rho0: float = 1.2  # air density, kg/m^3

    def __post_init__(self):
        if self.c_phys <= 0:
            raise ValueError(f"c_phys must be positive, got {self.c_phys}")
        if self.rho0 <= 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")


@dataclass(frozen=True)
class Normalization:
    """Normalized unit system: c is fixed to 1, time scales by c_phys."""

    c_phys: float = 343.0
    c: float = 1.0

    def __post_init__(self):
        if self.c != 1.0:
            raise ValueError("normalized speed of sound must be exactly 1.0")
        if self.c_phys <= 0:
            raise ValueError(f"c_phys must be positive, got {self.c_phys}")


@dataclass(frozen=True)
class DomainSpec:
    """1D spatial interval and normalized time horizon."""

    x_min: float = -1.0
    x_max: float = 1.0
    t_max: float = 2.0

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min


@dataclass(frozen=True)
class GaussianSource:
    """Gaussian pressure impulse: position x0 and pulse width sigma0 (meters)."""

    x0: float = 0.0
    sigma0: float = 0.2

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")


def _as_1d(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class RationalAdmittance:
    """Pole-residue admittance model.

    Y(omega) = y_inf + sum_k a[k] / (lam[k] - i*omega)
             + sum_k [ (b[k] + i*c[k]) / (alpha[k] + i*beta[k] - i*omega)
                     + (b[k] - i*c[k]) / (alpha[k] - i*beta[k] - i*omega) ]

    All pole parameters must be strictly positive (stable poles).  Arrays
    `a`/`lam` hold the Q real poles, `b`/`c`/`alpha`/`beta` the S complex
    conjugate pole pairs.
    """

    y_inf: float = 0.0
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    c: np.ndarray = field(default_factory=lambda: np.zeros(0))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for name in ("a", "lam", "b", "c", "alpha", "beta"):
            object.__setattr__(self, name, _as_1d(getattr(self, name)))
        if self.a.shape != self.lam.shape:
            raise ValueError("real-pole residue/pole arrays must have equal length")
        if not (self.b.shape == self.c.shape == self.alpha.shape == self.beta.shape):
            raise ValueError("complex-pair arrays must all have equal length")
        if np.any(self.lam <= 0):
            raise ValueError(f"real poles must be stable (lam > 0), got {self.lam}")
        if np.any(self.alpha <= 0):
            raise ValueError(f"complex pairs must be stable (alpha > 0), got {self.alpha}")

    @property
    def q(self) -> int:
        """Number of real poles."""
        return self.a.size

    @property
    def s(self) -> int:
        """Number of complex conjugate pole pairs."""
        return self.b.size

    @property
    def n_accumulators(self) -> int:
        """Q + 2S: one accumulator per real pole, two per complex pair."""
        return self.q + 2 * self.s


@dataclass(frozen=True)
class Neumann:
    """Perfectly rigid wall; the xi -> infinity limit of an impedance wall."""


@dataclass(frozen=True)
class FrequencyIndependent:
    """Wall with constant specific impedance xi = Z_s / (rho0 c)."""

    xi: float

    def __post_init__(self):
        if self.xi <= 0:
            raise ValueError(f"specific impedance must be positive, got {self.xi}")


@dataclass(frozen=True)
class FrequencyDependent:
    """Wall described by a fitted pole-residue admittance."""

    admittance: RationalAdmittance


BoundarySpec = Neumann | FrequencyIndependent | FrequencyDependent


def analytic_free_field(x, t, src: GaussianSource, c: float = 1.0, x0=None):
    """Free-field pressure: two half-amplitude Gaussians leaving the source.

    p(x, t) = 1/2 exp[-((x - x0 - c t)/sigma0)^2]
            + 1/2 exp[-((x - x0 + c t)/sigma0)^2]

    `x0` overrides src.x0, e.g. with one source position per point.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if x0 is None:
        x0 = src.x0
    u_right = (x - x0 - c * t) / src.sigma0
    u_left = (x - x0 + c * t) / src.sigma0
    return 0.5 * np.exp(-(u_right**2)) + 0.5 * np.exp(-(u_left**2))


def ic_pressure(x, src: GaussianSource, x0=None):
    """Initial pressure: unit-amplitude Gaussian centered at the source."""
    x = np.asarray(x, dtype=float)
    if x0 is None:
        x0 = src.x0
    return np.exp(-(((x - x0) / src.sigma0) ** 2))


def ic_velocity(x, src: GaussianSource):
    """Initial pressure rate, identically zero."""
    return np.zeros_like(np.asarray(x, dtype=float))


def to_physical_time(t_norm, norm: Normalization):
    """Normalized time -> seconds: t_phys = t / c_phys."""
    return np.asarray(t_norm, dtype=float) / norm.c_phys


def to_normalized_time(t_phys, norm: Normalization):
    """Seconds -> normalized time: t = t_phys * c_phys."""
    return np.asarray(t_phys, dtype=float) * norm.c_phys


def to_normalized_frequency(f_phys, norm: Normalization):
    """Physical Hz -> normalized frequency: f = f_phys / c_phys."""
    return np.asarray(f_phys, dtype=float) / norm.c_phys


def to_physical_frequency(f_norm, norm: Normalization):
    """Normalized frequency -> physical Hz."""
    return np.asarray(f_norm, dtype=float) * norm.c_phys
