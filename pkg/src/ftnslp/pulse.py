"""Root-raised-cosine pulse machinery.

Builds the unit-energy RRC shaping pulse, its raised-cosine autocorrelation,
the banded convolution matrices that map a symbol block onto the T-spaced
sample grid, and the Toeplitz Gram matrices used by the energy constraint
and the matched-filter noise model.

Conventions: the pulse has unit energy, so the autocorrelation at lag zero
is exactly 1 and all Gram matrices have unit diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import toeplitz

from .util import floor_spectrum

__all__ = [
    "PulseSpec",
    "PulseTables",
    "rrc_shape",
    "autocorr",
    "build_omega",
    "build_grams",
    "build_pulse_tables",
]


@dataclass(frozen=True)
class PulseSpec:
    """Shaping-pulse parameters: roll-off, nominal period, compression, half-width."""

    rolloff: float
    nominal_period: float = 1e-3
    compression: float = 1.0
    half_width: int = 3

    def __post_init__(self):
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must be in (0, 1], got {self.rolloff}")
        if not 0.0 < self.compression <= 1.0:
            raise ValueError(f"compression must be in (0, 1], got {self.compression}")
        if self.nominal_period <= 0.0:
            raise ValueError("nominal_period must be positive")
        if self.half_width < 1:
            raise ValueError("half_width must be >= 1")

    @property
    def effective_period(self) -> float:
        return self.compression * self.nominal_period


def _quadratic_patch(formula, u, value, u_s, guard):
    """Replace formula(u) near a removable singularity u_s.

    Quadratic interpolation through (u_s - g, f), (u_s, limit), (u_s + g, f);
    the two outer nodes sit outside the cancellation zone so the closed form
    is accurate there.
    """
    fm = formula(np.array([u_s - guard]))[0]
    fp = formula(np.array([u_s + guard]))[0]
    d = (u - u_s) / guard
    return value + 0.5 * (fp - fm) * d + 0.5 * (fp + fm - 2.0 * value) * d * d


def _patched(formula, u, singularities, guard):
    """Evaluate formula(u) with each (point, limit) pair patched in a guard band."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = formula(u)
    for u_s, value in singularities:
        mask = np.abs(u - u_s) < guard
        if np.any(mask):
            out[mask] = _quadratic_patch(formula, u[mask], value, u_s, guard)
    return out


def _guard_u(spec: PulseSpec) -> float:
    # 1e-7 seconds per the scale of the default 1 ms period; capped relative
    # to T0 so very short periods cannot swallow the pulse support.
    return min(1e-7, 1e-4 * spec.nominal_period) / spec.nominal_period


def rrc_shape(t, spec: PulseSpec):
    """Unit-energy root-raised-cosine pulse sampled at time t (seconds)."""
    a = spec.rolloff
    t0 = spec.nominal_period
    u = np.atleast_1d(np.asarray(t, dtype=float) / t0)

    def formula(uu):
        num = np.sin(np.pi * uu * (1.0 - a)) + 4.0 * a * uu * np.cos(np.pi * uu * (1.0 + a))
        den = np.pi * uu * (1.0 - (4.0 * a * uu) ** 2)
        return num / den

    lim0 = 1.0 - a + 4.0 * a / np.pi
    us = 1.0 / (4.0 * a)
    lims = (a / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * a))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * a))
    )
    out = _patched(formula, u, [(0.0, lim0), (us, lims), (-us, lims)], _guard_u(spec))
    out = out / np.sqrt(t0)
    return out if np.ndim(t) else float(out[0])


def autocorr(t, spec: PulseSpec):
    """Raised-cosine autocorrelation of the unit-energy RRC pulse; autocorr(0) = 1."""
    a = spec.rolloff
    t0 = spec.nominal_period
    u = np.atleast_1d(np.asarray(t, dtype=float) / t0)

    def formula(uu):
        return np.sinc(uu) * np.cos(np.pi * a * uu) / (1.0 - (2.0 * a * uu) ** 2)

    us = 1.0 / (2.0 * a)
    lims = (np.pi / 4.0) * np.sinc(us)
    out = _patched(formula, u, [(us, lims), (-us, lims)], _guard_u(spec))
    return out if np.ndim(t) else float(out[0])


def build_omega(samples, L: int) -> np.ndarray:
    """Banded (L + 2Q) x L matrix whose column j holds `samples` in rows j..j+2Q."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    if L < 1:
        raise ValueError("L must be >= 1")
    n = samples.size
    out = np.zeros((L + n - 1, L))
    for j in range(L):
        out[j : j + n, j] = samples
    return out


def build_grams(spec: PulseSpec, L: int, L1: int):
    """Symmetric Toeplitz Gram matrices with entry (i, j) = autocorr((i - j) T)."""
    lags = autocorr(np.arange(max(L, L1)) * spec.effective_period, spec)
    return toeplitz(lags[:L]), toeplitz(lags[:L1])


def _tail_energy(spec: PulseSpec) -> float:
    """Fraction of pulse energy outside the truncation support [-QT, QT]."""
    qt = spec.half_width * spec.effective_period
    inside, _ = quad(lambda t: rrc_shape(t, spec) ** 2, -qt, qt, limit=200)
    return max(0.0, 1.0 - inside)


@dataclass(frozen=True)
class PulseTables:
    """All pulse-derived arrays for one (spec, L, L1) instance.

    `omega_shape`/`omega_auto` are the banded convolution matrices for the
    shaping pulse and its autocorrelation; `gram`/`gram_ext` are the L x L
    and L1 x L1 Toeplitz Gram matrices. `tail_energy` reports the pulse
    energy silently dropped by truncating the support to [-QT, QT].
    """

    spec: PulseSpec
    phi_shape: np.ndarray
    phi_auto: np.ndarray
    omega_shape: np.ndarray
    omega_auto: np.ndarray
    gram: np.ndarray
    gram_ext: np.ndarray
    tail_energy: float = field(default=0.0)

    def floored_gram(self) -> np.ndarray:
        """gram with its spectrum clamped at the documented eigenvalue floor."""
        w, v = np.linalg.eigh(self.gram)
        return (v * floor_spectrum(w)) @ v.T


def build_pulse_tables(spec: PulseSpec, L: int, L1: int) -> PulseTables:
    q = spec.half_width
    t = spec.effective_period
    k = np.arange(-q, q + 1)
    phi_shape = rrc_shape(k * t, spec)
    phi_auto_band = autocorr(k * t, spec)
    gram, gram_ext = build_grams(spec, L, L1)
    return PulseTables(
        spec=spec,
        phi_shape=phi_shape,
        phi_auto=autocorr(np.arange(L1) * t, spec),
        omega_shape=build_omega(phi_shape, L),
        omega_auto=build_omega(phi_auto_band, L),
        gram=gram,
        gram_ext=gram_ext,
        tail_energy=_tail_energy(spec),
    )
