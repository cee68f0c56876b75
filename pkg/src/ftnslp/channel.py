"""Channel generation and the effective linear communication map.

Draws random multi-tap downlink channels, builds the receive-window matrix,
the noise-whitening eigendecomposition of the windowed matched-filter noise
covariance, and the dense effective matrix mapping vec(S^T) to the stacked
noiseless received symbols of all users.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .pulse import PulseTables
from .util import floor_spectrum

__all__ = [
    "Dimensions",
    "CommChannel",
    "SensingPrior",
    "EffectiveChannel",
    "sample_comm_channel",
    "build_window",
    "whiten",
    "selection_matrices",
    "assemble_effective",
    "matched_noise_factor",
    "sample_matched_noise",
]


@dataclass(frozen=True)
class Dimensions:
    """Problem sizes; l0 = L + 2Q and l1 = L + 2Q + P - 1 are derived."""

    n_tx: int
    n_rx: int
    n_users: int
    block_len: int
    taps: int
    half_width: int

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_users", "block_len", "taps", "half_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_users >= self.n_tx:
            raise ValueError(
                f"n_users must be < n_tx (got K={self.n_users}, N_t={self.n_tx})"
            )

    @property
    def l0(self) -> int:
        return self.block_len + 2 * self.half_width

    @property
    def l1(self) -> int:
        return self.l0 + self.taps - 1


@dataclass(frozen=True)
class CommChannel:
    """Sampled downlink impulse response, tap-major: columns (p-1)N_t..pN_t-1 hold tap p."""

    taps: np.ndarray  # complex, K x (N_t * P)
    noise_power: float

    def tap(self, p: int, n_tx: int) -> np.ndarray:
        return self.taps[:, p * n_tx : (p + 1) * n_tx]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_users": self.taps.shape[0],
                "columns": self.taps.shape[1],
                "noise_power": self.noise_power,
                "re": self.taps.real.tolist(),
                "im": self.taps.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CommChannel":
        rec = json.loads(text)
        taps = np.asarray(rec["re"], dtype=float) + 1j * np.asarray(rec["im"], dtype=float)
        if taps.shape != (rec["n_users"], rec["columns"]):
            raise ValueError("channel record shape mismatch")
        return cls(taps=taps, noise_power=float(rec["noise_power"]))


@dataclass(frozen=True)
class SensingPrior:
    """Gaussian prior on the vectorized target response matrix plus radar noise power."""

    trm_power: float
    noise_power: float
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.trm_power <= 0 or self.noise_power <= 0:
            raise ValueError("powers must be positive")


@dataclass(frozen=True)
class EffectiveChannel:
    """Window, whitening pair, tap-selection matrices and the dense map H_eff.

    `effective @ vec(S^T)` equals the whitened noiseless received symbol
    stack; the additive noise on entry (k-1)L + i has variance
    noise_power * noise_eigs[i].
    """

    window: np.ndarray  # L1 x L
    whitener: np.ndarray  # L x L, real orthogonal
    noise_eigs: np.ndarray  # length L, descending
    effective: np.ndarray  # complex, (K L) x (N_t L)
    selection: list  # P matrices, L1 x L0


def sample_comm_channel(rng: np.random.Generator, dims: Dimensions, sigma_c2: float) -> CommChannel:
    """I.i.d. circular complex Gaussian taps with per-entry variance sigma_c2."""
    shape = (dims.n_users, dims.n_tx * dims.taps)
    scale = np.sqrt(sigma_c2 / 2.0)
    taps = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return CommChannel(taps=taps, noise_power=sigma_c2)


def build_window(dims: Dimensions, mode: str = "truncate") -> np.ndarray:
    """Receive-window matrix G (L1 x L): `truncate` keeps L samples, `fold` adds the tail back."""
    L, q, p, l1 = dims.block_len, dims.half_width, dims.taps, dims.l1
    if mode == "truncate":
        g = np.zeros((l1, L))
        g[p + q : p + q + L, :] = np.eye(L)
        return g
    if mode == "fold":
        if l1 > 2 * L:
            raise ValueError(f"fold window needs L1 <= 2L (got L1={l1}, L={L})")
        head = 2 * L - l1
        tail = l1 - L
        g = np.zeros((l1, L))
        g[:head, :head] = np.eye(head)
        g[head : head + tail, head:] = np.eye(tail)
        g[head + tail :, head:] = np.eye(tail)
        return g
    raise ValueError(f"unknown window mode: {mode!r}")


def whiten(window: np.ndarray, gram_ext: np.ndarray):
    """Eigendecomposition of G^T Phi1 G with floored eigenvalues, descending order.

    Eigenvector signs are fixed (first non-negligible component positive) so
    the eigenvalue-index bookkeeping used by the QoS margins and throughput
    is reproducible.
    """
    m = window.T @ gram_ext @ window
    if not np.allclose(m, m.T, atol=1e-10 * max(1.0, np.abs(m).max())):
        raise ValueError("windowed Gram matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    w = floor_spectrum(w)
    for j in range(v.shape[1]):
        nz = np.flatnonzero(np.abs(v[:, j]) > 1e-12)
        if nz.size and v[nz[0], j] < 0:
            v[:, j] = -v[:, j]
    return v, w


def selection_matrices(dims: Dimensions) -> list:
    """Tap-selection matrices E_p (L1 x L0): identity block shifted down by p rows."""
    mats = []
    for p in range(dims.taps):
        e = np.zeros((dims.l1, dims.l0))
        e[p : p + dims.l0, :] = np.eye(dims.l0)
        mats.append(e)
    return mats


def assemble_effective(
    comm: CommChannel,
    pulse: PulseTables,
    window: np.ndarray,
    whitener: np.ndarray,
    dims: Dimensions,
) -> EffectiveChannel:
    """Dense effective matrix: sum over taps of kron(H_p, (G U)^T E_p Omega)."""
    if comm.taps.shape != (dims.n_users, dims.n_tx * dims.taps):
        raise ValueError("channel tap matrix does not match dims")
    sel = selection_matrices(dims)
    wt = (window @ whitener).T  # L x L1
    k, n, L = dims.n_users, dims.n_tx, dims.block_len
    eff = np.zeros((k * L, n * L), dtype=complex)
    for p in range(dims.taps):
        eff += np.kron(comm.tap(p, n), wt @ sel[p] @ pulse.omega_auto)
    _, eigs = whiten(window, pulse.gram_ext)
    return EffectiveChannel(
        window=window,
        whitener=whitener,
        noise_eigs=eigs,
        effective=eff,
        selection=sel,
    )


def matched_noise_factor(gram_ext: np.ndarray) -> np.ndarray:
    """Symmetric square root of Phi1 (floored spectrum) for correlated noise draws."""
    w, v = np.linalg.eigh(0.5 * (gram_ext + gram_ext.T))
    return (v * np.sqrt(floor_spectrum(w))) @ v.T


def sample_matched_noise(
    rng: np.random.Generator, n_trials: int, gram_ext: np.ndarray, sigma_c2: float
) -> np.ndarray:
    """Rows are matched-filter noise vectors with covariance sigma_c2 * Phi1."""
    root = matched_noise_factor(gram_ext)
    l1 = gram_ext.shape[0]
    w = (rng.standard_normal((n_trials, l1)) + 1j * rng.standard_normal((n_trials, l1))) * np.sqrt(
        sigma_c2 / 2.0
    )
    return w @ root.T
