"""Constructive-interference inequality system and transmit-energy forms.

The QoS requirement per data symbol is a pair of linear inequalities on the
real-stacked precoded block: the noiseless received symbol, rotated by the
conjugate data symbol, must sit inside the constellation decision cone with
a margin of sqrt(SNR target) times the per-symbol noise deviation. This
module also carries the complex-to-real stacking used by all solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .channel import Dimensions, EffectiveChannel
from .pulse import PulseTables
from .util import db_to_linear

__all__ = [
    "QPSK_POINTS",
    "SymbolBlock",
    "CISystem",
    "EnergyForm",
    "random_qpsk",
    "stack_complex",
    "unstack_real",
    "realify_quadratic",
    "realify_linear",
    "build_ci_system",
    "ci_margins",
    "build_energy_form",
]

QPSK_POINTS = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)


@dataclass(frozen=True)
class SymbolBlock:
    """Unit-modulus data symbols (K x L) plus the constellation half-angle."""

    data: np.ndarray
    theta: float = np.pi / 4.0

    def __post_init__(self):
        if not np.allclose(np.abs(self.data), 1.0, atol=1e-9):
            raise ValueError("symbol entries must have unit modulus")


@dataclass(frozen=True)
class CISystem:
    """Real inequality system psi @ s_hat <= gamma plus the noise deviations."""

    psi: np.ndarray  # (2 K L) x (2 N_t L)
    gamma: np.ndarray  # 2 K L, all entries <= 0
    sigma_vec: np.ndarray  # K L noise standard deviations, user-major
    qos: np.ndarray  # K linear SNR targets


@dataclass(frozen=True)
class EnergyForm:
    """Quadratic transmit-energy form on the real-stacked block.

    `total` is blockdiag(I_Nt kron Phi) twice; per-antenna mode keeps the
    same matrix and adds one budget per antenna (default an even split).
    """

    total: np.ndarray  # (2 N_t L) x (2 N_t L)
    budget: float
    mode: str
    gram: np.ndarray  # floored L x L Gram block
    n_tx: int
    per_antenna_budgets: np.ndarray | None = None

    def energy(self, s_hat: np.ndarray) -> float:
        return float(s_hat @ (self.total @ s_hat))

    def antenna_energies(self, s_hat: np.ndarray) -> np.ndarray:
        s = unstack_real(s_hat)
        rows = s.reshape(self.n_tx, -1)
        return np.real(np.einsum("ni,ij,nj->n", rows.conj(), self.gram, rows))


def random_qpsk(rng: np.random.Generator, k: int, L: int) -> SymbolBlock:
    return SymbolBlock(data=rng.choice(QPSK_POINTS, size=(k, L)))


def stack_complex(z: np.ndarray) -> np.ndarray:
    """[Re z; Im z] real stacking of a complex vector."""
    return np.concatenate([z.real, z.imag])


def unstack_real(x: np.ndarray) -> np.ndarray:
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def realify_quadratic(b_mat: np.ndarray, b_vec: np.ndarray):
    """Real (A, a) with s_hat^T A s_hat + 2 s_hat^T a = s^H B s + 2 Re(s^H b)."""
    a_mat = np.block([[b_mat.real, -b_mat.imag], [b_mat.imag, b_mat.real]])
    a_mat = 0.5 * (a_mat + a_mat.T)
    return a_mat, np.concatenate([b_vec.real, b_vec.imag])


def realify_linear(t_vec: np.ndarray) -> np.ndarray:
    """Real a with 2 s_hat^T a = Re(t^H s)."""
    return 0.5 * np.concatenate([t_vec.real, t_vec.imag])


def build_ci_system(
    eff: EffectiveChannel, block: SymbolBlock, qos_db, sigma_c2: float
) -> CISystem:
    """Stacked two-sided cone constraints for every user and symbol slot."""
    d_vec = block.data.reshape(-1)  # vec(D^T): user-major, symbol-minor
    kl = d_vec.size
    if eff.effective.shape[0] != kl:
        raise ValueError("effective channel and symbol block sizes disagree")
    k = block.data.shape[0]
    L = block.data.shape[1]

    qos = db_to_linear(np.broadcast_to(np.asarray(qos_db, dtype=float), (k,)))
    tan_t = np.tan(block.theta)

    p = d_vec.conj()[:, None] * eff.effective
    p_re, p_im = p.real, p.imag
    psi = np.block(
        [
            [p_im - p_re * tan_t, p_re + p_im * tan_t],
            [-p_im - p_re * tan_t, -p_re + p_im * tan_t],
        ]
    )
    sigma_vec = np.sqrt(sigma_c2 * np.tile(eff.noise_eigs, k))
    gamma_half = -np.sqrt(np.repeat(qos, L)) * tan_t * sigma_vec
    return CISystem(
        psi=psi,
        gamma=np.concatenate([gamma_half, gamma_half]),
        sigma_vec=sigma_vec,
        qos=qos,
    )


def ci_margins(s_hat: np.ndarray, sys: CISystem) -> np.ndarray:
    """gamma - psi @ s_hat; the point is QoS-feasible iff all entries >= 0."""
    return sys.gamma - sys.psi @ s_hat


def build_energy_form(
    pulse: PulseTables, dims: Dimensions, budget_dbm: float, mode: str = "total"
) -> EnergyForm:
    if mode not in ("total", "per-antenna"):
        raise ValueError(f"unknown energy mode: {mode!r}")
    gram = pulse.floored_gram()
    one_side = np.kron(np.eye(dims.n_tx), gram)
    budget = float(db_to_linear(budget_dbm))
    per = np.full(dims.n_tx, budget / dims.n_tx) if mode == "per-antenna" else None
    return EnergyForm(
        total=block_diag(one_side, one_side),
        budget=budget,
        mode=mode,
        gram=gram,
        n_tx=dims.n_tx,
        per_antenna_budgets=per,
    )
