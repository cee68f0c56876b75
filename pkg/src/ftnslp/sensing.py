"""Radar-side objective machinery.

Lifts the precoded block onto the stacked radar regressor, evaluates the
channel-estimation MMSE objective and its Bayesian estimator, and produces
the quadratic minorizer and the first-order surrogate gradient used by the
two outer solvers. Kronecker products with the receive-antenna identity are
never materialized; everything is computed per tap block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Dimensions, selection_matrices
from .pulse import PulseTables

__all__ = [
    "SensingLift",
    "MinorizerParams",
    "ScaGradient",
    "build_lift",
    "lift",
    "mmse_objective",
    "f_max",
    "mmse_estimate",
    "minorizer",
    "minorizer_value",
    "sca_gradient",
]


@dataclass(frozen=True)
class SensingLift:
    """Lift tables: explicit stacked matrix e_r plus the per-tap blocks behind it.

    `e_r @ vec(S^T)` equals the column stacking of the lifted radar block for
    every S; `taps[p] = E_p @ Omega_shape` is the L1 x L map used to fold the
    big products back onto the N_t L symbol space.
    """

    e_r: np.ndarray  # (P N_t L1) x (N_t L)
    taps: np.ndarray  # P x L1 x L
    dims: Dimensions


@dataclass(frozen=True)
class MinorizerParams:
    """Quadratic surrogate g(S) = c - 2 Re(vec^H b) - vec^H B vec touching the objective."""

    b: np.ndarray  # complex, N_t L
    B: np.ndarray  # complex Hermitian PSD, (N_t L) x (N_t L)
    c: float


@dataclass(frozen=True)
class ScaGradient:
    """First-order data for the linearized subproblem: Re(t_r^H vec(S^T)) + const."""

    t_r: np.ndarray  # complex, N_t L
    value_at_point: float


def build_lift(pulse: PulseTables, dims: Dimensions) -> SensingLift:
    taps = np.stack([e @ pulse.omega_shape for e in selection_matrices(dims)])
    e_r = np.vstack([np.kron(np.eye(dims.n_tx), w) for w in taps])
    return SensingLift(e_r=e_r, taps=taps, dims=dims)


def lift(s_block: np.ndarray, pulse: PulseTables, dims: Dimensions) -> np.ndarray:
    """Lifted radar regressor X (L1 x N_t P): tap-shifted copies of S Omega^T, transposed."""
    x_r_t = pulse.omega_shape @ s_block.T  # L0 x N_t
    sel = selection_matrices(dims)
    return np.hstack([e @ x_r_t for e in sel])


def _fold(lft: SensingLift, mat: np.ndarray) -> np.ndarray:
    """e_r^H vec(mat) for an L1 x (N_t P) matrix, computed per tap block."""
    n_tx = lft.dims.n_tx
    m3 = mat.reshape(mat.shape[0], lft.dims.taps, n_tx).transpose(1, 0, 2)
    # out[n, a] = sum_p taps[p]^T mat[:, p-th block, antenna n]
    out = np.einsum("pla,pln->na", lft.taps, m3)
    return out.reshape(-1)


def mmse_objective(x_bar: np.ndarray, sigma_r2: float, sigma_h2: float, n_rx: int):
    """Objective f = tr((sigma_r2/sigma_h2 I + X^H X)^-1) and the physical MMSE."""
    n = x_bar.shape[1]
    r = (sigma_r2 / sigma_h2) * np.eye(n) + x_bar.conj().T @ x_bar
    f = float(np.trace(np.linalg.inv(r)).real)
    return f, sigma_r2 * n_rx * f


def f_max(x_bar: np.ndarray, sigma_r2: float, sigma_h2: float) -> float:
    """Maximization form tr(X^H (sigma_h2 X X^H + sigma_r2 I)^-1 X)."""
    l1 = x_bar.shape[0]
    m = sigma_h2 * (x_bar @ x_bar.conj().T) + sigma_r2 * np.eye(l1)
    return float(np.trace(x_bar.conj().T @ np.linalg.solve(m, x_bar)).real)


def mmse_estimate(y_r: np.ndarray, x_bar: np.ndarray, sigma_r2: float, sigma_h2: float) -> np.ndarray:
    """Bayesian linear estimate of the vectorized target response, per receive antenna.

    y_r holds one receive antenna per row (N_r x L1), matching the lifted
    observation model y_r^T = X h^T + noise.
    """
    l1 = x_bar.shape[0]
    if y_r.shape[1] != l1:
        raise ValueError("observation length does not match the lifted regressor")
    m = sigma_h2 * (x_bar @ x_bar.conj().T) + sigma_r2 * np.eye(l1)
    est = sigma_h2 * x_bar.conj().T @ np.linalg.solve(m, y_r.T)  # (N_t P) x N_r
    return est.reshape(-1, order="F")


def minorizer(x_bar_k: np.ndarray, lft: SensingLift, sigma_r2: float, sigma_h2: float) -> MinorizerParams:
    """Touching quadratic lower bound of the maximization-form objective at X_k.

    Uses the normalized auxiliary matrices Q = M^-1 X and T = Q Q^H so the
    surrogate equals f_max exactly at the expansion point; any positive
    rescaling leaves the subproblem argmin unchanged.
    """
    l1 = x_bar_k.shape[0]
    m = sigma_h2 * (x_bar_k @ x_bar_k.conj().T) + sigma_r2 * np.eye(l1)
    q = np.linalg.solve(m, x_bar_k)
    t = q @ q.conj().T
    b = -_fold(lft, q)
    blk = sigma_h2 * np.einsum("pla,lm,pmb->ab", lft.taps, t, lft.taps)
    big_b = np.kron(np.eye(lft.dims.n_tx), blk)
    return MinorizerParams(b=b, B=0.5 * (big_b + big_b.conj().T), c=-float(sigma_r2 * np.trace(t).real))


def minorizer_value(params: MinorizerParams, s_vec: np.ndarray) -> float:
    """Evaluate the surrogate at a vectorized block vec(S^T)."""
    quad = float((s_vec.conj() @ (params.B @ s_vec)).real)
    lin = 2.0 * float((s_vec.conj() @ params.b).real)
    return params.c - lin - quad


def sca_gradient(
    x_bar_k: np.ndarray,
    lft: SensingLift,
    sigma_r2: float,
    sigma_h2: float,
    regularized: bool = True,
) -> ScaGradient:
    """Gradient of the trace-inverse objective folded onto the symbol space.

    `regularized=True` differentiates the actual objective (with the
    sigma_r2/sigma_h2 ridge); the unregularized variant is the literal
    large-signal limit and is kept for comparison only.
    """
    n = x_bar_k.shape[1]
    r = x_bar_k.conj().T @ x_bar_k
    if regularized:
        r = r + (sigma_r2 / sigma_h2) * np.eye(n)
    r_inv = np.linalg.inv(r)
    grad = -2.0 * x_bar_k @ (r_inv @ r_inv)
    f = float(np.trace(r_inv).real) if regularized else float("nan")
    return ScaGradient(t_r=_fold(lft, grad), value_at_point=f)
