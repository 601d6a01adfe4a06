"""Achievable rates in bits/s/Hz.

The log-determinant routines rebuild every operator from explicit
matrices (Toeplitz, DFT, CP insertion) and serve as an oracle for the
closed-form expressions used by the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_model import (
    DiagFreqChannel,
    cp_insertion_matrix,
    toeplitz_conv_matrix,
    unitary_dft,
)
from .optimizer import PrimaryAllocation, SecondaryAllocation

__all__ = [
    "RateReport",
    "logdet_hermitian",
    "secondary_rate_closed_form",
    "secondary_rate_logdet",
    "primary_rate",
    "primary_rate_full_model",
    "to_mbps",
]

DEFAULT_BANDWIDTH_HZ = 20e6


@dataclass(frozen=True)
class RateReport:
    r1: float
    r2: float
    r2_oracle: float
    leakage: float
    r_star: int
    feasible_primary: bool


def to_mbps(rate_bits: float, bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ) -> float:
    return rate_bits * bandwidth_hz / 1e6


def logdet_hermitian(m) -> float:
    """Natural log-determinant of a Hermitian positive definite matrix
    via its Cholesky factor."""
    m = np.asarray(m)
    chol = np.linalg.cholesky(0.5 * (m + m.conj().T))
    return float(2.0 * np.sum(np.log(np.real(np.diag(chol)))))


def secondary_rate_closed_form(alloc: SecondaryAllocation, n: int, l: int,
                               p2: float) -> float:
    """``(1/N) sum_{i<=r*} log2(1 + (N+L) p2 c_pi(i) / r*)``."""
    r = alloc.r_star
    if r == 0:
        return 0.0
    c = alloc.c[alloc.perm[:r]]
    return float(np.sum(np.log2(1.0 + (n + l) * p2 * c / r)) / n)


def secondary_rate_logdet(h22, precoder, s_eta, s2, p2: float, n: int,
                          l: int) -> float:
    """``(1/N) log2 det(I + scale G S2 G^H)`` with
    ``scale = (N+L) p2 / tr(V S2 V^H)`` and G built from explicit
    matrices."""
    V = getattr(precoder, "matrix", precoder)
    V = np.asarray(V)
    s2 = np.asarray(s2)
    s_eta = np.asarray(s_eta)
    d = np.real(np.diag(s_eta)) if s_eta.ndim == 2 else np.real(s_eta)
    vtr = np.real(np.trace(V @ s2 @ V.conj().T))
    if not vtr > 0:
        raise ValueError("tr(V S2 V^H) must be positive")
    G = (unitary_dft(n) @ toeplitz_conv_matrix(h22, n) @ V) / np.sqrt(d)[:, None]
    scale = (n + l) * p2 / vtr
    m = np.eye(n) + scale * (G @ s2 @ G.conj().T)
    return logdet_hermitian(m) / (n * np.log(2.0))


def primary_rate(chan: DiagFreqChannel, alloc: PrimaryAllocation) -> float:
    """``(1/N) sum log2(1 + p_n |H_n|^2)``."""
    return float(np.mean(np.log2(1.0 + alloc.powers * chan.power_gains)))


def primary_rate_full_model(channels, alloc: PrimaryAllocation, precoder=None,
                            s2=None, alpha: float = 0.0) -> float:
    """Primary rate computed from the time-domain receive model.

    Receiver 1 observes ``F (T11 A F^H s1 + alpha T21 V s2 + n1)``; the
    secondary signal, when given, is treated as Gaussian noise. With an
    exact null-space precoder the result matches :func:`primary_rate`.
    """
    h11, h21 = channels.h11, channels.h21
    n = alloc.powers.size
    l = h11.size - 1
    F = unitary_dft(n)
    H = F @ toeplitz_conv_matrix(h11, n) @ cp_insertion_matrix(n, l) @ F.conj().T
    noise = np.eye(n, dtype=complex)
    if precoder is not None and s2 is not None:
        V = getattr(precoder, "matrix", precoder)
        B = alpha * (F @ toeplitz_conv_matrix(h21, n) @ V)
        noise = noise + B @ np.asarray(s2) @ B.conj().T
    total = noise + (H * alloc.powers[None, :]) @ H.conj().T
    return (logdet_hermitian(total) - logdet_hermitian(noise)) / (n * np.log(2.0))
