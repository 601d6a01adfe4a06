"""Random frequency-selective channels and the linear operators of the
OFDM system model: Toeplitz convolution, unitary DFT and cyclic prefix.

Tap convention: ``h[0]`` is the current-symbol tap h_0 and ``h[L]`` the
most delayed one. Noise is unit-variance AWGN and is never materialized;
it enters the rate expressions as identity covariances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "SystemParams",
    "ChannelSet",
    "DiagFreqChannel",
    "make_rng",
    "draw_channel_set",
    "toeplitz_conv_matrix",
    "unitary_dft",
    "cp_insertion_matrix",
    "frequency_response",
    "apply_toeplitz",
]

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]

# Order in which the four links consume the random stream.
LINKS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class SystemParams:
    """Dimensions, link gains and power budgets of the 2x2 system.

    Parameters
    ----------
    n_carriers : int
        Number of OFDM subcarriers N.
    cp_len : int
        Cyclic prefix length L (channels have L+1 taps).
    sigma : array_like, shape (2, 2)
        ``sigma[i, j]`` is the average power gain of the link from
        transmitter i+1 to receiver j+1.
    p1, p2 : float
        Per-symbol power budgets (linear scale).
    """

    n_carriers: int = 64
    cp_len: int = 16
    sigma: np.ndarray = field(default_factory=lambda: np.ones((2, 2)))
    p1: float = 10.0
    p2: float = 10.0

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        if sigma.shape != (2, 2):
            raise ValueError(f"sigma must be 2x2, got shape {sigma.shape}")
        if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
            raise ValueError("sigma entries must be finite and nonnegative")
        if int(self.n_carriers) != self.n_carriers or self.n_carriers < 1:
            raise ValueError("n_carriers must be a positive integer")
        if int(self.cp_len) != self.cp_len or self.cp_len < 1:
            raise ValueError("cp_len must be a positive integer")
        if self.cp_len > self.n_carriers:
            raise ValueError("cp_len must not exceed n_carriers")
        if not (self.p1 >= 0 and self.p2 >= 0):
            raise ValueError("power budgets must be nonnegative")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "n_carriers", int(self.n_carriers))
        object.__setattr__(self, "cp_len", int(self.cp_len))
        object.__setattr__(self, "p1", float(self.p1))
        object.__setattr__(self, "p2", float(self.p2))

    def replace(self, **changes) -> "SystemParams":
        kw = dict(n_carriers=self.n_carriers, cp_len=self.cp_len,
                  sigma=self.sigma, p1=self.p1, p2=self.p2)
        kw.update(changes)
        return SystemParams(**kw)


@dataclass(frozen=True)
class ChannelSet:
    """The four impulse responses; ``h[i][j]`` links Tx i+1 to Rx j+1."""

    h: tuple

    def __post_init__(self):
        lengths = {len(v) for row in self.h for v in row}
        if len(lengths) != 1:
            raise ValueError("all impulse responses must share one length")
        for row in self.h:
            for v in row:
                v.setflags(write=False)

    @property
    def cp_len(self) -> int:
        return len(self.h[0][0]) - 1

    @property
    def h11(self) -> np.ndarray:
        return self.h[0][0]

    @property
    def h12(self) -> np.ndarray:
        return self.h[0][1]

    @property
    def h21(self) -> np.ndarray:
        return self.h[1][0]

    @property
    def h22(self) -> np.ndarray:
        return self.h[1][1]


@dataclass(frozen=True)
class DiagFreqChannel:
    """Per-subcarrier complex gains (the diagonal of the frequency-domain
    channel matrix)."""

    gains: np.ndarray

    @property
    def n_carriers(self) -> int:
        return self.gains.shape[0]

    @property
    def power_gains(self) -> np.ndarray:
        return np.abs(self.gains) ** 2


def make_rng(seed: SeedLike) -> np.random.Generator:
    """PCG64 generator from an integer or a tuple of integers.

    Tuples such as ``(master_seed, grid_index, trial_index)`` give
    independent, order-free streams.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if isinstance(seed, (int, np.integer)):
        entropy = int(seed) % 2**64
    else:
        entropy = [int(s) % 2**64 for s in seed]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def draw_channel_set(params: SystemParams, seed: SeedLike) -> ChannelSet:
    """Draw i.i.d. circularly-symmetric Gaussian taps with variance
    sigma_ij/(L+1) for each of the four links.

    Unit normals are drawn for every link regardless of ``sigma``, so
    sweeping a link gain with a fixed seed reuses the same realizations.
    """
    rng = make_rng(seed)
    L = params.cp_len
    h = [[None, None], [None, None]]
    for i, j in LINKS:
        z = rng.standard_normal(L + 1) + 1j * rng.standard_normal(L + 1)
        h[i][j] = np.sqrt(params.sigma[i, j] / (2.0 * (L + 1))) * z
    return ChannelSet(h=(tuple(h[0]), tuple(h[1])))


def _as_taps(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 1 or h.size < 1:
        raise ValueError("impulse response must be a nonempty 1-D vector")
    return h


def toeplitz_conv_matrix(h, n: int) -> np.ndarray:
    """N x (N+L) banded Toeplitz matrix of the channel.

    Row k holds ``[h_L, ..., h_0]`` starting at column k, so that
    ``T @ x`` is the valid part of the linear convolution of x with h.
    """
    h = _as_taps(h)
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    L = h.size - 1
    T = np.zeros((n, n + L), dtype=complex)
    rev = h[::-1]
    for k in range(n):
        T[k, k:k + L + 1] = rev
    return T


def unitary_dft(n: int) -> np.ndarray:
    """Unitary DFT matrix with entries exp(-2 pi j k l / n) / sqrt(n)."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    k = np.arange(n)
    # Reduce k*l mod n before scaling to keep the phases exact for large n.
    return np.exp(-2j * np.pi * (np.outer(k, k) % n) / n) / np.sqrt(n)


def cp_insertion_matrix(n: int, l: int) -> np.ndarray:
    """(N+L) x N matrix ``[E; I_N]`` that prefixes a block with its last
    L entries."""
    if l < 1 or n < 1:
        raise ValueError("n and l must be positive")
    if l > n:
        raise ValueError(f"cyclic prefix length {l} exceeds block length {n}")
    A = np.zeros((n + l, n))
    A[np.arange(l), np.arange(n - l, n)] = 1.0
    A[l:, :] = np.eye(n)
    return A


def frequency_response(h, n: int) -> DiagFreqChannel:
    """Subcarrier gains ``sum_l h_l exp(-2 pi j k l / n)``.

    These are the diagonal entries of ``F T(h) A F^H``.
    """
    h = _as_taps(h)
    if h.size > n:
        raise ValueError(f"{h.size} taps do not fit in {n} subcarriers")
    gains = np.fft.fft(h, n)
    gains.setflags(write=False)
    return DiagFreqChannel(gains=gains)


def apply_toeplitz(h, X) -> np.ndarray:
    """``toeplitz_conv_matrix(h, n) @ X`` without forming the matrix.

    X has N+L rows; the result has N rows.
    """
    h = _as_taps(h)
    X = np.asarray(X)
    L = h.size - 1
    n = X.shape[0] - L
    if n < 1:
        raise ValueError("input has fewer rows than taps")
    out = np.zeros((n,) + X.shape[1:], dtype=complex)
    for tap in range(L + 1):
        out += h[tap] * X[L - tap:L - tap + n]
    return out
