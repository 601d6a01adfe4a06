"""Vandermonde null-space precoder.

The secondary transmitter sends ``x2 = alpha V s2`` where the columns of V
are geometric sequences in the roots of the cross-channel polynomial
``S(z) = sum_i h_i z^(L-i)``. Every such column is annihilated by the
Toeplitz convolution with the cross channel, so the primary receiver sees
no interference at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel_model import apply_toeplitz
from .errors import ConditioningError, DegenerateChannelError

__all__ = [
    "MODES",
    "COLUMN_SCALINGS",
    "VandermondePrecoder",
    "channel_poly_roots",
    "build_vandermonde",
    "precoder_for_channels",
    "interference_leakage",
    "numerical_rank",
]

MODES = ("exact", "unit_modulus", "fft_columns")
COLUMN_SCALINGS = ("unit", "none")

LEAD_EPS = 1e-12


@dataclass(frozen=True)
class VandermondePrecoder:
    """An (N+L) x L precoding matrix and how it was built.

    Attributes
    ----------
    roots : ndarray, shape (L,)
        Generators of the geometric columns. For ``fft_columns`` these are
        the DFT twiddle factors of the selected columns.
    matrix : ndarray, shape (N+L, L)
        ``matrix[:, j] == col_scales[j] * roots[j] ** arange(N+L)``.
    mode : str
        One of ``MODES``.
    col_scales : ndarray, shape (L,)
        Positive per-column factors applied to the raw powers.
    column_scaling : str
        ``"unit"`` stores unit-norm columns, ``"none"`` the raw powers.
    selected_columns : ndarray or None
        DFT column indices chosen in ``fft_columns`` mode.
    """

    roots: np.ndarray
    matrix: np.ndarray
    mode: str
    col_scales: np.ndarray
    column_scaling: str = "unit"
    selected_columns: Optional[np.ndarray] = None

    @property
    def n_streams(self) -> int:
        return self.matrix.shape[1]

    @property
    def block_len(self) -> int:
        return self.matrix.shape[0]

    def scaled(self, d) -> "VandermondePrecoder":
        """Copy with the columns multiplied by the positive factors ``d``."""
        d = np.asarray(d, dtype=float)
        if d.shape != self.col_scales.shape or np.any(d <= 0):
            raise ValueError("d must be a positive vector with one entry per column")
        return VandermondePrecoder(
            roots=self.roots,
            matrix=self.matrix * d[None, :],
            mode=self.mode,
            col_scales=self.col_scales * d,
            column_scaling="custom",
            selected_columns=self.selected_columns,
        )


def channel_poly_roots(h21) -> np.ndarray:
    """Roots of ``S(z) = h_0 z^L + h_1 z^(L-1) + ... + h_L``.

    Computed as the eigenvalues of the companion matrix of the monic
    polynomial ``S(z) / h_0``.

    Raises
    ------
    DegenerateChannelError
        If ``|h_0| <= 1e-12 * ||h||``.
    """
    h = np.asarray(h21, dtype=complex)
    if h.ndim != 1 or h.size < 2:
        raise ValueError("need at least two taps")
    scale = np.linalg.norm(h)
    if not abs(h[0]) > LEAD_EPS * scale:
        raise DegenerateChannelError(
            f"leading tap |h_0|={abs(h[0]):.3e} is negligible (||h||={scale:.3e})")
    L = h.size - 1
    companion = np.zeros((L, L), dtype=complex)
    companion[0, :] = -h[1:] / h[0]
    companion[np.arange(1, L), np.arange(L - 1)] = 1.0
    return np.linalg.eigvals(companion)


def _geometric_column(a: complex, m: int, unit: bool):
    """Return ``(column, scale)`` with ``column = scale * a**arange(m)``."""
    k = np.arange(m)
    if not unit:
        with np.errstate(over="ignore", invalid="ignore"):
            col = a ** k
        if not np.all(np.isfinite(col)):
            raise ConditioningError(
                f"raw Vandermonde column overflows for |a|={abs(a):.6g}",
                root_magnitude=abs(a))
        return col.astype(complex), 1.0
    if a == 0:
        col = np.zeros(m, dtype=complex)
        col[0] = 1.0
        return col, 1.0
    # Work with log-magnitudes so |a|^(m-1) is never formed.
    logmag = k * np.log(abs(a))
    shift = logmag.max()
    col = np.exp(logmag - shift) * np.exp(1j * k * np.angle(a))
    nrm = np.linalg.norm(col)
    scale = np.exp(-shift) / nrm
    if not (np.isfinite(scale) and scale > 0):
        raise ConditioningError(
            f"column normalization factor underflows for |a|={abs(a):.6g}",
            root_magnitude=abs(a))
    return col / nrm, scale


def _fft_column_choice(h22, n: int, l: int):
    m = n + l
    k = np.arange(m)
    dft = np.exp(-2j * np.pi * (np.outer(k, k) % m) / m) / np.sqrt(m)
    # The N-point DFT is unitary, so ||F T v|| = ||T v||.
    gain = np.linalg.norm(apply_toeplitz(h22, dft), axis=0)
    chosen = np.sort(np.argsort(-gain, kind="stable")[:l])
    return chosen, dft[:, chosen]


def build_vandermonde(roots, n: int, l: int, mode: str = "exact", *,
                      h22=None, column_scaling: str = "unit") -> VandermondePrecoder:
    """Build the (N+L) x L precoder.

    Parameters
    ----------
    roots : array_like, shape (l,)
        Cross-channel polynomial roots; ignored for ``fft_columns``.
    n, l : int
        Number of subcarriers and cyclic prefix length.
    mode : {"exact", "unit_modulus", "fft_columns"}
        ``exact`` uses the roots as given; ``unit_modulus`` projects each
        root onto the unit circle first; ``fft_columns`` uses the L columns
        of the (N+L)-point unitary DFT with the largest gain through the
        secondary direct channel ``h22``.
    column_scaling : {"unit", "none"}
        Store unit-norm columns (default) or the raw root powers.

    Raises
    ------
    ConditioningError
        If a column cannot be represented for the requested scaling.
    """
    if mode not in MODES:
        raise ValueError(f"unknown precoder mode {mode!r}")
    if column_scaling not in COLUMN_SCALINGS:
        raise ValueError(f"unknown column scaling {column_scaling!r}")
    if n < 1 or l < 1:
        raise ValueError("n and l must be positive")
    m = n + l

    if mode == "fft_columns":
        if h22 is None:
            raise ValueError("fft_columns mode needs the secondary channel h22")
        chosen, cols = _fft_column_choice(h22, n, l)
        twiddles = np.exp(-2j * np.pi * chosen / m)
        scales = np.full(l, 1.0 / np.sqrt(m))
        if column_scaling == "none":
            cols = cols * np.sqrt(m)
            scales = np.ones(l)
        return VandermondePrecoder(roots=twiddles, matrix=cols, mode=mode,
                                   col_scales=scales, column_scaling=column_scaling,
                                   selected_columns=chosen)

    roots = np.asarray(roots, dtype=complex)
    if roots.shape != (l,):
        raise ValueError(f"expected {l} roots, got shape {roots.shape}")
    if mode == "unit_modulus":
        mag = np.abs(roots)
        roots = np.where(mag > 0, roots / np.where(mag > 0, mag, 1.0), 1.0 + 0j)

    matrix = np.empty((m, l), dtype=complex)
    scales = np.empty(l)
    for j, a in enumerate(roots):
        matrix[:, j], scales[j] = _geometric_column(a, m, column_scaling == "unit")
    return VandermondePrecoder(roots=roots, matrix=matrix, mode=mode,
                               col_scales=scales, column_scaling=column_scaling)


def precoder_for_channels(channels, n: int, mode: str = "exact",
                          column_scaling: str = "unit") -> VandermondePrecoder:
    """Precoder for a ``ChannelSet``: roots of h21, column choice from h22."""
    l = channels.cp_len
    roots = None if mode == "fft_columns" else channel_poly_roots(channels.h21)
    return build_vandermonde(roots, n, l, mode, h22=channels.h22,
                             column_scaling=column_scaling)


def interference_leakage(h21, precoder) -> float:
    """Normalized residual ``||T(h21) V||_F / ||T(h21)||_F``.

    V is taken with unit-norm columns, so the value does not depend on the
    column scaling of the precoder.
    """
    V = precoder.matrix if isinstance(precoder, VandermondePrecoder) else np.asarray(precoder)
    norms = np.linalg.norm(V, axis=0)
    V = V / np.where(norms > 0, norms, 1.0)[None, :]
    h21 = np.asarray(h21, dtype=complex)
    n = V.shape[0] - (h21.size - 1)
    t_norm = np.sqrt(n) * np.linalg.norm(h21)
    if t_norm == 0:
        return 0.0
    return float(np.linalg.norm(apply_toeplitz(h21, V)) / t_norm)


def numerical_rank(m, rel_tol: float = 1e-12) -> int:
    """Number of singular values at least ``rel_tol`` times the largest."""
    if not 0 < rel_tol < 1:
        raise ValueError("rel_tol must lie in (0, 1)")
    s = np.linalg.svd(np.asarray(m), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s >= rel_tol * s[0]))
