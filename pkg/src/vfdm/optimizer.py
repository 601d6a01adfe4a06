"""Input covariance design for both users.

The primary user waterfills over its N parallel subcarriers. The secondary
user treats primary interference plus noise as colored Gaussian noise,
diagonalizes the whitened effective channel, equalizes ``beta_i p_i``
across the selected eigenmodes and picks how many modes to use with a
greedy search over the sorted normalized gains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel_model import DiagFreqChannel, apply_toeplitz
from .precoder import VandermondePrecoder

__all__ = [
    "PrimaryAllocation",
    "SecondaryAllocation",
    "primary_waterfilling",
    "primary_min_power_for_target",
    "waterfilling_kkt_residual",
    "interference_noise_covariance",
    "effective_channel",
    "secondary_covariance",
    "equal_power_covariance",
    "sir_values",
    "log_objective_gradient",
    "prefix_objectives",
    "equalized_powers",
]

BISECT_REL_WIDTH = 1e-12
BISECT_MAX_ITER = 200
SVD_REL_TOL = 1e-12


@dataclass(frozen=True)
class PrimaryAllocation:
    """Waterfilling solution over the primary subcarriers.

    ``budget`` is the per-subcarrier power actually offered to the
    waterfiller, so ``powers.sum() == n * budget``.
    """

    powers: np.ndarray
    water_level: float
    achieved_rate: float
    feasible: bool = True
    budget: float = 0.0
    degenerate: bool = False


@dataclass(frozen=True)
class SecondaryAllocation:
    """Secondary covariance and the intermediate quantities behind it.

    Per-mode arrays (``singular_sq``, ``beta``, ``c``, ``powers``) are
    indexed by retained SVD mode in SVD order; ``perm`` lists the modes by
    decreasing ``c`` and its first ``r_star`` entries are the active ones.
    """

    covariance: np.ndarray
    alpha: float
    n: int
    l: int
    p2: float
    svd_left: Optional[np.ndarray] = None
    singular_sq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    svd_right: Optional[np.ndarray] = None
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    c: np.ndarray = field(default_factory=lambda: np.zeros(0))
    perm: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    r_star: int = 0
    powers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    f_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flagged: bool = False

    @property
    def rank(self) -> int:
        return int(self.singular_sq.size)

    @property
    def selected(self) -> np.ndarray:
        return self.perm[:self.r_star]


def _rate_bits(powers, power_gains) -> float:
    return float(np.mean(np.log2(1.0 + powers * power_gains)))


def primary_waterfilling(chan: DiagFreqChannel, p1: float) -> PrimaryAllocation:
    """Maximize ``(1/N) sum log2(1 + p_n |H_n|^2)`` s.t. ``sum p_n <= N p1``.

    The water level is found by sort-and-check over the active-set
    breakpoints, which gives ``sum p_n == N p1`` up to rounding.
    """
    if not p1 >= 0:
        raise ValueError("p1 must be nonnegative")
    g = np.asarray(chan.power_gains, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("channel gains must be finite")
    n = g.size
    usable = g > 0
    if not np.any(usable):
        return PrimaryAllocation(powers=np.zeros(n), water_level=np.inf,
                                 achieved_rate=0.0, feasible=p1 == 0,
                                 budget=float(p1), degenerate=p1 > 0)
    inv = np.full(n, np.inf)
    inv[usable] = 1.0 / g[usable]
    floors = np.sort(inv[usable])
    if p1 == 0:
        return PrimaryAllocation(powers=np.zeros(n), water_level=float(floors[0]),
                                 achieved_rate=0.0, budget=0.0)
    total = n * p1
    csum = np.cumsum(floors)
    # Largest k whose level exceeds the k-th floor.
    k = floors.size
    while k > 1:
        mu = (total + csum[k - 1]) / k
        if mu > floors[k - 1]:
            break
        k -= 1
    mu = (total + csum[k - 1]) / k
    # p_n = total/k + (mean of active floors - floor_n); avoids the
    # cancellation in mu - 1/g when the powers are small next to 1/g.
    active = usable & (inv <= floors[k - 1])
    powers = np.zeros(n)
    powers[active] = total / k + (np.mean(inv[active]) - inv[active])
    powers = np.maximum(powers, 0.0)
    return PrimaryAllocation(powers=powers, water_level=float(mu),
                             achieved_rate=_rate_bits(powers, g), budget=float(p1))


def waterfilling_kkt_residual(chan: DiagFreqChannel, alloc: PrimaryAllocation) -> float:
    """Largest violation of the waterfilling optimality conditions.

    Covers the budget (relative), complementary slackness on active
    subcarriers (relative to the water level) and the level condition on
    inactive ones.
    """
    g = chan.power_gains
    p = alloc.powers
    n = g.size
    if alloc.budget == 0 or alloc.degenerate:
        return float(np.max(np.abs(p))) if p.size else 0.0
    mu = alloc.water_level
    res = abs(p.sum() - n * alloc.budget) / (n * alloc.budget)
    active = p > 0
    if np.any(active):
        res = max(res, np.max(np.abs(p[active] - (mu - 1.0 / g[active]))) / mu)
    idle = ~active & (g > 0)
    if np.any(idle):
        res = max(res, max(0.0, np.max(mu - 1.0 / g[idle])) / mu)
    return float(res)


def primary_min_power_for_target(chan: DiagFreqChannel, r1_target: float,
                                 p1_max: float) -> PrimaryAllocation:
    """Smallest waterfilling budget whose rate reaches ``r1_target``.

    When the target exceeds the rate at ``p1_max`` the full-power
    allocation is returned with ``feasible=False``.
    """
    if r1_target < 0 or p1_max < 0:
        raise ValueError("target rate and power must be nonnegative")
    if r1_target == 0:
        alloc = primary_waterfilling(chan, 0.0)
        return PrimaryAllocation(powers=alloc.powers, water_level=alloc.water_level,
                                 achieved_rate=0.0, feasible=True, budget=0.0)
    full = primary_waterfilling(chan, p1_max)
    if full.achieved_rate < r1_target:
        return PrimaryAllocation(powers=full.powers, water_level=full.water_level,
                                 achieved_rate=full.achieved_rate, feasible=False,
                                 budget=full.budget, degenerate=full.degenerate)
    lo, hi = 0.0, float(p1_max)
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_REL_WIDTH * hi:
            break
        mid = 0.5 * (lo + hi)
        if primary_waterfilling(chan, mid).achieved_rate < r1_target:
            lo = mid
        else:
            hi = mid
    return primary_waterfilling(chan, hi)


def interference_noise_covariance(chan12: DiagFreqChannel,
                                  primary: PrimaryAllocation) -> np.ndarray:
    """Diagonal covariance ``H12 S1 H12^H + I`` seen by the secondary
    receiver."""
    if chan12.n_carriers != primary.powers.size:
        raise ValueError("cross channel and allocation sizes differ")
    return np.diag(1.0 + primary.powers * chan12.power_gains)


def _noise_diagonal(s_eta) -> np.ndarray:
    s_eta = np.asarray(s_eta)
    d = np.real(np.diag(s_eta)) if s_eta.ndim == 2 else np.real(s_eta)
    if s_eta.ndim == 2 and np.any(s_eta - np.diag(np.diag(s_eta))):
        raise ValueError("interference-plus-noise covariance must be diagonal")
    if np.any(d <= 0):
        raise ValueError("interference-plus-noise covariance must be positive")
    return d


def effective_channel(h22, precoder: VandermondePrecoder, s_eta) -> np.ndarray:
    """Whitened N x L channel ``S_eta^(-1/2) F T(h22) V`` (without alpha).

    ``s_eta`` may be the diagonal matrix or its diagonal.
    """
    d = _noise_diagonal(s_eta)
    V = precoder.matrix if isinstance(precoder, VandermondePrecoder) else np.asarray(precoder)
    conv = apply_toeplitz(h22, V)
    if conv.shape[0] != d.size:
        raise ValueError("noise covariance does not match the channel output size")
    return np.fft.fft(conv, axis=0, norm="ortho") / np.sqrt(d)[:, None]


def prefix_objectives(c_sorted, n: int, l: int, p2: float) -> np.ndarray:
    """``f_k = (1/N) sum_{i<=k} log2(1 + (N+L) p2 c_i / k)`` for k=1..r."""
    c_sorted = np.asarray(c_sorted, dtype=float)
    r = c_sorted.size
    k = np.arange(1, r + 1)
    snr = (n + l) * p2 * c_sorted[None, :] / k[:, None]
    mask = np.arange(r)[None, :] < k[:, None]
    return np.where(mask, np.log2(1.0 + snr), 0.0).sum(axis=1) / n


def equalized_powers(beta, l: int, p2: float) -> np.ndarray:
    """``p_i = L p2 / (beta_i sum_j 1/beta_j)``: equal ``beta_i p_i`` and
    ``sum p_i = L p2``."""
    beta = np.asarray(beta, dtype=float)
    return l * p2 / (beta * np.sum(1.0 / beta))


def secondary_covariance(g, precoder: VandermondePrecoder, p2: float, n: int,
                         l: int, svd_rel_tol: float = SVD_REL_TOL) -> SecondaryAllocation:
    """Secondary covariance from SVD, equal-beta power split and greedy
    mode selection.

    Parameters
    ----------
    g : ndarray, shape (N, L)
        Effective channel from :func:`effective_channel`.
    precoder : VandermondePrecoder
        The precoder whose columns produced ``g``; needed for ``beta``.
    p2 : float
        Secondary per-symbol power budget.
    n, l : int
        System dimensions.
    svd_rel_tol : float
        Singular values below ``svd_rel_tol * max`` are discarded. Zero
        keeps every nonzero mode.
    """
    if not p2 > 0:
        raise ValueError("p2 must be positive")
    g = np.asarray(g)
    V = precoder.matrix
    u, s, vh = np.linalg.svd(g, full_matrices=False)
    if s.size == 0 or not np.isfinite(s[0]) or s[0] == 0:
        return SecondaryAllocation(covariance=np.zeros((l, l), dtype=complex),
                                   alpha=0.0, n=n, l=l, p2=p2, flagged=True)
    keep = s > svd_rel_tol * s[0]
    u, s, pg = u[:, keep], s[keep], vh[keep].conj().T
    lam = s ** 2
    vp = V @ pg
    beta = np.einsum("ij,ij->j", vp.conj(), vp).real
    c = lam / beta
    perm = np.argsort(-c, kind="stable")
    f = prefix_objectives(c[perm], n, l, p2)
    # First maximizer, so ties go to the smaller cardinality.
    r_star = int(np.argmax(f)) + 1
    sel = perm[:r_star]

    powers = np.zeros(s.size)
    powers[sel] = equalized_powers(beta[sel], l, p2)
    cov = (pg * powers[None, :]) @ pg.conj().T
    cov = 0.5 * (cov + cov.conj().T)
    vtr = np.einsum("ij,ij->", V.conj(), V @ cov).real
    alpha = float(np.sqrt((n + l) * p2 / vtr))
    return SecondaryAllocation(
        covariance=cov, alpha=alpha, n=n, l=l, p2=p2,
        svd_left=u, singular_sq=lam, svd_right=pg, beta=beta, c=c,
        perm=perm, r_star=r_star, powers=powers, f_values=f)


def equal_power_covariance(l: int, p2: float,
                           precoder: Optional[VandermondePrecoder] = None,
                           n: Optional[int] = None) -> SecondaryAllocation:
    """Baseline ``S2 = p2 I_L``. Alpha is filled in when a precoder is given."""
    if p2 < 0:
        raise ValueError("p2 must be nonnegative")
    cov = p2 * np.eye(l, dtype=complex)
    alpha = float("nan")
    if precoder is not None and p2 > 0:
        m = precoder.block_len
        n = m - l if n is None else n
        alpha = float(np.sqrt((n + l) * p2 / (p2 * np.sum(np.abs(precoder.matrix) ** 2))))
    return SecondaryAllocation(covariance=cov, alpha=alpha,
                               n=-1 if n is None else n, l=l, p2=p2)


def sir_values(alloc: SecondaryAllocation) -> np.ndarray:
    """Per-mode SIR for the active modes, in ``perm`` order."""
    sel = alloc.selected
    if sel.size == 0:
        return np.zeros(0)
    bp = alloc.beta * alloc.powers
    return (alloc.n + alloc.l) * alloc.p2 * alloc.c[sel] * bp[sel] / bp.sum()


def log_objective_gradient(alloc: SecondaryAllocation) -> np.ndarray:
    """Gradient of the high-SIR objective in log-power variables, restricted
    to the active modes (natural-log units).

    ``d/dq_i [ (1/N) sum_k (log a_k + q_k) - (r/N) log sum_k beta_k e^q_k ]``
    """
    sel = alloc.selected
    if sel.size == 0:
        return np.zeros(0)
    bp = alloc.beta[sel] * alloc.powers[sel]
    return (1.0 - sel.size * bp / bp.sum()) / alloc.n
