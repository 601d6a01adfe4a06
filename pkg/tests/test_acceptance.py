"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or through pytest,
where the lines are collected into the terminal summary.
"""
import dataclasses
import itertools
import time

import numpy as np
import pytest

from vfdm.channel_model import SystemParams, draw_channel_set, frequency_response
from vfdm.harness import experiments as ex
from vfdm.harness.config import make_config
from vfdm.harness.report import render_csv
from vfdm.optimizer import (
    effective_channel,
    interference_noise_covariance,
    primary_waterfilling,
    secondary_covariance,
    sir_values,
    waterfilling_kkt_residual,
)
from vfdm.precoder import interference_leakage, precoder_for_channels
from vfdm.rate_eval import secondary_rate_closed_form, secondary_rate_logdet

RESULTS = {}


def record(num, title, passed, detail, elapsed, limit=None):
    ok = passed and (limit is None or elapsed < limit)
    timing = f"{elapsed:.1f}s" + (f" (limit {limit:.0f}s)" if limit else "")
    line = f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}; runtime {timing}"
    RESULTS[num] = line
    print(line)
    return ok


def solve(params, seed, precoder=None):
    n, l = params.n_carriers, params.cp_len
    ch = draw_channel_set(params, seed)
    prec = precoder_for_channels(ch, n) if precoder is None else precoder(ch)
    h11 = frequency_response(ch.h11, n)
    prim = primary_waterfilling(h11, params.p1)
    s_eta = interference_noise_covariance(frequency_response(ch.h12, n), prim)
    g = effective_channel(ch.h22, prec, s_eta)
    alloc = secondary_covariance(g, prec, params.p2, n, l)
    return ch, prec, h11, prim, s_eta, alloc


def criterion_1():
    t0 = time.perf_counter()
    params = SystemParams()
    worst = 0.0
    for t in range(1000):
        ch = draw_channel_set(params, (101, 0, t))
        worst = max(worst, interference_leakage(ch.h21, precoder_for_channels(ch, 64)))
    return record(1, "zero interference", worst <= 1e-9,
                  f"max leakage {worst:.2e} over 1000 trials (tol 1e-9)",
                  time.perf_counter() - t0, 30)


_CERTS = {}


def criterion_2():
    t0 = time.perf_counter()
    params = SystemParams()
    worst = kkt = eq = sir = 0.0
    for t in range(1000):
        ch, prec, h11, prim, s_eta, a = solve(params, (102, 0, t))
        closed = secondary_rate_closed_form(a, 64, 16, params.p2)
        oracle = secondary_rate_logdet(ch.h22, prec, s_eta, a.covariance, params.p2, 64, 16)
        worst = max(worst, abs(closed - oracle))
        # Certificates for criterion 3 on the same trials.
        kkt = max(kkt, waterfilling_kkt_residual(h11, prim))
        bp = (a.beta * a.powers)[a.selected]
        eq = max(eq, float(np.ptp(bp) / bp.mean()))
        want = (64 + 16) * params.p2 * a.c[a.selected] / a.r_star
        sir = max(sir, float(np.max(np.abs(sir_values(a) - want) / want)))
    elapsed = time.perf_counter() - t0
    _CERTS.update(kkt=kkt, eq=eq, sir=sir)
    return record(2, "closed form vs log-det", worst <= 1e-8,
                  f"max |diff| {worst:.2e} bits/s/Hz over 1000 trials (tol 1e-8)", elapsed, 120)


def criterion_3():
    t0 = time.perf_counter()
    if not _CERTS:
        criterion_2()
    c = _CERTS
    ok = c["kkt"] <= 1e-9 and c["eq"] <= 1e-10 and c["sir"] <= 1e-9
    return record(3, "waterfilling certificates", ok,
                  f"KKT {c['kkt']:.1e} (tol 1e-9), beta*p spread {c['eq']:.1e} (tol 1e-10), "
                  f"SIR rel err {c['sir']:.1e} (tol 1e-9)", time.perf_counter() - t0)


def _grid_best_rate(ch, prec, s_eta, a, n, l, p2, step=0.01):
    """Best log-det rate over the power simplex in the retained SVD basis."""
    pg = a.svd_right
    k = pg.shape[1]
    units = int(round(1 / step))
    best = -np.inf
    for combo in itertools.product(range(units + 1), repeat=k - 1):
        rest = units - sum(combo)
        if rest < 0:
            continue
        w = np.array(combo + (rest,), dtype=float) * step * l * p2
        if not w.any():
            continue
        cov = (pg * w[None, :]) @ pg.conj().T
        best = max(best, secondary_rate_logdet(ch.h22, prec, s_eta, cov, p2, n, l))
    return best


def criterion_4():
    t0 = time.perf_counter()
    params = SystemParams(n_carriers=8, cp_len=2)
    good, worst = 0, 0.0
    for t in range(100):
        ch, prec, _, _, s_eta, a = solve(params, (104, 0, t))
        greedy = secondary_rate_logdet(ch.h22, prec, s_eta, a.covariance, params.p2, 8, 2)
        grid = _grid_best_rate(ch, prec, s_eta, a, 8, 2, params.p2)
        excess = (grid - greedy) / greedy
        worst = max(worst, excess)
        good += excess <= 0.02
    return record(4, "near-optimality audit", good >= 95,
                  f"grid within 2% of greedy on {good}/100 trials (need >= 95), "
                  f"worst excess {100 * worst:.2f}%", time.perf_counter() - t0, 60)


def criterion_5():
    t0 = time.perf_counter()
    sigmas = [0.0, 0.01, 0.1, 1.0]
    curves = {}
    for s12 in sigmas:
        cfg = make_config(kind="rate_vs_snr", sigma12=s12, trials=2000, master_seed=105,
                          snr_grid_db=[0, 10, 20, 30, 40], oracle_every=0)
        curves[s12] = ex.run_rate_vs_snr(cfg).rows
    opt_ge_eq = all(r["r2_mean"] >= r["r2_eq_mean"] for rows in curves.values() for r in rows)
    ordered = all(
        hi["r2_mean"] >= lo["r2_mean"]
        for a, b in zip(sigmas, sigmas[1:])
        for hi, lo in zip(curves[a], curves[b]))
    r30, r40 = curves[1.0][3]["r2_mean"], curves[1.0][4]["r2_mean"]
    sat = abs(r40 - r30) <= 0.05 * r30
    means = "; ".join(f"s12={s}: " + ",".join(f"{r['r2_mean']:.3f}" for r in curves[s])
                      for s in sigmas)
    return record(5, "rate-vs-SNR qualitative shape", opt_ge_eq and ordered and sat,
                  f"(a) opt>=eq {opt_ge_eq}, (b) ordering {ordered}, (c) saturation {sat} "
                  f"[{r30:.4f}@30dB vs {r40:.4f}@40dB]; mean R2 [{means}]",
                  time.perf_counter() - t0, 300)


def _mbps_sweep(column_scaling, svd_rel_tol):
    cfg = make_config(kind="target_rate_sweep", target_grid=[1.8, 2.7], trials=2000,
                      master_seed=106, snr_db=10.0, column_scaling=column_scaling,
                      svd_rel_tol=svd_rel_tol, oracle_every=0)
    rows = ex.run_target_rate_sweep(cfg).rows
    return rows[0]["r2_mbps"], rows[1]["r2_mbps"], rows


def criterion_6():
    t0 = time.perf_counter()
    # Raw (unnormalized) Vandermonde columns with every nonzero SVD mode kept.
    a, b, rows = _mbps_sweep("none", 0.0)
    ok = abs(a - 8.44) <= 0.2 * 8.44 and abs(b - 6.06) <= 0.2 * 6.06 and b < a
    ua, ub, _ = _mbps_sweep("unit", 1e-12)
    return record(6, "Mbps scenario", ok,
                  f"raw columns, full SVD: R1*=1.8 -> {a:.2f} Mbps (8.44 +/- 20%), "
                  f"R1*=2.7 -> {b:.2f} Mbps (6.06 +/- 20%); "
                  f"feasible fraction {rows[0]['feasible_fraction']:.3f}/"
                  f"{rows[1]['feasible_fraction']:.3f}; "
                  f"[info] unit-norm columns give {ua:.2f}/{ub:.2f} Mbps",
                  time.perf_counter() - t0, 300)


def criterion_7():
    t0 = time.perf_counter()
    cfg = make_config(kind="rank_vs_l", l_grid=list(range(1, 33)), trials=500,
                      master_seed=107, aspect_ratio=0.25, rank_tol=1e-12)
    rows = ex.run_rank_vs_l(cfg).rows
    ratio = np.array([r["rank_ratio"] for r in rows])
    below = np.nonzero(ratio < 1.0)[0]
    ok = False
    detail = "mean rank equals L for every L in 1..32 (no decline)"
    if below.size:
        star = int(below[0])
        tail = ratio[star:]
        ok = star > 0 and bool(np.all(ratio[:star] == 1.0)) and bool(np.all(np.diff(tail) <= 0))
        detail = (f"L* = {rows[star]['l']}, rank/L nonincreasing after: "
                  f"{bool(np.all(np.diff(tail) <= 0))}")
    detail += f"; rank/L at L=32: {ratio[-1]:.3f}"
    return record(7, "rank decline of normalized Vandermonde", ok, detail,
                  time.perf_counter() - t0, 120)


def criterion_8():
    t0 = time.perf_counter()
    params = SystemParams()
    rng = np.random.default_rng(108)
    worst_r2 = worst_sir = 0.0
    rstar_changes = 0
    for t in range(100):
        ch, prec, _, _, s_eta, a = solve(params, (108, 0, t))
        d = np.exp(rng.uniform(-1.0, 1.0, 16))
        scaled = prec.scaled(d)
        g = effective_channel(ch.h22, scaled, s_eta)
        b = secondary_covariance(g, scaled, params.p2, 64, 16)
        r_a = secondary_rate_closed_form(a, 64, 16, params.p2)
        r_b = secondary_rate_closed_form(b, 64, 16, params.p2)
        worst_r2 = max(worst_r2, abs(r_b - r_a) / r_a)
        if a.r_star != b.r_star:
            rstar_changes += 1
        else:
            sa, sb = np.sort(sir_values(a)), np.sort(sir_values(b))
            worst_sir = max(worst_sir, float(np.max(np.abs(sb - sa) / sa)))
    ok = worst_r2 <= 1e-9 and rstar_changes == 0 and worst_sir <= 1e-9
    return record(8, "column-scaling invariance", ok,
                  f"max rel change R2 {worst_r2:.2e}, r* changed on {rstar_changes}/100, "
                  f"max rel change SIR (same r*) {worst_sir:.2e} (tol 1e-9)",
                  time.perf_counter() - t0, 30)


def criterion_9():
    t0 = time.perf_counter()
    configs = [
        make_config(kind="rate_vs_snr", trials=40, snr_grid_db=[0, 20], master_seed=109),
        make_config(kind="target_rate_sweep", trials=40, target_grid=[0, 1.8],
                    master_seed=109),
        make_config(kind="rank_vs_l", trials=40, l_grid=[2, 8, 16], master_seed=109),
    ]
    same = True
    for cfg in configs:
        texts = {render_csv(ex.run_experiment(dataclasses.replace(cfg, threads=k)), cfg)
                 for k in (1, 2, 4, 1)}
        same &= len(texts) == 1
    return record(9, "determinism", same,
                  "byte-identical CSV for 3 experiment kinds at threads 1/2/4 and rerun",
                  time.perf_counter() - t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.slow
@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [check() for check in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
