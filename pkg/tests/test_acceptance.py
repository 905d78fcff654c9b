"""Acceptance criteria, one test per criterion.

Each test records a one-line verdict that the terminal summary prints as
``[PASS]`` or ``[FAIL] criterion N: ...``, then asserts it.
"""

import itertools
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from qswitch import analytic, ctmc, region, sim
from qswitch.model import PolicyParams, SwitchConfig

GRID5 = [0.0, 0.25, 0.5, 0.75, 1.0]
TENTHS = [i / 10 for i in range(11)]


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


def test_criterion_1_closed_form_equivalence(record):
    start = time.perf_counter()
    worst = {0.0: 0.0, 0.1: 0.0, 0.5: 0.0}
    count = 0
    for k, mu, alpha in itertools.product([3, 4, 5, 10, 50], [1.0, 2.5], worst):
        cfg = SwitchConfig(k, mu, alpha)
        closed = analytic.capacities_b1 if alpha == 0 else analytic.capacities_b1_decoherence
        for r in itertools.product(GRID5, repeat=3):
            pol = PolicyParams(*r)
            a = closed(cfg, pol)
            _, c = ctmc.solve(cfg, pol)
            worst[alpha] = max(worst[alpha], _rel(a.c2, c.c2), _rel(a.c3, c.c3))
            count += 1
    elapsed = time.perf_counter() - start
    err = max(worst.values())
    passed = err <= 1e-10 and elapsed < 5.0
    record(1, passed, f"{count} cases, max rel err {err:.2e} (alpha 0/0.1/0.5: "
           f"{worst[0.0]:.1e}/{worst[0.1]:.1e}/{worst[0.5]:.1e}) <= 1e-10, {elapsed:.2f}s < 5s")
    assert passed


def test_criterion_2_anchor_values(record):
    cfg = SwitchConfig(3, 1.0)
    ext = analytic.extremes_b1(cfg)
    pi = analytic.stationary_b1(cfg, PolicyParams(0, 1, 1))
    pi_chain, _ = ctmc.solve(cfg, PolicyParams(0, 1, 1))
    _, c2_star = ctmc.solve(cfg, PolicyParams(1, 0, 0))
    _, c3_star = ctmc.solve(cfg, PolicyParams(0, 1, 0))
    checks = [
        (ext.c2_max, 1.2), (c2_star.c2, 1.2),
        (ext.c3_max, 6 / 11), (c3_star.c3, 6 / 11),
        (ext.c3_hat, 6 / 17), (ext.c2_hat, 12 / 17),
        (pi[(0, 0)], 2 / 17), (pi[(1, 0)], 9 / 17), (pi[(1, 1)], 6 / 17),
        (pi_chain[(0, 0)], 2 / 17), (pi_chain[(1, 0)], 9 / 17), (pi_chain[(1, 1)], 6 / 17),
    ]
    err = max(abs(got - want) for got, want in checks)
    passed = err <= 1e-12
    record(2, passed, f"C2*, C3*, farthest point and pi(0,1,1) at k=3: max abs err {err:.1e} <= 1e-12")
    assert passed


def test_criterion_3_bounding_lines(record):
    worst_bound = -np.inf
    worst_line = 0.0
    for k in (3, 10, 50):
        cfg = SwitchConfig(k)
        lines = analytic.bounding_lines_b1(cfg)
        r = region.policy_grid(0.05)
        rr = np.array(list(itertools.product(r, repeat=3)))
        c3, c2 = analytic.b1_capacities(k, 1.0, rr[:, 0], rr[:, 1], rr[:, 2])
        s1, b1 = lines.line1
        s2, b2 = lines.line2
        worst_bound = max(worst_bound, float(np.max(c2 - (s1 * c3 + b1))), float(np.max(c2 - (s2 * c3 + b2))))
        for x in TENTHS:
            p = analytic.capacities_b1(cfg, PolicyParams(0, x, 1))
            worst_line = max(worst_line, abs(p.c2 - (s1 * p.c3 + b1)))
            q = analytic.capacities_b1(cfg, PolicyParams(0, 1, x))
            worst_line = max(worst_line, abs(q.c2 - (s2 * q.c3 + b2)))
    passed = worst_bound <= 1e-12 and worst_line <= 1e-10
    record(3, passed, f"max excess over lines on 21^3 grid {worst_bound:.1e} <= 1e-12; "
           f"max distance of (0,r2,1)/(0,1,r3) from lines {worst_line:.1e} <= 1e-10")
    assert passed


def test_criterion_4_area_ratio(record):
    ks = range(3, 101)
    geometric = np.array([analytic.area_ratio_b1(SwitchConfig(k)).ratio for k in ks])
    rational = np.array([analytic.area_ratio_rational(k) for k in ks])
    err = float(np.max(np.abs(geometric - rational)))
    r3 = geometric[0]
    decreasing = bool(np.all(np.diff(geometric) < 0))
    shrink = geometric[-1] / r3
    passed = err <= 1e-9 and abs(r3 - 0.15058) <= 1e-4 and decreasing and shrink < 0.1
    record(4, passed, f"|geometric - 1/(1+poly)| max {err:.1e} <= 1e-9 over k=3..100; "
           f"ratio(3) = {r3:.6f}; strictly decreasing: {decreasing}; ratio(100)/ratio(3) = {shrink:.4f} < 0.1")
    assert passed


ALPHA_PATH = np.round(np.concatenate((np.arange(0, 2, 0.05), np.geomspace(2, 1e3, 40))), 12)


def test_criterion_5_decoherence_limits(record):
    grid = region.policy_grid(0.05)
    rr = np.array(list(itertools.product(grid, repeat=3)))

    # C2'max / C2* against (2k-1)mu / ((2k-1)mu + alpha), grid maximum and CTMC
    formula_err = 0.0
    for k, mu, alpha in itertools.product([3, 4, 10, 50, 1000], [1.0, 2.5], [0.1, 0.5, 2.0, 10.0]):
        c2_star = ctmc.solve(SwitchConfig(k, mu), PolicyParams(1, 0, 0))[1].c2
        c2_max_chain = ctmc.solve(SwitchConfig(k, mu, alpha), PolicyParams(1, 0, 0))[1].c2
        c2_max_grid = analytic.b1_capacities_decoherence(k, mu, alpha, rr[:, 0], rr[:, 1], rr[:, 2])[1].max()
        want = (2 * k - 1) * mu / ((2 * k - 1) * mu + alpha)
        formula_err = max(formula_err, _rel(c2_max_chain / c2_star, want), _rel(c2_max_grid / c2_star, want))

    # k = 1000 at the extreme policies
    k_big = []
    for pol in (PolicyParams(1, 0, 0), PolicyParams(0, 1, 0), PolicyParams(0, 1, 1)):
        clean = ctmc.solve(SwitchConfig(1000), pol)[1]
        noisy = ctmc.solve(SwitchConfig(1000, 1.0, 0.5), pol)[1]
        if clean.c2 > 0:
            k_big.append(noisy.c2 / clean.c2)
        if clean.c3 > 0:
            k_big.append(noisy.c3 / clean.c3)
    k_big_min = min(k_big)

    # capacities (maxima over policies, and values at the extreme policies) along alpha
    monotone = True
    for k, mu in itertools.product([3, 10, 50], [1.0, 2.5]):
        c3, c2 = analytic.b1_capacities_decoherence(
            k, mu, mu * ALPHA_PATH[:, None], rr[:, 0], rr[:, 1], rr[:, 2]
        )
        series = [c2.max(axis=1), c3.max(axis=1)]
        for pol in ((1, 0, 0), (0, 1, 0), (0, 1, 1)):
            e3, e2 = analytic.b1_capacities_decoherence(k, mu, mu * ALPHA_PATH, *pol)
            series += [e2, e3]
        monotone &= all(np.all(np.diff(s) <= 1e-12 * s[0]) for s in series)

    # the same capacities at k=3 fall below 1% of their alpha=0 values by alpha = 1000 mu
    decay = 0.0
    per_policy = 0.0
    for mu in (1.0, 2.5):
        c3_0, c2_0 = analytic.b1_capacities(3, mu, rr[:, 0], rr[:, 1], rr[:, 2])
        c3_a, c2_a = analytic.b1_capacities_decoherence(3, mu, 1e3 * mu, rr[:, 0], rr[:, 1], rr[:, 2])
        decay = max(decay, c2_a.max() / c2_0.max(), c3_a.max() / c3_0.max())
        for pol in ((1, 0, 0), (0, 1, 0), (0, 1, 1)):
            e3_0, e2_0 = analytic.b1_capacities(3, mu, *pol)
            e3_a, e2_a = analytic.b1_capacities_decoherence(3, mu, 1e3 * mu, *pol)
            decay = max(decay, *(a / z for a, z in ((e2_a, e2_0), (e3_a, e3_0)) if z > 0))
        # reported only: single policies with tiny alpha=0 rates decay more slowly
        per_policy = max(per_policy, float(np.max(c2_a[c2_0 > 0] / c2_0[c2_0 > 0])))

    passed = formula_err <= 1e-10 and k_big_min >= 0.999 and monotone and decay < 0.01
    record(5, passed, f"C2'max/C2* formula max rel err {formula_err:.1e}; k=1000 alpha=0.5 min ratio "
           f"{k_big_min:.5f} >= 0.999; C2'max, C3'max and extreme-policy capacities nonincreasing in alpha: "
           f"{monotone}; k=3 worst ratio at alpha=1000mu {decay:.5f} < 0.01 "
           f"(single-policy C2' worst {per_policy:.5f}, not a capacity)")
    assert passed


# ---------------------------------------------------------------------------
# simulator criteria share one set of long runs

DRAW_SEED = 2026
SIM_SEED_BASE = 1000
SIM_DURATION = 1e6


def _draw_configs(n=10):
    rng = np.random.default_rng(DRAW_SEED)
    out = []
    for _ in range(n):
        k = int(rng.choice([3, 5, 10]))
        b = int(rng.choice([1, 2]))
        alpha = float(rng.choice([0.0, 0.3]))
        r1 = float(rng.uniform(0, 0.5)) if b == 1 else 0.0
        r2 = float(rng.uniform(0.25, 1))
        r3 = float(rng.uniform(0, 1))
        out.append((SwitchConfig(k, 1.0, alpha, b), PolicyParams(r1, r2, r3)))
    return out


@pytest.fixture(scope="module")
def long_runs():
    configs = _draw_configs()
    start = time.perf_counter()
    with ThreadPoolExecutor() as pool:
        runs = list(pool.map(
            lambda i: sim.simulate(*configs[i], SIM_DURATION, SIM_SEED_BASE + i), range(len(configs))
        ))
    elapsed = time.perf_counter() - start
    return configs, runs, elapsed


def test_criterion_6_simulator_agreement(record, long_runs):
    configs, runs, sim_time = long_runs
    start = time.perf_counter()
    misses, wide, occ_bad = [], [], []
    worst_width = 0.0
    for i, ((cfg, pol), est) in enumerate(zip(configs, runs)):
        pi, ref = ctmc.solve(cfg, pol)
        label = f"#{i}(k={cfg.k},B={cfg.buffer_size},a={cfg.alpha})"
        for name, got, half, want in (("c2", est.c2_hat, est.ci2, ref.c2), ("c3", est.c3_hat, est.ci3, ref.c3)):
            if abs(got - want) > half:
                misses.append(f"{label} {name} off by {abs(got - want) / half:.2f} hw")
            width = half / want
            worst_width = max(worst_width, width)
            if width > 0.01:
                wide.append(f"{label} {name} hw {width:.2%}")
        for state, p, occ, half in zip(pi.states, pi.pi, est.occupancy, est.occupancy_ci):
            if abs(occ - p) > 3 * half:
                occ_bad.append(f"{label} pi{state}")
    elapsed = sim_time + time.perf_counter() - start
    passed = not misses and not wide and not occ_bad and elapsed < 120
    detail = (f"10 configs x 1e6 s: (c2, c3) inside 95% CI {20 - len(misses)}/20, "
              f"max half-width {worst_width:.2%} <= 1%, occupancy within 3 hw: {not occ_bad}, {elapsed:.1f}s < 120s")
    if misses or wide or occ_bad:
        detail += "; " + ", ".join(misses + wide + occ_bad)
    record(6, passed, detail)
    assert passed


def test_criterion_7_region_shapes(record):
    notes = []
    dominance = True
    for k in (3, 10):
        cmp = region.compare_buffers(SwitchConfig(k), SwitchConfig(k, buffer_size=2), 0.05)
        dominance &= region.frontier_dominates(cmp.b2.frontier_array(), cmp.b1.frontier_array())
    notes.append(f"B=2 dominates B=1 at k=3,10: {dominance}")

    ratios_ok = True
    for b in (1, 2):
        ratios = [region.sweep(SwitchConfig(k, buffer_size=b), 0.05, region.default_engine(SwitchConfig(k, buffer_size=b))).areas.ratio
                  for k in (3, 10, 50)]
        ratios_ok &= ratios[0] > ratios[1] > ratios[2]
        notes.append(f"B={b} area ratio k=3/10/50: " + "/".join(f"{r:.4f}" for r in ratios))

    decay_ok = True
    for b in (1, 2):
        engine = "analytic" if b == 1 else "ctmc"
        for alpha in (0.1, 0.5):
            shrink = []
            for k in (3, 10):
                clean = region.sweep(SwitchConfig(k, buffer_size=b), 0.05, engine).frontier_array()
                noisy = region.sweep(SwitchConfig(k, 1.0, alpha, b), 0.05, engine).frontier_array()
                decay_ok &= region.frontier_dominates(clean, noisy, tol=1e-12, strict=True)
                shrink.append(1 - region.frontier_area(noisy) / region.frontier_area(clean))
            decay_ok &= 0 < shrink[1] < shrink[0]
            notes.append(f"B={b} alpha={alpha} shrinkage k=3 {shrink[0]:.3f} > k=10 {shrink[1]:.3f}")

    passed = dominance and ratios_ok and decay_ok
    record(7, passed, "; ".join(notes))
    assert passed


def test_criterion_8_conservation_and_determinism(record, long_runs):
    configs, runs, _ = long_runs
    gaps = [est.final.accounting_gap() for est in runs]
    short = [
        (SwitchConfig(k, mu, a, b), PolicyParams(r1 if b == 1 else 0.0, r2, r3))
        for k, mu, a, b, r1, r2, r3 in itertools.product(
            [3, 7], [1.0, 3.0], [0.0, 0.8], [1, 2], [0.0, 0.6], [0.0, 0.5, 1.0], [0.0, 1.0]
        )
    ]
    for i, (cfg, pol) in enumerate(short):
        gaps.append(sim.simulate(cfg, pol, 300.0, i).final.accounting_gap())
    accounting = all(g == 0 for g in gaps)

    identical = True
    for (cfg, pol), est, i in zip(configs[:3], runs[:3], range(3)):
        again = sim.simulate(cfg, pol, SIM_DURATION, SIM_SEED_BASE + i)
        identical &= again == est and again.final == est.final
    cfg, pol = configs[0]
    identical &= sim.replicate(cfg, pol, 1e3, 4, 9) == sim.replicate(cfg, pol, 1e3, 4, 9)

    worst = 0.0
    solves = 0
    for k, mu, alpha in itertools.product([3, 4, 5, 10, 50], [1.0, 2.5], [0.0, 0.1, 0.5]):
        for b in (1, 2):
            r1_values = GRID5 if b == 1 else [0.0]
            for r1, r2, r3 in itertools.product(r1_values, GRID5, GRID5):
                chain = ctmc.build_chain(SwitchConfig(k, mu, alpha, b), PolicyParams(r1, r2, r3))
                worst = max(worst, ctmc.solve_stationary(chain).residual)
                solves += 1
    passed = accounting and identical and worst <= 1e-12
    record(8, passed, f"accounting gap 0 on {len(gaps)}/{len(gaps)} runs: {accounting}; "
           f"same seed bit-identical: {identical}; max |pi Q| residual {worst:.1e} <= 1e-12 over {solves} solves")
    assert passed
