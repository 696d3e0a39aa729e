"""End-to-end acceptance criteria; each prints one PASS/FAIL line."""

import time
from collections import Counter
from fractions import Fraction as F

import pytest

from ppcdstab import wdtmc as W
from ppcdstab.bench import ExperimentConfig, gen_case_study, gen_experiment, gen_random_wdtmc, symmetric_case_study
from ppcdstab.exactnum import Vec2Q
from ppcdstab.geom2d import Diverge, Hit, Ray, Sector, Stuck, continuous_step, ray_hit
from ppcdstab.ppcd import analyze_chain, build_quotient, simulate_concrete, weight_conservation_check

from conftest import ACCEPTANCE_LINES
from oracles import absolute_oracle, edge_multiset, stationary_oracle

SEEDS = range(10)
EXPECTED = {1: (True, True), 2: (False, True), 3: (False, False)}


def verdict_line(label: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def case_studies():
    return [
        gen_case_study(symmetric_case_study([[1]] * 4)),
        gen_case_study(symmetric_case_study([[2, F(1, 3)], [1, 5], [F(1, 2)], [3, F(1, 4)]])),
        gen_case_study(
            symmetric_case_study([[4, F(1, 2)], [1], [F(2, 3), 1], [1]], [[F(1, 10), F(9, 10)], [1], [F(1, 2), F(1, 2)], [1]])
        ),
    ]


# -- 1: Table 1 verdicts ---------------------------------------------------------------


@pytest.fixture(scope="module")
def table_runs():
    runs = {}
    t0 = time.perf_counter()
    for exp in (1, 2, 3):
        for seed in SEEDS:
            model = gen_experiment(ExperimentConfig(exp, locs_per_region=12, seed=seed))
            assert len(model.locations) == 96
            c0 = time.process_time()
            chain = build_quotient(model)
            runs[exp, seed] = analyze_chain(chain, time.process_time() - c0)
    return runs, time.perf_counter() - t0


def _describe(a):
    w = a.absolute.witness
    ew = a.almost_sure.witness
    parts = []
    if isinstance(w, W.PositiveCycle):
        parts.append(f"cycle product {float(w.product.ratio):.4g}")
    if isinstance(ew, W.EffectiveWeight):
        parts.append(f"effective weight {ew.float_log:.4g} (exact sign {ew.sign})")
    return ", ".join(parts) or "no witness"


@pytest.mark.parametrize("exp", [1, 2, 3])
def test_criterion_1_table_verdicts(table_runs, exp):
    runs, _ = table_runs
    got = {s: (runs[exp, s].absolute.convergent, runs[exp, s].almost_sure.convergent) for s in SEEDS}
    hits = [s for s in SEEDS if got[s] == EXPECTED[exp]]
    yes = {True: "Yes", False: "No"}
    dissent = "; ".join(
        f"seed {s} gave ({yes[got[s][0]]},{yes[got[s][1]]}) with {_describe(runs[exp, s])}" for s in SEEDS if s not in hits
    )
    want = f"({yes[EXPECTED[exp][0]]},{yes[EXPECTED[exp][1]]})"
    verdict_line(
        f"criterion 1 experiment {exp}",
        len(hits) >= 9,
        f"{want} on {len(hits)}/10 seeds (need 9)" + (f"; dissent: {dissent}" if dissent else ""),
    )


def test_criterion_1_runtime(table_runs):
    _, wall = table_runs
    verdict_line("criterion 1 runtime", wall < 300, f"30 runs in {wall:.1f} s (limit 300 s)")


def test_criterion_1_construction_dominates(table_runs):
    runs, _ = table_runs
    build = sum(a.timings["build"] for a in runs.values())
    check = sum(a.timings["absolute"] + a.timings["almost_sure"] for a in runs.values())
    verdict_line(
        "criterion 1 construction dominates checks",
        build > check,
        f"quotient construction {build:.2f} s vs checks {check:.2f} s of processor time",
    )


# -- 2: absolute convergence against simple-cycle enumeration ---------------------------------


def test_criterion_2_absolute_oracle():
    disagreements, verdicts = [], Counter()
    for seed in range(100):
        chain = gen_random_wdtmc(1 + seed % 8, [F(1, 4), F(1, 2), F(1)][seed % 3], seed)
        got = W.check_absolute(chain).convergent
        verdicts[got] += 1
        if got != absolute_oracle(chain):
            disagreements.append(seed)
    verdict_line(
        "criterion 2",
        not disagreements and len(verdicts) == 2,
        f"{len(disagreements)} disagreements on 100 chains ({verdicts[True]} convergent, {verdicts[False]} not)",
    )


# -- 3: stationary distribution exactness ------------------------------------------------------


def test_criterion_3_stationary_exact():
    chains = [gen_random_wdtmc(1 + s % 8, F(1, 2), s) for s in range(100)]
    chains += [build_quotient(gen_experiment(ExperimentConfig(e, locs_per_region=4, seed=s))) for e in (1, 2) for s in range(3)]
    chains += [build_quotient(m) for m in case_studies()]
    bad = 0
    for c in chains:
        rho = W.stationary_distribution(c)
        P = W.transition_matrix(c)
        residual = [sum(rho[i] * P[i, j] for i in range(c.n)) - rho[j] for j in range(c.n)]
        if any(residual) or sum(rho) != 1 or (c.n <= 8 and list(rho) != stationary_oracle(c)):
            bad += 1
    verdict_line("criterion 3", bad == 0, f"{len(chains)} irreducible chains, {bad} with nonzero residual or mass error")


# -- 4: limiting-distribution decay ------------------------------------------------------------


def test_criterion_4_decay():
    failures = []
    worst = 0.0
    for seed in range(20):
        chain = W.lazy(gen_random_wdtmc(5, F(1, 2), seed))
        devs = [d for _, d in W.convergence_rate_probe(chain, 64)]
        worst = max(worst, devs[63])
        monotone = all(b <= a for a, b in zip(devs[7:], devs[8:]))
        if not (devs[63] < 1e-6 and monotone):
            failures.append(seed)
    verdict_line("criterion 4", not failures, f"20 lazy 5-state chains, worst deviation at n=64 {worst:.2e}, failing seeds {failures}")


# -- 5: Monte-Carlo average versus effective weight ----------------------------------------


def test_criterion_5_monte_carlo():
    rows, bad = [], []
    seed = 0
    while len(rows) < 10:
        chain = gen_random_wdtmc(3 + seed % 4, F(1, 2), seed)
        ew = W.effective_weight(chain, W.stationary_distribution(chain))
        if ew.cmp != 0:
            stats = W.average_step_weight(chain, W.sample_path(chain, 100_000, seed))
            within = abs(stats.partial_average - stats.target) <= 3 * stats.std_error
            sign_ok = (stats.partial_average > 0) - (stats.partial_average < 0) == ew.cmp
            z = (stats.partial_average - stats.target) / stats.std_error
            rows.append(f"{seed}:{z:+.2f}")
            if not (within and sign_ok):
                bad.append(seed)
        seed += 1
    verdict_line("criterion 5", not bad, f"10 chains, z-scores {' '.join(rows)}, failing seeds {bad}")


# -- 6: weight conservation ----------------------------------------------------------------------


def test_criterion_6_conservation():
    trials = passed = 0
    models = case_studies() + [gen_experiment(ExperimentConfig(e, seed=s)) for e in (1, 2) for s in (0, 1)]
    per = [200, 200, 200, 100, 100, 100, 100]
    for i, (m, n) in enumerate(zip(models, per)):
        rep = weight_conservation_check(m, 50, n, seed=1000 * i)
        trials += len(rep.trials)
        passed += rep.passed
    verdict_line("criterion 6", trials == 1000 and passed == trials, f"{passed}/{trials} trials with exactly equal weights")


# -- 7: point independence -----------------------------------------------------------------------


def test_criterion_7_point_independence():
    models = case_studies() + [gen_experiment(ExperimentConfig(e, locs_per_region=6, seed=3)) for e in (1, 2, 3)]
    mismatches = 0
    for m in models:
        base_q = build_quotient(m)
        base = analyze_chain(base_q)
        start = m.location(m.initial[0]).invariant.facet(m.initial[1]).dir
        ref = simulate_concrete(m, start, 100, seed=17)
        for alpha in (F(1, 3), F(2), F(7, 5)):
            run = simulate_concrete(m, start.scaled(alpha), 100, seed=17)
            q = build_quotient(m, probe=alpha)
            a = analyze_chain(q)
            same = (
                run.step_scales == ref.step_scales
                and q == base_q
                and a.absolute == base.absolute
                and a.almost_sure.decision == base.almost_sure.decision
            )
            mismatches += not same
    verdict_line("criterion 7", mismatches == 0, f"{len(models)} models x alpha in {{1/3, 2, 7/5}}, {mismatches} mismatches")


# -- 8: geometry unit truths ---------------------------------------------------------------------


def test_criterion_8_geometry():
    X, Y = Ray(1, 0), Ray(0, 1)
    q1 = Sector(X, Y)
    checks = [
        ray_hit(X, Vec2Q(-1, 1), Y) == (1, 1),
        ray_hit(X, Vec2Q(-1, 2), Y) == (1, 2),
        ray_hit(X, Vec2Q(1, 1), Y) is None,
        continuous_step(q1, X, Vec2Q(-1, 1)) == Hit(Y, F(1), True, F(1)),
        isinstance(continuous_step(q1, X, Vec2Q(1, 1)), Diverge),
        isinstance(continuous_step(q1, X, Vec2Q(1, -1)), Stuck),
    ]
    verdict_line("criterion 8", all(checks), f"{sum(checks)}/6 exact geometry examples hold")


# -- 9: path decomposition -----------------------------------------------------------------------


def test_criterion_9_decomposition():
    bad = 0
    for i in range(1000):
        chain = gen_random_wdtmc(1 + i % 8, F(1, 2), i // 8)
        path = W.sample_path(chain, 1 + (i * 37) % 120, i)
        d = W.decompose_path(chain, path)
        ok = len(set(d.spine)) == len(d.spine)
        ok &= all(c[0] == c[-1] and len(set(c[:-1])) == len(c) - 1 for c in d.cycles)
        parts = edge_multiset(d.spine)
        for c in d.cycles:
            parts += edge_multiset(c)
        ok &= parts == edge_multiset(path)
        total = W.path_weight(chain, d.spine)
        for c in d.cycles:
            total = total * W.path_weight(chain, c)
        ok &= total == W.path_weight(chain, path)
        bad += not ok
    verdict_line("criterion 9", bad == 0, f"1000 random paths, {bad} violations")
