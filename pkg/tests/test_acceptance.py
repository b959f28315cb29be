"""Acceptance gate: every headline guarantee, checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Exact criteria use exact rational arithmetic; the statistical
ones use fixed seeds, fixed trial counts, and fixed thresholds.
"""

import time
from fractions import Fraction

from revsel.adversary import (
    adaptive_lower_bound_driver,
    gen_call_control_bad,
    gen_chain,
    gen_fork_pair,
    gen_greedy_bad,
    gen_greedy_tight,
    gen_random_instance,
    gen_random_order_bad,
    gen_random_order_bad_wide,
    gen_two_length,
)
from revsel.algorithms import ArbPolicy, ThresholdPolicy, ThresholdPolicyTables, make_policy
from revsel.core import (
    ArrivalSequence,
    Interval,
    call_control_point_bound,
    instance_stats,
    validate_solution,
)
from revsel.harness import (
    run_adversarial,
    run_arb_expectation,
    run_distributional,
    run_policy,
    run_random_order,
)
from revsel.oracle import opt_bruteforce, opt_unweighted, opt_weighted, verify_charging
from revsel.rng import Stream

SWEEP = 10_000
TRIALS = 10_000


def report(criterion: int, detail: str) -> None:
    print(f"[PASS] criterion {criterion}: {detail}")


def test_criterion_1_tight_two_length_instance():
    t0 = time.perf_counter()
    result = run_adversarial(make_policy("greedy-subsume"), gen_greedy_tight())
    elapsed = time.perf_counter() - t0
    assert result.alg_value == 1
    assert result.opt_value == 4
    assert result.ratio == 4 == 2 * instance_stats(gen_greedy_tight()).k
    assert elapsed < 0.1
    report(1, f"ALG=1 OPT=4 ratio=4 exactly ({elapsed * 1e3:.2f} ms)")


def test_criterion_2_adaptive_driver_desk_scale():
    policies = [
        "greedy-subsume",
        "always-replace",
        "never-replace",
        "call-control",
        "one-dir-left",
    ]
    t0 = time.perf_counter()
    for pid in policies:
        for k in (1, 2, 3, 4):
            t = adaptive_lower_bound_driver(k, make_policy(pid))
            assert len(t.final_solution) <= 1, (pid, k)
            assert len(t.opt_certificate) >= 2 * k, (pid, k)
            assert validate_solution(t.arrivals, t.opt_certificate), (pid, k)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    report(2, f"5 policies x k=1..4: solution<=1, certificate>=2k ({elapsed * 1e3:.0f} ms)")


def test_criterion_3_charging_bound_universal():
    t0 = time.perf_counter()
    policy = make_policy("greedy-subsume")
    worst = Fraction(0)
    for seed in range(SWEEP):
        meta = Stream.for_trial(seed, 3)
        n = 1 + meta.randbelow(50)
        seq = gen_random_instance(n, 1 + meta.randbelow(5), "unit", seed)
        state, transcript = run_policy(policy, seq)
        opt = opt_unweighted(seq)
        k = len(seq.lengths())
        verify_charging(seq, transcript, opt, k)  # raises on any bound breach
        alg = Fraction(len(state.ids))
        assert alg > 0
        ratio = opt.value / alg
        assert ratio <= 2 * k, (seed, ratio, k)
        worst = max(worst, ratio / (2 * k))
    elapsed = time.perf_counter() - t0
    assert elapsed < 600
    report(3, f"{SWEEP} instances: charges<=2k, ratio<=2k (worst ratio/(2k)={worst}) "
              f"({elapsed:.1f} s)")


def test_criterion_4_revocation_is_necessary():
    for K in (2, 5, 10):
        never = run_adversarial(make_policy("never-replace"), gen_two_length(K))
        assert never.ratio == K
        greedy = run_adversarial(make_policy("greedy-subsume"), gen_two_length(K))
        assert greedy.ratio == 1
    report(4, "never-replace ratio=K for K in {2,5,10}; greedy-subsume ratio=1")


def test_criterion_5_distributional_lottery():
    s1, s2, (p1, p2) = gen_fork_pair()
    rep = run_distributional(make_policy("greedy-subsume"), [(s1, p1), (s2, p2)])
    assert rep.expected_alg == Fraction(3, 2)
    assert rep.ratio == Fraction(4, 3)
    report(5, "E[ALG]=3/2 and ratio=4/3 exactly")


def test_criterion_6_ladder_instance():
    for k in (2, 3, 4):
        seq = gen_call_control_bad(k)
        bridge_id = len(seq) - 1
        cc = run_adversarial(make_policy("call-control"), seq)
        assert cc.final_solution == {bridge_id}, k
        greedy = run_adversarial(make_policy("greedy-subsume"), seq)
        assert len(greedy.final_solution) == 2 * k - 2, k
    report(6, "call-control ends {bridge}; greedy-subsume ends 2k-2, k in {2,3,4}")


def test_criterion_7_nested_pivot_instance():
    for k in (2, 3):
        seq = gen_greedy_bad(k)
        greedy = run_adversarial(make_policy("greedy-subsume"), seq)
        assert greedy.ratio == 2 * k, k
        cc = run_adversarial(make_policy("call-control"), seq)
        assert cc.ratio == 1, k
    report(7, "greedy-subsume ratio=2k; call-control ratio=1, k in {2,3}")


def test_criterion_8_random_order_two_competitiveness():
    t0 = time.perf_counter()
    threshold = Fraction(95, 100)
    two = Fraction(2)
    narrow = gen_random_order_bad(alpha=3, beta=4, m=100, L=10)
    for pid in ("always-replace", "never-replace"):
        stats = run_random_order(make_policy(pid), narrow, TRIALS, seed=8)
        frac = stats.fraction_with_ratio_exactly(two)
        assert frac >= threshold, (pid, frac)

    wide = gen_random_order_bad_wide(alpha=3, gamma=6, m=100, L=10)
    # replaces left for overlaps <= L/2 but keeps on the wide overlap
    blocked = ThresholdPolicy(
        ThresholdPolicyTables(left={6: 0}, left_default=1, right_default=0),
        name="one-dir-left-blocked",
    )
    # replaces left everywhere and also right on the wide overlap
    churn = ThresholdPolicy(
        ThresholdPolicyTables(left_default=1, right={6: 1}, right_default=0),
        name="one-dir-left-churn",
    )
    for policy in (blocked, churn):
        stats = run_random_order(policy, wide, TRIALS, seed=8)
        frac = stats.fraction_with_ratio_exactly(two)
        assert frac >= threshold, (policy.name, frac)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120
    report(8, f"4 configs x {TRIALS} trials all hit ratio 2 in >=95% "
              f"({elapsed:.1f} s)")


def _three_length_instance() -> ArrivalSequence:
    rows = [(0, 5), (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (6, 9), (9, 12)]
    return ArrivalSequence(Interval(i, s, e) for i, (s, e) in enumerate(rows))


def test_criterion_9_classify_wrapper_bound():
    t0 = time.perf_counter()
    for seq in (gen_two_length(5), _three_length_instance()):
        k = len(seq.lengths())
        assert k in (2, 3)
        opt = opt_unweighted(seq).value
        arb = run_arb_expectation(ArbPolicy("greedy-disjoint"), seq, TRIALS, seed=12)
        assert set(arb.length_choices) <= set(seq.lengths())  # choices stay in-domain
        se = arb.stats.alg_std() / TRIALS**0.5
        mean = float(arb.stats.mean_alg)
        assert mean >= float(opt) / (2 * k) - 3 * se, (k, mean, se)
        sigma = ((1 / k) * (1 - 1 / k) / TRIALS) ** 0.5
        for length in seq.lengths():
            freq = float(arb.choice_frequency(length))
            assert abs(freq - 1 / k) <= 3 * sigma, (k, length, freq)
    elapsed = time.perf_counter() - t0
    report(9, f"mean ALG >= OPT/(2k)-3SE and uniform 1/k choices, k in {{2,3}} "
              f"({elapsed:.1f} s)")


def test_criterion_10_oracle_equivalence():
    t0 = time.perf_counter()
    for seed in range(SWEEP):
        meta = Stream.for_trial(seed, 4)
        n = 1 + meta.randbelow(15)
        inst = gen_random_instance(n, 1 + meta.randbelow(5), "unit", seed)
        assert opt_bruteforce(inst).value == opt_unweighted(inst).value, seed
    for seed in range(SWEEP):
        meta = Stream.for_trial(seed, 5)
        n = 1 + meta.randbelow(15)
        inst = gen_random_instance(n, 1 + meta.randbelow(5), "rational", seed)
        assert opt_bruteforce(inst).value == opt_weighted(inst).value, seed
    elapsed = time.perf_counter() - t0
    assert elapsed < 600
    report(10, f"greedy and dp match brute force on {SWEEP} instances each "
               f"({elapsed:.1f} s)")


def test_criterion_11_structural_formulas():
    assert call_control_point_bound(1) == 8
    assert call_control_point_bound(2) == 32
    assert call_control_point_bound(3) == 128

    corpora = [
        gen_greedy_tight(),
        gen_two_length(6),
        gen_chain(5, 6, 2),
        gen_call_control_bad(3),
        gen_greedy_bad(3),
        gen_random_order_bad(3, 4, 10, 10),
        gen_random_order_bad_wide(3, 6, 10, 10),
    ] + [gen_random_instance(1 + s % 40, 1 + s % 5, "unit", s) for s in range(500)]
    for seq in corpora:
        stats = instance_stats(seq)  # d <= k-1 asserted inside
        assert stats.d <= stats.k - 1

    for pid in ("greedy-subsume", "always-replace"):
        for k in (2, 3, 4):
            t = adaptive_lower_bound_driver(k, make_policy(pid))
            for prev, nxt in zip(t.levels, t.levels[1:]):
                assert 4 * nxt.length <= prev.length + prev.overlap
    report(11, "2^(2k+1) point bound, d<=k-1 on all corpora, L'<=(L+v)/4 in drivers")
