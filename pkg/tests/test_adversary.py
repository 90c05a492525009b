from fractions import Fraction as F

import pytest

from gathersim.adversary import (
    AdaptiveThm6,
    AdversaryError,
    AsyncIC,
    ObliviousExplicit,
    ObliviousGenerated,
    PerRobot,
    ScheduleUnderrunError,
    TauBounded,
    adversary_from_descriptor,
    next_delays_oblivious,
)
from gathersim.analysis import looks_see_midmove
from gathersim.engine import Budgets, LOOK, RobotSpec, run
from gathersim.policies import Oracle, ThreeChoice
from gathersim.rational import spawn_rng

BIG = F(10 ** 9)


def test_explicit_lookup_and_underrun():
    adv = ObliviousExplicit({0: [(F(1), F(0)), (F(0), F(0))], 1: [(F(2), F(1))]})
    assert next_delays_oblivious(adv, 0, 0) == (F(1), F(0))
    assert next_delays_oblivious(adv, 1, 0) == (F(2), F(1))
    with pytest.raises(ScheduleUnderrunError):
        next_delays_oblivious(adv, 1, 1)
    with pytest.raises(ScheduleUnderrunError):
        next_delays_oblivious(adv, 7, 0)


def test_tau_bounded_respects_bound_and_purity():
    tau = F(1)
    adv = TauBounded(tau, seed=77)
    for robot in (0, 1):
        for cycle in range(5000):
            w, c = adv.next_delays(robot, cycle)
            assert w >= 0 and c >= 0
            assert tau < w + c <= 2 * tau
    # pure function of (robot, cycle, seed)
    assert adv.next_delays(0, 17) == TauBounded(tau, seed=77).next_delays(0, 17)
    assert adv.next_delays(0, 17) != TauBounded(tau, seed=78).next_delays(0, 17)


def test_tau_bounded_fixed_sum():
    adv = TauBounded(F(1, 2), seed=3, fixed_sum=F(13, 20))
    for cycle in range(200):
        w, c = adv.next_delays(1, cycle)
        assert w + c == F(13, 20)
    with pytest.raises(AdversaryError):
        TauBounded(F(1), seed=0, fixed_sum=F(1))


def test_async_ic_zero_compute():
    adv = AsyncIC(F(0), F(3), seed=5)
    for cycle in range(1000):
        w, c = adv.next_delays(0, cycle)
        assert c == 0 and F(0) <= w <= F(3)


def test_generated_constant_and_uniform():
    const = ObliviousGenerated("constant", {"w": "1/4", "c": "0"}, 0)
    assert const.next_delays(0, 9) == (F(1, 4), F(0))
    uni = ObliviousGenerated("uniform", {"w_lo": "0", "w_hi": "1",
                                         "c_lo": "1/8", "c_hi": "1/4"}, 11)
    w, c = uni.next_delays(1, 3)
    assert F(0) <= w <= F(1) and F(1, 8) <= c <= F(1, 4)
    assert uni.next_delays(1, 3) == uni.next_delays(1, 3)


def test_oblivious_independence_from_algorithm_randomness():
    # Two runs with different policy seeds see identical (W, C) sequences.
    specs = [RobotSpec(0, F(0), F(1)), RobotSpec(1, F(1), F(1))]
    adv = TauBounded(F(1, 10), seed=123)
    budgets = Budgets(20, BIG)
    tr_a = run(specs, {0: ThreeChoice(), 1: ThreeChoice()}, adv, 1, budgets)
    tr_b = run(specs, {0: ThreeChoice(), 1: ThreeChoice()}, adv, 2, budgets)
    for rid in (0, 1):
        pairs_a = [(s.wait, s.compute) for s in tr_a.runs[rid].segments if s.lam is not None]
        pairs_b = [(s.wait, s.compute) for s in tr_b.runs[rid].segments if s.lam is not None]
        n = min(len(pairs_a), len(pairs_b))
        assert n > 2
        assert pairs_a[:n] == pairs_b[:n]


def test_per_robot_composite():
    adv = PerRobot({0: ObliviousGenerated("constant", {"w": "0", "c": "0"}, 0),
                    1: TauBounded(F(1), seed=4)})
    assert adv.next_delays(0, 5) == (F(0), F(0))
    w, c = adv.next_delays(1, 5)
    assert w + c > 1


def test_adversary_descriptor_roundtrip():
    advs = [
        ObliviousExplicit({0: [(F(1), F(0))], 1: [(F(1, 2), F(1, 4))]}),
        ObliviousGenerated("uniform", {"w_lo": "0", "w_hi": "1",
                                       "c_lo": "0", "c_hi": "0"}, 9),
        TauBounded(F(1, 10), seed=2, fixed_sum=F(13, 100)),
        AsyncIC(F(0), F(2), seed=8),
        PerRobot({0: AsyncIC(F(0), F(1), seed=1), 1: TauBounded(F(1), seed=2)}),
        AdaptiveThm6({0: F(2), 1: F(1)}),
    ]
    for adv in advs:
        clone = adversary_from_descriptor(adv.descriptor())
        assert clone.descriptor() == adv.descriptor()


# ----------------------------------------------------------------------
# Adaptive strategy (hand-solved instance)


def thm6_run(policy0, policy1, looks=12, w0=F(2), w1=F(1)):
    # Paper's frame: the robot that waits longer starts at distance 1,
    # the early looker at 0.
    specs = [RobotSpec(0, F(1), F(1)), RobotSpec(1, F(0), F(1))]
    adv = AdaptiveThm6({0: w0, 1: w1})
    return run(specs, {0: policy0, 1: policy1}, adv, spawn_rng("thm6-unit"),
               Budgets(looks, BIG)), adv


def test_adaptive_first_delay_matches_hand_solution():
    # delta=1, W1(0)=2, W2(0)=1, lambda drawn 1/2: feasible C in (1/2, 1),
    # midpoint 3/4, so the move runs on (7/4, 9/4) and the other robot's
    # look at t=2 sees the mover at 1/4.
    tr, _ = thm6_run(Oracle([F(1), F(0), F(1, 2)] * 4), Oracle([F(1, 2)] + [F(1)] * 8),
                     looks=4)
    seg = tr.runs[1].segments[0]
    assert seg.compute == F(3, 4)
    assert (seg.move_start, seg.move_end) == (F(7, 4), F(9, 4))
    look0 = next(e for e in tr.events if e.kind == LOOK and e.robot_id == 0)
    assert look0.time == F(2)
    assert look0.payload["observed"] == (F(1, 4),)


def test_adaptive_straddles_committed_next_look():
    # Continuing the instance: whatever delay is chosen for the late
    # robot's first cycle, the early robot's committed next look falls
    # strictly inside the resulting move interval.
    tr, _ = thm6_run(Oracle([F(1), F(1, 2), F(1, 2)] * 4), Oracle([F(1, 2)] + [F(1)] * 8),
                     looks=6)
    ok, violations = looks_see_midmove(tr)
    assert ok, violations
    seg0 = tr.runs[0].segments[0]
    next_look_1 = tr.runs[1].segments[1].look_time
    assert seg0.move_start < next_look_1 < seg0.move_end


def test_adaptive_lambda_zero_forces_immediate_relook():
    # lambda=0 -> (C, W_next) = (0, 0): the robot re-looks at the same
    # instant and draws again.
    tr, _ = thm6_run(Oracle([F(1)] * 6, ), Oracle([F(1, 2), F(0), F(0), F(1, 2)] + [F(1)] * 4),
                     looks=8)
    segs = tr.runs[1].segments
    # The zero draw zeroes the current compute and the next wait, so the
    # robot's next two looks land at the very same instant.
    assert segs[1].lam == F(0) and segs[1].compute == F(0)
    assert segs[2].lam == F(0) and segs[2].wait == F(0) and segs[2].compute == F(0)
    assert segs[3].wait == F(0)
    assert segs[1].look_time == segs[2].look_time == segs[3].look_time


def test_adaptive_never_gathers_small_batch():
    for seed in range(25):
        specs = [RobotSpec(0, F(1), F(1)), RobotSpec(1, F(0), F(1))]
        adv = AdaptiveThm6({0: F(2), 1: F(1)})
        tr = run(specs, {0: ThreeChoice(), 1: ThreeChoice()}, adv,
                 spawn_rng("thm6-batch", seed), Budgets(60, BIG))
        ok, violations = looks_see_midmove(tr)
        assert not tr.gathered
        assert ok, (seed, violations)


def test_adaptive_requires_distinct_waits():
    with pytest.raises(AdversaryError):
        AdaptiveThm6({0: F(1), 1: F(1)})
