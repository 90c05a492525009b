import math
import random
from fractions import Fraction as F

import pytest

from oracles import brute_force_attempts, brute_max_distance

from gathersim.adversary import ObliviousExplicit, TauBounded
from gathersim.analysis import (
    AttemptRecord,
    PhaseRecord,
    aggregate,
    binomial_halfwidth_3sigma,
    classify_success,
    geometric_repeat_count,
    max_distance_from,
    segment_attempts,
    segment_phases,
    theorem5_bound,
)
from gathersim.engine import Budgets, RobotSpec, run
from gathersim.policies import Deterministic, Oracle, TauTriple, ThreeChoice
from gathersim.rational import spawn_rng

BIG = F(10 ** 9)


def two_bots(x0="0", x1="1"):
    return [RobotSpec(0, F(x0), F(1)), RobotSpec(1, F(x1), F(1))]


def explicit(s0, s1):
    return ObliviousExplicit({0: [(F(w), F(c)) for w, c in s0],
                              1: [(F(w), F(c)) for w, c in s1]})


# ----------------------------------------------------------------------
# max_distance_from


def test_max_distance_idle_robots():
    tr = run(two_bots(), {0: Deterministic(F(0)), 1: Deterministic(F(0))},
             explicit([(1, 0)] * 4, [(1, 0)] * 4), 0, Budgets(4, BIG))
    assert max_distance_from(tr, F(0)) == F(1)
    assert max_distance_from(tr, tr.horizon) == F(1)


def test_max_distance_ignores_crossing_dip():
    # Robots cross (distance hits zero mid-move) then separate again: the
    # crossing dip must not show up in the future maximum.
    specs = two_bots()
    tr = run(specs, {0: Oracle([F(3, 2), F(0)]), 1: Oracle([F(1), F(0)])},
             explicit([(1, 0), (10, 0), (60, 0)], [(1, 0), (10, 0), (60, 0)]),
             0, Budgets(4, BIG))
    # robot 0: 0 -> 3/2, robot 1: 1 -> 0; they cross, final gap 3/2.
    t_after = max(s.move_end for rr in tr.runs.values() for s in rr.segments[:1])
    assert max_distance_from(tr, t_after) == F(3, 2)
    mid = F(1, 2) + F(1, 10)
    assert max_distance_from(tr, mid) >= F(3, 2) - F(1)  # sanity: positive
    assert brute_max_distance(tr, t_after) == max_distance_from(tr, t_after)


def test_max_distance_monotone_approach():
    tr = run(two_bots(), {0: Deterministic(F(1)), 1: Deterministic(F(0))},
             explicit([(1, 0)] * 3, [(9, 0)] * 3), 0, Budgets(3, BIG))
    assert max_distance_from(tr, F(0)) == F(1)
    assert max_distance_from(tr, F(2)) == F(0)


def test_max_distance_nonincreasing_property():
    specs = two_bots()
    adv = TauBounded(F(1, 10), seed=6)
    tr = run(specs, {0: TauTriple(), 1: TauTriple()}, adv,
             spawn_rng("dist-prop"), Budgets(40, BIG))
    grid = sorted({e.time for e in tr.events})
    values = [max_distance_from(tr, t) for t in grid]
    assert all(a >= b for a, b in zip(values, values[1:]))
    for t in grid[::3]:
        assert max_distance_from(tr, t) == brute_max_distance(tr, t)


# ----------------------------------------------------------------------
# classify_success / segment_phases


def attempt(before, after):
    return AttemptRecord(look_pair=((0, 0, F(0)), (1, 0, F(0))),
                         all_looks_in_window=2, window=(F(0), F(1)),
                         max_dist_before=F(before), max_dist_after=F(after),
                         successful=2 * F(after) <= F(before), complete=True)


def test_classify_success_boundary():
    assert classify_success(attempt(1, F(1, 2))) is True   # boundary counts
    assert classify_success(attempt(1, F(3, 5))) is False
    assert classify_success(attempt(1, 0)) is True


def test_segment_phases_shapes():
    seq = [attempt(1, 1), attempt(1, 1), attempt(1, 0), attempt(1, 0), attempt(1, 1)]
    phases = segment_phases(seq)
    assert [len(p.attempts) for p in phases] == [3, 1, 1]
    assert [p.terminal for p in phases] == [True, True, False]
    assert segment_phases([]) == []
    solo = segment_phases([attempt(1, 0)])
    assert len(solo) == 1 and solo[0].terminal
    with pytest.raises(ValueError):
        PhaseRecord(attempts=[], total_looks=0, terminal=False)


# ----------------------------------------------------------------------
# segment_attempts


def test_attempts_symmetric_simultaneous():
    tr = run(two_bots(), {0: Deterministic(F(1, 2)), 1: Deterministic(F(1, 2))},
             explicit([(1, 0)] * 3, [(1, 0)] * 3), 0, Budgets(6, BIG))
    attempts = segment_attempts(tr)
    assert len(attempts) == 1
    (a_ref, b_ref) = attempts[0].look_pair
    assert {a_ref[:2], b_ref[:2]} == {(0, 0), (1, 0)}
    assert attempts[0].all_looks_in_window == 2
    assert attempts[0].successful  # they gather: after-distance 0


def test_attempts_zero_lambda_relooks_take_latest():
    # The later mover is robot 0 (moves at t=1); robot 1 looked three
    # times at one instant (two zero-lambda re-looks), and only its third
    # look joins the pair; the window holds 4 looks in total.
    specs = two_bots()
    sched0 = [(1, 0), (9, 0), (9, 0)]
    sched1 = [(F(1, 10), 0), (0, 0), (0, 0), (5, 0), (9, 0)]
    adv = ObliviousExplicit({0: [(F(w), F(c)) for w, c in sched0],
                             1: [(F(w), F(c)) for w, c in sched1]})
    tr = run(specs, {0: Oracle([F(1, 2), F(0)]), 1: Oracle([F(0), F(0), F(1, 2), F(0)])},
             adv, 0, Budgets(6, BIG))
    attempts = segment_attempts(tr)
    assert attempts, "one full attempt expected"
    first = attempts[0]
    later, other = first.look_pair
    assert later[:2] == (0, 0)
    assert other[:2] == (1, 2)  # third look = cycle index 2
    assert first.all_looks_in_window == 4


def test_attempts_match_brute_force_on_random_short_runs():
    for seed in range(30):
        rng = spawn_rng("seg-fuzz", seed)
        specs = two_bots(x1="2")
        sched = {rid: [(F(rng.randrange(0, 9), 4), F(rng.randrange(0, 5), 8))
                       for _ in range(10)] for rid in (0, 1)}
        adv = ObliviousExplicit(sched)
        tr = run(specs, {0: ThreeChoice(), 1: ThreeChoice()}, adv,
                 spawn_rng("seg-fuzz-alg", seed), Budgets(8, BIG))
        for later_by in ("move_start", "move_end"):
            mine = segment_attempts(tr, later_by=later_by)
            ref = brute_force_attempts(tr, later_by=later_by)
            assert len(mine) == len(ref), (seed, later_by)
            for m, r in zip(mine, ref):
                assert m.look_pair[0] == r["later"]
                assert m.look_pair[1] == r["other"]
                assert m.window == r["window"]
                assert m.all_looks_in_window == r["looks"]
                assert m.max_dist_before == r["before"]
                assert m.max_dist_after == r["after"]
                assert m.successful == r["successful"]


def test_attempts_partition_look_counts():
    specs = two_bots()
    adv = TauBounded(F(1, 10), seed=9)
    tr = run(specs, {0: TauTriple(), 1: TauTriple()}, adv,
             spawn_rng("partition"), Budgets(60, BIG))
    attempts = segment_attempts(tr)
    phases = segment_phases(attempts)
    assert sum(p.total_looks for p in phases) == sum(a.all_looks_in_window for a in attempts)
    # windows tile: each attempt begins where the previous one ended
    for prev, nxt in zip(attempts, attempts[1:]):
        assert prev.window[1] == nxt.window[0]


def test_tau_triple_phase_halving():
    # Terminal phases at least halve the maximum distance.
    done = 0
    for seed in range(12):
        tr = run(two_bots(), {0: TauTriple(), 1: TauTriple()},
                 TauBounded(F(1, 10), seed=seed), spawn_rng("halve", seed),
                 Budgets(120, BIG))
        for ph in segment_phases(segment_attempts(tr)):
            if ph.terminal:
                first, last = ph.attempts[0], ph.attempts[-1]
                assert 2 * last.max_dist_after <= first.max_dist_before
                done += 1
    assert done > 10


# ----------------------------------------------------------------------
# aggregate / bounds


def test_aggregate_means_and_errors():
    t1 = run(two_bots(), {0: Deterministic(F(1, 2)), 1: Deterministic(F(1, 2))},
             explicit([(1, 0)] * 3, [(1, 0)] * 3), 0, Budgets(4, BIG))
    t2 = run(two_bots(), {0: Deterministic(F(1)), 1: Deterministic(F(1))},
             explicit([(1, 0)] * 3, [(1, 0)] * 3), 0, Budgets(2, BIG))
    rep = aggregate([t1, t2], segment=False)
    assert rep.mean_total_looks == 3.0  # looks 4 and 2
    assert rep.gathered_fraction == F(1, 2)
    assert rep.trials == 2
    with pytest.raises(ValueError):
        aggregate([])


def test_binomial_ci_covers_bernoulli():
    rng = random.Random(4)
    n = 10_000
    p = 2 / 9
    hits = sum(rng.random() < p for _ in range(n))
    half = binomial_halfwidth_3sigma(p, n)
    assert abs(half - 3 * math.sqrt(p * (1 - p) / n)) < 1e-12
    assert abs(hits / n - p) <= half


def test_theorem5_bound_values():
    assert theorem5_bound(F(1024), F(1)) == pytest.approx(198.0)
    assert theorem5_bound(F(1), F(1)) == pytest.approx(18.0)
    assert theorem5_bound(F(8), F(1)) == pytest.approx(72.0)
    assert theorem5_bound(F(1), F(2)) == 18.0  # clamped when delta < tau
    with pytest.raises(ValueError):
        theorem5_bound(F(0), F(1))


def test_geometric_repeat_count():
    d = F(1)
    assert geometric_repeat_count(F(2, 5), d) == 1
    assert geometric_repeat_count(F(3, 5), d) == 2
    assert geometric_repeat_count(F(99, 100), d) == 7
    # oracle: direct enumeration of the partial sums
    for gamma in (F(1, 10), F(1, 2), F(7, 10), F(15, 16)):
        k = geometric_repeat_count(gamma, d)
        assert d * (1 - F(1, 2 ** k)) > gamma
        assert k == 1 or d * (1 - F(1, 2 ** (k - 1))) <= gamma
    with pytest.raises(ValueError):
        geometric_repeat_count(F(1), F(1))
