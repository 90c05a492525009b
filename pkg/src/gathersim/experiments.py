"""Runnable constructions of the theorem-style experiments.

Each scenario mode maps to one trial function here; the CLI fans trials
out and pools the outcomes.  The acceptance suite drives the same
functions directly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import geometry
from .adversary import (
    AdaptiveThm6,
    ObliviousExplicit,
    ObliviousGenerated,
    PerRobot,
    TauBounded,
    adversary_from_descriptor,
)
from .analysis import (
    is_mid_move,
    looks_see_midmove,
    segment_attempts,
    segment_phases,
)
from .engine import (
    DECIDE_GATHERED,
    LOOK,
    MOVE_END,
    MOVE_START,
    Budgets,
    RobotSpec,
    Trace,
    position_at,
    run,
)
from .geometry import add, scale, sqdist, sub, unit_from_slope
from .multirobot import (
    Configuration,
    Entity,
    merge_positions,
    line_gather_step,
    reduce_to_line,
)
from .policies import (
    Deterministic,
    Oracle,
    TauTriple,
    ThreeChoice,
    gather_lambda_oracle,
    policy_from_descriptor,
    OPPOSITE_DIRECTIONS,
    SAME_DIRECTION,
)
from .rational import ONE, ZERO, derive_seed, parse_rat, rat_sqrt, spawn_rng, u01

_BIG_TIME = Fraction(10 ** 9)


@dataclass
class TrialOutcome:
    """Per-trial result row plus pooled statistic contributions."""

    trial: int
    gathered: bool
    total_looks: int
    n_attempts: int | None = None
    n_phases: int | None = None
    first_gather_time: Fraction | None = None
    attempt_outcomes: tuple = ()
    phase_looks: tuple = ()
    attempts_per_phase: tuple = ()
    k_value: int | None = None
    flags: dict = field(default_factory=dict)
    trace: Trace | None = None


def first_gather_time(trace: Trace) -> Fraction | None:
    if not trace.gathered:
        return None
    for e in trace.events:
        if e.kind == DECIDE_GATHERED:
            return e.time
    return None


def _segment_contributions(trace: Trace):
    attempts = segment_attempts(trace)
    phases = segment_phases(attempts)
    outcomes = tuple(a.successful for a in attempts if a.complete)
    ph_looks = []
    ph_sizes = []
    for ph in phases:
        if ph.terminal and all(a.complete for a in ph.attempts):
            ph_looks.append(ph.total_looks)
            ph_sizes.append(len(ph.attempts))
    return len(attempts), len(phases), outcomes, tuple(ph_looks), tuple(ph_sizes)


# ----------------------------------------------------------------------
# Generic two-robot scenario trials


def two_robot_trial(scn, trial: int) -> TrialOutcome:
    if scn.schedule_variants:
        variant = scn.schedule_variants[trial // scn.trials]
        adv_desc = variant
    else:
        adv_desc = scn.adversary
    adversary = adversary_from_descriptor(adv_desc, derive_seed(scn.master_seed, trial, "adv"))
    policies = {spec.id: policy_from_descriptor(scn.policies[scn.policy_bindings[spec.id]])
                for spec in scn.robots}
    trace = run(scn.robots, policies, adversary,
                spawn_rng(scn.master_seed, trial, "alg"), scn.budgets)
    out = TrialOutcome(
        trial=trial,
        gathered=trace.gathered,
        total_looks=sum(trace.look_count.values()),
        first_gather_time=first_gather_time(trace),
        trace=trace,
    )
    if scn.analysis.get("segment_attempts"):
        (out.n_attempts, out.n_phases, out.attempt_outcomes,
         out.phase_looks, out.attempts_per_phase) = _segment_contributions(trace)
    if scn.schedule_variants:
        out.flags["variant"] = trial // scn.trials
    return out


# ----------------------------------------------------------------------
# SSYNC halving (deterministic lambda = 1/2, alternating single activation)


def ssync_schedule(activations: int, delta: Fraction = ONE,
                   round_gap: Fraction = Fraction(10)):
    """Explicit schedules realizing alternating single activation.

    Activation k happens at time round_gap * k and is performed by robot
    k mod 2; moves (each at most delta long) finish well inside the gap.
    """
    waits = {0: [], 1: []}
    last_end = {0: ZERO, 1: ZERO}
    dist = delta
    for k in range(activations):
        rid = k % 2
        t_look = round_gap * k
        waits[rid].append((t_look - last_end[rid], ZERO))
        travel = dist / 2
        last_end[rid] = t_look + travel
        dist = dist / 2
    for rid in (0, 1):  # spare entries so cycle entry after the last move works
        waits[rid].extend([(round_gap * (activations + 4), ZERO)] * 2)
    return waits


def ssync_trial(scn, trial: int) -> TrialOutcome:
    activations = int(scn.params.get("activations", 51))
    delta = parse_rat(scn.params.get("delta", "1"))
    specs = [RobotSpec(0, delta, ONE), RobotSpec(1, ZERO, ONE)]
    adversary = ObliviousExplicit(ssync_schedule(activations, delta))
    policies = {0: Deterministic(Fraction(1, 2)), 1: Deterministic(Fraction(1, 2))}
    trace = run(specs, policies, adversary, spawn_rng(scn.master_seed, trial, "alg"),
                Budgets(activations, _BIG_TIME))
    looks = [e for e in trace.events if e.kind == LOOK]
    ok = len(looks) == activations
    for k, e in enumerate(looks):
        seen = abs(e.payload["observed"][0] - e.payload["own"])
        if seen != delta / (2 ** k) or seen == 0:
            ok = False
            break
    return TrialOutcome(trial=trial, gathered=trace.gathered,
                        total_looks=sum(trace.look_count.values()),
                        flags={"halving_ok": ok, "activations": activations},
                        trace=trace)


# ----------------------------------------------------------------------
# Catch scenarios: the chooser's move coincides with the mover mid-flight


def catch_setup(alpha: Fraction, geometry_kind: str, lam,
               distance: Fraction = ONE):
    """Robots, policies and schedule for one catch scenario.

    Robot 0 is the pre-committed mover with speed ``alpha`` (relative to
    the choosing robot 1).  ``lam`` is the chooser's drawn magnitude; the
    paper's value lands robot 1 exactly on robot 0 mid-move.  In the
    same-direction variant the chooser flees, so the lambda-class value is
    the negated magnitude.
    """
    d = distance
    dormant = 1000 * d
    if geometry_kind == OPPOSITE_DIRECTIONS:
        mover = RobotSpec(0, d, alpha)
        chooser = RobotSpec(1, ZERO, ONE)
        mover_script = [ONE, ONE, ZERO]
        chooser_script = [lam, ZERO, ZERO]
    elif geometry_kind == SAME_DIRECTION:
        mover = RobotSpec(0, -d, alpha)
        chooser = RobotSpec(1, ZERO, ONE)
        chase = 2 * alpha / (alpha - 1)
        mover_script = [chase, ONE, ZERO]
        chooser_script = [-lam, ZERO, ZERO]
    else:
        raise ValueError(f"unknown geometry {geometry_kind!r}")
    schedules = {
        0: [(ZERO, ZERO)] * 4,
        1: [(ZERO, ZERO), (ZERO, ZERO), (dormant, ZERO), (dormant, ZERO)],
    }
    specs = [mover, chooser]
    policies = {0: Oracle(mover_script), 1: Oracle(chooser_script)}
    return specs, policies, ObliviousExplicit(schedules)


def catch_trial(alpha: Fraction, geometry_kind: str, lam=None) -> Trace:
    """One catch-scenario run; the oracle value when ``lam`` is None."""
    oracle = lam is None
    if oracle:
        lam = gather_lambda_oracle(alpha, geometry_kind)
    specs, policies, adversary = catch_setup(alpha, geometry_kind, lam)
    budgets = Budgets(6 if oracle else 4, _BIG_TIME)
    return run(specs, policies, adversary, random.Random(0), budgets)


def thm3_trial(scn, trial: int) -> TrialOutcome:
    configs = _thm3_configs(scn)
    per = 1 + int(scn.params["random_draws"])
    alpha, geometry_kind = configs[trial // per]
    inner = trial % per
    lam = None if inner == 0 else u01(spawn_rng(scn.master_seed, trial, "lam"))
    trace = catch_trial(alpha, geometry_kind, lam)
    decides = sum(1 for e in trace.events if e.kind == DECIDE_GATHERED)
    return TrialOutcome(trial=trial, gathered=trace.gathered,
                        total_looks=sum(trace.look_count.values()),
                        first_gather_time=first_gather_time(trace),
                        flags={"oracle": inner == 0, "decides": decides},
                        trace=trace)


def _thm3_configs(scn):
    opp = [parse_rat(a) for a in scn.params.get("opposite_alphas", [])]
    same = [parse_rat(a) for a in scn.params.get("same_alphas", [])]
    return ([(a, OPPOSITE_DIRECTIONS) for a in opp]
            + [(a, SAME_DIRECTION) for a in same])


def thm3_total_trials(scn) -> int:
    return len(_thm3_configs(scn)) * (1 + int(scn.params["random_draws"]))


# ----------------------------------------------------------------------
# One uncontrolled robot (zero wait, zero delay, fixed lambda repetition)


def repeat_count_general(bound: Fraction, delta: Fraction, ratio: Fraction) -> int:
    """Smallest k with delta * (1 - ratio**k) > bound (gap-shrink ratio)."""
    if not 0 < bound < delta:
        raise ValueError("requires 0 < bound < delta")
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    k = 1
    while delta * (1 - ratio ** k) <= bound:
        k += 1
    return k


def halving_count(trace: Trace, mover: int, other: int) -> int | None:
    """Index of the mover's first look that catches the other mid-move."""
    other_run = trace.runs[other]
    idx = 0
    for e in trace.events:
        if e.kind != LOOK or e.robot_id != mover:
            continue
        if is_mid_move(other_run, e.time):
            return idx
        idx += 1
    return None


def thm4_trial(scn, trial: int) -> TrialOutcome:
    alphas = [parse_rat(a) for a in scn.params["alphas"]]
    alpha = alphas[trial // scn.trials] if len(alphas) > 1 else alphas[0]
    delta = parse_rat(scn.params.get("delta", "1"))
    tau = parse_rat(scn.params["tau"])
    fixed = parse_rat(scn.params["fixed_sum"])
    adversary = PerRobot({
        0: ObliviousGenerated("constant", {"w": "0", "c": "0"}, 0),
        1: TauBounded(tau, derive_seed(scn.master_seed, trial, "adv"), fixed),
    })
    specs = [RobotSpec(0, ZERO, ONE), RobotSpec(1, delta, alpha)]
    policies = {0: Deterministic(1 / (alpha + 1)), 1: TauTriple()}
    trace = run(specs, policies, adversary,
                spawn_rng(scn.master_seed, trial, "alg"), scn.budgets)
    return TrialOutcome(trial=trial, gathered=trace.gathered,
                        total_looks=sum(trace.look_count.values()),
                        first_gather_time=first_gather_time(trace),
                        k_value=halving_count(trace, 0, 1),
                        flags={"alpha_index": trial // scn.trials if len(alphas) > 1 else 0},
                        trace=trace)


def thm4_total_trials(scn) -> int:
    return scn.trials * len(scn.params["alphas"])


# ----------------------------------------------------------------------
# Adaptive impossibility runs


def thm6_trial(scn, trial: int) -> TrialOutcome:
    w_first = parse_rat(scn.params.get("w_first", "2"))
    w_second = parse_rat(scn.params.get("w_second", "1"))
    delta = parse_rat(scn.params.get("delta", "1"))
    specs = [RobotSpec(0, delta, ONE), RobotSpec(1, ZERO, ONE)]
    adversary = AdaptiveThm6({0: w_first, 1: w_second})
    policies = {0: ThreeChoice(), 1: ThreeChoice()}
    trace = run(specs, policies, adversary,
                spawn_rng(scn.master_seed, trial, "alg"), scn.budgets)
    ok, violations = looks_see_midmove(trace)
    return TrialOutcome(trial=trial, gathered=trace.gathered,
                        total_looks=sum(trace.look_count.values()),
                        flags={"midmove_ok": ok, "violations": len(violations)},
                        trace=trace)


# ----------------------------------------------------------------------
# Lemma-1 equivalence: native 1D run against an independent 2D run


def _run_line_2d(starts, speeds, schedules, scripts, offsets, line, budgets):
    """Independent event-driven 2D simulator for two robots on a line.

    Destinations are proposed off the line and projected back onto it, so
    the projection operation itself is exercised.  Returns the event
    stream [(time, kind, robot_id)] and a position query function.
    """
    p1, p2 = line
    tie = {LOOK: 0, MOVE_END: 1, MOVE_START: 2}
    st = {}
    for rid in (0, 1):
        st[rid] = {
            "pos": starts[rid], "speed": speeds[rid], "phase": "waiting",
            "cycle": 0, "look": schedules[rid][0][0], "ms": ZERO, "me": ZERO,
            "origin": starts[rid], "dest": starts[rid], "cursor": 0,
            "segments": [],
        }
    events = []
    looks_done = 0
    status = None

    def pos_of(s, t):
        if s["phase"] == "moving":
            if t <= s["ms"]:
                return s["origin"]
            if t >= s["me"]:
                return s["dest"]
            span = rat_sqrt(sqdist(s["dest"], s["origin"]))
            frac = (t - s["ms"]) * s["speed"] / span
            return add(s["origin"], scale(sub(s["dest"], s["origin"]), frac))
        return s["pos"]

    while True:
        pending = []
        for rid, s in st.items():
            if s["phase"] == "done":
                continue
            if s["phase"] == "waiting":
                pending.append(((s["look"], LOOK), rid))
            elif s["phase"] == "computing":
                pending.append(((s["ms"], MOVE_START), rid))
            else:
                pending.append(((s["me"], MOVE_END), rid))
        if not pending:
            status = "GATHERED"
            break
        ((t, kind), rid) = min(pending, key=lambda p: (p[0][0], tie[p[0][1]], p[1]))
        if t > budgets.max_time:
            status = "TIME"
            break
        s = st[rid]
        o = st[1 - rid]
        if kind == LOOK:
            if looks_done >= budgets.max_total_looks:
                status = "LOOKS"
                break
            looks_done += 1
            events.append((t, LOOK, rid))
            obs = pos_of(o, t)
            if obs == s["pos"]:
                events.append((t, DECIDE_GATHERED, rid))
                s["segments"].append((t, t, s["pos"], s["pos"]))
                s["phase"] = "done"
                continue
            lam = scripts[rid][s["cursor"]]
            off = offsets[rid][s["cursor"]]
            s["cursor"] += 1
            on_line = add(s["pos"], scale(sub(obs, s["pos"]), lam))
            normal = (p2[1] - p1[1], p1[0] - p2[0])
            proposal = add(on_line, scale(normal, off))
            dest = geometry.project_point_to_line(proposal, p1, p2)
            compute = schedules[rid][s["cycle"]][1]
            s["dest"] = dest
            s["origin"] = s["pos"]
            s["ms"] = t + compute
            s["me"] = s["ms"] + rat_sqrt(sqdist(dest, s["pos"])) / speeds[rid]
            s["segments"].append((s["ms"], s["me"], s["origin"], dest))
            s["phase"] = "computing"
        elif kind == MOVE_START:
            events.append((t, MOVE_START, rid))
            s["phase"] = "moving"
        else:
            events.append((t, MOVE_END, rid))
            s["pos"] = s["dest"]
            s["cycle"] += 1
            s["look"] = t + schedules[rid][s["cycle"]][0]
            s["phase"] = "waiting"

    def query(rid, t):
        pos = starts[rid]
        for ms, me, origin, dest in st[rid]["segments"]:
            if t <= ms:
                return pos  # resting; pos equals this segment's origin
            if t < me:
                span = rat_sqrt(sqdist(dest, origin))
                frac = (t - ms) * speeds[rid] / span
                return add(origin, scale(sub(dest, origin), frac))
            pos = dest
        return pos

    return events, query, status


def lemma1_trial(scn, trial: int) -> TrialOutcome:
    """Compare a native 1D run with an independently simulated 2D run.

    The 2D frame has a rational unit direction, so on-line distances and
    travel durations stay rational and the comparison is exact.
    """
    cycles = int(scn.params.get("cycles", 5))
    rng = spawn_rng(scn.master_seed, trial, "lemma1")
    slope = Fraction(rng.randrange(-6, 7), rng.randrange(1, 7))
    u = unit_from_slope(slope)
    base = (Fraction(rng.randrange(-80, 81), 4), Fraction(rng.randrange(-80, 81), 4))
    delta = Fraction(rng.randrange(1, 33), 8)
    p1 = base
    p2 = add(base, scale(u, delta))
    speeds = {0: ONE, 1: Fraction(rng.randrange(1, 4))}

    n = 2 * cycles + 2
    schedules = {rid: [(Fraction(rng.randrange(0, 17), 8), Fraction(rng.randrange(0, 9), 8))
                       for _ in range(n)] for rid in (0, 1)}

    def draw_lam():
        r = rng.randrange(5)
        if r == 0:
            return ONE
        if r == 1:
            return Fraction(1, 2)
        if r == 2:
            return -Fraction(rng.randrange(1, 5), 8)
        if r == 3:
            return Fraction(rng.randrange(9, 16), 8)
        return u01(rng)

    scripts = {rid: [draw_lam() for _ in range(n)] for rid in (0, 1)}
    offsets = {rid: [Fraction(rng.randrange(-8, 9), 4) for _ in range(n)]
               for rid in (0, 1)}
    budgets = Budgets(2 * cycles, _BIG_TIME)

    # Native 1D: midpoint frame in true distance units, robot 0 at +delta/2.
    specs = [RobotSpec(0, delta / 2, speeds[0]), RobotSpec(1, -delta / 2, speeds[1])]
    policies = {0: Oracle(list(scripts[0])), 1: Oracle(list(scripts[1]))}
    trace = run(specs, policies, ObliviousExplicit(schedules), random.Random(0), budgets)

    events2, query2, _status = _run_line_2d(
        {0: p1, 1: p2}, speeds, schedules, scripts, offsets, (p1, p2), budgets)

    ev1 = [(e.time, e.kind, e.robot_id) for e in trace.events]
    equal = ev1 == events2
    if equal:
        for t, _kind, _rid in ev1:
            d1 = abs(position_at(trace.runs[0], t) - position_at(trace.runs[1], t))
            d2 = rat_sqrt(sqdist(query2(0, t), query2(1, t)))
            if d1 != d2:
                equal = False
                break
    return TrialOutcome(trial=trial, gathered=equal,
                        total_looks=sum(trace.look_count.values()),
                        flags={"events": len(ev1), "equal": equal},
                        trace=trace)


# ----------------------------------------------------------------------
# Multi-robot pipeline


def random_plane_config(rng: random.Random, n: int) -> Configuration:
    pts = set()
    while len(pts) < n:
        pts.add((Fraction(rng.randrange(-160, 161), 16),
                 Fraction(rng.randrange(-160, 161), 16)))
    return Configuration([Entity(p) for p in sorted(pts)])


def engineered_tie_config(scale_num: int = 1) -> Configuration:
    """16 robots forming 8 exactly-tied farthest pairs (rational 16-gon)."""
    slopes = [Fraction(0), Fraction(1, 5), Fraction(2, 5), Fraction(2, 3),
              Fraction(1), Fraction(3, 2), Fraction(12, 5), Fraction(5)]
    pts = []
    for t in slopes:
        u = unit_from_slope(t)
        pts.append(scale(u, Fraction(scale_num)))
        pts.append(scale(u, Fraction(-scale_num)))
    return Configuration([Entity(p) for p in pts])


def multirobot_trial(scn, trial: int) -> TrialOutcome:
    n = int(scn.params.get("n", 8))
    rng = spawn_rng(scn.master_seed, trial, "mr")
    cfg = random_plane_config(rng, n)
    red = reduce_to_line(cfg, rng, max_tie_rounds=int(scn.params.get("max_tie_rounds", 200)))
    flags = {"tie_rounds": red.tie_rounds, "partial": red.partial}
    if red.partial:
        return TrialOutcome(trial=trial, gathered=False, total_looks=0, flags=flags)
    cfg = red.config
    flags["collinear"] = cfg.is_collinear()
    merge_rounds = 0
    while len(cfg.entities) > 2:
        cfg = line_gather_step(cfg)
        merge_rounds += 1
    flags["merge_rounds"] = merge_rounds
    looks = 0
    if len(cfg.entities) == 2:
        e1, e2 = cfg.entities
        # Two entities left: hand over to the continuous engine in the
        # scaled line frame (e1 at +1, e2 at -1; collocation is scale-free).
        specs = [RobotSpec(0, ONE, ONE), RobotSpec(1, -ONE, ONE)]
        adversary = TauBounded(Fraction(1, 5), derive_seed(scn.master_seed, trial, "adv"))
        policies = {0: TauTriple(), 1: TauTriple()}
        tr = run(specs, policies, adversary,
                 spawn_rng(scn.master_seed, trial, "alg"), scn.budgets)
        looks = sum(tr.look_count.values())
        if not tr.gathered:
            flags["engine_gathered"] = False
            return TrialOutcome(trial=trial, gathered=False, total_looks=looks, flags=flags)
        s = position_at(tr.runs[0], tr.horizon)
        m = scale(add(e1.pos, e2.pos), Fraction(1, 2))
        meet = add(m, scale(sub(e1.pos, m), s))
        cfg = merge_positions([(meet, e1.multiplicity + e2.multiplicity)])
    single = len(cfg.entities) == 1 and cfg.entities[0].multiplicity == n
    return TrialOutcome(trial=trial, gathered=single, total_looks=looks, flags=flags)


def engineered_tie_trial(master_seed, trial: int, max_rounds: int = 30) -> int | None:
    """Rounds until the 8-way tie resolves; None if max_rounds was not enough."""
    rng = spawn_rng(master_seed, trial, "tie")
    red = reduce_to_line(engineered_tie_config(), rng, max_tie_rounds=max_rounds)
    return None if red.partial else red.tie_rounds


# ----------------------------------------------------------------------
# Dispatch

TRIAL_RUNNERS = {
    "two_robot": two_robot_trial,
    "ssync": ssync_trial,
    "thm3_oracle": thm3_trial,
    "thm4": thm4_trial,
    "thm6": thm6_trial,
    "lemma1": lemma1_trial,
    "multirobot": multirobot_trial,
}


def total_trials(scn) -> int:
    if scn.mode == "thm3_oracle":
        return thm3_total_trials(scn)
    if scn.mode == "thm4":
        return thm4_total_trials(scn)
    if scn.schedule_variants:
        return scn.trials * len(scn.schedule_variants)
    return scn.trials


def run_one_trial(scn, trial: int) -> TrialOutcome:
    return TRIAL_RUNNERS[scn.mode](scn, trial)
