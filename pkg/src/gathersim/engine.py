"""Continuous-time exact execution of wait-look-compute-move robots on a line.

The run is event driven: each robot's pending event (LOOK, MOVE_START or
MOVE_END) is fully determined by its committed cycle, so the loop always
advances to the earliest pending event.  Simultaneous events are ordered
LOOK before MOVE_END before MOVE_START, ties within a kind by robot id; a
robot is stationary at exactly its move end, and "in the move state" means
the open interval (move_start, move_end).

All quantities are Fractions, so a look either observes the other robot at
exactly the observer's position (the gathering decision fires, even for a
robot crossing mid-move) or it does not.

Motion is rigid: a robot always reaches its computed destination within
the cycle.  Non-rigid motion is not simulated; once the remaining distance
drops below the minimum-travel guarantee it degenerates to the rigid case
anyway, so rigid runs cover the regime the analysis depends on.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import geometry
from .adversary import ScheduleUnderrunError
from .policies import LambdaPolicy, destination
from .rational import ZERO, Rat

LOOK = "LOOK"
MOVE_START = "MOVE_START"
MOVE_END = "MOVE_END"
DECIDE_GATHERED = "DECIDE_GATHERED"

GATHERED = "GATHERED"
LOOK_BUDGET_EXHAUSTED = "LOOK_BUDGET_EXHAUSTED"
TIME_BUDGET_EXHAUSTED = "TIME_BUDGET_EXHAUSTED"

# Processing order for simultaneous events.
_KIND_TIE = {LOOK: 0, MOVE_END: 1, MOVE_START: 2}


class DegenerateLineError(ValueError):
    """The two reference positions coincide; no line is defined."""


@dataclass(frozen=True)
class RobotSpec:
    """Static robot parameters; speed is constant for the whole run."""

    id: int
    start: Fraction
    speed: Fraction
    policy_ref: str = ""

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("speed must be positive")


@dataclass(frozen=True)
class Budgets:
    max_total_looks: int
    max_time: Fraction

    def __post_init__(self):
        if self.max_total_looks <= 0 or self.max_time <= 0:
            raise ValueError("budgets must be positive")


@dataclass
class CycleSegment:
    """One committed cycle: wait, look, compute delay, rigid move.

    ``lam`` is None for the final cycle in which the robot decided it had
    gathered; such a cycle has a zero-length move interval at the look
    instant and the robot never moves again.
    """

    cycle: int
    wait: Fraction
    look_time: Fraction
    compute: Fraction
    lam: Fraction | None
    move_start: Fraction
    move_end: Fraction
    origin: Fraction
    destination: Fraction


@dataclass(frozen=True)
class Event:
    time: Fraction
    robot_id: int
    kind: str
    payload: dict


@dataclass(frozen=True)
class Snapshot:
    """Anonymous instantaneous positions of all other robots."""

    time: Fraction
    observer_id: int
    observed: tuple[Fraction, ...]


@dataclass
class RobotRun:
    """A robot's committed cycle history over one run."""

    spec: RobotSpec
    segments: list[CycleSegment]
    gathered_at: Fraction | None = None
    horizon: Fraction = ZERO
    _move_starts: list[Fraction] = field(default_factory=list, repr=False)

    def finalize(self, horizon: Fraction) -> None:
        self.horizon = horizon
        self._move_starts = [seg.move_start for seg in self.segments]


@dataclass
class Trace:
    """Totally ordered event log with exact timestamps and positions."""

    events: list[Event]
    runs: dict[int, RobotRun]
    final_status: str
    look_count: dict[int, int]
    horizon: Fraction

    @property
    def robot_ids(self) -> list[int]:
        return sorted(self.runs)

    @property
    def gathered(self) -> bool:
        return self.final_status == GATHERED


def position_at(run: RobotRun, t: Fraction) -> Fraction:
    """Exact position at time t: linear inside a move, constant elsewhere."""
    if t < 0 or t > run.horizon:
        raise ScheduleUnderrunError(f"t={t} outside simulated horizon [0, {run.horizon}]")
    i = bisect_right(run._move_starts, t) - 1
    if i < 0:
        return run.segments[0].origin if run.segments else run.spec.start
    seg = run.segments[i]
    if t >= seg.move_end:
        return seg.destination
    step = run.spec.speed * (t - seg.move_start)
    return seg.origin + step if seg.destination > seg.origin else seg.origin - step


def observe(trace: Trace, observer_id: int, t: Fraction) -> Snapshot:
    """Snapshot an observer takes at one of its look instants."""
    run = trace.runs[observer_id]
    if not any(seg.look_time == t for seg in run.segments):
        raise ValueError(f"t={t} is not a look instant of robot {observer_id}")
    observed = tuple(sorted(
        position_at(trace.runs[rid], t) for rid in trace.runs if rid != observer_id
    ))
    return Snapshot(time=t, observer_id=observer_id, observed=observed)


class _LiveRobot:
    """Mutable per-run robot state driving the event loop."""

    __slots__ = ("spec", "policy", "segments", "phase", "cycle", "pos", "wait",
                 "look_time", "move_start", "move_end", "origin", "dest", "lam",
                 "look_count", "gathered_at")

    def __init__(self, spec: RobotSpec, policy: LambdaPolicy):
        self.spec = spec
        self.policy = policy
        self.segments: list[CycleSegment] = []
        self.phase = "waiting"
        self.cycle = 0
        self.pos = spec.start
        self.wait = ZERO
        self.look_time = ZERO
        self.move_start = ZERO
        self.move_end = ZERO
        self.origin = spec.start
        self.dest = spec.start
        self.lam: Fraction | None = None
        self.look_count = 0
        self.gathered_at: Fraction | None = None

    def enter_cycle(self, cycle: int, start: Fraction, adversary) -> None:
        self.cycle = cycle
        self.wait = adversary.wait_time(self.spec.id, cycle)
        if self.wait < 0:
            raise ValueError("adversary produced a negative wait")
        self.look_time = start + self.wait
        self.phase = "waiting"

    def next_event(self) -> tuple[Fraction, str]:
        if self.phase == "waiting":
            return self.look_time, LOOK
        if self.phase == "computing":
            return self.move_start, MOVE_START
        return self.move_end, MOVE_END

    def commit_move(self, t: Fraction, compute: Fraction, lam: Fraction,
                    dest: Fraction) -> None:
        if compute < 0:
            raise ValueError("adversary produced a negative computation delay")
        self.lam = lam
        self.dest = dest
        self.origin = self.pos
        self.move_start = t + compute
        self.move_end = self.move_start + abs(dest - self.pos) / self.spec.speed
        self.segments.append(CycleSegment(
            cycle=self.cycle, wait=self.wait, look_time=t, compute=compute,
            lam=lam, move_start=self.move_start, move_end=self.move_end,
            origin=self.pos, destination=dest,
        ))
        self.phase = "computing"

    def decide_gathered(self, t: Fraction) -> None:
        self.segments.append(CycleSegment(
            cycle=self.cycle, wait=self.wait, look_time=t, compute=ZERO,
            lam=None, move_start=t, move_end=t, origin=self.pos,
            destination=self.pos,
        ))
        self.gathered_at = t
        self.phase = "done"

    def position_at(self, t: Fraction) -> Fraction:
        """Live position query; valid for t at or before the current event."""
        if self.phase == "moving":
            if t <= self.move_start:
                return self.origin
            if t >= self.move_end:
                return self.dest
            step = self.spec.speed * (t - self.move_start)
            return self.origin + step if self.dest > self.origin else self.origin - step
        return self.pos


class _World:
    """Read-only view handed to adaptive adversaries."""

    def __init__(self, states: dict[int, _LiveRobot]):
        self._states = states
        self.now = ZERO

    def state(self, robot_id: int) -> _LiveRobot:
        return self._states[robot_id]

    def other_state(self, robot_id: int) -> _LiveRobot:
        for rid, st in self._states.items():
            if rid != robot_id:
                return st
        raise KeyError(robot_id)


def run(robots: list[RobotSpec], policies: Mapping[int, LambdaPolicy],
        adversary, rng_seed, budgets: Budgets) -> Trace:
    """Execute one run and return its exact trace.

    The run ends GATHERED once every robot has decided it has gathered,
    or on the look/time budget otherwise.  It is a pure function of
    (robots, policies, adversary, rng_seed, budgets).
    """
    if len(robots) != 2:
        raise ValueError("the lambda-class destination rule is pairwise; "
                         "use the multirobot module for n > 2")
    if len({r.id for r in robots}) != len(robots):
        raise ValueError("robot ids must be distinct")
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)

    states = {spec.id: _LiveRobot(spec, policies[spec.id])
              for spec in sorted(robots, key=lambda s: s.id)}
    world = _World(states)
    for st in states.values():
        st.enter_cycle(0, ZERO, adversary)

    events: list[Event] = []
    looks_done = 0
    status = None

    while True:
        pending = [(st.next_event(), st.spec.id) for st in states.values()
                   if st.phase != "done"]
        if not pending:
            status = GATHERED
            break
        ((t, kind), rid) = min(pending, key=lambda p: (p[0][0], _KIND_TIE[p[0][1]], p[1]))
        if t > budgets.max_time:
            status = TIME_BUDGET_EXHAUSTED
            break
        st = states[rid]
        if kind == LOOK:
            if looks_done >= budgets.max_total_looks:
                status = LOOK_BUDGET_EXHAUSTED
                break
            looks_done += 1
            st.look_count += 1
            world.now = t
            other = world.other_state(rid)
            obs = other.position_at(t)
            events.append(Event(t, rid, LOOK,
                                {"cycle": st.cycle, "own": st.pos, "observed": (obs,)}))
            if obs == st.pos:
                st.decide_gathered(t)
                events.append(Event(t, rid, DECIDE_GATHERED,
                                    {"cycle": st.cycle, "position": st.pos}))
                continue
            lam = st.policy.sample(rng)
            dest = destination(st.pos, obs, lam)
            compute = adversary.computation_delay(rid, st.cycle, lam, world)
            st.commit_move(t, compute, lam, dest)
        elif kind == MOVE_START:
            events.append(Event(t, rid, MOVE_START,
                                {"cycle": st.cycle, "lam": st.lam,
                                 "destination": st.dest}))
            st.phase = "moving"
        else:  # MOVE_END
            events.append(Event(t, rid, MOVE_END,
                                {"cycle": st.cycle, "position": st.dest}))
            st.pos = st.dest
            st.enter_cycle(st.cycle + 1, t, adversary)

    horizon = events[-1].time if events else ZERO
    runs = {}
    look_count = {}
    for rid, st in states.items():
        rr = RobotRun(spec=st.spec, segments=st.segments, gathered_at=st.gathered_at)
        rr.finalize(horizon)
        runs[rid] = rr
        look_count[rid] = st.look_count
    return Trace(events=events, runs=runs, final_status=status,
                 look_count=look_count, horizon=horizon)


def gap(trace: Trace, cycle_index: int) -> Fraction:
    """Signed look-time gap L1(k) - L2(k) between the two robots."""
    first, second = trace.robot_ids
    try:
        l1 = trace.runs[first].segments[cycle_index].look_time
        l2 = trace.runs[second].segments[cycle_index].look_time
    except IndexError:
        raise LookupError(f"a robot has no look in cycle {cycle_index}")
    return l1 - l2


def project_scenario_to_line(positions_2d, destinations_2d) -> list[Rat]:
    """Project 2D destinations onto the line through the two positions.

    Coordinates are returned in the frame with the robots' midpoint as the
    origin and the first position on the positive axis at +1 (the unit is
    half the separation, which keeps every coordinate rational).
    """
    p1, p2 = positions_2d
    if tuple(p1) == tuple(p2):
        raise DegenerateLineError("initial positions coincide")
    return [geometry.line_coordinate(tuple(d), tuple(p1), tuple(p2))
            for d in destinations_2d]
