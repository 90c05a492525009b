"""Schedulers that decide wait times and computation delays.

Oblivious kinds commit every (W, C) as a pure function of
(robot id, cycle index, adversary seed) before the run; the adaptive kind
re-plans after each look so that every later look catches the other robot
strictly mid-move.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .rational import (
    U01_DEN,
    ZERO,
    format_rat,
    parse_rat,
    spawn_rng,
    uniform_closed,
)


class AdversaryError(Exception):
    pass


class ScheduleUnderrunError(AdversaryError):
    """The adversary cannot supply the next (W, C) pair."""


class InfeasibleDelayError(AdversaryError):
    """The adaptive strategy found an empty feasible interval (engine bug)."""


class _Oblivious:
    """Base for schedulers whose pairs are precommitted."""

    adaptive = False

    def next_delays(self, robot_id: int, cycle: int) -> tuple[Fraction, Fraction]:
        raise NotImplementedError

    def wait_time(self, robot_id: int, cycle: int) -> Fraction:
        return self.next_delays(robot_id, cycle)[0]

    def computation_delay(self, robot_id, cycle, lam, world) -> Fraction:
        return self.next_delays(robot_id, cycle)[1]


@dataclass
class ObliviousExplicit(_Oblivious):
    """Literal per-robot (W, C) lists."""

    schedules: Mapping[int, Sequence[tuple[Fraction, Fraction]]]

    kind = "OBLIVIOUS_EXPLICIT"

    def next_delays(self, robot_id, cycle):
        try:
            seq = self.schedules[robot_id]
        except KeyError:
            raise ScheduleUnderrunError(f"no schedule for robot {robot_id}")
        if cycle >= len(seq):
            raise ScheduleUnderrunError(
                f"robot {robot_id} exhausted its {len(seq)}-entry schedule at cycle {cycle}"
            )
        w, c = seq[cycle]
        return (w, c)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "schedules": {
                str(rid): [[format_rat(w), format_rat(c)] for w, c in seq]
                for rid, seq in self.schedules.items()
            },
        }


@dataclass
class ObliviousGenerated(_Oblivious):
    """Seeded generator; each (W, C) is pure in (robot, cycle, seed).

    generator "uniform": W ~ U[w_lo, w_hi], C ~ U[c_lo, c_hi].
    generator "constant": W = w, C = c for every cycle.
    """

    generator: str
    params: dict
    seed: int

    kind = "OBLIVIOUS_GENERATED"

    def next_delays(self, robot_id, cycle):
        if self.generator == "constant":
            return (parse_rat(self.params["w"]), parse_rat(self.params["c"]))
        if self.generator == "uniform":
            rng = spawn_rng(self.seed, "wc", robot_id, cycle)
            w = uniform_closed(rng, parse_rat(self.params["w_lo"]), parse_rat(self.params["w_hi"]))
            c = uniform_closed(rng, parse_rat(self.params["c_lo"]), parse_rat(self.params["c_hi"]))
            return (w, c)
        raise AdversaryError(f"unknown generator {self.generator!r}")

    def descriptor(self) -> dict:
        return {"kind": self.kind, "generator": self.generator,
                "params": dict(self.params), "seed": self.seed}


@dataclass
class TauBounded(_Oblivious):
    """Every cycle satisfies W + C > tau.

    The sum is uniform on (tau, 2*tau] and the look offset W is uniform on
    [0, W+C]; both ranges are a bounded family chosen so expectations are
    finite.  ``fixed_sum`` pins W + C to a constant instead (it must still
    exceed tau).
    """

    tau: Fraction
    seed: int
    fixed_sum: Fraction | None = None

    kind = "TAU_BOUNDED"

    def __post_init__(self):
        if self.tau <= 0:
            raise AdversaryError("tau must be positive")
        if self.fixed_sum is not None and self.fixed_sum <= self.tau:
            raise AdversaryError("fixed_sum must exceed tau")

    def next_delays(self, robot_id, cycle):
        rng = spawn_rng(self.seed, "wc", robot_id, cycle)
        if self.fixed_sum is not None:
            total = self.fixed_sum
            rng.randrange(U01_DEN)  # keep stream alignment with the drawn-sum case
        else:
            total = self.tau * (1 + Fraction(rng.randrange(1, U01_DEN + 1), U01_DEN))
        w = uniform_closed(rng, ZERO, total)
        return (w, total - w)

    def descriptor(self) -> dict:
        d = {"kind": self.kind, "tau": format_rat(self.tau), "seed": self.seed}
        if self.fixed_sum is not None:
            d["fixed_sum"] = format_rat(self.fixed_sum)
        return d


@dataclass
class AsyncIC(_Oblivious):
    """Zero computation delay; waits drawn uniformly from [w_lo, w_hi]."""

    w_lo: Fraction
    w_hi: Fraction
    seed: int

    kind = "ASYNC_IC"

    def next_delays(self, robot_id, cycle):
        rng = spawn_rng(self.seed, "wc", robot_id, cycle)
        return (uniform_closed(rng, self.w_lo, self.w_hi), ZERO)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "w_lo": format_rat(self.w_lo),
                "w_hi": format_rat(self.w_hi), "seed": self.seed}


@dataclass
class PerRobot(_Oblivious):
    """Composite assigning a different oblivious scheduler to each robot."""

    parts: Mapping[int, _Oblivious]

    kind = "PER_ROBOT"

    def next_delays(self, robot_id, cycle):
        try:
            part = self.parts[robot_id]
        except KeyError:
            raise ScheduleUnderrunError(f"no scheduler for robot {robot_id}")
        return part.next_delays(robot_id, cycle)

    def descriptor(self) -> dict:
        return {"kind": self.kind,
                "robots": {str(rid): part.descriptor() for rid, part in self.parts.items()}}


def next_delays_oblivious(policy: _Oblivious, robot_id: int, cycle_index: int):
    """(W, C) of an oblivious scheduler; pure in (robot, cycle, seed)."""
    if getattr(policy, "adaptive", False):
        raise AdversaryError("adaptive adversaries have no precommitted delays")
    return policy.next_delays(robot_id, cycle_index)


@dataclass
class AdaptiveThm6:
    """Adaptive scheduler that prevents gathering of two equal-speed robots.

    After a robot's look (lambda now known) it picks the current computation
    delay so that the robot's move interval strictly straddles the other
    robot's already-committed next look, then commits the robot's next wait.
    Every look after the chronologically first one therefore observes the
    other robot strictly mid-move, so exact collocation is never seen.
    """

    initial_waits: Mapping[int, Fraction]
    _next_wait: dict = field(default_factory=dict, repr=False)

    kind = "ADAPTIVE_THM6"
    adaptive = True

    def __post_init__(self):
        waits = list(self.initial_waits.values())
        if len(waits) != 2 or waits[0] == waits[1]:
            raise AdversaryError("need two distinct initial waits")
        if any(w < 0 for w in waits):
            raise AdversaryError("waits must be non-negative")

    def wait_time(self, robot_id, cycle):
        if cycle == 0:
            return self.initial_waits[robot_id]
        try:
            return self._next_wait.pop((robot_id, cycle))
        except KeyError:
            raise InfeasibleDelayError(
                f"wait for robot {robot_id} cycle {cycle} was never committed"
            )

    def computation_delay(self, robot_id, cycle, lam, world):
        c, w_next = self.adaptive_decide(world, robot_id, lam)
        self._next_wait[(robot_id, cycle + 1)] = w_next
        return c

    def adaptive_decide(self, world, robot_id, lam) -> tuple[Fraction, Fraction]:
        """(C for this cycle, W for the next cycle) after robot_id's look."""
        if lam == 0:
            # Zero-length move: force an immediate re-look at the same instant.
            return (ZERO, ZERO)
        me = world.state(robot_id)
        other = world.other_state(robot_id)
        t = world.now
        other_look, other_pos_at_look = self._other_next_look(world, other)
        observed = other.position_at(t)
        dest = me.pos + lam * (observed - me.pos)
        if dest == me.pos:
            raise InfeasibleDelayError("robot looked at a collocated robot")
        travel = abs(dest - me.pos) / me.spec.speed

        # Move interval (t+C, t+C+travel) must strictly contain the other
        # robot's next look; C is additionally clamped to be non-negative.
        hi = other_look - t
        lo = other_look - t - travel
        if lo < 0:
            lo = ZERO
        if not lo < hi:
            raise InfeasibleDelayError(
                f"empty feasible delay interval ({lo}, {hi}) for robot {robot_id}"
            )
        c = lo + (hi - lo) / 2
        if self._my_pos_at(me, dest, t, c, other_look) == other_pos_at_look:
            # Only a single delay value puts us exactly on the other robot at
            # its look; any other interior point avoids the coincidence.
            c = lo + (hi - lo) / 4
        return (c, Fraction(1))

    def _other_next_look(self, world, other):
        """The other robot's committed next look time and resting position."""
        if other.phase == "waiting":
            return other.look_time, other.pos
        if other.phase == "moving":
            w_next = self._next_wait.get((other.spec.id, other.cycle + 1))
            if w_next is None:
                raise InfeasibleDelayError("other robot's next wait is not committed")
            return other.move_end + w_next, other.dest
        raise InfeasibleDelayError(f"unexpected phase {other.phase!r} at a look")

    @staticmethod
    def _my_pos_at(me, dest, t, c, when):
        """Looking robot's position at ``when`` if its move starts at t + c."""
        travel = abs(dest - me.pos) / me.spec.speed
        elapsed = when - t - c
        if elapsed <= 0:
            return me.pos
        if elapsed >= travel:
            return dest
        step = me.spec.speed * elapsed
        return me.pos + step if dest > me.pos else me.pos - step

    def descriptor(self) -> dict:
        return {"kind": self.kind,
                "initial_waits": {str(rid): format_rat(w)
                                  for rid, w in self.initial_waits.items()}}


AdversaryPolicy = (
    ObliviousExplicit | ObliviousGenerated | TauBounded | AsyncIC | PerRobot | AdaptiveThm6
)


def adversary_from_descriptor(desc: dict, seed: int | None = None) -> AdversaryPolicy:
    """Instantiate a fresh adversary from its serializable descriptor.

    ``seed`` overrides the descriptor's seed, letting the runner derive a
    per-trial stream while the file stays static.
    """
    kind = desc.get("kind")
    if kind == "OBLIVIOUS_EXPLICIT":
        return ObliviousExplicit({
            int(rid): [(parse_rat(w), parse_rat(c)) for w, c in seq]
            for rid, seq in desc["schedules"].items()
        })
    if kind == "OBLIVIOUS_GENERATED":
        return ObliviousGenerated(desc["generator"], dict(desc["params"]),
                                  seed if seed is not None else desc.get("seed", 0))
    if kind == "TAU_BOUNDED":
        fixed = desc.get("fixed_sum")
        return TauBounded(parse_rat(desc["tau"]),
                          seed if seed is not None else desc.get("seed", 0),
                          parse_rat(fixed) if fixed is not None else None)
    if kind == "ASYNC_IC":
        return AsyncIC(parse_rat(desc["w_lo"]), parse_rat(desc["w_hi"]),
                       seed if seed is not None else desc.get("seed", 0))
    if kind == "PER_ROBOT":
        return PerRobot({int(rid): adversary_from_descriptor(sub, seed)
                         for rid, sub in desc["robots"].items()})
    if kind == "ADAPTIVE_THM6":
        return AdaptiveThm6({int(rid): parse_rat(w)
                             for rid, w in desc["initial_waits"].items()})
    raise AdversaryError(f"unknown adversary kind {kind!r}")
