"""Trace post-processing: maximum distances, attempt/phase segmentation,
and Monte Carlo statistics for the expectation bounds.

An *attempt* pairs the later-moving robot's look with the other robot's
latest look at or before that move; it is *successful* when the maximum
distance afterwards is at most half the maximum distance before.  A
*phase* is a maximal run of attempts ending at the first successful one.
"""

from __future__ import annotations

import math
import statistics
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction

from .engine import DECIDE_GATHERED, LOOK, RobotRun, Trace, position_at
from .rational import ZERO


def is_mid_move(run: RobotRun, t: Fraction) -> bool:
    """True when the robot is strictly inside a move at time t.

    Moves never overlap, so the only candidate is the latest segment whose
    move starts strictly before t.
    """
    i = bisect_left(run._move_starts, t) - 1
    if i < 0:
        return False
    seg = run.segments[i]
    return seg.move_start < t < seg.move_end


@dataclass
class AttemptRecord:
    # (robot_id, cycle, look_time) of the later mover's look, then of the
    # other robot's latest look at or before the later move.
    look_pair: tuple[tuple[int, int, Fraction], tuple[int, int, Fraction]]
    all_looks_in_window: int
    window: tuple[Fraction, Fraction]
    max_dist_before: Fraction
    max_dist_after: Fraction
    successful: bool
    complete: bool


@dataclass
class PhaseRecord:
    attempts: list[AttemptRecord]
    total_looks: int
    terminal: bool

    def __post_init__(self):
        if not self.attempts:
            raise ValueError("a phase holds at least one attempt")


@dataclass
class StatsReport:
    trials: int
    gathered_fraction: Fraction
    mean_total_looks: float
    mean_looks_per_phase: float | None
    mean_attempt_success_rate: float | None
    halfwidth_3sigma: dict[str, float]
    attempts_per_phase_hist: dict[int, int] = field(default_factory=dict)
    k_histogram: dict[int, int] = field(default_factory=dict)
    n_attempts: int = 0
    n_phases: int = 0


def _distance_profile(trace: Trace):
    """Breakpoint times, exact distances there, and suffix maxima.

    Positions are piecewise linear, so the inter-robot distance attains its
    supremum over any suffix at a move start/end or at the query time (the
    kinks of |x1-x2| away from those points are zero crossings, which are
    minima).
    """
    cached = getattr(trace, "_dist_profile", None)
    if cached is not None:
        return cached
    a, b = trace.robot_ids
    times = {ZERO, trace.horizon}
    for rid in (a, b):
        for seg in trace.runs[rid].segments:
            for t in (seg.move_start, seg.move_end):
                if t <= trace.horizon:
                    times.add(t)
    ts = sorted(times)
    ra, rb = trace.runs[a], trace.runs[b]
    dist = [abs(position_at(ra, t) - position_at(rb, t)) for t in ts]
    suffix = list(dist)
    for i in range(len(suffix) - 2, -1, -1):
        if suffix[i + 1] > suffix[i]:
            suffix[i] = suffix[i + 1]
    profile = (ts, dist, suffix)
    trace._dist_profile = profile
    return profile


def max_distance_from(trace: Trace, t: Fraction) -> Fraction:
    """Supremum of the inter-robot distance over [t, horizon], exactly."""
    if t < 0 or t > trace.horizon:
        raise ValueError(f"t={t} outside trace horizon [0, {trace.horizon}]")
    ts, _dist, suffix = _distance_profile(trace)
    a, b = trace.robot_ids
    here = abs(position_at(trace.runs[a], t) - position_at(trace.runs[b], t))
    i = bisect_left(ts, t)
    if i < len(ts) and suffix[i] > here:
        return suffix[i]
    return here


def classify_success(attempt: AttemptRecord) -> bool:
    """Successful iff the max distance after is at most half the one before."""
    return 2 * attempt.max_dist_after <= attempt.max_dist_before


def segment_attempts(trace: Trace, later_by: str = "move_start") -> list[AttemptRecord]:
    """Split a two-robot trace into attempts.

    ``later_by`` selects how "the robot which has moved later" is read:
    by move start (default: the instant the latest lambda choice becomes
    binding) or by move end.  A trailing stretch without a full pair of
    move cycles yields no attempt.
    """
    if later_by not in ("move_start", "move_end"):
        raise ValueError("later_by must be 'move_start' or 'move_end'")
    key = (lambda s: s.move_start) if later_by == "move_start" else (lambda s: s.move_end)
    a_id, b_id = trace.robot_ids
    segs = {rid: trace.runs[rid].segments for rid in (a_id, b_id)}
    look_times = sorted(e.time for e in trace.events if e.kind == LOOK)

    attempts: list[AttemptRecord] = []
    idx = {a_id: 0, b_id: 0}
    t_begin = ZERO
    while True:
        sa = segs[a_id][idx[a_id]] if idx[a_id] < len(segs[a_id]) else None
        sb = segs[b_id][idx[b_id]] if idx[b_id] < len(segs[b_id]) else None
        if sa is None or sb is None or sa.lam is None or sb.lam is None:
            break
        if key(sa) > key(sb):
            later_id, later_seg = a_id, sa
            other_id = b_id
        else:
            later_id, later_seg = b_id, sb
            other_id = a_id
        t = key(later_seg)
        other_segs = segs[other_id]
        j = idx[other_id]
        while (j + 1 < len(other_segs) and other_segs[j + 1].lam is not None
               and other_segs[j + 1].look_time <= t):
            j += 1
        other_seg = other_segs[j]

        t_end = max(later_seg.move_end, other_seg.move_end)
        if t_end > trace.horizon:
            break  # the window is not fully simulated
        lo = bisect_left(look_times, t_begin)
        hi = bisect_left(look_times, t_end)
        before = max_distance_from(trace, t_begin)
        after = max_distance_from(trace, t_end)
        complete = trace.gathered or _has_future_cycles(trace, segs, {
            later_id: idx[later_id] + 1, other_id: j + 1}, t_end)
        attempts.append(AttemptRecord(
            look_pair=((later_id, later_seg.cycle, later_seg.look_time),
                       (other_id, other_seg.cycle, other_seg.look_time)),
            all_looks_in_window=hi - lo,
            window=(t_begin, t_end),
            max_dist_before=before,
            max_dist_after=after,
            successful=2 * after <= before,
            complete=complete,
        ))
        idx[later_id] += 1
        idx[other_id] = j + 1
        t_begin = t_end
    return attempts


def _has_future_cycles(trace, segs, next_idx, t_end) -> bool:
    """True when both robots have two further committed cycles in-horizon."""
    for rid, start in next_idx.items():
        future = [s for s in segs[rid][start:] if s.move_end <= trace.horizon]
        if len(future) < 2:
            return False
    return True


def segment_phases(attempts: list[AttemptRecord]) -> list[PhaseRecord]:
    """Greedy split after each successful attempt; a trailing run of
    unsuccessful attempts becomes a non-terminal phase."""
    phases: list[PhaseRecord] = []
    current: list[AttemptRecord] = []
    for att in attempts:
        current.append(att)
        if att.successful:
            phases.append(PhaseRecord(
                attempts=current,
                total_looks=sum(a.all_looks_in_window for a in current),
                terminal=True,
            ))
            current = []
    if current:
        phases.append(PhaseRecord(
            attempts=current,
            total_looks=sum(a.all_looks_in_window for a in current),
            terminal=False,
        ))
    return phases


def binomial_halfwidth_3sigma(p_hat: float, n: int) -> float:
    """3 * sqrt(p(1-p)/n) for an empirical fraction."""
    if n <= 0:
        raise ValueError("need at least one sample")
    return 3.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


def mean_halfwidth_3sigma(samples) -> float:
    """3 * s / sqrt(n) for a sample mean (0 when n < 2)."""
    n = len(samples)
    if n < 2:
        return 0.0
    return 3.0 * statistics.stdev(samples) / math.sqrt(n)


def aggregate(traces: list[Trace], segment: bool = True) -> StatsReport:
    """Pool identically configured trials into a StatsReport.

    Only completed attempts and terminal phases made of completed attempts
    enter the Lemma-style statistics; trailing partial structures are what
    the finite horizon cut off, not what the expectations range over.
    """
    if not traces:
        raise ValueError("no trials to aggregate")
    trials = len(traces)
    gathered = sum(1 for t in traces if t.gathered)
    looks = [sum(t.look_count.values()) for t in traces]

    attempt_outcomes: list[bool] = []
    phase_looks: list[int] = []
    phase_hist: dict[int, int] = {}
    if segment:
        for t in traces:
            attempts = segment_attempts(t)
            attempt_outcomes.extend(a.successful for a in attempts if a.complete)
            for ph in segment_phases(attempts):
                if ph.terminal and all(a.complete for a in ph.attempts):
                    phase_looks.append(ph.total_looks)
                    k = len(ph.attempts)
                    phase_hist[k] = phase_hist.get(k, 0) + 1

    gathered_fraction = Fraction(gathered, trials)
    mean_total_looks = sum(looks) / trials
    success_rate = (sum(attempt_outcomes) / len(attempt_outcomes)
                    if attempt_outcomes else None)
    mean_phase = (sum(phase_looks) / len(phase_looks)) if phase_looks else None

    halfwidth = {
        "gathered_fraction": binomial_halfwidth_3sigma(float(gathered_fraction), trials),
        "mean_total_looks": mean_halfwidth_3sigma(looks),
    }
    if success_rate is not None:
        halfwidth["mean_attempt_success_rate"] = binomial_halfwidth_3sigma(
            success_rate, len(attempt_outcomes))
    if mean_phase is not None:
        halfwidth["mean_looks_per_phase"] = mean_halfwidth_3sigma(phase_looks)

    return StatsReport(
        trials=trials,
        gathered_fraction=gathered_fraction,
        mean_total_looks=mean_total_looks,
        mean_looks_per_phase=mean_phase,
        mean_attempt_success_rate=success_rate,
        halfwidth_3sigma=halfwidth,
        attempts_per_phase_hist=dict(sorted(phase_hist.items())),
        n_attempts=len(attempt_outcomes),
        n_phases=len(phase_looks),
    )


def theorem5_bound(delta: Fraction, tau: Fraction) -> float:
    """Expected-look bound 18 * (log2(delta/tau) + 1); 18 when delta < tau."""
    if delta <= 0 or tau <= 0:
        raise ValueError("delta and tau must be positive")
    if delta < tau:
        return 18.0
    return 18.0 * (math.log2(delta / tau) + 1.0)


def geometric_repeat_count(gamma0: Fraction, delta: Fraction) -> int:
    """Smallest k with delta * (1 - 2**-k) > gamma0, for 0 < gamma0 < delta."""
    if not 0 < gamma0 < delta:
        raise ValueError("requires 0 < gamma0 < delta")
    k = 1
    while delta * (1 - Fraction(1, 2 ** k)) <= gamma0:
        k += 1
    return k


def looks_see_midmove(trace: Trace) -> tuple[bool, list]:
    """Check the adaptive-adversary invariant on a trace.

    Every LOOK event strictly after the chronologically first look instant
    must observe the other robot strictly inside a move (move_start < t <
    move_end) at a positive distance.  Returns (ok, violations).
    """
    looks = [e for e in trace.events if e.kind == LOOK]
    if not looks:
        return True, []
    first_time = looks[0].time
    violations = []
    for e in looks:
        if e.time == first_time:
            continue
        other_id = next(r for r in trace.robot_ids if r != e.robot_id)
        moving = is_mid_move(trace.runs[other_id], e.time)
        distance_ok = all(obs != e.payload["own"] for obs in e.payload["observed"])
        if not (moving and distance_ok):
            violations.append((e.time, e.robot_id, moving, distance_ok))
    decided = any(e.kind == DECIDE_GATHERED for e in trace.events)
    return (not violations and not decided), violations
