"""Trips: travel-time model, feasibility checks and stop ordering.

A trip is an afternoon trip: it leaves its school and drops students at an
ordered list of that school's stops.  Travel time is the sum of the driving
legs plus a per-trip pickup constant and per-stop drop-off service terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .instance import Instance, School, SolverConfig

TRIP_CONSTANT = 29  # seconds, school pickup intercept
STOP_CONSTANT = 19  # seconds, stop drop-off intercept


def pickup_time(stu: int) -> int:
    """29.0 + 1.9 * stu seconds, rounded half-up."""
    return (290 + 19 * stu + 5) // 10


def dropoff_time(stu: int) -> int:
    """19.0 + 2.6 * stu seconds, rounded half-up."""
    return (190 + 26 * stu + 5) // 10


def stop_service_time(stu: int) -> int:
    # per-stop share of both regressions: 19 + (1.9 + 2.6) * stu, half-up
    return (190 + 45 * stu + 5) // 10


@dataclass(frozen=True)
class Trip:
    id: str
    school: str
    stops: tuple[str, ...]
    load: int
    travel_time: int

    @property
    def last_stop(self) -> str:
        return self.stops[-1]

    def to_dict(self) -> dict:
        return {"id": self.id, "school": self.school, "stops": list(self.stops),
                "load": self.load, "travel_time_s": self.travel_time}

    @classmethod
    def from_dict(cls, data: dict) -> "Trip":
        return cls(data["id"], data["school"], tuple(data["stops"]), int(data["load"]),
                   int(data["travel_time_s"]))


@dataclass(frozen=True)
class RoutingPlan:
    """All active trips of all schools, grouped by school in instance order."""

    trips: tuple[Trip, ...]

    def by_school(self) -> dict[str, list[Trip]]:
        out: dict[str, list[Trip]] = {}
        for t in self.trips:
            out.setdefault(t.school, []).append(t)
        return out

    def trip(self, trip_id: str) -> Trip:
        for t in self.trips:
            if t.id == trip_id:
                return t
        raise KeyError(trip_id)

    def __len__(self):
        return len(self.trips)


@dataclass(frozen=True)
class Violation:
    constraint: str
    subject: str
    detail: str

    def __str__(self):
        return f"[{self.constraint}] {self.subject}: {self.detail}"


def leg_sum(school_id: str, stops: Sequence[str], instance: Instance) -> int:
    idx = instance.node_index
    dur = instance.dur
    prev = idx[school_id]
    total = 0
    for s in stops:
        cur = idx[s]
        total += dur[prev][cur]
        prev = cur
    return total


def service_sum(stops: Iterable[str], instance: Instance) -> int:
    by_id = instance.stop_by_id
    return sum(stop_service_time(by_id[s].students) for s in stops)


def trip_travel_time(trip: Trip, instance: Instance) -> int:
    """Legs school -> stop1 -> ... -> stopN plus pickup and drop-off service."""
    return (leg_sum(trip.school, trip.stops, instance) + TRIP_CONSTANT
            + service_sum(trip.stops, instance))


def make_trip(trip_id: str, school_id: str, stops: Sequence[str], instance: Instance) -> Trip:
    stops = tuple(stops)
    load = sum(instance.stop_by_id[s].students for s in stops)
    tt = leg_sum(school_id, stops, instance) + TRIP_CONSTANT + service_sum(stops, instance)
    return Trip(trip_id, school_id, stops, load, tt)


def validate_trip(trip: Trip, config: SolverConfig, instance: Instance) -> list[Violation]:
    """Every broken trip constraint, as data.  Empty means feasible."""
    out = []
    if not trip.stops:
        out.append(Violation("nonempty", trip.id, "trip has no stops"))
        return out
    if len(set(trip.stops)) != len(trip.stops):
        out.append(Violation("duplicate", trip.id, f"repeated stops in {list(trip.stops)}"))
    bad = [s for s in trip.stops
           if s not in instance.stop_by_id or instance.stop_by_id[s].school != trip.school]
    if bad:
        out.append(Violation("membership", trip.id,
                             f"stops {bad} do not belong to school {trip.school}"))
        return out
    load = sum(instance.stop_by_id[s].students for s in trip.stops)
    if load != trip.load:
        out.append(Violation("load", trip.id, f"recorded load {trip.load} != {load}"))
    if load > instance.capacity:
        out.append(Violation("capacity", trip.id, f"load {load} > capacity {instance.capacity}"))
    tt = trip_travel_time(trip, instance)
    if tt != trip.travel_time:
        out.append(Violation("travel_time", trip.id,
                             f"recorded travel time {trip.travel_time} != {tt}"))
    if config.mrt is not None and tt > config.mrt:
        out.append(Violation("mrt", trip.id, f"travel time {tt} s > MRT {config.mrt} s"))
    return out


# -- stop ordering -----------------------------------------------------------


def _bits(k: int) -> list[list[int]]:
    return [[i for i in range(k) if m >> i & 1] for m in range(1 << k)]


class PathTable:
    """Open shortest paths from a school over every subset of a stop list.

    ``start[i]`` is the leg from the school to stop ``i`` and ``d`` the
    stop-to-stop legs.  Suffix Held-Karp: ``g[mask][i]`` is the cheapest leg sum of a path that
    starts at stop ``i`` and visits exactly ``mask``.  Paths are recovered
    greedily, which yields the lexicographically smallest optimal order
    (in index order).
    """

    def __init__(self, start: Sequence[int], d: Sequence[Sequence[int]]):
        k = len(start)
        self.start = list(start)
        self.d = d
        self.bits = bits = _bits(k)
        inf = math.inf
        g: list[list[float]] = [[]] * (1 << k)
        for mask in range(1, 1 << k):
            members = bits[mask]
            row = [inf] * k
            if len(members) == 1:
                row[members[0]] = 0
            else:
                for i in members:
                    rest = mask ^ (1 << i)
                    gr = g[rest]
                    di = d[i]
                    best = inf
                    for j in bits[rest]:
                        c = di[j] + gr[j]
                        if c < best:
                            best = c
                    row[i] = best
            g[mask] = row
        self.g = g

    @classmethod
    def for_stops(cls, instance: Instance, school_id: str, stops: Sequence[str]) -> "PathTable":
        idx = instance.node_index
        dur = instance.dur
        nodes = [idx[s] for s in stops]
        return cls([dur[idx[school_id]][a] for a in nodes], [[dur[a][b] for b in nodes] for a in nodes])

    def cost(self, mask: int) -> int:
        row = self.g[mask]
        st = self.start
        return min(st[i] + row[i] for i in self.bits[mask])

    def order(self, mask: int) -> tuple[int, ...]:
        """Local indices of the optimal, lexicographically smallest path."""
        g, d = self.g, self.d
        target = self.cost(mask)
        prev_cost = self.start
        path = []
        while mask:
            for i in self.bits[mask]:
                if prev_cost[i] + g[mask][i] == target:
                    break
            path.append(i)
            target = g[mask][i]
            prev_cost = d[i]
            mask ^= 1 << i
        return tuple(path)


def _nn_two_opt(start: list[int], d: list[list[int]]) -> list[int]:
    """Nearest neighbour from the school, then 2-opt on the open path."""
    k = len(start)
    left = set(range(k))
    cur = min(left, key=lambda i: (start[i], i))
    path = [cur]
    left.remove(cur)
    while left:
        row = d[cur]
        cur = min(left, key=lambda i: (row[i], i))
        path.append(cur)
        left.remove(cur)

    def w(a, b):
        return start[b] if a < 0 else d[a][b]

    improved = True
    while improved:
        improved = False
        # reverse path[i..j]; the school (-1) sits before position 0
        for i in range(k - 1):
            a = path[i - 1] if i else -1
            for j in range(i + 1, k):
                b, c = path[i], path[j]
                before = w(a, b)
                after = w(a, c)
                if j + 1 < k:
                    e = path[j + 1]
                    before += d[c][e]
                    after += d[b][e]
                if after < before:
                    path[i:j + 1] = reversed(path[i:j + 1])
                    improved = True
    return path


def order_stops(school_id: str, stop_subset: Sequence[str], instance: Instance,
                threshold: int = 8) -> tuple[str, ...]:
    """Stop sequence minimising the leg sum (exact up to ``threshold`` stops)."""
    stops = sorted(stop_subset, key=instance.stop_position.__getitem__)
    if len(stops) <= threshold:
        table = PathTable.for_stops(instance, school_id, stops)
        return tuple(stops[i] for i in table.order((1 << len(stops)) - 1))
    idx = instance.node_index
    dur = instance.dur
    nodes = [idx[s] for s in stops]
    start = [dur[idx[school_id]][a] for a in nodes]
    d = [[dur[a][b] for b in nodes] for a in nodes]
    return tuple(stops[i] for i in _nn_two_opt(start, d))


def optimal_stop_order(school: School | str, stop_subset: Iterable[str], instance: Instance,
                       mode: str = "auto", threshold: int = 8,
                       trip_id: str | None = None) -> Trip:
    """Build the trip over exactly ``stop_subset`` with the shortest leg sum.

    ``mode`` is ``"auto"`` (exact DP up to ``threshold`` stops, else nearest
    neighbour + 2-opt), ``"exact"`` or ``"heuristic"``.
    """
    school_id = school if isinstance(school, str) else school.id
    stops = list(stop_subset)
    if not stops:
        raise ValueError("stop subset is empty")
    if len(set(stops)) != len(stops):
        raise ValueError("stop subset has duplicates")
    for s in stops:
        if instance.stop_by_id[s].school != school_id:
            raise ValueError(f"stop {s} does not belong to school {school_id}")
    if mode == "exact":
        threshold = len(stops)
    elif mode == "heuristic":
        threshold = 0
    elif mode != "auto":
        raise ValueError(f"unknown mode {mode!r}")
    seq = order_stops(school_id, stops, instance, threshold)
    return make_trip(trip_id or f"{school_id}-t", school_id, seq, instance)
