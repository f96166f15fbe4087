"""Deadheads, compatibility predicates and the compatible-pair set E."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

from .instance import Instance, School
from .trips import RoutingPlan, Trip

SDT = "SDT"
EDT = "EDT"


@dataclass(frozen=True)
class PseudoTrip:
    """Depot start (SDT) or end (EDT) trip anchoring every bus chain."""

    kind: Literal["SDT", "EDT"]
    node: str = "depot"
    travel_time: int = 0

    @property
    def id(self) -> str:
        return self.kind


def _school_of(k, instance: Instance) -> School:
    return k if isinstance(k, School) else instance.school_by_id[k]


def deadhead(t1, t2, instance: Instance) -> int:
    """Empty drive from the last stop of ``t1`` to the school of ``t2``.

    Either side may be a depot pseudo-trip (or its id ``"SDT"``/``"EDT"``).
    """
    is_start = isinstance(t1, PseudoTrip) or t1 == SDT
    is_end = isinstance(t2, PseudoTrip) or t2 == EDT
    if is_start and is_end:
        raise ValueError("no deadhead between the two depot trips")
    src = instance.depot.id if is_start else t1.last_stop
    dst = instance.depot.id if is_end else t2.school
    if not is_start and not is_end and t1 is t2:
        raise ValueError("deadhead of a trip to itself")
    return instance.leg(src, dst)


def deadhead_to_school(t: Trip, k, instance: Instance) -> int:
    return instance.leg(t.last_stop, _school_of(k, instance).id)


def is_school_compatible(t: Trip, k, instance: Instance, buffer: int = 0) -> bool:
    """Can a bus finishing ``t`` reach school ``k`` by its bell (+ buffer)?"""
    school = _school_of(k, instance)
    own = instance.school_by_id[t.school]
    return own.bell_time + t.travel_time + deadhead_to_school(t, school, instance) \
        <= school.bell_time + buffer


def is_compatible(t1, t2, instance: Instance, buffer: int = 0) -> bool:
    if isinstance(t1, PseudoTrip) or t1 == SDT or isinstance(t2, PseudoTrip) or t2 == EDT:
        return True
    return is_school_compatible(t1, t2.school, instance, buffer)


@dataclass
class CompatibilityGraph:
    """Active trips plus depot pseudo-trips and the ordered compatible pairs."""

    trips: list[str]
    deadhead: dict[tuple[str, str], int]
    pairs: set[tuple[str, str]] = field(default_factory=set)

    def successors(self, t: str) -> list[str]:
        return sorted(b for a, b in self.pairs if a == t)

    def internal_pairs(self) -> list[tuple[str, str]]:
        return sorted((a, b) for a, b in self.pairs if a != SDT and b != EDT)

    def to_json(self) -> str:
        edges = [{"from": a, "to": b, "dd_s": self.deadhead[a, b]} for a, b in sorted(self.pairs)]
        return json.dumps({"trips": self.trips, "edges": edges}, indent=1)


def build_pair_set(plan: RoutingPlan, instance: Instance, buffer: int = 0) -> CompatibilityGraph:
    """Compatible ordered pairs over the active trips and the depot trips.

    Internal pairs additionally respect the (bell time, trip id) order, which
    only matters when a positive buffer would otherwise allow cycles.
    """
    trips = list(plan.trips)
    ids = [t.id for t in trips]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate trip ids in plan")
    dd: dict[tuple[str, str], int] = {}
    pairs: set[tuple[str, str]] = set()
    idx = instance.node_index
    dur = instance.dur
    depot = idx[instance.depot.id]
    bell = {k.id: k.bell_time for k in instance.schools}
    for t in trips:
        dd[SDT, t.id] = dur[depot][idx[t.school]]
        dd[t.id, EDT] = dur[idx[t.last_stop]][depot]
        pairs.add((SDT, t.id))
        pairs.add((t.id, EDT))
    for a in trips:
        finish = bell[a.school] + a.travel_time
        last = dur[idx[a.last_stop]]
        for b in trips:
            if a is b:
                continue
            d = last[idx[b.school]]
            dd[a.id, b.id] = d
            if finish + d <= bell[b.school] + buffer and \
                    (bell[a.school], a.id) < (bell[b.school], b.id):
                pairs.add((a.id, b.id))
    return CompatibilityGraph([SDT] + ids + [EDT], dd, pairs)
