"""Decomposition algorithms, baselines and the tiny-scale integrated oracle.

Every method produces a routing plan (trips per school) and then chains the
trips into buses with :func:`schoolbus.scheduling.solve_schedule`.
"""
from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .compatibility import CompatibilityGraph, build_pair_set
from .instance import Instance, SolverConfig
from .routing import (CompatTarget, RoutingInfeasible, RoutingObjective, SchoolModel,
                      SchoolRoutingResult, solve_school)
from .scheduling import Schedule, solve_schedule, verify_schedule
from .trips import RoutingPlan, Trip, Violation, validate_trip

METHODS = ("exact", "alg1", "alg2", "alg2w", "minn", "mintt", "minnt")


class SizeLimitExceeded(ValueError):
    """The instance is too large for the exhaustive integrated search."""


class UTCUnderflow(RuntimeError):
    """A routing result assigned more trips to a school than it had room for."""


@dataclass(frozen=True)
class IntegratedLimits:
    max_stops: int = 8
    max_trips: int = 6


@dataclass(frozen=True)
class UTCState:
    utc: dict[str, int]
    solved: frozenset[str] = frozenset()
    consumed: dict[str, int] = field(default_factory=dict)

    @classmethod
    def initial(cls, instance: Instance) -> "UTCState":
        return cls({k.id: instance.mnt(k) for k in instance.schools}, frozenset(),
                   {k.id: 0 for k in instance.schools})


def update_utc(state: UTCState, school: str, result: SchoolRoutingResult) -> UTCState:
    """UTC bookkeeping after solving one school.

    The solved school's capacity becomes its active trip count (less any
    predecessors already pointed at it, which is zero when schools are solved
    by descending bell time); every target loses the trips assigned to it.
    """
    if school in state.solved:
        raise ValueError(f"school {school} already solved")
    utc = dict(state.utc)
    consumed = dict(state.consumed)
    utc[school] = len(result.trips) - consumed.get(school, 0)
    if utc[school] < 0:
        raise UTCUnderflow(f"school {school} has more predecessors than trips")
    for k2 in result.assignments.values():
        if k2 is None:
            continue
        utc[k2] -= 1
        consumed[k2] = consumed.get(k2, 0) + 1
        if utc[k2] < 0:
            raise UTCUnderflow(f"school {k2}: assignments exceed its unassigned trip capacity")
    return UTCState(utc, state.solved | {school}, consumed)


@dataclass
class Solution:
    method: str
    plan: RoutingPlan
    schedule: Schedule
    graph: CompatibilityGraph
    runtime: float = 0.0
    routing: dict[str, SchoolRoutingResult] = field(default_factory=dict)
    utc_trace: list[UTCState] = field(default_factory=list)

    @property
    def metrics(self) -> dict:
        return compute_metrics(self.plan, self.schedule)

    @property
    def nob(self) -> int:
        return self.schedule.nob

    def assignments(self) -> dict[str, str | None]:
        out = {}
        for r in self.routing.values():
            out.update(r.assignments)
        return out

    def to_dict(self) -> dict:
        # runtime is wall clock and deliberately left out of the file
        return {"method": self.method,
                "trips": [t.to_dict() for t in self.plan.trips],
                **self.schedule.to_dict(),
                "metrics": self.metrics}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


def compute_metrics(plan: RoutingPlan, schedule: Schedule) -> dict:
    travel = sum(t.travel_time for t in plan.trips)
    return {"nob": schedule.nob, "not": len(plan.trips),
            "tvt_s": travel + schedule.total_deadhead,
            "travel_time_s": travel,
            "internal_deadhead_s": schedule.internal_deadhead,
            "depot_deadhead_s": schedule.depot_deadhead,
            "avg_tt_s": travel / len(plan.trips) if plan.trips else 0.0,
            "max_tt_s": max((t.travel_time for t in plan.trips), default=0)}


def load_solution(path, instance: Instance, config: SolverConfig | None = None) -> Solution:
    """Read a solution file and rebuild its compatibility graph."""
    data = json.loads(Path(path).read_text())
    config = config or SolverConfig()
    plan = RoutingPlan(tuple(Trip.from_dict(t) for t in data["trips"]))
    schedule = Schedule.from_dict(data)
    return Solution(data.get("method", "?"), plan, schedule,
                    build_pair_set(plan, instance, config.buffer))


def verify_solution(solution: Solution, instance: Instance,
                    config: SolverConfig) -> list[Violation]:
    """Trip constraints, stop coverage and schedule consistency."""
    out = []
    counts: dict[str, int] = {}
    for t in solution.plan.trips:
        out.extend(validate_trip(t, config, instance))
        for s in t.stops:
            counts[s] = counts.get(s, 0) + 1
    for s in instance.stops:
        if counts.get(s.id, 0) != 1:
            out.append(Violation("coverage", s.id, f"visited {counts.get(s.id, 0)} times"))
    graph = build_pair_set(solution.plan, instance, config.buffer)
    out.extend(verify_schedule(solution.schedule, solution.plan, graph))
    return out


def _finish(method: str, instance: Instance, config: SolverConfig, trips: list[Trip],
            start: float, routing=None, trace=None) -> Solution:
    plan = RoutingPlan(tuple(trips))
    graph = build_pair_set(plan, instance, config.buffer)
    schedule = solve_schedule(plan, graph, config)
    return Solution(method, plan, schedule, graph, time.perf_counter() - start,
                    routing or {}, trace or [])


def _solve(school, objective, config, instance) -> SchoolRoutingResult:
    return solve_school(school, objective, config, instance)


def run_baseline(instance: Instance, config: SolverConfig, which: str = "MinNT") -> Solution:
    """Traditional decomposition: routing without compatibility, then scheduling."""
    start = time.perf_counter()
    objective = {"MinN": RoutingObjective.min_n(),
                 "MinTT": RoutingObjective.min_tt(config),
                 "MinNT": RoutingObjective.min_nt(config)}[which]
    routing = {k.id: _solve(k, objective, config, instance) for k in instance.schools}
    trips = [t for k in instance.schools for t in routing[k.id].trips]
    return _finish(which, instance, config, trips, start, routing)


def run_algorithm1(instance: Instance, config: SolverConfig,
                   alpha_c_oa: float | None = None) -> Solution:
    """Objective adjustment: every school sees all later schools as unlimited targets."""
    start = time.perf_counter()
    alpha_c = config.alpha_c_oa if alpha_c_oa is None else alpha_c_oa
    routing = {}
    for k in instance.schools:
        targets = [CompatTarget(k2.id, k2.bell_time, None) for k2 in instance.schools
                   if k2.id != k.id and k2.bell_time >= k.bell_time]
        objective = RoutingObjective.compat_aware(config, alpha_c, config.effective_alpha_d_oa,
                                                  targets)
        routing[k.id] = _solve(k, objective, config, instance)
    trips = [t for k in instance.schools for t in routing[k.id].trips]
    return _finish("Alg1", instance, config, trips, start, routing)


def solving_order(instance: Instance) -> list:
    """Schools by descending bell time, ties by ascending id."""
    return sorted(instance.schools, key=lambda k: (-k.bell_time, k.id))


def run_algorithm2(instance: Instance, config: SolverConfig,
                   weight_adjust: bool = True) -> Solution:
    """Compatibility assignment with unassigned-trip-capacity bookkeeping."""
    start = time.perf_counter()
    alpha_c = config.alpha_c_ca if weight_adjust else config.alpha_c
    state = UTCState.initial(instance)
    trace = [state]
    routing = {}
    for k in solving_order(instance):
        targets = [CompatTarget(k2.id, k2.bell_time, state.utc[k2.id])
                   for k2 in instance.schools if k2.id != k.id and state.utc[k2.id] > 0]
        objective = RoutingObjective.compat_aware(config, alpha_c, config.alpha_d, targets)
        result = _solve(k, objective, config, instance)
        routing[k.id] = result
        state = update_utc(state, k.id, result)
        trace.append(state)
    trips = [t for k in instance.schools for t in routing[k.id].trips]
    return _finish("Alg2W" if weight_adjust else "Alg2", instance, config, trips, start,
                   routing, trace)


# -- integrated exact oracle -------------------------------------------------


def feasible_partitions(model: SchoolModel) -> list[list[int]]:
    """Every partition of the school's stops into at most budget feasible trips."""
    out = []
    n = model.n

    def rec(i, masks):
        if i == n:
            out.append(list(masks))
            return
        bit = 1 << i
        for j in range(len(masks)):
            if model.feasible(masks[j] | bit):
                masks[j] |= bit
                rec(i + 1, masks)
                masks[j] ^= bit
        if len(masks) < model.budget and model.feasible(bit):
            masks.append(bit)
            rec(i + 1, masks)
            masks.pop()

    rec(0, [])
    return out


def check_integrated_limits(instance: Instance, config: SolverConfig,
                            limits: IntegratedLimits = IntegratedLimits()) -> None:
    n_stops = len(instance.stops)
    n_trips = sum(min(config.trip_budget(instance.mnt(k)), len(k.stops))
                  for k in instance.schools)
    if n_stops > limits.max_stops or n_trips > limits.max_trips:
        raise SizeLimitExceeded(
            f"integrated search limited to {limits.max_stops} stops and {limits.max_trips} "
            f"potential trips, instance has {n_stops} stops and {n_trips} potential trips")


def run_integrated_exact(instance: Instance, config: SolverConfig,
                         limits: IntegratedLimits = IntegratedLimits()) -> Solution:
    """Exhaustive joint routing and scheduling on desk-scale instances.

    Minimises alpha_b * buses + alpha_t * travel time + alpha_d * deadhead over
    every combination of per-school stop partitions, scheduling each joint
    plan exactly.
    """
    check_integrated_limits(instance, config, limits)
    start = time.perf_counter()
    options = []
    for k in instance.schools:
        model = SchoolModel(k, RoutingObjective.min_nt(config), config, instance)
        plans = []
        for masks in feasible_partitions(model):
            res = model.result(masks, "optimal")
            plans.append(res.trips)
        if not plans:
            raise RoutingInfeasible(k.id, "no feasible partition within the trip budget")
        options.append(plans)

    best_key, best = None, None
    for combo in itertools.product(*options):
        trips = [t for school_trips in combo for t in school_trips]
        plan = RoutingPlan(tuple(trips))
        graph = build_pair_set(plan, instance, config.buffer)
        schedule = solve_schedule(plan, graph, config)
        travel = sum(t.travel_time for t in trips)
        value = (config.alpha_b * schedule.nob + config.alpha_t * travel
                 + config.alpha_d * schedule.total_deadhead)
        key = (value, schedule.nob, travel, tuple(t.stops for t in trips))
        if best_key is None or key < best_key:
            best_key, best = key, (plan, graph, schedule)
    plan, graph, schedule = best
    return Solution("Exact", plan, schedule, graph, time.perf_counter() - start)


def run_method(instance: Instance, config: SolverConfig, method: str) -> Solution:
    method = method.lower()
    if method == "exact":
        return run_integrated_exact(instance, config)
    if method == "alg1":
        return run_algorithm1(instance, config)
    if method == "alg2":
        return run_algorithm2(instance, config, weight_adjust=False)
    if method == "alg2w":
        return run_algorithm2(instance, config, weight_adjust=True)
    if method in ("minn", "mintt", "minnt"):
        return run_baseline(instance, config, {"minn": "MinN", "mintt": "MinTT",
                                               "minnt": "MinNT"}[method])
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
