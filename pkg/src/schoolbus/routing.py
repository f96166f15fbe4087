"""Single-school routing with baseline and compatibility-aware objectives.

Trips of one school are represented as bitmasks over the school's stops; a
stop subset determines its trip (the shortest-leg ordering), so a routing
plan is a set partition of the stops.  Small schools are solved exactly by
enumerating partitions, larger ones by sweep construction plus local search.

The compatibility-aware objective is

    alpha_n * #trips - alpha_c * #assigned + alpha_t * sum(tt) + alpha_d * sum(dd assigned)

where each trip may be assigned to at most one later target school it can
reach in time, and bounded targets accept at most ``capacity`` trips.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .instance import Instance, School, SolverConfig
from .trips import (TRIP_CONSTANT, PathTable, Trip, _nn_two_opt, make_trip,
                    stop_service_time)

MIN_N, MIN_TT, MIN_NT, COMPAT = "MinN", "MinTT", "MinNT", "CompatAware"
VARIANTS = (MIN_N, MIN_TT, MIN_NT, COMPAT)

MAX_SWEEP_STARTS = 12
MAX_LS_ITERATIONS = 10_000


class RoutingInfeasible(Exception):
    def __init__(self, school: str, reason: str):
        super().__init__(f"school {school}: {reason}")
        self.school = school
        self.reason = reason


@dataclass(frozen=True)
class CompatTarget:
    school: str
    bell_time: int
    capacity: int | None = None  # None: unlimited

    def __post_init__(self):
        if self.capacity is not None and self.capacity < 0:
            raise ValueError("target capacity must be >= 0")


@dataclass(frozen=True)
class RoutingObjective:
    variant: str
    alpha_n: float = 1e5
    alpha_c: float = 0.0
    alpha_t: float = 1.0
    alpha_d: float = 0.0
    targets: tuple[CompatTarget, ...] = ()

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown routing objective {self.variant!r}")

    @classmethod
    def min_n(cls) -> "RoutingObjective":
        return cls(MIN_N, alpha_n=1.0, alpha_t=0.0)

    @classmethod
    def min_tt(cls, config: SolverConfig) -> "RoutingObjective":
        return cls(MIN_TT, alpha_n=0.0, alpha_t=config.alpha_t)

    @classmethod
    def min_nt(cls, config: SolverConfig) -> "RoutingObjective":
        return cls(MIN_NT, alpha_n=config.alpha_n, alpha_t=config.alpha_t)

    @classmethod
    def compat_aware(cls, config: SolverConfig, alpha_c: float, alpha_d: float,
                     targets: Sequence[CompatTarget]) -> "RoutingObjective":
        return cls(COMPAT, config.alpha_n, alpha_c, config.alpha_t, alpha_d, tuple(targets))

    def value(self, n_trips: int, n_assigned: int, total_tt: int, total_dd: int) -> float:
        if self.variant != COMPAT:
            return self.alpha_n * n_trips + self.alpha_t * total_tt
        return (self.alpha_n * n_trips - self.alpha_c * n_assigned
                + self.alpha_t * total_tt + self.alpha_d * total_dd)


@dataclass
class SchoolRoutingResult:
    trips: tuple[Trip, ...]
    assignments: dict[str, str | None]
    objective_value: float
    status: str  # optimal | heuristic | time_limited

    @property
    def n_assigned(self) -> int:
        return sum(v is not None for v in self.assignments.values())

    def assigned_to(self, school: str) -> int:
        return sum(v == school for v in self.assignments.values())


def objective_of(trips: Sequence[Trip], assignments: dict, objective: RoutingObjective,
                 instance: Instance) -> float:
    """Recompute a routing objective from trips and their target assignments."""
    n_assigned = total_dd = 0
    for t in trips:
        k2 = assignments.get(t.id)
        if k2 is not None:
            n_assigned += 1
            total_dd += instance.leg(t.last_stop, k2)
    return objective.value(len(trips), n_assigned, sum(t.travel_time for t in trips), total_dd)


# -- per-school model --------------------------------------------------------


@dataclass
class _Block:
    order: tuple[int, ...]
    tt: int
    load: int
    options: tuple[tuple[float, int, int], ...]  # (-gain, target index, dd), best first


class SchoolModel:
    """Cached subset data and plan evaluation for one school and objective."""

    def __init__(self, school: School | str, objective: RoutingObjective,
                 config: SolverConfig, instance: Instance):
        if isinstance(school, str):
            school = instance.school_by_id[school]
        self.school = school
        self.objective = objective
        self.config = config
        self.instance = instance
        pos = instance.stop_position
        self.stops = sorted(school.stops, key=pos.__getitem__)
        self.n = n = len(self.stops)
        by_id = instance.stop_by_id
        self.students = [by_id[s].students for s in self.stops]
        self.service = [stop_service_time(x) for x in self.students]
        self.mnt = -(-sum(self.students) // instance.capacity)
        self.budget = config.trip_budget(self.mnt)
        self.threshold = config.exact_threshold_stops
        self.mrt = config.mrt

        idx = instance.node_index
        dur = instance.dur
        nodes = [idx[s] for s in self.stops]
        self.start = [dur[idx[school.id]][a] for a in nodes]
        self.d = [[dur[a][b] for b in nodes] for a in nodes]
        self._table = PathTable(self.start, self.d) if n <= self.threshold else None
        self._cache: dict[int, _Block] = {}

        # compatibility data: dd[s][j] from stop s to target j
        self.targets = list(objective.targets) if objective.variant == COMPAT else []
        self.target_dd = [[dur[a][idx[t.school]] for t in self.targets] for a in nodes]
        self.capacities = [t.capacity for t in self.targets]
        self.bounded = any(c is not None for c in self.capacities)

    # subsets -----------------------------------------------------------

    def block(self, mask: int) -> _Block:
        b = self._cache.get(mask)
        if b is not None:
            return b
        members = [i for i in range(self.n) if mask >> i & 1]
        if self._table is not None:
            order = self._table.order(mask)
            legs = self._table.cost(mask)
        else:
            order, legs = self._order_large(members)
        tt = legs + TRIP_CONSTANT + sum(self.service[i] for i in members)
        load = sum(self.students[i] for i in members)
        b = _Block(order, tt, load, self._options(order[-1], tt))
        self._cache[mask] = b
        return b

    def _order_large(self, members: list[int]) -> tuple[tuple[int, ...], int]:
        start = [self.start[i] for i in members]
        d = [[self.d[a][b] for b in members] for a in members]
        if len(members) <= self.threshold:
            local = PathTable(start, d).order((1 << len(members)) - 1)
        else:
            local = _nn_two_opt(start, d)
        order = tuple(members[i] for i in local)
        legs = self.start[order[0]] + sum(self.d[a][b] for a, b in zip(order, order[1:]))
        return order, legs

    def _options(self, last: int, tt: int) -> tuple:
        if not self.targets:
            return ()
        obj = self.objective
        finish = self.school.bell_time + tt
        buf = self.config.buffer
        out = []
        for j, t in enumerate(self.targets):
            if t.capacity == 0:
                continue
            dd = self.target_dd[last][j]
            if finish + dd <= t.bell_time + buf:
                gain = obj.alpha_c - obj.alpha_d * dd
                if gain > 0:
                    out.append((-gain, j, dd))
        out.sort()
        return tuple(out)

    def feasible(self, mask: int) -> bool:
        b = self.block(mask)
        return b.load <= self.instance.capacity and (self.mrt is None or b.tt <= self.mrt)

    # plans -------------------------------------------------------------

    def assign(self, blocks: Sequence[_Block]) -> list[int | None]:
        """Best target for every block under the target capacities."""
        choice = [b.options[0][1] if b.options else None for b in blocks]
        if not self.bounded:
            return choice
        used: dict[int, int] = {}
        for j in choice:
            if j is not None:
                used[j] = used.get(j, 0) + 1
        if all(self.capacities[j] is None or c <= self.capacities[j] for j, c in used.items()):
            return choice
        rows = [i for i, b in enumerate(blocks) if b.options]
        m = len(rows)
        slots = []
        for j, cap in enumerate(self.capacities):
            slots.extend([j] * (m if cap is None else min(cap, m)))
        col_of = {}
        for c, j in enumerate(slots):
            col_of.setdefault(j, []).append(c)
        cost = np.full((m, len(slots) + m), np.inf)
        cost[:, len(slots):] = 0.0
        for r, i in enumerate(rows):
            for neg_gain, j, _ in blocks[i].options:
                cost[r, col_of[j]] = neg_gain
        rr, cc = linear_sum_assignment(cost)
        out: list[int | None] = [None] * len(blocks)
        for r, c in zip(rr, cc):
            if c < len(slots):
                out[rows[r]] = slots[c]
        return out

    def evaluate(self, masks: Sequence[int]) -> tuple[float, int, int]:
        """(objective, #trips, total travel time) of a partition."""
        blocks = [self.block(m) for m in masks]
        total_tt = sum(b.tt for b in blocks)
        if not self.targets:
            return self.objective.value(len(blocks), 0, total_tt, 0), len(blocks), total_tt
        choice = self.assign(blocks)
        n_assigned = total_dd = 0
        for b, j in zip(blocks, choice):
            if j is not None:
                n_assigned += 1
                total_dd += self.target_dd[b.order[-1]][j]
        return (self.objective.value(len(blocks), n_assigned, total_tt, total_dd),
                len(blocks), total_tt)

    def canonical(self, masks: Sequence[int]) -> tuple:
        """Trips in canonical order: longest first, then by stop sequence."""
        blocks = [self.block(m) for m in masks]
        return tuple(sorted(((-b.tt, b.order) for b in blocks)))

    def key(self, masks: Sequence[int]) -> tuple:
        return self.evaluate(masks) + (tuple(o for _, o in self.canonical(masks)),)

    def result(self, masks: Sequence[int], status: str) -> SchoolRoutingResult:
        ordered = sorted(masks, key=lambda m: (-self.block(m).tt, self.block(m).order))
        blocks = [self.block(m) for m in ordered]
        choice = self.assign(blocks) if self.targets else [None] * len(blocks)
        trips, assignments = [], {}
        for i, (b, j) in enumerate(zip(blocks, choice)):
            tid = f"{self.school.id}-t{i}"
            trips.append(make_trip(tid, self.school.id, [self.stops[s] for s in b.order],
                                   self.instance))
            assignments[tid] = None if j is None else self.targets[j].school
        value = objective_of(trips, assignments, self.objective, self.instance)
        return SchoolRoutingResult(tuple(trips), assignments, value, status)

    def masks_of(self, trips: Sequence[Trip]) -> list[int]:
        pos = {s: i for i, s in enumerate(self.stops)}
        return [sum(1 << pos[s] for s in t.stops) for t in trips]


def _check_singletons(model: SchoolModel) -> None:
    for i in range(model.n):
        if not model.feasible(1 << i):
            b = model.block(1 << i)
            raise RoutingInfeasible(model.school.id,
                                    f"stop {model.stops[i]} alone needs {b.tt} s > MRT {model.mrt} s")


# -- exact backend -----------------------------------------------------------


def exact_enumerate(school, objective: RoutingObjective, config: SolverConfig,
                    instance: Instance, model: SchoolModel | None = None) -> SchoolRoutingResult:
    """Branch and bound over all set partitions of the school's stops."""
    model = model or SchoolModel(school, objective, config, instance)
    if model.n > config.exact_threshold_stops:
        raise ValueError(f"school {model.school.id} has {model.n} stops, above the exact "
                         f"threshold {config.exact_threshold_stops}")
    _check_singletons(model)
    n, budget = model.n, model.budget
    best_key = None
    best_masks: list[int] = []
    obj = model.objective
    feasible = [False] * (1 << n)
    for m in range(1, 1 << n):
        feasible[m] = model.feasible(m)

    # lower bound on a partial partition: its blocks only grow, and every
    # block can at most collect one full compatibility gain
    gain_cap = obj.alpha_c if model.targets else 0.0
    new_block_floor = obj.alpha_n - gain_cap if obj.variant == COMPAT else obj.alpha_n
    min_single_tt = min(model.block(1 << i).tt for i in range(n))
    new_block_floor += obj.alpha_t * min_single_tt

    def bound(masks: list[int]) -> float:
        tt = sum(model.block(m).tt for m in masks)
        lb = obj.alpha_n * len(masks) + obj.alpha_t * tt
        if obj.variant == COMPAT:
            lb -= gain_cap * len(masks)
        if new_block_floor < 0:
            lb += new_block_floor * (budget - len(masks))
        return lb

    def rec(i: int, masks: list[int]):
        nonlocal best_key, best_masks
        if best_key is not None and bound(masks) > best_key[0]:
            return
        if i == n:
            k = model.key(masks)
            if best_key is None or k < best_key:
                best_key, best_masks = k, list(masks)
            return
        bit = 1 << i
        for j in range(len(masks)):
            m = masks[j] | bit
            if feasible[m]:
                old = masks[j]
                masks[j] = m
                rec(i + 1, masks)
                masks[j] = old
        if len(masks) < budget:
            masks.append(bit)
            rec(i + 1, masks)
            masks.pop()

    rec(0, [])
    if best_key is None:
        raise RoutingInfeasible(model.school.id,
                                f"no partition into at most {budget} feasible trips")
    return model.result(best_masks, "optimal")


# -- heuristic backend -------------------------------------------------------


class _Clock:
    def __init__(self, budget: float | None):
        self.deadline = None if budget is None else time.perf_counter() + budget
        self.expired = False

    def out(self) -> bool:
        if self.deadline is not None and time.perf_counter() >= self.deadline:
            self.expired = True
        return self.expired


def _pack(model: SchoolModel, sequence: Sequence[int]) -> list[int]:
    """Greedy consecutive packing of a stop sequence into feasible trips."""
    masks: list[int] = []
    cur = 0
    for i in sequence:
        cand = cur | (1 << i)
        if cur and not model.feasible(cand):
            masks.append(cur)
            cand = 1 << i
        cur = cand
    if cur:
        masks.append(cur)
    return masks


def _ffd(model: SchoolModel) -> list[int]:
    """First-fit decreasing by student count."""
    masks: list[int] = []
    for i in sorted(range(model.n), key=lambda i: (-model.students[i], i)):
        for j, m in enumerate(masks):
            if model.feasible(m | 1 << i):
                masks[j] = m | 1 << i
                break
        else:
            masks.append(1 << i)
    return masks


def _penalised(model: SchoolModel, masks: Sequence[int]) -> tuple:
    return (max(0, len(masks) - model.budget),) + model.evaluate(masks)


def construct(model: SchoolModel) -> list[int]:
    school = model.school.node
    by_id = model.instance.stop_by_id
    angle = []
    for i, s in enumerate(model.stops):
        node = by_id[s].node
        angle.append((math.atan2(node.y - school.y, node.x - school.x), i))
    ring = [i for _, i in sorted(angle)]
    n = model.n
    n_starts = min(n, MAX_SWEEP_STARTS)
    starts = sorted({(r * n) // n_starts for r in range(n_starts)})
    best, best_key = None, None
    for r in starts:
        masks = _pack(model, ring[r:] + ring[:r])
        k = _penalised(model, masks)
        if best_key is None or k < best_key:
            best, best_key = masks, k
    if best_key[0] > 0:
        masks = _ffd(model)
        k = _penalised(model, masks)
        if k < best_key:
            best, best_key = masks, k
    return best


def _neighbours(model: SchoolModel, masks: list[int]):
    """Yield candidate partitions: relocate, swap, merge and split moves."""
    n_blocks = len(masks)
    can_open = n_blocks < model.budget
    members = [[i for i in range(model.n) if m >> i & 1] for m in masks]
    feasible = model.feasible
    for a in range(n_blocks):
        for i in members[a]:
            bit = 1 << i
            rest = masks[a] ^ bit
            for b in range(n_blocks):
                if b == a:
                    continue
                target = masks[b] | bit
                if feasible(target):
                    new = list(masks)
                    new[b] = target
                    if rest:
                        new[a] = rest
                    else:
                        del new[a]
                    yield new
            if can_open and rest:
                yield masks[:a] + [rest] + masks[a + 1:] + [bit]
    for a in range(n_blocks):
        for b in range(a + 1, n_blocks):
            union = masks[a] | masks[b]
            if feasible(union):
                yield [m for k, m in enumerate(masks) if k not in (a, b)] + [union]
            for i in members[a]:
                for j in members[b]:
                    swap = (1 << i) | (1 << j)
                    ma, mb = masks[a] ^ swap, masks[b] ^ swap
                    if feasible(ma) and feasible(mb):
                        new = list(masks)
                        new[a], new[b] = ma, mb
                        yield new
    if can_open:
        for a in range(n_blocks):
            order = model.block(masks[a]).order
            for cut in range(1, len(order)):
                head = sum(1 << i for i in order[:cut])
                tail = masks[a] ^ head
                if len(order) - cut > 1 or cut > 1:
                    yield masks[:a] + [head, tail] + masks[a + 1:]


def local_search(model: SchoolModel, masks: list[int], clock: _Clock) -> list[int]:
    """Best-improvement descent until a local optimum or the clock runs out."""
    current = _penalised(model, masks)
    for _ in range(MAX_LS_ITERATIONS):
        if clock.out():
            break
        best, best_key = None, current
        for count, cand in enumerate(_neighbours(model, masks)):
            if count % 64 == 63 and clock.out():
                break
            k = _penalised(model, cand)
            if k < best_key:
                best, best_key = cand, k
        if best is None:
            break
        masks, current = best, best_key
    return masks


def heuristic_solve(school, objective: RoutingObjective, config: SolverConfig,
                    instance: Instance, budget: float | None = None,
                    model: SchoolModel | None = None,
                    initial: Sequence[Trip] | None = None) -> SchoolRoutingResult:
    """Sweep construction followed by local search; always returns a feasible plan.

    ``budget`` bounds the local search wall time in seconds (``0`` keeps the
    construction, ``None`` runs to a local optimum).  ``initial`` restarts the
    search from given trips instead of the construction.
    """
    model = model or SchoolModel(school, objective, config, instance)
    _check_singletons(model)
    masks = model.masks_of(initial) if initial is not None else construct(model)
    clock = _Clock(budget)
    if budget is None or budget > 0:
        masks = local_search(model, masks, clock)
    if len(masks) > model.budget:
        raise RoutingInfeasible(model.school.id,
                                f"could not fit the stops into {model.budget} feasible trips")
    return model.result(masks, "time_limited" if clock.expired else "heuristic")


def solve_school(school, objective: RoutingObjective, config: SolverConfig,
                 instance: Instance, budget: float | None = ...) -> SchoolRoutingResult:
    """Exact backend up to ``exact_threshold_stops`` stops, heuristic above."""
    model = SchoolModel(school, objective, config, instance)
    if budget is ...:
        budget = config.time_limit_per_subproblem
    if model.n <= config.exact_threshold_stops:
        return exact_enumerate(model.school, objective, config, instance, model)
    return heuristic_solve(model.school, objective, config, instance, budget, model)
