"""Chaining active trips into buses.

With trip start times fixed at the bell times the scheduling problem is a
minimum-cost path cover of the compatibility DAG, solved exactly as an
assignment between "successor slots" and "predecessor slots".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .compatibility import EDT, SDT, CompatibilityGraph
from .instance import SolverConfig
from .trips import RoutingPlan, Violation

BRUTE_FORCE_LIMIT = 9


@dataclass(frozen=True)
class BusBlock:
    trips: tuple[str, ...]
    pull_out: int
    links: tuple[tuple[str, str, int], ...]
    pull_in: int

    @property
    def deadhead(self) -> int:
        return self.pull_out + sum(d for _, _, d in self.links) + self.pull_in

    def to_dict(self) -> dict:
        return {"trips": list(self.trips), "pull_out_s": self.pull_out,
                "links": [{"from": a, "to": b, "dd_s": d} for a, b, d in self.links],
                "pull_in_s": self.pull_in}

    @classmethod
    def from_dict(cls, data: dict) -> "BusBlock":
        return cls(tuple(data["trips"]), int(data["pull_out_s"]),
                   tuple((l["from"], l["to"], int(l["dd_s"])) for l in data["links"]),
                   int(data["pull_in_s"]))


@dataclass(frozen=True)
class Schedule:
    blocks: tuple[BusBlock, ...]
    nob: int
    total_deadhead: int

    @property
    def n_links(self) -> int:
        return sum(len(b.links) for b in self.blocks)

    @property
    def internal_deadhead(self) -> int:
        return sum(d for b in self.blocks for _, _, d in b.links)

    @property
    def depot_deadhead(self) -> int:
        return sum(b.pull_out + b.pull_in for b in self.blocks)

    def objective(self, config: SolverConfig) -> float:
        return config.alpha_b * self.nob + config.alpha_d * self.total_deadhead

    def to_dict(self) -> dict:
        return {"blocks": [b.to_dict() for b in self.blocks], "nob": self.nob,
                "total_deadhead_s": self.total_deadhead}

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        return cls(tuple(BusBlock.from_dict(b) for b in data["blocks"]), int(data["nob"]),
                   int(data["total_deadhead_s"]))


def schedule_from_chains(chains: list[list[str]], graph: CompatibilityGraph) -> Schedule:
    dd = graph.deadhead
    blocks = []
    for chain in chains:
        links = tuple((a, b, dd[a, b]) for a, b in zip(chain, chain[1:]))
        blocks.append(BusBlock(tuple(chain), dd[SDT, chain[0]], links, dd[chain[-1], EDT]))
    return Schedule(tuple(blocks), len(blocks), sum(b.deadhead for b in blocks))


def solve_schedule(plan: RoutingPlan, graph: CompatibilityGraph,
                   config: SolverConfig | None = None) -> Schedule:
    """Minimise alpha_b * buses + alpha_d * deadhead over E, exactly."""
    config = config or SolverConfig()
    ids = [t.id for t in plan.trips]
    n = len(ids)
    if n == 0:
        return Schedule((), 0, 0)
    dd = graph.deadhead
    # relative to every trip on its own bus, linking a->b saves a bus and
    # swaps the pull-in of a and pull-out of b for the deadhead a->b
    cost = np.full((n, 2 * n), np.inf)
    cost[:, n:] = 0.0
    for i, a in enumerate(ids):
        pin = dd[a, EDT]
        for j, b in enumerate(ids):
            if (a, b) in graph.pairs:
                cost[i, j] = config.alpha_d * (dd[a, b] - pin - dd[SDT, b]) - config.alpha_b
    rows, cols = linear_sum_assignment(cost)
    succ = {}
    for i, j in zip(rows, cols):
        if j < n:
            succ[ids[i]] = ids[j]
    has_pred = set(succ.values())
    chains = []
    for t in ids:
        if t in has_pred:
            continue
        chain = [t]
        while chain[-1] in succ:
            chain.append(succ[chain[-1]])
        chains.append(chain)
    return schedule_from_chains(chains, graph)


def _ordered_trips(plan: RoutingPlan, graph: CompatibilityGraph) -> list[str]:
    """Trip ids in an order compatible with every internal pair of E."""
    ids = [t.id for t in plan.trips]
    preds = {t: set() for t in ids}
    for a, b in graph.internal_pairs():
        preds[b].add(a)
    out, done = [], set()
    while len(out) < len(ids):
        ready = [t for t in ids if t not in done and preds[t] <= done]
        if not ready:
            raise ValueError("compatible pair set has a cycle")
        out.append(ready[0])
        done.add(ready[0])
    return out


def brute_force_schedule(plan: RoutingPlan, graph: CompatibilityGraph,
                         config: SolverConfig | None = None) -> Schedule:
    """Exhaustive search over all chain partitions consistent with E."""
    config = config or SolverConfig()
    if len(plan.trips) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} trips")
    order = _ordered_trips(plan, graph)
    dd = graph.deadhead
    pairs = graph.pairs
    best = [None, None]

    def rec(i: int, chains: list[list[str]]):
        if i == len(order):
            total = sum(dd[SDT, c[0]] + dd[c[-1], EDT]
                        + sum(dd[a, b] for a, b in zip(c, c[1:])) for c in chains)
            key = (config.alpha_b * len(chains) + config.alpha_d * total, len(chains), total)
            if best[0] is None or key < best[0]:
                best[0] = key
                best[1] = [list(c) for c in chains]
            return
        t = order[i]
        for c in chains:
            if (c[-1], t) in pairs:
                c.append(t)
                rec(i + 1, chains)
                c.pop()
        chains.append([t])
        rec(i + 1, chains)
        chains.pop()

    rec(0, [])
    return schedule_from_chains(best[1] or [], graph)


def verify_schedule(schedule: Schedule, plan: RoutingPlan,
                    graph: CompatibilityGraph) -> list[Violation]:
    out = []
    active = [t.id for t in plan.trips]
    seen: dict[str, int] = {}
    for bi, block in enumerate(schedule.blocks):
        name = f"block {bi}"
        if not block.trips:
            out.append(Violation("nonempty", name, "bus serves no trips"))
            continue
        for t in block.trips:
            seen[t] = seen.get(t, 0) + 1
        if (SDT, block.trips[0]) not in graph.pairs:
            out.append(Violation("pair", name, f"(SDT, {block.trips[0]}) not in E"))
        elif graph.deadhead[SDT, block.trips[0]] != block.pull_out:
            out.append(Violation("deadhead", name, "pull-out deadhead does not recompute"))
        if (block.trips[-1], EDT) not in graph.pairs:
            out.append(Violation("pair", name, f"({block.trips[-1]}, EDT) not in E"))
        elif graph.deadhead[block.trips[-1], EDT] != block.pull_in:
            out.append(Violation("deadhead", name, "pull-in deadhead does not recompute"))
        consecutive = list(zip(block.trips, block.trips[1:]))
        if [(a, b) for a, b, _ in block.links] != consecutive:
            out.append(Violation("links", name, "links do not match the trip sequence"))
        for a, b, d in block.links:
            if (a, b) not in graph.pairs:
                out.append(Violation("pair", name, f"incompatible link {a} -> {b}"))
            elif graph.deadhead[a, b] != d:
                out.append(Violation("deadhead", name, f"link {a} -> {b} deadhead {d} "
                                                       f"!= {graph.deadhead[a, b]}"))
    for t in active:
        if seen.get(t, 0) == 0:
            out.append(Violation("coverage", t, "active trip not served by any bus"))
        elif seen[t] > 1:
            out.append(Violation("coverage", t, f"trip served {seen[t]} times"))
    active_set = set(active)
    for t in seen:
        if t not in active_set:
            out.append(Violation("coverage", t, "unknown trip in schedule"))
    if schedule.nob != len(schedule.blocks):
        out.append(Violation("nob", "schedule", f"nob {schedule.nob} != {len(schedule.blocks)} blocks"))
    total = sum(b.deadhead for b in schedule.blocks)
    if schedule.total_deadhead != total:
        out.append(Violation("deadhead", "schedule",
                             f"total deadhead {schedule.total_deadhead} != {total}"))
    if schedule.nob != len(active) - schedule.n_links:
        out.append(Violation("lemma", "schedule",
                             f"nob {schedule.nob} != trips {len(active)} - links {schedule.n_links}"))
    return out
