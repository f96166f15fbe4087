"""Experiment matrices and CSV reports.

``bench`` runs every method on a grid of generated scenarios, ``sweep`` varies
Algorithm 1's compatibility weight on one instance, and ``grid2`` runs the
weight-adjusted Algorithm 2 over combinations of extra trips, time limit and
ride-time cap.
"""
from __future__ import annotations

import csv
import dataclasses
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .instance import Instance, SolverConfig, generate_instance
from .routing import RoutingInfeasible
from .scda import (METHODS, SizeLimitExceeded, Solution, check_integrated_limits,
                   run_algorithm1, run_algorithm2, run_method)

EXPERIMENT1_GRID = ((2, 20), (4, 40), (6, 60), (8, 80), (10, 100), (15, 150), (20, 200),
                    (30, 300))
SWEEP_VALUES = (1.0, 10.0, 100.0, 1000.0) + tuple(float(v) * 1e4 for v in range(1, 10))

REPORT_FIELDS = ["scenario", "seed", "method", "status", "nob", "not", "tvt_minutes",
                 "tvt_seconds", "runtime_seconds", "best", "detail"]
SUMMARY_FIELDS = ["scenario", "method", "runs", "nob_mean", "nob_min", "nob_max", "not_mean",
                  "tvt_minutes_mean", "runtime_seconds_mean", "best"]
SWEEP_FIELDS = ["alpha_c_oa", "status", "nob", "not", "tvt_minutes", "tvt_seconds",
                "runtime_seconds", "detail"]
GRID2_FIELDS = ["combination", "aat", "time_limit_s", "mrt_s", "status", "nob", "not",
                "avg_tt_minutes", "max_tt_minutes", "max_tt_seconds", "tvt_minutes",
                "runtime_seconds", "detail"]


def minutes_half_up(seconds: int | float) -> int:
    return int((seconds + 30) // 60)


@dataclass(frozen=True)
class ScenarioSpec:
    schools: int
    stops: int
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    @property
    def id(self) -> str:
        return f"{self.schools}x{self.stops}"

    def instance(self, capacity: int = 66, speed_mph: float = 20) -> Instance:
        return generate_instance(self.schools, self.stops, self.seed, capacity=capacity,
                                 speed_mph=speed_mph)


@dataclass
class ReportRow:
    scenario: str
    seed: int | str
    method: str
    status: str = "ok"
    nob: int | None = None
    not_: int | None = None
    tvt_seconds: int | None = None
    runtime_seconds: float | None = None
    best: bool = False
    detail: str = ""

    @classmethod
    def from_solution(cls, scenario: str, seed, method: str, sol: Solution) -> "ReportRow":
        m = sol.metrics
        return cls(scenario, seed, method, "ok", m["nob"], m["not"], m["tvt_s"], sol.runtime)

    @property
    def tvt_minutes(self) -> int | None:
        return None if self.tvt_seconds is None else minutes_half_up(self.tvt_seconds)

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "method": self.method,
                "status": self.status, "nob": _blank(self.nob), "not": _blank(self.not_),
                "tvt_minutes": _blank(self.tvt_minutes), "tvt_seconds": _blank(self.tvt_seconds),
                "runtime_seconds": "" if self.runtime_seconds is None
                else f"{self.runtime_seconds:.3f}",
                "best": "*" if self.best else "", "detail": self.detail}


def _blank(v):
    return "" if v is None else v


def write_csv(path, fields: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def method_label(method: str) -> str:
    return {"exact": "Exact", "alg1": "Alg1", "alg2": "Alg2", "alg2w": "Alg2W", "minn": "MinN",
            "mintt": "MinTT", "minnt": "MinNT"}[method.lower()]


def solve_cell(scenario: str, seed, method: str, instance: Instance,
               config: SolverConfig) -> ReportRow:
    """One (scenario, method) run; failures become rows instead of exceptions."""
    label = method_label(method)
    if method.lower() == "exact":
        try:
            check_integrated_limits(instance, config)
        except SizeLimitExceeded as exc:
            return ReportRow(scenario, seed, label, "skipped", detail=str(exc))
    try:
        sol = run_method(instance, config, method)
    except (RoutingInfeasible, SizeLimitExceeded, ValueError) as exc:
        return ReportRow(scenario, seed, label, "failed", detail=str(exc))
    return ReportRow.from_solution(scenario, seed, label, sol)


def mark_best(rows: list[ReportRow]) -> None:
    """Star the lowest bus count within each (scenario, seed)."""
    groups: dict[tuple, list[ReportRow]] = {}
    for r in rows:
        if r.status == "ok":
            groups.setdefault((r.scenario, r.seed), []).append(r)
    for group in groups.values():
        best = min(r.nob for r in group)
        for r in group:
            r.best = r.nob == best


@dataclass
class BenchReport:
    rows: list[ReportRow]
    summary: list[dict]

    def write(self, path, summary_path=None) -> None:
        write_csv(path, REPORT_FIELDS, (r.as_dict() for r in self.rows))
        if summary_path is not None:
            write_csv(summary_path, SUMMARY_FIELDS, self.summary)


def summarise(rows: list[ReportRow], scenarios: Sequence[str], methods: Sequence[str]) -> list[dict]:
    out = []
    for sc in scenarios:
        cells = []
        for m in methods:
            ok = [r for r in rows if r.scenario == sc and r.method == m and r.status == "ok"]
            if not ok:
                status = {r.status for r in rows if r.scenario == sc and r.method == m}
                cells.append({"scenario": sc, "method": m, "runs": 0,
                              "nob_mean": "/".join(sorted(status)) or "", "nob_min": "",
                              "nob_max": "", "not_mean": "", "tvt_minutes_mean": "",
                              "runtime_seconds_mean": "", "best": ""})
                continue
            nobs = [r.nob for r in ok]
            cells.append({"scenario": sc, "method": m, "runs": len(ok),
                          "nob_mean": round(statistics.fmean(nobs), 3),
                          "nob_min": min(nobs), "nob_max": max(nobs),
                          "not_mean": round(statistics.fmean(r.not_ for r in ok), 3),
                          "tvt_minutes_mean": round(statistics.fmean(r.tvt_minutes for r in ok), 1),
                          "runtime_seconds_mean": round(statistics.fmean(r.runtime_seconds
                                                                         for r in ok), 3),
                          "best": ""})
        means = [c["nob_mean"] for c in cells if c["runs"]]
        if means:
            for c in cells:
                if c["runs"] and c["nob_mean"] == min(means):
                    c["best"] = "*"
        out.extend(cells)
    return out


def cmd_bench(grid: Sequence[tuple[int, int]] = EXPERIMENT1_GRID,
              methods: Sequence[str] = METHODS, seeds: Sequence[int] = (0,),
              config: SolverConfig | None = None, capacity: int = 66,
              speed_mph: float = 20) -> BenchReport:
    config = config or SolverConfig()
    rows: list[ReportRow] = []
    if not methods:
        return BenchReport(rows, [])
    for schools, stops in grid:
        for seed in seeds:
            scenario = ScenarioSpec(schools, stops, seed)
            inst = scenario.instance(capacity, speed_mph)
            for m in methods:
                rows.append(solve_cell(scenario.id, seed, m, inst, config))
    mark_best(rows)
    scenarios = [ScenarioSpec(s, n).id for s, n in grid]
    return BenchReport(rows, summarise(rows, scenarios, [method_label(m) for m in methods]))


def cmd_sweep(instance: Instance, values: Sequence[float] = SWEEP_VALUES,
              config: SolverConfig | None = None) -> list[dict]:
    """Algorithm 1 per compatibility weight with the other weights pinned."""
    config = dataclasses.replace(config or SolverConfig(), alpha_n=1e5, alpha_t=1.0,
                                 alpha_d=0.5)
    rows = []
    for v in values:
        if v < 0:
            raise ValueError(f"sweep weight must be non-negative, got {v}")
        row = {"alpha_c_oa": _number(v), "status": "ok", "nob": "", "not": "",
               "tvt_minutes": "", "tvt_seconds": "", "runtime_seconds": "", "detail": ""}
        try:
            sol = run_algorithm1(instance, config, alpha_c_oa=v)
        except RoutingInfeasible as exc:
            row.update(status="failed", detail=str(exc))
        else:
            m = sol.metrics
            row.update(nob=m["nob"], **{"not": m["not"]}, tvt_minutes=minutes_half_up(m["tvt_s"]),
                       tvt_seconds=m["tvt_s"], runtime_seconds=f"{sol.runtime:.3f}")
        rows.append(row)
    return rows


def _number(v: float):
    return int(v) if float(v).is_integer() else v


@dataclass(frozen=True)
class GridCombination:
    name: str
    aat: int
    time_limit_s: float
    mrt_s: int | None


GRID2_COMBINATIONS = (
    GridCombination("A0TL15", 0, 15, None),
    GridCombination("A0TL30", 0, 30, None),
    GridCombination("A1TL15", 1, 15, None),
    GridCombination("A1TL30", 1, 30, None),
    GridCombination("A1TL120", 1, 120, None),
    GridCombination("A1TL30MRT", 1, 30, 2400),
    GridCombination("A2TL30MRT", 2, 30, 2400),
    GridCombination("A3TL30MRT", 3, 30, 2400),
)


def cmd_grid2(instance: Instance, combinations: Sequence[GridCombination] = GRID2_COMBINATIONS,
              config: SolverConfig | None = None) -> list[dict]:
    """Weight-adjusted Algorithm 2 per (extra trips, time limit, ride-time cap)."""
    config = config or SolverConfig()
    rows = []
    for c in combinations:
        cfg = dataclasses.replace(config, aat=c.aat, time_limit_per_subproblem=c.time_limit_s,
                                  mrt=c.mrt_s)
        row = {"combination": c.name, "aat": c.aat, "time_limit_s": _number(c.time_limit_s),
               "mrt_s": "" if c.mrt_s is None else c.mrt_s, "status": "ok", "nob": "",
               "not": "", "avg_tt_minutes": "", "max_tt_minutes": "", "max_tt_seconds": "",
               "tvt_minutes": "", "runtime_seconds": "", "detail": ""}
        try:
            sol = run_algorithm2(instance, cfg, weight_adjust=True)
        except RoutingInfeasible as exc:
            row.update(status="failed", detail=str(exc))
        else:
            m = sol.metrics
            row.update(nob=m["nob"], **{"not": m["not"]},
                       avg_tt_minutes=f"{m['avg_tt_s'] / 60:.2f}",
                       max_tt_minutes=f"{m['max_tt_s'] / 60:.2f}",
                       max_tt_seconds=m["max_tt_s"], tvt_minutes=minutes_half_up(m["tvt_s"]),
                       runtime_seconds=f"{sol.runtime:.3f}")
        rows.append(row)
    return rows


def cmd_solve(instance: Instance, method: str, config: SolverConfig, out=None,
              report=None, scenario: str = "") -> Solution:
    """Solve one instance; optionally write the solution JSON and a one-row CSV."""
    sol = run_method(instance, config, method)
    if out is not None:
        sol.save(out)
    if report is not None:
        row = ReportRow.from_solution(scenario or Path(str(out or "instance")).stem,
                                      config.seed, method_label(method), sol)
        write_csv(report, REPORT_FIELDS, [row.as_dict()])
    return sol
