"""Shared fixtures.

Every schedule built anywhere in the suite passes through
``schedule_from_chains``; we wrap it once per session and check the bus-count
identity (buses = trips - internal links) on all of them at the end.
"""
from __future__ import annotations

import pytest

from schoolbus import scheduling

SCHEDULES: list = []
ACCEPTANCE: dict[int, str] = {}

_original = scheduling.schedule_from_chains


def _recording(chains, graph):
    schedule = _original(chains, graph)
    SCHEDULES.append((sum(len(c) for c in chains), schedule))
    return schedule


scheduling.schedule_from_chains = _recording


def lemma_breaches() -> list[str]:
    out = []
    for n_trips, s in SCHEDULES:
        if s.nob != n_trips - s.n_links or s.nob != len(s.blocks):
            out.append(f"nob {s.nob} vs trips {n_trips} - links {s.n_links}")
    return out


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
    if SCHEDULES:
        bad = lemma_breaches()
        terminalreporter.write_line(
            f"bus-count identity over {len(SCHEDULES)} schedules built in this run: "
            f"{'PASS' if not bad else 'FAIL'} ({len(bad)} breaches)")


def pytest_sessionfinish(session, exitstatus):
    if SCHEDULES and lemma_breaches() and exitstatus == 0:
        session.exitstatus = 1
