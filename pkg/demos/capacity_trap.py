"""Walk through the three-school fixture where greedy compatibility costs a bus.

    python demos/capacity_trap.py
"""
from schoolbus import SolverConfig, run_algorithm2, run_baseline
from schoolbus.fixtures import capacity_trap_instance


def describe(sol):
    print(f"{sol.method}: {sol.nob} buses, {len(sol.plan.trips)} trips")
    targets = sol.assignments()
    for t in sol.plan.trips:
        arrow = f" -> {targets[t.id]}" if targets.get(t.id) else ""
        print(f"  {t.id:6} {t.school} stops={','.join(t.stops):8} tt={t.travel_time:5d} s{arrow}")
    for i, block in enumerate(sol.schedule.blocks):
        print(f"  bus {i}: {' -> '.join(block.trips)}")
    if sol.utc_trace:
        print("  unassigned trip capacity after each school:")
        for state in sol.utc_trace[1:]:
            print("   ", dict(sorted(state.utc.items())))
    print()


def main():
    inst = capacity_trap_instance()
    config = SolverConfig()
    for k in inst.schools:
        print(f"school {k.id}: bell {k.bell_time // 3600:02d}:{k.bell_time % 3600 // 60:02d}, "
              f"stops {', '.join(k.stops)}")
    print()
    # full reward: B grabs both trips of C with two short trips
    describe(run_algorithm2(inst, config, weight_adjust=False))
    # reduced reward: one long B trip leaves a C trip for A
    describe(run_algorithm2(inst, config, weight_adjust=True))
    describe(run_baseline(inst, config, "MinNT"))


if __name__ == "__main__":
    main()
