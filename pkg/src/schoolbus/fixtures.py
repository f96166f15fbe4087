"""Hand-built instances with known behaviour."""
from __future__ import annotations

from importlib import resources

from .instance import Instance, Node, School, Stop, load_instance

CAPACITY_TRAP_FILE = "capacity_trap.json"


def capacity_trap_instance() -> Instance:
    """Three schools where greedy use of a later school's trips costs a bus.

    School C (bell 14:00) needs two trips.  School B (13:00) can serve its two
    stops either with two short trips (600 + 93 and 834 + 93 s, 27 minutes in
    total) or one long trip (600 + 1043 + 157 s, 30 minutes); every variant
    reaches C in time.  School A (12:45) has one trip that reaches C but not B.

    Taking both short B trips into C leaves nothing for A, so the schedule
    needs three buses.  The long B trip keeps one C trip free for A, and two
    buses suffice.
    """
    b1 = Stop(Node("b1", 37600, 50000), 10, "B")
    b2 = Stop(Node("b2", 19172, 74421), 10, "B")
    c1 = Stop(Node("c1", 42880, 44720), 40, "C")
    c2 = Stop(Node("c2", 42880, 55280), 40, "C")
    a1 = Stop(Node("a1", 45520, 50000), 10, "A")
    schools = (
        School(Node("A", 45520, 74000), 45900, ("a1",)),
        School(Node("B", 20000, 50000), 46800, ("b1", "b2")),
        School(Node("C", 42880, 50000), 50400, ("c1", "c2")),
    )
    return Instance(schools, (a1, b1, b2, c1, c2), Node("depot", 52800, 52800), capacity=66)


def load_capacity_trap() -> Instance:
    """The shipped JSON copy of :func:`capacity_trap_instance`."""
    with resources.as_file(resources.files("schoolbus.data") / CAPACITY_TRAP_FILE) as path:
        return load_instance(path)
