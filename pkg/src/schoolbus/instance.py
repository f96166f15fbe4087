"""Problem data: schools, stops, depot, solver configuration and instance I/O.

All times are integer seconds since midnight and all durations are integer
seconds.  Coordinates are integer feet on a square of side ``square_side``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

FEET_PER_MILE = 5280
SECONDS_PER_HOUR = 3600

DEFAULT_CAPACITY = 66
DEFAULT_SPEED_MPH = 20
DEFAULT_SQUARE_SIDE = 105_600  # 20 miles

# dismissal window used by the generator: 12:00 .. 16:00, 15 minute grid
BELL_WINDOW = (12 * 3600, 16 * 3600)
BELL_STEP = 900
MAX_STUDENTS_PER_STOP = 20


class InstanceError(ValueError):
    """An instance violates one of the data-model invariants."""


class InstanceFormatError(InstanceError):
    """An instance file could not be parsed."""


@dataclass(frozen=True)
class Node:
    id: str
    x: int
    y: int


@dataclass(frozen=True)
class School:
    node: Node
    bell_time: int
    stops: tuple[str, ...]

    @property
    def id(self) -> str:
        return self.node.id


@dataclass(frozen=True)
class Stop:
    node: Node
    students: int
    school: str

    @property
    def id(self) -> str:
        return self.node.id


def _leg_seconds(d2: int, num: int, den: int) -> int:
    """ceil(num * sqrt(d2) / den) computed exactly with integers."""
    x = num * num * d2
    r = math.isqrt(x)
    if r * r != x:
        r += 1
    return -(-r // den)


def _speed_ratio(speed_mph) -> tuple[int, int]:
    # seconds per foot = 3600 / (mph * 5280)
    ratio = Fraction(SECONDS_PER_HOUR) / (Fraction(speed_mph) * FEET_PER_MILE)
    return ratio.numerator, ratio.denominator


def leg_duration(a: Node, b: Node, speed_mph=DEFAULT_SPEED_MPH) -> int:
    """Driving time in whole seconds (rounded up) between two nodes.

    >>> leg_duration(Node("a", 0, 0), Node("b", 5280, 0), 20)
    180
    """
    num, den = _speed_ratio(speed_mph)
    dx, dy = a.x - b.x, a.y - b.y
    return _leg_seconds(dx * dx + dy * dy, num, den)


@dataclass(frozen=True)
class Instance:
    """A complete problem input.

    Node indices used by :attr:`durations`: 0 is the depot, then the schools in
    order, then the stops in order.
    """

    schools: tuple[School, ...]
    stops: tuple[Stop, ...]
    depot: Node
    capacity: int = DEFAULT_CAPACITY
    speed_mph: float = DEFAULT_SPEED_MPH
    square_side: int = DEFAULT_SQUARE_SIDE

    def __post_init__(self):
        object.__setattr__(self, "schools", tuple(self.schools))
        object.__setattr__(self, "stops", tuple(self.stops))
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.capacity, int) or self.capacity <= 0:
            raise InstanceError(f"capacity: must be a positive integer, got {self.capacity!r}")
        if not self.speed_mph > 0:
            raise InstanceError(f"speed_mph: must be positive, got {self.speed_mph!r}")
        if not self.schools:
            raise InstanceError("schools: at least one school is required")
        side = self.square_side
        nodes = [self.depot] + [k.node for k in self.schools] + [s.node for s in self.stops]
        seen_ids = set()
        for node in nodes:
            if node.id in seen_ids:
                raise InstanceError(f"id: duplicate node id {node.id!r}")
            seen_ids.add(node.id)
            for coord in ("x", "y"):
                v = getattr(node, coord)
                if not isinstance(v, (int, np.integer)) or not 0 <= v <= side:
                    raise InstanceError(f"{node.id}.{coord}: {v!r} outside [0, {side}]")
        stop_ids = {s.id for s in self.stops}
        owner: dict[str, str] = {}
        for k in self.schools:
            if not 0 <= k.bell_time < 86400:
                raise InstanceError(f"{k.id}.bell_time_s: {k.bell_time} is not a time of day")
            if not k.stops:
                raise InstanceError(f"{k.id}.stops: school has no stops")
            for sid in k.stops:
                if sid not in stop_ids:
                    raise InstanceError(f"{k.id}.stops: unknown stop {sid!r}")
                if sid in owner:
                    raise InstanceError(
                        f"{sid}.school: stop claimed by both {owner[sid]!r} and {k.id!r}")
                owner[sid] = k.id
        for s in self.stops:
            if s.students < 1:
                raise InstanceError(f"{s.id}.students: must be >= 1, got {s.students}")
            if s.students > self.capacity:
                raise InstanceError(
                    f"{s.id}.students: {s.students} exceeds bus capacity {self.capacity}")
            if owner.get(s.id) != s.school:
                raise InstanceError(
                    f"{s.id}.school: stop names {s.school!r} but is listed by {owner.get(s.id)!r}")

    # lookups ------------------------------------------------------------

    @cached_property
    def school_by_id(self) -> dict[str, School]:
        return {k.id: k for k in self.schools}

    @cached_property
    def stop_by_id(self) -> dict[str, Stop]:
        return {s.id: s for s in self.stops}

    @cached_property
    def stop_position(self) -> dict[str, int]:
        return {s.id: i for i, s in enumerate(self.stops)}

    @cached_property
    def node_index(self) -> dict[str, int]:
        idx = {self.depot.id: 0}
        for i, k in enumerate(self.schools):
            idx[k.id] = 1 + i
        for i, s in enumerate(self.stops):
            idx[s.id] = 1 + len(self.schools) + i
        return idx

    @cached_property
    def durations(self) -> np.ndarray:
        """Integer matrix of leg durations between all nodes (see class doc)."""
        nodes = [self.depot] + [k.node for k in self.schools] + [s.node for s in self.stops]
        num, den = _speed_ratio(self.speed_mph)
        n = len(nodes)
        xs = [int(p.x) for p in nodes]
        ys = [int(p.y) for p in nodes]
        out = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                dx, dy = xs[i] - xs[j], ys[i] - ys[j]
                out[i, j] = out[j, i] = _leg_seconds(dx * dx + dy * dy, num, den)
        return out

    @cached_property
    def dur(self) -> list[list[int]]:
        # nested lists index faster than numpy scalars in the hot loops
        return self.durations.tolist()

    def leg(self, a: str, b: str) -> int:
        return self.dur[self.node_index[a]][self.node_index[b]]

    @property
    def speed_fps(self) -> float:
        return self.speed_mph * FEET_PER_MILE / SECONDS_PER_HOUR

    def school_students(self, school: School) -> int:
        return sum(self.stop_by_id[s].students for s in school.stops)

    def mnt(self, school: School | str) -> int:
        if isinstance(school, str):
            school = self.school_by_id[school]
        return compute_mnt(school, self.capacity, self)


def compute_mnt(school: School, capacity: int, instance: Instance | None = None,
                students: int | None = None) -> int:
    """Minimum number of trips: ceil(total students / capacity)."""
    if students is None:
        if instance is None:
            raise ValueError("need the instance or the student total")
        students = instance.school_students(school)
    return -(-students // capacity)


@dataclass(frozen=True)
class SolverConfig:
    """Objective weights and solver knobs.

    ``aat`` is either an integer or the string ``"mnt"`` (AAT equal to MNT).
    ``mrt`` is the maximum ride time in seconds, ``None`` disables it.
    """

    alpha_b: float = 1e5
    alpha_n: float = 1e5
    alpha_c: float = 1e5
    alpha_t: float = 1.0
    alpha_d: float = 0.5
    alpha_c_oa: float = 5e4
    alpha_c_ca: float = 9e4
    alpha_d_oa: float | None = None
    mrt: int | None = 5400
    aat: Union[int, str] = "mnt"
    buffer: int = 0
    time_limit_per_subproblem: float | None = 30.0
    exact_threshold_stops: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.aat != "mnt" and (not isinstance(self.aat, int) or self.aat < 0):
            raise ValueError(f"aat must be a non-negative integer or 'mnt', got {self.aat!r}")
        if self.mrt is not None and self.mrt <= 0:
            raise ValueError("mrt must be positive or None")
        if self.buffer < 0:
            raise ValueError("buffer must be non-negative")

    def trip_budget(self, mnt: int) -> int:
        """Upper bound MNT + AAT on the number of trips of one school."""
        return mnt + (mnt if self.aat == "mnt" else int(self.aat))

    @property
    def effective_alpha_d_oa(self) -> float:
        return self.alpha_d if self.alpha_d_oa is None else self.alpha_d_oa


# -- generation --------------------------------------------------------------


def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
            max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """k-means++ seeding followed by Lloyd iterations."""
    n = len(points)
    centers = np.empty((k, 2), dtype=float)
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[c] = points[idx]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))

    labels = np.full(n, -1)
    for _ in range(max_iter):
        dist = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return labels, centers


def generate_instance(n_schools: int, n_stops: int, seed: int, *,
                      capacity: int = DEFAULT_CAPACITY,
                      speed_mph: float = DEFAULT_SPEED_MPH,
                      square_side: int = DEFAULT_SQUARE_SIDE,
                      max_students: int = MAX_STUDENTS_PER_STOP) -> Instance:
    """Random instance: uniform nodes clustered by k-means into schools.

    The node nearest each centroid becomes the school; the rest of its cluster
    are that school's stops.  Clusterings that leave a school without stops
    are redrawn from the same random stream, so the result is still a pure
    function of ``seed``.
    """
    if n_schools < 1:
        raise ValueError("need at least one school")
    if n_stops < n_schools:
        raise ValueError(f"n_stops ({n_stops}) must be >= n_schools ({n_schools})")
    rng = np.random.default_rng(seed)
    n = n_schools + n_stops
    while True:
        coords = rng.integers(0, square_side + 1, size=(n, 2))
        labels, centers = _kmeans(coords.astype(float), n_schools, rng)
        sizes = np.bincount(labels, minlength=n_schools)
        if (sizes >= 2).all():
            break

    # the cluster order is arbitrary; number schools by their lowest node id
    order = sorted(range(n_schools), key=lambda c: int(np.flatnonzero(labels == c)[0]))
    school_nodes = {}
    for c in order:
        members = np.flatnonzero(labels == c)
        d2 = ((coords[members] - centers[c]) ** 2).sum(axis=1)
        school_nodes[c] = int(members[int(np.argmin(d2))])  # argmin keeps lowest id on ties

    students = rng.integers(1, max_students + 1, size=n)
    n_slots = (BELL_WINDOW[1] - BELL_WINDOW[0]) // BELL_STEP + 1
    bells = BELL_WINDOW[0] + BELL_STEP * rng.integers(0, n_slots, size=n_schools)

    schools, stops = [], []
    stop_counter = 0
    stop_names: dict[int, str] = {}
    for node_id in range(n):
        c = int(labels[node_id])
        if school_nodes[c] == node_id:
            continue
        stop_names[node_id] = f"p{stop_counter}"
        stop_counter += 1
    for rank, c in enumerate(order):
        sid = f"k{rank}"
        members = [int(m) for m in np.flatnonzero(labels == c) if m != school_nodes[c]]
        x, y = coords[school_nodes[c]]
        schools.append(School(Node(sid, int(x), int(y)), int(bells[rank]),
                              tuple(stop_names[m] for m in members)))
        for m in members:
            x, y = coords[m]
            stops.append(Stop(Node(stop_names[m], int(x), int(y)), int(students[m]), sid))
    stops.sort(key=lambda s: int(s.id[1:]))
    depot = Node("depot", square_side // 2, square_side // 2)
    return Instance(tuple(schools), tuple(stops), depot, capacity, speed_mph, square_side)


# -- file I/O ----------------------------------------------------------------


def instance_to_dict(instance: Instance) -> dict:
    return {
        "capacity": instance.capacity,
        "speed_mph": instance.speed_mph,
        "square_side_ft": instance.square_side,
        "depot": {"x": instance.depot.x, "y": instance.depot.y},
        "schools": [{"id": k.id, "x": k.node.x, "y": k.node.y, "bell_time_s": k.bell_time}
                    for k in instance.schools],
        "stops": [{"id": s.id, "x": s.node.x, "y": s.node.y, "students": s.students,
                   "school": s.school} for s in instance.stops],
    }


def _field(obj: dict, key: str, where: str, kind=int):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    if key not in obj:
        raise InstanceFormatError(f"{where}.{key}: missing field")
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise InstanceFormatError(f"{where}.{key}: expected an integer, got {value!r}")
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise InstanceFormatError(f"{where}.{key}: expected a number, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise InstanceFormatError(f"{where}.{key}: expected a string, got {value!r}")
    return value


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InstanceFormatError("top level: expected an object")
    capacity = _field(data, "capacity", "instance")
    speed = _field(data, "speed_mph", "instance", float)
    side = _field(data, "square_side_ft", "instance")
    d = data.get("depot")
    depot = Node("depot", _field(d, "x", "depot"), _field(d, "y", "depot"))
    raw_stops = data.get("stops")
    raw_schools = data.get("schools")
    if not isinstance(raw_stops, list):
        raise InstanceFormatError("instance.stops: expected a list")
    if not isinstance(raw_schools, list):
        raise InstanceFormatError("instance.schools: expected a list")
    stops = []
    members: dict[str, list[str]] = {}
    for i, s in enumerate(raw_stops):
        where = f"stops[{i}]"
        stop = Stop(Node(_field(s, "id", where, str), _field(s, "x", where), _field(s, "y", where)),
                    _field(s, "students", where), _field(s, "school", where, str))
        for prev in stops:
            if prev.id == stop.id:
                raise InstanceError(f"{where}.school: stop {stop.id!r} claimed by both "
                                    f"{prev.school!r} and {stop.school!r}")
        stops.append(stop)
        members.setdefault(stop.school, []).append(stop.id)
    schools = []
    for i, k in enumerate(raw_schools):
        where = f"schools[{i}]"
        sid = _field(k, "id", where, str)
        schools.append(School(Node(sid, _field(k, "x", where), _field(k, "y", where)),
                              _field(k, "bell_time_s", where), tuple(members.pop(sid, ()))))
    if members:
        orphan = sorted(members)[0]
        raise InstanceError(f"stops.school: unknown school {orphan!r}")
    return Instance(tuple(schools), tuple(stops), depot, capacity, speed, side)


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n")


def load_instance(path) -> Instance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data)
