"""Application task graphs and the three-device system model.

A :class:`TaskGraph` is a DAG of profiled tasks; a :class:`SystemModel`
describes the edge/hub/cloud devices, their budgets, the directional
communication channels between them, and how unconnected device pairs
are routed through an intermediate device.  Both are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

from .units import parse_optional, parse_quantity, si_number

SCHEMA_VERSION = 1


class DeviceRole(str, Enum):
    EDGE = "e"
    HUB = "h"
    CLOUD = "c"

    def __repr__(self) -> str:  # compact in error messages and reprs
        return self.value


ROLES: tuple[DeviceRole, ...] = (DeviceRole.EDGE, DeviceRole.HUB, DeviceRole.CLOUD)
ROLE_INDEX = {role: i for i, role in enumerate(ROLES)}


def role_from(value) -> DeviceRole:
    try:
        return DeviceRole(value)
    except ValueError:
        raise ValueError(f"unknown device role {value!r}; expected one of e, h, c") from None


class GraphValidationError(ValueError):
    """Raised when an operation requires a valid task graph and gets none."""


class SystemModelError(ValueError):
    """Raised for inconsistent device/channel/relay definitions."""


@dataclass(frozen=True)
class Task:
    """One application task with its device-independent profile.

    memory/storage are bytes, output_data is bits, latency maps each
    allowed device to seconds, power to watts.
    """

    id: int
    memory: Fraction
    storage: Fraction
    output_data: Fraction
    allowed: tuple[DeviceRole, ...]
    latency: Mapping[DeviceRole, Fraction] = field(default_factory=dict)
    power: Mapping[DeviceRole, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        ordered = tuple(r for r in ROLES if r in set(self.allowed))
        object.__setattr__(self, "allowed", ordered)

    @property
    def fixed(self) -> bool:
        return len(self.allowed) == 1


@dataclass(frozen=True)
class TaskGraph:
    tasks: tuple[Task, ...]
    arcs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "tasks", tuple(sorted(self.tasks, key=lambda t: t.id))
        )
        object.__setattr__(self, "arcs", tuple(sorted(self.arcs)))

    @cached_property
    def task_map(self) -> dict[int, Task]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def successors(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {t.id: [] for t in self.tasks}
        for i, j in self.arcs:
            if i in out:
                out[i].append(j)
        return {i: tuple(js) for i, js in out.items()}

    @cached_property
    def predecessors(self) -> dict[int, tuple[int, ...]]:
        inc: dict[int, list[int]] = {t.id: [] for t in self.tasks}
        for i, j in self.arcs:
            if j in inc:
                inc[j].append(i)
        return {j: tuple(is_) for j, is_ in inc.items()}

    def task(self, task_id: int) -> Task:
        try:
            return self.task_map[task_id]
        except KeyError:
            raise KeyError(f"no task with id {task_id}") from None


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "valid" if self.ok else "; ".join(self.issues)


def validate_task_graph(graph: TaskGraph) -> ValidationReport:
    """Collect every invariant violation instead of failing on the first."""
    issues: list[str] = []
    ids = [t.id for t in graph.tasks]
    seen = set()
    for tid in ids:
        if tid in seen:
            issues.append(f"duplicate task id {tid}")
        seen.add(tid)
    if not graph.tasks:
        issues.append("graph has no tasks")
    elif sorted(seen) != list(range(1, len(seen) + 1)):
        issues.append("task ids are not dense 1..|T|")

    for task in graph.tasks:
        if not task.allowed:
            issues.append(f"task {task.id}: empty allowed-device set")
        for quantity, label in (
            (task.memory, "memory"),
            (task.storage, "storage"),
            (task.output_data, "output data"),
        ):
            if quantity < 0:
                issues.append(f"task {task.id}: negative {label}")
        for role in task.allowed:
            if role not in task.latency:
                issues.append(f"task {task.id}: missing profile entry (latency on {role.value})")
            elif task.latency[role] < 0:
                issues.append(f"task {task.id}: negative latency on {role.value}")
            if role not in task.power:
                issues.append(f"task {task.id}: missing profile entry (power on {role.value})")
            elif task.power[role] < 0:
                issues.append(f"task {task.id}: negative power on {role.value}")
        for role in set(task.latency) | set(task.power):
            if role not in task.allowed:
                issues.append(f"task {task.id}: profile entry for disallowed device {role.value}")

    arc_seen = set()
    for i, j in graph.arcs:
        if i == j:
            issues.append(f"self-arc on task {i}")
            continue
        if (i, j) in arc_seen:
            issues.append(f"duplicate arc {i}->{j}")
        arc_seen.add((i, j))
        for endpoint in (i, j):
            if endpoint not in seen:
                issues.append(f"dangling arc endpoint {endpoint} in arc {i}->{j}")

    if _find_cycle(seen, arc_seen):
        issues.append("cycle detected among arcs")

    return ValidationReport(tuple(issues))


def _find_cycle(nodes: set[int], arcs: set[tuple[int, int]]) -> bool:
    out: dict[int, list[int]] = {n: [] for n in nodes}
    indeg = {n: 0 for n in nodes}
    for i, j in arcs:
        if i in out and j in indeg:
            out[i].append(j)
            indeg[j] += 1
    ready = [n for n, d in indeg.items() if d == 0]
    visited = 0
    while ready:
        n = ready.pop()
        visited += 1
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return visited != len(nodes)


def require_valid(graph: TaskGraph) -> None:
    report = validate_task_graph(graph)
    if not report.ok:
        raise GraphValidationError(str(report))


def out_degree(graph: TaskGraph, task_id: int) -> int:
    """Number of immediate successors of the task."""
    if task_id not in graph.task_map:
        raise KeyError(f"no task with id {task_id}")
    return len(graph.successors[task_id])


def topological_order(graph: TaskGraph) -> tuple[int, ...]:
    """Deterministic topological order (smallest task id first among ready)."""
    import heapq

    indeg = {t.id: len(graph.predecessors[t.id]) for t in graph.tasks}
    heap = [tid for tid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        tid = heapq.heappop(heap)
        order.append(tid)
        for succ in graph.successors[tid]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(heap, succ)
    if len(order) != len(graph.tasks):
        raise GraphValidationError("cycle detected among arcs")
    return tuple(order)


@dataclass(frozen=True)
class Device:
    """A computational device and its resource budgets (None = unbounded)."""

    role: DeviceRole
    name: str
    memory_budget: Fraction | None
    storage_budget: Fraction | None
    energy_budget: Fraction | None
    idle_power: Fraction
    max_power: Fraction

    def __post_init__(self):
        if not (0 <= self.idle_power < self.max_power):
            raise SystemModelError(
                f"device {self.name!r}: idle power must satisfy 0 <= idle < max"
            )
        for label, budget in (
            ("memory", self.memory_budget),
            ("storage", self.storage_budget),
            ("energy", self.energy_budget),
        ):
            if budget is not None and budget <= 0:
                raise SystemModelError(f"device {self.name!r}: finite {label} budget must be > 0")


@dataclass(frozen=True)
class Channel:
    """Directional link: bandwidth in bits/s, tx/rx energy in J/bit."""

    src: DeviceRole
    dst: DeviceRole
    bandwidth: Fraction
    tx_energy: Fraction
    rx_energy: Fraction

    def __post_init__(self):
        if self.src == self.dst:
            raise SystemModelError("channel endpoints must differ")
        if self.bandwidth <= 0:
            raise SystemModelError(f"channel {self.src.value}->{self.dst.value}: bandwidth must be > 0")
        if self.tx_energy < 0 or self.rx_energy < 0:
            raise SystemModelError(
                f"channel {self.src.value}->{self.dst.value}: per-bit energies must be >= 0"
            )


@dataclass(frozen=True)
class SystemModel:
    devices: Mapping[DeviceRole, Device]
    channels: Mapping[tuple[DeviceRole, DeviceRole], Channel]
    relay: Mapping[tuple[DeviceRole, DeviceRole], DeviceRole]

    def __post_init__(self):
        if set(self.devices) != set(ROLES):
            raise SystemModelError("system model needs exactly one device per role e, h, c")
        for (k, l), channel in self.channels.items():
            if (channel.src, channel.dst) != (k, l):
                raise SystemModelError(f"channel stored under wrong key {k.value}->{l.value}")
        for k in ROLES:
            for l in ROLES:
                if k == l:
                    continue
                if (k, l) in self.channels:
                    if (k, l) in self.relay:
                        raise SystemModelError(
                            f"pair {k.value}->{l.value} is both directly connected and relayed"
                        )
                    continue
                m = self.relay.get((k, l))
                if m is None:
                    raise SystemModelError(
                        f"pair {k.value}->{l.value} has neither a channel nor a relay entry"
                    )
                if m in (k, l):
                    raise SystemModelError(f"relay for {k.value}->{l.value} must be a third device")
                if (k, m) not in self.channels or (m, l) not in self.channels:
                    raise SystemModelError(
                        f"relay {k.value}->{m.value}->{l.value} requires both direct hops"
                    )

    def device(self, role: DeviceRole) -> Device:
        return self.devices[role]

    def channel(self, k: DeviceRole, l: DeviceRole) -> Channel:
        return self.channels[(k, l)]

    def route(self, k: DeviceRole, l: DeviceRole) -> tuple[int, DeviceRole | None]:
        """(0, None) for same-device or direct pairs, (1, m) when relayed via m."""
        if k == l or (k, l) in self.channels:
            return 0, None
        return 1, self.relay[(k, l)]


# --- JSON serialization -------------------------------------------------
#
# Task graph schema:
#   {"schema": 1,
#    "tasks": [{"id": 1, "memory": "64MiB", "storage": "10MiB",
#               "output_data": "2Mbit", "allowed": ["e", "h", "c"],
#               "latency": {"e": "120ms", ...}, "power": {"e": "4.2W", ...}}],
#    "arcs": [[1, 2], ...]}
#
# System schema:
#   {"schema": 1,
#    "devices": {"e": {"name": ..., "memory_budget": "8GiB",
#                      "storage_budget": "32GiB", "energy_budget": "129.96Wh",
#                      "idle_power": "1.9W", "max_power": "15W"}, ...},
#    "channels": [{"from": "e", "to": "h", "bandwidth": "15Mbit/s",
#                  "tx_energy": "1uJ/bit", "rx_energy": "0.7uJ/bit"}, ...],
#    "relay": {"e->c": "h", "c->e": "h"}}
#
# Bare numbers are SI base units; suffixed strings are converted on load.


def _check_schema(data: Mapping, kind: str) -> None:
    version = data.get("schema")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{kind} file: unsupported schema {version!r} (expected {SCHEMA_VERSION})")


def task_graph_from_dict(data: Mapping) -> TaskGraph:
    _check_schema(data, "task graph")
    tasks = []
    for entry in data["tasks"]:
        allowed = tuple(role_from(r) for r in entry["allowed"])
        latency = {role_from(r): parse_quantity(v, "time") for r, v in entry.get("latency", {}).items()}
        power = {role_from(r): parse_quantity(v, "power") for r, v in entry.get("power", {}).items()}
        tasks.append(
            Task(
                id=int(entry["id"]),
                memory=parse_quantity(entry["memory"], "memory"),
                storage=parse_quantity(entry["storage"], "memory"),
                output_data=parse_quantity(entry["output_data"], "data"),
                allowed=allowed,
                latency=latency,
                power=power,
            )
        )
    arcs = tuple((int(i), int(j)) for i, j in data.get("arcs", []))
    return TaskGraph(tasks=tuple(tasks), arcs=arcs)


def task_graph_to_dict(graph: TaskGraph) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "tasks": [
            {
                "id": t.id,
                "memory": si_number(t.memory),
                "storage": si_number(t.storage),
                "output_data": si_number(t.output_data),
                "allowed": [r.value for r in t.allowed],
                "latency": {r.value: si_number(t.latency[r]) for r in t.allowed if r in t.latency},
                "power": {r.value: si_number(t.power[r]) for r in t.allowed if r in t.power},
            }
            for t in graph.tasks
        ],
        "arcs": [[i, j] for i, j in graph.arcs],
    }


def system_model_from_dict(data: Mapping) -> SystemModel:
    _check_schema(data, "system model")
    devices = {}
    for key, entry in data["devices"].items():
        role = role_from(key)
        devices[role] = Device(
            role=role,
            name=str(entry.get("name", role.value)),
            memory_budget=parse_optional(entry.get("memory_budget"), "memory"),
            storage_budget=parse_optional(entry.get("storage_budget"), "memory"),
            energy_budget=parse_optional(entry.get("energy_budget"), "energy"),
            idle_power=parse_quantity(entry.get("idle_power", 0), "power"),
            max_power=parse_quantity(entry["max_power"], "power"),
        )
    channels = {}
    for entry in data["channels"]:
        channel = Channel(
            src=role_from(entry["from"]),
            dst=role_from(entry["to"]),
            bandwidth=parse_quantity(entry["bandwidth"], "bandwidth"),
            tx_energy=parse_quantity(entry["tx_energy"], "energy_per_bit"),
            rx_energy=parse_quantity(entry["rx_energy"], "energy_per_bit"),
        )
        channels[(channel.src, channel.dst)] = channel
    relay = {}
    for key, via in data.get("relay", {}).items():
        k_str, _, l_str = key.partition("->")
        relay[(role_from(k_str.strip()), role_from(l_str.strip()))] = role_from(via)
    return SystemModel(devices=devices, channels=channels, relay=relay)


def system_model_to_dict(system: SystemModel) -> dict:
    def budget(value):
        return None if value is None else si_number(value)

    return {
        "schema": SCHEMA_VERSION,
        "devices": {
            role.value: {
                "name": dev.name,
                "memory_budget": budget(dev.memory_budget),
                "storage_budget": budget(dev.storage_budget),
                "energy_budget": budget(dev.energy_budget),
                "idle_power": si_number(dev.idle_power),
                "max_power": si_number(dev.max_power),
            }
            for role, dev in sorted(system.devices.items(), key=lambda kv: ROLE_INDEX[kv[0]])
        },
        "channels": [
            {
                "from": ch.src.value,
                "to": ch.dst.value,
                "bandwidth": si_number(ch.bandwidth),
                "tx_energy": si_number(ch.tx_energy),
                "rx_energy": si_number(ch.rx_energy),
            }
            for _, ch in sorted(
                system.channels.items(),
                key=lambda kv: (ROLE_INDEX[kv[0][0]], ROLE_INDEX[kv[0][1]]),
            )
        ],
        "relay": {
            f"{k.value}->{l.value}": m.value
            for (k, l), m in sorted(
                system.relay.items(), key=lambda kv: (ROLE_INDEX[kv[0][0]], ROLE_INDEX[kv[0][1]])
            )
        },
    }


def dump_json(data: Mapping, path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_task_graph(path: str | Path) -> TaskGraph:
    return task_graph_from_dict(json.loads(Path(path).read_text()))


def load_system_model(path: str | Path) -> SystemModel:
    return system_model_from_dict(json.loads(Path(path).read_text()))


def save_task_graph(graph: TaskGraph, path: str | Path) -> None:
    dump_json(task_graph_to_dict(graph), path)


def save_system_model(system: SystemModel, path: str | Path) -> None:
    dump_json(system_model_to_dict(system), path)


def make_system_model(
    devices: Iterable[Device],
    channels: Iterable[Channel],
    relay: Mapping[tuple[DeviceRole, DeviceRole], DeviceRole] | None = None,
) -> SystemModel:
    """Assemble a SystemModel, defaulting the relay to hub-in-the-middle."""
    device_map = {d.role: d for d in devices}
    channel_map = {(c.src, c.dst): c for c in channels}
    if relay is None:
        relay = {}
        for k in ROLES:
            for l in ROLES:
                if k != l and (k, l) not in channel_map:
                    (m,) = [r for r in ROLES if r not in (k, l)]
                    relay[(k, l)] = m
    return SystemModel(devices=device_map, channels=channel_map, relay=dict(relay))
