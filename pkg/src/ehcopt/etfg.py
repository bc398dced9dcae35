"""Expansion of a task graph over the candidate devices.

Every task becomes one candidate node per device it may run on, and every
dependency becomes one arc per device pair.  Candidate nodes carry the
profiled execution latency/power and the derived energy (power x time);
arcs carry the transfer latency and energy for the device pair, which are
zero on the same device and routed through the intermediate device for
pairs without a direct channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterator, NamedTuple

from .model import (
    ROLE_INDEX,
    DeviceRole,
    SystemModel,
    TaskGraph,
    require_valid,
)
from .units import si_number


class TopologyError(ValueError):
    """Raised when a device pair has neither a channel nor a relay route."""


def indicator(k: DeviceRole, l: DeviceRole, system: SystemModel) -> tuple[int, DeviceRole | None]:
    """Whether k->l traffic is relayed, and through which device."""
    try:
        return system.route(k, l)
    except KeyError:
        raise TopologyError(f"no channel and no relay for pair {k.value}->{l.value}") from None


def comm_latency(data_bits, k: DeviceRole, l: DeviceRole, system: SystemModel) -> Fraction:
    """Transfer time for the data over the k->l route; zero on-device."""
    data_bits = Fraction(data_bits)
    if data_bits < 0:
        raise ValueError("data size must be >= 0")
    if k == l:
        return Fraction(0)
    relayed, via = indicator(k, l, system)
    if not relayed:
        return data_bits / system.channel(k, l).bandwidth
    return data_bits * (
        1 / system.channel(k, via).bandwidth + 1 / system.channel(via, l).bandwidth
    )


def comp_energy(power, latency) -> Fraction:
    """Energy drawn by a task execution: power times run time."""
    power, latency = Fraction(power), Fraction(latency)
    if power < 0 or latency < 0:
        raise ValueError("power and latency must be >= 0")
    return power * latency


def comm_energy(data_bits, k: DeviceRole, l: DeviceRole, system: SystemModel) -> Fraction:
    """Transmit+receive energy for the data over the k->l route; zero on-device."""
    data_bits = Fraction(data_bits)
    if data_bits < 0:
        raise ValueError("data size must be >= 0")
    if k == l:
        return Fraction(0)
    relayed, via = indicator(k, l, system)
    if not relayed:
        ch = system.channel(k, l)
        return data_bits * (ch.tx_energy + ch.rx_energy)
    first, second = system.channel(k, via), system.channel(via, l)
    return data_bits * (
        first.tx_energy + first.rx_energy + second.tx_energy + second.rx_energy
    )


class CandidateNode(NamedTuple):
    task: int
    device: DeviceRole
    latency: Fraction  # seconds to execute here
    power: Fraction  # watts while executing
    energy: Fraction  # joules = power * latency

    @property
    def key(self) -> tuple[int, DeviceRole]:
        return (self.task, self.device)


class EtfgArc(NamedTuple):
    src_task: int
    src_device: DeviceRole
    dst_task: int
    dst_device: DeviceRole
    latency: Fraction  # transfer seconds
    energy: Fraction  # transfer joules
    indirect: bool
    via: DeviceRole | None

    @property
    def key(self) -> tuple[int, DeviceRole, int, DeviceRole]:
        return (self.src_task, self.src_device, self.dst_task, self.dst_device)


@dataclass(frozen=True)
class Etfg:
    """The expanded graph plus back-references to its inputs."""

    graph: TaskGraph
    system: SystemModel
    nodes_by_task: dict[int, tuple[CandidateNode, ...]]
    arcs_by_dep: dict[tuple[int, int], tuple[EtfgArc, ...]]

    @property
    def node_count(self) -> int:
        return sum(len(group) for group in self.nodes_by_task.values())

    @property
    def arc_count(self) -> int:
        return sum(len(group) for group in self.arcs_by_dep.values())

    def iter_nodes(self) -> Iterator[CandidateNode]:
        for task in self.graph.tasks:
            yield from self.nodes_by_task[task.id]

    def iter_arcs(self) -> Iterator[EtfgArc]:
        for dep in self.graph.arcs:
            yield from self.arcs_by_dep[dep]

    @cached_property
    def node_map(self) -> dict[tuple[int, DeviceRole], CandidateNode]:
        return {node.key: node for node in self.iter_nodes()}


def transform(graph: TaskGraph, system: SystemModel) -> Etfg:
    """Expand a validated task graph over its allowed devices.

    Deterministic: candidate nodes are ordered e, h, c within each task
    and arcs follow the (source device, destination device) order, so
    downstream variable numbering and serialization are reproducible.
    """
    require_valid(graph)

    nodes_by_task: dict[int, tuple[CandidateNode, ...]] = {}
    for task in graph.tasks:
        group = []
        for role in task.allowed:  # Task.allowed is canonically ordered
            latency = task.latency[role]
            power = task.power[role]
            group.append(
                CandidateNode(
                    task=task.id,
                    device=role,
                    latency=latency,
                    power=power,
                    energy=comp_energy(power, latency),
                )
            )
        nodes_by_task[task.id] = tuple(group)

    # cache per-pair unit costs; arcs reuse them for every data size
    unit_latency: dict[tuple[DeviceRole, DeviceRole], Fraction] = {}
    unit_energy: dict[tuple[DeviceRole, DeviceRole], Fraction] = {}
    routes: dict[tuple[DeviceRole, DeviceRole], tuple[int, DeviceRole | None]] = {}
    for k in ROLE_INDEX:
        for l in ROLE_INDEX:
            routes[(k, l)] = indicator(k, l, system)
            unit_latency[(k, l)] = comm_latency(1, k, l, system)
            unit_energy[(k, l)] = comm_energy(1, k, l, system)

    arcs_by_dep: dict[tuple[int, int], tuple[EtfgArc, ...]] = {}
    cost_cache: dict[tuple, tuple[Fraction, Fraction]] = {}
    for i, j in graph.arcs:
        data = graph.task(i).output_data
        group = []
        for src in nodes_by_task[i]:
            for dst in nodes_by_task[j]:
                pair = (src.device, dst.device)
                relayed, via = routes[pair]
                cached = cost_cache.get((data, pair))
                if cached is None:
                    cached = (data * unit_latency[pair], data * unit_energy[pair])
                    cost_cache[(data, pair)] = cached
                group.append(
                    EtfgArc(
                        i,
                        src.device,
                        j,
                        dst.device,
                        cached[0],
                        cached[1],
                        bool(relayed),
                        via,
                    )
                )
        arcs_by_dep[(i, j)] = tuple(group)

    return Etfg(graph=graph, system=system, nodes_by_task=nodes_by_task, arcs_by_dep=arcs_by_dep)


def etfg_to_dict(etfg: Etfg) -> dict:
    return {
        "schema": 1,
        "nodes": [
            {
                "task": n.task,
                "device": n.device.value,
                "latency": si_number(n.latency),
                "power": si_number(n.power),
                "energy": si_number(n.energy),
            }
            for n in etfg.iter_nodes()
        ],
        "arcs": [
            {
                "from": [a.src_task, a.src_device.value],
                "to": [a.dst_task, a.dst_device.value],
                "latency": si_number(a.latency),
                "energy": si_number(a.energy),
                "indirect": a.indirect,
                "via": a.via.value if a.via is not None else None,
            }
            for a in etfg.iter_arcs()
        ],
    }


def etfg_to_dot(etfg: Etfg) -> str:
    """Graphviz rendering; relayed arcs are dashed orange."""
    lines = ["digraph etfg {", "  rankdir=TB;", "  node [shape=ellipse];"]
    for task in etfg.graph.tasks:
        lines.append(f"  subgraph cluster_{task.id} {{")
        lines.append(f'    label="task {task.id}";')
        for node in etfg.nodes_by_task[task.id]:
            lines.append(
                f'    "{node.task}{node.device.value}" [label="N{node.task}{node.device.value}"];'
            )
        lines.append("  }")
    for arc in etfg.iter_arcs():
        src = f"{arc.src_task}{arc.src_device.value}"
        dst = f"{arc.dst_task}{arc.dst_device.value}"
        if arc.indirect:
            lines.append(f'  "{src}" -> "{dst}" [style=dashed,color=orange];')
        else:
            lines.append(f'  "{src}" -> "{dst}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_etfg(etfg: Etfg, json_path: str | Path | None = None, dot_path: str | Path | None = None) -> None:
    import json as _json

    if json_path is not None:
        Path(json_path).write_text(
            _json.dumps(etfg_to_dict(etfg), indent=2, sort_keys=True) + "\n"
        )
    if dot_path is not None:
        Path(dot_path).write_text(etfg_to_dot(etfg))
