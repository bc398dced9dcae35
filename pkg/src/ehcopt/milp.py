"""0/1 integer program over an expanded task graph.

Decision columns are one binary per candidate node (run task i on device
k) and one per expanded arc (both endpoint choices selected).  The model
is solver-neutral: sparse rows with exact rational coefficients, exported
through :mod:`ehcopt.mps`.

Row families, in emission order:
  asg      one per task: exactly one device is chosen.
  odeg     one per non-sink task: selected outgoing arcs match the
           task's child count (vacuous for sinks, so skipped).
  lnksrc/  three per expanded arc: the arc variable equals the logical
  lnkdst/  AND of its endpoint node variables.
  lnkand
  mem/sto  one per device with a finite memory/storage budget.
  enr      one per device with a finite energy budget; charges executed
           tasks plus all traffic sent, received, or relayed by the device.
  lthr     total-latency cap, present only when minimizing energy with a
           finite threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, NamedTuple

from .etfg import Etfg, EtfgArc
from .model import ROLES, DeviceRole
from .units import si_number

ZERO = Fraction(0)
ONE = Fraction(1)


class Objective(str, Enum):
    LATENCY = "latency"
    ENERGY = "energy"


class Variable(NamedTuple):
    kind: str  # "node" or "arc"
    column: int
    tasks: tuple[int, ...]
    devices: tuple[DeviceRole, ...]

    @property
    def name(self) -> str:
        if self.kind == "node":
            return f"x_{self.tasks[0]}_{self.devices[0].value}"
        return (
            f"y_{self.tasks[0]}{self.devices[0].value}"
            f"_{self.tasks[1]}{self.devices[1].value}"
        )


class ConstraintRow(NamedTuple):
    label: str
    coeffs: dict[int, Fraction]  # column index -> coefficient
    sense: str  # "L" (<=), "E" (=), "G" (>=)
    rhs: Fraction


@dataclass
class BilpModel:
    objective_kind: Objective
    latency_threshold: Fraction | None
    variables: list[Variable]
    objective: dict[int, Fraction]
    rows: list[ConstraintRow]
    node_col: dict[tuple[int, DeviceRole], int]
    arc_col: dict[tuple[int, DeviceRole, int, DeviceRole], int]
    etfg: Etfg = field(repr=False)

    @property
    def num_variables(self) -> int:
        return len(self.variables)


def _column_maps(etfg: Etfg, nodes=None, arcs=None):
    """Canonical dense numbering: all node columns, then all arc columns."""
    if nodes is None:
        nodes = list(etfg.iter_nodes())
    if arcs is None:
        arcs = list(etfg.iter_arcs())
    offset = len(nodes)
    node_col = {(n[0], n[1]): i for i, n in enumerate(nodes)}
    arc_col = {a[:4]: offset + i for i, a in enumerate(arcs)}
    variables = [Variable("node", i, (n[0],), (n[1],)) for i, n in enumerate(nodes)]
    variables += [
        Variable("arc", offset + i, (a[0], a[2]), (a[1], a[3])) for i, a in enumerate(arcs)
    ]
    return node_col, arc_col, variables


def _arc_energy_parts(arc: EtfgArc, data: Fraction, system) -> tuple[tuple[DeviceRole, Fraction], ...]:
    """Per-device energy shares of one transfer: sender tx, receiver rx,
    and the relay device's rx+tx when the route is indirect."""
    if arc.src_device == arc.dst_device:
        return ()
    k, l = arc.src_device, arc.dst_device
    if not arc.indirect:
        ch = system.channel(k, l)
        return ((k, data * ch.tx_energy), (l, data * ch.rx_energy))
    m = arc.via
    first, second = system.channel(k, m), system.channel(m, l)
    return (
        (k, data * first.tx_energy),
        (m, data * (first.rx_energy + second.tx_energy)),
        (l, data * second.rx_energy),
    )


def _energy_parts_by_arc(etfg: Etfg) -> dict[tuple, tuple[tuple[DeviceRole, Fraction], ...]]:
    """Energy shares per expanded arc, cached by (data, device pair):
    benchmark tasks often repeat output sizes, so the products are shared."""
    per_data: dict[tuple[int, int], dict] = {}  # keyed by (num, den): Fraction hashing is costly
    out: dict[tuple, tuple] = {}
    system = etfg.system
    for (i, _j), group in etfg.arcs_by_dep.items():
        data = etfg.graph.task(i).output_data
        pair_map = per_data.setdefault((data.numerator, data.denominator), {})
        for arc in group:
            src_device, dst_device = arc[1], arc[3]
            if src_device is dst_device:
                continue
            pair = (src_device, dst_device)
            parts = pair_map.get(pair)
            if parts is None:
                parts = _arc_energy_parts(arc, data, system)
                pair_map[pair] = parts
            out[arc[:4]] = parts
    return out


def _energy_row(etfg, device, node_col, arc_col, parts_by_arc) -> ConstraintRow:
    dev = etfg.system.device(device)
    coeffs: dict[int, Fraction] = {}
    for task, node_device, _lat, _pow, node_energy in etfg.iter_nodes():
        if node_device is device and node_energy:
            coeffs[node_col[(task, node_device)]] = node_energy
    for arc_key, parts in parts_by_arc.items():
        for part_device, amount in parts:
            # a transfer touches each device at most once (src, dst, relay
            # are pairwise distinct), so plain assignment is safe
            if part_device is device and amount:
                coeffs[arc_col[arc_key]] = amount
    return ConstraintRow(f"enr_{device.value}", coeffs, "L", dev.energy_budget)


def energy_budget_row(
    etfg: Etfg,
    device: DeviceRole,
    node_col: Mapping[tuple[int, DeviceRole], int] | None = None,
    arc_col: Mapping[tuple[int, DeviceRole, int, DeviceRole], int] | None = None,
) -> ConstraintRow:
    """Energy-budget row for one device: execution energy of its candidate
    nodes plus the energy share of every transfer it sends, receives, or
    relays."""
    if etfg.system.device(device).energy_budget is None:
        raise ValueError(f"device {device.value} has no finite energy budget")
    if node_col is None or arc_col is None:
        node_col, arc_col, _ = _column_maps(etfg)
    return _energy_row(etfg, device, node_col, arc_col, _energy_parts_by_arc(etfg))


def build_model(
    etfg: Etfg,
    objective: Objective | str = Objective.LATENCY,
    latency_threshold: Fraction | None = None,
) -> BilpModel:
    objective = Objective(objective)
    if latency_threshold is not None and latency_threshold <= 0:
        raise ValueError("latency threshold must be > 0")

    nodes_list = list(etfg.iter_nodes())
    arcs_list = list(etfg.iter_arcs())
    node_col, arc_col, variables = _column_maps(etfg, nodes_list, arcs_list)
    graph, system = etfg.graph, etfg.system
    arc_base = len(nodes_list)
    use_latency = objective is Objective.LATENCY

    obj: dict[int, Fraction] = {}
    col = 0
    for _task, _device, node_latency, _power, node_energy in nodes_list:
        cost = node_latency if use_latency else node_energy
        if cost:
            obj[col] = cost
        col += 1
    for arc in arcs_list:
        cost = arc[4] if use_latency else arc[5]  # latency / energy fields
        if cost:
            obj[col] = cost
        col += 1

    rows: list[ConstraintRow] = []
    append = rows.append

    for task in graph.tasks:
        coeffs = {node_col[(task.id, role)]: ONE for role in task.allowed}
        append(ConstraintRow(f"asg_{task.id}", coeffs, "E", ONE))

    # arc columns are laid out contiguously in dependency order
    dep_cols: dict[tuple[int, int], range] = {}
    col = arc_base
    for dep in graph.arcs:
        size = len(etfg.arcs_by_dep[dep])
        dep_cols[dep] = range(col, col + size)
        col += size

    for task in graph.tasks:
        children = graph.successors[task.id]
        if not children:
            continue  # empty sum: the row would be 0 = 0
        coeffs = {c: ONE for j in children for c in dep_cols[(task.id, j)]}
        append(ConstraintRow(f"odeg_{task.id}", coeffs, "E", Fraction(len(children))))

    minus_one = -ONE
    char = {role: role.value for role in ROLES}
    col = arc_base
    for src_task, src_device, dst_task, dst_device, _l, _e, _ind, _via in arcs_list:
        a = col
        col += 1
        s = node_col[(src_task, src_device)]
        d = node_col[(dst_task, dst_device)]
        tag = f"{src_task}{char[src_device]}_{dst_task}{char[dst_device]}"
        append(ConstraintRow("lnksrc_" + tag, {a: ONE, s: minus_one}, "L", ZERO))
        append(ConstraintRow("lnkdst_" + tag, {a: ONE, d: minus_one}, "L", ZERO))
        append(ConstraintRow("lnkand_" + tag, {a: minus_one, s: ONE, d: ONE}, "L", ONE))

    for role in ROLES:
        budget = system.device(role).memory_budget
        if budget is None:
            continue
        coeffs = {}
        for task in graph.tasks:
            if role in task.allowed and task.memory:
                coeffs[node_col[(task.id, role)]] = task.memory
        append(ConstraintRow(f"mem_{role.value}", coeffs, "L", budget))
    for role in ROLES:
        budget = system.device(role).storage_budget
        if budget is None:
            continue
        coeffs = {}
        for task in graph.tasks:
            if role in task.allowed and task.storage:
                coeffs[node_col[(task.id, role)]] = task.storage
        append(ConstraintRow(f"sto_{role.value}", coeffs, "L", budget))
    energy_roles = [r for r in ROLES if system.device(r).energy_budget is not None]
    if energy_roles:
        # one pass over the expanded arcs fills every budgeted device's
        # coefficient dict (per-pair shares are cached per data size)
        coeffs_by_role: dict[DeviceRole, dict[int, Fraction]] = {r: {} for r in energy_roles}
        wanted = set(energy_roles)
        col = arc_base
        per_data: dict[tuple[int, int], dict] = {}
        for (i, _j) in graph.arcs:
            group = etfg.arcs_by_dep[(i, _j)]
            data = graph.task(i).output_data
            pair_map = per_data.setdefault((data.numerator, data.denominator), {})
            for arc in group:
                this_col = col
                col += 1
                src_device, dst_device = arc[1], arc[3]
                if src_device is dst_device:
                    continue
                pair = (src_device, dst_device)
                parts = pair_map.get(pair)
                if parts is None:
                    parts = _arc_energy_parts(arc, data, system)
                    pair_map[pair] = parts
                for part_device, amount in parts:
                    if part_device in wanted and amount:
                        coeffs_by_role[part_device][this_col] = amount
        for role in energy_roles:
            coeffs = coeffs_by_role[role]
            for node_idx, node in enumerate(nodes_list):
                if node[1] is role and node[4]:
                    coeffs[node_idx] = node[4]
            append(
                ConstraintRow(f"enr_{role.value}", coeffs, "L", system.device(role).energy_budget)
            )

    if objective is Objective.ENERGY and latency_threshold is not None:
        coeffs = {}
        col = 0
        for _task, _device, node_latency, _pow, _enr in nodes_list:
            if node_latency:
                coeffs[col] = node_latency
            col += 1
        for arc in arcs_list:
            if arc[4]:
                coeffs[col] = arc[4]
            col += 1
        append(ConstraintRow("lthr", coeffs, "L", latency_threshold))

    return BilpModel(
        objective_kind=objective,
        latency_threshold=latency_threshold if objective is Objective.ENERGY else None,
        variables=variables,
        objective=obj,
        rows=rows,
        node_col=node_col,
        arc_col=arc_col,
        etfg=etfg,
    )


def model_stats(model: BilpModel) -> dict:
    """Size report in two row-count conventions.

    ``algebraic_rows`` counts the rows as emitted (three per expanded
    arc).  ``logical_constraints`` counts each arc's AND-link once and
    only finite-budget rows.  ``logical_constraints_all_budgets``
    additionally counts a budget row for every device and resource even
    when unbounded, which is how off-the-shelf solver frontends that
    materialize every family report these models.
    """
    graph = model.etfg.graph
    n_tasks = len(graph.tasks)
    non_sink = sum(1 for t in graph.tasks if graph.successors[t.id])
    n_arcs = model.etfg.arc_count
    finite_budget_rows = sum(
        1 for row in model.rows if row.label.startswith(("mem_", "sto_", "enr_"))
    )
    threshold_rows = 1 if model.latency_threshold is not None else 0
    logical = n_tasks + non_sink + n_arcs + finite_budget_rows + threshold_rows
    logical_all = n_tasks + non_sink + n_arcs + 3 * len(ROLES) + threshold_rows
    return {
        "variables": model.num_variables,
        "binary_variables": model.num_variables,
        "node_variables": model.etfg.node_count,
        "arc_variables": n_arcs,
        "algebraic_rows": len(model.rows),
        "logical_constraints": logical,
        "logical_constraints_all_budgets": logical_all,
        "nonzeros": sum(len(row.coeffs) for row in model.rows),
        "objective": model.objective_kind.value,
        "latency_threshold": (
            None if model.latency_threshold is None else si_number(model.latency_threshold)
        ),
    }


# --- point evaluation ----------------------------------------------------


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Latency/energy totals and their attribution for one full assignment."""

    assignment: dict[int, DeviceRole]
    total_latency: Fraction
    total_energy: Fraction
    comp_latency: dict[DeviceRole, Fraction]
    comm_latency: dict[tuple[DeviceRole, DeviceRole], Fraction]
    comp_energy: dict[DeviceRole, Fraction]
    comm_energy: dict[tuple[DeviceRole, DeviceRole], Fraction]
    device_energy: dict[DeviceRole, Fraction]  # comp + tx + rx + relayed
    memory_use: dict[DeviceRole, Fraction]
    storage_use: dict[DeviceRole, Fraction]
    energy_use: dict[DeviceRole, Fraction]  # alias of device_energy, vs budget
    violations: tuple[str, ...]
    latency_ok: bool | None  # None when no threshold applies

    @property
    def feasible(self) -> bool:
        return not self.violations and self.latency_ok is not False

    def to_dict(self) -> dict:
        return {
            "assignment": {str(t): d.value for t, d in sorted(self.assignment.items())},
            "total_latency": si_number(self.total_latency),
            "total_energy": si_number(self.total_energy),
            "comp_latency": {d.value: si_number(v) for d, v in self.comp_latency.items()},
            "comm_latency": {
                f"{k.value}->{l.value}": si_number(v) for (k, l), v in self.comm_latency.items()
            },
            "comp_energy": {d.value: si_number(v) for d, v in self.comp_energy.items()},
            "comm_energy": {
                f"{k.value}->{l.value}": si_number(v) for (k, l), v in self.comm_energy.items()
            },
            "device_energy": {d.value: si_number(v) for d, v in self.device_energy.items()},
            "memory_use": {d.value: si_number(v) for d, v in self.memory_use.items()},
            "storage_use": {d.value: si_number(v) for d, v in self.storage_use.items()},
            "violations": list(self.violations),
            "latency_ok": self.latency_ok,
            "feasible": self.feasible,
        }


def evaluate(
    etfg: Etfg,
    assignment: Mapping[int, DeviceRole],
    latency_threshold: Fraction | None = None,
) -> ObjectiveBreakdown:
    """Totals, per-device/per-channel attribution and budget checks for a
    complete task->device assignment."""
    graph, system = etfg.graph, etfg.system
    chosen: dict[int, DeviceRole] = {}
    for task in graph.tasks:
        try:
            device = assignment[task.id]
        except KeyError:
            raise ValueError(f"assignment missing task {task.id}") from None
        device = DeviceRole(device)
        if device not in task.allowed:
            raise ValueError(f"task {task.id} may not run on device {device.value}")
        chosen[task.id] = device

    comp_latency = {r: ZERO for r in ROLES}
    comp_energy_by = {r: ZERO for r in ROLES}
    device_energy = {r: ZERO for r in ROLES}
    memory_use = {r: ZERO for r in ROLES}
    storage_use = {r: ZERO for r in ROLES}
    comm_latency_by = {pair: ZERO for pair in system.channels}
    comm_energy_by = {pair: ZERO for pair in system.channels}

    for task in graph.tasks:
        node = etfg.node_map[(task.id, chosen[task.id])]
        comp_latency[node.device] += node.latency
        comp_energy_by[node.device] += node.energy
        device_energy[node.device] += node.energy
        memory_use[node.device] += task.memory
        storage_use[node.device] += task.storage

    total_comm_latency = ZERO
    for (i, j) in graph.arcs:
        k, l = chosen[i], chosen[j]
        if k == l:
            continue
        data = graph.task(i).output_data
        arc = next(a for a in etfg.arcs_by_dep[(i, j)] if a.src_device == k and a.dst_device == l)
        total_comm_latency += arc.latency
        if not arc.indirect:
            hops = [(k, l)]
        else:
            hops = [(k, arc.via), (arc.via, l)]
        for hop in hops:
            ch = system.channel(*hop)
            comm_latency_by[hop] += data / ch.bandwidth
            comm_energy_by[hop] += data * (ch.tx_energy + ch.rx_energy)
        for part_device, amount in _arc_energy_parts(arc, data, system):
            device_energy[part_device] += amount

    total_latency = sum(comp_latency.values(), ZERO) + total_comm_latency
    total_energy = sum(comp_energy_by.values(), ZERO) + sum(comm_energy_by.values(), ZERO)

    violations = []
    for role in ROLES:
        dev = system.device(role)
        if dev.memory_budget is not None and memory_use[role] > dev.memory_budget:
            violations.append(f"memory budget exceeded on {role.value}")
        if dev.storage_budget is not None and storage_use[role] > dev.storage_budget:
            violations.append(f"storage budget exceeded on {role.value}")
        if dev.energy_budget is not None and device_energy[role] > dev.energy_budget:
            violations.append(f"energy budget exceeded on {role.value}")
    latency_ok = None if latency_threshold is None else total_latency <= latency_threshold

    return ObjectiveBreakdown(
        assignment=chosen,
        total_latency=total_latency,
        total_energy=total_energy,
        comp_latency=comp_latency,
        comm_latency=comm_latency_by,
        comp_energy=comp_energy_by,
        comm_energy=comm_energy_by,
        device_energy=device_energy,
        memory_use=memory_use,
        storage_use=storage_use,
        energy_use=device_energy,
        violations=tuple(violations),
        latency_ok=latency_ok,
    )


def objective_value(breakdown: ObjectiveBreakdown, objective: Objective | str) -> Fraction:
    objective = Objective(objective)
    if objective is Objective.LATENCY:
        return breakdown.total_latency
    return breakdown.total_energy
