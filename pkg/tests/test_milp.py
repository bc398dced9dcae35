import random
from fractions import Fraction

import pytest

from conftest import (
    ALL,
    C,
    E,
    H,
    make_device,
    random_oracle_instance,
    simple_task,
    two_task_chain,
    unbudgeted_system,
)
from ehcopt import presets
from ehcopt.etfg import transform
from ehcopt.milp import (
    Objective,
    build_model,
    energy_budget_row,
    evaluate,
    model_stats,
    objective_value,
)
from ehcopt.model import TaskGraph, make_system_model

C1 = presets.system_model("C1", "run1")


def test_two_free_task_model_shape():
    etfg = transform(two_task_chain(), C1)
    model = build_model(etfg, "latency")
    assert model.num_variables == 6 + 9 == 15
    labels = [row.label for row in model.rows]
    # 2 assignment + 1 out-degree + 27 linking + 3 mem + 3 sto + 2 energy
    assert labels[:3] == ["asg_1", "asg_2", "odeg_1"]
    assert sum(1 for l in labels if l.startswith("lnk")) == 27
    assert [l for l in labels if l.startswith("mem_")] == ["mem_e", "mem_h", "mem_c"]
    assert [l for l in labels if l.startswith("enr_")] == ["enr_e", "enr_h"]  # cloud unbounded
    assert len(model.rows) == 38


def test_fixed_task_model_shape():
    etfg = transform(two_task_chain(allowed_first=(E,)), C1)
    model = build_model(etfg, "latency")
    assert model.num_variables == 4 + 3 == 7


def test_row_senses_and_rhs():
    etfg = transform(two_task_chain(), C1)
    model = build_model(etfg, "latency")
    by_label = {row.label: row for row in model.rows}
    assert by_label["asg_1"].sense == "E" and by_label["asg_1"].rhs == 1
    assert by_label["odeg_1"].sense == "E" and by_label["odeg_1"].rhs == 1
    assert by_label["lnksrc_1e_2c"].sense == "L" and by_label["lnksrc_1e_2c"].rhs == 0
    assert by_label["lnkand_1e_2c"].rhs == 1
    assert by_label["mem_e"].rhs == 8 * 2**30
    assert by_label["enr_h"].rhs == Fraction(60) * 3600


def test_out_degree_rows_skip_sinks_but_count_all_children():
    tasks = tuple(simple_task(i, data=10**5) for i in range(1, 5))
    arcs = ((1, 2), (1, 3), (2, 4), (3, 4))
    etfg = transform(TaskGraph(tasks=tasks, arcs=arcs), C1)
    model = build_model(etfg, "latency")
    odeg = {row.label: row for row in model.rows if row.label.startswith("odeg_")}
    assert set(odeg) == {"odeg_1", "odeg_2", "odeg_3"}  # task 4 is the sink
    assert odeg["odeg_1"].rhs == 2
    assert len(odeg["odeg_1"].coeffs) == 18  # two dependencies x 9 arcs


def test_objective_coefficients_follow_the_metric():
    etfg = transform(two_task_chain(), C1)
    lat_model = build_model(etfg, "latency")
    enr_model = build_model(etfg, "energy", Fraction(8))
    node = next(etfg.iter_nodes())
    col = lat_model.node_col[(node.task, node.device)]
    assert lat_model.objective[col] == node.latency
    assert enr_model.objective[col] == node.energy
    relayed = next(a for a in etfg.iter_arcs() if a.indirect)
    acol = lat_model.arc_col[relayed.key]
    assert lat_model.objective[acol] == relayed.latency
    assert enr_model.objective[acol] == relayed.energy


def test_threshold_row_only_for_energy_objective():
    etfg = transform(two_task_chain(), C1)
    assert not any(r.label == "lthr" for r in build_model(etfg, "latency").rows)
    assert not any(r.label == "lthr" for r in build_model(etfg, "energy").rows)
    model = build_model(etfg, "energy", Fraction(8))
    row = next(r for r in model.rows if r.label == "lthr")
    assert row.sense == "L" and row.rhs == 8
    assert model.latency_threshold == 8
    with pytest.raises(ValueError):
        build_model(etfg, "energy", Fraction(0))


def test_energy_budget_row_includes_relay_share():
    # data flows 1 -> 2; if task 1 sits on e and task 2 on c, the hub relays
    g = two_task_chain(data=10**6)
    etfg = transform(g, C1)
    row = energy_budget_row(etfg, H)
    model = build_model(etfg, "latency")
    relay_col = model.arc_col[(1, E, 2, C)]
    # relay share: D * (rx of e->h + tx of h->c) = 1 Mbit * (0.7 + 2.5) uJ/bit
    assert row.coeffs[relay_col] == Fraction(32, 10)
    # hub's own execution energy appears on its node columns
    node_col = model.node_col[(2, H)]
    assert row.coeffs[node_col] == etfg.node_map[(2, H)].energy
    # sender/receiver shares for a direct arc
    e_row = energy_budget_row(etfg, E)
    direct_col = model.arc_col[(1, E, 2, H)]
    assert e_row.coeffs[direct_col] == Fraction(1)  # 1 Mbit * 1.0 uJ/bit tx


def test_energy_budget_row_requires_finite_budget():
    etfg = transform(two_task_chain(), C1)
    with pytest.raises(ValueError):
        energy_budget_row(etfg, C)


def test_single_fixed_task_energy_row_has_only_its_node():
    g = TaskGraph(tasks=(simple_task(1, (E,), latency=2, power=3),), arcs=())
    etfg = transform(g, C1)
    row = energy_budget_row(etfg, E)
    assert row.coeffs == {0: Fraction(6)}


class TestEvaluate:
    def test_single_device_allocation_has_no_comm(self):
        etfg = transform(two_task_chain(), C1)
        b = evaluate(etfg, {1: E, 2: E})
        assert all(v == 0 for v in b.comm_latency.values())
        assert all(v == 0 for v in b.comm_energy.values())
        assert b.total_latency == sum(etfg.node_map[(i, E)].latency for i in (1, 2))

    def test_direct_transfer_splits_energy(self):
        etfg = transform(two_task_chain(data=10**6), C1)
        b = evaluate(etfg, {1: E, 2: H})
        assert b.comm_latency[(E, H)] == Fraction(1, 15)
        assert b.comm_energy[(E, H)] == Fraction(17, 10)
        assert b.device_energy[E] == etfg.node_map[(1, E)].energy + 1  # tx share
        assert b.device_energy[H] == etfg.node_map[(2, H)].energy + Fraction(7, 10)

    def test_relay_charges_idle_hub(self):
        etfg = transform(two_task_chain(data=10**6), C1)
        b = evaluate(etfg, {1: E, 2: C})
        # nothing executes on the hub, yet it pays the relay share
        assert b.comp_energy[H] == 0
        assert b.device_energy[H] == Fraction(32, 10)
        assert b.total_latency == (
            etfg.node_map[(1, E)].latency + etfg.node_map[(2, C)].latency + Fraction(8, 75)
        )
        assert b.comm_latency[(E, H)] == Fraction(1, 15)
        assert b.comm_latency[(H, C)] == Fraction(1, 25)

    def test_rejects_disallowed_assignment(self):
        etfg = transform(two_task_chain(allowed_first=(E,)), C1)
        with pytest.raises(ValueError, match="may not run"):
            evaluate(etfg, {1: H, 2: H})
        with pytest.raises(ValueError, match="missing task"):
            evaluate(etfg, {1: E})

    def test_budget_violations_reported(self):
        devices = [
            make_device(E, memory=Fraction(1)),  # absurdly small
            make_device(H),
            make_device(C),
        ]
        system = make_system_model(devices, presets.channels("run1"))
        g = two_task_chain()
        g = TaskGraph(
            tasks=tuple(
                simple_task(t.id, t.allowed, latency=1, memory=100, data=0) for t in g.tasks
            ),
            arcs=g.arcs,
        )
        etfg = transform(g, system)
        b = evaluate(etfg, {1: E, 2: E})
        assert not b.feasible
        assert any("memory budget exceeded on e" in v for v in b.violations)

    def test_threshold_flag(self):
        etfg = transform(two_task_chain(), C1)
        b = evaluate(etfg, {1: E, 2: C}, latency_threshold=Fraction(1, 1000))
        assert b.latency_ok is False and not b.feasible
        b2 = evaluate(etfg, {1: E, 2: C}, latency_threshold=Fraction(1000))
        assert b2.latency_ok is True


def test_assignment_vector_satisfies_all_rows():
    """Fixing the node variables and deriving the arc variables as their
    AND must satisfy assignment, out-degree and linking rows, and the
    objective row must match the evaluator."""
    rng = random.Random(11)
    for seed in range(12):
        etfg, threshold = random_oracle_instance(seed, max_tasks=7)
        for objective in (Objective.LATENCY, Objective.ENERGY):
            model = build_model(etfg, objective, threshold if objective is Objective.ENERGY else None)
            assignment = {t.id: rng.choice(t.allowed) for t in etfg.graph.tasks}
            vector = [0] * model.num_variables
            for (task, role), col in model.node_col.items():
                vector[col] = 1 if assignment[task] == role else 0
            for (i, k, j, l), col in model.arc_col.items():
                vector[col] = 1 if assignment[i] == k and assignment[j] == l else 0
            chosen_arcs = 0
            for row in model.rows:
                value = sum(coeff * vector[col] for col, coeff in row.coeffs.items())
                if row.label.startswith(("asg_", "odeg_", "lnk")):
                    if row.sense == "E":
                        assert value == row.rhs, row.label
                    else:
                        assert value <= row.rhs, row.label
            chosen_arcs = sum(vector[col] for col in model.arc_col.values())
            assert chosen_arcs == len(etfg.graph.arcs)
            breakdown = evaluate(etfg, assignment)
            model_value = sum(coeff * vector[col] for col, coeff in model.objective.items())
            assert model_value == objective_value(breakdown, objective)


def test_scaling_latencies_scales_objective_and_keeps_argmin():
    from ehcopt.solver import solve_bruteforce

    base = two_task_chain(data=10**6)
    scaled = TaskGraph(
        tasks=tuple(
            simple_task(
                t.id,
                t.allowed,
                latency={r: 3 * v for r, v in t.latency.items()},
                power=t.power,
                data=t.output_data,
            )
            for t in base.tasks
        ),
        arcs=base.arcs,
    )
    # same channels scaled: divide data by 3? Instead scale bandwidth down by 3x
    from ehcopt.model import Channel

    slow = [
        Channel(ch.src, ch.dst, ch.bandwidth / 3, ch.tx_energy, ch.rx_energy)
        for ch in presets.channels("run1")
    ]
    system_scaled = make_system_model([make_device(r) for r in ALL], slow)
    plain = unbudgeted_system("run1")
    a = solve_bruteforce(transform(base, plain), "latency")
    b = solve_bruteforce(transform(scaled, system_scaled), "latency")
    assert b.objective_value == 3 * a.objective_value
    assert b.assignment == a.assignment


def test_stats_on_bundled_example(example_app):
    lat = model_stats(build_model(example_app, "latency"))
    enr = model_stats(build_model(example_app, "energy", Fraction(8)))
    assert lat["variables"] == 152
    assert lat["node_variables"] == 41 and lat["arc_variables"] == 111
    assert lat["logical_constraints_all_budgets"] == 149
    assert enr["logical_constraints_all_budgets"] == 150
    assert lat["logical_constraints"] == 148
    assert lat["algebraic_rows"] == 15 + 14 + 3 * 111 + 8
    assert lat["nonzeros"] == sum(len(r.coeffs) for r in build_model(example_app, "latency").rows)


def test_stats_on_serial_chain_with_shortcuts():
    # 10-task chain with one forward shortcut per eligible node: 17 arcs,
    # single sink, everything free
    tasks = tuple(simple_task(i, data=10**5) for i in range(1, 11))
    arcs = tuple((i, i + 1) for i in range(1, 10)) + tuple((i, i + 2) for i in range(1, 9))
    etfg = transform(TaskGraph(tasks=tasks, arcs=arcs), C1)
    model = build_model(etfg, "latency")
    stats = model_stats(model)
    assert (etfg.node_count, etfg.arc_count) == (30, 153)
    assert stats["variables"] == 183
    assert stats["logical_constraints_all_budgets"] == 181  # 10 + 9 + 153 + 9


def test_energy_budget_rows_present_under_both_objectives():
    etfg = transform(two_task_chain(), C1)
    for objective in ("latency", "energy"):
        labels = [r.label for r in build_model(etfg, objective).rows]
        assert "enr_e" in labels and "enr_h" in labels
