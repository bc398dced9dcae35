from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ALL, C, E, H, make_device, simple_task, two_task_chain, unbudgeted_system
from ehcopt import presets
from ehcopt.model import (
    Channel,
    Device,
    GraphValidationError,
    SystemModel,
    SystemModelError,
    Task,
    TaskGraph,
    out_degree,
    system_model_from_dict,
    system_model_to_dict,
    task_graph_from_dict,
    task_graph_to_dict,
    topological_order,
    validate_task_graph,
)


def test_minimal_valid_chain():
    report = validate_task_graph(two_task_chain())
    assert report.ok
    assert str(report) == "valid"


def test_smallest_cycle_detected():
    g = TaskGraph(tasks=(simple_task(1), simple_task(2)), arcs=((1, 2), (2, 1)))
    report = validate_task_graph(g)
    assert any("cycle" in issue for issue in report.issues)


def test_empty_allowed_set_detected():
    bad = Task(id=1, memory=Fraction(0), storage=Fraction(0), output_data=Fraction(0), allowed=())
    report = validate_task_graph(TaskGraph(tasks=(bad,), arcs=()))
    assert any("empty allowed-device set" in issue for issue in report.issues)


def test_dangling_and_duplicate_and_self_arcs():
    g = TaskGraph(tasks=(simple_task(1), simple_task(2)), arcs=((1, 2), (1, 2), (1, 1), (1, 3)))
    issues = " | ".join(validate_task_graph(g).issues)
    assert "duplicate arc" in issues
    assert "self-arc" in issues
    assert "dangling arc endpoint" in issues


def test_missing_profile_entry_detected():
    t = Task(
        id=1,
        memory=Fraction(0),
        storage=Fraction(0),
        output_data=Fraction(0),
        allowed=ALL,
        latency={E: Fraction(1)},  # h, c missing
        power={r: Fraction(1) for r in ALL},
    )
    issues = " | ".join(validate_task_graph(TaskGraph(tasks=(t,), arcs=())).issues)
    assert "missing profile entry" in issues


def test_ids_must_be_dense():
    g = TaskGraph(tasks=(simple_task(1), simple_task(3)), arcs=())
    assert any("dense" in issue for issue in validate_task_graph(g).issues)


def test_validation_is_pure():
    g = two_task_chain()
    first = validate_task_graph(g)
    second = validate_task_graph(g)
    assert first == second == validate_task_graph(g)


def test_out_degree():
    g = two_task_chain()
    assert out_degree(g, 1) == 1
    assert out_degree(g, 2) == 0
    with pytest.raises(KeyError):
        out_degree(g, 9)


def test_topological_order_chain():
    g = two_task_chain()
    assert topological_order(g) == (1, 2)
    cyc = TaskGraph(tasks=(simple_task(1), simple_task(2)), arcs=((1, 2), (2, 1)))
    with pytest.raises(GraphValidationError):
        topological_order(cyc)


@settings(max_examples=40)
@given(st.data())
def test_random_dags_validate_and_back_edges_fail(data):
    n = data.draw(st.integers(min_value=2, max_value=8))
    tasks = tuple(simple_task(i) for i in range(1, n + 1))
    forward = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    picked = data.draw(st.lists(st.sampled_from(forward), max_size=12, unique=True))
    good = TaskGraph(tasks=tasks, arcs=tuple(picked))
    assert validate_task_graph(good).ok
    if picked:
        i, j = data.draw(st.sampled_from(picked))
        bad = TaskGraph(tasks=tasks, arcs=tuple(picked) + ((j, i),))
        assert any("cycle" in issue for issue in validate_task_graph(bad).issues)


def test_task_graph_json_round_trip():
    g = two_task_chain(data=10**6)
    assert task_graph_from_dict(task_graph_to_dict(g)) == g


def test_task_graph_schema_with_units():
    data = {
        "schema": 1,
        "tasks": [
            {
                "id": 1,
                "memory": "64MiB",
                "storage": "10MiB",
                "output_data": "2Mbit",
                "allowed": ["e", "h", "c"],
                "latency": {"e": "120ms", "h": "40ms", "c": "7ms"},
                "power": {"e": "4.2W", "h": "30W", "c": "200W"},
            }
        ],
        "arcs": [],
    }
    g = task_graph_from_dict(data)
    task = g.task(1)
    assert task.memory == 64 * 2**20
    assert task.output_data == 2 * 10**6
    assert task.latency[E] == Fraction(12, 100)


def test_schema_version_required():
    with pytest.raises(ValueError, match="schema"):
        task_graph_from_dict({"tasks": [], "arcs": []})
    with pytest.raises(ValueError, match="schema"):
        system_model_from_dict({"devices": {}, "channels": []})


def test_device_invariants():
    with pytest.raises(SystemModelError, match="idle"):
        Device(E, "x", None, None, None, idle_power=Fraction(5), max_power=Fraction(5))
    with pytest.raises(SystemModelError, match="budget"):
        Device(E, "x", Fraction(0), None, None, idle_power=Fraction(1), max_power=Fraction(5))


def test_channel_invariants():
    with pytest.raises(SystemModelError):
        Channel(E, E, Fraction(1), Fraction(0), Fraction(0))
    with pytest.raises(SystemModelError):
        Channel(E, H, Fraction(0), Fraction(0), Fraction(0))
    with pytest.raises(SystemModelError):
        Channel(E, H, Fraction(1), Fraction(-1), Fraction(0))


def test_system_requires_relay_coverage():
    devices = {r: make_device(r) for r in ALL}
    channels = {(c.src, c.dst): c for c in presets.channels("run1")}
    with pytest.raises(SystemModelError, match="neither"):
        SystemModel(devices=devices, channels=channels, relay={(E, C): H})  # c->e missing


def test_default_relay_routes_through_hub():
    system = unbudgeted_system()
    assert system.route(E, C) == (1, H)
    assert system.route(C, E) == (1, H)
    assert system.route(E, H) == (0, None)
    assert system.route(H, H) == (0, None)


def test_channels_are_directional():
    system = presets.system_model("C1", "run1")
    assert system.channel(E, H).bandwidth == 15 * 10**6
    assert system.channel(H, E).bandwidth == 20 * 10**6


def test_system_model_json_round_trip():
    system = presets.system_model("C2", "run2")
    again = system_model_from_dict(system_model_to_dict(system))
    assert again == system


def test_frozen_types():
    g = two_task_chain()
    with pytest.raises(AttributeError):
        g.arcs = ()
    with pytest.raises(AttributeError):
        g.tasks[0].memory = Fraction(1)


def test_configuration_presets_match_published_budgets():
    c3 = presets.system_model("C3")
    assert c3.device(E).memory_budget == 2**30
    assert c3.device(E).energy_budget == Fraction("129.96") * 3600
    assert c3.device(H).storage_budget == 512 * 2**30
    assert c3.device(C).energy_budget is None
    c1 = presets.system_model("C1")
    assert c1.device(E).memory_budget == 8 * 2**30


def test_bundled_data_files_match_presets():
    from importlib.resources import files

    from ehcopt.model import load_system_model, load_task_graph

    data = files("ehcopt.data")
    for name in ("C1", "C2", "C3"):
        assert load_system_model(str(data / f"{name}.json")) == presets.system_model(name, "run1")
    bundled = load_task_graph(str(data / "uav_inspection_15.json"))
    assert bundled == presets.example_inspection_tfg()


def test_channel_profiles_complete_tables():
    run1 = {(c.src, c.dst): c for c in presets.channels("run1")}
    run2 = {(c.src, c.dst): c for c in presets.channels("run2")}
    M = 10**6
    uJ = Fraction(1, M)

    def check(table, key, mbit, tx, rx):
        ch = table[key]
        assert ch.bandwidth == Fraction(mbit) * M
        assert ch.tx_energy == Fraction(tx) * uJ
        assert ch.rx_energy == Fraction(rx) * uJ

    check(run1, (E, H), "15", "1.0", "0.70")
    check(run1, (H, E), "20", "1.0", "0.70")
    check(run1, (H, C), "25", "2.5", "1.25")
    check(run1, (C, H), "35", "2.5", "1.25")
    check(run2, (E, H), "10", "1.0", "0.7")
    check(run2, (H, E), "10", "1.0", "0.7")
    check(run2, (H, C), "0.5", "6.5", "4.5")
    check(run2, (C, H), "1.5", "6.5", "4.5")
    assert set(run1) == set(run2)
    with pytest.raises(KeyError):
        presets.channels("run3")
