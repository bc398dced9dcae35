"""Shipped configuration data: devices, channel profiles, performance ratios.

Device budgets and channel parameters mirror the measured values for the
hardware the default configurations are modeled on.  Idle/max power draw
and the parameter-synthesis ranges are synthetic placeholders (plausible
for the device class, but not measured); they are only consumed by the
benchmark generator's power clamping, and every generated benchmark
records the ranges it was built from.
"""

from __future__ import annotations

from fractions import Fraction

from .model import (
    Channel,
    Device,
    DeviceRole,
    SystemModel,
    Task,
    TaskGraph,
    make_system_model,
)
from .units import parse_quantity

E, H, C = DeviceRole.EDGE, DeviceRole.HUB, DeviceRole.CLOUD


def _q(text: str, dimension: str) -> Fraction:
    return parse_quantity(text, dimension)


# budgets per device; cloud has no energy cap. idle/max power are synthetic.
_DEVICE_SPECS = {
    "jetson-tx2": dict(
        role=E, name="Jetson TX2",
        memory="8GiB", storage="32GiB", energy="129.96Wh",
        idle="1.9W", max="15W",
    ),
    "odroid-xu4": dict(
        role=E, name="Odroid XU4",
        memory="2GiB", storage="16GiB", energy="129.96Wh",
        idle="2.0W", max="15W",
    ),
    "raspberry-pi-3b": dict(
        role=E, name="Raspberry Pi 3 Model B",
        memory="1GiB", storage="16GiB", energy="129.96Wh",
        idle="1.4W", max="6.7W",
    ),
    "mi-notebook-pro": dict(
        role=H, name="Mi Notebook Pro",
        memory="8GiB", storage="512GiB", energy="60.00Wh",
        idle="5.0W", max="65W",
    ),
    "hpe-dl580": dict(
        role=C, name="HPE ProLiant DL580 Gen10",
        memory="400GiB", storage="10TiB", energy=None,
        idle="105W", max="800W",
    ),
}

# device combinations: a different edge device per configuration
CONFIGURATIONS = {
    "C1": ("jetson-tx2", "mi-notebook-pro", "hpe-dl580"),
    "C2": ("odroid-xu4", "mi-notebook-pro", "hpe-dl580"),
    "C3": ("raspberry-pi-3b", "mi-notebook-pro", "hpe-dl580"),
}

# directional channel parameters: (bandwidth, tx energy, rx energy) per run
CHANNEL_PROFILES = {
    "run1": {
        (E, H): ("15Mbit/s", "1.0uJ/bit", "0.70uJ/bit"),
        (H, E): ("20Mbit/s", "1.0uJ/bit", "0.70uJ/bit"),
        (H, C): ("25Mbit/s", "2.5uJ/bit", "1.25uJ/bit"),
        (C, H): ("35Mbit/s", "2.5uJ/bit", "1.25uJ/bit"),
    },
    "run2": {
        (E, H): ("10Mbit/s", "1.0uJ/bit", "0.7uJ/bit"),
        (H, E): ("10Mbit/s", "1.0uJ/bit", "0.7uJ/bit"),
        (H, C): ("0.5Mbit/s", "6.5uJ/bit", "4.5uJ/bit"),
        (C, H): ("1.5Mbit/s", "6.5uJ/bit", "4.5uJ/bit"),
    },
}

# measured speed of each device relative to the slowest (raspberry-pi-3b)
PERFORMANCE_RATIOS = {
    "raspberry-pi-3b": Fraction(1),
    "odroid-xu4": Fraction("2.99"),
    "jetson-tx2": Fraction("6.99"),
    "mi-notebook-pro": Fraction("50.77"),
    "hpe-dl580": Fraction("105.55"),
}

# default latency threshold applied when minimizing energy
DEFAULT_LATENCY_THRESHOLD = Fraction(8)  # seconds

# synthetic reference-device ranges for benchmark parameter synthesis
DEFAULT_PARAM_RANGES = {
    "reference_latency": ("50ms", "3.8s"),
    "reference_power": ("1.5W", "6.5W"),
    "memory": ("8MiB", "128MiB"),
    "storage": ("1MiB", "64MiB"),
    "data": ("0.05Mbit", "4Mbit"),
    "clamp_alpha": (Fraction(1, 1000), Fraction(5, 1000)),
}


def device(key: str) -> Device:
    spec = _DEVICE_SPECS[key]
    return Device(
        role=spec["role"],
        name=spec["name"],
        memory_budget=_q(spec["memory"], "memory"),
        storage_budget=_q(spec["storage"], "memory"),
        energy_budget=None if spec["energy"] is None else _q(spec["energy"], "energy"),
        idle_power=_q(spec["idle"], "power"),
        max_power=_q(spec["max"], "power"),
    )


def channels(profile: str = "run1") -> list[Channel]:
    try:
        table = CHANNEL_PROFILES[profile]
    except KeyError:
        raise KeyError(f"unknown channel profile {profile!r}; expected one of {sorted(CHANNEL_PROFILES)}") from None
    return [
        Channel(
            src=k,
            dst=l,
            bandwidth=_q(bw, "bandwidth"),
            tx_energy=_q(tx, "energy_per_bit"),
            rx_energy=_q(rx, "energy_per_bit"),
        )
        for (k, l), (bw, tx, rx) in table.items()
    ]


def system_model(configuration: str = "C1", profile: str = "run1") -> SystemModel:
    try:
        keys = CONFIGURATIONS[configuration]
    except KeyError:
        raise KeyError(
            f"unknown configuration {configuration!r}; expected one of {sorted(CONFIGURATIONS)}"
        ) from None
    return make_system_model([device(k) for k in keys], channels(profile))


def performance_ratios(configuration: str = "C1") -> dict[DeviceRole, Fraction]:
    keys = CONFIGURATIONS[configuration]
    return {spec_role: PERFORMANCE_RATIOS[key] for key, spec_role in zip(keys, (E, H, C))}


def example_inspection_tfg() -> TaskGraph:
    """15-task aerial-inspection pipeline used as the bundled demo input.

    Camera capture is pinned to the edge device and the operator display
    to the hub; a preprocessing+line-detection chain and a tower-detection
    chain both feed the display.  Profiles are synthetic but sized like an
    image pipeline (hundreds of ms on the edge, an order of magnitude
    faster but hungrier on the hub and cloud).
    """
    # (id, devices, per-device latency, per-device power, memory, storage, data out)
    rows = [
        (1, "e", ("150ms",), ("3.1W",), "48MiB", "4MiB", "6Mbit"),
        (2, "ehc", ("240ms", "33.1ms", "15.9ms"), ("3.4W", "24.7W", "40.8W"), "96MiB", "8MiB", "6Mbit"),
        (3, "ehc", ("180ms", "24.8ms", "11.9ms"), ("3.2W", "23.2W", "38.4W"), "64MiB", "6MiB", "5Mbit"),
        (4, "ehc", ("210ms", "29.0ms", "13.9ms"), ("3.3W", "23.9W", "39.6W"), "72MiB", "6MiB", "5Mbit"),
        (5, "ehc", ("160ms", "22.1ms", "10.6ms"), ("3.0W", "21.8W", "36.0W"), "56MiB", "4MiB", "4Mbit"),
        (6, "ehc", ("520ms", "71.7ms", "34.5ms"), ("3.9W", "28.3W", "46.8W"), "128MiB", "12MiB", "2Mbit"),
        (7, "ehc", ("460ms", "63.4ms", "30.5ms"), ("3.8W", "27.6W", "45.6W"), "112MiB", "10MiB", "2Mbit"),
        (8, "ehc", ("380ms", "52.4ms", "25.2ms"), ("3.6W", "26.1W", "43.2W"), "96MiB", "8MiB", "1Mbit"),
        (9, "ehc", ("290ms", "40.0ms", "19.2ms"), ("3.5W", "25.4W", "42.0W"), "80MiB", "8MiB", "0.5Mbit"),
        (10, "ehc", ("900ms", "124ms", "59.7ms"), ("4.2W", "30.5W", "50.4W"), "192MiB", "24MiB", "3Mbit"),
        (11, "ehc", ("780ms", "108ms", "51.7ms"), ("4.1W", "29.7W", "49.2W"), "176MiB", "20MiB", "2Mbit"),
        (12, "ehc", ("640ms", "88.2ms", "42.4ms"), ("4.0W", "29.0W", "48.0W"), "160MiB", "16MiB", "1.5Mbit"),
        (13, "ehc", ("560ms", "77.2ms", "37.1ms"), ("3.9W", "28.3W", "46.8W"), "144MiB", "14MiB", "1Mbit"),
        (14, "ehc", ("410ms", "56.5ms", "27.2ms"), ("3.7W", "26.8W", "44.4W"), "128MiB", "12MiB", "0.5Mbit"),
        (15, "h", ("90ms",), ("6.0W",), "32MiB", "2MiB", "0.1Mbit"),
    ]
    roles = {"e": E, "h": H, "c": C}
    tasks = []
    for tid, devices, lats, powers, mem, sto, data in rows:
        allowed = tuple(roles[ch] for ch in devices)
        tasks.append(
            Task(
                id=tid,
                memory=_q(mem, "memory"),
                storage=_q(sto, "memory"),
                output_data=_q(data, "data"),
                allowed=allowed,
                latency={r: _q(v, "time") for r, v in zip(allowed, lats)},
                power={r: _q(v, "power") for r, v in zip(allowed, powers)},
            )
        )
    arcs = (
        (1, 2), (1, 10),
        (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9),
        (10, 11), (11, 12), (12, 13), (13, 14),
        (9, 15), (14, 15),
    )
    return TaskGraph(tasks=tuple(tasks), arcs=arcs)
