"""Regenerate the bundled fixtures under src/servicebond/fixtures."""
import json
from pathlib import Path

from servicebond.io import signal_to_dict, write_signal, write_trace
from servicebond.trace_model import Signal, Trace

OUT = Path(__file__).resolve().parent.parent / "src" / "servicebond" / "fixtures"
H = 3600.0
STEP = 900.0


def dump(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=1) + "\n")


def held_trace(signal, step=STEP, locate=None):
    ts = [i * step for i in range(int(signal.duration // step))]
    vals = [list(signal.value_at(t)) for t in ts]
    locs = [locate(i) for i in range(len(ts))] if locate else None
    return Trace(ts, vals, signal.names, locs)


def main():
    names = ("ds", "us")
    failure = Signal.from_segments(
        [(0.0, 19 * H, (25.0, 3.0)), (19 * H, 22 * H, (5.0, 1.0)), (22 * H, 24 * H, (25.0, 3.0))], names
    )
    write_signal(failure, OUT / "prime_time_failure.json")
    write_trace(held_trace(failure), OUT / "prime_time_failure.csv")

    segs = []
    for h in range(24):
        vals = [(25.0, 3.0), (31.5, 4.25), (40.0, 3.0), (27.0, 6.0)][h % 4]
        segs.append((h * H, (h + 1) * H, vals))
    compliant = Signal.from_segments(segs, names)
    write_signal(compliant, OUT / "compliant.json")
    write_trace(held_trace(compliant), OUT / "compliant.csv")

    # failure is only ever seen from the far room; the near room is fine
    n = int(24 * H // STEP)
    ts = [i * STEP for i in range(n)]
    far = [i % 2 == 1 for i in range(n)]
    vals = [[5.0, 1.0] if f and 19 * H <= t < 22 * H else [25.0, 3.0] for t, f in zip(ts, far)]
    locs = [[5.0, 5.0] if f else [1.0, 1.0] for f in far]
    write_trace(Trace(ts, vals, names, locs), OUT / "located_failure.csv")

    requesters = [f"r{i}" for i in range(5)]
    dump("avalanche_complete5.json", {
        "name": "avalanche-complete5",
        "interaction_form": "directory",
        "horizon_ticks": 10,
        "seed": 7,
        "request_cap": 100,
        "entities": [{"id": "p0", "level": 0, "capacity": None}]
        + [{"id": r, "level": 1, "roles": ["requester"]} for r in requesters],
        "complete_groups": [requesters],
        "avalanche": {"horizontal_adopt_prob": 1.0},
        "seed_requests": [{"tick": 0, "entity": "r0"}],
    })

    crowd = [f"u{i:02d}" for i in range(16)]
    dump("avalanche_bond_damped.json", {
        "name": "avalanche-bond-damped",
        "interaction_form": "bond",
        "horizon_ticks": 80,
        "seed": 11,
        "request_cap": 12,
        "base_demand": 2.0,
        "review_period": 8,
        "audit_threshold": 0.2,
        "bond_upkeep_rate": 0.01,
        "entities": [
            {"id": "core", "level": 0, "capacity": None},
            {"id": "edge-a", "level": 1, "capacity": 6.0, "quality": 0.9, "supplier": "core",
             "inertia_horizon": 3, "fixed_cost": 1.0},
            {"id": "edge-b", "level": 1, "capacity": 10.0, "quality": 0.8, "supplier": "core",
             "inertia_horizon": 30, "fixed_cost": 0.5},
        ] + [{"id": u, "level": 2, "roles": ["requester"]} for u in crowd],
        "complete_groups": [crowd],
        "avalanche": {
            "horizontal_adopt_prob": 0.6,
            "vertical_amplification": 1.5,
            "self_driven_uncertainty": 0.5,
            "damping_via_review": True,
        },
        "seed_requests": [{"tick": 0, "entity": "u00"}, {"tick": 3, "entity": "u07", "demand": 3.0},
                          {"tick": 20, "entity": "u12"}],
    })

    ring = [f"c{i:02d}" for i in range(20)]
    edges = [[ring[i], ring[(i + 1) % 20]] for i in range(20)] + [[ring[i], ring[(i + 7) % 20]] for i in range(0, 20, 2)]
    dump("avalanche_stochastic.json", {
        "name": "avalanche-stochastic-brand",
        "interaction_form": "brand",
        "horizon_ticks": 40,
        "seed": 42,
        "request_cap": 1000,
        "entities": [
            {"id": "b1", "level": 0, "capacity": 8.0, "brand": "acme", "quality": 0.9},
            {"id": "b2", "level": 0, "capacity": 8.0, "brand": "acme", "quality": 0.6},
            {"id": "b3", "level": 0, "capacity": 8.0, "brand": "zenith", "quality": 0.7},
        ] + [{"id": c, "level": 1, "roles": ["requester"]} for c in ring],
        "edges": edges,
        "avalanche": {"horizontal_adopt_prob": 0.5, "self_driven_uncertainty": 0.3},
        "seed_requests": [{"tick": 0, "entity": "c00"}, {"tick": 5, "entity": "c10"}],
    })

    dump("smarthouse.default.json", {
        "kind": "smarthouse",
        "name": "smarthouse.default",
        "seed": 42,
        "regulator": "regulator",
        "isp": "isp",
        "tick_seconds": 60,
        "horizon_seconds": 86400,
        "capacity_up_kbps": 3000,
        "capacity_down_kbps": 25000,
        "tap_every_seconds": 3600,
        "demand_jitter": 0.25,
        "utilities": [
            {"id": "utility-electric", "flow": "Electricity", "refusal_prob": 0.05},
            {"id": "utility-water", "flow": "Water", "refusal_prob": 0.3},
        ],
        "bonds": [
            {"counterpart": "utility-electric", "grade": 0.9, "max_interval": 900, "upkeep_rate": 0.0005},
            {"counterpart": "utility-water", "grade": 0.75, "max_interval": 900, "upkeep_rate": 0.0005},
            {"counterpart": "isp", "grade": 1.0, "max_interval": 3600, "upkeep_rate": 0.001},
            {"counterpart": "freshbox", "grade": 0.5, "max_interval": 1800},
            {"counterpart": "airwatch", "grade": 0.6, "max_interval": 1800},
        ],
        "devices": [
            {"id": "water-meter", "flow": "Water", "mode": "pull-sensor", "demand": 32, "min_quota": 8, "vendor": "utility-water"},
            {"id": "leak-valve", "flow": "Water", "mode": "push-actuator", "demand": 16, "min_quota": 4, "vendor": "utility-water"},
            {"id": "smart-meter", "flow": "Electricity", "mode": "pull-sensor", "demand": 64, "min_quota": 16, "vendor": "utility-electric"},
            {"id": "solar-inverter", "flow": "Electricity", "mode": "pull-sensor", "demand": 128, "min_quota": 32, "vendor": "utility-electric"},
            {"id": "thermostat", "flow": "Electricity", "mode": "push-actuator", "demand": 32, "min_quota": 8, "vendor": "utility-electric"},
            {"id": "gateway-telemetry", "flow": "Connectivity", "mode": "pull-sensor", "demand": 1200, "min_quota": 100, "vendor": "isp"},
            {"id": "security-cam", "flow": "Connectivity", "mode": "pull-sensor", "demand": 800, "min_quota": 200, "vendor": "isp"},
            {"id": "firmware-push", "flow": "Connectivity", "mode": "push-actuator", "demand": 4000, "min_quota": 500, "vendor": "isp"},
            {"id": "fridge-cam", "flow": "Food", "mode": "pull-sensor", "demand": 1500, "min_quota": 200, "vendor": "freshbox"},
            {"id": "pantry-scale", "flow": "Food", "mode": "pull-sensor", "demand": 8, "min_quota": 2, "vendor": "freshbox"},
            {"id": "air-quality", "flow": "Air", "mode": "pull-sensor", "demand": 16, "min_quota": 4, "vendor": "airwatch"},
            {"id": "co2-sensor", "flow": "Air", "mode": "pull-sensor", "demand": 16, "min_quota": 4, "vendor": "airwatch"},
            {"id": "promo-speaker", "flow": "Connectivity", "mode": "pull-sensor", "demand": 256, "min_quota": 0, "vendor": "adnet"},
        ],
    })

    (OUT / "schedule_half.txt").write_text("# two of four time units bonded\nhorizon,4\n0,1\n2,3\n")
    (OUT / "molecule.txt").write_text("# two communities and a loner\nhome,utility-electric\nhome,isp\ncafe,roaster\nhermit\n")


if __name__ == "__main__":
    main()
