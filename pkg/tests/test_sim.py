"""Simulation engine: event flow, time series, determinism, summaries."""

from __future__ import annotations

from fractions import Fraction

import pytest

from storbind.model import ReplicatedPool, parse_layout
from storbind.scenario import build_scenario, load_scenario
from storbind.scenarios import scenario_path
from storbind.sim import EventKind, as_number, run_scenario

GiB = 1024**3


def mini_scenario(**overrides) -> dict:
    data = {
        "name": "mini",
        "duration_s": 30,
        "nodes": [{"node_id": "n1", "disks": {"count": 4, "capacity": "1T"}}],
        "volume_types": {"plain": {"jbod": 1}},
        "requests": [
            {"time": 0, "op": "create", "id": "r1", "type": "plain", "size": "100G"},
        ],
    }
    data.update(overrides)
    return data


def kinds(result) -> list[str]:
    return [e.kind for e in result.events]


def test_create_emits_arrival_schedule_provision_admit():
    result = run_scenario(build_scenario(mini_scenario()), seed=0)
    assert kinds(result) == [
        EventKind.REQUEST_ARRIVED,
        EventKind.SCHEDULED,
        EventKind.PROVISIONED,
        EventKind.ADMITTED,
    ]
    arrived, scheduled, provisioned, admitted = result.events
    assert arrived.payload["request_id"] == "r1"
    assert scheduled.payload["decision"]["action"] == "provision"
    assert provisioned.payload["impl_id"] == "impl-0001"
    assert provisioned.payload["disk_ids"] == ["n1-d00"]
    assert admitted.payload["volume_id"] == "vol-r1"
    assert [e.seq for e in result.events] == [0, 1, 2, 3]


def test_reject_event_carries_reason():
    data = mini_scenario()
    data["volume_types"]["wide"] = {"raid": 5, "width": 10}
    data["requests"].append(
        {"time": 5, "op": "create", "id": "r2", "type": "wide", "size": "1G"}
    )
    result = run_scenario(build_scenario(data), seed=0)
    assert kinds(result)[-1] == EventKind.REJECTED
    assert result.events[-1].payload == {"request_id": "r2", "reason": "no-raw-disks"}
    assert result.summary["counts"]["rejected"] == 1


def test_delete_event_and_error_outcomes():
    data = mini_scenario()
    data["requests"] += [
        {"time": 5, "op": "delete", "volume": "vol-r1"},
        {"time": 10, "op": "delete", "volume": "vol-r1"},
        {"time": 15, "op": "detach", "volume": "vol-r1"},
    ]
    result = run_scenario(build_scenario(data), seed=0)
    deleted = [e for e in result.events if e.kind == EventKind.VOLUME_DELETED]
    assert len(deleted) == 1
    assert deleted[0].payload == {"volume_id": "vol-r1", "impl_id": "impl-0001"}
    # second delete and the detach fail, are recorded, and do not abort the run
    errors = [r for r in result.summary["requests"] if r["result"] == "error"]
    assert len(errors) == 2
    assert result.summary["counts"]["deleted"] == 1


def test_attach_blocks_delete_until_detach():
    data = mini_scenario(duration_s=40)
    data["requests"] += [
        {"time": 5, "op": "attach", "volume": "vol-r1", "instance": "vm-1"},
        {"time": 10, "op": "delete", "volume": "vol-r1"},
        {"time": 15, "op": "detach", "volume": "vol-r1"},
        {"time": 20, "op": "delete", "volume": "vol-r1"},
    ]
    result = run_scenario(build_scenario(data), seed=0)
    outcomes = [r["result"] for r in result.summary["requests"]]
    assert outcomes == ["admitted", "attached", "error", "detached", "deleted"]


def test_timeseries_covers_live_volumes_per_interval():
    data = mini_scenario(duration_s=30)
    data["requests"].append({"time": 10, "op": "delete", "volume": "vol-r1"})
    data["workloads"] = [{"volume": "vol-r1", "constant": 50}]
    result = run_scenario(build_scenario(data), seed=0)
    rows = [(p.time_s, p.volume_id, p.achieved_iops) for p in result.timeseries]
    # alive for steps 0 and 5, deleted at the 10s step before sampling
    assert rows == [(0.0, "vol-r1", 50.0), (5.0, "vol-r1", 50.0)]


def test_demand_is_capped_by_degraded_budget():
    data = mini_scenario()
    data["workloads"] = [{"volume": "vol-r1", "constant": 500}]
    data["control"] = {"interval_s": 5, "degradation": 0.45}
    result = run_scenario(build_scenario(data), seed=0)
    # jbod budget 200, degraded to 90
    assert all(p.achieved_iops == 90.0 for p in result.timeseries)
    assert all(p.demand_iops == 500.0 for p in result.timeseries)


def test_noisy_neighbor_throttle_timeline():
    scn = load_scenario(scenario_path("noisy-neighbor"))
    result = run_scenario(scn, seed=0)
    throttle = [(e.time_s, e.kind, e.payload) for e in result.events if "throttle" in e.kind]
    assert throttle == [
        (125.0, EventKind.THROTTLE_APPLIED, {"impl_id": "impl-0001", "caps": {"vol-rb": 60}}),
        (485.0, EventKind.THROTTLE_RELEASED, {"impl_id": "impl-0001"}),
    ]
    by_key = {(p.time_s, p.volume_id): p for p in result.timeseries}
    # while capped, the cap column is filled and the victim is whole again
    assert by_key[(130.0, "vol-rb")].cap_iops == 60
    assert by_key[(130.0, "vol-ra")].cap_iops is None
    assert by_key[(130.0, "vol-ra")].achieved_iops == 100.0
    assert by_key[(120.0, "vol-ra")].achieved_iops == 90.0


def test_gc_reclaims_and_reprovisions():
    scn = load_scenario(scenario_path("table3-gc"))
    result = run_scenario(scn, seed=0)
    reclaimed = [e for e in result.events if e.kind == EventKind.GC_RECLAIMED]
    assert [e.payload["impl_id"] for e in reclaimed] == ["impl-0001", "impl-0002", "impl-0003"]
    assert {e.time_s for e in reclaimed} == {930.0}
    late = [e for e in result.events if e.kind == EventKind.PROVISIONED][-1]
    assert late.time_s == 940.0
    assert late.payload["impl_id"] == "impl-0004"
    assert late.payload["node_id"] == "node1"
    assert result.summary["counts"]["reclaimed"] == 3


def test_gc_period_slows_collection():
    data = mini_scenario(duration_s=120)
    data["requests"].append({"time": 5, "op": "delete", "volume": "vol-r1"})
    data["control"] = {"interval_s": 5, "gc_dwell_s": 0, "gc_period_s": 50}
    result = run_scenario(build_scenario(data), seed=0)
    reclaimed = [e for e in result.events if e.kind == EventKind.GC_RECLAIMED]
    # deleted at 5, first collector pass after that is t=50
    assert [e.time_s for e in reclaimed] == [50.0]


def test_static_mode_preprovisions_and_never_collects():
    data = mini_scenario(duration_s=600)
    data["requests"].append({"time": 5, "op": "delete", "volume": "vol-r1"})
    data["control"] = {"interval_s": 5, "gc_dwell_s": 0}
    result = run_scenario(build_scenario(data), seed=0, static_layout=parse_layout("jbod"))
    provisioned = [e for e in result.events if e.kind == EventKind.PROVISIONED]
    assert len(provisioned) == 4
    assert all(e.time_s == 0.0 for e in provisioned)
    assert all(e.payload["request_id"] is None for e in provisioned)
    assert not [e for e in result.events if e.kind == EventKind.GC_RECLAIMED]
    assert result.summary["mode"] == "static"


def test_static_mode_redundancy_binding():
    scn = load_scenario(scenario_path("overhead"))
    result = run_scenario(scn, seed=0, static_layout=ReplicatedPool(replicas=3))
    admitted = [e.payload for e in result.events if e.kind == EventKind.ADMITTED]
    assert [a["impl_id"] for a in admitted] == [
        "impl-0001",
        "impl-0002",
        "impl-0003",
        "impl-0004",
    ]
    assert result.summary["overhead_by_class"] == {"vcdn": 9, "vdi": 3}
    assert result.summary["overhead_total"] == 12


def test_overhead_summary_dynamic():
    scn = load_scenario(scenario_path("overhead"))
    result = run_scenario(scn, seed=0)
    assert result.summary["overhead_by_class"] == {"vcdn": 3, "vdi": 3}
    assert result.summary["overhead_total"] == 6
    storage = result.summary["storage"]
    assert storage["raw_bytes_reserved"] == 600 * GiB
    assert storage["logical_bytes_stored"] == 400 * GiB
    assert storage["overhead_ratio"] == 1.5


def test_overhead_empty_run_is_null():
    data = mini_scenario()
    data["requests"] = []
    result = run_scenario(build_scenario(data), seed=0)
    assert result.summary["overhead_total"] is None
    assert result.summary["storage"]["overhead_ratio"] is None
    assert result.summary["decision_latency"] is None


def test_summary_counts_and_free_disks():
    scn = load_scenario(scenario_path("table3"))
    result = run_scenario(scn, seed=0)
    assert result.summary["counts"] == {
        "provisioned": 3,
        "admitted": 6,
        "rejected": 1,
        "deleted": 0,
        "reclaimed": 0,
        "throttle_applied": 0,
        "throttle_released": 0,
    }
    assert result.summary["free_disks"] == {"node1": 0, "node2": 2}
    impl_ids = [i["impl_id"] for i in result.summary["implementations"]]
    assert impl_ids == ["impl-0001", "impl-0002", "impl-0003"]


def test_same_seed_same_run_walk_demand():
    data = mini_scenario(duration_s=100)
    data["workloads"] = [{"volume": "vol-r1", "walk": {"mean": 100, "jitter": 30}}]
    a = run_scenario(build_scenario(data), seed=5)
    b = run_scenario(build_scenario(data), seed=5)
    c = run_scenario(build_scenario(data), seed=6)

    def series(result):
        return [(p.time_s, p.demand_iops, p.achieved_iops) for p in result.timeseries]

    assert series(a) == series(b)
    assert series(a) != series(c)
    assert a.events == b.events


def test_events_are_globally_ordered():
    scn = load_scenario(scenario_path("table3-gc"))
    result = run_scenario(scn, seed=0)
    seqs = [e.seq for e in result.events]
    assert seqs == list(range(len(seqs)))
    times = [e.time_s for e in result.events]
    assert times == sorted(times)


def test_as_number():
    assert as_number(Fraction(6)) == 6
    assert isinstance(as_number(Fraction(6)), int)
    assert as_number(Fraction(3, 2)) == 1.5
    assert isinstance(as_number(Fraction(3, 2)), float)
