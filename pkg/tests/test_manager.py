"""Per-implementation manager: admission ledger and throttle loop."""

from __future__ import annotations

from fractions import Fraction

import pytest

from storbind.errors import ConflictError, InputError, InvalidStateError, LayoutError, NotFoundError
from storbind.manager import StorageManager, ThrottleState, compute_throttle
from storbind.model import (
    ControlConfig,
    DiskSpec,
    Jbod,
    Raid,
    StorageImplementation,
    VolumeType,
)
from storbind.scheduler import LayoutMatch, RejectReason, VolumeRequest
from storbind.statedb import StateDatabase

TiB = 1024**4
GiB = 1024**3

RAID6_4 = Raid(width=4, parity_count=2)


def make_manager(db: StateDatabase | None = None) -> StorageManager:
    impl = StorageImplementation(
        impl_id="impl-0001",
        node_id="node1",
        layout=RAID6_4,
        disk_ids=("node1-d00", "node1-d01", "node1-d02", "node1-d03"),
        usable_capacity_bytes=2 * TiB,
        total_iops_budget=400,
        idle_since=0.0,
    )
    return StorageManager(impl, db or StateDatabase())


def req(request_id: str, min_iops: int = 100, size: int = 100 * GiB, layout=RAID6_4) -> VolumeRequest:
    vtype = VolumeType(name="t", layout=layout, min_iops=min_iops)
    return VolumeRequest(request_id=request_id, volume_type=vtype, size_bytes=size, submitted_at=0.0)


def test_admit_creates_volume_and_charges_ledger():
    mgr = make_manager()
    adm = mgr.admit(req("r1"), now=1.0)
    assert adm.accepted and adm.volume_id == "vol-r1"
    assert mgr.impl.allocated_iops == 100
    assert mgr.impl.allocated_capacity_bytes == 100 * GiB
    assert mgr.impl.idle_since is None
    assert mgr.volumes["vol-r1"].created_at == 1.0


def test_admit_until_budget_exhausted():
    mgr = make_manager()
    for i in range(1, 5):
        assert mgr.admit(req(f"r{i}"), now=0.0).accepted
    adm = mgr.admit(req("r5"), now=0.0)
    assert not adm.accepted
    assert adm.reason is RejectReason.NO_IOPS_BUDGET


def test_admit_capacity_exhausted():
    mgr = make_manager()
    adm = mgr.admit(req("big", min_iops=0, size=3 * TiB), now=0.0)
    assert not adm.accepted
    assert adm.reason is RejectReason.NO_CAPACITY


def test_admit_wrong_layout_raises():
    mgr = make_manager()
    with pytest.raises(LayoutError):
        mgr.admit(req("r1", layout=Jbod()), now=0.0)


def test_admit_duplicate_volume_conflicts():
    mgr = make_manager()
    mgr.admit(req("r1"), now=0.0)
    with pytest.raises(ConflictError):
        mgr.admit(req("r1"), now=0.0)


def test_delete_refunds_and_marks_idle():
    mgr = make_manager()
    mgr.admit(req("r1"), now=0.0)
    volume = mgr.delete_volume("vol-r1", now=10.0)
    assert volume.volume_id == "vol-r1"
    assert mgr.impl.allocated_iops == 0
    assert mgr.impl.allocated_capacity_bytes == 0
    assert mgr.impl.idle_since == 10.0


def test_delete_unknown_volume():
    with pytest.raises(NotFoundError):
        make_manager().delete_volume("vol-none", now=0.0)


def test_attached_volume_cannot_be_deleted():
    mgr = make_manager()
    mgr.admit(req("r1"), now=0.0)
    mgr.attach("vol-r1", "vm-1")
    with pytest.raises(InvalidStateError):
        mgr.delete_volume("vol-r1", now=1.0)
    mgr.detach("vol-r1")
    assert mgr.delete_volume("vol-r1", now=2.0).volume_id == "vol-r1"


def test_attach_twice_conflicts():
    mgr = make_manager()
    mgr.admit(req("r1"), now=0.0)
    mgr.attach("vol-r1", "vm-1")
    with pytest.raises(InvalidStateError):
        mgr.attach("vol-r1", "vm-2")


def test_detach_unattached_volume():
    mgr = make_manager()
    mgr.admit(req("r1"), now=0.0)
    with pytest.raises(InvalidStateError):
        mgr.detach("vol-r1")


def test_admission_publishes_report():
    db = StateDatabase()
    mgr = make_manager(db)
    mgr.admit(req("r1"), now=0.0)
    rep = db.snapshot().implementations["impl-0001"]
    assert rep.allocated_iops == 100
    assert rep.volume_count == 1


def test_report_shape():
    mgr = make_manager()
    mgr.admit(req("r1"), now=0.0)
    rep = mgr.report(now=5.0)
    assert rep.impl_id == "impl-0001"
    assert rep.remaining_iops == 300
    assert rep.timestamp == 5.0


# throttle loop


def test_no_violation_no_caps():
    state = compute_throttle({"a": 100, "b": 50}, {"a": 100, "b": 0}, ThrottleState(), 60)
    assert not state.active


def test_violation_caps_non_violators_at_reservation_or_floor():
    state = compute_throttle({"a": 90, "b": 90}, {"a": 100, "b": 0}, ThrottleState(), 60)
    assert state.active
    assert dict(state.caps) == {"b": 60}


def test_cap_uses_reservation_when_above_floor():
    state = compute_throttle(
        {"a": 90, "b": 90, "c": 90}, {"a": 100, "b": 80, "c": 0}, ThrottleState(), 60
    )
    assert dict(state.caps) == {"b": 80, "c": 60}


def test_all_violators_means_nobody_to_cap():
    # both volumes below reservation: both are violators, nobody to cap
    state = compute_throttle({"a": 50, "b": 50}, {"a": 100, "b": 100}, ThrottleState(), 60)
    assert not state.active


def test_saturated_cap_holds():
    held = ThrottleState({"b": 60})
    state = compute_throttle({"a": 100, "b": 60}, {"a": 100, "b": 0}, held, 60)
    assert state.caps == held.caps


def test_cap_released_when_capped_volume_backs_off():
    held = ThrottleState({"b": 60})
    state = compute_throttle({"a": 100, "b": 50}, {"a": 100, "b": 0}, held, 60)
    assert not state.active


def test_release_stays_clear():
    state = compute_throttle({"a": 100, "b": 50}, {"a": 100, "b": 0}, ThrottleState(), 60)
    assert not state.active


def test_throttle_tick_validates_volume_set():
    mgr = make_manager()
    mgr.admit(req("r1"), now=0.0)
    config = ControlConfig(throttle_floor_iops=60)
    with pytest.raises(InputError):
        mgr.throttle_tick({"vol-r1": 100, "vol-ghost": 5}, config)
    with pytest.raises(InputError):
        mgr.throttle_tick({}, config)


def test_throttle_tick_updates_state():
    mgr = make_manager()
    mgr.admit(req("ra", min_iops=100), now=0.0)
    mgr.admit(req("rb", min_iops=0), now=0.0)
    config = ControlConfig(throttle_floor_iops=60)
    state = mgr.throttle_tick({"vol-ra": Fraction(90), "vol-rb": Fraction(90)}, config)
    assert dict(state.caps) == {"vol-rb": 60}
    assert mgr.throttle is state


def test_throttle_state_is_frozen_mapping():
    state = ThrottleState({"v": 10})
    with pytest.raises(TypeError):
        state.caps["w"] = 5  # type: ignore[index]
