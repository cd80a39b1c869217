"""Per-implementation volume manager: admission ledger and throttling.

One manager owns one implementation. Admission trades against the
worst-case IOPS budget and usable capacity; the throttle loop watches
observed per-volume IOPS once per control interval and caps non-violators
while any reserved volume runs under its floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Union

from .errors import ConflictError, InputError, InvalidStateError, LayoutError, NotFoundError
from .model import ControlConfig, StorageImplementation, Volume
from .scheduler import LayoutMatch, RejectReason, VolumeRequest, layout_admits
from .statedb import ManagerReport, StateDatabase

IntervalStats = Mapping[str, Union[int, float, Fraction]]
"""Observed IOPS per volume over the last control interval."""


@dataclass(frozen=True)
class ThrottleState:
    """Active IOPS caps per volume. Throttling is active iff caps exist."""

    caps: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "caps", MappingProxyType(dict(self.caps)))

    @property
    def active(self) -> bool:
        return bool(self.caps)


@dataclass(frozen=True)
class Admission:
    """Outcome of an admit call: a volume id, or the resource that ran out."""

    volume_id: str | None = None
    reason: RejectReason | None = None

    @property
    def accepted(self) -> bool:
        return self.volume_id is not None


def compute_throttle(
    stats: IntervalStats,
    reservations: Mapping[str, int],
    previous: ThrottleState,
    floor_iops: int,
) -> ThrottleState:
    """One control-loop step over one implementation's volumes.

    A volume violates when it observed less than its nonzero reservation.
    While any volume violates, every other volume is capped at
    max(reservation, floor); violators stay uncapped so they can recover.
    With no violators, caps are held as long as some capped volume still
    consumed its whole cap (its appetite is unobservable below the cap,
    so releasing would just re-trigger the violation) and released the
    first interval a capped volume demonstrably wants less.
    """
    violators = {
        volume_id
        for volume_id, floor in reservations.items()
        if floor > 0 and volume_id in stats and stats[volume_id] < floor
    }
    if violators:
        caps = {
            volume_id: max(reservations[volume_id], floor_iops)
            for volume_id in reservations
            if volume_id not in violators
        }
        return ThrottleState(caps)
    if previous.active:
        for volume_id, cap in previous.caps.items():
            if volume_id in stats and stats[volume_id] >= cap:
                return previous
    return ThrottleState({})


class StorageManager:
    """Owns one implementation's volumes, ledger, and throttle state."""

    def __init__(self, impl: StorageImplementation, statedb: StateDatabase):
        self.impl = impl
        self.statedb = statedb
        self.volumes: dict[str, Volume] = {}
        self.throttle = ThrottleState({})

    def admit(
        self,
        request: VolumeRequest,
        now: float,
        match: LayoutMatch = LayoutMatch.EXACT,
    ) -> Admission:
        """Charge a request against the ledger, or say what ran out.

        Raises LayoutError if the request should never have been routed
        here; budget and capacity exhaustion are ordinary rejections.
        """
        wanted = request.volume_type.layout
        if not layout_admits(self.impl.layout, wanted, match):
            raise LayoutError(
                f"impl {self.impl.impl_id} has layout {self.impl.layout}, "
                f"request {request.request_id} wants {wanted}"
            )
        volume_id = f"vol-{request.request_id}"
        if volume_id in self.volumes:
            raise ConflictError(f"volume {volume_id} already exists")
        min_iops = request.volume_type.min_iops
        if self.impl.remaining_iops < min_iops:
            return Admission(reason=RejectReason.NO_IOPS_BUDGET)
        if self.impl.remaining_capacity_bytes < request.size_bytes:
            return Admission(reason=RejectReason.NO_CAPACITY)
        volume = Volume(
            volume_id=volume_id,
            impl_id=self.impl.impl_id,
            size_bytes=request.size_bytes,
            min_iops=min_iops,
            created_at=now,
        )
        self.volumes[volume_id] = volume
        self.impl.volumes.add(volume_id)
        self.impl.allocated_iops += min_iops
        self.impl.allocated_capacity_bytes += request.size_bytes
        self.impl.idle_since = None
        self._publish(now)
        return Admission(volume_id=volume_id)

    def delete_volume(self, volume_id: str, now: float) -> Volume:
        volume = self._get(volume_id)
        if volume.attached_to is not None:
            raise InvalidStateError(
                f"volume {volume_id} is attached to {volume.attached_to}"
            )
        del self.volumes[volume_id]
        self.impl.volumes.discard(volume_id)
        self.impl.allocated_iops -= volume.min_iops
        self.impl.allocated_capacity_bytes -= volume.size_bytes
        if not self.impl.volumes:
            self.impl.idle_since = now
        self._publish(now)
        return volume

    def attach(self, volume_id: str, instance_id: str) -> Volume:
        if not instance_id:
            raise InputError("instance_id must be nonempty")
        volume = self._get(volume_id)
        if volume.attached_to is not None:
            raise InvalidStateError(
                f"volume {volume_id} is already attached to {volume.attached_to}"
            )
        attached = replace(volume, attached_to=instance_id)
        self.volumes[volume_id] = attached
        return attached

    def detach(self, volume_id: str) -> Volume:
        volume = self._get(volume_id)
        if volume.attached_to is None:
            raise InvalidStateError(f"volume {volume_id} is not attached")
        detached = replace(volume, attached_to=None)
        self.volumes[volume_id] = detached
        return detached

    def reservations(self) -> dict[str, int]:
        return {volume_id: v.min_iops for volume_id, v in self.volumes.items()}

    def throttle_tick(self, stats: IntervalStats, config: ControlConfig) -> ThrottleState:
        """Advance the throttle loop one control interval."""
        if set(stats) != set(self.volumes):
            missing = sorted(set(self.volumes) - set(stats))
            stray = sorted(set(stats) - set(self.volumes))
            raise InputError(
                f"impl {self.impl.impl_id}: stats must cover exactly the hosted volumes"
                f" (missing {missing}, stray {stray})"
            )
        self.throttle = compute_throttle(
            stats, self.reservations(), self.throttle, config.throttle_floor_iops
        )
        return self.throttle

    def report(self, now: float) -> ManagerReport:
        return ManagerReport(
            impl_id=self.impl.impl_id,
            node_id=self.impl.node_id,
            layout=self.impl.layout,
            volume_count=len(self.volumes),
            total_iops_budget=self.impl.total_iops_budget,
            allocated_iops=self.impl.allocated_iops,
            usable_capacity_bytes=self.impl.usable_capacity_bytes,
            allocated_capacity_bytes=self.impl.allocated_capacity_bytes,
            timestamp=now,
        )

    def _publish(self, now: float) -> None:
        self.statedb.upsert_manager_report(self.report(now))

    def _get(self, volume_id: str) -> Volume:
        volume = self.volumes.get(volume_id)
        if volume is None:
            raise NotFoundError(f"impl {self.impl.impl_id}: no volume {volume_id}")
        return volume
