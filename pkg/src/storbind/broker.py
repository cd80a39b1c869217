"""Storage broker: turns raw disks into implementations and back.

The broker owns the free-disk pool of every node. Provisioning is
all-or-nothing, and the garbage collector returns an implementation's
disks to the pool once it has sat empty for the configured dwell time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from .errors import ConflictError, InputError, LayoutError, NotFoundError
from .manager import StorageManager
from .model import (
    ControlConfig,
    DiskSpec,
    ErasureCodedPool,
    LayoutKind,
    ReplicatedPool,
    StorageImplementation,
    StorageNode,
    disk_count,
    iops_budget,
    usable_capacity,
)
from .statedb import BrokerReport, StateDatabase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProvisionOrder:
    """A concrete build instruction: these disks, this layout, this budget.

    The budget is injected rather than recomputed at build time so the
    policy that sized it stays in one place.
    """

    node_id: str
    layout: LayoutKind
    disk_ids: tuple[str, ...]
    total_iops_budget: int

    def __post_init__(self) -> None:
        if len(set(self.disk_ids)) != len(self.disk_ids):
            raise InputError(f"order for {self.node_id}: duplicate disk ids")
        if self.total_iops_budget < 0:
            raise InputError(f"order for {self.node_id}: budget must be >= 0")


class StorageBroker:
    """Materializes and reclaims implementations over a fixed disk fleet."""

    def __init__(self, nodes: Iterable[StorageNode], statedb: StateDatabase):
        self.statedb = statedb
        self.nodes: dict[str, StorageNode] = {}
        self._free: dict[str, set[str]] = {}
        self.managers: dict[str, StorageManager] = {}
        self._impl_seq = 0
        for node in nodes:
            if node.node_id in self.nodes:
                raise InputError(f"duplicate node_id {node.node_id}")
            self.nodes[node.node_id] = node
            self._free[node.node_id] = set(node.free_disk_ids)

    def free_disk_specs(self, node_id: str) -> tuple[DiskSpec, ...]:
        node = self._node(node_id)
        free = self._free[node_id]
        return tuple(d for d in sorted(node.disks, key=lambda d: d.disk_id) if d.disk_id in free)

    def publish_node(self, node_id: str, now: float) -> None:
        self.statedb.upsert_broker_report(
            BrokerReport(node_id=node_id, free_disks=self.free_disk_specs(node_id), timestamp=now)
        )

    def publish_all(self, now: float) -> None:
        for node_id in sorted(self.nodes):
            self.publish_node(node_id, now)

    def make_order(self, node_id: str, layout: LayoutKind) -> ProvisionOrder:
        """Plan a build from the lexicographically smallest free disks."""
        free = self.free_disk_specs(node_id)
        need = disk_count(layout)
        if len(free) < need:
            raise LayoutError(
                f"node {node_id}: layout {layout} needs {need} free disks, have {len(free)}"
            )
        chosen = free[:need]
        return ProvisionOrder(
            node_id=node_id,
            layout=layout,
            disk_ids=tuple(d.disk_id for d in chosen),
            total_iops_budget=iops_budget(layout, chosen),
        )

    def provision(self, order: ProvisionOrder, now: float) -> StorageManager:
        """Build an implementation, or change nothing at all.

        Every check runs before the first mutation: a failed order leaves
        the free pool, the registry, and the database untouched.
        """
        node = self._node(order.node_id)
        disks = []
        for disk_id in order.disk_ids:
            disks.append(node.disk(disk_id))
            if disk_id not in self._free[order.node_id]:
                raise ConflictError(f"node {order.node_id}: disk {disk_id} is not free")
        capacity = usable_capacity(order.layout, disks)

        self._impl_seq += 1
        impl = StorageImplementation(
            impl_id=f"impl-{self._impl_seq:04d}",
            node_id=order.node_id,
            layout=order.layout,
            disk_ids=tuple(sorted(order.disk_ids)),
            usable_capacity_bytes=capacity,
            total_iops_budget=order.total_iops_budget,
            idle_since=now,
        )
        self._free[order.node_id] -= set(order.disk_ids)
        manager = StorageManager(impl, self.statedb)
        self.managers[impl.impl_id] = manager
        self.statedb.upsert_manager_report(manager.report(now))
        self.publish_node(order.node_id, now)
        return manager

    def garbage_collect(self, now: float, config: ControlConfig) -> list[str]:
        """Reclaim every implementation that has been empty for the dwell time."""
        reclaimed = []
        for impl_id in sorted(self.managers):
            impl = self.managers[impl_id].impl
            if impl.volumes or impl.idle_since is None:
                continue
            if now - impl.idle_since < config.gc_dwell_s:
                continue
            if isinstance(impl.layout, (ReplicatedPool, ErasureCodedPool)):
                logger.info(
                    "rebalancing pool %s on %s before reclaim", impl_id, impl.node_id
                )
            self._free[impl.node_id] |= set(impl.disk_ids)
            del self.managers[impl_id]
            self.statedb.remove_manager_report(impl_id)
            self.publish_node(impl.node_id, now)
            reclaimed.append(impl_id)
        return reclaimed

    def manager_for(self, impl_id: str) -> StorageManager:
        manager = self.managers.get(impl_id)
        if manager is None:
            raise NotFoundError(f"no implementation {impl_id}")
        return manager

    def owner_of(self, volume_id: str) -> StorageManager:
        """Find the manager hosting a volume id."""
        for impl_id in sorted(self.managers):
            if volume_id in self.managers[impl_id].volumes:
                return self.managers[impl_id]
        raise NotFoundError(f"no volume {volume_id}")

    def free_disk_count(self) -> dict[str, int]:
        return {node_id: len(self._free[node_id]) for node_id in sorted(self.nodes)}

    def _node(self, node_id: str) -> StorageNode:
        node = self.nodes.get(node_id)
        if node is None:
            raise NotFoundError(f"no node {node_id}")
        return node
