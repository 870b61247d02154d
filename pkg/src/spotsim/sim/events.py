"""Discrete-event machinery: typed events and a deterministic queue.

Simultaneous events are processed by fixed priority (node deaths first,
scaler polls last) and then by insertion sequence, so a given push order
always replays identically.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field


@dataclass(frozen=True)
class PriceUpdate:
    instance_type: str
    usd_per_hour: float


@dataclass(frozen=True)
class WorkloadChange:
    offered_rps: float


@dataclass(frozen=True)
class ScalerPoll:
    pass


@dataclass(frozen=True)
class TerminationNotice:
    node_id: str


@dataclass(frozen=True)
class NodeTerminated:
    node_id: str


@dataclass(frozen=True)
class ProvisioningComplete:
    node_ids: tuple[str, ...]
    pending_detach: tuple[tuple[str, int], ...] = ()  # type -> count to remove
    reset_pods: bool = False  # completion of a scale-down re-anchors pod count


Event = (
    PriceUpdate | WorkloadChange | ScalerPoll | TerminationNotice | NodeTerminated | ProvisioningComplete
)

_PRIORITY = {
    NodeTerminated: 0,
    TerminationNotice: 1,
    PriceUpdate: 2,
    WorkloadChange: 3,
    ProvisioningComplete: 4,
    ScalerPoll: 5,
}


@dataclass(order=True)
class _Entry:
    time_s: float
    priority: int
    seq: int
    event: Event = field(compare=False)


class EventQueue:
    """Min-heap over (time, priority, sequence)."""

    def __init__(self):
        self._heap: list[_Entry] = []
        self._seq = 0

    def push(self, time_s: float, event: Event) -> None:
        entry = _Entry(time_s=time_s, priority=_PRIORITY[type(event)], seq=self._seq, event=event)
        self._seq += 1
        heapq.heappush(self._heap, entry)

    def pop(self) -> tuple[float, Event]:
        entry = heapq.heappop(self._heap)
        return entry.time_s, entry.event

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)
