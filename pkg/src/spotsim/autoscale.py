"""Elastic scaler: utilization triggers, HPA pod math, allocation diffing,
and graceful handling of spot termination notices.

The scaler is a single logical actor: one decision in flight at a time,
operating on immutable ClusterState snapshots delivered by the caller.
Utilization breaches must persist for sustain_polls consecutive polls before
a reoptimization is issued, and while one reoptimization's provisioning is
pending no second one fires for the same trigger band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import Allocation
from .errors import UnknownNode, ValidationError


@dataclass(frozen=True)
class ScalerConfig:
    scale_up_util: float = 0.80
    scale_down_util: float = 0.30
    target_util: float = 0.65
    poll_interval_s: int = 60
    sustain_polls: int = 2
    provisioning_delay_s: int = 420
    termination_notice_s: int = 120
    exclusion_cooldown_s: int = 3600
    min_pods: int = 1

    def __post_init__(self):
        if not 0 < self.scale_down_util < self.target_util < self.scale_up_util < 1:
            raise ValidationError(
                "need 0 < scale_down_util < target_util < scale_up_util < 1"
            )
        for name in ("poll_interval_s", "sustain_polls", "provisioning_delay_s",
                     "termination_notice_s", "exclusion_cooldown_s"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")
        if self.min_pods < 1:
            raise ValidationError("min_pods must be >= 1")


@dataclass(frozen=True)
class NodeInfo:
    node_id: str
    instance_type: str
    zone: str
    launch_time_s: int
    draining: bool
    pods: int
    pod_capacity: int  # pods this node can host (capacity math done upstream)


@dataclass(frozen=True)
class ClusterState:
    """Snapshot delivered to the scaler; immutable, time included."""

    time_s: int
    nodes: tuple[NodeInfo, ...]
    pods_running: int
    avg_cpu_util: float
    excluded_types: tuple[tuple[str, int], ...] = ()  # type -> exclusion expiry

    def __post_init__(self):
        if not 0 <= self.avg_cpu_util <= 1:
            raise ValidationError(f"avg_cpu_util outside [0,1]: {self.avg_cpu_util}")

    def active_capacity(self) -> int:
        return sum(n.pod_capacity for n in self.nodes if not n.draining)

    def active_exclusions(self) -> dict[str, int]:
        return {t: expiry for t, expiry in self.excluded_types if expiry > self.time_s}

    def allocation(self) -> Allocation:
        counts: dict[str, int] = {}
        for n in self.nodes:
            if not n.draining:
                counts[n.instance_type] = counts.get(n.instance_type, 0) + 1
        return Allocation(counts)


@dataclass(frozen=True)
class NoOp:
    pass


@dataclass(frozen=True)
class Reoptimize:
    required_pods: int
    excluded_types: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class ReschedulePlan:
    assignments: tuple[tuple[str, int], ...]  # (target node id, pod count)
    unplaced: int

    @property
    def placed(self) -> int:
        return sum(n for _, n in self.assignments)


@dataclass(frozen=True)
class Reschedule:
    plan: ReschedulePlan
    followup: Reoptimize | None = None


ScalerDecision = NoOp | Reoptimize | Reschedule


def hpa_desired_pods(current_pods: int, avg_util: float, target_util: float, min_pods: int) -> int:
    """Horizontal-pod-autoscaler replica math: scale proportionally to the
    ratio of observed to target utilization, floored at min_pods."""
    if current_pods < 1:
        raise ValidationError("current_pods must be >= 1")
    if not 0 < avg_util <= 1 or not 0 < target_util <= 1:
        raise ValidationError("utilizations must be in (0,1]")
    return max(min_pods, math.ceil(current_pods * (avg_util / target_util)))


def breach_band(avg_util: float, config: ScalerConfig) -> str | None:
    """Which trigger band (if any) the utilization falls in."""
    if avg_util > config.scale_up_util:
        return "up"
    if avg_util < config.scale_down_util:
        return "down"
    return None


def evaluate(state: ClusterState, config: ScalerConfig, consecutive_breaches: int) -> ScalerDecision:
    """Poll-time decision: reoptimize only on a sustained band breach that
    would actually change the cluster."""
    band = breach_band(state.avg_cpu_util, config)
    if band is None or consecutive_breaches < config.sustain_polls:
        return NoOp()
    util = max(state.avg_cpu_util, 1e-9)
    required = hpa_desired_pods(
        max(1, state.pods_running), util, config.target_util, config.min_pods
    )
    # Change not significant: the pod target is already met by what runs now.
    if required == state.pods_running and state.active_capacity() >= required:
        return NoOp()
    return Reoptimize(
        required_pods=required,
        excluded_types=tuple(sorted(state.active_exclusions().items())),
    )


def handle_termination_notice(state: ClusterState, node_id: str, config: ScalerConfig) -> Reschedule:
    """Drain the victim and place its pods first-fit over remaining capacity.

    Pods are conserved: placed + unplaced equals the victim's pod count. When
    pods cannot all be placed, a follow-up reoptimization is attached with
    the victim's instance type excluded for the cooldown window.
    """
    victim = None
    for n in state.nodes:
        if n.node_id == node_id:
            victim = n
            break
    if victim is None:
        raise UnknownNode(f"no node with id {node_id!r}")
    if victim.draining:
        raise ValidationError(f"node {node_id!r} is already draining")

    to_place = victim.pods
    assignments = []
    for node in sorted(state.nodes, key=lambda n: n.node_id):
        if node.node_id == node_id or node.draining:
            continue
        free = node.pod_capacity - node.pods
        if free <= 0 or to_place == 0:
            continue
        batch = min(free, to_place)
        assignments.append((node.node_id, batch))
        to_place -= batch
    plan = ReschedulePlan(assignments=tuple(assignments), unplaced=to_place)

    followup = None
    if plan.unplaced > 0:
        exclusions = state.active_exclusions()
        exclusions[victim.instance_type] = state.time_s + config.exclusion_cooldown_s
        followup = Reoptimize(
            required_pods=max(config.min_pods, state.pods_running),
            excluded_types=tuple(sorted(exclusions.items())),
        )
    return Reschedule(plan=plan, followup=followup)


def allocation_diff(current: Allocation, target: Allocation) -> tuple[Allocation, Allocation]:
    """Per-type (attach, detach) counts taking current to target."""
    attach: dict[str, int] = {}
    detach: dict[str, int] = {}
    names = {name for name, _ in current.counts} | {name for name, _ in target.counts}
    for name in sorted(names):
        delta = target.count(name) - current.count(name)
        if delta > 0:
            attach[name] = delta
        elif delta < 0:
            detach[name] = -delta
    return Allocation(attach), Allocation(detach)


class ElasticScaler:
    """Stateful actor wrapping the pure decision functions.

    Tracks consecutive band breaches and suppresses a second reoptimization
    for a band while the previous one from that band is still provisioning.
    """

    def __init__(self, config: ScalerConfig):
        self.config = config
        self._band: str | None = None
        self._breaches = 0
        self._in_flight_band: str | None = None

    def on_poll(self, state: ClusterState) -> ScalerDecision:
        band = breach_band(state.avg_cpu_util, self.config)
        if band is None:
            self._band = None
            self._breaches = 0
            return NoOp()
        self._breaches = self._breaches + 1 if band == self._band else 1
        self._band = band
        if band == self._in_flight_band:
            return NoOp()
        decision = evaluate(state, self.config, self._breaches)
        if isinstance(decision, Reoptimize):
            self._in_flight_band = band
            self._band = None
            self._breaches = 0
        return decision

    def on_termination_notice(self, state: ClusterState, node_id: str) -> Reschedule:
        return handle_termination_notice(state, node_id, self.config)

    def on_provisioning_complete(self) -> None:
        self._in_flight_band = None
