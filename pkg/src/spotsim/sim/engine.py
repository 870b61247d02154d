"""Deterministic discrete-event cluster simulator.

Replays price and workload traces, injects spot terminations, runs a scaling
policy, and accounts cost, SLO violations, and termination handling. Cost
accrues per active node at the instantaneous (zero-order-hold) price, per
second = usd_hr / 3600; the policy's fixed overhead accrues for the whole
run under the pseudo-type "fixed-overhead".

Pod model (homogeneous pods): demand in pod units is offered_rps divided by
the per-pod max RPS. Pods scale up instantly when capacity allows and only
scale down when a reoptimization completes, mirroring a horizontal pod
autoscaler with downscale stabilization; reported utilization is demand over
running pods, which makes the 80/30 trigger bands behave as intended.

Initial allocations are considered pre-provisioned: the cluster starts at
t=0 already sized for the first workload point.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from ..autoscale import (
    ClusterState,
    ElasticScaler,
    NodeInfo,
    Reoptimize,
    allocation_diff,
    breach_band,
)
from ..domain import Allocation, PriceSeries, pods_per_node
from ..errors import Infeasible, OutOfRange, ScenarioError, SpotSimError, ValidationError
from ..forecast import bid_price, fit, predict
from ..optimize import (
    Nsga2Params,
    OptimizationProblem,
    ParetoFront,
    PriceQuote,
    SelectionPolicy,
    brute_force,
    greedy,
    nsga2,
    select_allocation,
)
from .events import (
    EventQueue,
    NodeTerminated,
    PriceUpdate,
    ProvisioningComplete,
    ScalerPoll,
    TerminationNotice,
    WorkloadChange,
)
from .scenario import Scenario

POLICIES = ("spotkube", "baseline_single_type", "baseline_on_demand")

FORECAST_WINDOW_S = 90 * 24 * 3600  # rolling three-month fitting window
OVERHEAD_KEY = "fixed-overhead"


def required_pods_at(t: float, workload, max_rps_per_pod: float) -> int:
    """Pods needed for the offered load at t (step-interpolated trace)."""
    if max_rps_per_pod <= 0:
        raise ValidationError("max_rps_per_pod must be > 0")
    times = [p[0] for p in workload]
    idx = bisect_right(times, t) - 1
    if idx < 0:
        raise OutOfRange(f"t={t} precedes the workload trace")
    rps = workload[idx][1]
    if rps <= 0:
        return 0
    return math.ceil(Fraction(rps) / Fraction(max_rps_per_pod))


def inject_terminations(
    node_ids,
    rate_per_node_hour: float,
    seed: int,
    horizon_s: float,
    start_s: float = 0.0,
) -> list[tuple[float, TerminationNotice]]:
    """Sample spot reclaim notices as independent per-node Poisson processes.

    Each node gets its own RNG stream derived from (seed, node id), so the
    sample for one node never depends on how many others exist. Expected
    count over N nodes and H hours is rate * N * H.
    """
    if rate_per_node_hour < 0:
        raise ValidationError("rate_per_node_hour must be >= 0")
    notices = []
    if rate_per_node_hour == 0:
        return notices
    rate_per_s = rate_per_node_hour / 3600.0
    for node_id in node_ids:
        rng = random.Random(f"{seed}:{node_id}")
        t = start_s
        while True:
            t += rng.expovariate(rate_per_s)
            if t > horizon_s:
                break
            notices.append((t, TerminationNotice(node_id=node_id)))
    notices.sort(key=lambda n: (n[0], n[1].node_id))
    return notices


@dataclass(frozen=True)
class SimResult:
    policy: str
    seed: int
    duration_s: int
    total_cost_usd: float
    cost_by_type: tuple[tuple[str, float], ...]
    slo_violation_s: float
    terminations_injected: int
    terminations_gracefully_handled: int
    reoptimizations: int
    decision_log: tuple[tuple[float, str], ...]
    # (t, nodes, pods, util, required_pods, offered_rps, accrued_cost)
    series: tuple[tuple[float, int, int, float, int, float, float], ...]
    # (node_id, type, zone, requested_t, active_from, active_to)
    node_log: tuple[tuple[str, str, str, float, float | None, float], ...]

    def cost_of(self, key: str) -> float:
        return dict(self.cost_by_type).get(key, 0.0)


@dataclass(frozen=True)
class ComparisonResult:
    spotkube: SimResult
    baseline: SimResult
    savings_pct: float


class _Node:
    __slots__ = (
        "node_id", "instance_type", "zone", "fit", "requested_t",
        "active_from", "active_to", "draining",
    )

    def __init__(self, node_id, instance_type, zone, fit, requested_t, active_from=None):
        self.node_id = node_id
        self.instance_type = instance_type
        self.zone = zone
        self.fit = fit
        self.requested_t = requested_t
        self.active_from = active_from
        self.active_to = None
        self.draining = False

    def is_active(self) -> bool:
        return self.active_from is not None and self.active_to is None

    def is_pending(self) -> bool:
        return self.active_from is None and self.active_to is None


def _parse_policy(policy: str) -> tuple[str, str | None]:
    kind, _, arg = policy.partition(":")
    if kind not in POLICIES:
        raise ScenarioError(f"unknown policy {policy!r}")
    return kind, arg or None


class Simulator:
    """One policy run over one scenario; see module docstring for semantics."""

    def __init__(self, scenario: Scenario, policy: str = "spotkube", seed: int = 0):
        self.scenario = scenario
        self.policy_kind, policy_arg = _parse_policy(policy)
        self.policy_label = policy
        self.seed = seed

        cat = scenario.catalog
        self.fit = {
            t.name: pods_per_node(t, scenario.pod, cat.node_overhead) for t in cat.types
        }
        self.price_points = {s.instance_type: s.points for s in scenario.price_series}
        missing = [t.name for t in cat.types if t.name not in self.price_points]
        if missing:
            raise ScenarioError(f"no price series for catalog types: {missing}")

        if self.policy_kind in ("baseline_single_type", "baseline_on_demand"):
            self.baseline_type = self._resolve_baseline_type(policy_arg)
            if self.fit[self.baseline_type] < 1:
                raise Infeasible(f"pod does not fit on baseline type {self.baseline_type!r}")
            self.overhead_usd_hr = scenario.optimizer.baseline_fixed_overhead_usd_hr
        else:
            self.baseline_type = None
            self.overhead_usd_hr = scenario.optimizer.fixed_overhead_usd_hr

        # Mutable run state
        self.now = 0.0
        self.last_accrual = 0.0
        self.queue = EventQueue()
        self.nodes: dict[str, _Node] = {}
        self.node_order: list[str] = []
        self.next_node = 0
        self.zone_cursor: dict[str, int] = {}
        self.price_now: dict[str, float] = {}
        self.offered_rps = 0.0
        self.pods_target = 0
        self.pods_running = 0
        self.exclusions: dict[str, float] = {}
        self.cost_by_type: dict[str, float] = {}
        self.slo_violation_s = 0.0
        self.terminations_injected = 0
        self.gracefully_handled = 0
        self.reoptimizations = 0
        self.decision_log: list[tuple[float, str]] = []
        self.series: list[tuple] = []
        self.scaler = ElasticScaler(scenario.scaler)
        self.quote: PriceQuote | None = None
        self.quote_hour = None
        self.reopt_index = 0

    # -- static helpers -------------------------------------------------

    def _resolve_baseline_type(self, arg: str | None) -> str:
        cat = self.scenario.catalog
        name = arg or self.scenario.optimizer.baseline_type
        if name:
            cat.get(name)
            return name
        # Cheapest per pod slot at t=0 prices (on-demand prices for the
        # on-demand baseline), ties to the lexicographically first name.
        candidates = []
        for t in cat.types:
            fit = self.fit[t.name]
            if fit < 1:
                continue
            if self.policy_kind == "baseline_on_demand":
                price = t.on_demand_usd_hr
            else:
                price = self._price_at(t.name, 0.0)
            candidates.append((price / fit, t.name))
        if not candidates:
            raise Infeasible("no catalog type can host the pod")
        return min(candidates)[1]

    def _price_at(self, instance_type: str, t: float) -> float:
        points = self.price_points[instance_type]
        times = [p[0] for p in points]
        idx = bisect_right(times, t) - 1
        return points[max(0, idx)][1]

    # -- demand / pods --------------------------------------------------

    def _required_now(self) -> int:
        base = required_pods_at(self.now, self.scenario.workload, self.scenario.max_rps_per_pod)
        return max(self.scenario.scaler.min_pods, base)

    def _demand_pods(self) -> float:
        return self.offered_rps / self.scenario.max_rps_per_pod

    def _hpa_target(self) -> int:
        d = self._demand_pods()
        return max(self.scenario.scaler.min_pods, math.ceil(d / self.scenario.scaler.target_util))

    def _capacity(self) -> int:
        return sum(n.fit for n in self.nodes.values() if n.is_active() and not n.draining)

    def _recompute_pods(self) -> None:
        self.pods_running = min(self.pods_target, self._capacity())

    def _utilization(self) -> float:
        if self.pods_running < 1:
            return 1.0
        return min(1.0, self._demand_pods() / self.pods_running)

    # -- accrual ---------------------------------------------------------

    def _advance(self, t: float) -> None:
        dt = t - self.last_accrual
        if dt <= 0:
            return
        for node in self.nodes.values():
            if node.is_active():
                if self.policy_kind == "baseline_on_demand":
                    price = self.scenario.catalog.get(node.instance_type).on_demand_usd_hr
                else:
                    price = self.price_now[node.instance_type]
                key = node.instance_type
                self.cost_by_type[key] = self.cost_by_type.get(key, 0.0) + price * dt / 3600.0
        self.cost_by_type[OVERHEAD_KEY] = (
            self.cost_by_type.get(OVERHEAD_KEY, 0.0) + self.overhead_usd_hr * dt / 3600.0
        )
        if self._capacity() < self._required_now():
            self.slo_violation_s += dt
        self.last_accrual = t

    # -- node lifecycle ---------------------------------------------------

    def _new_node(self, instance_type: str, requested_t: float, active: bool) -> _Node:
        node_id = f"node-{self.next_node:04d}"
        self.next_node += 1
        zones = self.scenario.catalog.get(instance_type).zones
        cursor = self.zone_cursor.get(instance_type, 0)
        self.zone_cursor[instance_type] = cursor + 1
        node = _Node(
            node_id=node_id,
            instance_type=instance_type,
            zone=zones[cursor % len(zones)],
            fit=self.fit[instance_type],
            requested_t=requested_t,
            active_from=requested_t if active else None,
        )
        self.nodes[node_id] = node
        self.node_order.append(node_id)
        if active:
            self._sample_termination(node)
        return node

    def _sample_termination(self, node: _Node) -> None:
        cfg = self.scenario.terminations
        if cfg.mode != "stochastic" or cfg.rate_per_node_hour <= 0:
            return
        rng = random.Random(f"{cfg.seed}:{node.node_id}")
        delay = rng.expovariate(cfg.rate_per_node_hour / 3600.0)
        t_notice = node.active_from + delay
        if t_notice <= self.scenario.duration_s:
            self.queue.push(t_notice, TerminationNotice(node_id=node.node_id))

    def _attach(self, counts: dict[str, int], pending_detach: dict[str, int],
                reset_pods: bool = False) -> None:
        ids = []
        for name in sorted(counts):
            for _ in range(counts[name]):
                ids.append(self._new_node(name, self.now, active=False).node_id)
        complete_t = self.now + self.scenario.scaler.provisioning_delay_s
        if complete_t <= self.scenario.duration_s:
            self.queue.push(
                complete_t,
                ProvisioningComplete(
                    node_ids=tuple(ids),
                    pending_detach=tuple(sorted(pending_detach.items())),
                    reset_pods=reset_pods,
                ),
            )

    def _detach(self, counts: dict[str, int]) -> dict[str, int]:
        """Remove up to counts[type] newest nodes per type, never dropping
        capacity below what the current demand requires. Returns what was
        actually detached."""
        done: dict[str, int] = {}
        required = self._required_now()
        for name in sorted(counts):
            victims = sorted(
                (
                    n
                    for n in self.nodes.values()
                    if n.instance_type == name and n.is_active() and not n.draining
                ),
                key=lambda n: (n.requested_t, n.node_id),
                reverse=True,
            )
            for victim in victims[: counts[name]]:
                if self._capacity() - victim.fit < required:
                    break
                victim.active_to = self.now
                done[name] = done.get(name, 0) + 1
        self._recompute_pods()
        return done

    # -- cluster snapshot --------------------------------------------------

    def _pod_spread(self) -> dict[str, int]:
        """Spread running pods across hosting nodes proportionally to their
        capacity (largest remainder, node id order). Matches the availability
        rationale for maximizing node count: no node concentrates the load."""
        hosts = [
            self.nodes[node_id]
            for node_id in self.node_order
            if self.nodes[node_id].is_active() and not self.nodes[node_id].draining
        ]
        total = sum(n.fit for n in hosts)
        spread: dict[str, int] = {}
        if total == 0 or self.pods_running == 0:
            return {n.node_id: 0 for n in hosts}
        assigned = 0
        for n in hosts:
            share = self.pods_running * n.fit // total
            spread[n.node_id] = share
            assigned += share
        leftover = self.pods_running - assigned
        while leftover > 0:
            progressed = False
            for n in hosts:
                if leftover == 0:
                    break
                if spread[n.node_id] < n.fit:
                    spread[n.node_id] += 1
                    leftover -= 1
                    progressed = True
            if not progressed:
                break
        return spread

    def _snapshot(self) -> ClusterState:
        infos = []
        spread = self._pod_spread()
        for node_id in self.node_order:
            node = self.nodes[node_id]
            if not node.is_active():
                continue
            infos.append(
                NodeInfo(
                    node_id=node.node_id,
                    instance_type=node.instance_type,
                    zone=node.zone,
                    launch_time_s=int(node.requested_t),
                    draining=node.draining,
                    pods=spread.get(node.node_id, 0),
                    pod_capacity=node.fit,
                )
            )
        return ClusterState(
            time_s=int(self.now),
            nodes=tuple(infos),
            pods_running=self.pods_running,
            avg_cpu_util=self._utilization(),
            excluded_types=tuple(sorted((k, int(v)) for k, v in self.exclusions.items())),
        )

    # -- forecaster-backed quote -------------------------------------------

    def _refresh_quote(self) -> None:
        hour = math.floor(self.now / 3600.0)
        if self.quote is not None and self.quote_hour == hour:
            return
        prices = {}
        bids = {}
        any_forecast = False
        for t in self.scenario.catalog.types:
            name = t.name
            window = [
                (ts, p)
                for ts, p in self.price_points[name]
                if ts <= self.now and ts > self.now - FORECAST_WINDOW_S
            ]
            mean = None
            if len(window) >= 2:
                try:
                    model = fit(PriceSeries(instance_type=name, zone="-", points=tuple(window)))
                    point = predict(model, 1).points[0]
                    if point[1] > 0:
                        mean = point[1]
                        any_forecast = True
                        if t.on_demand_usd_hr > 0:
                            bids[name] = bid_price(
                                point[3],
                                t.on_demand_usd_hr,
                                self.scenario.margin_fraction,
                                self.scenario.cap_fraction,
                            )
                except SpotSimError:
                    mean = None
            prices[name] = mean if mean is not None else self._price_at(name, self.now)
        self.quote = PriceQuote(
            usd_per_hour=prices, source="spot-forecast" if any_forecast else "trace"
        )
        self.quote_hour = hour
        if bids:
            summary = " ".join(f"{n}={b:.6f}" for n, b in sorted(bids.items()))
            self.decision_log.append((self.now, f"refit hour={hour} bids {summary}"))

    # -- optimizer invocation ------------------------------------------------

    def _optimize_front(self, required: int, excluded: frozenset[str]) -> ParetoFront:
        settings = self.scenario.optimizer
        problem = OptimizationProblem(
            catalog=self.scenario.catalog,
            pod=self.scenario.pod,
            required_pods=required,
            prices=self.quote,
            excluded_types=excluded,
            max_per_type=settings.max_per_type,
            fixed_overhead_usd_hr=settings.fixed_overhead_usd_hr,
        )
        if settings.algorithm == "brute":
            return brute_force(problem)
        if settings.algorithm == "greedy":
            alloc, obj = greedy(problem)
            return ParetoFront(members=((alloc, obj),))
        params = Nsga2Params(
            population=settings.population,
            generations=settings.generations,
            crossover_p=settings.crossover_p,
            mutation_p=settings.mutation_p,
            seed=self.seed * 1_000_003 + self.reopt_index,
        )
        return nsga2(problem, params)

    def _reoptimize(self, required: int, excluded_pairs, band: str | None = None) -> None:
        """Retarget the cluster. Exclusions block purchasing, not tenure:
        existing nodes of an excluded type keep running and count toward the
        requirement; the optimizer only plans the residual over the rest."""
        self.reoptimizations += 1
        self.reopt_index += 1
        self._refresh_quote()
        excluded = frozenset(name for name, _ in excluded_pairs)

        current_counts: dict[str, int] = {}
        for n in self.nodes.values():
            if (n.is_active() and not n.draining) or n.is_pending():
                current_counts[n.instance_type] = current_counts.get(n.instance_type, 0) + 1
        keep = {name: c for name, c in current_counts.items() if name in excluded}
        keep_capacity = sum(self.fit[name] * c for name, c in keep.items())
        residual = required - keep_capacity

        try:
            if residual >= 1:
                front = self._optimize_front(residual, excluded)
                keep_nodes = sum(keep.values())
                planned = select_allocation(
                    front,
                    SelectionPolicy(
                        min_nodes=max(0, self.scenario.optimizer.min_nodes - keep_nodes)
                    ),
                    self.scenario.catalog,
                )
                target = planned.merge(Allocation(keep))
            else:
                target = Allocation(keep)
        except Infeasible as exc:
            self.decision_log.append(
                (self.now, f"reoptimize required={required} failed: {exc}")
            )
            if band is not None:
                self.scaler.on_provisioning_complete()
            return
        attach, detach = allocation_diff(Allocation(current_counts), target)
        self.decision_log.append(
            (
                self.now,
                f"reoptimize required={required} target={target} "
                f"attach={attach} detach={detach} quote={self.quote.source}",
            )
        )
        reset = band == "down"
        if attach.total_nodes > 0:
            self._attach(attach.nonzero(), detach.nonzero(), reset_pods=reset)
        else:
            if detach.total_nodes > 0:
                self._detach(detach.nonzero())
            if reset:
                self.pods_target = self._hpa_target()
            self._recompute_pods()
            if band is not None:
                self.scaler.on_provisioning_complete()

    # -- event handlers ---------------------------------------------------

    def _on_price(self, ev: PriceUpdate) -> None:
        self.price_now[ev.instance_type] = ev.usd_per_hour

    def _on_workload(self, ev: WorkloadChange) -> None:
        self.offered_rps = ev.offered_rps
        self.pods_target = max(self.pods_target, self._hpa_target())
        self._recompute_pods()

    def _on_poll(self) -> None:
        if self.policy_kind == "spotkube":
            state = self._snapshot()
            band = breach_band(state.avg_cpu_util, self.scenario.scaler)
            decision = self.scaler.on_poll(state)
            if isinstance(decision, Reoptimize):
                self._reoptimize(decision.required_pods, decision.excluded_types, band=band)
        else:
            self._baseline_poll()
        self._record_row()

    def _baseline_poll(self) -> None:
        self.pods_target = self._hpa_target()
        self._recompute_pods()
        fit = self.fit[self.baseline_type]
        desired = math.ceil(self.pods_target / fit)
        active = [
            n for n in self.nodes.values() if n.is_active() and not n.draining
        ]
        pending = sum(1 for n in self.nodes.values() if n.is_pending())
        effective = len(active) + pending
        if desired > effective:
            self._attach({self.baseline_type: desired - effective}, {})
            self.decision_log.append(
                (self.now, f"baseline attach {desired - effective}x {self.baseline_type}")
            )
        elif desired < len(active) and pending == 0:
            done = self._detach({self.baseline_type: len(active) - desired})
            if done:
                self.decision_log.append(
                    (self.now, f"baseline detach {done[self.baseline_type]}x {self.baseline_type}")
                )

    def _on_termination_notice(self, ev: TerminationNotice) -> None:
        node = self.nodes.get(ev.node_id)
        if node is None or not node.is_active() or node.draining:
            return
        self.terminations_injected += 1
        death_t = self.now + self.scenario.scaler.termination_notice_s
        if self.policy_kind == "spotkube":
            state = self._snapshot()
            victim_info = next(n for n in state.nodes if n.node_id == ev.node_id)
            free_elsewhere = sum(
                n.pod_capacity - n.pods
                for n in state.nodes
                if n.node_id != ev.node_id and not n.draining
            )
            decision = self.scaler.on_termination_notice(state, ev.node_id)
            plan = decision.plan
            node.draining = True
            self._recompute_pods()
            if plan.unplaced == 0:
                self.gracefully_handled += 1
            self.decision_log.append(
                (
                    self.now,
                    f"termination notice {ev.node_id} ({node.instance_type}): "
                    f"pods={victim_info.pods} free={free_elsewhere} "
                    f"placed={plan.placed} unplaced={plan.unplaced}",
                )
            )
            if decision.followup is not None:
                for name, expiry in decision.followup.excluded_types:
                    self.exclusions[name] = max(self.exclusions.get(name, 0), expiry)
                self._reoptimize(
                    decision.followup.required_pods,
                    decision.followup.excluded_types,
                    band=None,
                )
        else:
            self.decision_log.append(
                (self.now, f"termination notice {ev.node_id} ({node.instance_type})")
            )
        if death_t <= self.scenario.duration_s:
            self.queue.push(death_t, NodeTerminated(node_id=ev.node_id))

    def _on_node_terminated(self, ev: NodeTerminated) -> None:
        node = self.nodes.get(ev.node_id)
        if node is None or not node.is_active():
            return
        node.active_to = self.now
        self._recompute_pods()
        self.decision_log.append((self.now, f"node terminated {ev.node_id}"))

    def _on_provisioning_complete(self, ev: ProvisioningComplete) -> None:
        for node_id in ev.node_ids:
            node = self.nodes[node_id]
            if node.active_to is None:
                node.active_from = self.now
                self._sample_termination(node)
        if ev.pending_detach:
            self._detach(dict(ev.pending_detach))
        if ev.reset_pods:
            self.pods_target = self._hpa_target()
        self._recompute_pods()
        self.scaler.on_provisioning_complete()

    def _record_row(self) -> None:
        active = sum(1 for n in self.nodes.values() if n.is_active() and not n.draining)
        total = sum(self.cost_by_type.values())
        self.series.append(
            (
                self.now,
                active,
                self.pods_running,
                self._utilization(),
                self._required_now(),
                self.offered_rps,
                total,
            )
        )

    # -- run ------------------------------------------------------------------

    def _initial_allocation(self) -> None:
        self.offered_rps = self.scenario.workload[0][1]
        self.pods_target = self._hpa_target()
        required = self.pods_target
        if self.policy_kind == "spotkube":
            self._refresh_quote()
            front = self._optimize_front(required, frozenset())
            target = select_allocation(
                front,
                SelectionPolicy(min_nodes=self.scenario.optimizer.min_nodes),
                self.scenario.catalog,
            )
        else:
            fit = self.fit[self.baseline_type]
            target = Allocation({self.baseline_type: math.ceil(required / fit)})
        for name, count in target.counts:
            for _ in range(count):
                self._new_node(name, 0.0, active=True)
        self._recompute_pods()
        self.decision_log.append((0.0, f"initial allocation {target} for {required} pods"))

    def _schedule_static_events(self) -> None:
        duration = self.scenario.duration_s
        for name, points in self.price_points.items():
            self.price_now[name] = self._price_at(name, 0.0)
            for ts, price in points:
                if 0 < ts <= duration:
                    self.queue.push(float(ts), PriceUpdate(instance_type=name, usd_per_hour=price))
        for t, rps in self.scenario.workload:
            if 0 < t <= duration:
                self.queue.push(float(t), WorkloadChange(offered_rps=rps))
        interval = self.scenario.scaler.poll_interval_s
        t = interval
        while t <= duration:
            self.queue.push(float(t), ScalerPoll())
            t += interval
        if self.scenario.terminations.mode == "explicit":
            for t, selector in self.scenario.terminations.events:
                if 0 <= t <= duration:
                    node_id = f"select:{selector}"
                    self.queue.push(float(t), TerminationNotice(node_id=node_id))

    def _resolve_selector(self, selector: str) -> str | None:
        candidates = [
            n for n in self.nodes.values() if n.is_active() and not n.draining
        ]
        if selector.startswith("node="):
            wanted = selector[5:]
            return wanted if any(n.node_id == wanted for n in candidates) else None
        if selector.startswith("type="):
            wanted = selector[5:]
            candidates = [n for n in candidates if n.instance_type == wanted]
        elif selector != "any":
            raise ScenarioError(f"bad termination selector {selector!r}")
        if not candidates:
            return None
        return min(candidates, key=lambda n: n.node_id).node_id

    def run(self) -> SimResult:
        self._initial_allocation()
        self._schedule_static_events()
        self._record_row()
        duration = float(self.scenario.duration_s)
        while self.queue:
            t, event = self.queue.pop()
            if t > duration:
                break
            self._advance(t)
            self.now = t
            if isinstance(event, TerminationNotice) and event.node_id.startswith("select:"):
                selector = event.node_id[len("select:"):]
                resolved = self._resolve_selector(selector)
                if resolved is None:
                    self.decision_log.append((t, f"termination {selector!r} matched no node"))
                    continue
                event = TerminationNotice(node_id=resolved)
            if isinstance(event, PriceUpdate):
                self._on_price(event)
            elif isinstance(event, WorkloadChange):
                self._on_workload(event)
            elif isinstance(event, ScalerPoll):
                self._on_poll()
            elif isinstance(event, TerminationNotice):
                self._on_termination_notice(event)
            elif isinstance(event, NodeTerminated):
                self._on_node_terminated(event)
            elif isinstance(event, ProvisioningComplete):
                self._on_provisioning_complete(event)
        self._advance(duration)
        self.now = duration

        node_log = []
        for node_id in self.node_order:
            n = self.nodes[node_id]
            end = n.active_to if n.active_to is not None else duration
            node_log.append(
                (n.node_id, n.instance_type, n.zone, n.requested_t, n.active_from, end)
            )
        cost_items = tuple(sorted(self.cost_by_type.items()))
        return SimResult(
            policy=self.policy_label,
            seed=self.seed,
            duration_s=self.scenario.duration_s,
            total_cost_usd=sum(v for _, v in cost_items),
            cost_by_type=cost_items,
            slo_violation_s=self.slo_violation_s,
            terminations_injected=self.terminations_injected,
            terminations_gracefully_handled=self.gracefully_handled,
            reoptimizations=self.reoptimizations,
            decision_log=tuple(self.decision_log),
            series=tuple(self.series),
            node_log=tuple(node_log),
        )


def run(scenario: Scenario, policy: str = "spotkube", seed: int = 0) -> SimResult:
    """Run one policy over the scenario; deterministic for a fixed seed."""
    return Simulator(scenario, policy, seed).run()


def compare(
    scenario: Scenario, seed: int = 0, baseline: str = "baseline_single_type"
) -> ComparisonResult:
    """Run spotkube and a baseline on identical traces and seeds."""
    spot = run(scenario, "spotkube", seed)
    base = run(scenario, baseline, seed)
    savings = 0.0
    if base.total_cost_usd > 0:
        savings = (1.0 - spot.total_cost_usd / base.total_cost_usd) * 100.0
    return ComparisonResult(spotkube=spot, baseline=base, savings_pct=savings)
