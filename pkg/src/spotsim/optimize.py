"""Cost model, feasibility, and the three allocation optimizers.

Objectives: minimize hourly cost, maximize node count (wider spread survives
spot reclaims better). Feasibility means the allocation's pod capacity covers
the required pod count. Infeasible candidates are ordered by shortfall and
never preferred over a feasible one (Deb-style constrained domination).

The decision space ranges over catalog types that are not excluded and can
host at least one pod; a type the pod cannot fit on would only ever add dead
nodes to a front.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .domain import Allocation, Catalog, PodSpec, pods_per_node
from .errors import (
    EmptyFront,
    Infeasible,
    NoFeasibleFound,
    SearchSpaceTooLarge,
    UnpricedType,
    ValidationError,
)

PRICE_SOURCES = ("spot-forecast", "trace", "on-demand")

DEFAULT_MAX_PER_TYPE = 10
DEFAULT_ENUMERATION_CAP = 10_000_000


@dataclass(frozen=True)
class PriceQuote:
    """Per-type hourly price used by the cost model."""

    usd_per_hour: tuple[tuple[str, float], ...]
    source: str

    def __init__(self, usd_per_hour, source):
        if source not in PRICE_SOURCES:
            raise ValidationError(f"unknown price source {source!r}")
        canon = tuple(sorted(dict(usd_per_hour).items()))
        for name, price in canon:
            if price <= 0:
                raise ValidationError(f"price for {name!r} must be > 0, got {price}")
        object.__setattr__(self, "usd_per_hour", canon)
        object.__setattr__(self, "source", source)

    def as_dict(self) -> dict[str, float]:
        return dict(self.usd_per_hour)

    def get(self, name: str) -> float:
        for n, price in self.usd_per_hour:
            if n == name:
                return price
        raise UnpricedType(f"no price for instance type {name!r}")


@dataclass(frozen=True)
class ObjectiveVector:
    cost_usd_hr: float
    node_count: int
    feasible: bool
    shortfall_pods: int

    def __post_init__(self):
        if self.feasible != (self.shortfall_pods == 0):
            raise ValidationError("feasible flag must mirror shortfall_pods == 0")


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Constrained domination: feasibility first, then shortfall, then the
    (cost down, nodes up) Pareto comparison."""
    return _dominates_raw(
        (a.shortfall_pods, a.cost_usd_hr, a.node_count),
        (b.shortfall_pods, b.cost_usd_hr, b.node_count),
    )


def _dominates_raw(a: tuple[int, float, int], b: tuple[int, float, int]) -> bool:
    # raw objective = (shortfall_pods, cost_usd_hr, node_count)
    if a[0] == 0:
        if b[0] != 0:
            return True
        return a[1] <= b[1] and a[2] >= b[2] and (a[1] < b[1] or a[2] > b[2])
    if b[0] == 0:
        return False
    return a[0] < b[0]


@dataclass(frozen=True)
class ParetoFront:
    """Feasible, mutually non-dominated allocations in deterministic order
    (cost ascending, node count descending, then lexicographic allocation)."""

    members: tuple[tuple[Allocation, ObjectiveVector], ...]

    def __post_init__(self):
        for _, obj in self.members:
            if not obj.feasible:
                raise ValidationError("front members must be feasible")
        for _, a in self.members:
            for _, b in self.members:
                if a is not b and dominates(a, b):
                    raise ValidationError("front members must be mutually non-dominated")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def min_cost(self) -> float:
        if not self.members:
            raise EmptyFront("empty Pareto front")
        return self.members[0][1].cost_usd_hr

    def allocations(self) -> tuple[Allocation, ...]:
        return tuple(alloc for alloc, _ in self.members)


@dataclass(frozen=True)
class OptimizationProblem:
    catalog: Catalog
    pod: PodSpec
    required_pods: int
    prices: PriceQuote
    excluded_types: frozenset[str] = frozenset()
    max_per_type: int = DEFAULT_MAX_PER_TYPE
    fixed_overhead_usd_hr: float = 0.0
    # (name, usd/hr, pods per node) per decision type, catalog order
    decision_types: tuple[tuple[str, float, int], ...] = field(init=False)

    def __post_init__(self):
        if self.required_pods < 1:
            raise ValidationError(f"required_pods must be >= 1, got {self.required_pods}")
        if self.max_per_type < 1:
            raise ValidationError(f"max_per_type must be >= 1, got {self.max_per_type}")
        if self.fixed_overhead_usd_hr < 0:
            raise ValidationError("fixed_overhead_usd_hr must be >= 0")
        priced = self.prices.as_dict()
        decision = []
        for t in self.catalog.types:
            if t.name not in priced:
                raise ValidationError(f"catalog type {t.name!r} missing from price quote")
            if t.name in self.excluded_types:
                continue
            fit = pods_per_node(t, self.pod, self.catalog.node_overhead)
            if fit >= 1:
                decision.append((t.name, priced[t.name], fit))
        if not decision:
            raise Infeasible("no non-excluded instance type can host the pod")
        object.__setattr__(self, "decision_types", tuple(decision))

    def evaluate_raw(self, counts: tuple[int, ...]) -> tuple[int, float, int]:
        """(shortfall_pods, cost_usd_hr, node_count) for a count vector."""
        cost = self.fixed_overhead_usd_hr
        capacity = 0
        nodes = 0
        for (name, price, fit), n in zip(self.decision_types, counts):
            cost += price * n
            capacity += fit * n
            nodes += n
        return max(0, self.required_pods - capacity), cost, nodes

    def evaluate(self, counts: tuple[int, ...]) -> ObjectiveVector:
        shortfall, cost, nodes = self.evaluate_raw(counts)
        return ObjectiveVector(
            cost_usd_hr=cost, node_count=nodes, feasible=shortfall == 0, shortfall_pods=shortfall
        )

    def allocation_from(self, counts: tuple[int, ...]) -> Allocation:
        return Allocation({name: n for (name, _, _), n in zip(self.decision_types, counts) if n})


def allocation_cost(alloc: Allocation, prices: PriceQuote, fixed_overhead_usd_hr: float = 0.0) -> float:
    """Hourly cost of an allocation: fixed overhead plus price * count per type."""
    total = fixed_overhead_usd_hr
    for name, n in alloc.counts:
        if n > 0:
            total += prices.get(name) * n
    return total


def capacity_pods(alloc: Allocation, catalog: Catalog, pod: PodSpec) -> int:
    """Total pods the allocation can host; exact under homogeneous pods."""
    total = 0
    for name, n in alloc.counts:
        if n > 0:
            total += n * pods_per_node(catalog.get(name), pod, catalog.node_overhead)
    return total


def _build_front(problem: OptimizationProblem, feasible_raw) -> ParetoFront:
    """Non-dominated sweep over feasible (cost, nodes, vector) tuples.

    After sorting by (cost asc, nodes desc), a candidate survives iff it
    raises the running node maximum or exactly ties the objectives of the
    previously kept member.
    """
    ordered = sorted(feasible_raw, key=lambda c: (c[0], -c[1], c[2]))
    kept = []
    best_nodes = -1
    last_obj = None
    for cost, nodes, vector in ordered:
        if nodes > best_nodes:
            kept.append((cost, nodes, vector))
            best_nodes = nodes
            last_obj = (cost, nodes)
        elif (cost, nodes) == last_obj:
            kept.append((cost, nodes, vector))
    members = [
        (
            problem.allocation_from(vector),
            ObjectiveVector(cost_usd_hr=cost, node_count=nodes, feasible=True, shortfall_pods=0),
        )
        for cost, nodes, vector in kept
    ]
    members.sort(key=lambda m: (m[1].cost_usd_hr, -m[1].node_count, m[0].counts))
    return ParetoFront(members=tuple(members))


def brute_force(problem: OptimizationProblem, enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> ParetoFront:
    """Exact front by enumerating every count vector in [0, max_per_type]^n."""
    n = len(problem.decision_types)
    space = (problem.max_per_type + 1) ** n
    if space > enumeration_cap:
        raise SearchSpaceTooLarge(
            f"{space} combinations exceed the enumeration cap of {enumeration_cap}"
        )
    feasible = []
    for counts in itertools.product(range(problem.max_per_type + 1), repeat=n):
        shortfall, cost, nodes = problem.evaluate_raw(counts)
        if shortfall == 0:
            feasible.append((cost, nodes, counts))
    return _build_front(problem, feasible)


def greedy(problem: OptimizationProblem) -> tuple[Allocation, ObjectiveVector]:
    """Repeatedly add the node with the best price per pod slot.

    Ties prefer the larger per-node capacity, then the lexicographically
    smaller name. Raises Infeasible when per-type caps run out first.
    """
    counts = [0] * len(problem.decision_types)
    capacity = 0
    while capacity < problem.required_pods:
        best = None
        for i, (name, price, fit) in enumerate(problem.decision_types):
            if counts[i] >= problem.max_per_type:
                continue
            key = (price / fit, -fit, name)
            if best is None or key < best[0]:
                best = (key, i, fit)
        if best is None:
            raise Infeasible(
                f"capacity {capacity} of {problem.required_pods} pods before caps ran out"
            )
        counts[best[1]] += 1
        capacity += best[2]
    vector = tuple(counts)
    return problem.allocation_from(vector), problem.evaluate(vector)


@dataclass(frozen=True)
class Nsga2Params:
    population: int = 64
    generations: int = 100
    crossover_p: float = 0.9
    mutation_p: float | None = None  # default 1/|types|
    seed: int = 0

    def __post_init__(self):
        if self.population < 4 or self.population % 2 != 0:
            raise ValidationError("population must be even and >= 4")
        if self.generations < 1:
            raise ValidationError("generations must be >= 1")
        if not 0 <= self.crossover_p <= 1:
            raise ValidationError("crossover_p must be in [0,1]")
        if self.mutation_p is not None and not 0 <= self.mutation_p <= 1:
            raise ValidationError("mutation_p must be in [0,1]")


def _rank_unique(unique_objs: list[tuple[int, float, int]]) -> list[list[int]]:
    """Fast non-dominated sort over distinct raw objectives."""
    size = len(unique_objs)
    dominated_by: list[list[int]] = [[] for _ in range(size)]
    domination_count = [0] * size
    fronts: list[list[int]] = [[]]
    for p in range(size):
        op = unique_objs[p]
        for q in range(size):
            if p == q:
                continue
            oq = unique_objs[q]
            if _dominates_raw(op, oq):
                dominated_by[p].append(q)
            elif _dominates_raw(oq, op):
                domination_count[p] += 1
        if domination_count[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    nxt.append(q)
        i += 1
        fronts.append(nxt)
    fronts.pop()
    return fronts


def _crowding_unique(front: list[int], unique_objs) -> dict[int, float]:
    """Crowding distance over (cost, node count) for one unique-objective front."""
    distance = {i: 0.0 for i in front}
    if len(front) <= 2:
        return {i: float("inf") for i in front}
    for key in (lambda o: o[1], lambda o: float(o[2])):
        ordered = sorted(front, key=lambda i: key(unique_objs[i]))
        lo = key(unique_objs[ordered[0]])
        hi = key(unique_objs[ordered[-1]])
        distance[ordered[0]] = float("inf")
        distance[ordered[-1]] = float("inf")
        if hi == lo:
            continue
        for rank in range(1, len(ordered) - 1):
            gap = key(unique_objs[ordered[rank + 1]]) - key(unique_objs[ordered[rank - 1]])
            distance[ordered[rank]] += gap / (hi - lo)
    return distance


def _rank_population(objs: list[tuple[int, float, int]]):
    """(rank, crowding) per member.

    The quadratic sort runs over distinct objective points only. Only the
    first copy of a duplicated point inherits its crowding distance; later
    copies get zero, as in the classic formulation where identical
    neighbors contribute no gap. Without this, copies of the front's
    extremes (infinite crowding) take over the whole population.
    """
    unique_index: dict[tuple[int, float, int], int] = {}
    member_to_unique = []
    unique_objs: list[tuple[int, float, int]] = []
    first_copy = []
    for obj in objs:
        idx = unique_index.get(obj)
        if idx is None:
            idx = len(unique_objs)
            unique_index[obj] = idx
            unique_objs.append(obj)
            first_copy.append(True)
        else:
            first_copy.append(False)
        member_to_unique.append(idx)
    fronts = _rank_unique(unique_objs)
    rank_of = [0] * len(unique_objs)
    crowd_of = [0.0] * len(unique_objs)
    for rank, front in enumerate(fronts):
        dist = _crowding_unique(front, unique_objs)
        for i in front:
            rank_of[i] = rank
            crowd_of[i] = dist[i]
    ranks = [rank_of[u] for u in member_to_unique]
    crowding = [
        crowd_of[u] if first else 0.0
        for u, first in zip(member_to_unique, first_copy)
    ]
    return ranks, crowding


def nsga2(problem: OptimizationProblem, params: Nsga2Params | None = None) -> ParetoFront:
    """NSGA-II over integer count vectors; same seed, same front, always.

    Uniform crossover, per-gene +/-1 step mutation, binary tournament on
    (rank, crowding), elitist parents+offspring survival. The population is
    seeded with the greedy solution when one exists so at least one
    near-feasible individual is present from generation zero.
    """
    params = params or Nsga2Params()
    ngenes = len(problem.decision_types)
    cap = problem.max_per_type
    mutation_p = params.mutation_p if params.mutation_p is not None else 1.0 / ngenes
    rng = random.Random(params.seed)

    eval_cache: dict[tuple[int, ...], tuple[int, float, int]] = {}

    def raw(vector: tuple[int, ...]) -> tuple[int, float, int]:
        obj = eval_cache.get(vector)
        if obj is None:
            obj = problem.evaluate_raw(vector)
            eval_cache[vector] = obj
        return obj

    population: list[tuple[int, ...]] = []
    try:
        greedy_alloc, _ = greedy(problem)
        counts = greedy_alloc.as_dict()
        population.append(tuple(counts.get(name, 0) for name, _, _ in problem.decision_types))
    except Infeasible:
        pass
    while len(population) < params.population:
        population.append(tuple(rng.randint(0, cap) for _ in range(ngenes)))
    objectives = [raw(v) for v in population]
    ranks, crowding = _rank_population(objectives)

    def tournament() -> int:
        i = rng.randrange(len(population))
        j = rng.randrange(len(population))
        if ranks[i] != ranks[j]:
            return i if ranks[i] < ranks[j] else j
        if crowding[i] != crowding[j]:
            return i if crowding[i] > crowding[j] else j
        return i

    for _ in range(params.generations):
        offspring: list[tuple[int, ...]] = []
        while len(offspring) < params.population:
            a = list(population[tournament()])
            b = list(population[tournament()])
            if rng.random() < params.crossover_p:
                for g in range(ngenes):
                    if rng.random() < 0.5:
                        a[g], b[g] = b[g], a[g]
            for child in (a, b):
                for g in range(ngenes):
                    if rng.random() < mutation_p:
                        child[g] = min(cap, max(0, child[g] + rng.choice((-1, 1))))
            offspring.append(tuple(a))
            offspring.append(tuple(b))
        offspring = offspring[: params.population]

        combined = population + offspring
        combined_obj = objectives + [raw(v) for v in offspring]
        comb_ranks, comb_crowd = _rank_population(combined_obj)
        # Elitist truncation by rank then crowding, but distinct vectors come
        # before repeat copies: a copy adds nothing the kept one lacks, and on
        # an integer lattice copy floods starve the explorers that bridge
        # toward unvisited corners of the front.
        seen_vectors: set[tuple[int, ...]] = set()
        duplicate = []
        for vector in combined:
            duplicate.append(vector in seen_vectors)
            seen_vectors.add(vector)
        order = sorted(
            range(len(combined)),
            key=lambda i: (duplicate[i], comb_ranks[i], -comb_crowd[i], i),
        )
        chosen = order[: params.population]
        population = [combined[i] for i in chosen]
        objectives = [combined_obj[i] for i in chosen]
        ranks = [comb_ranks[i] for i in chosen]
        crowding = [comb_crowd[i] for i in chosen]

    feasible: dict[tuple[int, ...], tuple[int, float, int]] = {}
    for vector, obj in zip(population, objectives):
        if obj[0] == 0 and vector not in feasible:
            feasible[vector] = obj
    if not feasible:
        raise NoFeasibleFound(
            "no feasible allocation found; caps or exclusions may be too tight"
        )
    return _build_front(
        problem, [(cost, nodes, v) for v, (_, cost, nodes) in feasible.items()]
    )


@dataclass(frozen=True)
class SelectionPolicy:
    min_nodes: int = 1
    prefer_diversity: bool = True


def select_allocation(front: ParetoFront, policy: SelectionPolicy, catalog: Catalog) -> Allocation:
    """Pick the allocation to deploy from a front.

    Members below min_nodes are filtered (whole front is the fallback);
    cheapest wins, with diversity tie-breaks: more families, more reachable
    zones, more nodes, then lexicographic allocation.
    """
    if len(front) == 0:
        raise EmptyFront("cannot select from an empty front")
    members = [m for m in front if m[1].node_count >= policy.min_nodes]
    if not members:
        members = list(front)

    def diversity(alloc: Allocation) -> tuple[int, int]:
        names = [name for name, n in alloc.counts if n > 0]
        families = {catalog.get(name).family for name in names}
        zones = set()
        for name in names:
            zones.update(catalog.get(name).zones)
        return len(families), len(zones)

    def key(member):
        alloc, obj = member
        families, zones = diversity(alloc) if policy.prefer_diversity else (0, 0)
        return (obj.cost_usd_hr, -families, -zones, -obj.node_count, alloc.counts)

    return min(members, key=key)[0]


def quote_from_on_demand(catalog: Catalog) -> PriceQuote:
    """Price every catalog type at its on-demand rate."""
    prices = {}
    for t in catalog.types:
        if t.on_demand_usd_hr <= 0:
            raise ValidationError(f"{t.name}: on-demand price must be > 0 to quote")
        prices[t.name] = t.on_demand_usd_hr
    return PriceQuote(usd_per_hour=prices, source="on-demand")


def quote_from_trace(catalog: Catalog, series_list) -> PriceQuote:
    """Latest observed price per catalog type across a price trace.

    When several zones carry the type, the most recent observation wins;
    exact timestamp ties resolve to the lexicographically first zone.
    """
    latest: dict[str, tuple[int, str, float]] = {}
    for series in series_list:
        if not series.points:
            continue
        ts, price = series.points[-1]
        current = latest.get(series.instance_type)
        if current is None or ts > current[0] or (ts == current[0] and series.zone < current[1]):
            latest[series.instance_type] = (ts, series.zone, price)
    prices = {}
    for t in catalog.types:
        if t.name not in latest:
            raise ValidationError(f"price trace has no rows for catalog type {t.name!r}")
        prices[t.name] = latest[t.name][2]
    return PriceQuote(usd_per_hour=prices, source="trace")


def front_min_cost_allocation(front: ParetoFront) -> Allocation:
    if len(front) == 0:
        raise EmptyFront("empty Pareto front")
    return front.members[0][0]
