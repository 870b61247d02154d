"""Shared fixtures and oracle helpers."""

from __future__ import annotations

import itertools
from pathlib import Path

import pytest

from spotsim.domain import (
    Catalog,
    InstanceTypeSpec,
    NodeOverhead,
    PodSpec,
)
from spotsim.optimize import OptimizationProblem, PriceQuote

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "spotsim" / "data"


def make_type(name, vcpu, mem_mib, od=0.05, zones=("z1",), family=None):
    return InstanceTypeSpec(
        name=name,
        family=family if family is not None else name.split(".")[0],
        vcpu=vcpu,
        mem_mib=mem_mib,
        on_demand_usd_hr=od,
        zones=tuple(zones),
    )


@pytest.fixture
def reference_catalog():
    return Catalog(
        types=(
            make_type("t3.medium", 2, 4096, od=0.0416, zones=("us-east-1a", "us-east-1b")),
            make_type("c6a.large", 2, 4096, od=0.0765, zones=("us-east-1a", "us-east-1c")),
            make_type("t4g.large", 2, 8192, od=0.0672, zones=("us-east-1b", "us-east-1c")),
            make_type("c6g.xlarge", 4, 8192, od=0.1360, zones=("us-east-1a", "us-east-1b")),
        ),
        node_overhead=NodeOverhead(0.10, 512),
    )


@pytest.fixture
def reference_quote():
    return PriceQuote(
        {
            "t3.medium": 0.0166,
            "c6a.large": 0.0305,
            "t4g.large": 0.0268,
            "c6g.xlarge": 0.0544,
        },
        "trace",
    )


def two_type_problem(required_pods=5, max_per_type=3, fixed_overhead=0.0):
    """Spec-style two-type instance: A hosts 2 pods at 0.010/hr, B hosts 5
    pods at 0.015/hr (zero node overhead, CPU-bound fits)."""
    catalog = Catalog(
        types=(
            make_type("a.small", 2, 4096, od=0.02, zones=("z1",)),
            make_type("b.big", 5, 8192, od=0.03, zones=("z1", "z2")),
        ),
        node_overhead=NodeOverhead(0.0, 0),
    )
    pod = PodSpec(cpu_millicores=1000, mem_mib=512)
    quote = PriceQuote({"a.small": 0.010, "b.big": 0.015}, "trace")
    return OptimizationProblem(
        catalog=catalog,
        pod=pod,
        required_pods=required_pods,
        prices=quote,
        max_per_type=max_per_type,
        fixed_overhead_usd_hr=fixed_overhead,
    )


def enumerate_front(problem):
    """Independent oracle: enumerate all count vectors, keep feasible ones,
    and filter by pairwise domination (no sweep shared with the library)."""
    names = [name for name, _, _ in problem.decision_types]
    fits = {name: fit for name, _, fit in problem.decision_types}
    prices = {name: price for name, price, _ in problem.decision_types}
    feasible = []
    for counts in itertools.product(range(problem.max_per_type + 1), repeat=len(names)):
        capacity = sum(c * fits[n] for n, c in zip(names, counts))
        if capacity < problem.required_pods:
            continue
        cost = problem.fixed_overhead_usd_hr + sum(
            c * prices[n] for n, c in zip(names, counts)
        )
        feasible.append((cost, sum(counts), counts))
    front = []
    for cost, nodes, counts in feasible:
        dominated = False
        for c2, n2, _ in feasible:
            if (c2 <= cost and n2 >= nodes) and (c2 < cost or n2 > nodes):
                dominated = True
                break
        if not dominated:
            front.append((cost, nodes, dict(zip(names, counts))))
    return front


def front_allocation_set(front):
    return {tuple(sorted(alloc.nonzero().items())) for alloc, _ in front}


def oracle_allocation_set(oracle_front):
    return {
        tuple(sorted((n, c) for n, c in counts.items() if c)) for _, _, counts in oracle_front
    }
