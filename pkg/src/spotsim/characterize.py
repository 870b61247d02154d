"""Metric analysis and pod calculation.

Derives the maximum RPS one pod sustains from load-test data (failure onset
combined with CPU decline past the inflection) and maps a minimum-RPS SLO to
the initial pod count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .domain import LoadTestSeries, SLOSpec
from .errors import InvalidInput, NoSustainableLoad

DEFAULT_FAILURE_THRESHOLD_PCT = 2.0
DEFAULT_CPU_DROP_PCT = 5.0


@dataclass(frozen=True)
class CharacterizationReport:
    max_rps_per_pod: float
    inflection_index: int
    initial_pods: int
    failure_threshold_used: float


def max_rps_per_pod(
    series: LoadTestSeries,
    failure_threshold_pct: float = DEFAULT_FAILURE_THRESHOLD_PCT,
    cpu_drop_pct: float = DEFAULT_CPU_DROP_PCT,
) -> tuple[float, int]:
    """Largest sustainable RPS on the sample grid.

    A sample i is sustainable when every sample j <= i keeps its failure rate
    at or below the threshold and its CPU within cpu_drop_pct of the running
    maximum. The prefix condition keeps post-crash recovery samples from
    counting as sustainable.
    """
    if failure_threshold_pct <= 0 or cpu_drop_pct <= 0:
        raise InvalidInput("thresholds must be > 0")
    best = None
    running_max_cpu = float("-inf")
    for i, (rps, cpu, fail) in enumerate(series.samples):
        running_max_cpu = max(running_max_cpu, cpu)
        if fail > failure_threshold_pct or cpu < running_max_cpu - cpu_drop_pct:
            break
        best = i
    if best is None:
        raise NoSustainableLoad(
            f"first sample (rps={series.samples[0][0]}) already exceeds the failure threshold"
        )
    return series.samples[best][0], best


def initial_pod_count(slo: SLOSpec, max_rps: float) -> int:
    """ceil(min_rps / max_rps), never below one pod.

    Uses exact rational arithmetic so pods * max_rps >= min_rps holds for
    every positive input, not just away from division boundaries.
    """
    if max_rps <= 0:
        raise InvalidInput(f"max_rps_per_pod must be > 0, got {max_rps}")
    pods = math.ceil(Fraction(slo.min_rps) / Fraction(max_rps))
    return max(1, pods)


def characterize(
    series: LoadTestSeries,
    slo: SLOSpec,
    failure_threshold_pct: float = DEFAULT_FAILURE_THRESHOLD_PCT,
    cpu_drop_pct: float = DEFAULT_CPU_DROP_PCT,
) -> CharacterizationReport:
    """Full pipeline: inflection detection followed by pod sizing."""
    rps, index = max_rps_per_pod(series, failure_threshold_pct, cpu_drop_pct)
    return CharacterizationReport(
        max_rps_per_pod=rps,
        inflection_index=index,
        initial_pods=initial_pod_count(slo, rps),
        failure_threshold_used=failure_threshold_pct,
    )
