"""Scenario files: the single input document driving a simulation run.

Format: INI-style sections, all times in seconds of simulation time (t=0 is
the start of the run; negative times are pre-run price history used to warm
up the forecaster).

  [catalog]      file = catalog.csv
  [prices]       source = synthetic | trace
                 synthetic: base = 0.02 | "t3.medium:0.0166,c6a.large:0.0305"
                            trend_frac_per_hour, seasonal_amplitude_frac,
                            noise_sigma_frac, seed, history_hours
                 trace:     file = prices.csv, origin = ISO timestamp of t=0
                            (default: earliest trace time + history_hours)
                 common:    margin_fraction, cap_fraction (bid computation)
  [workload]     file = workload.csv (time_s,offered_rps) or
                 points = "0:3000;3600:3500;..." ; duration_s = 86400
  [slo]          min_rps = 50 ; max_rps_per_pod = 60 or
                 loadtest_file = loadtest.csv
                 (failure_threshold_pct / cpu_drop_pct tune the load-test
                 analysis)
  [pod]          cpu_millicores = 500 ; mem_mib = 1024
  [scaler]       any ScalerConfig field; min_pods defaults to the SLO-driven
                 initial pod count
  [optimizer]    algorithm = nsga2|greedy|brute ; population, generations,
                 crossover_p, mutation_p, max_per_type, min_nodes,
                 fixed_overhead_usd_hr, baseline_type,
                 baseline_fixed_overhead_usd_hr
  [terminations] mode = none|explicit|stochastic ;
                 events = "3600:type=t3.medium;7200:node=node-0002;10800:any"
                 rate_per_node_hour, seed
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from ..autoscale import ScalerConfig
from ..characterize import (
    DEFAULT_CPU_DROP_PCT,
    DEFAULT_FAILURE_THRESHOLD_PCT,
    characterize,
    initial_pod_count,
)
from ..domain import (
    Catalog,
    PodSpec,
    PriceSeries,
    SLOSpec,
    load_catalog,
    load_loadtest,
    load_price_history,
    parse_timestamp,
)
from ..errors import ParseError, ScenarioError
from ..forecast import DEFAULT_BID_CAP_FRACTION, DEFAULT_BID_MARGIN_FRACTION

SECTIONS = ("catalog", "prices", "workload", "slo", "pod", "scaler", "optimizer", "terminations")

DEFAULT_FIXED_OVERHEAD_USD_HR = 0.0632  # manager node + services node + elastic IPs
DEFAULT_BASELINE_OVERHEAD_USD_HR = 0.10  # managed-control-plane fee analog
DEFAULT_HISTORY_HOURS = 72


@dataclass(frozen=True)
class SyntheticPrices:
    base: tuple[tuple[str, float], ...]  # per-type base usd/hr
    trend_frac_per_hour: float = 0.0
    seasonal_amplitude_frac: float = 0.0
    noise_sigma_frac: float = 0.0
    seed: int = 0
    history_hours: int = DEFAULT_HISTORY_HOURS


@dataclass(frozen=True)
class OptimizerSettings:
    algorithm: str = "nsga2"
    population: int = 64
    generations: int = 100
    crossover_p: float = 0.9
    mutation_p: float | None = None
    max_per_type: int = 10
    min_nodes: int = 1
    fixed_overhead_usd_hr: float = DEFAULT_FIXED_OVERHEAD_USD_HR
    baseline_type: str | None = None
    baseline_fixed_overhead_usd_hr: float = DEFAULT_BASELINE_OVERHEAD_USD_HR

    def __post_init__(self):
        if self.algorithm not in ("nsga2", "greedy", "brute"):
            raise ScenarioError(f"unknown optimizer algorithm {self.algorithm!r}")


@dataclass(frozen=True)
class TerminationSettings:
    mode: str = "none"
    events: tuple[tuple[float, str], ...] = ()  # (time_s, selector)
    rate_per_node_hour: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("none", "explicit", "stochastic"):
            raise ScenarioError(f"unknown terminations mode {self.mode!r}")
        if self.rate_per_node_hour < 0:
            raise ScenarioError("rate_per_node_hour must be >= 0")


@dataclass(frozen=True)
class Scenario:
    catalog: Catalog
    price_series: tuple[PriceSeries, ...]  # sim-time points, one series per type
    margin_fraction: float
    cap_fraction: float
    workload: tuple[tuple[float, float], ...]  # (time_s, offered_rps)
    duration_s: int
    slo: SLOSpec
    pod: PodSpec
    max_rps_per_pod: float
    scaler: ScalerConfig
    optimizer: OptimizerSettings
    terminations: TerminationSettings

    def price_points(self, instance_type: str) -> tuple[tuple[int, float], ...]:
        for series in self.price_series:
            if series.instance_type == instance_type:
                return series.points
        raise ScenarioError(f"no price series for type {instance_type!r}")


def generate_synthetic_prices(
    params: SyntheticPrices, duration_s: int, zone_of: Callable[[str], str]
) -> tuple[PriceSeries, ...]:
    """Hourly spot prices: base * (1 + trend + daily sinusoid) + noise.

    Each type gets its own RNG stream derived from (seed, type) so adding a
    type never reshuffles the others. Prices are floored at 1% of base.
    """
    series = []
    hours_end = math.ceil(duration_s / 3600)
    for name, base in params.base:
        rng = random.Random(f"{params.seed}:{name}")
        points = []
        for h in range(-params.history_hours, hours_end + 1):
            level = base * (
                1.0
                + params.trend_frac_per_hour * h
                + params.seasonal_amplitude_frac * math.sin(2 * math.pi * (h % 24) / 24.0)
            )
            noisy = level + rng.gauss(0.0, params.noise_sigma_frac * base)
            points.append((h * 3600, max(0.01 * base, noisy)))
        series.append(PriceSeries(instance_type=name, zone=zone_of(name), points=tuple(points)))
    return tuple(series)


def load_workload_csv(text: str) -> tuple[tuple[float, float], ...]:
    if not text.strip():
        raise ParseError("empty workload file")
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    if header != ["time_s", "offered_rps"]:
        raise ParseError(f"expected header 'time_s,offered_rps', got {','.join(header)!r}", line=1)
    points = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            t, rps = float(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise ParseError("bad workload row", line=lineno) from None
        if rps < 0:
            raise ParseError("offered_rps must be >= 0", line=lineno)
        if points and t <= points[-1][0]:
            raise ParseError("time_s must strictly increase", line=lineno)
        points.append((t, rps))
    if not points:
        raise ParseError("workload file has a header but no rows")
    return tuple(points)


def _parse_points(value: str) -> tuple[tuple[float, float], ...]:
    points = []
    for chunk in value.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        t_raw, _, rps_raw = chunk.partition(":")
        try:
            points.append((float(t_raw), float(rps_raw)))
        except ValueError:
            raise ScenarioError(f"bad workload point {chunk!r}") from None
    return tuple(points)


def _parse_base_map(value: str, catalog: Catalog) -> tuple[tuple[str, float], ...]:
    value = value.strip()
    if ":" not in value:
        base = float(value)
        return tuple((t.name, base) for t in catalog.types)
    out = {}
    for chunk in value.split(","):
        name, _, price = chunk.strip().partition(":")
        out[name.strip()] = float(price)
    for t in catalog.types:
        if t.name not in out:
            raise ScenarioError(f"synthetic base price missing for type {t.name!r}")
    return tuple(sorted(out.items()))


def _sim_time_series(series_list, origin_s: int) -> tuple[PriceSeries, ...]:
    """Shift trace series to sim time and collapse zones to one per type."""
    by_type: dict[str, PriceSeries] = {}
    for series in series_list:
        keep = by_type.get(series.instance_type)
        if keep is None or series.zone < keep.zone:
            by_type[series.instance_type] = series
    out = []
    for name in sorted(by_type):
        src = by_type[name]
        points = tuple((ts - origin_s, price) for ts, price in src.points)
        out.append(PriceSeries(instance_type=name, zone=src.zone, points=points))
    return tuple(out)


def load_scenario(text: str, read_file: Callable[[str], str]) -> Scenario:
    """Parse and resolve a scenario document.

    read_file maps a referenced file name to its content; the CLI resolves
    against the scenario's directory, the HTTP service against an uploaded
    file map.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"bad scenario syntax: {exc}") from None
    for section in ("catalog", "prices", "workload", "slo", "pod"):
        if section not in parser:
            raise ScenarioError(f"missing required section [{section}]")
    for section in parser.sections():
        if section not in SECTIONS:
            raise ScenarioError(f"unknown section [{section}]")

    catalog = load_catalog(read_file(parser["catalog"]["file"]))

    slo_sec = parser["slo"]
    min_rps = slo_sec.getfloat("min_rps")
    if min_rps is None:
        raise ScenarioError("[slo] min_rps is required")
    slo = SLOSpec(min_rps=min_rps)
    if "max_rps_per_pod" in slo_sec:
        max_rps = slo_sec.getfloat("max_rps_per_pod")
        if max_rps <= 0:
            raise ScenarioError("max_rps_per_pod must be > 0")
    elif "loadtest_file" in slo_sec:
        series = load_loadtest(read_file(slo_sec["loadtest_file"]))
        report = characterize(
            series,
            slo,
            slo_sec.getfloat("failure_threshold_pct", DEFAULT_FAILURE_THRESHOLD_PCT),
            slo_sec.getfloat("cpu_drop_pct", DEFAULT_CPU_DROP_PCT),
        )
        max_rps = report.max_rps_per_pod
    else:
        raise ScenarioError("[slo] needs max_rps_per_pod or loadtest_file")

    pod_sec = parser["pod"]
    cpu = pod_sec.getint("cpu_millicores")
    mem = pod_sec.getint("mem_mib")
    if cpu is None or mem is None:
        raise ScenarioError("[pod] cpu_millicores and mem_mib are required")
    pod = PodSpec(cpu_millicores=cpu, mem_mib=mem)

    work_sec = parser["workload"]
    if "file" in work_sec:
        workload = load_workload_csv(read_file(work_sec["file"]))
    elif "points" in work_sec:
        workload = _parse_points(work_sec["points"])
    else:
        raise ScenarioError("[workload] needs file or points")
    duration_s = work_sec.getint("duration_s")
    if duration_s is None or duration_s <= 0:
        raise ScenarioError("[workload] duration_s must be a positive integer")
    if workload[0][0] > 0:
        raise ScenarioError("workload must define a value at or before t=0")
    if workload[-1][0] > duration_s:
        raise ScenarioError("duration_s must cover the workload trace")

    price_sec = parser["prices"]
    margin = price_sec.getfloat("margin_fraction", DEFAULT_BID_MARGIN_FRACTION)
    cap = price_sec.getfloat("cap_fraction", DEFAULT_BID_CAP_FRACTION)
    source = price_sec.get("source", "synthetic")
    if source == "synthetic":
        synth = SyntheticPrices(
            base=_parse_base_map(price_sec.get("base", ""), catalog),
            trend_frac_per_hour=price_sec.getfloat("trend_frac_per_hour", 0.0),
            seasonal_amplitude_frac=price_sec.getfloat("seasonal_amplitude_frac", 0.0),
            noise_sigma_frac=price_sec.getfloat("noise_sigma_frac", 0.0),
            seed=price_sec.getint("seed", 0),
            history_hours=price_sec.getint("history_hours", DEFAULT_HISTORY_HOURS),
        )
        price_series = generate_synthetic_prices(
            synth, duration_s, zone_of=lambda name: catalog.get(name).zones[0]
        )
    elif source == "trace":
        raw_series = load_price_history(read_file(price_sec["file"]))
        history_hours = price_sec.getint("history_hours", DEFAULT_HISTORY_HOURS)
        earliest = min(s.points[0][0] for s in raw_series)
        latest = max(s.points[-1][0] for s in raw_series)
        if "origin" in price_sec:
            origin = parse_timestamp(price_sec["origin"])
        else:
            origin = earliest + history_hours * 3600
        if latest < origin + duration_s:
            raise ScenarioError("price trace does not cover the simulation window")
        price_series = _sim_time_series(raw_series, origin)
        missing = set(catalog.names) - {s.instance_type for s in price_series}
        if missing:
            raise ScenarioError(f"price trace missing catalog types: {sorted(missing)}")
    else:
        raise ScenarioError(f"unknown price source {source!r}")

    scaler_sec = parser["scaler"] if "scaler" in parser else {}
    min_pods = (
        int(scaler_sec.get("min_pods"))
        if "min_pods" in scaler_sec
        else initial_pod_count(slo, max_rps)
    )
    scaler = ScalerConfig(
        scale_up_util=float(scaler_sec.get("scale_up_util", 0.80)),
        scale_down_util=float(scaler_sec.get("scale_down_util", 0.30)),
        target_util=float(scaler_sec.get("target_util", 0.65)),
        poll_interval_s=int(scaler_sec.get("poll_interval_s", 60)),
        sustain_polls=int(scaler_sec.get("sustain_polls", 2)),
        provisioning_delay_s=int(scaler_sec.get("provisioning_delay_s", 420)),
        termination_notice_s=int(scaler_sec.get("termination_notice_s", 120)),
        exclusion_cooldown_s=int(scaler_sec.get("exclusion_cooldown_s", 3600)),
        min_pods=min_pods,
    )

    opt_sec = parser["optimizer"] if "optimizer" in parser else {}
    mutation_raw = opt_sec.get("mutation_p") if "mutation_p" in opt_sec else None
    optimizer = OptimizerSettings(
        algorithm=opt_sec.get("algorithm", "nsga2"),
        population=int(opt_sec.get("population", 64)),
        generations=int(opt_sec.get("generations", 100)),
        crossover_p=float(opt_sec.get("crossover_p", 0.9)),
        mutation_p=float(mutation_raw) if mutation_raw is not None else None,
        max_per_type=int(opt_sec.get("max_per_type", 10)),
        min_nodes=int(opt_sec.get("min_nodes", 1)),
        fixed_overhead_usd_hr=float(
            opt_sec.get("fixed_overhead_usd_hr", DEFAULT_FIXED_OVERHEAD_USD_HR)
        ),
        baseline_type=opt_sec.get("baseline_type") or None,
        baseline_fixed_overhead_usd_hr=float(
            opt_sec.get("baseline_fixed_overhead_usd_hr", DEFAULT_BASELINE_OVERHEAD_USD_HR)
        ),
    )
    if optimizer.baseline_type is not None:
        catalog.get(optimizer.baseline_type)  # raises on unknown type

    term_sec = parser["terminations"] if "terminations" in parser else {}
    events = []
    if "events" in term_sec:
        for chunk in term_sec.get("events").split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            t_raw, _, selector = chunk.partition(":")
            try:
                events.append((float(t_raw), selector.strip()))
            except ValueError:
                raise ScenarioError(f"bad termination event {chunk!r}") from None
    terminations = TerminationSettings(
        mode=term_sec.get("mode", "none"),
        events=tuple(sorted(events)),
        rate_per_node_hour=float(term_sec.get("rate_per_node_hour", 0.0)),
        seed=int(term_sec.get("seed", 0)),
    )

    return Scenario(
        catalog=catalog,
        price_series=price_series,
        margin_fraction=margin,
        cap_fraction=cap,
        workload=workload,
        duration_s=duration_s,
        slo=slo,
        pod=pod,
        max_rps_per_pod=max_rps,
        scaler=scaler,
        optimizer=optimizer,
        terminations=terminations,
    )


def read_file_from_dir(base_dir: str | Path) -> Callable[[str], str]:
    base = Path(base_dir)

    def read(name: str) -> str:
        return (base / name).read_text(encoding="utf-8")

    return read


def read_file_from_map(files: dict[str, str]) -> Callable[[str], str]:
    def read(name: str) -> str:
        if name not in files:
            raise ScenarioError(f"scenario references unknown file {name!r}")
        return files[name]

    return read
