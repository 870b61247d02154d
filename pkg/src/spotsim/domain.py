"""Core domain types plus ingestion of catalogs, price traces, and load tests.

All values are immutable after construction and safe to share across
concurrent readers. File formats (all UTF-8, LF, comma-separated with a
header row):

  catalog:    name,family,vcpu,mem_mib,on_demand_usd_hr,zones
              (zones semicolon-separated)
  price trace: timestamp,instance_type,zone,usd_per_hour
              (timestamp ISO-8601 UTC)
  load test:  rps,cpu_percent,failure_rate_percent
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import OrderingError, ParseError, ValidationError

#: Kubernetes-like system reserve applied when a catalog does not override it.
DEFAULT_OVERHEAD_CPU_FRACTION = 0.10
DEFAULT_OVERHEAD_MEM_MIB = 512


@dataclass(frozen=True)
class NodeOverhead:
    """Per-node system reserve subtracted from raw capacity."""

    cpu_fraction: float = DEFAULT_OVERHEAD_CPU_FRACTION
    mem_mib: int = DEFAULT_OVERHEAD_MEM_MIB

    def __post_init__(self):
        if not 0 <= self.cpu_fraction < 1:
            raise ValidationError(f"overhead cpu_fraction must be in [0,1), got {self.cpu_fraction}")
        if self.mem_mib < 0:
            raise ValidationError(f"overhead mem_mib must be >= 0, got {self.mem_mib}")


@dataclass(frozen=True)
class InstanceTypeSpec:
    """One purchasable node shape."""

    name: str
    family: str
    vcpu: int
    mem_mib: int
    on_demand_usd_hr: float
    zones: tuple[str, ...]

    def __post_init__(self):
        if not self.name:
            raise ValidationError("instance type name must be non-empty")
        if not self.name.startswith(self.family):
            raise ValidationError(f"family {self.family!r} is not a prefix of name {self.name!r}")
        if self.vcpu < 1:
            raise ValidationError(f"{self.name}: vcpu must be >= 1, got {self.vcpu}")
        if self.mem_mib < 256:
            raise ValidationError(f"{self.name}: mem_mib must be >= 256, got {self.mem_mib}")
        if self.on_demand_usd_hr < 0:
            raise ValidationError(f"{self.name}: on_demand_usd_hr must be >= 0")
        if not self.zones:
            raise ValidationError(f"{self.name}: at least one zone required")

    def allocatable_millicores(self, overhead: NodeOverhead) -> int:
        raw = self.vcpu * 1000
        return int(math.floor(raw * (1.0 - overhead.cpu_fraction) + 1e-9))

    def allocatable_mem_mib(self, overhead: NodeOverhead) -> int:
        return self.mem_mib - overhead.mem_mib


@dataclass(frozen=True)
class Catalog:
    """The set of instance types an allocation may draw from."""

    types: tuple[InstanceTypeSpec, ...]
    node_overhead: NodeOverhead = field(default_factory=NodeOverhead)

    def __post_init__(self):
        if not self.types:
            raise ValidationError("catalog must contain at least one type")
        seen = set()
        for t in self.types:
            if t.name in seen:
                raise ValidationError(f"duplicate type {t.name!r}")
            seen.add(t.name)
            if t.allocatable_millicores(self.node_overhead) <= 0:
                raise ValidationError(f"{t.name}: overhead leaves no allocatable CPU")
            if t.allocatable_mem_mib(self.node_overhead) <= 0:
                raise ValidationError(f"{t.name}: overhead leaves no allocatable memory")

    def get(self, name: str) -> InstanceTypeSpec:
        for t in self.types:
            if t.name == name:
                return t
        raise ValidationError(f"unknown instance type {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.types)


@dataclass(frozen=True)
class PodSpec:
    """Resource request of the single homogeneous pod shape."""

    cpu_millicores: int
    mem_mib: int

    def __post_init__(self):
        if self.cpu_millicores <= 0:
            raise ValidationError(f"pod cpu_millicores must be > 0, got {self.cpu_millicores}")
        if self.mem_mib <= 0:
            raise ValidationError(f"pod mem_mib must be > 0, got {self.mem_mib}")


@dataclass(frozen=True)
class SLOSpec:
    """Minimum requests per second the microservice must sustain."""

    min_rps: float

    def __post_init__(self):
        if self.min_rps <= 0:
            raise ValidationError(f"slo min_rps must be > 0, got {self.min_rps}")


@dataclass(frozen=True)
class Allocation:
    """Multiset of instance types; the optimizer's decision variable."""

    counts: tuple[tuple[str, int], ...]

    def __init__(self, counts):
        # Accept a mapping or pair iterable; store canonically sorted by name.
        canon = tuple(sorted((name, int(n)) for name, n in dict(counts).items()))
        for name, n in canon:
            if n < 0:
                raise ValidationError(f"negative count for {name!r}")
        object.__setattr__(self, "counts", canon)

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)

    def count(self, name: str) -> int:
        return self.as_dict().get(name, 0)

    @property
    def total_nodes(self) -> int:
        return sum(n for _, n in self.counts)

    def nonzero(self) -> dict[str, int]:
        return {name: n for name, n in self.counts if n > 0}

    def merge(self, other: "Allocation") -> "Allocation":
        combined = self.as_dict()
        for name, n in other.counts:
            combined[name] = combined.get(name, 0) + n
        return Allocation(combined)

    def __str__(self) -> str:
        items = self.nonzero()
        if not items:
            return "-"
        return ";".join(f"{name}:{n}" for name, n in sorted(items.items()))


@dataclass(frozen=True)
class PriceSeries:
    """Observed spot prices for one (instance type, zone) pair."""

    instance_type: str
    zone: str
    points: tuple[tuple[int, float], ...]  # (timestamp seconds, usd/hr)

    def __post_init__(self):
        last = None
        for ts, price in self.points:
            if price <= 0:
                raise ValidationError(
                    f"{self.instance_type}/{self.zone}: price must be > 0, got {price}"
                )
            if last is not None and ts <= last:
                raise OrderingError(
                    f"{self.instance_type}/{self.zone}: timestamps must strictly increase"
                )
            last = ts


@dataclass(frozen=True)
class LoadTestSeries:
    """Load-test export: per-RPS CPU usage and failure rate, rps ascending."""

    samples: tuple[tuple[float, float, float], ...]  # (rps, cpu%, failure%)

    def __post_init__(self):
        if len(self.samples) < 3:
            raise ValidationError(f"need >= 3 samples, got {len(self.samples)}")
        last_rps = None
        for rps, cpu, fail in self.samples:
            if rps <= 0:
                raise ValidationError(f"rps must be > 0, got {rps}")
            if last_rps is not None and rps <= last_rps:
                raise ValidationError("rps values must strictly increase")
            if cpu < 0:
                raise ValidationError(f"cpu_percent must be >= 0, got {cpu}")
            if not 0 <= fail <= 100:
                raise ValidationError(f"failure_rate_percent outside [0,100]: {fail}")
            last_rps = rps


def _rows(text: str, expected_header: list[str], what: str):
    """Yield (line_number, row) for a CSV payload, validating the header."""
    if not text.strip():
        raise ParseError(f"empty {what} file")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"empty {what} file") from None
    header = [h.strip() for h in header]
    if header != expected_header:
        raise ParseError(
            f"expected header {','.join(expected_header)!r}, got {','.join(header)!r}", line=1
        )
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(expected_header):
            raise ParseError(f"expected {len(expected_header)} fields, got {len(row)}", line=lineno)
        yield lineno, [cell.strip() for cell in row]


def _parse_number(value: str, kind, what: str, lineno: int):
    try:
        return kind(value)
    except ValueError:
        raise ParseError(f"bad {what} {value!r}", line=lineno) from None


CATALOG_HEADER = ["name", "family", "vcpu", "mem_mib", "on_demand_usd_hr", "zones"]


def load_catalog(text: str, overhead: NodeOverhead | None = None) -> Catalog:
    """Parse a catalog file into a validated Catalog."""
    types = []
    for lineno, row in _rows(text, CATALOG_HEADER, "catalog"):
        name, family, vcpu, mem, price, zones = row
        zone_list = tuple(z.strip() for z in zones.split(";") if z.strip())
        try:
            spec = InstanceTypeSpec(
                name=name,
                family=family,
                vcpu=_parse_number(vcpu, int, "vcpu", lineno),
                mem_mib=_parse_number(mem, int, "mem_mib", lineno),
                on_demand_usd_hr=_parse_number(price, float, "on_demand_usd_hr", lineno),
                zones=zone_list,
            )
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        types.append(spec)
    if not types:
        raise ParseError("catalog has a header but no rows")
    return Catalog(types=tuple(types), node_overhead=overhead or NodeOverhead())


def serialize_catalog(catalog: Catalog) -> str:
    """Emit a catalog back to its file format (round-trips via load_catalog)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CATALOG_HEADER)
    for t in catalog.types:
        writer.writerow(
            [t.name, t.family, t.vcpu, t.mem_mib, f"{t.on_demand_usd_hr:.6f}", ";".join(t.zones)]
        )
    return out.getvalue()


PRICE_HEADER = ["timestamp", "instance_type", "zone", "usd_per_hour"]


def parse_timestamp(value: str, lineno: int | None = None) -> int:
    """ISO-8601 (UTC assumed when naive) to integer epoch seconds."""
    # Python 3.10's fromisoformat does not accept a trailing Z.
    raw = value[:-1] + "+00:00" if value.endswith("Z") else value
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError:
        raise ParseError(f"bad ISO-8601 timestamp {value!r}", line=lineno) from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def load_price_history(text: str) -> list[PriceSeries]:
    """Parse a price trace into per-(type, zone) series, input order preserved
    within each group. Non-monotone timestamps within a group are rejected."""
    groups: dict[tuple[str, str], list[tuple[int, float]]] = {}
    order: list[tuple[str, str]] = []
    for lineno, row in _rows(text, PRICE_HEADER, "price trace"):
        ts_raw, itype, zone, price_raw = row
        ts = parse_timestamp(ts_raw, lineno)
        price = _parse_number(price_raw, float, "usd_per_hour", lineno)
        if price <= 0:
            raise ValidationError(f"line {lineno}: price must be > 0, got {price}")
        key = (itype, zone)
        if key not in groups:
            groups[key] = []
            order.append(key)
        elif groups[key] and ts <= groups[key][-1][0]:
            raise OrderingError(
                f"timestamps for {itype}/{zone} must strictly increase", line=lineno
            )
        groups[key].append((ts, price))
    series = [
        PriceSeries(instance_type=itype, zone=zone, points=tuple(groups[(itype, zone)]))
        for itype, zone in order
    ]
    if not series:
        raise ParseError("price trace has a header but no rows")
    return series


LOADTEST_HEADER = ["rps", "cpu_percent", "failure_rate_percent"]


def load_loadtest(text: str) -> LoadTestSeries:
    """Parse a load-test export into a validated, rps-ordered series."""
    samples = []
    for lineno, row in _rows(text, LOADTEST_HEADER, "load test"):
        rps = _parse_number(row[0], float, "rps", lineno)
        cpu = _parse_number(row[1], float, "cpu_percent", lineno)
        fail = _parse_number(row[2], float, "failure_rate_percent", lineno)
        samples.append((rps, cpu, fail))
    samples.sort(key=lambda s: s[0])
    return LoadTestSeries(samples=tuple(samples))


def pods_per_node(itype: InstanceTypeSpec, pod: PodSpec, overhead: NodeOverhead) -> int:
    """How many pods of this shape fit on one node after the system reserve.

    Exact under the homogeneous-pod assumption; returns 0 when the pod does
    not fit at all.
    """
    cpu_fit = itype.allocatable_millicores(overhead) // pod.cpu_millicores
    mem_fit = itype.allocatable_mem_mib(overhead) // pod.mem_mib
    return max(0, min(cpu_fit, mem_fit))
