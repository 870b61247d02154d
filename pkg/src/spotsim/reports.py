"""Deterministic report emission and run manifests.

All files are UTF-8 with LF endings and fixed column orders. Money is
rounded half-even to four decimals here and only here; upstream arithmetic
stays unrounded. Manifests record everything needed to reproduce a run
byte-identically: resolved argv, seed, tool version, and input hashes
(never wall-clock time).
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .service import schemas


def fmt_money(x: float) -> str:
    return f"{round(x, 4):.4f}"


def fmt_util(x: float) -> str:
    return f"{x:.4f}"


def fmt_rps(x: float) -> str:
    return f"{x:.3f}"


def fmt_time(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else f"{t:.3f}"


def iso_utc(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def csv_text(header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def characterization_csv(resp: schemas.CharacterizeResponse) -> str:
    return csv_text(
        ["max_rps", "initial_pods"], [[fmt_rps(resp.max_rps_per_pod), str(resp.initial_pods)]]
    )


def forecast_csv(resp: schemas.ForecastResponse) -> str:
    rows = [
        [iso_utc(p.timestamp), fmt_money(p.mean), fmt_money(p.lower95), fmt_money(p.upper95)]
        for p in resp.points
    ]
    return csv_text(["timestamp", "mean", "lower95", "upper95"], rows)


def allocation_str(allocation: dict[str, int]) -> str:
    if not allocation:
        return "-"
    return ";".join(f"{name}:{count}" for name, count in sorted(allocation.items()))


def front_csv(members: list[schemas.FrontMember]) -> str:
    rows = [
        [fmt_money(m.cost_usd_hr), str(m.node_count), allocation_str(m.allocation)]
        for m in members
    ]
    return csv_text(["cost_usd_hr", "node_count", "allocation"], rows)


def result_csv(resp: schemas.SimulateResponse) -> str:
    rows = [
        [
            fmt_time(r.time_s),
            str(r.nodes),
            str(r.pods),
            fmt_util(r.avg_cpu_util),
            str(r.required_pods),
            fmt_rps(r.offered_rps),
            fmt_money(r.accrued_cost_usd),
        ]
        for r in resp.series
    ]
    return csv_text(
        ["time_s", "nodes", "pods", "avg_cpu_util", "required_pods", "offered_rps", "accrued_cost_usd"],
        rows,
    )


def summary_csv(resp: schemas.SimulateResponse) -> str:
    s = resp.summary
    rows = [
        ["policy", s.policy],
        ["seed", str(s.seed)],
        ["duration_s", str(s.duration_s)],
        ["total_cost_usd", fmt_money(s.total_cost_usd)],
        ["slo_violation_s", fmt_time(s.slo_violation_s)],
        ["terminations_injected", str(s.terminations_injected)],
        ["terminations_gracefully_handled", str(s.terminations_gracefully_handled)],
        ["reoptimizations", str(s.reoptimizations)],
    ]
    for name in sorted(s.cost_by_type):
        rows.append([f"cost.{name}", fmt_money(s.cost_by_type[name])])
    return csv_text(["key", "value"], rows)


def savings_csv(resp: schemas.CompareResponse) -> str:
    rows = [
        [
            "spotkube",
            fmt_money(resp.spotkube.summary.total_cost_usd),
            fmt_time(resp.spotkube.summary.slo_violation_s),
            f"{resp.savings_pct:.2f}",
        ],
        [
            resp.baseline.summary.policy,
            fmt_money(resp.baseline.summary.total_cost_usd),
            fmt_time(resp.baseline.summary.slo_violation_s),
            "0.00",
        ],
    ]
    return csv_text(["policy", "total_cost_usd", "slo_violation_s", "savings_pct"], rows)


def build_manifest(subcommand: str, argv: list[str], seed: int, inputs: dict[str, str],
                   outputs: list[str]) -> str:
    manifest = {
        "tool": "spotsim",
        "version": __version__,
        "subcommand": subcommand,
        "argv": argv,
        "seed": seed,
        "inputs": {name: sha256_text(text) for name, text in sorted(inputs.items())},
        "outputs": sorted(outputs),
    }
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def emit(out_dir: Path, files: dict[str, str], subcommand: str, argv: list[str], seed: int,
         inputs: dict[str, str]) -> None:
    """Write output files plus the manifest that reproduces them."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        write_text(out_dir / name, text)
    manifest = build_manifest(subcommand, argv, seed, inputs, list(files))
    write_text(out_dir / "manifest.json", manifest)
