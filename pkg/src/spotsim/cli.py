"""Command-line entry point.

One binary, five verbs (characterize / forecast / optimize / simulate /
compare) plus `rerun` to replay a recorded manifest and `serve` to expose
the same operations over HTTP. The CLI is a thin client: it reads files,
fills the service request models, and renders responses; computation happens
in the service layer (in-process by default, remote with --server).

Exit codes: 0 success, 1 validation/parse/io error, 2 infeasibility.
Errors print a single line `ERROR: <category>: <detail>` to stderr.
"""

from __future__ import annotations

import configparser
import json
import sys
from pathlib import Path

import click

from . import __version__
from .client import HttpClient, LocalClient
from .errors import ScenarioError, SpotSimError
from .reports import (
    allocation_str,
    characterization_csv,
    emit,
    forecast_csv,
    fmt_money,
    fmt_rps,
    fmt_time,
    front_csv,
    result_csv,
    savings_csv,
    summary_csv,
)
from .service import schemas


def _client(server: str | None):
    return HttpClient(server) if server else LocalClient()


def _echo(quiet: bool, message: str) -> None:
    if not quiet:
        click.echo(message)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _scenario_bundle(scenario_path: str) -> tuple[str, dict[str, str], dict[str, str]]:
    """Scenario text, referenced-file map for the service, and the manifest
    input map (absolute path -> content)."""
    path = Path(scenario_path)
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"bad scenario syntax: {exc}") from None
    refs = []
    for section, key in (
        ("catalog", "file"),
        ("prices", "file"),
        ("workload", "file"),
        ("slo", "loadtest_file"),
    ):
        if section in parser and key in parser[section]:
            refs.append(parser[section][key])
    files = {}
    inputs = {str(path.resolve()): text}
    for name in refs:
        ref_path = path.parent / name
        content = ref_path.read_text(encoding="utf-8")
        files[name] = content
        inputs[str(ref_path.resolve())] = content
    return text, files, inputs


@click.group()
@click.version_option(version=__version__, prog_name="spotsim")
def cli():
    """Spot-instance cluster cost optimization toolkit.

    \b
    Exit codes:
      0  success
      1  validation, parse, usage, or I/O error
      2  infeasible (no sustainable load, pod fits nowhere, empty front,
         no feasible allocation within caps/exclusions)

    Errors print a single line `ERROR: <category>: <detail>` to stderr.
    Every subcommand accepts --seed (default 0; wall-clock entropy is never
    used), --out to write reports plus a rerunnable manifest, --quiet, and
    --server to delegate computation to a running `spotsim serve` instance.
    """


@cli.command()
@click.option("--loadtest", required=True, type=click.Path(dir_okay=False))
@click.option("--slo-rps", required=True, type=float, help="Minimum RPS the service must sustain.")
@click.option("--failure-threshold", type=float, default=2.0, show_default=True,
              help="Failure-rate percent treated as unsustainable.")
@click.option("--cpu-drop", type=float, default=5.0, show_default=True,
              help="CPU decline (pp below running max) marking the inflection.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--quiet", is_flag=True)
@click.option("--server", default=None, help="URL of a running spotsim service.")
def characterize(loadtest, slo_rps, failure_threshold, cpu_drop, seed, out, quiet, server):
    """Derive per-pod max RPS and the initial pod count from a load test."""
    text = _read(loadtest)
    req = schemas.CharacterizeRequest(
        loadtest_csv=text,
        slo_min_rps=slo_rps,
        failure_threshold_pct=failure_threshold,
        cpu_drop_pct=cpu_drop,
    )
    resp = _client(server).call("characterize", req)
    _echo(quiet, f"max RPS per pod: {fmt_rps(resp.max_rps_per_pod)} "
                 f"(sample index {resp.inflection_index}, "
                 f"failure threshold {resp.failure_threshold_used}%)")
    _echo(quiet, f"initial pods for SLO {slo_rps} rps: {resp.initial_pods}")
    click.echo("max_rps,initial_pods")
    click.echo(f"{fmt_rps(resp.max_rps_per_pod)},{resp.initial_pods}")
    if out:
        argv = [
            "characterize", "--loadtest", str(Path(loadtest).resolve()),
            "--slo-rps", str(slo_rps), "--failure-threshold", str(failure_threshold),
            "--cpu-drop", str(cpu_drop), "--seed", str(seed), "--quiet",
            "--out", str(Path(out).resolve()),
        ]
        emit(Path(out), {"characterization.csv": characterization_csv(resp)},
             "characterize", argv, seed, {str(Path(loadtest).resolve()): text})


@cli.command()
@click.option("--history", required=True, type=click.Path(dir_okay=False))
@click.option("--type", "instance_type", required=True)
@click.option("--zone", default=None)
@click.option("--horizon", required=True, type=int, help="Forecast horizon in hours.")
@click.option("--on-demand", type=float, default=None,
              help="On-demand price; when given, a bid price is computed.")
@click.option("--margin", type=float, default=0.05, show_default=True)
@click.option("--cap", type=float, default=0.9, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--quiet", is_flag=True)
@click.option("--server", default=None)
def forecast(history, instance_type, zone, horizon, on_demand, margin, cap, seed, out, quiet, server):
    """Fit the seasonal-trend model and forecast spot prices."""
    text = _read(history)
    req = schemas.ForecastRequest(
        history_csv=text,
        instance_type=instance_type,
        zone=zone,
        horizon_hours=horizon,
        on_demand_usd_hr=on_demand,
        margin_fraction=margin,
        cap_fraction=cap,
    )
    resp = _client(server).call("forecast", req)
    _echo(quiet, f"fitted {resp.instance_type}/{resp.zone}: "
                 f"slope {resp.slope_per_hour:+.6g}/h, sigma {resp.residual_sigma:.6g}")
    if resp.bid_usd_hr is not None:
        _echo(quiet, f"bid price: {fmt_money(resp.bid_usd_hr)} usd/hr")
    click.echo(forecast_csv(resp), nl=False)
    if out:
        argv = ["forecast", "--history", str(Path(history).resolve()),
                "--type", instance_type, "--horizon", str(horizon)]
        if zone:
            argv += ["--zone", zone]
        if on_demand is not None:
            argv += ["--on-demand", str(on_demand)]
        argv += ["--margin", str(margin), "--cap", str(cap),
                 "--seed", str(seed), "--quiet", "--out", str(Path(out).resolve())]
        emit(Path(out), {"forecast.csv": forecast_csv(resp)},
             "forecast", argv, seed, {str(Path(history).resolve()): text})


@cli.command()
@click.option("--catalog", required=True, type=click.Path(dir_okay=False))
@click.option("--pods", required=True, type=int, help="Required pod count.")
@click.option("--pod-cpu", required=True, type=int, help="Pod CPU request, millicores.")
@click.option("--pod-mem", required=True, type=int, help="Pod memory request, MiB.")
@click.option("--prices", default="on-demand", show_default=True,
              help="Price trace file, or 'on-demand' for catalog prices.")
@click.option("--algo", type=click.Choice(["brute", "greedy", "nsga2"]), default="nsga2",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-nodes", type=int, default=1, show_default=True)
@click.option("--exclude", default="", help="Comma-separated instance types to exclude.")
@click.option("--max-per-type", type=int, default=10, show_default=True)
@click.option("--population", type=int, default=64, show_default=True)
@click.option("--generations", type=int, default=100, show_default=True)
@click.option("--fixed-overhead", type=float, default=0.0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--quiet", is_flag=True)
@click.option("--server", default=None)
def optimize(catalog, pods, pod_cpu, pod_mem, prices, algo, seed, min_nodes, exclude,
             max_per_type, population, generations, fixed_overhead, out, quiet, server):
    """Find cost-optimal node allocations for a pod count."""
    catalog_text = _read(catalog)
    inputs = {str(Path(catalog).resolve()): catalog_text}
    prices_csv = None
    if prices != "on-demand":
        prices_csv = _read(prices)
        inputs[str(Path(prices).resolve())] = prices_csv
    req = schemas.OptimizeRequest(
        catalog_csv=catalog_text,
        required_pods=pods,
        pod_cpu_millicores=pod_cpu,
        pod_mem_mib=pod_mem,
        prices_csv=prices_csv,
        algorithm=algo,
        seed=seed,
        max_per_type=max_per_type,
        min_nodes=min_nodes,
        exclude=[t.strip() for t in exclude.split(",") if t.strip()],
        population=population,
        generations=generations,
        fixed_overhead_usd_hr=fixed_overhead,
    )
    resp = _client(server).call("optimize", req)
    click.echo(front_csv(resp.front), nl=False)
    _echo(quiet, f"selected: cost={fmt_money(resp.selected.cost_usd_hr)} "
                 f"nodes={resp.selected.node_count} "
                 f"allocation={allocation_str(resp.selected.allocation)} "
                 f"(prices: {resp.price_source})")
    if out:
        argv = ["optimize", "--catalog", str(Path(catalog).resolve()),
                "--pods", str(pods), "--pod-cpu", str(pod_cpu), "--pod-mem", str(pod_mem),
                "--prices", prices if prices == "on-demand" else str(Path(prices).resolve()),
                "--algo", algo, "--seed", str(seed), "--min-nodes", str(min_nodes),
                "--exclude", exclude, "--max-per-type", str(max_per_type),
                "--population", str(population), "--generations", str(generations),
                "--fixed-overhead", str(fixed_overhead),
                "--quiet", "--out", str(Path(out).resolve())]
        emit(Path(out),
             {"front.csv": front_csv(resp.front), "selected.csv": front_csv([resp.selected])},
             "optimize", argv, seed, inputs)


def _summarize(quiet: bool, resp: schemas.SimulateResponse) -> None:
    s = resp.summary
    _echo(quiet, f"[{s.policy}] total cost: {fmt_money(s.total_cost_usd)} usd "
                 f"over {s.duration_s}s; SLO violation: {fmt_time(s.slo_violation_s)}s; "
                 f"terminations {s.terminations_injected} "
                 f"(graceful {s.terminations_gracefully_handled}); "
                 f"reoptimizations {s.reoptimizations}")


@cli.command()
@click.option("--scenario", required=True, type=click.Path(dir_okay=False))
@click.option("--policy", default="spotkube", show_default=True,
              help="spotkube | baseline_single_type[:type] | baseline_on_demand[:type]")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--quiet", is_flag=True)
@click.option("--server", default=None)
def simulate(scenario, policy, seed, out, quiet, server):
    """Run one policy over a scenario; writes result.csv and summary.csv."""
    text, files, inputs = _scenario_bundle(scenario)
    req = schemas.SimulateRequest(scenario=text, files=files, policy=policy, seed=seed)
    resp = _client(server).call("simulate", req)
    _summarize(quiet, resp)
    argv = ["simulate", "--scenario", str(Path(scenario).resolve()), "--policy", policy,
            "--seed", str(seed), "--quiet", "--out", str(Path(out).resolve())]
    emit(Path(out), {"result.csv": result_csv(resp), "summary.csv": summary_csv(resp)},
         "simulate", argv, seed, inputs)


@cli.command()
@click.option("--scenario", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--baseline", default="baseline_single_type", show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--quiet", is_flag=True)
@click.option("--server", default=None)
def compare(scenario, seed, baseline, out, quiet, server):
    """Run spotkube and a baseline on the same traces; writes savings.csv."""
    text, files, inputs = _scenario_bundle(scenario)
    req = schemas.CompareRequest(scenario=text, files=files, seed=seed, baseline=baseline)
    resp = _client(server).call("compare", req)
    _summarize(quiet, resp.spotkube)
    _summarize(quiet, resp.baseline)
    _echo(quiet, f"savings: {resp.savings_pct:.2f}%")
    argv = ["compare", "--scenario", str(Path(scenario).resolve()), "--seed", str(seed),
            "--baseline", baseline, "--quiet", "--out", str(Path(out).resolve())]
    emit(Path(out), {
        "spotkube_result.csv": result_csv(resp.spotkube),
        "spotkube_summary.csv": summary_csv(resp.spotkube),
        "baseline_result.csv": result_csv(resp.baseline),
        "baseline_summary.csv": summary_csv(resp.baseline),
        "savings.csv": savings_csv(resp),
    }, "compare", argv, seed, inputs)


@cli.command()
@click.option("--manifest", required=True, type=click.Path(dir_okay=False))
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Override the recorded output directory.")
def rerun(manifest, out):
    """Replay a recorded run manifest byte-identically."""
    data = json.loads(Path(manifest).read_text(encoding="utf-8"))
    argv = list(data["argv"])
    if out is not None:
        for i, arg in enumerate(argv):
            if arg == "--out" and i + 1 < len(argv):
                argv[i + 1] = str(Path(out).resolve())
    cli.main(args=argv, standalone_mode=False)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("spotsim.service.app:app", host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("ERROR: aborted", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"ERROR: usage: {exc.format_message()}", err=True)
        return 1
    except SpotSimError as exc:
        click.echo(f"ERROR: {exc.category}: {exc}", err=True)
        return exc.exit_code
    except OSError as exc:
        click.echo(f"ERROR: io: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
