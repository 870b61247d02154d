"""Service operations: one function per endpoint, shared by the HTTP app
and the in-process CLI client."""

from __future__ import annotations

from .. import characterize as characterize_mod
from .. import forecast as forecast_mod
from ..domain import (
    PodSpec,
    SLOSpec,
    load_catalog,
    load_loadtest,
    load_price_history,
)
from ..errors import ValidationError
from ..optimize import (
    Nsga2Params,
    OptimizationProblem,
    ParetoFront,
    SelectionPolicy,
    brute_force,
    greedy,
    nsga2,
    quote_from_on_demand,
    quote_from_trace,
    select_allocation,
)
from ..sim import compare as sim_compare
from ..sim import load_scenario, read_file_from_map
from ..sim import run as sim_run
from ..sim.engine import SimResult
from . import schemas


def characterize(req: schemas.CharacterizeRequest) -> schemas.CharacterizeResponse:
    series = load_loadtest(req.loadtest_csv)
    report = characterize_mod.characterize(
        series,
        SLOSpec(min_rps=req.slo_min_rps),
        failure_threshold_pct=req.failure_threshold_pct,
        cpu_drop_pct=req.cpu_drop_pct,
    )
    return schemas.CharacterizeResponse(
        max_rps_per_pod=report.max_rps_per_pod,
        inflection_index=report.inflection_index,
        initial_pods=report.initial_pods,
        failure_threshold_used=report.failure_threshold_used,
    )


def forecast(req: schemas.ForecastRequest) -> schemas.ForecastResponse:
    series_list = load_price_history(req.history_csv)
    matches = [s for s in series_list if s.instance_type == req.instance_type]
    if req.zone is not None:
        matches = [s for s in matches if s.zone == req.zone]
    if not matches:
        where = f"{req.instance_type}/{req.zone}" if req.zone else req.instance_type
        raise ValidationError(f"history has no rows for {where}")
    series = min(matches, key=lambda s: s.zone)
    model = forecast_mod.fit(series)
    prediction = forecast_mod.predict(model, req.horizon_hours)
    bid = None
    if req.on_demand_usd_hr is not None:
        last_upper = prediction.points[-1][3]
        bid = forecast_mod.bid_price(
            last_upper, req.on_demand_usd_hr, req.margin_fraction, req.cap_fraction
        )
    return schemas.ForecastResponse(
        instance_type=model.instance_type,
        zone=model.zone,
        intercept=model.intercept,
        slope_per_hour=model.slope_per_hour,
        residual_sigma=model.residual_sigma,
        points=[
            schemas.ForecastPoint(timestamp=ts, mean=mean, lower95=lo, upper95=hi)
            for ts, mean, lo, hi in prediction.points
        ],
        bid_usd_hr=bid,
    )


def _member(alloc, obj) -> schemas.FrontMember:
    return schemas.FrontMember(
        cost_usd_hr=obj.cost_usd_hr, node_count=obj.node_count, allocation=alloc.nonzero()
    )


def optimize(req: schemas.OptimizeRequest) -> schemas.OptimizeResponse:
    catalog = load_catalog(req.catalog_csv)
    if req.prices_csv is None:
        quote = quote_from_on_demand(catalog)
    else:
        quote = quote_from_trace(catalog, load_price_history(req.prices_csv))
    problem = OptimizationProblem(
        catalog=catalog,
        pod=PodSpec(cpu_millicores=req.pod_cpu_millicores, mem_mib=req.pod_mem_mib),
        required_pods=req.required_pods,
        prices=quote,
        excluded_types=frozenset(req.exclude),
        max_per_type=req.max_per_type,
        fixed_overhead_usd_hr=req.fixed_overhead_usd_hr,
    )
    if req.algorithm == "brute":
        front = brute_force(problem)
    elif req.algorithm == "greedy":
        alloc, obj = greedy(problem)
        front = ParetoFront(members=((alloc, obj),))
    else:
        front = nsga2(
            problem,
            Nsga2Params(
                population=req.population,
                generations=req.generations,
                crossover_p=req.crossover_p,
                mutation_p=req.mutation_p,
                seed=req.seed,
            ),
        )
    selected = select_allocation(front, SelectionPolicy(min_nodes=req.min_nodes), catalog)
    selected_obj = next(obj for alloc, obj in front if alloc == selected)
    return schemas.OptimizeResponse(
        front=[_member(alloc, obj) for alloc, obj in front],
        selected=_member(selected, selected_obj),
        price_source=quote.source,
    )


def _sim_response(result: SimResult) -> schemas.SimulateResponse:
    return schemas.SimulateResponse(
        summary=schemas.SimulateSummary(
            policy=result.policy,
            seed=result.seed,
            duration_s=result.duration_s,
            total_cost_usd=result.total_cost_usd,
            cost_by_type=dict(result.cost_by_type),
            slo_violation_s=result.slo_violation_s,
            terminations_injected=result.terminations_injected,
            terminations_gracefully_handled=result.terminations_gracefully_handled,
            reoptimizations=result.reoptimizations,
        ),
        series=[
            schemas.SeriesRow(
                time_s=t,
                nodes=nodes,
                pods=pods,
                avg_cpu_util=util,
                required_pods=required,
                offered_rps=rps,
                accrued_cost_usd=cost,
            )
            for t, nodes, pods, util, required, rps, cost in result.series
        ],
        decisions=[schemas.DecisionRow(time_s=t, decision=d) for t, d in result.decision_log],
        node_log=[
            schemas.NodeLogRow(
                node_id=nid,
                instance_type=itype,
                zone=zone,
                requested_t=req_t,
                active_from=a_from,
                active_to=a_to,
            )
            for nid, itype, zone, req_t, a_from, a_to in result.node_log
        ],
    )


def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    scenario = load_scenario(req.scenario, read_file_from_map(req.files))
    return _sim_response(sim_run(scenario, policy=req.policy, seed=req.seed))


def compare(req: schemas.CompareRequest) -> schemas.CompareResponse:
    scenario = load_scenario(req.scenario, read_file_from_map(req.files))
    result = sim_compare(scenario, seed=req.seed, baseline=req.baseline)
    return schemas.CompareResponse(
        spotkube=_sim_response(result.spotkube),
        baseline=_sim_response(result.baseline),
        savings_pct=result.savings_pct,
    )
