"""``evplan`` command-line tool: candidates, weights, plans, schedules and maps.

Every command reads one JSON pipeline config (paths are relative to the
config file), validates all inputs, computes in memory and only then writes
its outputs. Exit codes: 0 success, 2 invalid input, 3 a solver limit was
reached (the incumbent is still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from . import io as fio
from .candgen import EndpointCatalog, ExistingStation, build_catalog, existing_domain, uncovered_pairs
from .equity import BwmInput, EquityError, EquityProfile, ZoneFactorTable, build_profile
from .milp import BACKENDS, ModelError, SolverError, Status, export_lp
from .netcore import DistanceTable, Network, NetworkError, ODPair, RangeConfig, build_distance_table, build_od_pairs
from .planner import (
    ConsistencyError,
    FcsPlan,
    KpiReport,
    McsSchedule,
    PlanError,
    Stage1Config,
    Stage2Config,
    Stage2Problem,
    StageSets,
    build_stage1,
    build_stage2,
    check_schedule,
    derive_sets,
    kpi_report,
    solve_stage1,
    solve_stage2,
)
from .render import RenderError, render_periods
from .scenario import FlowTensor, ScenarioError, ScenarioSet, generate_flows

log = logging.getLogger("evplan")

EXIT_OK, EXIT_INVALID, EXIT_LIMIT = 0, 2, 3
INPUT_ERRORS = (fio.InputError, NetworkError, EquityError, ScenarioError, PlanError, RenderError, ModelError)


@dataclass
class PipelineConfig:
    """Resolved pipeline configuration.

    Attributes:
        network: network JSON file or CSV directory.
        stations: existing-station JSON (optional).
        zones, zones_meta: zone factor CSV and its direction/ordinal sidecar (optional).
        bwm: rating cases JSON (optional; without it every equity weight is 0).
        scenarios: scenario JSON (optional; defaults apply).
        cases: subset of BWM case names to plan for (default: all).
        stage1_backend, stage2_backend: solver per stage (``bnb`` or ``highs``).
    """

    network: Path
    out: Path
    stations: Path | None = None
    zones: Path | None = None
    zones_meta: Path | None = None
    bwm: Path | None = None
    scenarios: Path | None = None
    range: RangeConfig = field(default_factory=lambda: RangeConfig(10.0, 0.5))
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config = field(default_factory=Stage2Config)
    cases: list[str] | None = None
    seed: int | None = None
    normalize_probs: bool = False
    stage1_backend: str = "bnb"
    stage2_backend: str = "highs"
    node_limit: int | None = None
    time_limit: float | None = None

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        path = Path(path)
        data = fio._read_json(path)
        if not isinstance(data, dict):
            raise fio.InputError(f"{path}: config must be a JSON object")
        base = path.parent

        def p(key: str, required: bool = False) -> Path | None:
            val = data.get(key)
            if val is None:
                if required:
                    raise fio.InputError(f"{path}: missing required entry {key!r}")
                return None
            resolved = (base / val).resolve()
            if not resolved.exists():
                raise fio.InputError(f"{path}: {key} file {val!r} does not exist")
            return resolved

        solver = data.get("solver", {})
        try:
            rng = RangeConfig(**data.get("range", {"R": 10.0, "alpha": 0.5}))
            s1 = Stage1Config(**data.get("stage1", {}))
            s2 = Stage2Config(**data.get("stage2", {}))
        except TypeError as exc:
            raise fio.InputError(f"{path}: {exc}") from None
        cfg = cls(
            network=p("network", required=True),
            out=(base / data.get("out", "out")).resolve(),
            stations=p("stations"),
            zones=p("zones"),
            zones_meta=p("zones_meta"),
            bwm=p("bwm"),
            scenarios=p("scenarios"),
            range=rng,
            stage1=s1,
            stage2=s2,
            cases=data.get("cases"),
            seed=data.get("seed"),
            normalize_probs=bool(data.get("normalize_probs", False)),
            stage1_backend=solver.get("stage1", "bnb"),
            stage2_backend=solver.get("stage2", "highs"),
            node_limit=solver.get("node_limit"),
            time_limit=solver.get("time_limit_s"),
        )
        for b in (cfg.stage1_backend, cfg.stage2_backend):
            if b not in BACKENDS:
                raise fio.InputError(f"{path}: unknown solver {b!r}; expected one of {BACKENDS}")
        if (cfg.zones is None) != (cfg.zones_meta is None):
            raise fio.InputError(f"{path}: 'zones' and 'zones_meta' must be given together")
        return cfg


# --------------------------------------------------------------------------- in-memory pipeline


@dataclass
class Inputs:
    network: Network
    table: DistanceTable
    stations: list[ExistingStation]
    zone_table: ZoneFactorTable | None
    bwm: dict[str, BwmInput]
    scenarios: ScenarioSet


@dataclass
class Candidates:
    pairs: list[ODPair]
    domain: list[ODPair]
    catalog: EndpointCatalog


@dataclass
class CaseResult:
    name: str
    profile: EquityProfile | None
    mu_q: dict[ODPair, float]
    plan: FcsPlan | None = None
    sets: StageSets | None = None
    problem2: Stage2Problem | None = None
    schedule: McsSchedule | None = None
    report: KpiReport | None = None
    models: dict[str, Any] = field(default_factory=dict)


def load_inputs(cfg: PipelineConfig) -> Inputs:
    network = fio.load_network(cfg.network)
    network.validate_range(cfg.range)
    table = build_distance_table(network)
    stations = fio.load_stations(cfg.stations, network) if cfg.stations else []
    zone_table = fio.load_zone_table(cfg.zones, cfg.zones_meta) if cfg.zones else None
    bwm = fio.load_bwm(cfg.bwm) if cfg.bwm else {}
    if bwm and zone_table is None:
        raise fio.InputError("BWM cases need a zone factor table ('zones' and 'zones_meta')")
    if cfg.cases:
        unknown = [c for c in cfg.cases if c not in bwm]
        if unknown:
            raise fio.InputError(f"unknown case {unknown[0]!r}; available: {sorted(bwm)}")
        bwm = {c: bwm[c] for c in cfg.cases}
    scenarios = fio.load_scenarios(cfg.scenarios, seed=cfg.seed, normalize_probs=cfg.normalize_probs)
    if not cfg.normalize_probs:
        scenarios.warn_if_unnormalized()
    return Inputs(network, table, stations, zone_table, bwm, scenarios)


def run_candidates(cfg: PipelineConfig, inp: Inputs) -> Candidates:
    pairs = build_od_pairs(inp.network, inp.table, cfg.range)
    if not pairs:
        log.warning("no O-D pair has positive flow within range; the catalog is empty")
    domain = existing_domain(inp.network, inp.table, inp.stations, pairs, cfg.range)
    q = uncovered_pairs(pairs, domain)
    catalog = build_catalog(inp.network, inp.table, q, cfg.range, inp.stations)
    return Candidates(pairs, domain, catalog)


def run_weights(inp: Inputs, cand: Candidates) -> list[CaseResult]:
    if not inp.bwm:
        log.warning("no BWM cases configured; all equity weights are 0")
        return [CaseResult("base", None, {q: 0.0 for q in cand.pairs})]
    out = []
    for name, rating in inp.bwm.items():
        prof = build_profile(rating, inp.zone_table, inp.network, cand.pairs)
        out.append(CaseResult(name, prof, prof.mu_q))
    return out


def _worst(statuses: Sequence[Status]) -> int:
    return EXIT_LIMIT if any(s is Status.LIMIT_REACHED for s in statuses) else EXIT_OK


def run_stage1(cfg: PipelineConfig, inp: Inputs, cand: Candidates, case: CaseResult) -> None:
    prob = build_stage1(cand.catalog, None, case.mu_q, cfg.stage1)
    case.models["stage1"] = prob.model
    case.plan = solve_stage1(prob, cfg.stage1_backend, cfg.node_limit, cfg.time_limit)
    case.sets = derive_sets(case.plan, inp.stations, cand.catalog)


def run_stage2(cfg: PipelineConfig, inp: Inputs, cand: Candidates, case: CaseResult, tensor: FlowTensor, solve: bool = True) -> None:
    case.problem2 = build_stage2(case.sets, cand.catalog, tensor, inp.scenarios, case.mu_q, inp.table, cfg.stage2)
    case.models["stage2"] = case.problem2.model
    if solve:
        case.schedule = solve_stage2(case.problem2, cfg.stage2_backend, cfg.node_limit, cfg.time_limit)
        bad = check_schedule(case.problem2, case.schedule)
        if bad:
            raise ConsistencyError(f"case {case.name}: schedule violates {bad[0]}")
        case.report = kpi_report(case.plan, case.schedule, case.problem2, case.name)


# --------------------------------------------------------------------------- commands


@dataclass
class Outputs:
    """Files to write, collected so nothing is written before all computation succeeds."""

    root: Path
    json: dict[str, Any] = field(default_factory=dict)
    csv: dict[str, tuple[Sequence[str], list]] = field(default_factory=dict)
    text: dict[str, str] = field(default_factory=dict)

    def flush(self) -> list[Path]:
        written = []
        for rel, obj in sorted(self.json.items()):
            written.append(fio.write_json(self.root / rel, obj))
        for rel, (header, rows) in sorted(self.csv.items()):
            written.append(fio.write_csv(self.root / rel, header, rows))
        for rel, txt in sorted(self.text.items()):
            path = self.root / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(txt, encoding="utf-8")
            written.append(path)
        return written


def _emit_candidates(out: Outputs, cand: Candidates) -> None:
    out.json["candidates/catalog.json"] = fio.catalog_to_dict(cand.catalog)
    out.json["candidates/summary.json"] = fio.catalog_summary(cand.catalog, cand.pairs, cand.domain)


def _emit_weights(out: Outputs, cases: list[CaseResult]) -> None:
    for c in cases:
        if c.profile is not None:
            out.json[f"weights/{c.name}.json"] = fio.equity_to_dict(c.name, c.profile)


def _emit_plans(out: Outputs, cand: Candidates, cases: list[CaseResult]) -> None:
    for c in cases:
        out.json[f"plan/{c.name}.json"] = {**fio.plan_to_dict(c.name, c.plan, cand.catalog), "sets": fio.sets_to_dict(c.sets)}


def _emit_schedules(out: Outputs, cases: list[CaseResult], tensor: FlowTensor, scenarios: ScenarioSet) -> None:
    rows, kpis = [], {}
    for c in cases:
        out.json[f"schedule/{c.name}.json"] = fio.schedule_to_dict(c.name, c.schedule)
        out.csv[f"schedule/{c.name}.csv"] = (fio.SCHEDULE_HEADER, fio.schedule_rows(c.report))
        rows.append(fio.kpi_row(c.name, c.report))
        kpis[c.name] = fio.kpi_to_dict(c.name, c.report)
    out.json["kpi.json"] = kpis
    out.csv["kpi.csv"] = (fio.KPI_HEADER, rows)
    out.csv["flows.csv"] = (("t", "s", "i", "j", "flow"), fio.tensor_rows(tensor, scenarios))


def cmd_candidates(cfg: PipelineConfig) -> int:
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    out = Outputs(cfg.out)
    _emit_candidates(out, cand)
    out.flush()
    log.info("%d endpoints for %d uncovered pairs", len(cand.catalog), len(cand.catalog.pairs))
    return EXIT_OK


def cmd_weights(cfg: PipelineConfig) -> int:
    inp = load_inputs(cfg)
    if not inp.bwm:
        raise fio.InputError("the weights command needs 'bwm', 'zones' and 'zones_meta' in the config")
    cand = run_candidates(cfg, inp)
    cases = run_weights(inp, cand)
    out = Outputs(cfg.out)
    _emit_weights(out, cases)
    out.flush()
    return EXIT_OK


def cmd_plan(cfg: PipelineConfig) -> int:
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    cases = run_weights(inp, cand)
    for c in cases:
        run_stage1(cfg, inp, cand, c)
    out = Outputs(cfg.out)
    _emit_plans(out, cand, cases)
    out.flush()
    return _worst([c.plan.status for c in cases])


def _through_stage2(cfg: PipelineConfig) -> tuple[Inputs, Candidates, list[CaseResult], FlowTensor]:
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    cases = run_weights(inp, cand)
    tensor = generate_flows(cand.catalog.pairs, inp.scenarios)
    for c in cases:
        run_stage1(cfg, inp, cand, c)
        run_stage2(cfg, inp, cand, c, tensor)
    return inp, cand, cases, tensor


def cmd_schedule(cfg: PipelineConfig) -> int:
    inp, cand, cases, tensor = _through_stage2(cfg)
    out = Outputs(cfg.out)
    _emit_plans(out, cand, cases)
    _emit_schedules(out, cases, tensor, inp.scenarios)
    out.flush()
    return _worst([s for c in cases for s in (c.plan.status, c.schedule.status)])


def cmd_pipeline(cfg: PipelineConfig) -> int:
    inp, cand, cases, tensor = _through_stage2(cfg)
    out = Outputs(cfg.out)
    _emit_candidates(out, cand)
    _emit_weights(out, cases)
    _emit_plans(out, cand, cases)
    _emit_schedules(out, cases, tensor, inp.scenarios)
    out.flush()
    return _worst([s for c in cases for s in (c.plan.status, c.schedule.status)])


def cmd_render(cfg: PipelineConfig) -> int:
    inp = load_inputs(cfg)
    if not inp.network.has_coordinates:
        raise RenderError("cannot render: some vertices lack x/y coordinates")
    _, cand, cases, _ = _through_stage2(cfg)
    out = Outputs(cfg.out)
    for c in cases:
        svgs = render_periods(inp.network, cand.catalog, c.plan, c.sets, c.schedule, inp.scenarios.periods, f"case {c.name}")
        for t, svg in enumerate(svgs):
            out.text[f"svg/{c.name}_period{t + 1}.svg"] = svg
    out.flush()
    return _worst([s for c in cases for s in (c.plan.status, c.schedule.status)])


def cmd_export_lp(cfg: PipelineConfig) -> int:
    inp = load_inputs(cfg)
    cand = run_candidates(cfg, inp)
    cases = run_weights(inp, cand)
    tensor = generate_flows(cand.catalog.pairs, inp.scenarios)
    for c in cases:
        run_stage1(cfg, inp, cand, c)
        run_stage2(cfg, inp, cand, c, tensor, solve=False)
    cfg.out.mkdir(parents=True, exist_ok=True)
    for c in cases:
        for stage, model in c.models.items():
            export_lp(model, cfg.out / f"{c.name}_{stage}.lp")
    return _worst([c.plan.status for c in cases])


COMMANDS: dict[str, Callable[[PipelineConfig], int]] = {
    "candidates": cmd_candidates,
    "weights": cmd_weights,
    "plan": cmd_plan,
    "schedule": cmd_schedule,
    "pipeline": cmd_pipeline,
    "render": cmd_render,
    "export-lp": cmd_export_lp,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evplan", description="Charging-station planning on road networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "candidates": "generate candidate endpoints",
        "weights": "compute factor, zone and O-D equity weights",
        "plan": "solve the fixed-station placement",
        "schedule": "solve placement and the mobile-station schedule",
        "pipeline": "run every step and write all outputs",
        "render": "draw one SVG map per period",
        "export-lp": "write the placement and scheduling models in LP format",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="pipeline config JSON")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--out", type=Path, help="override the output directory")
        p.add_argument("--normalize-probs", action="store_true", help="rescale scenario probabilities to sum to 1")
        p.add_argument("--node-limit", type=int, help="branch-and-bound node cap per solve")
        p.add_argument("--time-limit-s", type=float, help="wall-clock cap per solve in seconds")
        p.add_argument("--solver", choices=BACKENDS, help="use this backend for both stages")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def apply_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    changes: dict[str, Any] = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out.resolve()
    if args.normalize_probs:
        changes["normalize_probs"] = True
    if args.node_limit is not None:
        changes["node_limit"] = args.node_limit
    if args.time_limit_s is not None:
        changes["time_limit"] = args.time_limit_s
    if args.solver is not None:
        changes["stage1_backend"] = changes["stage2_backend"] = args.solver
    return replace(cfg, **changes)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = apply_overrides(PipelineConfig.load(args.config), args)
        code = COMMANDS[args.command](cfg)
    except INPUT_ERRORS as exc:
        print(f"evplan: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, ConsistencyError) as exc:
        print(f"evplan: solver failure: {exc}", file=sys.stderr)
        return 1
    if code == EXIT_LIMIT:
        print("evplan: a solver limit was reached; incumbent solutions were written", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
