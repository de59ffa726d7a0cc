"""Readers and writers for the file formats used by the command-line tool.

Numbers are written as fixed-point strings: money with 2 decimals, flows,
distances and weights with 6. JSON keys are sorted so repeated runs produce
identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .candgen import EndpointCatalog, ExistingStation
from .equity import BwmInput, EquityError, EquityProfile, ZoneFactorTable
from .netcore import Edge, Network, NetworkError, NetworkPoint, ODPair, Vertex
from .planner import FcsPlan, KpiReport, McsSchedule, StageSets
from .scenario import FlowTensor, ScenarioError, ScenarioSet


class InputError(ValueError):
    """Malformed input file; the message names the file and, when known, the line."""


def money(x: float) -> str:
    return f"{x:.2f}"


def num(x: float) -> str:
    return f"{x:.6f}"


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _read_json(path: Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def _read_object(path: Path) -> dict:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object at the top level")
    return data


def _read_csv(path: Path, required: Sequence[str]) -> list[tuple[int, dict[str, str]]]:
    """Rows with their 1-based file line numbers; header must contain ``required``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    reader = csv.DictReader(_io.StringIO(text))
    if reader.fieldnames is None:
        raise InputError(f"{path}:1: missing header row")
    header = [h.strip() for h in reader.fieldnames]
    missing = [c for c in required if c not in header]
    if missing:
        raise InputError(f"{path}:1: header lacks column {missing[0]!r}")
    rows = []
    for raw in reader:
        rows.append((reader.line_num, {k.strip(): (v or "").strip() for k, v in raw.items() if k is not None}))
    return rows


def _float(value: Any, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InputError(f"{where}: expected a number, got {value!r}") from None


# --------------------------------------------------------------------------- network


def load_network(path: str | Path) -> Network:
    """Read a network from a JSON file or a directory of ``vertices/edges/flows.csv``."""
    path = Path(path)
    if path.is_dir():
        return _network_from_csv(path)
    data = _read_json(path)
    try:
        verts = [
            Vertex(str(v["id"]), str(v["zone"]), v.get("x"), v.get("y"))
            for v in data["vertices"]
        ]
        edges = [Edge(str(e["a"]), str(e["b"]), _float(e["length"], f"{path}: edges[{n}]")) for n, e in enumerate(data["edges"])]
        flows = _flow_map(((str(f["i"]), str(f["j"]), _float(f["f"], f"{path}: flows[{n}]")) for n, f in enumerate(data.get("flows", []))), str(path))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: missing field {exc}") from None
    try:
        return Network(verts, edges, flows)
    except NetworkError as exc:
        raise InputError(f"{path}: {exc}") from None


def _flow_map(items: Iterable[tuple[str, str, float]], where: str, out: dict | None = None) -> dict[tuple[str, str], float]:
    out = {} if out is None else out
    for i, j, f in items:
        if (i, j) in out or (j, i) in out:
            raise InputError(f"{where}: duplicate flow entry for ({i},{j})")
        out[(i, j)] = f
    return out


def _network_from_csv(folder: Path) -> Network:
    vrows = _read_csv(folder / "vertices.csv", ("id", "zone"))
    verts = []
    for line, r in vrows:
        where = f"{folder / 'vertices.csv'}:{line}"
        x = _float(r["x"], where) if r.get("x") else None
        y = _float(r["y"], where) if r.get("y") else None
        verts.append(Vertex(r["id"], r["zone"], x, y))
    erows = _read_csv(folder / "edges.csv", ("a", "b", "length"))
    edges = []
    ids = {v.id for v in verts}
    for line, r in erows:
        where = f"{folder / 'edges.csv'}:{line}"
        for end in (r["a"], r["b"]):
            if end not in ids:
                raise InputError(f"{where}: unknown vertex {end!r}")
        edges.append(Edge(r["a"], r["b"], _float(r["length"], where)))
    flows: dict[tuple[str, str], float] = {}
    fpath = folder / "flows.csv"
    if fpath.exists():
        for line, r in _read_csv(fpath, ("i", "j", "f")):
            where = f"{fpath}:{line}"
            for end in (r["i"], r["j"]):
                if end not in ids:
                    raise InputError(f"{where}: unknown vertex {end!r}")
            _flow_map([(r["i"], r["j"], _float(r["f"], where))], where, flows)
    try:
        return Network(verts, edges, flows)
    except NetworkError as exc:
        raise InputError(f"{folder}: {exc}") from None


def network_to_dict(network: Network) -> dict:
    verts = []
    for v in network.vertices:
        d: dict[str, Any] = {"id": v.id, "zone": v.zone}
        if v.x is not None and v.y is not None:
            d["x"], d["y"] = v.x, v.y
        verts.append(d)
    return {
        "vertices": verts,
        "edges": [{"a": e.a, "b": e.b, "length": e.length} for e in network.edges],
        "flows": [{"i": i, "j": j, "f": f} for (i, j), f in network.flows.items()],
    }


# --------------------------------------------------------------------------- stations


def point_from_dict(network: Network, d: Mapping, where: str) -> NetworkPoint:
    try:
        if "vertex" in d:
            pt = NetworkPoint.at_vertex(str(d["vertex"]))
        else:
            a, b = d["edge"]
            pt = NetworkPoint.on_edge(network, str(a), str(b), _float(d.get("offset", 0.0), where), from_vertex=str(a))
        pt.validate(network)
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc}") from None
    except NetworkError as exc:
        raise InputError(f"{where}: {exc}") from None
    return pt


def point_to_dict(pt: NetworkPoint) -> dict:
    if pt.is_vertex:
        return {"vertex": pt.vertex}
    return {"edge": list(pt.edge), "offset": num(pt.offset)}


def load_stations(path: str | Path, network: Network) -> list[ExistingStation]:
    data = _read_object(Path(path))
    out = []
    seen = set()
    for n, s in enumerate(data.get("stations", [])):
        where = f"{path}: stations[{n}]"
        if "id" not in s:
            raise InputError(f"{where}: missing field 'id'")
        sid = str(s["id"])
        if sid in seen:
            raise InputError(f"{where}: duplicate station id {sid!r}")
        seen.add(sid)
        out.append(ExistingStation(sid, point_from_dict(network, s, where)))
    return out


# --------------------------------------------------------------------------- equity inputs


def load_zone_table(csv_path: str | Path, meta_path: str | Path) -> ZoneFactorTable:
    """Zone factors from CSV (``zone, factor_1, ...``) plus a JSON sidecar.

    The sidecar holds ``{"directions": {factor: "increasing"|"decreasing"},
    "ordinals": {factor: {label: value}}}``. Factor order follows the CSV
    header; every factor column needs a direction.
    """
    meta = _read_object(Path(meta_path))
    directions = meta.get("directions")
    if not isinstance(directions, dict) or not directions:
        raise InputError(f"{meta_path}: 'directions' must map each factor to a direction")
    rows = _read_csv(Path(csv_path), ("zone", *directions))
    with open(csv_path, encoding="utf-8", newline="") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    factors = [h for h in header if h != "zone"]
    extra = [f for f in factors if f not in directions]
    if extra:
        raise InputError(f"{meta_path}: no direction given for factor {extra[0]!r}")
    records = {}
    for line, r in rows:
        if r["zone"] in records:
            raise InputError(f"{csv_path}:{line}: duplicate zone {r['zone']!r}")
        records[r["zone"]] = {f: r[f] for f in factors}
    try:
        return ZoneFactorTable.from_records(records, {f: directions[f] for f in factors}, meta.get("ordinals"))
    except (EquityError, ValueError) as exc:
        raise InputError(f"{csv_path}: {exc}") from None


def load_bwm(path: str | Path) -> dict[str, BwmInput]:
    """One or more rating cases; ``{"cases": [{"name": ..., ...}]}`` or a single case."""
    data = _read_json(Path(path))
    cases = data.get("cases", [data]) if isinstance(data, dict) else None
    if not cases:
        raise InputError(f"{path}: no BWM cases")
    out = {}
    for n, c in enumerate(cases):
        name = str(c.get("name", n + 1 if len(cases) > 1 else "default"))
        try:
            out[name] = BwmInput.from_names(c["factors"], c["best"], c["worst"], c["best_to_others"], c["others_to_worst"])
        except KeyError as exc:
            raise InputError(f"{path}: case {name}: missing field {exc}") from None
        except EquityError as exc:
            raise InputError(f"{path}: case {name}: {exc}") from None
    return out


def load_scenarios(path: str | Path | None, seed: int | None = None, normalize_probs: bool = False) -> ScenarioSet:
    data = {} if path is None else _read_object(Path(path))
    try:
        return ScenarioSet.from_dict(data, seed=seed, normalize_probs=normalize_probs)
    except (ScenarioError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------- outputs


def pair_dict(q: ODPair) -> dict:
    return {"i": q.origin, "j": q.destination, "f": num(q.flow)}


def catalog_to_dict(catalog: EndpointCatalog) -> dict:
    net = catalog.network
    endpoints = []
    for ep, pairs, flow in zip(catalog.endpoints, catalog.covered_pairs, catalog.covered_flow):
        endpoints.append({
            "id": ep.id,
            "location": point_to_dict(ep.location),
            "zone": ep.location.zone(net),
            "covers": [q.label() for q in pairs],
            "covered_flow": num(flow),
        })
    existing = [
        {"id": u.id, "location": point_to_dict(u.location), "zone": u.location.zone(net), "existing": True}
        for u in catalog.existing
    ]
    return {
        "pairs": [pair_dict(q) for q in catalog.pairs],
        "endpoints": endpoints,
        "existing": existing,
        "matrix": [list(p) for p in catalog.sparse_pairs()],
    }


def catalog_summary(catalog: EndpointCatalog, all_pairs: Sequence[ODPair], domain: Sequence[ODPair]) -> dict:
    return {
        "od_pairs": len(all_pairs),
        "covered_by_existing": [q.label() for q in domain],
        "uncovered": len(catalog.pairs),
        "endpoints": len(catalog),
        "endpoints_by_zone": catalog.zone_partition(),
    }


def equity_to_dict(name: str, profile: EquityProfile) -> dict:
    res = profile.theta
    return {
        "case": name,
        "theta": {f: num(v) for f, v in res.as_dict().items()},
        "epsilon_star": num(res.epsilon_star),
        "bracket": [num(res.bracket[0]), num(res.bracket[1])],
        "normalized": {
            z: {f: num(profile.G[k, i]) for i, f in enumerate(profile.table.factors)}
            for k, z in enumerate(profile.table.zones)
        },
        "zone_weights": {z: num(v) for z, v in profile.mu_z.items()},
        "od_weights": {q.label(): num(v) for q, v in profile.mu_q.items()},
    }


def plan_to_dict(name: str, plan: FcsPlan, catalog: EndpointCatalog) -> dict:
    net = catalog.network
    sel = []
    for wid in plan.selected:
        ep = catalog.endpoint(wid)
        sel.append({"id": wid, "location": point_to_dict(ep.location), "zone": ep.location.zone(net)})
    return {
        "case": name,
        "status": plan.status.value,
        "objective": num(plan.objective),
        "cost": money(plan.cost),
        "selected": sel,
        "covered": [q.label() for q in plan.covered],
        "stations_by_zone": dict(plan.zone_counts),
    }


def sets_to_dict(sets: StageSets) -> dict:
    return {
        "N_f": list(sets.n_f),
        "N_m": list(sets.n_m),
        "Q_m": [q.label() for q in sets.q_m],
    }


SCHEDULE_HEADER = ("case", "mcs_id", "period", "point", "zone", "mode")


def schedule_rows(report: KpiReport) -> list[list[Any]]:
    return [[r[c] for c in SCHEDULE_HEADER] for r in report.table]


def schedule_to_dict(name: str, schedule: McsSchedule) -> dict:
    return {
        "case": name,
        "status": schedule.status.value,
        "objective": money(schedule.objective),
        "benefit": money(schedule.benefit),
        "relocation_cost": money(schedule.relocation_cost),
        "activated": [f"m{m + 1}" for m in schedule.activated],
        "relocations": [
            {"period": r.period + 1, "mcs_id": f"m{r.unit + 1}", "from": r.origin, "to": r.target, "miles": num(r.miles)}
            for r in schedule.relocations
        ],
        "served": {str(t + 1): [q.label() for q in qs] for t, qs in enumerate(schedule.served)},
    }


KPI_HEADER = ("case", "objective", "benefit", "relocation", "fcs_objective", "fcs_count", "mcs_active")


def kpi_row(name: str, report: KpiReport) -> list[str]:
    return [
        name,
        money(report.objective),
        money(report.benefit),
        money(report.relocation),
        num(report.fcs_objective),
        str(report.fcs_count),
        str(report.mcs_active),
    ]


def kpi_to_dict(name: str, report: KpiReport) -> dict:
    d = report.as_dict()
    return {
        "case": name,
        "objective": money(d["objective"]),
        "benefit": money(d["benefit"]),
        "relocation": money(d["relocation"]),
        "fcs_objective": num(d["fcs_objective"]),
        "fcs_count": d["fcs_count"],
        "fcs_by_zone": d["fcs_by_zone"],
        "mcs_active": d["mcs_active"],
        "serve_by_zone": d["serve_by_zone"],
    }


def tensor_rows(tensor: FlowTensor, scenario_set: ScenarioSet) -> list[list[str]]:
    rows = []
    T, S, _ = tensor.flows.shape
    for t in range(T):
        for s in range(S):
            for k, q in enumerate(tensor.pairs):
                rows.append([str(t + 1), scenario_set.scenarios[s].label, q.origin, q.destination, num(tensor.flows[t, s, k])])
    return rows


__all__ = [
    "InputError",
    "catalog_summary",
    "catalog_to_dict",
    "dumps",
    "equity_to_dict",
    "kpi_row",
    "kpi_to_dict",
    "load_bwm",
    "load_network",
    "load_scenarios",
    "load_stations",
    "load_zone_table",
    "money",
    "network_to_dict",
    "num",
    "plan_to_dict",
    "point_from_dict",
    "point_to_dict",
    "schedule_rows",
    "schedule_to_dict",
    "sets_to_dict",
    "tensor_rows",
    "write_csv",
    "write_json",
]
