import json

import pytest

from evplan import io as fio
from evplan.netcore import ODPair

from .conftest import DATA


def test_number_formats():
    assert fio.money(1234.5) == "1234.50"
    assert fio.money(-0.004) == "-0.00"
    assert fio.num(1 / 3) == "0.333333"


def test_json_is_sorted_and_newline_terminated(tmp_path):
    path = fio.write_json(tmp_path / "a" / "x.json", {"b": 1, "a": {"d": 2, "c": 3}})
    text = path.read_text()
    assert text.endswith("\n")
    assert list(json.loads(text)) == ["a", "b"]
    assert text.index('"c"') < text.index('"d"')


def test_csv_writer(tmp_path):
    path = fio.write_csv(tmp_path / "x.csv", ("a", "b"), [[1, "x,y"], [2, "z"]])
    assert path.read_text() == 'a,b\n1,"x,y"\n2,z\n'


def _csv_network(folder, vertices, edges, flows=None):
    folder.mkdir()
    (folder / "vertices.csv").write_text(vertices)
    (folder / "edges.csv").write_text(edges)
    if flows is not None:
        (folder / "flows.csv").write_text(flows)
    return folder


def test_csv_network_matches_json(tmp_path):
    js = fio.load_network(DATA / "worked_example" / "network.json")
    d = fio.network_to_dict(js)
    folder = _csv_network(
        tmp_path / "net",
        "id,zone,x,y\n" + "".join(f"{v['id']},{v['zone']},{v['x']},{v['y']}\n" for v in d["vertices"]),
        "a,b,length\n" + "".join(f"{e['a']},{e['b']},{e['length']}\n" for e in d["edges"]),
        "i,j,f\n" + "".join(f"{f['i']},{f['j']},{f['f']}\n" for f in d["flows"]),
    )
    assert fio.network_to_dict(fio.load_network(folder)) == d


@pytest.mark.parametrize(
    "vertices, edges, flows, where",
    [
        ("id,zone\na,1\nb,1\n", "a,b,length\na,c,1\n", None, "edges.csv:2"),
        ("id,zone\na,1\nb,1\n", "a,b,length\na,b,1\na,b,oops\n", None, "edges.csv:3"),
        ("id,zone\na,1\nb,1\n", "a,b,length\na,b,1\n", "i,j,f\na,b,1\nb,a,2\n", "flows.csv:3"),
        ("id,zone\na,1\nb,1\n", "a,b\na,b\n", None, "edges.csv"),
        ("id\na\n", "a,b,length\n", None, "vertices.csv"),
    ],
)
def test_csv_network_errors_name_file_and_line(tmp_path, vertices, edges, flows, where):
    folder = _csv_network(tmp_path / "net", vertices, edges, flows)
    with pytest.raises(fio.InputError, match=where.replace(".", r"\.")):
        fio.load_network(folder)


def test_json_network_errors(tmp_path):
    p = tmp_path / "n.json"
    p.write_text(json.dumps({"vertices": [{"id": "a"}], "edges": []}))
    with pytest.raises(fio.InputError, match="missing field"):
        fio.load_network(p)
    p.write_text(json.dumps({"vertices": [{"id": "a", "zone": "1"}], "edges": [{"a": "a", "b": "a", "length": 1}]}))
    with pytest.raises(fio.InputError):
        fio.load_network(p)
    with pytest.raises(fio.InputError, match="cannot read"):
        fio.load_network(tmp_path / "absent.json")


def test_stations_loader(tmp_path):
    net = fio.load_network(DATA / "worked_example" / "network.json")
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"stations": [{"id": "E1", "vertex": "v16"}]}))
    (st,) = fio.load_stations(p, net)
    assert st.id == "E1" and st.location.edge is None
    p.write_text(json.dumps({"stations": [{"id": "E1", "vertex": "nowhere"}]}))
    with pytest.raises(fio.InputError, match=r"stations\[0\]"):
        fio.load_stations(p, net)
    p.write_text(json.dumps({"stations": [{"id": "E1", "vertex": "v16"}, {"id": "E1", "vertex": "v17"}]}))
    with pytest.raises(fio.InputError, match="duplicate"):
        fio.load_stations(p, net)
    p.write_text("[]")
    with pytest.raises(fio.InputError, match="JSON object"):
        fio.load_stations(p, net)


def test_bwm_and_zone_loaders():
    cases = fio.load_bwm(DATA / "equity" / "bwm_cases.json")
    assert sorted(cases) == ["A", "B", "C", "D"]
    table = fio.load_zone_table(DATA / "equity" / "zones.csv", DATA / "equity" / "zones.json")
    assert table.zones == ("1", "2", "3", "4", "5", "6")


def test_scenario_loader_defaults_and_overrides():
    assert fio.load_scenarios(None).periods == 4
    ss = fio.load_scenarios(DATA / "scenarios.json", seed=3, normalize_probs=True)
    assert ss.seed == 3 and ss.probability_mass == pytest.approx(1.0)


def test_pair_dict():
    assert fio.pair_dict(ODPair("a", "b", 2.0)) == {"i": "a", "j": "b", "f": "2.000000"}
