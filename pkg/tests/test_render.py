import xml.etree.ElementTree as ET

import pytest

from evplan.candgen import ExistingStation, build_catalog
from evplan.netcore import Edge, Network, NetworkPoint, Vertex, build_od_pairs
from evplan.planner import FcsPlan
from evplan.render import RenderError, count_elements, render_periods, render_svg

from .conftest import RANGE


def test_network_only_map(worked):
    net, _ = worked
    svg = render_svg(net, title="demo")
    ET.fromstring(svg)
    assert count_elements(svg, "edge") == len(net.edges)
    assert count_elements(svg, "vertex") == len(net.vertices)
    assert count_elements(svg, "endpoint") == 0
    assert "<title>demo</title>" in svg


def test_catalog_and_plan_layers(worked):
    net, table = worked
    pairs = build_od_pairs(net, table, RANGE)
    st = [ExistingStation("E1", NetworkPoint.at_vertex("v16"))]
    cat = build_catalog(net, table, pairs, RANGE, st)
    plan = FcsPlan([cat.endpoints[0].id], [], 0.0, {})
    svg = render_svg(net, cat, plan)
    assert count_elements(svg, "existing") == 1
    assert count_elements(svg, "endpoint") == len(cat)
    assert count_elements(svg, "fcs") == 1


def test_periods_are_deterministic(worked):
    net, _ = worked
    a = render_periods(net, None, None, None, None, 3, "x")
    assert len(a) == 3 and a == render_periods(net, None, None, None, None, 3, "x")
    assert "x period 2" in a[1]


def test_missing_coordinates():
    net = Network([Vertex("a", "1"), Vertex("b", "1")], [Edge("a", "b", 1.0)])
    with pytest.raises(RenderError):
        render_svg(net)
