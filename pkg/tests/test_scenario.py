import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from admflux.flux_integrals import FluxSeries, LimitVerdict
from admflux.scenario import (
    CSV_COLUMNS,
    QuantityResult,
    Scenario,
    ScenarioError,
    ScenarioReport,
    build_source,
    default_exponents,
    exact_values,
    load_scenario,
    run_scenario,
)
from admflux.sources import ExpansionSource, GraphSource

from conftest import polynomials

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _doc(**kw):
    base = {
        "ambient": {"kind": "minkowski"},
        "graph": [{"power": "1/3", "A": "x1*x2^3"}],
        "quantities": ["J"],
        "radii": [100.0, 1000.0, 10000.0],
    }
    base.update(kw)
    return base


# serialization


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_bundled_scenarios_load_and_round_trip(path):
    s = load_scenario(path)
    text = s.dumps()
    assert Scenario.loads(text) == s
    assert Scenario.loads(text).dumps() == text


@st.composite
def scenario_docs(draw):
    kind = draw(st.sampled_from(["minkowski", "schwarzschild"]))
    mass = "0" if kind == "minkowski" else str(draw(st.fractions(0, 3, max_denominator=4)))
    n_terms = draw(st.integers(1, 2))
    powers = draw(st.lists(st.fractions(0, Fraction(2, 5), max_denominator=15), min_size=n_terms, max_size=n_terms, unique=True))
    graph = [{"power": str(p), "A": str(draw(polynomials(4, 3)))} for p in powers]
    start = draw(st.floats(7.0, 1e3))
    radii = [start * 10.0**k for k in range(draw(st.integers(1, 5)))]
    quantities = draw(st.lists(st.sampled_from(["E", "P", "J", "C"]), min_size=1, max_size=4, unique=True))
    doc = {
        "ambient": {"kind": kind, "mass": mass},
        "graph": graph,
        "quantities": quantities,
        "radii": radii,
        "quadrature_degree": draw(st.integers(4, 60)),
        "j_method": draw(st.sampled_from(["auto", "spherical", "cartesian"])),
        "exact": draw(st.booleans()),
        "format": draw(st.sampled_from(["csv", "json"])),
        "seed": draw(st.integers(0, 2**31)),
    }
    vec = [q for q in quantities if q != "E"]
    if vec and draw(st.booleans()):
        doc["axes"] = {vec[0]: sorted(draw(st.sets(st.integers(1, 3), min_size=1)))}
    return doc


@given(scenario_docs())
def test_round_trip_is_idempotent(doc):
    s = Scenario.from_dict(doc)
    again = Scenario.loads(s.dumps())
    assert again == s
    assert again.dumps() == s.dumps()


def test_defaults_fill_missing_fields():
    s = Scenario.from_dict({"graph": [{"power": "0", "A": "x1"}]})
    assert s.kind == "minkowski" and s.quantities == ("E", "P", "J", "C")
    assert s.radii == (1e2, 1e3, 1e4, 1e5) and s.quadrature_degree == 24
    assert s.axes_for("E") == (None,) and s.axes_for("J") == (1, 2, 3)


def test_explicit_family_round_trip():
    s = load_scenario(SCENARIOS / "divergent_example.json")
    assert s.explicit["q"] == Fraction(3, 5)
    assert isinstance(build_source(s), ExpansionSource)
    assert s.graph_function is None


@pytest.mark.parametrize(
    "patch,fragment",
    [
        ({"ambient": {"kind": "de Sitter"}}, "ambient.kind"),
        ({"ambient": {"kind": "minkowski", "mass": "1"}}, "ambient.mass"),
        ({"ambient": {"kind": "schwarzschild", "mass": 1.5}}, "ambient.mass"),
        ({"ambient": {"kind": "schwarzschild", "mass": "-1"}}, "ambient.mass"),
        ({"ambient": {"kind": "schwarzschild", "mass": "100"}}, "horizon"),
        ({"graph": [{"power": "1/3"}]}, "graph[0]"),
        ({"graph": [{"power": "one third", "A": "x1"}]}, "graph[0].power"),
        ({"graph": [{"power": "1/3", "A": "x1 +"}]}, "graph[0].A"),
        ({"graph": [{"power": "1/3", "A": "y"}]}, "graph[0].A"),
        ({"quantities": []}, "quantities"),
        ({"quantities": ["E", "E"]}, "duplicates"),
        ({"quantities": ["M"]}, "quantities"),
        ({"quantities": "J"}, "quantities"),
        ({"axes": {"E": [1]}}, "axes"),
        ({"axes": {"J": [4]}}, "axes.J"),
        ({"radii": []}, "radii"),
        ({"radii": [10.0, 5.0]}, "increasing"),
        ({"radii": [-1.0]}, "positive"),
        ({"radii": ["big"]}, "radii[0]"),
        ({"radii": [float("inf")]}, "finite"),
        ({"quadrature_degree": 0}, "quadrature_degree"),
        ({"j_method": "magic"}, "j_method"),
        ({"format": "xml"}, "format"),
        ({"colour": "blue"}, "unknown keys"),
        ({"explicit": {"family": "divergent-momentum", "q": "3/5", "alpha": "x1^2", "beta": "x1*x3"}}, "not both"),
    ],
)
def test_validation_errors_name_the_field(patch, fragment):
    with pytest.raises(ScenarioError, match=None) as err:
        Scenario.from_dict(_doc(**patch))
    assert fragment in str(err.value)


@pytest.mark.parametrize(
    "explicit,fragment",
    [
        ({"family": "other", "q": "3/5", "alpha": "x1", "beta": "x1"}, "explicit.family"),
        ({"family": "divergent-momentum", "q": "2", "alpha": "x1", "beta": "x1"}, "explicit.q"),
        ({"family": "divergent-momentum", "alpha": "x1", "beta": "x1"}, "explicit.q"),
        ({"family": "divergent-momentum", "q": "3/5", "alpha": "x1", "beta": "x1", "B": ["0"]}, "explicit.B"),
        ({"family": "divergent-momentum", "q": "3/5", "alpha": "x1", "beta": "x1", "extra": 1}, "unknown keys"),
    ],
)
def test_explicit_validation(explicit, fragment):
    with pytest.raises(ScenarioError) as err:
        Scenario.from_dict({"explicit": explicit, "quantities": ["J"]})
    assert fragment in str(err.value)


def test_invalid_json_reports_position(tmp_path):
    with pytest.raises(ScenarioError, match="line 2"):
        Scenario.loads('{\n  "radii": [1,, 2]\n}')
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "missing.json")
    with pytest.raises(ScenarioError):
        Scenario.loads("[1, 2]")


# regimes


def test_default_exponents_by_regime():
    s = Scenario.from_dict(_doc())
    assert default_exponents(s, "J") == (1.0, pytest.approx(4 / 3), 2.0)
    assert default_exponents(s, "E") == (pytest.approx(1 / 3), 1.0, pytest.approx(4 / 3), 2.0)
    assert default_exponents(s, "C") is None
    c = Scenario.from_dict(_doc(graph=[{"power": "0", "A": "x1"}]))
    assert default_exponents(c, "C") == (1.0, 2.0)
    custom = Scenario.from_dict(_doc(exponents={"J": ["1/2", 1]}))
    assert default_exponents(custom, "J") == (0.5, 1.0)


def test_exact_values_by_regime():
    s = Scenario.from_dict(_doc())
    assert exact_values(s, "J") == (0, 0, Fraction(2, 231))
    assert exact_values(s, "E") == 0
    c = Scenario.from_dict(_doc(graph=[{"power": "0", "A": "x1 + x1*x2"}]))
    assert exact_values(c, "C") == (0, Fraction(-1, 5), 0)
    sch = Scenario.from_dict({"ambient": {"kind": "schwarzschild", "mass": "3"}, "quantities": ["E"], "radii": [10.0]})
    assert exact_values(sch, "E") == 3
    two = Scenario.from_dict(_doc(graph=[{"power": "1/3", "A": "x1"}, {"power": "0", "A": "x2"}]))
    assert exact_values(two, "J") is None


# running


def test_minkowski_scenario_agrees_with_exact():
    rep = run_scenario(load_scenario(SCENARIOS / "minkowski_J.json"))
    j3 = rep.result("J", 3)
    assert j3.verdict.is_finite and j3.agrees
    assert j3.exact == Fraction(2, 231)
    assert abs(j3.verdict.value - 2 / 231) <= 1e-3 * 2 / 231
    assert rep.all_agree and not rep.any_divergent


def test_divergent_scenario_is_flagged():
    rep = run_scenario(load_scenario(SCENARIOS / "divergent_example.json"))
    res = rep.result("J", 2)
    assert res.verdict.is_divergent and res.verdict.exponent == pytest.approx(0.4, abs=0.05)
    assert rep.any_divergent


def test_csv_output_is_deterministic_and_well_formed():
    s = Scenario.from_dict(_doc(quantities=["E", "J"], axes={"J": [3]}))
    a = run_scenario(s).to_csv()
    b = run_scenario(Scenario.loads(s.dumps())).to_csv()
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert tuple(rows[0]) == tuple(CSV_COLUMNS)
    assert len(rows) == 1 + 2 * len(s.radii)
    assert {r[0] for r in rows[1:]} == {"E", "J"}
    for r in rows[1:]:
        float(r[2])
        float(r[3])


def test_report_serializes_missing_numbers():
    series = FluxSeries(np.array([1.0, 2.0]), np.array([0.5, 0.25]), "E", None)
    res = QuantityResult("E", None, series, LimitVerdict("indeterminate", 0.25))
    rep = ScenarioReport(Scenario.from_dict(_doc()), (res,))
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[1][1] == "" and rows[1][5] == ""
    doc = json.loads(rep.to_json())
    assert doc["results"][0]["exponent"] is None and doc["results"][0]["error"] is None
    assert rep.render("json") == rep.to_json() and rep.render() == rep.to_csv()
    with pytest.raises(ValueError):
        rep.render("xml")
    with pytest.raises(KeyError):
        rep.result("J", 1)


def test_two_radii_are_reported_without_fit():
    s = Scenario.from_dict(_doc(radii=[100.0, 1000.0], axes={"J": [3]}))
    res = run_scenario(s).result("J", 3)
    assert res.verdict.kind == "indeterminate" and res.agrees is False
    assert math.isfinite(res.verdict.value)


def test_build_source_kinds():
    assert isinstance(build_source(Scenario.from_dict(_doc())), GraphSource)
    s = Scenario.from_dict({"ambient": {"kind": "schwarzschild", "mass": "1"}, "quantities": ["E"]})
    assert build_source(s).ambient.mass == 1.0
