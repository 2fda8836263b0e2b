"""Scenario files and the exact-plus-numeric pipeline behind the command line.

A scenario is a JSON document naming an initial data source, the flux
quantities to evaluate and the radii to sample.  Rational parameters are
written as strings ("1/3") so that exact powers never pass through binary
floating point.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .closed_forms import (
    C_POWER,
    J_POWER,
    ExactVector,
    angular_momentum_exact,
    center_of_mass_exact,
    schwarzschild_angular_momentum_exact,
)
from .expr import parse_expression
from .flux_integrals import QUANTITIES, FluxSeries, LimitVerdict, extrapolate_limit, surface_fluxes
from .hypersurface_geometry import Ambient, GraphFunction
from .sources import FluxSource, GraphSource, divergent_momentum_data
from .sphere_poly import SpherePolynomial

__all__ = [
    "ScenarioError",
    "Scenario",
    "QuantityResult",
    "ScenarioReport",
    "load_scenario",
    "build_source",
    "default_exponents",
    "exact_values",
    "run_scenario",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("quantity", "axis", "r", "value", "fitted_limit", "exponent", "verdict")
EXPLICIT_FAMILIES = ("divergent-momentum",)
J_METHODS = ("auto", "spherical", "cartesian", "symbolic")
FORMATS = ("csv", "json")


class ScenarioError(ValueError):
    """Invalid scenario document; the message names the offending key."""


def _rational(value, key: str) -> Fraction:
    if isinstance(value, bool):
        raise ScenarioError(f"{key}: expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ScenarioError(f"{key}: write rational values as strings such as \"1/3\", got float {value!r}")
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(f"{key}: cannot read {value!r} as a rational") from exc
    raise ScenarioError(f"{key}: expected a rational string, got {type(value).__name__}")


def _radius(value, key: str) -> float:
    if isinstance(value, bool):
        raise ScenarioError(f"{key}: expected a number, got {value!r}")
    try:
        r = float(value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{key}: expected a number, got {value!r}") from exc
    if not math.isfinite(r):
        raise ScenarioError(f"{key}: radius must be finite")
    return r


def _expression(text, key: str) -> SpherePolynomial:
    if not isinstance(text, str):
        raise ScenarioError(f"{key}: expected an expression string, got {text!r}")
    try:
        return parse_expression(text)
    except ValueError as exc:
        raise ScenarioError(f"{key}: {exc}") from exc


def _frac_str(q: Fraction) -> str:
    return str(q)


@dataclass(frozen=True)
class Scenario:
    kind: str = "minkowski"
    mass: Fraction = Fraction(0)
    graph: tuple[tuple[Fraction, SpherePolynomial], ...] = ()
    explicit: Mapping[str, Any] | None = None
    quantities: tuple[str, ...] = ("E", "P", "J", "C")
    axes: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    radii: tuple[float, ...] = (1e2, 1e3, 1e4, 1e5)
    quadrature_degree: int = 24
    max_degree: int | None = None
    j_method: str = "auto"
    exact: bool = True
    format: str = "csv"
    seed: int = 0
    exponents: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("minkowski", "schwarzschild"):
            raise ScenarioError(f"ambient.kind: unknown ambient {self.kind!r}")
        if self.mass < 0 or (self.kind == "minkowski" and self.mass != 0):
            raise ScenarioError(f"ambient.mass: invalid mass {self.mass} for {self.kind}")
        if self.explicit is not None and self.graph:
            raise ScenarioError("give either 'graph' or 'explicit', not both")
        if not self.quantities:
            raise ScenarioError("quantities: at least one quantity is required")
        for q in self.quantities:
            if q not in QUANTITIES:
                raise ScenarioError(f"quantities: unknown quantity {q!r}")
        if len(set(self.quantities)) != len(self.quantities):
            raise ScenarioError("quantities: duplicates are not allowed")
        for q, ax in self.axes.items():
            if q not in ("P", "J", "C"):
                raise ScenarioError(f"axes: {q!r} is not a vector quantity")
            if not ax or any(a not in (1, 2, 3) for a in ax):
                raise ScenarioError(f"axes.{q}: axes must be drawn from 1, 2, 3")
        r = self.radii
        if len(r) < 1:
            raise ScenarioError("radii: at least one radius is required")
        if any(x <= 0 for x in r):
            raise ScenarioError("radii: radii must be positive")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ScenarioError("radii: radii must be strictly increasing")
        if self.kind == "schwarzschild" and r[0] <= 2 * self.mass:
            raise ScenarioError(f"radii: all radii must exceed the horizon 2m = {2 * self.mass}")
        if self.quadrature_degree < 1:
            raise ScenarioError("quadrature_degree: must be a positive integer")
        if self.max_degree is not None and self.max_degree < 1:
            raise ScenarioError("max_degree: must be a positive integer")
        if self.j_method not in J_METHODS:
            raise ScenarioError(f"j_method: expected one of {J_METHODS}, got {self.j_method!r}")
        if self.format not in FORMATS:
            raise ScenarioError(f"format: expected one of {FORMATS}, got {self.format!r}")

    # serialization

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Scenario":
        if not isinstance(doc, Mapping):
            raise ScenarioError("scenario must be a JSON object")
        known = {
            "ambient", "graph", "explicit", "quantities", "axes", "radii", "quadrature_degree",
            "max_degree", "j_method", "exact", "format", "seed", "exponents",
        }
        extra = set(doc) - known
        if extra:
            raise ScenarioError(f"unknown keys {sorted(extra)}")
        amb = doc.get("ambient", {"kind": "minkowski"})
        if not isinstance(amb, Mapping):
            raise ScenarioError("ambient: expected an object")
        kind = amb.get("kind", "minkowski")
        mass = _rational(amb.get("mass", 0), "ambient.mass")

        graph = []
        for i, t in enumerate(doc.get("graph", [])):
            if not isinstance(t, Mapping) or set(t) != {"power", "A"}:
                raise ScenarioError(f"graph[{i}]: expected an object with keys 'power' and 'A'")
            graph.append((_rational(t["power"], f"graph[{i}].power"), _expression(t["A"], f"graph[{i}].A")))

        explicit = doc.get("explicit")
        if explicit is not None:
            explicit = _read_explicit(explicit)

        axes = {}
        for q, ax in dict(doc.get("axes", {})).items():
            if not isinstance(ax, Sequence) or isinstance(ax, str):
                raise ScenarioError(f"axes.{q}: expected a list of axes")
            axes[q] = tuple(int(a) for a in ax)
        exponents = {}
        for q, ex in dict(doc.get("exponents", {})).items():
            if q not in QUANTITIES:
                raise ScenarioError(f"exponents: unknown quantity {q!r}")
            exponents[q] = tuple(float(_rational(s, f"exponents.{q}")) if isinstance(s, str) else float(s) for s in ex)
        quantities = doc.get("quantities", list(QUANTITIES))
        if isinstance(quantities, str) or not isinstance(quantities, Sequence):
            raise ScenarioError("quantities: expected a list")
        radii = doc.get("radii", [1e2, 1e3, 1e4, 1e5])
        if isinstance(radii, str) or not isinstance(radii, Sequence):
            raise ScenarioError("radii: expected a list of numbers")
        max_degree = doc.get("max_degree")
        return cls(
            kind=kind,
            mass=mass,
            graph=tuple(graph),
            explicit=explicit,
            quantities=tuple(quantities),
            axes=axes,
            radii=tuple(_radius(r, f"radii[{i}]") for i, r in enumerate(radii)),
            quadrature_degree=int(doc.get("quadrature_degree", 24)),
            max_degree=None if max_degree is None else int(max_degree),
            j_method=doc.get("j_method", "auto"),
            exact=bool(doc.get("exact", True)),
            format=doc.get("format", "csv"),
            seed=int(doc.get("seed", 0)),
            exponents=exponents,
        )

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"ambient": {"kind": self.kind, "mass": _frac_str(self.mass)}}
        if self.graph:
            doc["graph"] = [{"power": _frac_str(p), "A": str(A)} for p, A in self.graph]
        if self.explicit is not None:
            doc["explicit"] = _write_explicit(self.explicit)
        doc["quantities"] = list(self.quantities)
        if self.axes:
            doc["axes"] = {q: list(self.axes[q]) for q in sorted(self.axes)}
        doc["radii"] = [float(r) for r in self.radii]
        doc["quadrature_degree"] = self.quadrature_degree
        doc["max_degree"] = self.max_degree
        doc["j_method"] = self.j_method
        doc["exact"] = self.exact
        doc["format"] = self.format
        doc["seed"] = self.seed
        if self.exponents:
            doc["exponents"] = {q: list(self.exponents[q]) for q in sorted(self.exponents)}
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(doc)

    def with_radii(self, radii: Sequence[float]) -> "Scenario":
        return replace(self, radii=tuple(float(r) for r in radii))

    def axes_for(self, quantity: str) -> tuple[int | None, ...]:
        if quantity == "E":
            return (None,)
        return self.axes.get(quantity, (1, 2, 3))

    @property
    def ambient(self) -> Ambient:
        if self.kind == "minkowski":
            return Ambient.minkowski()
        return Ambient.schwarzschild(float(self.mass))

    @property
    def graph_function(self) -> GraphFunction | None:
        if self.explicit is not None:
            return None
        return GraphFunction(self.graph)


def _read_explicit(doc) -> dict[str, Any]:
    if not isinstance(doc, Mapping):
        raise ScenarioError("explicit: expected an object")
    family = doc.get("family")
    if family not in EXPLICIT_FAMILIES:
        raise ScenarioError(f"explicit.family: expected one of {EXPLICIT_FAMILIES}, got {family!r}")
    allowed = {"family", "q", "alpha", "beta", "B", "A0", "remainder_scale"}
    extra = set(doc) - allowed
    if extra:
        raise ScenarioError(f"explicit: unknown keys {sorted(extra)}")
    for key in ("q", "alpha", "beta"):
        if key not in doc:
            raise ScenarioError(f"explicit.{key}: required")
    B = doc.get("B", [0, 0, 0])
    if not isinstance(B, Sequence) or isinstance(B, str) or len(B) != 3:
        raise ScenarioError("explicit.B: expected three rationals")
    out = {
        "family": family,
        "q": _rational(doc["q"], "explicit.q"),
        "alpha": _expression(doc["alpha"], "explicit.alpha"),
        "beta": _expression(doc["beta"], "explicit.beta"),
        "B": tuple(_rational(b, f"explicit.B[{i}]") for i, b in enumerate(B)),
        "A0": _rational(doc.get("A0", 0), "explicit.A0"),
        "remainder_scale": _rational(doc.get("remainder_scale", 1), "explicit.remainder_scale"),
    }
    if not Fraction(1, 2) < out["q"] < 1:
        raise ScenarioError(f"explicit.q: must lie in (1/2, 1), got {out['q']}")
    return out


def _write_explicit(e: Mapping[str, Any]) -> dict[str, Any]:
    return {
        "family": e["family"],
        "q": _frac_str(e["q"]),
        "alpha": str(e["alpha"]),
        "beta": str(e["beta"]),
        "B": [_frac_str(b) for b in e["B"]],
        "A0": _frac_str(e["A0"]),
        "remainder_scale": _frac_str(e["remainder_scale"]),
    }


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc.strerror}") from exc
    return Scenario.loads(text)


def build_source(s: Scenario) -> FluxSource:
    if s.explicit is not None:
        e = s.explicit
        return divergent_momentum_data(e["q"], e["alpha"], e["beta"], e["B"], e["A0"], e["remainder_scale"])
    return GraphSource(s.ambient, s.graph_function)


def _single_power(s: Scenario) -> Fraction | None:
    """Power p of a single-term graph; f = 0 counts as p = 0 with A = 0."""
    if s.explicit is not None:
        return None
    if not s.graph:
        return Fraction(0)
    if len(s.graph) == 1:
        return s.graph[0][0]
    return None


def default_exponents(s: Scenario, quantity: str) -> tuple[float, ...] | None:
    """Correction exponents of the radial series in the regimes with a known expansion."""
    if quantity in s.exponents:
        return s.exponents[quantity]
    p = _single_power(s)
    if p is None or not (0 <= p < Fraction(1, 2)):
        return None
    if quantity in ("E", "P"):
        cand = [1 - 2 * p, Fraction(1), 2 - 2 * p, Fraction(2)]
    elif quantity == "J" and p == J_POWER:
        cand = [Fraction(1), 3 - 5 * p, Fraction(2)]
    elif quantity == "C" and p == C_POWER:
        cand = [Fraction(1), Fraction(2)]
    else:
        return None
    return tuple(float(c) for c in sorted(set(c for c in cand if c > 0)))


def exact_values(s: Scenario, quantity: str) -> tuple[Fraction, Fraction, Fraction] | Fraction | None:
    """Exact limit of ``quantity`` when the scenario lies in a regime with a closed form."""
    p = _single_power(s)
    if p is None:
        return None
    A = s.graph[0][1] if s.graph else SpherePolynomial()
    m = s.mass
    if quantity == "E" and p in (J_POWER, 0) and (s.kind == "schwarzschild" or p == J_POWER or not s.graph):
        return m
    if quantity == "P" and (p == J_POWER or not s.graph):
        return (Fraction(0),) * 3
    if quantity == "J" and p == J_POWER:
        ev: ExactVector = (
            schwarzschild_angular_momentum_exact(A, m) if s.kind == "schwarzschild" else angular_momentum_exact(A)
        )
        return ev.components
    if quantity == "C" and p == C_POWER and s.kind == "minkowski":
        return center_of_mass_exact(A).components
    return None


@dataclass(frozen=True)
class QuantityResult:
    quantity: str
    axis: int | None
    series: FluxSeries
    verdict: LimitVerdict
    exact: Fraction | None = None
    agrees: bool | None = None

    def to_dict(self) -> dict[str, Any]:
        v = self.verdict
        return {
            "quantity": self.quantity,
            "axis": self.axis,
            "radii": [float(r) for r in self.series.radii],
            "values": [float(x) for x in self.series.values],
            "verdict": v.kind,
            "fitted_limit": _json_float(v.value),
            "error": _json_float(v.error),
            "exponent": _json_float(v.exponent),
            "exact": None if self.exact is None else str(self.exact),
            "exact_value": None if self.exact is None else float(self.exact),
            "agrees": self.agrees,
        }


def _json_float(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def _csv_float(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else ""


@dataclass(frozen=True)
class ScenarioReport:
    scenario: Scenario
    results: tuple[QuantityResult, ...]

    @property
    def any_divergent(self) -> bool:
        return any(r.verdict.is_divergent for r in self.results)

    @property
    def all_agree(self) -> bool:
        return all(r.agrees is not False for r in self.results)

    def result(self, quantity: str, axis: int | None = None) -> QuantityResult:
        for r in self.results:
            if r.quantity == quantity and r.axis == axis:
                return r
        raise KeyError((quantity, axis))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for res in self.results:
            v = res.verdict
            for r, x in zip(res.series.radii, res.series.values):
                w.writerow(
                    [
                        res.quantity,
                        "" if res.axis is None else res.axis,
                        repr(float(r)),
                        _csv_float(x),
                        _csv_float(v.value),
                        _csv_float(v.exponent),
                        v.kind,
                    ]
                )
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"scenario": self.scenario.to_dict(), "results": [r.to_dict() for r in self.results]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def render(self, fmt: str | None = None) -> str:
        fmt = fmt or self.scenario.format
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")


def _agrees(verdict: LimitVerdict, exact: Fraction, scale: float) -> bool:
    if not verdict.is_finite:
        return False
    tol = 3.0 * verdict.error + 1e-9 * max(scale, 1.0)
    return abs(verdict.value - float(exact)) <= tol


def run_scenario(s: Scenario, exact: bool | None = None) -> ScenarioReport:
    """Evaluate every requested quantity over the scenario radii and classify the limits."""
    want_exact = s.exact if exact is None else exact
    source = build_source(s)
    j_method = s.j_method
    if j_method == "auto":
        j_method = "symbolic" if source.symbolic_radial_momentum() is not None else "spherical"
    results = []
    for q in (q for q in QUANTITIES if q in s.quantities):
        kw = {"max_degree": s.max_degree}
        if q == "J":
            kw["j_method"] = j_method
        radii = np.asarray(s.radii, dtype=float)
        full = np.array([surface_fluxes(source, r, (q,), s.quadrature_degree, **kw)[q] for r in radii])
        ex = exact_values(s, q) if want_exact else None
        scale = 0.0
        if ex is not None:
            comps = ex if isinstance(ex, tuple) else (ex,)
            scale = max(abs(float(c)) for c in comps)
        exps = default_exponents(s, q)
        for axis in s.axes_for(q):
            vals = full if axis is None else full[:, axis - 1]
            series = FluxSeries(radii, vals, q, axis)
            verdict = extrapolate_limit(series, exps) if len(radii) >= 3 else _short_verdict(series)
            e = None
            agrees = None
            if ex is not None:
                e = ex if axis is None else ex[axis - 1]
                agrees = _agrees(verdict, e, scale)
            results.append(QuantityResult(q, axis, series, verdict, e, agrees))
    return ScenarioReport(s, tuple(results))


def _short_verdict(series: FluxSeries) -> LimitVerdict:
    # too few radii to fit; report the outermost value without a classification
    return LimitVerdict("indeterminate", float(series.values[-1]))
