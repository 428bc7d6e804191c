"""JSON scenarios: validation, dispatch to the numerical modules, reports and output files.

A scenario names one ``kind`` of experiment, declares fields by family, the
initial data and solver settings, the checks to evaluate and the artifacts
to write. Validation is two-staged: the JSON schema shipped with the
package, then semantic rules (required sections per kind, consistent
dimensions, known check and output names).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from . import batteries
from .brane import (
    BraneFieldSet,
    BraneMap,
    catenoid_area,
    circular_string_collapse,
    corner_jacobians,
    enumerate_multiindices,
    minimize_action,
    minors,
    nonrel_expansion_error,
    pullback_action,
)
from .dynamics import (
    conservation_report,
    curve_distance,
    el_residuals,
    gyration_radius,
    integrate_el,
    integrate_geodesic,
    integrate_lorentz,
)
from .errors import BranelabError, ConfigError, ScenarioError
from .geometry import make_field, minkowski
from .homlag import GAUGE_FAMILIES, FieldSet, LagrangianSpec, mass_shell_residual
from .ode import IntegratorConfig
from .quantum import (
    build_clifford,
    dirac_operator,
    even_mass_shift,
    kg_factorization_residual,
    matrix_to_json,
    spectrum_to_json,
)

FORMATS = ("csv", "json")


def load_schema() -> dict:
    text = resources.files("branelab").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# per-kind catalogue: checks with default tolerances, artifacts, required sections

KIND_CHECKS: dict[str, dict[str, float]] = {
    "geodesic": {"norm_drift": 1e-8, "el_residual": 1e-8, "l1_l2_distance": 1e-8},
    "particle_el": {"el_residual": 1e-8, "hamiltonian_identity": 1e-10, "norm_drift": 1e-8,
                    "base_el_residual": 1e-8, "mass_shell": 1e-10},
    "lorentz": {"norm_drift": 1e-8, "kinetic_residual": 1e-6, "cyclotron_radius": 1e-6},
    "brane_action": {"lagrange_identity": 1e-10, "action": 1e-8},
    "brane_minimize": {"converged": 0.5, "flat_distance": 1e-6, "catenoid_area": 1e-3},
    "string_collapse": {"collapse_time": 1e-4, "energy_drift": 1e-8},
    "nonrel_expansion": {"order_slope": 0.2},
    "clifford_check": {"anticommutation": 1e-12, "trace_identity": 1e-12, "factorization": 1e-12,
                       "kernel_scan": 1e-8},
    "dirac_spectrum": {"factorization": 1e-12, "kernel_consistency": 1e-8},
    # 0 means "use the battery's own tolerance"
    "identity_suite": {name: 0.0 for name in batteries.BATTERIES},
}

# checks evaluated when the scenario does not list any
DEFAULT_CHECKS: dict[str, tuple[str, ...]] = {
    "geodesic": ("norm_drift", "el_residual"),
    "particle_el": ("el_residual", "hamiltonian_identity"),
    "lorentz": ("norm_drift", "kinetic_residual"),
    "brane_action": ("lagrange_identity",),
    "brane_minimize": ("converged",),
    "string_collapse": ("collapse_time", "energy_drift"),
    "nonrel_expansion": ("order_slope",),
    "clifford_check": ("anticommutation", "trace_identity", "factorization", "kernel_scan"),
    "dirac_spectrum": ("factorization", "kernel_consistency"),
    "identity_suite": ("homogeneity", "mass_shell", "factorization"),
}

KIND_OUTPUTS: dict[str, tuple[str, ...]] = {
    "geodesic": ("trajectory",),
    "particle_el": ("trajectory",),
    "lorentz": ("trajectory",),
    "brane_action": ("summary",),
    "brane_minimize": ("iterations", "brane"),
    "string_collapse": ("trajectory",),
    "nonrel_expansion": ("remainders",),
    "clifford_check": ("gammas",),
    "dirac_spectrum": ("spectrum",),
    "identity_suite": ("batteries",),
}

KIND_REQUIRED: dict[str, tuple[str, ...]] = {
    "geodesic": ("fields.g", "initial"),
    "particle_el": ("fields", "lagrangian", "initial"),
    "lorentz": ("fields.g", "initial"),
    "brane_action": ("fields.g", "brane", "dims.D"),
    "brane_minimize": ("fields.g", "brane", "dims.D"),
    "string_collapse": ("params.R0",),
    "nonrel_expansion": ("params.omega",),
    "clifford_check": (),
    "dirac_spectrum": ("params.m", "params.p"),
    "identity_suite": (),
}


@dataclass(frozen=True)
class CheckSpec:
    name: str
    tol: float


@dataclass
class Scenario:
    name: str
    kind: str
    doc: dict
    seed: int
    checks: list
    outputs: list
    source: str | None = None

    def section(self, key: str) -> dict:
        return self.doc.get(key, {})

    @property
    def params(self) -> dict:
        return self.section("params")


# ---------------------------------------------------------------------------
# parsing


def _json_path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _lookup(doc: dict, dotted: str):
    cur = doc
    for key in dotted.split("."):
        if not isinstance(cur, dict) or key not in cur:
            return None
        cur = cur[key]
    return cur


def _field_dim(decl: dict, path: str) -> int:
    try:
        return make_field(decl).dim
    except (KeyError, TypeError, ValueError, BranelabError) as err:
        raise ConfigError(f"cannot build field: {err}", path) from None


def parse_scenario(source) -> Scenario:
    """Validate a scenario given as a file path or an already loaded dict."""
    origin = None
    if isinstance(source, dict):
        doc = source
    else:
        origin = str(source)
        try:
            doc = json.loads(Path(source).read_text())
        except OSError as err:
            raise ConfigError(f"cannot read scenario: {err}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"malformed JSON: {err}") from None

    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        items = "; ".join(f"{_json_path(e.absolute_path) or '<root>'}: {e.message}" for e in errors)
        raise ConfigError(items, _json_path(errors[0].absolute_path) or "<root>")

    kind = doc["kind"]
    for req in KIND_REQUIRED[kind]:
        if _lookup(doc, req) is None:
            raise ConfigError(f"required for kind {kind!r}", req)

    dims = doc.get("dims", {})
    if "D" in dims and "m" in dims and dims["D"] > dims["m"]:
        raise ConfigError(f"brane dimension D={dims['D']} exceeds target dimension m={dims['m']}", "dims")

    # dimensions across sections
    m = dims.get("m")
    flds = doc.get("fields", {})
    sizes = {}
    for key in ("g", "A"):
        if key in flds:
            sizes[f"fields.{key}"] = _field_dim(flds[key], f"fields.{key}")
    for i, decl in enumerate(flds.get("extras", [])):
        sizes[f"fields.extras[{i}]"] = _field_dim(decl, f"fields.extras[{i}]")
    for key in ("x0", "v0"):
        if key in doc.get("initial", {}):
            sizes[f"initial.{key}"] = len(doc["initial"][key])
    if m is None and sizes:
        m = next(iter(sizes.values()))
    for path, n in sizes.items():
        if n != m:
            raise ConfigError(f"dimension {n} disagrees with m={m}", path)
    if "D" in dims and m is not None and dims["D"] > m:
        raise ConfigError(f"brane dimension D={dims['D']} exceeds target dimension m={m}", "dims")

    lag = doc.get("lagrangian", {})
    if "gauge" in lag and lag["gauge"]["family"] not in GAUGE_FAMILIES:
        raise ConfigError("unknown gauge family", "lagrangian.gauge.family")

    available = KIND_CHECKS[kind]
    declared = doc.get("checks")
    if declared is None:
        checks = [CheckSpec(n, available[n]) for n in DEFAULT_CHECKS[kind]]
    else:
        checks, seen = [], set()
        for i, c in enumerate(declared):
            name = c["name"]
            if name not in available:
                raise ConfigError(f"unknown check {name!r} for kind {kind!r}; choose from {sorted(available)}",
                                  f"checks[{i}].name")
            if name in seen:
                raise ConfigError(f"check {name!r} declared twice", f"checks[{i}].name")
            seen.add(name)
            checks.append(CheckSpec(name, float(c.get("tol", available[name]))))
    outputs = list(doc.get("outputs", KIND_OUTPUTS[kind]))
    for i, o in enumerate(outputs):
        if o not in KIND_OUTPUTS[kind]:
            raise ConfigError(f"unknown output {o!r} for kind {kind!r}", f"outputs[{i}]")
    return Scenario(doc["name"], kind, doc, int(doc.get("seed", 0)), checks, outputs, origin)


# ---------------------------------------------------------------------------
# artifacts and reports


@dataclass
class Table:
    columns: list
    rows: list

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps({"columns": self.columns, "rows": [[_num(c) for c in r] for r in self.rows]},
                              indent=1) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([c if isinstance(c, str) else format(float(c), ".17g") for c in r])
        return buf.getvalue()


@dataclass
class Document:
    content: Any

    def render(self, fmt: str) -> str:
        return json.dumps(self.content, indent=1, sort_keys=True) + "\n"


def _num(c):
    if isinstance(c, str):
        return c
    c = float(c)
    return c if math.isfinite(c) else None


def _ext(artifact, fmt: str) -> str:
    return fmt if isinstance(artifact, Table) else "json"


def trajectory_table(traj) -> Table:
    m = traj.dim
    names = list(traj.diagnostics)
    cols = ["tau"] + [f"x{i}" for i in range(m)] + [f"v{i}" for i in range(m)] + names
    rows = []
    for k in range(len(traj)):
        rows.append([traj.params[k], *traj.points[k], *traj.velocities[k]] + [traj.diagnostics[n][k] for n in names])
    return Table(cols, rows)


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tol: float


@dataclass
class RunReport:
    name: str
    wall_ms: float
    checks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "wall_ms": self.wall_ms,
            "checks": [{"name": c.name, "pass": c.passed, "residual": _num(c.residual)} for c in self.checks],
            "outputs": list(self.outputs),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


# ---------------------------------------------------------------------------
# builders


def _fieldset(sc: Scenario) -> FieldSet:
    f = sc.section("fields")
    g = make_field(f["g"]) if "g" in f else None
    A = make_field(f["A"]) if "A" in f else None
    extras = tuple(make_field(d) for d in f.get("extras", []))
    e = float(f.get("e", 1.0 if A is not None else 0.0))
    return FieldSet(g, A, extras, e=e, m=float(f.get("mass", 1.0)))


def _integrator(sc: Scenario) -> tuple[IntegratorConfig, float]:
    s = dict(sc.section("integrator"))
    tau_end = float(s.pop("tau_end", 10.0))
    s.pop("gauge", None)
    return IntegratorConfig(**s), tau_end


def _initial(sc: Scenario):
    ini = sc.section("initial")
    return np.asarray(ini["x0"], dtype=float), np.asarray(ini["v0"], dtype=float)


def _spec(sc: Scenario, fs: FieldSet) -> LagrangianSpec:
    lag = sc.section("lagrangian")
    gauge = None
    if "gauge" in lag:
        gauge = GAUGE_FAMILIES[lag["gauge"]["family"]](lag["gauge"])
    return LagrangianSpec(lag["kind"], fs, lag.get("included_ranks"), float(lag.get("power", 1.0)), gauge)


def _max_abs(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def brane_from_family(sc: Scenario) -> tuple[BraneMap, BraneMap]:
    """Return ``(initial, reference)`` maps for the declared family."""
    b = sc.section("brane")
    p = b.get("params", {})
    shape = tuple(b["shape"])
    m = sc.section("dims").get("m", 3)
    rng = np.random.default_rng(sc.seed)
    if b["family"] == "flat_sheet":
        if len(shape) != 2:
            raise ConfigError("flat_sheet needs a 2D grid", "brane.shape")
        amp = float(p.get("amplitude", 0.0))
        noise = float(p.get("noise", 0.0))

        def sheet(z, bump):
            out = np.zeros(z.shape[:-1] + (m,))
            out[..., 0], out[..., 1] = z[..., 0], z[..., 1]
            out[..., 2] = bump * np.sin(np.pi * z[..., 0]) * np.sin(np.pi * z[..., 1])
            return out

        ref = BraneMap.from_function(lambda z: sheet(z, 0.0), shape, ("fixed", "fixed"))
        init = BraneMap.from_function(lambda z: sheet(z, amp), shape, ("fixed", "fixed"))
        if noise:
            vals = init.values.copy()
            free = ~init.fixed_mask()
            vals[free, 2:] += noise * rng.standard_normal(vals[free, 2:].shape)
            init = init.copy(vals)
        return init, ref
    if b["family"] == "cylinder":
        if len(shape) != 2:
            raise ConfigError("cylinder needs a 2D grid", "brane.shape")
        radius = float(p.get("radius", 1.0))
        sep = float(p.get("separation", 0.5))

        def cyl(z):
            th = 2 * np.pi * z[..., 1]
            out = np.zeros(z.shape[:-1] + (m,))
            out[..., 0], out[..., 1] = radius * np.cos(th), radius * np.sin(th)
            out[..., 2] = sep * (z[..., 0] - 0.5)
            return out

        phi = BraneMap.from_function(cyl, shape, ("fixed", "periodic"))
        return phi, phi
    raise ConfigError(f"unknown brane family {b['family']!r}", "brane.family")


# ---------------------------------------------------------------------------
# kind runners: each returns ({check: residual}, {artifact: Table | Document})


def _run_geodesic(sc, want):
    fs = _fieldset(sc)
    cfg, tau_end = _integrator(sc)
    x0, v0 = _initial(sc)
    traj = integrate_geodesic(fs.g, x0, v0, cfg, tau_end)
    res = {}
    norm = traj.diagnostics["norm"]
    res["norm_drift"] = _max_abs(norm - norm[0])
    if "el_residual" in want:
        res["el_residual"] = _max_abs(el_residuals(LagrangianSpec("L2_quadratic", FieldSet(fs.g)), traj))
    if "l1_l2_distance" in want:
        l1 = LagrangianSpec("L1_sqrt", FieldSet(fs.g, m=1.0))
        other = integrate_el(l1, x0, v0, cfg, tau_end * math.sqrt(norm[0]), gauge="proper_time")
        res["l1_l2_distance"] = curve_distance(traj, other)
    return res, {"trajectory": trajectory_table(traj)}


def _run_particle_el(sc, want):
    fs = _fieldset(sc)
    spec = _spec(sc, fs)
    cfg, tau_end = _integrator(sc)
    x0, v0 = _initial(sc)
    gauge = sc.section("integrator").get("gauge", "proper_time" if fs.g is not None else "affine")
    traj = integrate_el(spec, x0, v0, cfg, tau_end, gauge=gauge)
    res = {}
    if "el_residual" in want:
        res["el_residual"] = _max_abs(el_residuals(spec, traj))
    if "hamiltonian_identity" in want:
        n = spec.order
        L = traj.diagnostics["lagrangian"]
        h = traj.diagnostics["hamiltonian"]
        res["hamiltonian_identity"] = _max_abs((h - (n - 1) * L) / np.maximum(1.0, np.abs(L)))
    if "norm_drift" in want:
        res["norm_drift"] = conservation_report(spec, traj).get("norm", float("nan"))
    if "base_el_residual" in want:
        base = LagrangianSpec(spec.kind, fs, spec.included_ranks, 1.0, spec.gauge)
        res["base_el_residual"] = _max_abs(el_residuals(base, traj))
    if "mass_shell" in want:
        res["mass_shell"] = max(abs(mass_shell_residual(spec, x, v)) for x, v in zip(traj.points, traj.velocities))
    return res, {"trajectory": trajectory_table(traj)}


def _run_lorentz(sc, want):
    fs = _fieldset(sc)
    cfg, tau_end = _integrator(sc)
    x0, v0 = _initial(sc)
    traj = integrate_lorentz(fs, x0, v0, cfg, tau_end)
    res = {}
    if "norm" in traj.diagnostics:
        norm = traj.diagnostics["norm"]
        res["norm_drift"] = _max_abs(norm - norm[0])
    else:
        res["norm_drift"] = 0.0
    # the differenced acceleration is inaccurate at the two end samples
    res["kinetic_residual"] = _max_abs(traj.diagnostics["kinetic_residual"][2:-2])
    if "cyclotron_radius" in want:
        B = sc.params.get("B", sc.section("fields").get("A", {}).get("B"))
        if B is None:
            raise ConfigError("cyclotron check needs params.B or a uniform_magnetic potential", "params.B")
        expected = fs.m * float(np.hypot(v0[1], v0[2])) / (abs(fs.e) * abs(float(B)))
        _, dist = gyration_radius(traj.points[:, 1:3])
        res["cyclotron_radius"] = _max_abs(dist - expected) / expected
    return res, {"trajectory": trajectory_table(traj)}


def _brane_fields(sc) -> BraneFieldSet:
    fs = _fieldset(sc)
    return BraneFieldSet(int(sc.section("dims")["D"]), g=fs.g, mass=fs.m)


def _run_brane_action(sc, want):
    phi, _ = brane_from_family(sc)
    bf = _brane_fields(sc)
    kind = sc.params.get("spec_kind", "dng")
    action = pullback_action(phi, bf, kind)
    res = {}
    if "lagrange_identity" in want:
        centroid, jac = corner_jacobians(phi)
        idx = enumerate_multiindices(phi.m, phi.D)
        om = minors(jac, idx)
        xc = np.broadcast_to(centroid, om.shape[:-1] + (phi.m,))
        Q = np.einsum("...a,...ab,...b->...", om, bf.G.eval(xc), om)
        h = np.einsum("...ma,...mn,...nb->...ab", jac, bf.g.eval(xc), jac)
        det = np.linalg.det(h)
        res["lagrange_identity"] = _max_abs((Q - det) / np.maximum(1.0, np.abs(det)))
    if "action" in want:
        if "expected_action" not in sc.params:
            raise ConfigError("action check needs params.expected_action", "params.expected_action")
        res["action"] = abs(action - float(sc.params["expected_action"]))
    summary = {"action": action, "cells": int(np.prod(phi.cell_shape)), "D": phi.D, "m": phi.m,
               "spec_kind": kind}
    return res, {"summary": Document(summary)}


def _run_brane_minimize(sc, want):
    phi0, ref = brane_from_family(sc)
    bf = _brane_fields(sc)
    opt = sc.section("optimizer")
    result = minimize_action(phi0, bf, sc.params.get("spec_kind", "dng"),
                             max_iters=int(opt.get("max_iters", 500)),
                             grad_tol=float(opt.get("grad_tol", 1e-7)),
                             step_rule=opt.get("step_rule", "sobolev"))
    res = {"converged": 0.0 if result.converged else 1.0}
    if "flat_distance" in want:
        res["flat_distance"] = _max_abs(result.brane.values[..., 2:] - ref.values[..., 2:])
    if "catenoid_area" in want:
        p = sc.section("brane").get("params", {})
        _, area = catenoid_area(float(p.get("radius", 1.0)), float(p.get("separation", 0.5)))
        res["catenoid_area"] = abs(result.action - area)
    log = Table(["iter", "action", "grad_norm", "step"], [list(r) for r in result.log])
    doc = json.loads(result.brane.to_json())
    doc["converged"] = result.converged
    doc["iterations"] = result.iterations
    return res, {"iterations": log, "brane": Document(doc)}


def _run_string_collapse(sc, want):
    R0 = float(sc.params["R0"])
    s = sc.section("integrator")
    cfg = IntegratorConfig(method=s.get("method", "dop853_adaptive"), step=s.get("step", 1e-3),
                           tol=s.get("tol", 1e-13), max_steps=s.get("max_steps", 2_000_000))
    traj = circular_string_collapse(R0, cfg)
    tc = traj.meta["collapse_time"]
    E = traj.diagnostics["energy"]
    res = {
        "collapse_time": abs(tc - 0.5 * math.pi * R0) if tc is not None else float("inf"),
        "energy_drift": _max_abs((E - E[0]) / E[0]),
    }
    return res, {"trajectory": trajectory_table(traj)}


def _run_nonrel(sc, want):
    f = sc.section("fields")
    m = int(sc.section("dims").get("m", 4))
    g = make_field(f["g"]) if "g" in f else minkowski(m)
    A = make_field(f["A"]) if "A" in f else None
    bf = BraneFieldSet(1, g=g, A=A, e=float(f.get("e", 1.0)), mass=float(f.get("mass", 1.0)))
    omega = np.asarray(sc.params["omega"], dtype=float)
    x = np.asarray(sc.params.get("x", np.zeros(g.dim)), dtype=float)
    ks = sc.params.get("k", list(range(2, 9)))
    eps = np.array([2.0 ** -k for k in ks])
    rows = [(e, *nonrel_expansion_error(bf, x, omega, e)) for e in eps]
    err = np.array([r[3] for r in rows])
    slope = float(np.polyfit(np.log(eps), np.log(err), 1)[0])
    return {"order_slope": abs(slope - 4.0)}, {"remainders": Table(["eps", "exact", "expanded", "error"], rows)}


def _run_clifford(sc, want):
    dims = tuple(sc.params.get("dims", (2, 3, 4)))
    n = int(sc.params.get("draws", 1000))
    res = {}
    if "anticommutation" in want:
        res["anticommutation"] = batteries.anticommutation_battery(dims).residual
    if "trace_identity" in want:
        res["trace_identity"] = batteries.trace_identity_battery(dims).residual
    if "factorization" in want:
        res["factorization"] = batteries.factorization_battery(n, sc.seed).residual
    if "kernel_scan" in want:
        res["kernel_scan"] = batteries.kernel_scan_battery(dims, seed=sc.seed).residual
    doc = {str(m): [matrix_to_json(gm) for gm in build_clifford(m).gammas] for m in dims}
    return res, {"gammas": Document(doc)}


def _run_dirac(sc, want):
    p = sc.params
    rep = build_clifford(int(p["m"]))
    mom = np.asarray(p["p"], dtype=float)
    A = np.asarray(p.get("A", np.zeros(rep.dim)), dtype=float)
    e = float(p.get("e", 0.0))
    x = np.asarray(p.get("x", np.zeros(rep.dim)), dtype=float)
    s_even = {int(k): float(v) for k, v in p.get("s_even", {}).items()}
    mass = even_mass_shift(rep, s_even, x, float(p.get("mass", 0.0)))
    D = dirac_operator(rep, mom, A, e, mass)
    pi = mom - e * A
    shell = float(np.sum(rep.metric * pi * pi)) - mass**2
    expect = abs(shell) ** (rep.size // 2)
    scale = max(1.0, float(np.max(np.abs(pi))) ** 2, mass**2) ** (rep.size // 2)
    res = {
        "factorization": kg_factorization_residual(rep, mom, A, e, mass),
        "kernel_consistency": abs(abs(np.linalg.det(D)) - expect) / scale,
    }
    doc = spectrum_to_json(D)
    doc["mass_effective"] = mass
    doc["mass_shell"] = shell
    return res, {"spectrum": Document(doc)}


def _run_identity_suite(sc, want):
    n = int(sc.params.get("draws", 1000))
    res, rows = {}, []
    for name in want:
        fn = batteries.BATTERIES[name]
        kwargs = {}
        if "n" in fn.__code__.co_varnames:
            kwargs["n"] = n
        if "seed" in fn.__code__.co_varnames:
            kwargs["seed"] = sc.seed
        r = fn(**kwargs)
        res[name] = r
        rows.append([name, r.draws, r.residual, r.tol])
    return res, {"batteries": Table(["battery", "draws", "residual", "tol"], rows)}


RUNNERS: dict[str, Callable] = {
    "geodesic": _run_geodesic,
    "particle_el": _run_particle_el,
    "lorentz": _run_lorentz,
    "brane_action": _run_brane_action,
    "brane_minimize": _run_brane_minimize,
    "string_collapse": _run_string_collapse,
    "nonrel_expansion": _run_nonrel,
    "clifford_check": _run_clifford,
    "dirac_spectrum": _run_dirac,
    "identity_suite": _run_identity_suite,
}


def run_scenario(sc: Scenario, out_dir=None, fmt: str = "csv", seed: int | None = None) -> RunReport:
    """Run a parsed scenario, write its artifacts under ``out_dir/<name>/`` and report.

    ``seed`` overrides the scenario seed. Library errors raised by the
    numerical modules are re-raised as ScenarioError naming the scenario.
    """
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", "format")
    if seed is not None:
        sc = Scenario(sc.name, sc.kind, sc.doc, int(seed), sc.checks, sc.outputs, sc.source)
    want = [c.name for c in sc.checks]
    t0 = time.perf_counter()
    try:
        measured, artifacts = RUNNERS[sc.kind](sc, want)
    except ConfigError:
        raise
    except (BranelabError, ArithmeticError, ValueError, np.linalg.LinAlgError) as err:
        raise ScenarioError(sc.name, err) from err
    wall_ms = (time.perf_counter() - t0) * 1e3

    results = []
    for c in sc.checks:
        r = measured[c.name]
        if isinstance(r, batteries.BatteryResult):
            tol = c.tol or r.tol
            results.append(CheckResult(c.name, bool(math.isfinite(r.residual) and r.residual < tol), r.residual, tol))
        else:
            r = float(r)
            results.append(CheckResult(c.name, bool(math.isfinite(r) and r < c.tol), r, c.tol))

    written = []
    if out_dir is not None:
        base = Path(out_dir) / sc.name
        base.mkdir(parents=True, exist_ok=True)
        for key in sc.outputs:
            art = artifacts[key]
            rel = f"{sc.name}/{key}.{_ext(art, fmt)}"
            (Path(out_dir) / rel).write_text(art.render(fmt))
            written.append(rel)
    report = RunReport(sc.name, round(wall_ms, 3), results, written)
    if out_dir is not None:
        (Path(out_dir) / sc.name / "report.json").write_text(report.to_json())
    return report
