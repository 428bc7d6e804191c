"""Worldline dynamics: Euler-Lagrange residuals, gauge-fixed flows and monitors.

First-order homogeneous Lagrangians have a velocity Hessian with the
velocity itself in its kernel, so the Euler-Lagrange system does not fix the
acceleration along ``v``. Flows therefore always run in a gauge: the
Hessian system is augmented by one row that pins either ``g(v, v)`` or
``v^0``. The gauge-free residual ``d/dtau (dL/dv) - dL/dx`` is then checked
on the result.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BoundaryError, DimensionError, DomainError, GaugeError
from .geometry import FaradayTensor, SymTensorField, as_point
from .homlag import FieldSet, LagrangianSpec, lagrangian_jet
from .ode import IntegratorConfig, integrate_ode, output_grid

GAUGES = ("proper_time", "coordinate_time", "affine")


@dataclass
class Trajectory:
    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        n = self.params.size
        if self.points.shape[0] != n or self.velocities.shape[0] != n:
            raise ValueError("samples and parameters disagree in length")
        if n > 1 and np.any(np.diff(self.params) <= 0):
            raise ValueError("parameters must be strictly increasing")
        for k, d in self.diagnostics.items():
            if len(d) != n:
                raise ValueError(f"diagnostic {k!r} has the wrong length")

    def __len__(self):
        return self.params.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, fp=None) -> str:
        """Write ``tau, x0.., v0.., diagnostics...``; returns the text if ``fp`` is None."""
        buf = io.StringIO() if fp is None else fp
        m = self.dim
        names = list(self.diagnostics)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau"] + [f"x{i}" for i in range(m)] + [f"v{i}" for i in range(m)] + names)
        for k in range(len(self)):
            row = [self.params[k], *self.points[k], *self.velocities[k]]
            row += [self.diagnostics[n][k] for n in names]
            w.writerow([format(float(c), ".17g") for c in row])
        return buf.getvalue() if fp is None else ""


# ---------------------------------------------------------------------------
# Euler-Lagrange residual


def _time_derivative(values: np.ndarray, params: np.ndarray, i: int) -> np.ndarray:
    n = params.size
    if i <= 0 or i >= n - 1:
        raise BoundaryError("sample needs a neighbour on each side")
    h = np.diff(params)
    uniform = np.allclose(h, h[0], rtol=1e-9, atol=0.0)
    if uniform and n >= 5:
        hh = h[0]
        if 2 <= i <= n - 3:
            return (values[i - 2] - 8 * values[i - 1] + 8 * values[i + 1] - values[i + 2]) / (12 * hh)
        # fourth-order off-centre stencils next to the ends
        if i == 1:
            return (-3 * values[0] - 10 * values[1] + 18 * values[2] - 6 * values[3] + values[4]) / (12 * hh)
        return (3 * values[i + 1] + 10 * values[i] - 18 * values[i - 1] + 6 * values[i - 2] - values[i - 3]) / (12 * hh)
    h0, h1 = params[i] - params[i - 1], params[i + 1] - params[i]
    # second-order three-point formula on a non-uniform stencil
    return (-h1 / (h0 * (h0 + h1)) * values[i - 1]
            + (h1 - h0) / (h0 * h1) * values[i]
            + h0 / (h1 * (h0 + h1)) * values[i + 1])


def _derivative_series(values: np.ndarray, params: np.ndarray) -> np.ndarray:
    """d/dtau along a whole series: fourth order except at the two end samples."""
    n = params.size
    if n < 3:
        return np.zeros_like(values)
    out = np.gradient(values, params, axis=0, edge_order=2)
    h = np.diff(params)
    if n >= 5 and np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        for i in range(1, n - 1):
            out[i] = _time_derivative(values, params, i)
    return out


def el_residual(spec: LagrangianSpec, curve: Trajectory, sample: int) -> np.ndarray:
    """``d/dtau(dL/dv) - dL/dx`` at one sample, with a discrete tau-derivative."""
    n = len(curve)
    if sample < 0:
        sample += n
    if sample <= 0 or sample >= n - 1:
        raise BoundaryError("boundary sample has no centred stencil")
    lo, hi = max(0, min(sample - 2, n - 5)), min(n, max(sample + 3, 5))
    jet = lagrangian_jet(spec, curve.points[lo:hi], curve.velocities[lo:hi], second=False)
    dp = _time_derivative(jet.p, curve.params[lo:hi], sample - lo)
    return dp - jet.dx[sample - lo]


def el_residuals(spec: LagrangianSpec, curve: Trajectory) -> np.ndarray:
    """Residual vectors at every interior sample, shape ``(N - 2, m)``."""
    jet = lagrangian_jet(spec, curve.points, curve.velocities, second=False)
    return np.array([
        _time_derivative(jet.p, curve.params, i) - jet.dx[i] for i in range(1, len(curve) - 1)
    ])


# ---------------------------------------------------------------------------
# geometry of flows


def christoffel(g: SymTensorField, x) -> np.ndarray:
    """``Gamma^mu_{nu lam}`` from the exact metric derivative."""
    gm = g.eval(x)
    dg = g.deriv(x)  # [sig, a, b] = d_sig g_ab
    ginv = np.linalg.inv(gm)
    low = 0.5 * (np.swapaxes(dg, -3, -2) + np.moveaxis(dg, -3, -1) - dg)
    # low[s, n, l] = 1/2 (d_n g_sl + d_l g_sn - d_s g_nl)
    return np.einsum("...ms,...snl->...mnl", ginv, low)


def _norm(g, x, v):
    return np.einsum("...a,...ab,...b->...", v, g.eval(x), v)


def _split(y, m):
    return y[:m], y[m:]


def integrate_geodesic(g: SymTensorField, x0, v0, cfg: IntegratorConfig | None = None,
                       tau_end: float = 10.0) -> Trajectory:
    cfg = cfg or IntegratorConfig()
    x0 = as_point(x0)
    v0 = np.asarray(v0, dtype=float)
    if _norm(g, x0, v0) <= 0 and g.signature == "lorentzian":
        raise DomainError("initial velocity is not timelike", rank=2)
    m = x0.size

    def rhs(t, y):
        x, v = _split(y, m)
        a = -np.einsum("mnl,n,l->m", christoffel(g, x), v, v)
        return np.concatenate([v, a])

    t, Y, _ = integrate_ode(rhs, np.concatenate([x0, v0]), tau_end, cfg)
    X, V = Y[:, :m], Y[:, m:]
    return Trajectory(t, X, V, {"norm": _norm(g, X, V)}, {"kind": "geodesic"})


def _is_degenerate(spec: LagrangianSpec) -> bool:
    try:
        return spec.is_first_order
    except ValueError:
        return False


def el_acceleration(spec: LagrangianSpec, x, v, gauge: str = "affine") -> np.ndarray:
    """Solve the Euler-Lagrange system for the acceleration in the given gauge."""
    jet = lagrangian_jet(spec, x, v, second=True)
    H = jet.hess
    r = jet.dx - jet.mixed @ v
    if not _is_degenerate(spec):
        return np.linalg.solve(H, r)
    if gauge == "coordinate_time":
        row = np.zeros_like(v)
        row[0] = 1.0
        c = 0.0
    else:
        g = spec.fields.g
        if g is None:
            raise GaugeError("norm-preserving gauge needs a metric")
        row = g.eval(x) @ v
        c = -0.5 * np.einsum("lab,l,a,b->", g.deriv(x), v, v, v)
    A = np.vstack([H, row])
    b = np.append(r, c)
    a, *_ = np.linalg.lstsq(A, b, rcond=None)
    return a


def _gauge_initial(spec, x0, v0, gauge):
    if gauge not in GAUGES:
        raise GaugeError(f"unknown gauge {gauge!r}")
    g = spec.fields.g
    if gauge == "coordinate_time":
        if not _is_degenerate(spec):
            raise GaugeError("coordinate-time gauge applies only to first-order homogeneous Lagrangians")
        if v0[0] <= 0:
            raise GaugeError("coordinate-time gauge needs v^0 > 0")
        return v0 / v0[0]
    if gauge == "proper_time":
        if g is None:
            raise GaugeError("proper-time gauge needs a metric")
        n = _norm(g, x0, v0)
        if n <= 0:
            raise GaugeError("proper-time gauge needs a timelike initial velocity")
        return v0 / np.sqrt(n)
    if _is_degenerate(spec) and g is None:
        raise GaugeError("affine gauge for a first-order Lagrangian needs a metric")
    return v0


def integrate_el(spec: LagrangianSpec, x0, v0, cfg: IntegratorConfig | None = None,
                 tau_end: float = 10.0, gauge: str = "proper_time") -> Trajectory:
    """Integrate the Euler-Lagrange flow of ``spec`` in a fixed gauge.

    ``proper_time`` rescales ``v0`` to unit norm and keeps it there,
    ``affine`` keeps the initial norm, ``coordinate_time`` pins ``v^0 = 1``.
    """
    cfg = cfg or IntegratorConfig()
    x0 = as_point(x0)
    v0 = _gauge_initial(spec, x0, np.asarray(v0, dtype=float), gauge)
    m = x0.size

    def rhs(t, y):
        x, v = _split(y, m)
        return np.concatenate([v, el_acceleration(spec, x, v, gauge)])

    t, Y, _ = integrate_ode(rhs, np.concatenate([x0, v0]), tau_end, cfg)
    X, V = Y[:, :m], Y[:, m:]
    jet = lagrangian_jet(spec, X, V, second=False)
    diag = {}
    if spec.fields.g is not None:
        diag["norm"] = _norm(spec.fields.g, X, V)
    diag["lagrangian"] = jet.value
    diag["hamiltonian"] = np.einsum("na,na->n", jet.p, V) - jet.value
    return Trajectory(t, X, V, diag, {"kind": "el", "gauge": gauge})


def integrate_lorentz(fields: FieldSet, x0, v0, cfg: IntegratorConfig | None = None,
                      tau_end: float = 10.0) -> Trajectory:
    """Charged particle in gravity plus electromagnetism.

    ``m > 0``: ``m (a + Gamma v v) = e F^mu_nu v^nu``. ``m = 0`` leaves only the
    linear form, whose Euler-Lagrange equation is the constraint
    ``F_{nu mu} v^mu = 0``; the worldline is then carried along the initial
    velocity and the constraint violation is reported per sample.
    """
    cfg = cfg or IntegratorConfig()
    x0 = as_point(x0)
    v0 = np.asarray(v0, dtype=float)
    m = x0.size
    g, e, mass = fields.g, fields.e, fields.m
    F = FaradayTensor(fields.A) if fields.A is not None else None

    def force(x, v):
        if F is None or e == 0.0:
            return np.zeros(m)
        return e * np.linalg.solve(g.eval(x), F.eval(x) @ v)

    if mass == 0.0:
        t = output_grid(tau_end, cfg.step)
        X = x0 + t[:, None] * v0
        V = np.broadcast_to(v0, X.shape).copy()
        Fv = np.einsum("nab,nb->na", F.eval(X), V) if F is not None else np.zeros_like(V)
        res = np.max(np.abs(Fv), axis=1)
        return Trajectory(t, X, V, {"kinetic_residual": res}, {"kind": "lorentz", "branch": "massless"})

    def rhs(t, y):
        x, v = _split(y, m)
        a = -np.einsum("mnl,n,l->m", christoffel(g, x), v, v) + force(x, v) / mass
        return np.concatenate([v, a])

    t, Y, _ = integrate_ode(rhs, np.concatenate([x0, v0]), tau_end, cfg)
    X, V = Y[:, :m], Y[:, m:]
    acc = _derivative_series(V, t)
    kin = mass * (acc + np.einsum("nmab,na,nb->nm", christoffel(g, X), V, V))
    if F is not None and e != 0.0:
        kin = kin - e * np.linalg.solve(g.eval(X), np.einsum("nab,nb->na", F.eval(X), V)[..., None])[..., 0]
    diag = {"norm": _norm(g, X, V), "kinetic_residual": np.max(np.abs(kin), axis=1)}
    return Trajectory(t, X, V, diag, {"kind": "lorentz", "branch": "massive"})


def reparametrize(curve: Trajectory, alpha: float) -> Trajectory:
    """``tau -> tau / alpha``, ``v -> alpha v``; the image curve is unchanged."""
    if not (alpha > 0 and np.isfinite(alpha)):
        raise ValueError("alpha must be finite and positive")
    return Trajectory(curve.params / alpha, curve.points.copy(), curve.velocities * alpha,
                      {}, dict(curve.meta, reparametrized=alpha))


def conservation_report(spec: LagrangianSpec, curve: Trajectory) -> dict:
    """Max drift ``|Q(tau) - Q(tau_0)|`` of the Lagrangian, h and g(v, v)."""
    X, V = curve.points, curve.velocities
    jet = lagrangian_jet(spec, X, V, second=False)
    qs = {
        "lagrangian": jet.value,
        "hamiltonian": np.einsum("na,na->n", jet.p, V) - jet.value,
    }
    if spec.fields.g is not None:
        qs["norm"] = _norm(spec.fields.g, X, V)
    return {k: float(np.max(np.abs(q - q[0]))) for k, q in qs.items()}


def gyration_radius(points: np.ndarray) -> tuple[float, np.ndarray]:
    """Least-squares circle through planar points; returns ``(radius, per-point distance)``."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise DimensionError("need an (n, 2) array of planar points")
    M = np.column_stack([2 * P, np.ones(len(P))])
    sol, *_ = np.linalg.lstsq(M, (P**2).sum(axis=1), rcond=None)
    c = sol[:2]
    dist = np.linalg.norm(P - c, axis=1)
    return float(np.sqrt(sol[2] + c @ c)), dist


# ---------------------------------------------------------------------------
# curve comparison


def arclength_resample(points: np.ndarray, n: int = 2001) -> np.ndarray:
    """Resample a polyline at ``n`` equally spaced normalized arc-length values."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(points[:1], n, axis=0)
    keep = np.concatenate([[True], seg > 0])
    s, pts = s[keep] / s[-1], points[keep]
    return CubicSpline(s, pts, axis=0)(np.linspace(0.0, 1.0, n))


def curve_distance(a, b, n: int = 2001) -> float:
    """Sup-distance between two curves after normalized arc-length alignment."""
    pa = a.points if isinstance(a, Trajectory) else np.asarray(a, dtype=float)
    pb = b.points if isinstance(b, Trajectory) else np.asarray(b, dtype=float)
    return float(np.max(np.linalg.norm(arclength_resample(pa, n) - arclength_resample(pb, n), axis=1)))


__all__ = [
    "Trajectory",
    "IntegratorConfig",
    "christoffel",
    "el_residual",
    "el_residuals",
    "el_acceleration",
    "integrate_geodesic",
    "integrate_el",
    "integrate_lorentz",
    "reparametrize",
    "conservation_report",
    "curve_distance",
    "gyration_radius",
]
