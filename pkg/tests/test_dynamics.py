import csv
import io

import numpy as np
import pytest
from scipy.optimize import brentq

from branelab.dynamics import (
    Trajectory,
    conservation_report,
    curve_distance,
    el_residual,
    el_residuals,
    gyration_radius,
    integrate_el,
    integrate_geodesic,
    integrate_lorentz,
    reparametrize,
)
from branelab.errors import BoundaryError, DomainError, GaugeError
from branelab.geometry import LinearPotential, SchwarzschildField, minkowski, uniform_magnetic
from branelab.homlag import FieldSet, LagrangianSpec
from branelab.ode import IntegratorConfig

TIGHT = IntegratorConfig("dop853_adaptive", step=0.01, tol=1e-12)


def straight(tau, x0, v0):
    return Trajectory(tau, x0 + tau[:, None] * v0, np.broadcast_to(v0, (tau.size, len(v0))).copy())


def helix(tau, u, w, Omega):
    """Exact proper-time orbit in A = (0, By/2, -Bx/2, 0) with Omega = eB/m."""
    g0 = np.sqrt(1 + u**2 + w**2)
    X = np.stack([g0 * tau, (u / Omega) * np.sin(Omega * tau), (u / Omega) * (np.cos(Omega * tau) - 1), w * tau], 1)
    V = np.stack([g0 + 0 * tau, u * np.cos(Omega * tau), -u * np.sin(Omega * tau), w + 0 * tau], 1)
    return Trajectory(tau, X, V)


# -- Euler-Lagrange residuals -------------------------------------------------

def test_straight_line_has_zero_residual():
    tau = np.linspace(0, 5, 101)
    c = straight(tau, np.zeros(4), np.array([1.0, 0.3, -0.2, 0.1]))
    s = LagrangianSpec("L2_quadratic", FieldSet(minkowski()))
    assert np.abs(el_residuals(s, c)).max() < 1e-8


def test_non_geodesic_curve_is_detected():
    tau = np.linspace(0, 2, 201)
    X = np.stack([3 * tau, np.sin(2 * tau), 0.5 * tau**2, 0 * tau], 1)
    V = np.stack([3 + 0 * tau, 2 * np.cos(2 * tau), tau, 0 * tau], 1)
    s = LagrangianSpec("L2_quadratic", FieldSet(minkowski()))
    r = el_residual(s, Trajectory(tau, X, V), 100)
    # flat L2: residual is 2 * eta * acceleration
    acc = np.array([0.0, -4 * np.sin(2 * tau[100]), 1.0, 0.0])
    assert np.allclose(r, 2 * np.diag([1, -1, -1, -1]) @ acc, atol=1e-6)
    assert np.linalg.norm(r) > 0.1


def test_cyclotron_helix_residual():
    B, e, mass = 2.0, 1.5, 1.2
    fs = FieldSet(minkowski(), uniform_magnetic(B), e=e, m=mass)
    c = helix(np.linspace(0, 4, 801), 0.6, 0.3, e * B / mass)
    assert np.abs(el_residuals(LagrangianSpec("canonical_sum", fs), c)).max() < 1e-6
    wrong = helix(np.linspace(0, 4, 801), 0.6, 0.3, -e * B / mass)
    assert np.abs(el_residuals(LagrangianSpec("canonical_sum", fs), wrong)).max() > 0.1


def test_boundary_sample_raises():
    c = straight(np.linspace(0, 1, 11), np.zeros(4), np.array([1.0, 0, 0, 0]))
    s = LagrangianSpec("L2_quadratic", FieldSet(minkowski()))
    for i in (0, 10, -1):
        with pytest.raises(BoundaryError):
            el_residual(s, c, i)


# -- geodesics ---------------------------------------------------------------

def test_flat_geodesic_is_straight():
    x0 = np.array([0.5, 1.0, -1.0, 2.0])
    v0 = np.array([1.0, 0.3, 0.0, 0.0])
    tr = integrate_geodesic(minkowski(), x0, v0, IntegratorConfig(), 10.0)
    assert np.abs(tr.points - (x0 + tr.params[:, None] * v0)).max() < 1e-10
    assert np.abs(tr.diagnostics["norm"] - tr.diagnostics["norm"][0]).max() < 1e-10


def circular_orbit(rs, r0):
    """Equatorial circular orbit from the effective potential V = (1 - rs/r)(1 + L^2/r^2)."""
    def dV(r, L):
        return rs / r**2 * (1 + L**2 / r**2) - (1 - rs / r) * 2 * L**2 / r**3
    L = brentq(lambda L: dV(r0, L), 1e-6, 100.0)
    E = np.sqrt((1 - rs / r0) * (1 + L**2 / r0**2))
    return E / (1 - rs / r0), L / r0**2


def test_schwarzschild_circular_orbit():
    rs, r0 = 1.0, 8.0
    tdot, phidot = circular_orbit(rs, r0)
    x0 = np.array([0.0, r0, np.pi / 2, 0.0])
    v0 = np.array([tdot, 0.0, 0.0, phidot])
    period = 2 * np.pi / phidot
    cfg = IntegratorConfig("dop853_adaptive", step=0.5, tol=1e-12)
    tr = integrate_geodesic(SchwarzschildField(rs), x0, v0, cfg, period)
    assert np.abs(tr.points[:, 1] - r0).max() < 1e-6
    assert tr.points[-1, 3] == pytest.approx(2 * np.pi, rel=1e-8)
    assert np.abs(tr.diagnostics["norm"] - 1.0).max() < 1e-8


@pytest.mark.parametrize("metric", ["flat", "schwarzschild"])
def test_l1_and_l2_flows_coincide(metric):
    if metric == "flat":
        g, x0, v0 = minkowski(), np.zeros(4), np.array([1.2, 0.4, -0.3, 0.5])
    else:
        g, x0, v0 = SchwarzschildField(1.0), np.array([0.0, 7.0, 1.3, 0.2]), np.array([1.3, -0.1, 0.01, 0.04])
    v0 = v0 / np.sqrt(v0 @ g.eval(x0) @ v0)
    geo = integrate_geodesic(g, x0, v0, TIGHT, 10.0)
    el = integrate_el(LagrangianSpec("L1_sqrt", FieldSet(g)), x0, v0, TIGHT, 10.0, "proper_time")
    assert curve_distance(geo, el) < 1e-8
    assert np.abs(geo.points - el.points).max() < 1e-8


# -- EL flow ---------------------------------------------------------------

def test_el_without_charge_reduces_to_geodesic():
    g = SchwarzschildField(0.5)
    x0 = np.array([0.0, 6.0, 1.0, 0.0])
    v0 = np.array([1.2, 0.05, 0.01, 0.03])
    v0 = v0 / np.sqrt(v0 @ g.eval(x0) @ v0)
    fs = FieldSet(g, uniform_magnetic(1.0), e=0.0, m=1.0)
    el = integrate_el(LagrangianSpec("canonical_sum", fs), x0, v0, TIGHT, 5.0)
    geo = integrate_geodesic(g, x0, v0, TIGHT, 5.0)
    assert np.abs(el.points - geo.points).max() < 1e-8


def test_power_flow_solves_base_lagrangian():
    g = SchwarzschildField(1.0)
    x0 = np.array([0.0, 6.0, 1.2, 0.0])
    v0 = np.array([1.3, 0.02, 0.01, 0.05])
    fs = FieldSet(g)
    sq = LagrangianSpec("L2_quadratic", fs, power=2.0)
    tr = integrate_el(sq, x0, v0, TIGHT, 5.0, "affine")
    base = LagrangianSpec("L2_quadratic", fs)
    assert conservation_report(base, tr)["lagrangian"] < 1e-8
    assert np.abs(el_residuals(base, tr)).max() < 1e-8


def test_el_matches_lorentz_for_linear_potential():
    rng = np.random.default_rng(0)
    A = LinearPotential(rng.normal(size=4), 0.1 * rng.normal(size=(4, 4)))
    fs = FieldSet(minkowski(), A, e=1.1, m=1.0)
    x0 = np.zeros(4)
    v0 = np.array([1.0, 0.2, 0.1, -0.3])
    v0 = v0 / np.sqrt(v0 @ minkowski().eval(x0) @ v0)
    el = integrate_el(LagrangianSpec("canonical_sum", fs), x0, v0, TIGHT, 4.0)
    lz = integrate_lorentz(fs, x0, v0, TIGHT, 4.0)
    assert np.abs(el.points - lz.points).max() < 1e-8


def test_coordinate_time_gauge():
    fs = FieldSet(minkowski(), uniform_magnetic(1.0), e=1.0, m=1.0)
    s = LagrangianSpec("canonical_sum", fs)
    tr = integrate_el(s, np.zeros(4), np.array([2.0, 0.5, 0.0, 0.2]), TIGHT, 3.0, "coordinate_time")
    assert np.allclose(tr.velocities[:, 0], 1.0, atol=1e-12)
    assert np.allclose(tr.points[:, 0], tr.params, atol=1e-10)
    assert np.abs(el_residuals(s, tr)).max() < 1e-7


def test_gauge_errors():
    s = LagrangianSpec("canonical_sum", FieldSet(minkowski()))
    with pytest.raises(GaugeError):
        integrate_el(s, np.zeros(4), [-1.0, 0, 0, 0], TIGHT, 1.0, "coordinate_time")
    with pytest.raises(GaugeError):
        integrate_el(s, np.zeros(4), [0.0, 1.0, 0, 0], TIGHT, 1.0, "proper_time")
    with pytest.raises(GaugeError):
        integrate_el(s, np.zeros(4), [1.0, 0, 0, 0], TIGHT, 1.0, "lab_time")
    with pytest.raises(GaugeError):
        integrate_el(LagrangianSpec("L2_quadratic", FieldSet(minkowski())), np.zeros(4), [1.0, 0, 0, 0],
                     TIGHT, 1.0, "coordinate_time")


def test_geodesic_rejects_spacelike_start():
    with pytest.raises(DomainError):
        integrate_geodesic(minkowski(), np.zeros(4), [0.0, 1.0, 0.0, 0.0], TIGHT, 1.0)


# -- Lorentz flow -------------------------------------------------------------

def test_cyclotron_radius_and_helix():
    B, e, mass, u = 2.0, 1.0, 1.0, 0.5
    fs = FieldSet(minkowski(), uniform_magnetic(B), e=e, m=mass)
    v0 = np.array([np.sqrt(1 + u**2), u, 0.0, 0.0])
    tr = integrate_lorentz(fs, np.zeros(4), v0, TIGHT, 2 * np.pi)
    r, dist = gyration_radius(tr.points[:, 1:3])
    assert r == pytest.approx(mass * u / (e * B), abs=1e-6)
    assert np.ptp(dist) < 1e-6
    exact = helix(tr.params, u, 0.0, e * B / mass)
    assert np.abs(tr.points - exact.points).max() < 1e-8
    assert tr.diagnostics["kinetic_residual"][2:-2].max() < 1e-6


def test_zero_field_reproduces_geodesic():
    g = SchwarzschildField(1.0)
    x0 = np.array([0.0, 6.0, 1.2, 0.0])
    v0 = np.array([1.3, 0.02, 0.01, 0.05])
    lz = integrate_lorentz(FieldSet(g, None, e=0.0, m=1.0), x0, v0, TIGHT, 5.0)
    geo = integrate_geodesic(g, x0, v0, TIGHT, 5.0)
    assert np.abs(lz.points - geo.points).max() < 1e-10


def test_lorentz_norm_preserved():
    fs = FieldSet(SchwarzschildField(1.0), uniform_magnetic(0.3), e=1.0, m=1.0)
    x0 = np.array([0.0, 8.0, 1.4, 0.0])
    v0 = np.array([1.2, 0.0, 0.01, 0.03])
    tr = integrate_lorentz(fs, x0, v0, IntegratorConfig(), 10.0)
    assert np.ptp(tr.diagnostics["norm"]) < 1e-8


def test_massless_branch():
    fs = FieldSet(minkowski(), uniform_magnetic(1.5), e=1.0, m=0.0)
    along = integrate_lorentz(fs, np.zeros(4), [1.0, 0.0, 0.0, 1.0], TIGHT, 2.0)
    assert np.all(along.diagnostics["kinetic_residual"] == 0.0)
    across = integrate_lorentz(fs, np.zeros(4), [1.0, 0.7, 0.0, 0.0], TIGHT, 2.0)
    assert np.allclose(across.diagnostics["kinetic_residual"], 1.5 * 0.7)
    assert set(across.diagnostics) == {"kinetic_residual"}


# -- reparametrization and conservation -----------------------------------

def test_reparametrize_examples():
    c = straight(np.linspace(0, 1, 11), np.zeros(4), np.array([1.0, 0.5, 0, 0]))
    same = reparametrize(c, 1.0)
    assert np.array_equal(same.points, c.points) and np.array_equal(same.velocities, c.velocities)
    twice = reparametrize(c, 2.0)
    assert np.array_equal(twice.points, c.points)
    assert np.array_equal(twice.velocities, 2 * c.velocities)
    assert np.array_equal(twice.params, c.params / 2)
    with pytest.raises(ValueError):
        reparametrize(c, 0.0)


def test_reparametrized_data_gives_same_image():
    g = SchwarzschildField(1.0)
    x0 = np.array([0.0, 6.0, 1.2, 0.0])
    v0 = np.array([1.3, 0.02, 0.01, 0.05])
    s = LagrangianSpec("L2_quadratic", FieldSet(g))
    alpha = 2.5
    a = reparametrize(integrate_el(s, x0, v0, TIGHT, 6.0, "affine"), alpha)
    b = integrate_el(s, x0, alpha * v0, TIGHT, 6.0 / alpha, "affine")
    assert curve_distance(a, b) < 1e-8
    assert not np.allclose(a.params[-1], 6.0)


def test_conservation_reports():
    flat = integrate_geodesic(minkowski(), np.zeros(4), [1.0, 0.3, 0.1, 0.0], TIGHT, 10.0)
    rep = conservation_report(LagrangianSpec("L2_quadratic", FieldSet(minkowski())), flat)
    assert set(rep) == {"lagrangian", "hamiltonian", "norm"}
    assert max(rep.values()) < 1e-10
    g = SchwarzschildField(1.0)
    x0 = np.array([0.0, 6.0, 1.2, 0.0])
    v0 = np.array([1.3, 0.02, 0.01, 0.05])
    base = LagrangianSpec("L2_quadratic", FieldSet(g))
    assert conservation_report(base, integrate_el(base, x0, v0, TIGHT, 10.0, "affine"))["lagrangian"] < 1e-8
    cube = LagrangianSpec("L2_quadratic", FieldSet(g), power=3.0)
    tr = integrate_el(cube, x0, v0, TIGHT, 10.0, "affine")
    assert conservation_report(base, tr)["lagrangian"] < 1e-8
    assert conservation_report(cube, tr)["hamiltonian"] < 1e-8


# -- serialization ---------------------------------------------------------

def test_csv_columns():
    tr = integrate_lorentz(FieldSet(minkowski(), uniform_magnetic(1.0), e=1.0, m=1.0), np.zeros(4),
                           [1.2, 0.3, 0.0, 0.0], IntegratorConfig(), 1.0)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["tau", "x0", "x1", "x2", "x3", "v0", "v1", "v2", "v3", "norm", "kinetic_residual"]
    assert len(rows) == len(tr) + 1
    assert float(rows[-1][0]) == tr.params[-1]


def test_trajectory_rejects_non_monotone():
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0, 1.0], np.zeros((3, 2)), np.zeros((3, 2)))
