"""Randomized identity batteries shared by the scenario runner and the test suite.

Each battery draws admissible states from a seeded generator and returns the
worst residual it saw together with the number of draws.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .brane import InducedBlockMetric, enumerate_multiindices, minors
from .geometry import (
    ConstantField,
    LinearPotential,
    PlaneWavePotential,
    PolynomialField,
    ScaledField,
    SchwarzschildField,
    SymTensorField,
    minkowski,
    symmetrize,
    uniform_magnetic,
)
from .homlag import FieldSet, LagrangianSpec, eval_lagrangian, mass_shell_residual, source_gradient
from .quantum import build_clifford, dirac_operator, kg_factorization_residual, trace_identity

METRIC_FAMILIES = ("minkowski", "scaled_minkowski", "schwarzschild", "polynomial")
POTENTIAL_FAMILIES = ("linear_potential", "uniform_magnetic", "plane_wave", "polynomial")


@dataclass(frozen=True)
class BatteryResult:
    name: str
    draws: int
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tol)


# ---------------------------------------------------------------------------
# random admissible states


def _random_sym(rng, rank: int, m: int, scale: float = 1.0) -> np.ndarray:
    return scale * symmetrize(rng.normal(size=(m,) * rank))


def random_metric(rng, family: str, m: int = 4) -> SymTensorField:
    if family == "minkowski":
        return minkowski(m)
    if family == "scaled_minkowski":
        return ScaledField(minkowski(m), rng.uniform(0.5, 2.0))
    if family == "schwarzschild":
        return SchwarzschildField(rng.uniform(0.5, 1.5), m)
    if family == "polynomial":
        eta = np.diag([1.0] + [-1.0] * (m - 1))
        lin = symmetrize(0.02 * rng.normal(size=(m, m, m)), 2)
        return PolynomialField([eta, lin], rank=2, signature="lorentzian")
    raise KeyError(family)


def random_potential(rng, family: str, m: int = 4) -> SymTensorField:
    if family == "linear_potential":
        return LinearPotential(rng.normal(size=m), 0.3 * rng.normal(size=(m, m)))
    if family == "uniform_magnetic":
        return uniform_magnetic(rng.uniform(0.2, 2.0), m)
    if family == "plane_wave":
        return PlaneWavePotential(rng.normal(size=m), rng.normal(size=m), rng.uniform(0, 2 * np.pi))
    if family == "polynomial":
        lin = _random_sym(rng, 2, m, 0.2)
        return PolynomialField([rng.normal(size=m), lin], rank=1)
    raise KeyError(family)


def random_extra(rng, rank: int, m: int = 4, x_dependent: bool = False) -> SymTensorField:
    """Odd ranks are arbitrary (signed real root); rank 4 is the square of a quadric ``B(x)``."""
    if rank % 2 == 1:
        base = _random_sym(rng, rank, m, 0.3)
        if not x_dependent:
            return ConstantField(base)
        lin = 0.05 * symmetrize(rng.normal(size=(m,) + (m,) * rank), rank)
        return PolynomialField([base, lin], rank=rank)
    if rank != 4:
        raise ValueError("only rank 4 is supported among even extras")
    B0 = np.eye(m) + 0.2 * _random_sym(rng, 2, m)
    if not x_dependent:
        return ConstantField(0.1 * symmetrize(np.multiply.outer(B0, B0)))
    B1 = 0.05 * symmetrize(rng.normal(size=(m, m, m)), 2)  # B(x) = B0 + B1_k x^k
    c1 = np.stack([2 * symmetrize(np.multiply.outer(B1[k], B0)) for k in range(m)])
    c2 = np.empty((m, m) + (m,) * 4)
    for k in range(m):
        for l in range(m):
            c2[k, l] = symmetrize(np.multiply.outer(B1[k], B1[l]))
    c2 = 0.5 * (c2 + np.swapaxes(c2, 0, 1))
    return PolynomialField([0.1 * symmetrize(np.multiply.outer(B0, B0)), 0.1 * c1, 0.1 * c2], rank=4)


def random_point(rng, g: SymTensorField) -> np.ndarray:
    m = g.dim
    if isinstance(g, SchwarzschildField):
        x = np.zeros(m)
        x[0] = rng.uniform(-5, 5)
        x[1] = rng.uniform(3.0, 10.0) * g.rs
        if m == 4:
            x[2] = rng.uniform(0.3, np.pi - 0.3)
        x[-1] = rng.uniform(0, 2 * np.pi)
        return x
    return rng.uniform(-1.0, 1.0, size=m)


def random_timelike(rng, g: SymTensorField, x, norm: float | None = None) -> np.ndarray:
    """Solve ``g(v, v) = norm`` for ``v^0`` given random spatial components."""
    G = g.eval(x)
    w = 0.6 * rng.normal(size=G.shape[0] - 1)
    norm = rng.uniform(0.3, 3.0) if norm is None else norm
    a = G[0, 0]
    b = 2.0 * G[0, 1:] @ w
    c = w @ G[1:, 1:] @ w - norm
    v0 = (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)
    return np.concatenate([[v0], w])


def random_state(rng, index: int, m: int = 4, ranks=(3, 4), x_dependent: bool = True):
    """Cycle through metric and potential families; returns ``(spec, x, v)`` for canonical_sum."""
    gfam = METRIC_FAMILIES[index % len(METRIC_FAMILIES)]
    afam = POTENTIAL_FAMILIES[(index // len(METRIC_FAMILIES)) % len(POTENTIAL_FAMILIES)]
    g = random_metric(rng, gfam, m)
    A = random_potential(rng, afam, m)
    extras = tuple(random_extra(rng, r, m, x_dependent) for r in ranks)
    fs = FieldSet(g, A, extras, e=rng.uniform(-2, 2), m=rng.uniform(0.5, 2.0))
    x = random_point(rng, g)
    v = random_timelike(rng, g, x)
    return LagrangianSpec("canonical_sum", fs), x, v


# ---------------------------------------------------------------------------
# batteries


def homogeneity_battery(n: int = 1000, seed: int = 0, tol: float = 1e-10) -> BatteryResult:
    """``|L(x, a v) - a L(x, v)| / |a L|`` for canonical_sum over all families."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n):
        spec, x, v = random_state(rng, i)
        alpha = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        L = eval_lagrangian(spec, x, v)
        La = eval_lagrangian(spec, x, alpha * v)
        worst = max(worst, abs(La - alpha * L) / max(abs(alpha * L), 1e-300))
    return BatteryResult("homogeneity", n, worst, tol)


def mass_shell_battery(n: int = 1000, seed: int = 0, tol: float = 1e-10) -> BatteryResult:
    """``g^{ab} pi_a pi_b - m^2`` relative to ``m^2``, with rank-3 and rank-4 extras."""
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for i in range(n):
        spec, x, v = random_state(rng, i)
        worst = max(worst, abs(mass_shell_residual(spec, x, v)) / spec.fields.m**2)
    return BatteryResult("mass_shell", n, worst, tol)


def factorization_battery(n: int = 1000, seed: int = 0, tol: float = 1e-12) -> BatteryResult:
    """Klein-Gordon factorization with p, A, e, mass uniform in [-5, 5]."""
    rng = np.random.default_rng(seed + 2)
    reps = {m: build_clifford(m) for m in (2, 3, 4)}
    worst = 0.0
    for i in range(n):
        rep = reps[(2, 3, 4)[i % 3]]
        p, A = rng.uniform(-5, 5, size=(2, rep.dim))
        e, mass = rng.uniform(-5, 5, size=2)
        worst = max(worst, kg_factorization_residual(rep, p, A, e, mass))
    return BatteryResult("factorization", n, worst, tol)


def anticommutation_battery(dims=(2, 3, 4), tol: float = 1e-12) -> BatteryResult:
    worst = max(build_clifford(m).anticommutation_error() for m in dims)
    return BatteryResult("anticommutation", len(dims), worst, tol)


def trace_identity_battery(dims=(2, 3, 4), tol: float = 1e-12) -> BatteryResult:
    worst = 0.0
    for m in dims:
        rep = build_clifford(m)
        T = trace_identity(rep, np.diag(rep.metric))
        worst = max(worst, float(np.max(np.abs(T - m * rep.identity))))
    return BatteryResult("trace_identity", len(dims), worst, tol)


def kernel_scan_battery(dims=(2, 3, 4), n_grid: int = 9, seed: int = 0, tol: float = 1e-8) -> BatteryResult:
    """Compare ``|det D|`` with ``|pi.pi - m^2|**(size/2)`` and the kernel with the mass shell.

    The grid mixes exactly on-shell momenta with off-shell ones; the residual is
    the worst relative mismatch of the determinant, and any disagreement
    between "det vanishes" and "on shell" counts as an infinite residual.
    """
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    count = 0
    for m in dims:
        rep = build_clifford(m)
        half = rep.size // 2
        for mass in (0.0, 0.5, 1.0, 2.0):
            for comps in itertools.product(np.linspace(-2, 2, n_grid), repeat=1):
                w = np.full(m - 1, comps[0]) * rng.uniform(0.2, 1.0, size=m - 1)
                for shell in (True, False):
                    p0 = np.sqrt(w @ w + mass**2)
                    if not shell:
                        p0 = p0 + rng.uniform(0.1, 1.0)
                    p = np.concatenate([[p0], w])
                    pp = float(np.sum(rep.metric * p * p)) - mass**2
                    d = abs(np.linalg.det(dirac_operator(rep, p, mass=mass)))
                    expect = abs(pp) ** half
                    scale = max(1.0, p0**2) ** half
                    worst = max(worst, abs(d - expect) / scale)
                    if (d / scale < tol) != (abs(pp) < tol):
                        worst = float("inf")
                    count += 1
    return BatteryResult("kernel_scan", count, worst, tol)


def source_gradient_battery(n: int = 60, seed: int = 0, ranks=(2, 3, 4), h: float = 1e-3,
                            tol: float = 1e-6) -> BatteryResult:
    """Source gradient vs Richardson-extrapolated central differences in one tensor component."""
    rng = np.random.default_rng(seed + 4)
    worst = 0.0
    m = 4
    for i in range(n):
        rank = ranks[i % len(ranks)]
        g = minkowski(m).values
        S3 = _random_sym(rng, 3, m, 0.3)
        B = np.eye(m) + 0.2 * _random_sym(rng, 2, m)
        S4 = 0.1 * symmetrize(np.multiply.outer(B, B))
        base = {2: g, 3: S3, 4: S4}
        x = rng.uniform(-1, 1, size=m)
        v = random_timelike(rng, minkowski(m), x)
        idx = tuple(rng.integers(0, m, size=rank))

        def L(delta):
            vals = {r: base[r].copy() for r in base}
            vals[rank][idx] += delta
            gf = ConstantField(vals[2], signature="lorentzian", check_symmetry=False)
            ex = tuple(ConstantField(vals[r], check_symmetry=False) for r in (3, 4))
            spec = LagrangianSpec("canonical_sum", FieldSet(gf, None, ex, e=0.0, m=1.3))
            return eval_lagrangian(spec, x, v), spec

        _, spec = L(0.0)
        grad = source_gradient(spec, x, v, rank)[idx]
        d1 = (L(h)[0] - L(-h)[0]) / (2 * h)
        d2 = (L(h / 2)[0] - L(-h / 2)[0]) / h
        fd = (4 * d2 - d1) / 3
        worst = max(worst, abs(grad - fd) / max(abs(fd), 1e-12))
    return BatteryResult("source_gradient", n, worst, tol)


def lagrange_identity_battery(n: int = 1000, seed: int = 0, tol: float = 1e-10) -> BatteryResult:
    """``G(omega, omega)`` from minors vs ``det(g(t_a, t_b))`` for random tangent pairs."""
    rng = np.random.default_rng(seed + 5)
    worst = 0.0
    m, D = 4, 2
    idx = enumerate_multiindices(m, D)
    for i in range(n):
        g = random_metric(rng, METRIC_FAMILIES[i % len(METRIC_FAMILIES)], m)
        x = random_point(rng, g)
        J = rng.normal(size=(m, D))
        om = minors(J, idx)
        G = InducedBlockMetric(g, D).eval(x)
        lhs = float(om @ G @ om)
        h = J.T @ g.eval(x) @ J
        rhs = float(np.linalg.det(h))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return BatteryResult("lagrange_identity", n, worst, tol)


BATTERIES = {
    "homogeneity": homogeneity_battery,
    "mass_shell": mass_shell_battery,
    "factorization": factorization_battery,
    "anticommutation": anticommutation_battery,
    "trace_identity": trace_identity_battery,
    "kernel_scan": kernel_scan_battery,
    "source_gradient": source_gradient_battery,
    "lagrange_identity": lagrange_identity_battery,
}

