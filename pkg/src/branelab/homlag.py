"""Homogeneous Lagrangians in velocities and their derivatives.

Every Lagrangian handled here is a sum of *terms* ``c * f(S(v, ..., v))``
where ``S`` is a symmetric tensor field of rank ``n`` and ``f(s) = s**q``
(a real root for odd ``n``). The electromagnetic coupling is the rank-1
term with ``q = 1``, the metric root the rank-2 term with ``q = 1/2`` and
each extra ``S_n`` contributes the ``n``-th root, so a term is homogeneous
of order ``n * q`` in the velocity.

:func:`lagrangian_jet` returns value, momentum, coordinate gradient and the
two second-derivative blocks needed by the Euler-Lagrange flow. The same
engine serves brane Lagrangians, where the "velocity" is the vector of
Jacobian minors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import DegenerateError, DimensionError, DomainError
from .geometry import (
    ConstantField,
    GradientField,
    PolynomialField,
    ScaledField,
    SumField,
    SymTensorField,
    as_point,
    contract,
)

KINDS = ("L1_sqrt", "L2_quadratic", "linear_form", "canonical_sum")


@dataclass(frozen=True)
class FieldSet:
    """Interaction fields over one chart: potential, metric and higher ``S_n``."""

    g: SymTensorField | None
    A: SymTensorField | None = None
    extras: tuple = ()
    e: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "extras", tuple(self.extras))
        if self.m < 0:
            raise ValueError("mass coupling must be non-negative")
        if self.g is not None and (self.g.rank != 2 or not self.g.is_metric):
            raise ValueError("g must be a rank-2 field flagged as a metric")
        if self.A is not None and self.A.rank != 1:
            raise ValueError("A must be a rank-1 field")
        ranks = [s.rank for s in self.extras]
        if any(r < 3 for r in ranks):
            raise ValueError("extra fields must have rank >= 3")
        if len(set(ranks)) != len(ranks):
            raise ValueError("each extra rank may appear at most once")

    @property
    def dim(self) -> int:
        for f in (self.g, self.A, *self.extras):
            if f is not None:
                return f.dim
        raise ValueError("empty field set")

    def extra(self, rank: int) -> SymTensorField:
        for s in self.extras:
            if s.rank == rank:
                return s
        raise KeyError(rank)


@dataclass(frozen=True)
class Term:
    field: SymTensorField
    coeff: float = 1.0
    power: float = 1.0
    absolute: bool = False  # use |s|**q instead of the real power
    role: str = "extra"

    @property
    def rank(self) -> int:
        return self.field.rank

    @property
    def order(self) -> float:
        return self.rank * self.power


@dataclass(frozen=True)
class LagrangianSpec:
    kind: str
    fields: FieldSet
    included_ranks: frozenset | None = None
    power: float = 1.0
    gauge: SymTensorField | None = None  # scalar Lambda added as d(Lambda)/dtau

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Lagrangian kind {self.kind!r}")
        f = self.fields
        avail = {s.rank for s in f.extras}
        if self.included_ranks is None:
            object.__setattr__(self, "included_ranks", frozenset(avail))
        else:
            inc = frozenset(int(r) for r in self.included_ranks)
            if not inc <= avail:
                raise ValueError(f"included ranks {sorted(inc - avail)} not present in the field set")
            object.__setattr__(self, "included_ranks", inc)
        if self.kind in ("L1_sqrt", "L2_quadratic", "canonical_sum") and f.g is None:
            raise ValueError(f"{self.kind} needs a metric")
        if self.kind == "L1_sqrt" and f.m <= 0:
            raise ValueError("L1_sqrt needs a positive mass coupling")
        if self.kind == "linear_form" and f.A is None:
            raise ValueError("linear_form needs a potential A")
        if self.power <= 0:
            raise ValueError("power must be positive")
        if self.gauge is not None and self.gauge.rank != 0:
            raise DimensionError("gauge function must be a scalar field")

    def terms(self) -> list[Term]:
        f = self.fields
        if self.kind == "L2_quadratic":
            return [Term(f.g, 1.0, 1.0, role="metric")]
        if self.kind == "L1_sqrt":
            return [Term(f.g, f.m, 0.5, role="metric")]
        if self.kind == "linear_form":
            return [Term(f.A, f.e, 1.0, role="potential")]
        out = []
        if f.A is not None and f.e != 0.0:
            out.append(Term(f.A, f.e, 1.0, role="potential"))
        if f.m != 0.0:
            out.append(Term(f.g, f.m, 0.5, role="metric"))
        for s in sorted(f.extras, key=lambda s: s.rank):
            if s.rank in self.included_ranks:
                out.append(Term(s, 1.0, 1.0 / s.rank, role="extra"))
        return out

    @property
    def order(self) -> float:
        """Homogeneity order of the (gauge-free) Lagrangian."""
        orders = {round(t.order, 12) for t in self.terms()}
        if len(orders) != 1:
            raise ValueError("terms of mixed homogeneity order")
        return orders.pop() * self.power

    @property
    def is_first_order(self) -> bool:
        return abs(self.order - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# scalar power laws and their derivatives


def _is_int(q: float) -> bool:
    return abs(q - round(q)) < 1e-15


def _power_derivs(s, q: float, rank: int, absolute: bool, need_second: bool = True):
    """Return f(s), f'(s), f''(s) for ``f = s**q`` with real/absolute root rules."""
    s = np.asarray(s, dtype=float)
    if _is_int(q) and not absolute:
        k = int(round(q))
        f0 = s**k
        f1 = k * s ** (k - 1) if k >= 1 else np.zeros_like(s)
        f2 = k * (k - 1) * s ** (k - 2) if k >= 2 else np.zeros_like(s)
        return f0, f1, f2
    a = np.abs(s)
    sg = np.sign(s)
    odd_root = (not absolute) and rank % 2 == 1 and _is_int(1.0 / q) and int(round(1.0 / q)) % 2 == 1
    if not absolute and not odd_root and np.any(s < 0):
        raise DomainError(f"negative radicand in the rank-{rank} term", rank=rank)
    if np.any(a == 0.0) and q < 2:
        raise DomainError(f"vanishing radicand in the rank-{rank} term", rank=rank)
    if absolute:
        f0 = a**q
        f1 = q * sg * a ** (q - 1)
        f2 = q * (q - 1) * a ** (q - 2)
    else:
        f0 = sg * a**q if odd_root else a**q
        f1 = q * a ** (q - 1)
        f2 = q * (q - 1) * a ** (q - 2) * (sg if odd_root else 1.0)
    return f0, f1, (f2 if need_second else None)


def _power_value(s, q: float, rank: int, absolute: bool):
    s = np.asarray(s, dtype=float)
    if _is_int(q) and not absolute:
        return s ** int(round(q))
    a = np.abs(s)
    if absolute:
        return a**q
    odd_root = rank % 2 == 1 and _is_int(1.0 / q) and int(round(1.0 / q)) % 2 == 1
    if odd_root:
        return np.sign(s) * a**q
    if np.any(s < 0):
        raise DomainError(f"negative radicand in the rank-{rank} term", rank=rank)
    return a**q


# ---------------------------------------------------------------------------
# jets


@dataclass
class Jet:
    """Value and derivatives of a Lagrangian at (x, v).

    ``p`` = dL/dv, ``dx`` = dL/dx, ``hess[a, b]`` = d2L/dv_a dv_b and
    ``mixed[a, lam]`` = d2L/dv_a dx_lam.
    """

    value: np.ndarray
    p: np.ndarray
    dx: np.ndarray
    hess: np.ndarray | None = None
    mixed: np.ndarray | None = None
    parts: dict = field(default_factory=dict)


def term_jet(term: Term, x, v, second: bool = True) -> Jet:
    n = term.rank
    S = term.field.eval(x)
    dS = term.field.deriv(x)
    S1 = contract(S, v, n - 1)
    s = (S1 * v).sum(-1)
    ds = contract(dS, v, n)
    f0, f1, f2 = _power_derivs(s, term.power, n, term.absolute, need_second=second)
    c = term.coeff
    value = c * f0
    p = (c * n * f1)[..., None] * S1
    dx = (c * f1)[..., None] * ds
    hess = mixed = None
    if second:
        outer = S1[..., :, None] * S1[..., None, :]
        hess = (c * f2 * n * n)[..., None, None] * outer
        if n >= 2:
            S2 = contract(S, v, n - 2)
            hess = hess + (c * f1 * n * (n - 1))[..., None, None] * S2
        dS1 = contract(dS, v, n - 1)  # (..., mx, d)
        mixed = (c * f2 * n)[..., None, None] * (S1[..., :, None] * ds[..., None, :])
        mixed = mixed + (c * f1 * n)[..., None, None] * np.swapaxes(dS1, -1, -2)
    return Jet(value, p, dx, hess, mixed)


def _add(a: Jet, b: Jet) -> Jet:
    return Jet(
        a.value + b.value,
        a.p + b.p,
        a.dx + b.dx,
        None if a.hess is None else a.hess + b.hess,
        None if a.mixed is None else a.mixed + b.mixed,
    )


def terms_jet(terms: Iterable[Term], x, v, second: bool = True) -> Jet:
    total = None
    parts = {}
    for t in terms:
        j = term_jet(t, x, v, second)
        parts.setdefault(t.role, []).append(j)
        total = j if total is None else _add(total, j)
    if total is None:
        raise ValueError("Lagrangian has no terms")
    total.parts = parts
    return total


def _apply_power(j: Jet, alpha: float) -> Jet:
    if alpha == 1.0:
        return j
    f0, f1, f2 = _power_derivs(j.value, alpha, 1, absolute=False)
    p = f1[..., None] * j.p
    dx = f1[..., None] * j.dx
    hess = mixed = None
    if j.hess is not None:
        hess = f2[..., None, None] * (j.p[..., :, None] * j.p[..., None, :]) + f1[..., None, None] * j.hess
        mixed = f2[..., None, None] * (j.p[..., :, None] * j.dx[..., None, :]) + f1[..., None, None] * j.mixed
    return Jet(f0, p, dx, hess, mixed, j.parts)


def lagrangian_jet(spec: LagrangianSpec, x, v, second: bool = True) -> Jet:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != spec.fields.dim:
        raise DimensionError("velocity dimension does not match the fields")
    j = _apply_power(terms_jet(spec.terms(), x, v, second), spec.power)
    if spec.gauge is not None:
        gj = term_jet(Term(GradientField(spec.gauge, x.shape[-1]), 1.0, 1.0, role="gauge"), x, v, second)
        parts = j.parts
        j = _add(j, gj)
        j.parts = parts
    return j


# ---------------------------------------------------------------------------
# operations


def eval_lagrangian(spec: LagrangianSpec, x, v) -> float:
    x = as_point(x)
    v = np.asarray(v, dtype=float)
    total = 0.0
    for t in spec.terms():
        s = contract(t.field.eval(x), v, t.rank)
        total = total + t.coeff * _power_value(s, t.power, t.rank, t.absolute)
    if spec.power != 1.0:
        total = _power_value(total, spec.power, 1, False)
    if spec.gauge is not None:
        total = total + spec.gauge.deriv(x) @ v
    return float(total)


def homogeneity_order(spec: LagrangianSpec, x, v, alpha: float) -> float:
    if alpha <= 0 or alpha == 1.0:
        raise ValueError("alpha must be positive and different from 1")
    base = eval_lagrangian(spec, x, v)
    if base == 0.0:
        raise DegenerateError("L(x, v) = 0; order is undefined")
    scaled = eval_lagrangian(spec, x, alpha * np.asarray(v, dtype=float))
    return math.log(scaled / base) / math.log(alpha)


def hamiltonian_function(spec: LagrangianSpec, x, v) -> float:
    j = lagrangian_jet(spec, as_point(x), v, second=False)
    return float(np.dot(j.p, v) - j.value)


@dataclass(frozen=True)
class MomentumPair:
    p: np.ndarray
    pi: np.ndarray


def momenta(spec: LagrangianSpec, x, v) -> MomentumPair:
    """Canonical momentum and the generalized momentum with A- and S-parts removed."""
    x = as_point(x)
    v = np.asarray(v, dtype=float)
    if spec.fields.g is not None:
        gvv = v @ spec.fields.g.eval(x) @ v
        if gvv <= 0:
            raise DomainError("velocity is not timelike", rank=2)
    j = lagrangian_jet(spec, x, v, second=False)
    pi = j.p.copy()
    if spec.power == 1.0:
        for role in ("potential", "extra"):
            for part in j.parts.get(role, []):
                pi = pi - part.p
        if spec.gauge is not None:
            pi = pi - spec.gauge.deriv(x)
    return MomentumPair(j.p, pi)


def mass_shell_residual(spec: LagrangianSpec, x, v) -> float:
    """``g^{ab} pi_a pi_b - m^2``; vanishes identically for metric-root Lagrangians."""
    if spec.kind not in ("L1_sqrt", "canonical_sum") or spec.power != 1.0:
        raise ValueError("mass shell needs a first-order Lagrangian with a metric root term")
    x = as_point(x)
    pi = momenta(spec, x, v).pi
    ginv = np.linalg.inv(spec.fields.g.eval(x))
    return float(pi @ ginv @ pi - spec.fields.m**2)


def source_gradient(spec: LagrangianSpec, x, v, rank: int) -> np.ndarray:
    """dL/dS_{a1..an} with every component treated as independent.

    Includes the coupling in front of the term (``e`` for rank 1, ``m`` for the
    metric). Users storing only sorted multi-indices must multiply by the
    multiplicity of each index class themselves.
    """
    x = as_point(x)
    v = np.asarray(v, dtype=float)
    term = next((t for t in spec.terms() if t.rank == rank), None)
    if term is None:
        raise ValueError(f"no rank-{rank} term in this Lagrangian")
    s = float(contract(term.field.eval(x), v, rank))
    if s == 0.0 or (s < 0 and rank % 2 == 0 and not _is_int(term.power)):
        raise DegenerateError(f"rank-{rank} radicand is {s}; source is undefined")
    _, f1, _ = _power_derivs(s, term.power, rank, term.absolute, need_second=False)
    mono = np.ones(())
    for _ in range(rank):
        mono = np.multiply.outer(mono, v)
    scale = term.coeff * float(f1)
    if spec.power != 1.0:
        L = eval_lagrangian(replace(spec, power=1.0, gauge=None), x, v)
        scale *= spec.power * abs(L) ** (spec.power - 1.0)
    return scale * mono


def gauge_shift(spec: LagrangianSpec, gauge: SymTensorField) -> LagrangianSpec:
    """Return the spec of ``L + d(Lambda)/dtau``.

    For forms carrying a potential with ``e != 0`` the shift is absorbed as
    ``A -> A + d(Lambda)/e``; otherwise it is kept as an explicit total
    derivative term.
    """
    if gauge.rank != 0:
        raise DimensionError("gauge function must be scalar")
    f = spec.fields
    if spec.kind in ("linear_form", "canonical_sum") and f.e != 0.0 and spec.power == 1.0:
        dl = ScaledField(GradientField(gauge, f.dim), 1.0 / f.e)
        A = dl if f.A is None else SumField([f.A, dl])
        return replace(spec, fields=replace(f, A=A))
    if spec.gauge is not None:
        gauge = SumField([spec.gauge, gauge])
    return replace(spec, gauge=gauge)


# ---------------------------------------------------------------------------
# gauge function families (scalar fields)


def constant_gauge(c: float) -> ConstantField:
    return ConstantField(np.asarray(float(c)))


def linear_gauge(k, c: float = 0.0) -> PolynomialField:
    k = np.asarray(k, dtype=float)
    return PolynomialField([np.asarray(float(c)), k], rank=0)


def polynomial_gauge(c0: float, c1, c2=None, c3=None) -> PolynomialField:
    coeffs = [np.asarray(float(c0)), np.asarray(c1, dtype=float)]
    if c2 is not None:
        coeffs.append(np.asarray(c2, dtype=float))
    if c3 is not None:
        coeffs.append(np.asarray(c3, dtype=float))
    return PolynomialField(coeffs, rank=0)


GAUGE_FAMILIES = {
    "constant": lambda p: constant_gauge(p["c"]),
    "linear": lambda p: linear_gauge(p["k"], p.get("c", 0.0)),
    "polynomial": lambda p: polynomial_gauge(p.get("c0", 0.0), p["c1"], p.get("c2"), p.get("c3")),
}

__all__ = [
    "FieldSet",
    "LagrangianSpec",
    "MomentumPair",
    "Term",
    "Jet",
    "lagrangian_jet",
    "eval_lagrangian",
    "homogeneity_order",
    "hamiltonian_function",
    "momenta",
    "mass_shell_residual",
    "source_gradient",
    "gauge_shift",
]
