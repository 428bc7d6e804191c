"""Charts, symmetric tensor fields over a chart and their exact derivatives.

All fields are evaluated in batch: a point array of shape ``(..., m)`` maps to
component arrays of shape ``(..., d, ..., d)`` with ``rank`` trailing axes.
``deriv`` puts the coordinate-derivative axis right after the batch axes,
so ``field.deriv(x)[..., lam, i, j]`` is ``d_lam S_ij``.

Fields are members of a small set of analytic families. The derivatives are
hand-coded per family and are cross-checked against Richardson-extrapolated
central differences (:func:`central_difference`).
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, NumericalError, SignatureError

Point = np.ndarray
Velocity = np.ndarray


def as_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim < 1:
        raise DimensionError("a point needs at least one coordinate")
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite coordinates")
    return x


# ---------------------------------------------------------------------------
# tensor helpers


def contract(tensor: np.ndarray, v: np.ndarray, k: int) -> np.ndarray:
    """Contract the last ``k`` axes of ``tensor`` with the vector ``v``.

    ``v`` has shape ``(..., d)`` with the same batch shape as ``tensor``.
    """
    v = np.asarray(v, dtype=float)
    out = tensor
    for _ in range(k):
        vb = v.reshape(v.shape[:-1] + (1,) * (out.ndim - v.ndim) + v.shape[-1:])
        out = (out * vb).sum(axis=-1)
    return out


def symmetrize(tensor: np.ndarray, n: int | None = None) -> np.ndarray:
    """Average over all permutations of the last ``n`` axes."""
    tensor = np.asarray(tensor, dtype=float)
    n = tensor.ndim if n is None else n
    if n < 2:
        return tensor.copy()
    lead = tensor.ndim - n
    perms = list(itertools.permutations(range(n)))
    acc = np.zeros_like(tensor)
    for p in perms:
        acc += np.transpose(tensor, tuple(range(lead)) + tuple(lead + i for i in p))
    acc /= len(perms)
    # copy the sorted-index entry to every permutation so symmetry is exact
    grids = np.indices(tensor.shape[lead:])
    canon = np.sort(grids, axis=0)
    return acc[(Ellipsis,) + tuple(canon)]


def is_symmetric(tensor: np.ndarray, n: int | None = None, atol: float = 0.0) -> bool:
    tensor = np.asarray(tensor)
    n = tensor.ndim if n is None else n
    lead = tensor.ndim - n
    for i in range(n - 1):
        axes = list(range(tensor.ndim))
        axes[lead + i], axes[lead + i + 1] = axes[lead + i + 1], axes[lead + i]
        if not np.allclose(tensor, np.transpose(tensor, axes), rtol=0.0, atol=atol):
            return False
    return True


def _contract_first(coeff: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    """Contract the first ``k`` axes of an unbatched ``coeff`` with batched ``x``."""
    batch = x.shape[:-1]
    out = np.broadcast_to(coeff, batch + coeff.shape)
    nb = len(batch)
    for _ in range(k):
        xb = x.reshape(batch + x.shape[-1:] + (1,) * (out.ndim - nb - 1))
        out = (out * xb).sum(axis=nb)
    return out


# ---------------------------------------------------------------------------
# field families


class SymTensorField:
    """A fully symmetric tensor field of a given rank over a chart.

    ``dim`` is the range of each tensor index. For particle fields it equals
    the chart dimension; brane fields over multi-index space use
    ``dim = binomial(m, D)`` while still being functions of the chart point.
    ``signature`` is ``"lorentzian"``, ``"euclidean"`` or ``None`` and marks
    a rank-2 field as a metric.
    """

    family = "abstract"

    def __init__(self, rank: int, dim: int, signature: str | None = None):
        if rank < 0:
            raise DimensionError("rank must be non-negative")
        if signature is not None and rank != 2:
            raise DimensionError("only rank-2 fields can be flagged as metrics")
        self.rank = rank
        self.dim = dim
        self.signature = signature

    @property
    def is_metric(self) -> bool:
        return self.signature is not None

    @property
    def shape(self) -> tuple:
        return (self.dim,) * self.rank

    def eval(self, x) -> np.ndarray:
        raise NotImplementedError

    def deriv(self, x) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, x) -> np.ndarray:
        raise NotImplementedError(f"{self.family} field has no second derivative")

    def component(self, x, idx: Sequence[int]) -> float:
        return float(self.eval(as_point(x))[tuple(idx)])

    def __repr__(self):
        return f"<{type(self).__name__} rank={self.rank} dim={self.dim}>"


class ConstantField(SymTensorField):
    family = "constant"

    def __init__(self, values, signature: str | None = None, check_symmetry: bool = True):
        values = np.asarray(values, dtype=float)
        rank = values.ndim
        dim = values.shape[0] if rank else 1
        if rank and any(s != dim for s in values.shape):
            raise DimensionError("tensor components must be square")
        if check_symmetry and not is_symmetric(values):
            raise ValueError("constant tensor is not symmetric")
        super().__init__(rank, dim, signature)
        self.values = values

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.values, x.shape[:-1] + self.values.shape).copy()

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (x.shape[-1],) + self.values.shape)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        m = x.shape[-1]
        return np.zeros(x.shape[:-1] + (m, m) + self.values.shape)


class PolynomialField(SymTensorField):
    """Components polynomial in the coordinates.

    ``coeffs[k]`` has shape ``(m,)*k + (dim,)*rank`` and must be symmetric in
    its first ``k`` axes and in its last ``rank`` axes; the field is
    ``sum_k coeffs[k] . x^k``.
    """

    family = "polynomial"

    def __init__(self, coeffs: Sequence, rank: int, signature: str | None = None):
        coeffs = [np.asarray(c, dtype=float) for c in coeffs]
        if not coeffs:
            raise ValueError("need at least the constant coefficient")
        base = coeffs[0]
        if base.ndim != rank:
            raise DimensionError("constant coefficient must have the field rank")
        dim = base.shape[0] if rank else 1
        self.m = None
        for k, c in enumerate(coeffs[1:], start=1):
            if c.ndim != k + rank:
                raise DimensionError(f"coefficient of degree {k} has wrong rank")
            if self.m is None:
                self.m = c.shape[0]
            if not is_symmetric(c, rank, atol=1e-14) or not is_symmetric(
                np.moveaxis(c, list(range(k)), list(range(c.ndim - k, c.ndim))), k, atol=1e-14
            ):
                raise ValueError(f"coefficient of degree {k} is not symmetric")
        super().__init__(rank, dim, signature)
        self.coeffs = coeffs

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(self.coeffs[0], x.shape[:-1] + self.coeffs[0].shape).copy()
        for k, c in enumerate(self.coeffs[1:], start=1):
            out = out + _contract_first(c, x, k)
        return out

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (x.shape[-1],) + self.shape)
        for k, c in enumerate(self.coeffs[1:], start=1):
            # symmetric in the polynomial axes: the surviving one is the derivative axis
            out = out + k * _contract_first(np.moveaxis(c, 0, k - 1), x, k - 1)
        return out

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        m = x.shape[-1]
        out = np.zeros(x.shape[:-1] + (m, m) + self.shape)
        for k, c in enumerate(self.coeffs[2:], start=2):
            moved = np.moveaxis(c, (0, 1), (k - 2, k - 1))
            out = out + k * (k - 1) * _contract_first(moved, x, k - 2)
        return out


class SchwarzschildField(SymTensorField):
    """Diagonal radial metric with ``g_tt = 1 - rs/r`` in coordinates (t, r, [theta,] phi).

    m=2: (t, r); m=3: (t, r, phi); m=4: (t, r, theta, phi).
    """

    family = "schwarzschild"

    def __init__(self, rs: float, m: int = 4):
        if m not in (2, 3, 4):
            raise DimensionError("schwarzschild family supports m in {2, 3, 4}")
        super().__init__(2, m, "lorentzian")
        self.rs = float(rs)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        r = x[..., 1]
        f = 1.0 - self.rs / r
        out = np.zeros(x.shape[:-1] + (self.dim, self.dim))
        out[..., 0, 0] = f
        out[..., 1, 1] = -1.0 / f
        if self.dim == 3:
            out[..., 2, 2] = -r**2
        elif self.dim == 4:
            st = np.sin(x[..., 2])
            out[..., 2, 2] = -r**2
            out[..., 3, 3] = -(r**2) * st**2
        return out

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        r = x[..., 1]
        with np.errstate(divide="ignore", invalid="ignore"):  # r = 0 surfaces as non-finite output
            f = 1.0 - self.rs / r
            fp = self.rs / r**2
            fpf = fp / f**2
        m = self.dim
        out = np.zeros(x.shape[:-1] + (m, m, m))
        out[..., 1, 0, 0] = fp
        out[..., 1, 1, 1] = fpf
        if m == 3:
            out[..., 1, 2, 2] = -2.0 * r
        elif m == 4:
            th = x[..., 2]
            st, ct = np.sin(th), np.cos(th)
            out[..., 1, 2, 2] = -2.0 * r
            out[..., 1, 3, 3] = -2.0 * r * st**2
            out[..., 2, 3, 3] = -2.0 * r**2 * st * ct
        return out


class LinearPotential(SymTensorField):
    """Rank-1 field ``A_mu(x) = c_mu + K_{mu nu} x^nu``."""

    family = "linear_potential"

    def __init__(self, c, K):
        c = np.asarray(c, dtype=float)
        K = np.asarray(K, dtype=float)
        if K.shape != (c.size, c.size):
            raise DimensionError("K must be m x m")
        super().__init__(1, c.size)
        self.c, self.K = c, K

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        return self.c + x @ self.K.T

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.K.T, x.shape[:-1] + self.K.shape).copy()

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        m = self.dim
        return np.zeros(x.shape[:-1] + (m, m, m))


def uniform_magnetic(B: float, m: int = 4) -> LinearPotential:
    """Potential of a constant magnetic field of strength ``B`` along the last spatial axis.

    Uses ``A = (0, B y/2, -B x/2, 0)``, so ``F_{12} = -B`` and a positive charge
    gyrates with proper-time angular frequency ``e B / m``.
    """
    if m < 3:
        raise DimensionError("need two spatial axes for a magnetic field")
    K = np.zeros((m, m))
    K[1, 2] = 0.5 * B
    K[2, 1] = -0.5 * B
    return LinearPotential(np.zeros(m), K)


class PlaneWavePotential(SymTensorField):
    """Rank-1 field ``A_mu(x) = a_mu cos(k . x + phase)`` (plain coordinate sum)."""

    family = "plane_wave"

    def __init__(self, amplitude, k, phase: float = 0.0):
        a = np.asarray(amplitude, dtype=float)
        k = np.asarray(k, dtype=float)
        if a.shape != k.shape:
            raise DimensionError("amplitude and wave vector must have equal length")
        super().__init__(1, a.size)
        self.a, self.k, self.phase = a, k, float(phase)

    def _arg(self, x):
        return np.asarray(x, dtype=float) @ self.k + self.phase

    def eval(self, x):
        return np.cos(self._arg(x))[..., None] * self.a

    def deriv(self, x):
        s = -np.sin(self._arg(x))[..., None, None]
        return s * np.multiply.outer(self.k, self.a)

    def hessian(self, x):
        c = -np.cos(self._arg(x))[..., None, None, None]
        return c * np.multiply.outer(np.multiply.outer(self.k, self.k), self.a)


class ScaledField(SymTensorField):
    family = "scaled"

    def __init__(self, field: SymTensorField, factor: float, signature="inherit"):
        sig = field.signature if signature == "inherit" else signature
        super().__init__(field.rank, field.dim, sig)
        self.field, self.factor = field, float(factor)

    def eval(self, x):
        return self.factor * self.field.eval(x)

    def deriv(self, x):
        return self.factor * self.field.deriv(x)

    def hessian(self, x):
        return self.factor * self.field.hessian(x)


class SumField(SymTensorField):
    family = "sum"

    def __init__(self, fields: Sequence[SymTensorField], signature: str | None = None):
        fields = list(fields)
        if not fields:
            raise ValueError("empty sum")
        r, d = fields[0].rank, fields[0].dim
        if any(f.rank != r or f.dim != d for f in fields):
            raise DimensionError("summands must share rank and dimension")
        super().__init__(r, d, signature)
        self.fields = fields

    def eval(self, x):
        return sum(f.eval(x) for f in self.fields)

    def deriv(self, x):
        return sum(f.deriv(x) for f in self.fields)

    def hessian(self, x):
        return sum(f.hessian(x) for f in self.fields)


class GradientField(SymTensorField):
    """The 1-form ``d(Lambda)`` of a scalar (rank-0) field."""

    family = "gradient"

    def __init__(self, scalar: SymTensorField, dim: int):
        if scalar.rank != 0:
            raise DimensionError("gradient needs a scalar field")
        super().__init__(1, dim)
        self.scalar = scalar

    def eval(self, x):
        return self.scalar.deriv(x)

    def deriv(self, x):
        return self.scalar.hessian(x)


def minkowski(m: int = 4) -> ConstantField:
    return ConstantField(np.diag([1.0] + [-1.0] * (m - 1)), signature="lorentzian")


def euclidean(m: int = 3) -> ConstantField:
    return ConstantField(np.eye(m), signature="euclidean")


# ---------------------------------------------------------------------------
# operations


def eval_metric(g: SymTensorField, x) -> np.ndarray:
    """Metric components at a single point, with signature validation."""
    if not g.is_metric:
        raise SignatureError("field is not flagged as a metric")
    x = as_point(x)
    gm = g.eval(x)
    if not np.all(np.isfinite(gm)):
        raise SignatureError("metric is not finite at this point")
    ev = np.linalg.eigvalsh(gm)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.min(np.abs(ev)) <= 1e-14 * scale:
        raise SignatureError("metric is not invertible")
    npos = int(np.sum(ev > 0))
    if g.signature == "lorentzian" and (npos != 1):
        raise SignatureError(f"expected signature (+,-,...,-), got {npos} positive eigenvalues")
    if g.signature == "euclidean" and npos != gm.shape[0]:
        raise SignatureError("expected a positive-definite metric")
    return gm


def inner(g: SymTensorField, x, u, w) -> float:
    x = as_point(x)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape != w.shape or u.shape[-1] != g.dim:
        raise DimensionError("vector dimension does not match the metric")
    gm = eval_metric(g, x)
    return float(u @ gm @ w)


def contract_sym(S: SymTensorField, x, v) -> float:
    return float(contract(S.eval(as_point(x)), v, S.rank))


def field_derivative(field: SymTensorField, x, direction: int) -> np.ndarray:
    x = as_point(x)
    if not 0 <= direction < x.shape[-1]:
        raise DimensionError("derivative direction outside the chart")
    d = field.deriv(x)[direction]
    if not np.all(np.isfinite(d)):
        raise NumericalError("non-finite field derivative")
    return d


def central_difference(f: Callable[[np.ndarray], np.ndarray], x, direction: int,
                       h: float = 1e-3, richardson: bool = True) -> np.ndarray:
    """Central difference of ``f`` along one coordinate, optionally Richardson-refined."""
    x = np.asarray(x, dtype=float)
    e = np.zeros_like(x)
    e[direction] = 1.0

    def cd(step):
        return (np.asarray(f(x + step * e)) - np.asarray(f(x - step * e))) / (2 * step)

    if not richardson:
        return cd(h)
    return (4.0 * cd(h / 2) - cd(h)) / 3.0


def derivative_error(field: SymTensorField, x, direction: int, h: float = 1e-3) -> float:
    """Relative discrepancy between the analytic derivative and central differences."""
    exact = field_derivative(field, x, direction)
    approx = central_difference(field.eval, x, direction, h)
    scale = max(float(np.max(np.abs(exact))), float(np.max(np.abs(approx))), 1e-300)
    return float(np.max(np.abs(exact - approx)) / scale) if scale > 1e-300 else 0.0


class FaradayTensor:
    """``F_{mu nu} = d_mu A_nu - d_nu A_mu`` of a rank-1 potential."""

    def __init__(self, A: SymTensorField):
        if A.rank != 1:
            raise DimensionError("potential must be rank 1")
        self.A = A

    def eval(self, x):
        dA = self.A.deriv(np.asarray(x, dtype=float))
        return dA - np.swapaxes(dA, -1, -2)

    def deriv(self, x):
        ddA = self.A.hessian(np.asarray(x, dtype=float))
        return ddA - np.swapaxes(ddA, -1, -2)


# ---------------------------------------------------------------------------
# registry used by the scenario layer


def _make_constant(p):
    return ConstantField(p["values"], signature=p.get("signature"))


def _make_polynomial(p):
    return PolynomialField(p["coeffs"], rank=int(p["rank"]), signature=p.get("signature"))


FIELD_FAMILIES: dict[str, Callable[[dict], SymTensorField]] = {
    "constant": _make_constant,
    "minkowski": lambda p: minkowski(int(p.get("m", 4))),
    "euclidean": lambda p: euclidean(int(p.get("m", 3))),
    "scaled_minkowski": lambda p: ScaledField(minkowski(int(p.get("m", 4))), p["factor"]),
    "schwarzschild": lambda p: SchwarzschildField(p["rs"], int(p.get("m", 4))),
    "linear_potential": lambda p: LinearPotential(p["c"], p["K"]),
    "uniform_magnetic": lambda p: uniform_magnetic(p["B"], int(p.get("m", 4))),
    "plane_wave": lambda p: PlaneWavePotential(p["amplitude"], p["k"], p.get("phase", 0.0)),
    "polynomial": _make_polynomial,
}


def make_field(decl: dict) -> SymTensorField:
    """Build a field from ``{"family": name, **params}``."""
    family = decl.get("family")
    if family not in FIELD_FAMILIES:
        raise KeyError(f"unknown field family {family!r}")
    return FIELD_FAMILIES[family](decl)


def binomial(m: int, D: int) -> int:
    return math.comb(m, D)
