"""Extended objects: Jacobian minors, pull-back actions and their discrete minimization.

A brane is a map from a D-dimensional parameter lattice into the chart of
M. On each lattice cell the generalized velocity is the vector of D x D
minors of the Jacobian, one per increasing multi-index. The cell integrand
is averaged over the 2^D corners of the cell, each corner using the D
forward edges that meet there. For affine maps this equals the midpoint
value; unlike the single centred Jacobian it has no zero-energy
checkerboard modes, which matters for minimization. Coordinate-dependent
fields are evaluated at the cell centroid.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import diags, identity, kron, csc_matrix
from scipy.sparse.linalg import factorized

from .errors import BoundaryError, DegenerateError, DimensionError, DomainError, SignatureError
from .geometry import SymTensorField, contract
from .homlag import Term, terms_jet
from .ode import IntegratorConfig, integrate_ode

SPEC_KINDS = ("linear_form", "canonical_sum", "dng")


def enumerate_multiindices(m: int, D: int) -> list[tuple[int, ...]]:
    if not 1 <= D <= m:
        raise DimensionError(f"need 1 <= D <= m, got D={D}, m={m}")
    return list(itertools.combinations(range(m), D))


def cofactor(B: np.ndarray) -> np.ndarray:
    """Cofactor matrix ``d det(B) / dB`` for a stack of square matrices."""
    B = np.asarray(B, dtype=float)
    D = B.shape[-1]
    if D == 1:
        return np.ones_like(B)
    if D == 2:
        out = np.empty_like(B)
        out[..., 0, 0] = B[..., 1, 1]
        out[..., 0, 1] = -B[..., 1, 0]
        out[..., 1, 0] = -B[..., 0, 1]
        out[..., 1, 1] = B[..., 0, 0]
        return out
    out = np.empty_like(B)
    idx = np.arange(D)
    for i in range(D):
        for j in range(D):
            sub = B[..., idx != i, :][..., :, idx != j]
            out[..., i, j] = (-1) ** (i + j) * np.linalg.det(sub)
    return out


def minors(J: np.ndarray, index_set: list[tuple[int, ...]]) -> np.ndarray:
    """``omega^Gamma = det J[Gamma, :]`` for a stack of m x D Jacobians."""
    I = np.asarray(index_set)
    return np.linalg.det(J[..., I, :])


# ---------------------------------------------------------------------------
# fields over multi-index space


class InducedBlockMetric(SymTensorField):
    """``G_{Gamma Gamma'} = det g[Gamma, Gamma']`` induced by a target metric."""

    family = "induced_block"

    def __init__(self, g: SymTensorField, D: int):
        self.g = g
        self.D = D
        self.index_set = enumerate_multiindices(g.dim, D)
        super().__init__(2, len(self.index_set))
        I = np.asarray(self.index_set)
        self._rows = I[:, None, :, None]
        self._cols = I[None, :, None, :]

    def _sub(self, a):
        return a[..., self._rows, self._cols]

    def eval(self, x):
        return np.linalg.det(self._sub(self.g.eval(x)))

    def deriv(self, x):
        sub = self._sub(self.g.eval(x))
        dsub = self._sub(self.g.deriv(x))
        cof = cofactor(sub)
        return np.einsum("...ghij,...lghij->...lgh", cof, dsub)


@dataclass(frozen=True)
class BraneFieldSet:
    """Background fields for a D-brane: D-form potential, block metric and extras.

    ``G`` defaults to the block metric induced from ``g``.
    """

    D: int
    g: SymTensorField | None = None
    A: SymTensorField | None = None
    G: SymTensorField | None = None
    extras: tuple = ()
    e: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.G is None:
            if self.g is None:
                raise ValueError("need either a target metric g or a block metric G")
            object.__setattr__(self, "G", InducedBlockMetric(self.g, self.D))
        object.__setattr__(self, "extras", tuple(self.extras))
        n = self.G.dim
        for f in (self.A, *self.extras):
            if f is not None and f.dim != n:
                raise DimensionError("multi-index fields must share the dimension binomial(m, D)")
        if self.G.rank != 2:
            raise DimensionError("G must be rank 2")

    @property
    def m(self) -> int:
        if self.g is not None:
            return self.g.dim
        n = self.G.dim
        for m in range(self.D, 64):
            if math.comb(m, self.D) == n:
                return m
        raise DimensionError("cannot infer the target dimension")

    @property
    def index_set(self):
        return enumerate_multiindices(self.m, self.D)

    def terms(self, kind: str) -> list[Term]:
        if kind == "dng":
            return [Term(self.G, 1.0, 0.5, absolute=True, role="metric")]
        if kind == "linear_form":
            if self.A is None:
                raise ValueError("linear_form needs a potential A")
            return [Term(self.A, self.e, 1.0, role="potential")]
        if kind != "canonical_sum":
            raise ValueError(f"unknown brane Lagrangian kind {kind!r}")
        out = []
        if self.A is not None and self.e != 0.0:
            out.append(Term(self.A, self.e, 1.0, role="potential"))
        if self.mass != 0.0:
            out.append(Term(self.G, self.mass, 0.5, role="metric"))
        for s in sorted(self.extras, key=lambda s: s.rank):
            out.append(Term(s, 1.0, 1.0 / s.rank, role="extra"))
        return out


# ---------------------------------------------------------------------------
# brane maps


@dataclass
class BraneMap:
    """Node values of a map from a parameter lattice over ``prod [0, extent_a]`` into M.

    ``boundary[a]`` is ``"fixed"`` (nodes at both ends, end nodes held) or
    ``"periodic"`` (``n_a`` nodes, wrap-around cell).
    """

    values: np.ndarray
    boundary: tuple
    extent: tuple | None = None

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        self.boundary = tuple(self.boundary)
        D = self.values.ndim - 1
        if D < 1 or len(self.boundary) != D:
            raise DimensionError("values must have shape (*grid, m) with one boundary type per axis")
        if any(b not in ("fixed", "periodic") for b in self.boundary):
            raise ValueError("boundary types are 'fixed' or 'periodic'")
        if any(n < 3 for n in self.shape):
            raise ValueError("need at least 3 nodes per axis")
        if self.D > self.m:
            raise DimensionError("brane dimension exceeds target dimension")
        self.extent = tuple(float(e) for e in (self.extent or (1.0,) * D))
        if len(self.extent) != D or any(e <= 0 for e in self.extent):
            raise ValueError("extent must be positive per axis")

    @property
    def D(self) -> int:
        return self.values.ndim - 1

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.values.shape[:-1]

    @property
    def spacing(self) -> tuple:
        return tuple(
            e / (n - 1) if b == "fixed" else e / n
            for e, n, b in zip(self.extent, self.shape, self.boundary)
        )

    @property
    def cell_shape(self) -> tuple:
        return tuple(n - 1 if b == "fixed" else n for n, b in zip(self.shape, self.boundary))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_nodes(self, a: int) -> np.ndarray:
        n, h = self.shape[a], self.spacing[a]
        return np.arange(n) * h

    def param_grid(self) -> np.ndarray:
        axes = [self.axis_nodes(a) for a in range(self.D)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def fixed_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for a, b in enumerate(self.boundary):
            if b == "fixed":
                sl = [slice(None)] * self.D
                sl[a] = 0
                mask[tuple(sl)] = True
                sl[a] = -1
                mask[tuple(sl)] = True
        return mask

    def copy(self, values=None) -> "BraneMap":
        return BraneMap(self.values.copy() if values is None else values, self.boundary, self.extent)

    @classmethod
    def from_function(cls, fn, shape, boundary, extent=None) -> "BraneMap":
        """Sample ``fn(z)`` (z of shape (..., D), returns (..., m)) on the lattice."""
        D = len(shape)
        extent = tuple(extent or (1.0,) * D)
        axes = []
        for n, b, e in zip(shape, boundary, extent):
            h = e / (n - 1) if b == "fixed" else e / n
            axes.append(np.arange(n) * h)
        z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(np.asarray(fn(z), dtype=float), tuple(boundary), extent)

    def to_json(self) -> str:
        doc = {
            "dims": {"D": self.D, "m": self.m},
            "grid": {"shape": list(self.shape), "boundary": list(self.boundary), "extent": list(self.extent)},
            "nodes": [[float(c) for c in row] for row in self.values.reshape(-1, self.m)],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "BraneMap":
        doc = json.loads(text)
        shape = tuple(doc["grid"]["shape"])
        m = int(doc["dims"]["m"])
        if len(shape) != int(doc["dims"]["D"]):
            raise DimensionError("grid rank does not match D")
        vals = np.asarray(doc["nodes"], dtype=float).reshape(shape + (m,))
        return cls(vals, tuple(doc["grid"]["boundary"]), tuple(doc["grid"].get("extent") or ()) or None)


def _padded(values: np.ndarray, boundary) -> np.ndarray:
    pad = [(0, 1) if b == "periodic" else (0, 0) for b in boundary] + [(0, 0)]
    return np.pad(values, pad, mode="wrap")


def _corner_slices(phi: BraneMap, bits):
    return tuple(slice(b, b + n) for b, n in zip(bits, phi.cell_shape))


def corner_bits(D: int):
    return list(itertools.product((0, 1), repeat=D))


def corner_jacobians(phi: BraneMap):
    """Return (centroids, jacobians) with jacobians shape ``(2^D, *cells, m, D)``."""
    P = _padded(phi.values, phi.boundary)
    D = phi.D
    h = phi.spacing
    nodes = {bits: P[_corner_slices(phi, bits)] for bits in corner_bits(D)}
    centroid = sum(nodes.values()) / len(nodes)
    jac = []
    for bits in corner_bits(D):
        cols = []
        for a in range(D):
            hi = list(bits)
            lo = list(bits)
            hi[a], lo[a] = 1, 0
            cols.append((nodes[tuple(hi)] - nodes[tuple(lo)]) / h[a])
        jac.append(np.stack(cols, axis=-1))
    return centroid, np.stack(jac)


@dataclass(frozen=True)
class GeneralizedVelocity:
    index_set: tuple
    values: np.ndarray

    def __getitem__(self, gamma):
        return float(self.values[self.index_set.index(tuple(gamma))])

    def as_dict(self) -> dict:
        return {g: float(v) for g, v in zip(self.index_set, self.values)}

    def full_antisymmetric(self, m: int) -> np.ndarray:
        """Rebuild the totally antisymmetric array ``Y^{a1..aD}``."""
        D = len(self.index_set[0])
        Y = np.zeros((m,) * D)
        for gamma, val in zip(self.index_set, self.values):
            for perm in itertools.permutations(range(D)):
                sign = np.linalg.det(np.eye(D)[list(perm)])
                Y[tuple(gamma[p] for p in perm)] = sign * val
        return Y


def generalized_velocity(phi: BraneMap, cell) -> GeneralizedVelocity:
    """Jacobian minors at the centre of one cell (centred differences)."""
    cell = tuple(int(c) for c in np.atleast_1d(cell))
    if len(cell) != phi.D:
        raise DimensionError("cell index needs one entry per brane axis")
    for c, n in zip(cell, phi.cell_shape):
        if not 0 <= c < n:
            raise BoundaryError(f"cell {cell} is outside the lattice (no stencil on a fixed boundary)")
    _, jac = corner_jacobians(phi)
    Jc = jac[(slice(None),) + cell].mean(axis=0)
    idx = enumerate_multiindices(phi.m, phi.D)
    return GeneralizedVelocity(tuple(idx), minors(Jc, idx))


def string_Y(dtau_x, dsigma_x) -> np.ndarray:
    a = np.asarray(dtau_x, dtype=float)
    b = np.asarray(dsigma_x, dtype=float)
    if a.shape[-1] < 2:
        raise DimensionError("a world-sheet needs m >= 2")
    return np.multiply.outer(a, b) - np.multiply.outer(b, a)


def dng_lagrangian(g: SymTensorField, x, omega) -> tuple[float, int]:
    """``(sqrt|Q|, sign Q)`` with ``Q = G_{Gamma Gamma'} omega^Gamma omega^Gamma'``."""
    if isinstance(omega, GeneralizedVelocity):
        vals = omega.values
        D = len(omega.index_set[0])
    else:
        vals = np.asarray(omega, dtype=float)
        D = next(d for d in range(1, g.dim + 1) if math.comb(g.dim, d) == vals.size)
    if not np.any(vals):
        raise DegenerateError("generalized velocity vanishes")
    G = InducedBlockMetric(g, D).eval(np.asarray(x, dtype=float))
    Q = float(vals @ G @ vals)
    return math.sqrt(abs(Q)), int(np.sign(Q))


# ---------------------------------------------------------------------------
# actions


def _cell_lagrangian(phi, fields, kind, second=False):
    centroid, jac = corner_jacobians(phi)
    idx = enumerate_multiindices(phi.m, phi.D)
    omega = minors(jac, idx)  # (corners, *cells, C)
    xc = np.broadcast_to(centroid, omega.shape[:-1] + (phi.m,))
    terms = fields.terms(kind)
    try:
        jet = terms_jet(terms, xc, omega, second=second)
    except DomainError as err:
        raise _locate_domain_error(err, terms, xc, omega) from None
    return centroid, jac, omega, jet, idx


def _locate_domain_error(err, terms, xc, omega):
    for t in terms:
        s = contract(t.field.eval(xc), omega, t.rank)
        bad = ~np.isfinite(s)
        if not t.absolute and t.power != 1.0:
            odd = t.rank % 2 == 1
            bad |= (s == 0) | ((s < 0) & (not odd))
        elif t.absolute and t.power < 1:
            bad |= s == 0
        hits = np.argwhere(bad)
        if hits.size:
            cell = tuple(int(c) for c in hits[0][1:])
            return DomainError(f"inadmissible rank-{t.rank} radicand in cell {cell}", rank=t.rank, where=cell)
    return err


def pullback_action(phi: BraneMap, fields: BraneFieldSet, spec_kind: str = "dng") -> float:
    """Discrete ``int_W L(phi, omega) dz`` (corner-averaged midpoint rule)."""
    if fields.D != phi.D:
        raise DimensionError("field set and brane map disagree on D")
    _, _, _, jet, _ = _cell_lagrangian(phi, fields, spec_kind)
    per_cell = jet.value.mean(axis=0)
    # fixed-order pairwise reduction
    return float(np.sum(np.ravel(per_cell)) * phi.cell_volume)


def discrete_action_gradient(phi: BraneMap, fields: BraneFieldSet, spec_kind: str = "dng") -> np.ndarray:
    """Exact gradient of :func:`pullback_action` with respect to node coordinates.

    Returned with the node shape ``(*grid, m)``; nodes held by a fixed
    boundary get zero.
    """
    if fields.D != phi.D:
        raise DimensionError("field set and brane map disagree on D")
    _, jac, omega, jet, idx = _cell_lagrangian(phi, fields, spec_kind)
    D = phi.D
    ncorner = 2**D
    w = phi.cell_volume / ncorner
    I = np.asarray(idx)
    cof = cofactor(jac[..., I, :])  # (corners, *cells, C, D, D)
    # dL/dJ[alpha, a] = sum_Gamma p_Gamma cof_Gamma[i, a] with alpha = Gamma_i
    dLdJ = np.zeros(jac.shape)
    contrib = jet.p[..., None, None] * cof
    for gi, gamma in enumerate(idx):
        for i, alpha in enumerate(gamma):
            dLdJ[..., alpha, :] += contrib[..., gi, i, :]
    padded = np.zeros(_padded(phi.values, phi.boundary).shape)
    dx_mean = jet.dx.sum(axis=0) / ncorner  # d/d centroid, summed over corners
    h = phi.spacing
    for k, bits in enumerate(corner_bits(D)):
        padded[_corner_slices(phi, bits)] += w * dx_mean
        for a in range(D):
            hi, lo = list(bits), list(bits)
            hi[a], lo[a] = 1, 0
            edge = w * dLdJ[k][..., :, a] / h[a]
            padded[_corner_slices(phi, hi)] += edge
            padded[_corner_slices(phi, lo)] -= edge
    grad = padded
    for a, b in enumerate(phi.boundary):
        if b == "periodic":
            first = [slice(None)] * (D + 1)
            last = [slice(None)] * (D + 1)
            first[a], last[a] = 0, -1
            grad[tuple(first)] += grad[tuple(last)]
            keep = [slice(None)] * (D + 1)
            keep[a] = slice(0, -1)
            grad = grad[tuple(keep)]
    grad = np.array(grad)
    grad[phi.fixed_mask()] = 0.0
    return grad


# ---------------------------------------------------------------------------
# minimization


@dataclass
class MinimizationResult:
    brane: BraneMap
    converged: bool
    iterations: int
    grad_norm: float
    action: float
    log: list = field(default_factory=list)

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "action", "grad_norm", "step"])
        for it, a, gn, st in self.log:
            w.writerow([it, format(a, ".17g"), format(gn, ".17g"), format(st, ".17g")])
        return buf.getvalue()


def _sobolev_operator(phi: BraneMap):
    """Axis-weighted lattice Laplacian on free nodes, factorized.

    Weights approximate the second variation of the volume for the current
    physical edge lengths, so the preconditioned step is close to Newton.
    """
    D = phi.D
    h = np.asarray(phi.spacing)
    P = _padded(phi.values, phi.boundary)
    lengths = []
    for a in range(D):
        sl_hi = [slice(None)] * (D + 1)
        sl_lo = [slice(None)] * (D + 1)
        n = phi.cell_shape[a]
        sl_hi[a] = slice(1, n + 1)
        sl_lo[a] = slice(0, n)
        d = P[tuple(sl_hi)] - P[tuple(sl_lo)]
        lengths.append(max(float(np.mean(np.linalg.norm(d, axis=-1))) / h[a], 1e-12))
    lengths = np.asarray(lengths)
    vol_l, vol_h = np.prod(lengths), np.prod(h)
    mats = []
    for a, (n, b) in enumerate(zip(phi.shape, phi.boundary)):
        if b == "periodic":
            Dm = diags([-np.ones(n), np.ones(n - 1), np.ones(1)], [0, 1, -(n - 1)], shape=(n, n))
        else:
            Dm = diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
        lap1 = (Dm.T @ Dm).tocsc()
        c = vol_l / lengths[a] ** 2 * vol_h / h[a] ** 2
        op = None
        for b2 in range(D):
            f = lap1 if b2 == a else identity(phi.shape[b2], format="csc")
            op = f if op is None else kron(op, f, format="csc")
        mats.append(c * op)
    K = sum(mats)
    free = ~phi.fixed_mask().ravel()
    Kf = csc_matrix(K[free][:, free])
    return factorized(Kf), free


def minimize_action(phi0: BraneMap, fields: BraneFieldSet, spec_kind: str = "dng",
                    max_iters: int = 500, grad_tol: float = 1e-10,
                    step_rule: str = "sobolev", armijo: float = 1e-4,
                    initial_step: float = 1.0) -> MinimizationResult:
    """Descent with backtracking line search until the gradient norm drops below ``grad_tol``.

    ``step_rule="sobolev"`` preconditions the gradient with a lattice
    Laplacian; ``"plain"`` uses the raw Euclidean gradient.
    """
    if "fixed" not in phi0.boundary:
        raise ValueError("minimization needs a fixed boundary on at least one axis")
    if step_rule not in ("sobolev", "plain"):
        raise ValueError("step_rule is 'sobolev' or 'plain'")
    phi = phi0.copy()
    f = pullback_action(phi, fields, spec_kind)
    log = []
    solve = None
    t = initial_step
    converged = False
    gn = float("inf")
    it = 0
    stall_count = 0
    for it in range(max_iters + 1):
        grad = discrete_action_gradient(phi, fields, spec_kind)
        gn = float(np.linalg.norm(grad))
        log.append((it, f, gn, 0.0 if it == 0 else t))
        if gn < grad_tol:
            converged = True
            break
        if it == max_iters:
            break
        if step_rule == "sobolev":
            if solve is None or it % 20 == 0:
                solve, freeflat = _sobolev_operator(phi)
            gf = grad.reshape(-1, phi.m)[freeflat]
            df = np.column_stack([solve(gf[:, k]) for k in range(phi.m)])
            d = np.zeros_like(grad).reshape(-1, phi.m)
            d[freeflat] = -df
            d = d.reshape(grad.shape)
            t = initial_step
        else:
            d = -grad
            t = min(2.0 * t, 1e6)
        slope = float(np.sum(grad * d))
        accepted = False
        while t > 1e-12 * initial_step:
            trial = phi.copy(phi.values + t * d)
            try:
                ft = pullback_action(trial, fields, spec_kind)
            except DomainError:
                t *= 0.5
                continue
            if ft <= f + armijo * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no sufficient decrease left: roundoff floor reached
            break
        stalled = f - ft <= 4 * np.finfo(float).eps * max(abs(f), 1.0)
        phi, f = trial, ft
        stall_count = stall_count + 1 if stalled else 0
        if stall_count >= 5:
            break
    return MinimizationResult(phi, converged, it, gn, f, log)


# ---------------------------------------------------------------------------
# symmetry-reduced dynamics and the one-time expansion


def circular_string_reduced_lagrangian(R: float, Rdot: float, n_sigma: int = 256) -> float:
    """``-int dsigma sqrt|det h|`` of the ring ``(t, R cos s, R sin s, 0)`` in Minkowski space.

    Evaluated through :func:`dng_lagrangian` on a sigma quadrature.
    """
    from .geometry import minkowski

    g = minkowski(4)
    total = 0.0
    sig = (np.arange(n_sigma) + 0.5) * 2 * np.pi / n_sigma
    idx = enumerate_multiindices(4, 2)
    for s in sig:
        xt = np.array([1.0, Rdot * np.cos(s), Rdot * np.sin(s), 0.0])
        xs = np.array([0.0, -R * np.sin(s), R * np.cos(s), 0.0])
        om = minors(np.stack([xt, xs], axis=-1), idx)
        val, _ = dng_lagrangian(g, np.array([0.0, R * np.cos(s), R * np.sin(s), 0.0]), om)
        total += val
    return -total * 2 * np.pi / n_sigma


def circular_string_collapse(R0: float, cfg: IntegratorConfig | None = None):
    """Collapse of a circular Nambu-Goto loop released from rest.

    The ring ansatz reduces the action to ``-2 pi int R sqrt(1 - Rdot^2) dt``,
    whose Euler-Lagrange equation is ``R'' = -(1 - R'^2) / R`` with conserved
    energy ``R / sqrt(1 - R'^2)``. Integration stops when R reaches zero.

    The equation is invariant under ``R -> c R, t -> c t``, so it is solved
    for ``R0 = 1`` with ``cfg.step`` in units of ``R0`` and rescaled; every
    R0 then gets the same relative accuracy.
    """
    from .dynamics import Trajectory

    if R0 <= 0:
        raise ValueError("R0 must be positive")
    cfg = cfg or IntegratorConfig(method="dop853_adaptive", step=1e-3, tol=1e-13)

    def rhs(t, y):
        R, Rd = y
        return np.array([Rd, -(1.0 - Rd * Rd) / R])

    s, Y, s_event = integrate_ode(rhs, np.array([1.0, 0.0]), 4.0, cfg, event=lambda t, y: y[0])
    R, Rd = R0 * Y[:, 0], Y[:, 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        energy = R / np.sqrt(1.0 - Rd**2)
    meta = {"kind": "circular_string", "R0": R0, "collapse_time": None if s_event is None else R0 * s_event}
    return Trajectory(R0 * s, R[:, None], Rd[:, None], {"energy": energy}, meta)


def catenoid_area(radius: float, separation: float) -> tuple[float, float]:
    """Stable catenoid ``r = a cosh(z / a)`` spanning two coaxial rings.

    Returns ``(a, area)`` with ``area = pi a (separation + a sinh(separation / a))``.
    Raises DomainError when the rings are too far apart for a catenoid.
    """
    from scipy.optimize import brentq, minimize_scalar

    h = 0.5 * separation
    f = lambda a: a * math.cosh(h / a) - radius
    # f is convex in a with a single minimum; the stable branch is the larger root
    amin = minimize_scalar(f, bounds=(h * 1e-3, radius), method="bounded").x
    if f(amin) > 0:
        raise DomainError("rings are too far apart to span a catenoid")
    a = brentq(f, amin, radius, xtol=1e-15)
    return a, math.pi * a * (separation + a * math.sinh(separation / a))


def nonrel_expansion_error(fields: BraneFieldSet, x, omega_spatial, eps: float):
    """Compare the one-time Lagrangian with its quadratic expansion.

    With ``omega^0 = 1`` and spatial components ``eps * omega_spatial`` the
    exact value is ``e (A_0 + A_i w^i) + mass * sqrt(1 - gamma_ij w^i w^j)``
    where ``gamma = -G_spatial`` is positive definite; the expansion replaces
    the root by ``1 - gamma(w, w) / 2``. Returns ``(exact, expanded, err)``.
    """
    x = np.asarray(x, dtype=float)
    G = fields.G.eval(x)
    if abs(G[0, 0] - 1.0) > 1e-12 or np.any(np.abs(G[0, 1:]) > 1e-12):
        raise SignatureError("block metric is not of one-time form (G_00 = 1, G_0i = 0)")
    gamma = -G[1:, 1:]
    if np.any(np.linalg.eigvalsh(gamma) <= 0):
        raise SignatureError("spatial block must be negative definite")
    w = eps * np.asarray(omega_spatial, dtype=float)
    if w.size != G.shape[0] - 1:
        raise DimensionError("omega_spatial has the wrong length")
    u = float(w @ gamma @ w)
    if 1.0 - u <= 0:
        raise DomainError("radicand is not positive", rank=2)
    lin = 0.0
    if fields.A is not None:
        A = fields.A.eval(x)
        lin = fields.e * float(A[0] + A[1:] @ w)
    exact = lin + fields.mass * math.sqrt(1.0 - u)
    expanded = lin + fields.mass * (1.0 - 0.5 * u)
    return exact, expanded, abs(exact - expanded)


__all__ = [
    "enumerate_multiindices",
    "BraneMap",
    "BraneFieldSet",
    "InducedBlockMetric",
    "GeneralizedVelocity",
    "generalized_velocity",
    "string_Y",
    "dng_lagrangian",
    "pullback_action",
    "discrete_action_gradient",
    "minimize_action",
    "MinimizationResult",
    "circular_string_collapse",
    "circular_string_reduced_lagrangian",
    "nonrel_expansion_error",
    "catenoid_area",
]
