"""Gamma matrices and the velocity -> gamma quantization of a first-order Lagrangian.

With ``{gamma^a, gamma^b} = 2 eta^{ab}`` the Hamiltonian function
``h = v.p - L`` becomes the matrix ``gamma^a (p_a - e A_a) - m``; its
kernel is non-trivial exactly on the mass shell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionError, DomainError

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
SUPPORTED_DIMS = (2, 3, 4)


def euclidean_generators(m: int) -> list[np.ndarray]:
    """Hermitian matrices squaring to the identity and pairwise anticommuting."""
    if m < 1:
        raise DimensionError("need at least one generator")
    if m == 1:
        return [np.eye(1, dtype=complex)]
    if m == 2:
        return [SIGMA[0], SIGMA[1]]
    if m == 3:
        return list(SIGMA)
    # even dimension from m - 2: sigma_1 (x) 1, sigma_2 (x) 1, sigma_3 (x) E_j
    k = m if m % 2 == 0 else m - 1
    prev = euclidean_generators(k - 2)
    size = prev[0].shape[0]
    eye = np.eye(size, dtype=complex)
    gens = [np.kron(SIGMA[0], eye), np.kron(SIGMA[1], eye)] + [np.kron(SIGMA[2], E) for E in prev]
    if m % 2 == 1:
        chi = np.eye(gens[0].shape[0], dtype=complex)
        for E in gens:
            chi = chi @ E
        phase = 1j ** (k // 2)
        gens.append(phase * chi)
    return gens


@dataclass(frozen=True)
class CliffordRep:
    dim: int
    gammas: tuple
    metric: np.ndarray  # diagonal of eta

    @property
    def size(self) -> int:
        return self.gammas[0].shape[0]

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.size, dtype=complex)

    def slash(self, p) -> np.ndarray:
        """``gamma^a p_a``."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise DimensionError("covector dimension does not match the representation")
        return np.einsum("a,aij->ij", p, np.asarray(self.gammas))

    def anticommutator(self, a: int, b: int) -> np.ndarray:
        ga, gb = self.gammas[a], self.gammas[b]
        return ga @ gb + gb @ ga

    def anticommutation_error(self) -> float:
        err = 0.0
        for a in range(self.dim):
            for b in range(self.dim):
                target = 2.0 * (self.metric[a] if a == b else 0.0) * self.identity
                err = max(err, float(np.max(np.abs(self.anticommutator(a, b) - target))))
        return err

    def conjugated(self, S: np.ndarray) -> "CliffordRep":
        Sinv = np.linalg.inv(S)
        return CliffordRep(self.dim, tuple(S @ g @ Sinv for g in self.gammas), self.metric)


def build_clifford(m: int, signature=None) -> CliffordRep:
    """Gamma matrices of size ``2**(m // 2)`` for ``eta = diag(signature)``.

    Default signature is (+, -, ..., -); negative entries pick up a factor i.
    """
    if m not in SUPPORTED_DIMS:
        raise DimensionError(f"supported dimensions are {SUPPORTED_DIMS}")
    sig = np.array([1.0] + [-1.0] * (m - 1) if signature is None else signature, dtype=float)
    if sig.shape != (m,) or not np.all(np.abs(sig) == 1.0):
        raise ValueError("signature must be a sequence of +1/-1 of length m")
    gammas = tuple(E if s > 0 else 1j * E for E, s in zip(euclidean_generators(m), sig))
    return CliffordRep(m, gammas, sig)


def trace_identity(rep: CliffordRep, g) -> np.ndarray:
    """``g_{ab} gamma^a gamma^b``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (rep.dim, rep.dim) or not np.allclose(g, g.T):
        raise ValueError("g must be a symmetric m x m array")
    G = np.asarray(rep.gammas)
    return np.einsum("ab,aij,bjk->ik", g, G, G)


def dirac_operator(rep: CliffordRep, p, A=None, e: float = 0.0, mass: float = 0.0) -> np.ndarray:
    """``gamma^a (p_a - e A_a) - mass``."""
    p = np.asarray(p, dtype=float)
    A = np.zeros_like(p) if A is None else np.asarray(A, dtype=float)
    return rep.slash(p - e * A) - mass * rep.identity


def kg_factorization_residual(rep: CliffordRep, p, A=None, e: float = 0.0, mass: float = 0.0) -> float:
    """Max entry of ``(pi-slash + m)(pi-slash - m) - (pi.pi - m^2)``."""
    p = np.asarray(p, dtype=float)
    A = np.zeros_like(p) if A is None else np.asarray(A, dtype=float)
    pi = p - e * A
    ps = rep.slash(pi)
    I = rep.identity
    R = (ps + mass * I) @ (ps - mass * I) - (float(np.sum(rep.metric * pi * pi)) - mass**2) * I
    return float(np.max(np.abs(R)))


def kernel_dimension(D: np.ndarray, tol: float = 1e-8) -> int:
    s = np.linalg.svd(D, compute_uv=False)
    scale = max(1.0, float(s[0]))
    return int(np.sum(s <= tol * scale))


def even_mass_shift(rep: CliffordRep, s_even: Mapping[int, float | Callable], x, mass: float = 0.0) -> float:
    """``m_eff(x) = mass + sum_k s_{2k}(x)**(1/(2k))`` from scalar-reduced even terms.

    ``s_even`` maps an even rank to a number or to a callable of the point.
    """
    total = float(mass)
    for rank, s in sorted(s_even.items()):
        rank = int(rank)
        if rank % 2 or rank < 2:
            raise ValueError(f"rank {rank} is not an even rank >= 2")
        val = float(s(x) if callable(s) else s)
        if val < 0:
            raise DomainError(f"negative scalar under the rank-{rank} root", rank=rank)
        total += val ** (1.0 / rank)
    return total


def matrix_to_json(M: np.ndarray) -> dict:
    """Row-major ``[re, im]`` pairs."""
    M = np.asarray(M, dtype=complex)
    return {
        "shape": list(M.shape),
        "data": [[float(z.real), float(z.imag)] for z in M.ravel()],
    }


def matrix_from_json(doc: dict) -> np.ndarray:
    data = np.asarray(doc["data"], dtype=float)
    return (data[:, 0] + 1j * data[:, 1]).reshape(doc["shape"])


def spectrum_to_json(D: np.ndarray) -> dict:
    ev = np.linalg.eigvals(D)
    order = np.lexsort((np.round(ev.imag, 12), np.round(ev.real, 12)))
    return {"operator": matrix_to_json(D), "eigenvalues": [[float(z.real), float(z.imag)] for z in ev[order]]}


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True)


@dataclass(frozen=True)
class PlaneWaveState:
    """``Psi = spinor * exp(-i p.x)``; physical when ``D(p) spinor = 0``."""

    p: np.ndarray
    spinor: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "spinor", np.asarray(self.spinor, dtype=complex))
        if not np.any(self.spinor != 0):
            raise ValueError("spinor must be nonzero")

    def residual(self, rep: CliffordRep, A=None, e: float = 0.0, mass: float = 0.0) -> float:
        """``|D psi| / |psi|``."""
        D = dirac_operator(rep, self.p, A, e, mass)
        return float(np.linalg.norm(D @ self.spinor) / np.linalg.norm(self.spinor))


def physical_state(rep: CliffordRep, p, A=None, e: float = 0.0, mass: float = 0.0,
                   tol: float = 1e-8) -> PlaneWaveState:
    """A kernel spinor of the Dirac operator; DomainError off the mass shell."""
    D = dirac_operator(rep, p, A, e, mass)
    _, s, vh = np.linalg.svd(D)
    if s[-1] > tol * max(1.0, s[0]):
        raise DomainError("momentum is off the mass shell; the Dirac operator has trivial kernel")
    return PlaneWaveState(np.asarray(p, dtype=float), vh[-1].conj())
