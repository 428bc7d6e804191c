import json

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from branelab.errors import DimensionError, DomainError
from branelab.quantum import (
    PlaneWaveState,
    build_clifford,
    dirac_operator,
    dumps,
    even_mass_shift,
    kernel_dimension,
    kg_factorization_residual,
    matrix_from_json,
    matrix_to_json,
    physical_state,
    spectrum_to_json,
    trace_identity,
)

DIMS = (2, 3, 4)


def eta(m):
    return np.diag([1.0] + [-1.0] * (m - 1))


def square(rep, pi):
    return float(np.sum(rep.metric * pi * pi))


# -- construction --------------------------------------------------------------

def test_clifford_examples():
    rep = build_clifford(4)
    I = rep.identity
    assert np.array_equal(rep.anticommutator(0, 0), 2 * I)
    assert np.array_equal(rep.anticommutator(0, 1), 0 * I)
    rep2 = build_clifford(2)
    assert rep2.size == 2
    assert np.array_equal(rep2.anticommutator(1, 1), -2 * rep2.identity)


@pytest.mark.parametrize("m", DIMS)
def test_anticommutation_all_pairs(m):
    rep = build_clifford(m)
    assert rep.size == 2 ** (m // 2)
    assert rep.anticommutation_error() < 1e-12
    assert set(np.unique(np.round(np.concatenate([g.ravel() for g in rep.gammas]), 12))) <= {0, 1, -1, 1j, -1j}


def test_euclidean_signature():
    rep = build_clifford(3, signature=(1, 1, 1))
    assert rep.anticommutation_error() == 0.0
    assert np.array_equal(rep.anticommutator(2, 2), 2 * rep.identity)


def test_unsupported_dimension():
    for m in (1, 5):
        with pytest.raises(DimensionError):
            build_clifford(m)


def test_slash_shape_check():
    with pytest.raises(DimensionError):
        build_clifford(4).slash([1.0, 0.0])


# -- trace identity --------------------------------------------------------------

@pytest.mark.parametrize("m", DIMS)
def test_trace_identity_flat(m):
    rep = build_clifford(m)
    assert np.abs(trace_identity(rep, eta(m)) - m * rep.identity).max() < 1e-12
    assert np.abs(trace_identity(rep, 2 * eta(m)) - 2 * m * rep.identity).max() < 1e-12


def test_trace_identity_single_component():
    rep = build_clifford(4)
    g = np.zeros((4, 4))
    g[0, 0] = 1.0
    assert np.array_equal(trace_identity(rep, g), rep.gammas[0] @ rep.gammas[0])
    assert np.abs(trace_identity(rep, g) - rep.identity).max() < 1e-12
    with pytest.raises(ValueError):
        trace_identity(rep, np.triu(np.ones((4, 4))))


# -- Dirac operator ------------------------------------------------------------

def test_dirac_examples():
    rep = build_clifford(4)
    D = dirac_operator(rep, [2.0, 0, 0, 0], mass=2.0)
    assert abs(np.linalg.det(D)) < 1e-10
    assert kernel_dimension(D) == 2
    D0 = dirac_operator(rep, np.zeros(4), mass=1.0)
    assert np.array_equal(D0, -rep.identity)
    assert kernel_dimension(D0) == 0


@given(st.integers(0, 2**31 - 1))
def test_minimal_coupling_shift(seed):
    rng = np.random.default_rng(seed)
    rep = build_clifford(4)
    p, A, e, mass = rng.normal(size=4), rng.normal(size=4), rng.normal(), rng.uniform(0, 3)
    assert np.abs(dirac_operator(rep, p, A, e, mass) - dirac_operator(rep, p - e * A, None, 0.0, mass)).max() < 1e-14


@pytest.mark.parametrize("m", DIMS)
def test_determinant_closed_form(m):
    # eigenvalues of pi-slash are +-sqrt(pi.pi), so det D = (mass^2 - pi.pi)^(size/2)
    rng = np.random.default_rng(m)
    rep = build_clifford(m)
    for _ in range(50):
        pi = rng.uniform(-3, 3, size=m)
        mass = rng.uniform(0, 3)
        expected = (mass**2 - square(rep, pi)) ** (rep.size // 2)
        assert np.linalg.det(dirac_operator(rep, pi, mass=mass)) == pytest.approx(expected, rel=1e-10, abs=1e-10)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(DIMS))
def test_factorization_identity(seed, m):
    rng = np.random.default_rng(seed)
    rep = build_clifford(m)
    p, A = rng.uniform(-5, 5, m), rng.uniform(-5, 5, m)
    e, mass = rng.uniform(-5, 5), rng.uniform(-5, 5)
    assert kg_factorization_residual(rep, p, A, e, mass) < 1e-12


def test_factorization_against_high_precision():
    mp.mp.dps = 50
    rng = np.random.default_rng(11)
    rep = build_clifford(4)
    G = [mp.matrix([[mp.mpc(complex(z)) for z in row] for row in g]) for g in rep.gammas]
    I = mp.eye(4)
    for _ in range(20):
        p, A = rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 4)
        e, mass = rng.uniform(-5, 5), rng.uniform(-5, 5)
        pi = [mp.mpf(pa) - mp.mpf(e) * mp.mpf(aa) for pa, aa in zip(p, A)]
        ps = sum((G[a] * pi[a] for a in range(1, 4)), G[0] * pi[0])
        pp = pi[0] ** 2 - pi[1] ** 2 - pi[2] ** 2 - pi[3] ** 2
        R = (ps + mass * I) * (ps - mass * I) - (pp - mp.mpf(mass) ** 2) * I
        assert max(abs(R[i, j]) for i in range(4) for j in range(4)) < mp.mpf(10) ** -40
        # double-precision operator agrees entrywise with the 50-digit one
        Dhp = ps - mass * I
        D = dirac_operator(rep, p, A, e, mass)
        assert max(abs(complex(Dhp[i, j]) - D[i, j]) for i in range(4) for j in range(4)) < 1e-12
        assert kg_factorization_residual(rep, p, A, e, mass) < 1e-12


@pytest.mark.parametrize("m", DIMS)
def test_kernel_iff_mass_shell(m):
    rep = build_clifford(m)
    mass = 1.0
    grid = np.linspace(-2, 2, 9)
    rng = np.random.default_rng(0)
    for _ in range(60):
        spatial = rng.choice(grid, size=m - 1)
        on = np.array([np.sqrt(mass**2 + spatial @ spatial), *spatial])
        assert kernel_dimension(dirac_operator(rep, on, mass=mass)) >= 1
        off = on.copy()
        off[0] += 0.3
        assert kernel_dimension(dirac_operator(rep, off, mass=mass)) == 0


def test_massless_null_kernel():
    rep = build_clifford(4)
    assert kernel_dimension(dirac_operator(rep, [1.0, 0.0, 0.6, 0.8], mass=0.0)) >= 1


@pytest.mark.parametrize("m", DIMS)
def test_representation_independence(m):
    rng = np.random.default_rng(5)
    rep = build_clifford(m)
    S = rng.normal(size=(rep.size, rep.size)) + 1j * rng.normal(size=(rep.size, rep.size))
    other = rep.conjugated(S)
    assert other.anticommutation_error() < 1e-10
    for _ in range(20):
        p, mass = rng.uniform(-3, 3, m), rng.uniform(0, 2)
        d1 = np.linalg.det(dirac_operator(rep, p, mass=mass))
        d2 = np.linalg.det(dirac_operator(other, p, mass=mass))
        assert abs(d1 - d2) < 1e-8 * max(1.0, abs(d1))


# -- physical states -----------------------------------------------------------

def test_physical_state_on_shell():
    rep = build_clifford(4)
    p = np.array([np.sqrt(1 + 0.25 + 0.09), 0.5, -0.3, 0.0])
    psi = physical_state(rep, p, mass=1.0)
    assert psi.residual(rep, mass=1.0) < 1e-12
    with pytest.raises(DomainError):
        physical_state(rep, p + np.array([0.5, 0, 0, 0]), mass=1.0)
    with pytest.raises(ValueError):
        PlaneWaveState(p, np.zeros(4))


# -- even mass shift --------------------------------------------------------

def test_even_mass_shift_examples():
    rep = build_clifford(4)
    assert even_mass_shift(rep, {4: 0.0, 6: 0.0}, np.zeros(4), mass=1.0) == 1.0
    assert even_mass_shift(rep, {4: 16.0}, np.zeros(4), mass=1.0) == pytest.approx(3.0, rel=1e-15)
    assert even_mass_shift(rep, {"2": 9.0}, np.zeros(4)) == pytest.approx(3.0, rel=1e-15)
    with pytest.raises(DomainError) as info:
        even_mass_shift(rep, {4: -1.0}, np.zeros(4))
    assert info.value.rank == 4
    with pytest.raises(ValueError):
        even_mass_shift(rep, {3: 1.0}, np.zeros(4))


def test_x_dependent_mass_shift_keeps_factorization():
    rep = build_clifford(4)
    s4 = lambda x: (1.0 + x[1] ** 2) ** 4
    rng = np.random.default_rng(7)
    masses = []
    for _ in range(50):
        x = rng.uniform(-3, 3, 4)
        m_eff = even_mass_shift(rep, {4: s4}, x, mass=1.0)
        assert m_eff == pytest.approx(2.0 + x[1] ** 2, rel=1e-14)
        masses.append(m_eff)
        assert kg_factorization_residual(rep, rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 4), 1.0, m_eff) < 1e-12
    assert np.ptp(masses) > 1.0


# -- serialization ------------------------------------------------------------

def test_json_round_trip():
    rep = build_clifford(4)
    D = dirac_operator(rep, [1.3, 0.2, -0.5, 0.1], [0.1, 0, 0.2, 0], 0.7, 1.0)
    text = dumps(matrix_to_json(D))
    assert np.array_equal(matrix_from_json(json.loads(text)), D)
    doc = spectrum_to_json(D)
    assert doc["operator"]["shape"] == [4, 4]
    ev = np.array([complex(*z) for z in doc["eigenvalues"]])
    assert np.allclose(np.sort_complex(ev), np.sort_complex(np.linalg.eigvals(D)), atol=1e-12)
    assert dumps(doc) == dumps(spectrum_to_json(D))
