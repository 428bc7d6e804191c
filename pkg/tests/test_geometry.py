import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from branelab.errors import DimensionError, NumericalError, SignatureError
from branelab.geometry import (
    ConstantField,
    FaradayTensor,
    LinearPotential,
    PlaneWavePotential,
    PolynomialField,
    ScaledField,
    SchwarzschildField,
    central_difference,
    contract_sym,
    derivative_error,
    eval_metric,
    field_derivative,
    inner,
    make_field,
    minkowski,
    symmetrize,
    uniform_magnetic,
)

ETA = np.diag([1.0, -1.0, -1.0, -1.0])


def test_minkowski_metric_any_point():
    assert np.array_equal(eval_metric(minkowski(), [3.0, -1.0, 2.0, 0.5]), ETA)


def test_schwarzschild_gtt_at_twice_rs():
    g = SchwarzschildField(rs=0.7, m=4)
    assert eval_metric(g, [0.0, 1.4, 1.0, 0.0])[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_scaled_minkowski():
    g = ScaledField(minkowski(), 2.0)
    assert np.array_equal(eval_metric(g, np.zeros(4)), 2 * ETA)


def test_wrong_signature_and_singular_metric_raise():
    with pytest.raises(SignatureError):
        eval_metric(ConstantField(np.eye(4), signature="lorentzian"), np.zeros(4))
    with pytest.raises(SignatureError):
        eval_metric(ConstantField(np.diag([1.0, -1.0, 0.0, -1.0]), signature="lorentzian"), np.zeros(4))
    with pytest.raises(SignatureError):
        eval_metric(ConstantField(np.eye(4)), np.zeros(4))  # not flagged as a metric


@pytest.mark.parametrize("u,w,expected", [
    ([1, 0, 0, 0], [1, 0, 0, 0], 1.0),
    ([1, 1, 0, 0], [1, 1, 0, 0], 0.0),
    ([1, 0, 0, 0], [0, 1, 0, 0], 0.0),
])
def test_inner_examples(u, w, expected):
    assert inner(minkowski(), np.zeros(4), u, w) == expected


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner(minkowski(), np.zeros(4), [1, 0, 0], [1, 0, 0])


@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8))
def test_inner_is_symmetric(vals):
    u, w = np.array(vals[:4]), np.array(vals[4:])
    g = SchwarzschildField(1.0)
    x = [0.0, 4.0, 1.0, 0.3]
    assert inner(g, x, u, w) == pytest.approx(inner(g, x, w, u), rel=1e-14, abs=1e-14)


def test_contract_sym_examples():
    assert contract_sym(minkowski(), np.zeros(4), [1, 0, 0, 0]) == 1.0
    S3 = np.zeros((4, 4, 4))
    S3[0, 0, 0] = 1.0
    assert contract_sym(ConstantField(S3), np.zeros(4), [2, 0, 0, 0]) == 8.0
    assert contract_sym(ConstantField(symmetrize(np.random.default_rng(0).normal(size=(4,) * 3))),
                        np.zeros(4), np.zeros(4)) == 0.0


@given(st.floats(0.1, 10), st.integers(0, 2**31 - 1))
def test_contract_sym_homogeneous(alpha, seed):
    rng = np.random.default_rng(seed)
    S = ConstantField(symmetrize(rng.normal(size=(3, 3, 3))))
    v = rng.normal(size=3)
    assert contract_sym(S, np.zeros(3), alpha * v) == pytest.approx(alpha**3 * contract_sym(S, np.zeros(3), v),
                                                                    rel=1e-12, abs=1e-12)


def test_field_derivative_examples():
    assert not np.any(field_derivative(minkowski(), np.ones(4), 2))
    g = SchwarzschildField(rs=0.5, m=2)
    d = field_derivative(g, [0.0, 1.0], 1)[0, 0]
    fd = (eval_metric(g, [0.0, 1.0 + 1e-5])[0, 0] - eval_metric(g, [0.0, 1.0 - 1e-5])[0, 0]) / 2e-5
    assert d == pytest.approx(0.5, rel=1e-14)
    assert d == pytest.approx(fd, rel=1e-6)
    K = np.arange(16.0).reshape(4, 4)
    A = LinearPotential(np.zeros(4), K)
    for lam in range(4):
        assert np.array_equal(field_derivative(A, np.ones(4), lam), K[:, lam])


def test_non_finite_derivative_raises():
    with pytest.raises(NumericalError):
        field_derivative(SchwarzschildField(1.0), [0.0, 0.0, 1.0, 0.0], 1)


def test_schwarzschild_derivatives_match_symbolic():
    t, r, th, ph, rs = sp.symbols("t r theta phi r_s")
    coords = (t, r, th, ph)
    f = 1 - rs / r
    G = sp.diag(f, -1 / f, -r**2, -r**2 * sp.sin(th) ** 2)
    vals = {rs: 1.3}
    x = np.array([0.2, 3.7, 0.9, 2.0])
    field = SchwarzschildField(1.3, 4)
    subs = dict(vals)
    subs.update({c: float(xv) for c, xv in zip(coords, x)})
    for lam, c in enumerate(coords):
        sym = np.array(sp.diff(G, c).subs(subs).evalf(30), dtype=float)
        assert np.allclose(field.deriv(x)[lam], sym, rtol=1e-14, atol=1e-14)


def _families(rng):
    m = 4
    coeff2 = symmetrize(rng.normal(size=(m, m, 3, 3, 3)), 3)
    coeff2 = 0.5 * (coeff2 + np.swapaxes(coeff2, 0, 1))
    return [
        minkowski(),
        ScaledField(minkowski(), 1.7),
        SchwarzschildField(0.8, 4),
        SchwarzschildField(0.8, 3),
        LinearPotential(rng.normal(size=m), rng.normal(size=(m, m))),
        uniform_magnetic(1.3),
        PlaneWavePotential(rng.normal(size=m), rng.normal(size=m), 0.4),
        PolynomialField([symmetrize(rng.normal(size=(3, 3, 3))), symmetrize(rng.normal(size=(m, 3, 3, 3)), 3),
                         coeff2], rank=3),
    ]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_every_family_derivative_matches_differences(seed):
    rng = np.random.default_rng(seed)
    for field in _families(rng):
        m = 3 if isinstance(field, SchwarzschildField) and field.dim == 3 else 4
        x = rng.uniform(-1, 1, size=m)
        x[1] = rng.uniform(2.0, 6.0)  # keep radial families away from the horizon
        for lam in range(m):
            assert derivative_error(field, x, lam) < 1e-6


def test_polynomial_hessian_matches_differences():
    rng = np.random.default_rng(3)
    field = _families(rng)[-1]
    x = rng.normal(size=4)
    for lam in range(4):
        approx = central_difference(field.deriv, x, lam)
        assert np.allclose(field.hessian(x)[lam], approx, rtol=1e-8, atol=1e-8)


@given(st.integers(0, 2**31 - 1))
def test_polynomial_field_symmetry_under_permutation(seed):
    rng = np.random.default_rng(seed)
    field = _families(rng)[-1]
    x = rng.normal(size=4)
    idx = tuple(rng.integers(0, 3, size=3))
    for perm in itertools.permutations(idx):
        assert field.component(x, perm) == field.component(x, idx)


@given(st.integers(0, 2**31 - 1))
def test_faraday_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    for A in (LinearPotential(rng.normal(size=4), rng.normal(size=(4, 4))),
              PlaneWavePotential(rng.normal(size=4), rng.normal(size=4))):
        F = FaradayTensor(A).eval(rng.normal(size=4))
        assert np.array_equal(F, -F.T)


def test_uniform_magnetic_field_strength():
    F = FaradayTensor(uniform_magnetic(2.5)).eval(np.ones(4))
    assert F[1, 2] == -2.5 and F[2, 1] == 2.5
    assert np.count_nonzero(F) == 2


def test_nonsymmetric_constant_rejected():
    with pytest.raises(ValueError):
        ConstantField(np.arange(9.0).reshape(3, 3))


def test_make_field_registry():
    g = make_field({"family": "schwarzschild", "rs": 1.0, "m": 4})
    assert isinstance(g, SchwarzschildField) and g.is_metric
    A = make_field({"family": "uniform_magnetic", "B": 2.0})
    assert A.rank == 1 and A.dim == 4
    with pytest.raises(KeyError):
        make_field({"family": "arbitrary_python"})
