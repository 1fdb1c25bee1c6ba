import math

import numpy as np
import pytest

from gpmro.domain import DomainError
from gpmro.kernels import (
    JITTER,
    Linear,
    Matern,
    Product,
    SquaredExponential,
    Sum,
    from_dict,
    gram,
)

# Frozen values of the Matern kernel computed independently with mpmath's
# besselk at 30 digits: 2^(1-nu)/Gamma(nu) (sqrt(2 nu) r / l)^nu K_nu(...).
MATERN_ORACLE = [
    (1.5, 1.0, 1.0, 0.48335772459650768),
    (2.5, 1.0, 1.0, 0.52399410883182035),
    (0.5, 1.0, 1.0, 0.36787944117144235),
    (2.5, 0.7, 0.3, 0.86849925278268588),
    (3.7, 1.2, 0.9, 0.70152802332366045),  # general (non-half-integer) path
    (1.0, 1.0, 0.5, 0.73191447646146276),
]


def test_se_at_zero_distance():
    k = SquaredExponential(1.0)
    assert k.eval([0.3, -0.2], [0.3, -0.2]) == pytest.approx(1.0)


def test_se_known_value():
    k = SquaredExponential(1.0)
    # squared distance 2 -> exp(-1)
    assert k.eval([1.0, 1.0], [0.0, 0.0]) == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_linear_dot_product():
    k = Linear()
    assert k.eval([1.0, 2.0], [3.0, 4.0]) == pytest.approx(11.0)


def test_linear_scale_normalizes():
    k = Linear(scale=math.sqrt(2.0))
    assert k.eval([1.0, 1.0], [1.0, 1.0]) == pytest.approx(1.0)


@pytest.mark.parametrize("nu,l,r,expected", MATERN_ORACLE)
def test_matern_against_special_function_oracle(nu, l, r, expected):
    k = Matern(nu=nu, lengthscale=l)
    assert k.eval([0.0], [r]) == pytest.approx(expected, abs=1e-9)


def test_matern_unit_at_zero():
    for nu in (0.5, 1.5, 2.5, 3.7):
        k = Matern(nu=nu, lengthscale=0.8)
        assert k.eval([0.4, 0.1], [0.4, 0.1]) == pytest.approx(1.0)


def test_parameter_validation():
    with pytest.raises(DomainError):
        SquaredExponential(0.0)
    with pytest.raises(DomainError):
        Matern(nu=-1.0)
    with pytest.raises(DomainError):
        Linear(scale=0.0)


def test_dimension_mismatch():
    k = SquaredExponential(1.0)
    with pytest.raises(DomainError):
        k.eval([1.0, 2.0], [1.0])
    sliced = SquaredExponential(1.0, input_slice=(0, 3))
    with pytest.raises(DomainError):
        sliced.eval([1.0, 2.0], [0.0, 0.0])


def test_symmetry_exact():
    rng = np.random.default_rng(0)
    spec = Sum(
        Product(Linear(scale=2.0), SquaredExponential(0.7)),
        Matern(nu=1.5, lengthscale=0.5),
    )
    for _ in range(50):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        assert spec.eval(a, b) == spec.eval(b, a)


def test_unit_boundedness():
    rng = np.random.default_rng(1)
    Z = rng.uniform(-1, 1, (40, 2)) / math.sqrt(2.0)
    specs = [
        SquaredExponential(0.4),
        Matern(nu=2.5, lengthscale=0.6),
        Sum(SquaredExponential(0.4), Matern(nu=1.5, lengthscale=1.0)),
        Product(SquaredExponential(0.4), Matern(nu=0.5, lengthscale=0.3)),
        Product(Linear(), SquaredExponential(0.5)),  # inputs already in unit ball
    ]
    for spec in specs:
        assert np.all(spec.diag(Z) <= 1.0 + 1e-12)


def test_gram_single_and_duplicate_points():
    k = SquaredExponential(1.0)
    assert np.allclose(gram(k, [[0.5]]), [[1.0]])
    G = gram(k, [[0.5], [0.5]])
    assert np.allclose(G, 1.0)


def test_gram_exactly_symmetric_and_psd():
    rng = np.random.default_rng(2)
    specs = [
        SquaredExponential(0.3),
        Matern(nu=2.5, lengthscale=0.5),
        Product(Linear(scale=2.0), SquaredExponential(0.8)),
        Sum(Matern(nu=1.5, lengthscale=0.4), SquaredExponential(1.2)),
    ]
    for spec in specs:
        Z = rng.standard_normal((20, 3))
        G = gram(spec, Z)
        assert np.array_equal(G, G.T)
        jittered = G + JITTER * np.eye(20)
        assert np.linalg.eigvalsh(jittered).min() >= -1e-8


def test_gram_permutation_equivariant():
    rng = np.random.default_rng(3)
    Z = rng.standard_normal((12, 2))
    spec = Matern(nu=2.5, lengthscale=0.9)
    perm = rng.permutation(12)
    G = gram(spec, Z)
    G_perm = gram(spec, Z[perm])
    assert np.array_equal(G_perm, G[np.ix_(perm, perm)])


def test_composite_arithmetic_matches_children():
    rng = np.random.default_rng(4)
    left = SquaredExponential(0.5, input_slice=(0, 2))
    right = Matern(nu=1.5, lengthscale=0.7, input_slice=(2, 3))
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    assert Sum(left, right).eval(a, b) == 0.5 * (left.eval(a, b) + right.eval(a, b))
    assert Product(left, right).eval(a, b) == left.eval(a, b) * right.eval(a, b)


def test_slice_selection():
    k = SquaredExponential(1.0, input_slice=(1, 2))
    # only the second coordinate matters
    assert k.eval([5.0, 0.3], [-2.0, 0.3]) == pytest.approx(1.0)


def test_serialization_roundtrip():
    spec = Sum(
        Product(
            Linear(input_slice=(0, 2), scale=1.4142135623730951),
            SquaredExponential(0.2, input_slice=(2, 4)),
        ),
        Matern(nu=2.5, lengthscale=3.0, input_slice=(0, 1)),
    )
    assert from_dict(spec.to_dict()) == spec


def test_from_dict_rejects_unknown():
    with pytest.raises(DomainError):
        from_dict({"type": "periodic"})
    with pytest.raises(DomainError):
        from_dict({"type": "sum", "children": [{"type": "linear"}]})
