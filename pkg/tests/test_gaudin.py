from fractions import Fraction
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaudinlab import gaudin, repcore
from gaudinlab.errors import CoincidingPointsError, InvalidInputError, SingularEvaluationError
from gaudinlab.gaudin import GaudinProblem, sl2_problem


def dense_sl2(lam):
    """Independent spin-lam/2 matrices in the same basis x^0..x^lam."""
    d = lam + 1
    e = np.zeros((d, d))
    f = np.zeros((d, d))
    for k in range(d):
        if k < lam:
            e[k + 1, k] = lam - k
        if k:
            f[k - 1, k] = k
    return e, f, np.diag([2.0 * k - lam for k in range(d)])


def dense_hamiltonians(points, weights):
    weights = [int(np.ravel(w)[0].real) for w in weights]
    mats = [dense_sl2(w) for w in weights]
    dims = [w + 1 for w in weights]

    def embed(op, site):
        return reduce(np.kron, [op if s == site else np.eye(d) for s, d in enumerate(dims)])

    n = len(points)
    out = []
    for i in range(n):
        h = 0
        for j in range(n):
            if i == j:
                continue
            ei, fi, hi = (embed(m, i) for m in mats[i])
            ej, fj, hj = (embed(m, j) for m in mats[j])
            omega = ei @ fj + fi @ ej + 0.5 * hi @ hj
            h = h + omega / (points[i] - points[j])
        out.append(h)
    return out


def random_problem(rng, n, max_lam=3):
    pts = rng.normal(size=n) + 1j * rng.normal(size=n)
    ws = rng.integers(0, max_lam + 1, size=n)
    return sl2_problem(pts, [int(w) for w in ws])


def test_two_site_singlet_and_triplet():
    p = sl2_problem([0, 1], [1, 1])
    h1 = gaudin.hamiltonians(p)[0].toarray()
    vals = np.sort(np.linalg.eigvals(h1).real)
    assert np.allclose(vals, [-0.5, -0.5, -0.5, 1.5])
    spec = gaudin.diagonalize_sector(p, 0)
    assert spec.size == 1
    assert np.allclose(spec.eigenvalues[0], [1.5, -1.5])


def test_matches_dense_oracle():
    rng = np.random.default_rng(1)
    for _ in range(5):
        p = random_problem(rng, 3)
        ours = gaudin.hamiltonians(p)
        ref = dense_hamiltonians(p.points, p.weights)
        for a, b in zip(ours, ref):
            assert np.allclose(a.toarray(), b, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=2, max_value=4), st.integers(min_value=0, max_value=10**6))
def test_commuting_and_sum_zero(n, seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, n)
    hs = gaudin.hamiltonians(p)
    scale = gaudin.spectral_scale(hs)
    for i in range(n):
        for j in range(i + 1, n):
            c = hs[i] @ hs[j] - hs[j] @ hs[i]
            assert abs(c).max() <= 1e-11 * scale ** 2 if c.nnz else True
    total = sum(hs)
    assert abs(total).max() <= 1e-12 * scale


def test_sum_zero_exact():
    p = sl2_problem([0, 1, 2 + 1j], [1, 2, 1])
    exact = gaudin.hamiltonians_exact(
        p, [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(2), Fraction(1))])
    keys = set().union(*exact)
    zero = gaudin._GaussRat(0)
    for key in keys:
        acc = zero
        for h in exact:
            acc = acc + h.get(key, zero)
        assert acc.is_zero()


def test_commutes_with_diagonal_sl2():
    p = sl2_problem([0, 1, -0.5j], [1, 1, 2])
    space = p.space()
    for label in "efh":
        tot = space.total(label)
        for h in gaudin.hamiltonians(p):
            c = h @ tot - tot @ h
            assert abs(c).max() < 1e-12 if c.nnz else True


def test_sl3_commuting_and_casimir_pole():
    p = GaudinProblem("sl3", (0, 1, 0.3 + 0.7j), ((1, 0), (0, 1), (1, 1)))
    hs = gaudin.hamiltonians(p)
    for i in range(3):
        for j in range(i + 1, 3):
            c = hs[i] @ hs[j] - hs[j] @ hs[i]
            assert abs(c).max() < 1e-11 if c.nnz else True
    assert np.allclose(p.double_pole_coefficients(), [4 / 3, 4 / 3, 3])


def test_s_operator_is_generating_function():
    p = sl2_problem([0, 1, 2j], [1, 1, 1])
    hs = gaudin.hamiltonians(p)
    spec = gaudin.diagonalize_sector(p, 1)
    for t in (0.4 + 0.3j, -2.0, 3j):
        s = gaudin.s_operator(p, t)
        for col in range(spec.size):
            v = spec.eigenvectors[:, col]
            mu = spec.eigenvalues[col]
            expected = np.sum(0.75 / (t - p.z) ** 2) + np.sum(mu / (t - p.z))
            assert np.allclose(s @ v, expected * v, atol=1e-11)
    with pytest.raises(SingularEvaluationError):
        gaudin.s_operator(p, 1.0)


def test_sector_spectrum_against_oracle():
    p = sl2_problem([0, 1, 3, -1j], [1, 2, 1, 2])
    ref = dense_hamiltonians(p.points, p.weights)
    for (lam_inf,) in repcore.sector_weights("sl2", p.weights):
        basis = repcore.singular_vectors(p.space(), lam_inf)
        if basis.shape[1] == 0:
            continue
        spec = gaudin.diagonalize_sector(p, lam_inf)
        assert spec.size == basis.shape[1]
        assert np.max(spec.residuals) < 1e-10 * spec.scale
        for col in range(spec.size):
            v = spec.eigenvectors[:, col]
            for i, h in enumerate(ref):
                assert np.allclose(h @ v, spec.eigenvalues[col, i] * v, atol=1e-10)


def test_empty_sector_rejected():
    p = sl2_problem([0, 1], [1, 1])
    with pytest.raises(InvalidInputError):
        gaudin.diagonalize_sector(p, 1)


def test_validation():
    with pytest.raises(CoincidingPointsError):
        sl2_problem([0, 0], [1, 1])
    with pytest.raises(InvalidInputError):
        sl2_problem([0, 1], [1])
    with pytest.raises(InvalidInputError):
        GaudinProblem("so5", (0, 1), (1, 1))
