import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from gaudinlab import bethe, oper
from gaudinlab.bethe import BetheConfiguration
from gaudinlab.errors import (
    InvalidInputError,
    LatticeSingularityError,
    ResidueSumError,
    ResonanceObstructionError,
    TracelessnessError,
    UnsupportedColorError,
)
from gaudinlab.gaudin import GaudinProblem, sl2_problem
from gaudinlab.rational import RationalFunction

T = sp.symbols("t")


# opers ----------------------------------------------------------------------


def test_build_oper_sl2():
    p = sl2_problem([0, 2], [1, 1])
    op = oper.build_oper(p, [1, -1])
    assert np.allclose(op.c, [0.75, 0.75])
    assert np.isclose(op.infinity_value(), 0.75 + 0.75 - 2)
    with pytest.raises(ResidueSumError):
        oper.build_oper(p, [1, 1])
    with pytest.raises(InvalidInputError):
        oper.build_oper(p, [1, -1, 0])


def test_lam_inf_consistency_from_bethe():
    p = sl2_problem([0, 1, 2j], [1, 1, 2])
    for cfg in bethe.solve(p, 1):
        pkg = bethe.eigenvalues_from_roots(p, cfg)
        op = oper.build_oper(p, pkg.mu)
        assert abs(op.lam_inf() - 2) < 1e-10


def test_sl3_central_values_vacuum():
    c1, c2 = oper.sl3_central_values((1, 0))
    assert np.isclose(c1, 4 / 3) and np.isclose(c2, -16 / 27)


# Miura ------------------------------------------------------------------------


def test_single_pole_sl2():
    for c in (1.0, 2.5, -0.3 + 0.2j):
        q = oper.sl2_miura(RationalFunction({0: [c]}))
        assert np.isclose(q.coefficient(0, 2), c * (c + 2) / 4)
        assert abs(q.residue(0)) < 1e-15


def test_zero_connection_order3():
    zero = RationalFunction()
    exp = oper.miura_expand(oper.MiuraConnection((zero, zero, zero)))
    assert exp.order == 3
    assert all(c.is_zero() for c in exp.coefficients)


def test_trace_check():
    a = RationalFunction({0: [1.0]})
    with pytest.raises(TracelessnessError):
        oper.miura_expand(oper.MiuraConnection((a, a)))


def _sym_component(poles):
    return sum(sp.nsimplify(r) / (T - sp.nsimplify(p)) for p, r in poles.items())


@pytest.mark.parametrize("n", [2, 3, 4])
def test_miura_matches_symbolic_expansion(n):
    rng = np.random.default_rng(n)
    pts = [0, 1, 2]
    res = rng.integers(-4, 5, size=(n, 3)).astype(float)
    res[-1] = -res[:-1].sum(axis=0)
    comps = [RationalFunction.simple_poles(pts, r) for r in res]
    exp = oper.miura_expand(oper.MiuraConnection(tuple(comps)))
    # oracle: apply the product to a generic function g(t) with sympy
    g = sp.Function("g")(T)
    expr = g
    for r in reversed(res):
        chi = _sym_component(dict(zip(pts, r)))
        expr = sp.diff(expr, T) - chi * expr
    expr = sp.expand(expr)
    probe = sp.Rational(7, 10) + sp.I * sp.Rational(3, 10)
    for k in range(n - 1):
        # q_{k+1} multiplies -d^{n-2-k} g
        coeff = -expr.coeff(sp.Derivative(g, (T, n - 2 - k))) if n - 2 - k > 0 else \
            -(expr.subs({sp.Derivative(g, (T, j)): 0 for j in range(1, n + 1)}) / g)
        val = complex(sp.N(sp.simplify(coeff).subs(T, probe)))
        assert abs(exp.coefficients[k](complex(probe)) - val) < 1e-9 * max(1, abs(val))


def test_miura_erases_root_poles():
    p = sl2_problem([0, 1, 0.4 + 1.3j], [1, 1, 1])
    for cfg in bethe.solve(p, 1):
        chi = bethe.connection(p, cfg)
        q = oper.sl2_miura(chi)
        for w in cfg.roots:
            assert np.max(np.abs(q.principal_part(w, tol=1e-14)), initial=0) < 1e-12


# sl3 --------------------------------------------------------------------------


def test_sl3_vacuum_factorizes():
    p = GaudinProblem("sl3", (0, 1), ((1, 0), (0, 1)))
    rep = oper.sl3_factorization_check(p, BetheConfiguration(()))
    assert rep.factorizes and rep.consistent_with_bethe


def test_sl3_solved_config_factorizes_and_perturbation_breaks():
    p = GaudinProblem("sl3", (0.0, 1.0, 0.4 + 1.3j), ((1, 0), (0, 1), (1, 1)))
    for cfg in bethe.solve(p, (1, 1)):
        rep = oper.sl3_factorization_check(p, cfg)
        assert rep.worst_root_residue < 1e-10
        assert rep.consistent_with_bethe
        bad = oper.sl3_factorization_check(p, cfg.perturbed(0, 1e-3))
        assert bad.worst_root_residue > 1e-6 and not bad.factorizes
        assert bad.consistent_with_bethe


def test_sl3_defining_eigenvalues():
    p = GaudinProblem("sl3", (0.0, 1.0), ((1, 0), (1, 0)))
    (cfg,) = bethe.solve(p, (1, 0))
    rep = oper.sl3_factorization_check(p, cfg)
    assert np.allclose(rep.hamiltonian_eigenvalues(), [4 / 3, -4 / 3], atol=1e-10)
    vac = oper.sl3_factorization_check(p, BetheConfiguration(()))
    assert np.allclose(vac.hamiltonian_eigenvalues(), [-2 / 3, 2 / 3], atol=1e-12)


def test_sl3_unsupported_color():
    p = GaudinProblem("sl3", (0.0, 1.0), ((1, 0), (1, 0)))
    with pytest.raises(UnsupportedColorError):
        oper.sl3_connection(p, BetheConfiguration([0.5], [3]))


@pytest.mark.parametrize("weight", [(0, 0), (1, 0), (0, 1), (1, 1)])
def test_sl3_local_exponents(weight):
    assert np.allclose(oper.sl3_local_exponents(weight), oper.sl3_expected_exponents(weight),
                       atol=1e-10)


# Riccati ------------------------------------------------------------------------


def test_zero_potential_branches():
    branches = oper.riccati_branches(np.zeros(9))
    leads = sorted(b.leading.real for b in branches)
    assert leads == [-2.0, 0.0]
    for b in branches:
        assert b.solvable
        assert np.all(b.chi.coefficients[1:] == 0)


def test_m1_resonance_hand_computation():
    q = np.array([0.75, 0.3, 0.0, 0.0])
    (b,) = [br for br in oper.riccati_branches(q) if br.leading == 1]
    # chi_{-1} = 2 q_{-1}; obstruction chi_{-1}^2/4 - q_{-2} must vanish
    assert b.obstruction is not None
    assert not b.solvable
    assert np.isclose(b.obstruction, -(0.25 * 0.6**2 - 0.0))
    q[2] = 0.25 * 0.6**2
    (b,) = [br for br in oper.riccati_branches(q) if br.leading == 1]
    assert b.solvable and b.free_parameter
    assert np.isclose(b.chi[-1], 0.6)
    with pytest.raises(ResonanceObstructionError):
        oper.riccati_branches(np.array([0.75, 0.3, 0.0, 0.0]), strict=True)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_riccati_roundtrip(seed):
    rng = np.random.default_rng(seed)
    q = oper.random_regular_series(rng, 16)
    for b in oper.riccati_branches(q, 16):
        assert b.solvable
        back = oper.miura_series(b.chi, 16).coefficients
        assert np.max(np.abs(back - q)) < 1e-12 * max(1, np.max(np.abs(q)))


def test_pm_low_orders():
    assert oper.pm_polynomial(0).format() == "q_{-1}"
    p1 = oper.pm_polynomial(1)
    assert p1.format() == "-q_{-1}^2 + q_{-2}"
    p2 = oper.pm_polynomial(2)
    assert p2((2, 3, 5)) == pytest.approx(0.25 * 8 - 2 * 3 + 5)


def _sympy_pm(m):
    qs = sp.symbols(f"q1:{m + 2}")
    cs = sp.symbols(f"c1:{m + 2}")
    chi = m / T + sum(cs[k - 1] * T ** (k - 1) for k in range(1, m + 2))
    q = m * (m + 2) / sp.Integer(4) / T**2 + sum(qs[k - 1] * T ** (k - 2) for k in range(1, m + 2))
    resid = sp.expand((chi**2 / 4 - sp.diff(chi, T) / 2 - q) * T**2)
    sol = sp.solve([resid.coeff(T, k) for k in range(1, m + 1)], cs[:m], dict=True)[0] if m else {}
    obstruction = sp.expand(-resid.coeff(T, m + 1).subs(sol))
    return qs, obstruction


@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_pm_matches_symbolic_oracle(m):
    qs, ref = _sympy_pm(m)
    assert sp.Poly(ref, *qs).coeff_monomial(qs[m]) == 1
    ours = oper.pm_polynomial(m)
    rng = np.random.default_rng(m)
    for _ in range(5):
        vals = [sp.Rational(int(v), 7) for v in rng.integers(-20, 20, size=m + 1)]
        exact = ref.subs(dict(zip(qs, vals)))
        assert abs(ours([float(v) for v in vals]) - float(exact)) < 1e-10


@pytest.mark.parametrize("m", range(7))
def test_pm_weighted_degree(m):
    assert oper.pm_polynomial(m).weighted_degrees() == {m + 1}


def test_pm_solve_last_kills_obstruction():
    for m in range(4):
        pm = oper.pm_polynomial(m)
        rng = np.random.default_rng(m)
        tail = list(rng.normal(size=m))
        last = pm.solve_last(tail + [0])
        assert abs(pm(tail + [last])) < 1e-12
        q = np.concatenate([[m * (m + 2) / 4], tail, [last], np.zeros(3)])
        (b,) = [br for br in oper.riccati_branches(q) if abs(br.leading - m) < 1e-12]
        assert b.solvable


# TQ ------------------------------------------------------------------------------


def test_tq_trivial():
    data = oper.QMiuraData(q=0.7, numerator=(1.0,), denominator=(1.0,))
    rep = oper.qmiura_tq(data)
    assert rep.residual == 0
    assert np.allclose(data.ell(data.lattice()), 2)


def test_tq_generic_mobius():
    data = oper.QMiuraData(q=0.7, numerator=(1.0, -0.3 - 0.4j), denominator=(1.0, 1.7 + 0.2j))
    assert oper.qmiura_tq(data).residual < 1e-12
    assert oper.tq_operator_identity(data) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([0.5, 0.7, 0.9]), st.integers(0, 10**6))
def test_tq_random(qabs, seed):
    rng = np.random.default_rng(seed)
    num = tuple(rng.normal(size=3) + 1j * rng.normal(size=3))
    den = tuple(rng.normal(size=3) + 1j * rng.normal(size=3))
    q = qabs * np.exp(1j * rng.uniform(0, 2 * np.pi))
    data = oper.QMiuraData(q=q, numerator=num, denominator=den)
    try:
        rep = oper.qmiura_tq(data)
    except LatticeSingularityError:
        return
    assert rep.residual < 1e-12
    assert oper.tq_operator_identity(data, seed=seed) < 1e-12


def test_tq_lattice_validation():
    with pytest.raises(LatticeSingularityError):
        oper.qmiura_tq(oper.QMiuraData(q=0.5, numerator=(1.0, -1.0), denominator=(1.0,)))
    with pytest.raises(InvalidInputError):
        oper.qmiura_tq(oper.QMiuraData(q=0.5, numerator=(1.0,), denominator=(1.0,), length=3))
