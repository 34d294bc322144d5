"""Separation of variables for the sl2 Gaudin model in genus zero.

The residues X_i of a one-form sum X_i dt/(t - z_i) are traded for its
zeros y_1..y_{N-1} and the overall scale r = sum X_i.  In these
coordinates the joint eigenproblem splits into copies of one second-order
equation in a single variable, which is the oper d^2 - q(t) twisted by the
rank-one local system attached to the site weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bethe, gaudin, repcore
from .errors import (
    CollisionError,
    DegenerateTransitionError,
    InvalidInputError,
    SingularEvaluationError,
    TruncationOverflowError,
    UnsupportedAlgebraError,
)
from .rational import RationalFunction
from .repcore import SL2

TRANSITION_TOL = 1e-12
N_SAMPLES = 50
SAMPLE_RADIUS = 1.5
EXCLUSION = 0.1


@dataclass(frozen=True)
class SeparatedCoordinates:
    y: np.ndarray
    r: complex


def _points(z):
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.size < 2:
        raise InvalidInputError("the transition needs at least two points")
    return z


def numerator(x, z):
    """Coefficients (highest first) of sum_i X_i prod_{k != i} (t - z_k)."""
    x = np.asarray(x, dtype=complex)
    out = np.zeros(z.size, dtype=complex)
    for i in range(z.size):
        out += x[i] * np.poly(np.delete(z, i))
    return out


def to_separated(x, z):
    """Zeros y_j of sum X_i/(t - z_i) (companion eigenvalues) and r = sum X_i."""
    z = _points(z)
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.size != z.size:
        raise InvalidInputError("one residue per point is required")
    r = complex(x.sum())
    if abs(r) <= TRANSITION_TOL * max(float(np.sum(np.abs(x))), 1e-300):
        raise DegenerateTransitionError("sum of residues vanishes; numerator degree drops")
    y = np.roots(numerator(x, z))
    y = np.array(sorted(y, key=lambda v: (v.real, v.imag)), dtype=complex)
    return SeparatedCoordinates(y=y, r=r)


def from_separated(sep, z):
    """X_i = r prod_j (z_i - y_j) / prod_{k != i} (z_i - z_k)."""
    z = _points(z)
    y = np.asarray(sep.y, dtype=complex).reshape(-1)
    if y.size != z.size - 1:
        raise InvalidInputError(f"need {z.size - 1} separated coordinates")
    scale = float(np.max(np.abs(z - z.mean())))
    if y.size and np.min(np.abs(y[:, None] - z[None, :])) <= 1e-12 * scale:
        raise CollisionError("a separated coordinate coincides with a point")
    out = np.empty(z.size, dtype=complex)
    for i in range(z.size):
        out[i] = sep.r * np.prod(z[i] - y) / np.prod(z[i] - np.delete(z, i))
    return out


def verma_problem(problem):
    """Same points with the Verma highest weights -lam_i - 2."""
    if problem.algebra != SL2:
        raise UnsupportedAlgebraError("separation of variables is implemented for sl2")
    lam = problem.cartan_pairings()[:, 0]
    return gaudin.GaudinProblem(SL2, problem.points, tuple(-x - 2 for x in lam))


# separated equation ------------------------------------------------------------


def gauge_term(problem):
    """G(y) = -1/2 sum_i lam_i/(y - z_i), so that nabla = d/dy + G(y)."""
    lam = problem.cartan_pairings()[:, 0]
    return RationalFunction.simple_poles(problem.points, -0.5 * lam)


def separated_operator(problem, mu):
    """(a1, a0) with nabla^2 - V = d^2 + a1 d + a0, V = sum mu_i/(y-z_i) + c_i/(y-z_i)^2."""
    g = gauge_term(problem)
    v = RationalFunction()
    for zi, ci, mi in zip(problem.z, problem.double_pole_coefficients(), mu):
        v = v + RationalFunction({zi: [mi, ci]})
    return g * 2.0, g.derivative() + g * g - v


def degauged_potential(problem, mu):
    """1/4 a1^2 + 1/2 a1' - a0 for the separated operator d^2 + a1 d + a0.

    Removing the first-order term by a gauge transformation leaves
    d^2 - (this potential), which must be the oper potential q(t).
    """
    a1, a0 = separated_operator(problem, mu)
    return a1 * a1 * 0.25 + a1.derivative() * 0.5 - a0


def sample_points(problem, n=N_SAMPLES):
    """Points on a circle of radius 1.5 * spread about the centroid, at
    least 0.1 * spread away from every z_i."""
    c, spread = problem.centroid, problem.scale
    rad = SAMPLE_RADIUS * spread
    cand = c + rad * np.exp(2j * np.pi * (np.arange(8 * n) + 0.5) / (8 * n))
    ok = cand[np.min(np.abs(cand[:, None] - problem.z[None, :]), axis=1) > EXCLUSION * spread]
    if ok.size < n:
        raise SingularEvaluationError("not enough sample points away from the poles")
    return ok[np.linspace(0, ok.size - 1, n).round().astype(int)]


@dataclass(frozen=True)
class SeparatedReport:
    residual: float
    samples: np.ndarray
    passed: bool


def separated_residual(problem, mu, roots, tol=1e-9):
    """sup over samples of |(nabla^2 - V) psi| / (1 + |psi|) with
    psi(y) = prod_j (y - w_j) and nabla = d/dy - 1/2 sum lam_i/(y - z_i),
    lam_i being the site highest weights of ``problem``.

    ``mu`` may be an EigenvaluePackage or an array of residues.
    """
    if problem.algebra != SL2:
        raise UnsupportedAlgebraError("separation of variables is implemented for sl2")
    mu = np.asarray(getattr(mu, "mu", mu), dtype=complex)
    w = np.asarray(getattr(roots, "w", roots), dtype=complex).reshape(-1)
    if w.size and np.min(np.abs(w[:, None] - problem.z[None, :])) <= 1e-10 * problem.scale:
        raise CollisionError("a root coincides with a marked point")
    a1, a0 = separated_operator(problem, mu)
    p = np.poly(w) if w.size else np.array([1.0 + 0j])
    dp, ddp = np.polyder(p, 1), np.polyder(p, 2)
    ys = sample_points(problem)
    psi = np.polyval(p, ys)
    res = np.polyval(ddp, ys) + a1(ys) * np.polyval(dp, ys) + a0(ys) * psi
    val = float(np.max(np.abs(res) / (1.0 + np.abs(psi))))
    return SeparatedReport(residual=val, samples=ys, passed=val < tol)


# Sklyanin identity ----------------------------------------------------------------


def _current(space, z, label, t, power=1):
    out = None
    for i, zi in enumerate(z):
        term = space.site_operator(label, i) * (1.0 / (t - zi) ** power)
        out = term if out is None else out + term
    return out


def sklyanin_sides(problem, t, ordering="fe"):
    """(S(t), f(t)e(t) + h(t)^2/4 - h'(t)/2) as dense matrices.

    ``ordering="ef"`` uses e(t)f(t) instead, which breaks the identity.
    """
    space = problem.space()
    z = problem.z
    e, f, h = (_current(space, z, a, t) for a in ("e", "f", "h"))
    dh = -_current(space, z, "h", t, power=2)
    first = f @ e if ordering == "fe" else e @ f
    rhs = first + 0.25 * (h @ h) - 0.5 * dh
    lhs = gaudin.s_operator(problem, t)
    return lhs.toarray(), rhs.toarray()


def sklyanin_identity(problem, samples, ordering="fe"):
    """Max over samples of ||S(t) - rhs(t)||_2 / max(1, ||S(t)||_2)."""
    worst = 0.0
    for t in np.atleast_1d(samples):
        if np.min(np.abs(t - problem.z)) <= 1e-12 * problem.scale:
            raise SingularEvaluationError(f"sample {t} is a marked point")
        lhs, rhs = sklyanin_sides(problem, t, ordering)
        worst = max(worst, float(np.linalg.norm(lhs - rhs, 2) / max(1.0, np.linalg.norm(lhs, 2))))
    return worst


def sklyanin_residues(problem, radius=None, nodes=64):
    """Residues at each z_i of the right-hand side (trapezoid on a small
    circle), for comparison with the hamiltonians."""
    z = problem.z
    out = []
    for i, zi in enumerate(z):
        others = np.delete(z, i)
        r = radius or 0.25 * (float(np.min(np.abs(others - zi))) if others.size else 1.0)
        acc = None
        for k in range(nodes):
            ang = 2 * np.pi * k / nodes
            t = zi + r * np.exp(1j * ang)
            _, rhs = sklyanin_sides(problem, t)
            term = rhs * (r * np.exp(1j * ang) / nodes)
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


# Verma proportionality ---------------------------------------------------------------


def _linear_form_product(forms, n_sites, cutoff):
    """Coefficient tensor of prod_j (sum_i a_{j,i} X_i) on the truncated
    Verma tensor basis X_1^{k_1}...X_N^{k_N}, 0 <= k_i <= cutoff."""
    shape = (cutoff + 1,) * n_sites
    v = np.zeros(shape, dtype=complex)
    v[(0,) * n_sites] = 1.0
    for a in forms:
        new = np.zeros(shape, dtype=complex)
        for i in range(n_sites):
            src = [slice(None)] * n_sites
            dst = [slice(None)] * n_sites
            src[i] = slice(0, cutoff)
            dst[i] = slice(1, cutoff + 1)
            if np.any(np.take(v, cutoff, axis=i)):
                raise TruncationOverflowError("product exceeds the degree cutoff")
            new[tuple(dst)] += a[i] * v[tuple(src)]
        v = new
    return v.reshape(-1)


def separated_product_coefficients(problem, config, cutoff):
    """r^m prod_{k,j} (y_k - w_j) as a polynomial in X, in tensor coordinates.

    Since prod_k (w - y_k) = P_X(w)/r with P_X(w) = sum_i X_i
    prod_{l != i} (w - z_l), the product equals (-1)^{m(N-1)} prod_j P_X(w_j)
    up to the factor r^-m, and each P_X(w_j) is a linear form in X: no
    root of the transition polynomial is ever computed.
    """
    z = problem.z
    n = z.size
    forms = []
    for w in config.roots:
        forms.append(np.array([np.prod(w - np.delete(z, i)) for i in range(n)]))
    sign = (-1) ** (config.m * (n - 1))
    return sign * _linear_form_product(forms, n, cutoff)


@dataclass(frozen=True)
class ProportionalityReport:
    constant: complex
    deviation: float
    eigen_residual: float
    cutoff: int
    predicted_constant: complex


def verma_hamiltonians(problem, space):
    z = problem.z
    out = []
    for i in range(problem.n_sites):
        h = None
        for j in range(problem.n_sites):
            if j == i:
                continue
            term = gaudin._pair_operator(space, i, j) * (1.0 / (z[i] - z[j]))
            h = term if h is None else h + term
        out.append(h)
    return out


def verma_proportionality(problem, config, cutoff):
    """Compare the product solution in separated variables with the
    Bethe vector in the truncated Verma tensor product.

    The Verma modules have highest weights -lam_i - 2 with f acting by
    multiplication by X_i and the vacuum is 1.  Reports the constant c
    with (product) = c * (Bethe vector), the relative deviation from
    exact proportionality and the eigenvector residual of the Bethe
    vector under the Verma-module hamiltonians (exact once the cutoff
    exceeds m, as the hamiltonians preserve total degree).
    """
    if problem.algebra != SL2:
        raise UnsupportedAlgebraError("Verma realization is implemented for sl2")
    cutoff = int(cutoff)
    if cutoff < config.m + 2:
        raise TruncationOverflowError(f"cutoff {cutoff} < m + 2 = {config.m + 2}")
    w = config.w
    if w.size and np.min(np.abs(w[:, None] - problem.z[None, :])) <= 1e-10 * problem.scale:
        raise CollisionError("a root coincides with a marked point")
    lam = problem.cartan_pairings()[:, 0]
    space = repcore.verma_tensor_space(tuple(lam), cutoff)
    vec = bethe.bethe_vector(problem, config, space)
    prod = separated_product_coefficients(problem, config, cutoff)
    denom = np.vdot(vec, vec)
    const = complex(np.vdot(vec, prod) / denom) if abs(denom) > 0 else 0j
    dev = float(np.linalg.norm(prod - const * vec) / max(np.linalg.norm(prod), 1e-300))
    vp = verma_problem(problem)
    nsq = float(np.linalg.norm(vec))
    if config.m == 0 or bethe.residual_norm(vp, config) < 1e-9:
        pkg = bethe.eigenvalues_from_roots(vp, config)
        hs = verma_hamiltonians(problem, space)
        eig = max(float(np.linalg.norm(h @ vec - m * vec)) for h, m in zip(hs, pkg.mu)) / nsq
    else:
        eig = float("nan")
    pred = (-1) ** (config.m * (problem.n_sites - 1)) * complex(
        np.prod([np.prod(wj - problem.z) for wj in w])) if w.size else 1.0 + 0j
    return ProportionalityReport(
        constant=const,
        deviation=dev,
        eigen_residual=eig,
        cutoff=cutoff,
        predicted_constant=pred,
    )
