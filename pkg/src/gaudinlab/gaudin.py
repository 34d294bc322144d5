"""Gaudin hamiltonians, the generating operator S(t) and an
exact-diagonalization oracle restricted to singular-vector sectors."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from . import repcore
from .errors import (
    CoincidingPointsError,
    DegenerateSpectrumError,
    InvalidInputError,
    SingularEvaluationError,
    UnsupportedWeightError,
)
from .repcore import SL2, SL3


@dataclass(frozen=True)
class GaudinProblem:
    """Marked points ``z_i`` with site weights.

    sl2 weights may be arbitrary complex numbers (Verma highest weights)
    for the operations that only need the Bethe equations; operators on
    the tensor space require dominant integral weights.
    """

    algebra: str
    points: tuple
    weights: tuple

    def __post_init__(self):
        repcore.rank(self.algebra)
        pts = tuple(complex(z) for z in self.points)
        if len(pts) < 1:
            raise InvalidInputError("a Gaudin problem needs at least one site")
        if len(self.weights) != len(pts):
            raise InvalidInputError("points and weights have different lengths")
        ws = tuple(
            repcore.normalize_weight(self.algebra, w, allow_complex=self.algebra == SL2)
            for w in self.weights
        )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", ws)
        z = np.array(pts)
        scale = self.scale
        if len(z) > 1:
            d = np.abs(z[:, None] - z[None, :]) + np.diag(np.full(len(z), np.inf))
            if d.min() <= 1e-12 * scale:
                i, j = np.unravel_index(np.argmin(d), d.shape)
                raise CoincidingPointsError(f"points z_{i + 1} and z_{j + 1} coincide")

    @property
    def n_sites(self):
        return len(self.points)

    @property
    def z(self):
        return np.array(self.points)

    @property
    def centroid(self):
        return complex(np.mean(self.z))

    @property
    def scale(self):
        """Characteristic length of the configuration of points."""
        z = np.array(self.points)
        s = float(np.max(np.abs(z - z.mean()))) if len(z) > 1 else 0.0
        return s if s > 0 else max(1.0, float(np.max(np.abs(z))))

    @property
    def is_finite(self):
        return all(repcore.is_dominant_integral(w) for w in self.weights)

    @property
    def total_weight(self):
        return tuple(np.sum(np.array(self.weights), axis=0).tolist())

    def double_pole_coefficients(self):
        """c_i = (lam_i, lam_i + 2 rho) / 2, i.e. lam(lam+2)/4 for sl2."""
        return np.array([repcore.casimir_value(self.algebra, w) / 2 for w in self.weights],
                        dtype=complex)

    def space(self):
        if not self.is_finite:
            raise UnsupportedWeightError("tensor space needs dominant integral weights")
        return repcore.tensor_space(self.algebra, self.weights)

    def cartan_pairings(self):
        """Array (N, rank) of (lam_i, alpha_c)."""
        return np.array(self.weights, dtype=complex)


def sl2_problem(points, weights):
    return GaudinProblem(SL2, tuple(points), tuple(weights))


def casimir_tensor(algebra, left, right):
    """Omega = sum_a J_a (x) J_a between two site representations, written
    in the Chevalley basis: e(x)f + f(x)e + 1/2 h(x)h for sl2 and the
    analogous sum with the inverse Cartan matrix on the Cartan part for
    sl3.  Returns a pair of lists of (coefficient, left matrix, right matrix).
    """
    if algebra == SL2:
        return [(1.0, left["e"], right["f"]), (1.0, left["f"], right["e"]),
                (0.5, left["h"], right["h"])]
    terms = []
    for up, down in (("e1", "f1"), ("e2", "f2"), ("e3", "f3")):
        terms.append((1.0, left[up], right[down]))
        terms.append((1.0, left[down], right[up]))
    ginv = repcore.FUNDAMENTAL_GRAM[SL3]
    for a, ha in enumerate(("h1", "h2")):
        for b, hb in enumerate(("h1", "h2")):
            terms.append((float(ginv[a, b]), left[ha], right[hb]))
    return terms


def _pair_operator(space, i, j):
    algebra = space.algebra
    out = None
    for coef, a, b in casimir_tensor(algebra, space.reps[i].generators, space.reps[j].generators):
        term = coef * (space.site_operator(a, i) @ space.site_operator(b, j))
        out = term if out is None else out + term
    return sp.csr_array(out)


def omega_operators(problem):
    """Dictionary {(i, j): Omega^{(ij)}} for i < j."""
    space = problem.space()
    return {
        (i, j): _pair_operator(space, i, j)
        for i in range(problem.n_sites)
        for j in range(i + 1, problem.n_sites)
    }


def hamiltonians(problem):
    """Sparse matrices H_i = sum_{j != i} Omega^{(ij)} / (z_i - z_j)."""
    space = problem.space()
    z = problem.z
    omegas = omega_operators(problem)
    out = []
    for i in range(problem.n_sites):
        h = sp.csr_array((space.dim, space.dim), dtype=complex)
        for j in range(problem.n_sites):
            if j == i:
                continue
            h = h + omegas[(min(i, j), max(i, j))] * (1.0 / (z[i] - z[j]))
        out.append(sp.csr_array(h))
    return out


class _GaussRat:
    """Exact complex rational a + b i."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re, self.im = Fraction(re), Fraction(im)

    def __add__(self, o):
        return _GaussRat(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return _GaussRat(self.re - o.re, self.im - o.im)

    def __mul__(self, o):
        if not isinstance(o, _GaussRat):
            o = _GaussRat(o)
        return _GaussRat(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        return _GaussRat(self.re / n, -self.im / n)

    def is_zero(self):
        return self.re == 0 and self.im == 0


def hamiltonians_exact(problem, points):
    """Exact H_i as dictionaries {(row, col): (re, im)} of Fractions.

    ``points`` are (re, im) pairs of rationals.  Used to certify
    sum_i H_i = 0 without rounding.
    """
    if problem.algebra != SL2:
        raise InvalidInputError("exact hamiltonians are implemented for sl2 only")
    space = problem.space()
    zs = [_GaussRat(*p) for p in points]
    out = []
    cache = {}
    for i in range(problem.n_sites):
        acc = {}
        for j in range(problem.n_sites):
            if j == i:
                continue
            key = (min(i, j), max(i, j))
            if key not in cache:
                # 2*Omega has integer entries
                two_omega = (2 * _pair_operator(space, *key)).tocoo()
                cache[key] = [(int(r), int(c), Fraction(int(round(v.real)), 2))
                              for r, c, v in zip(two_omega.row, two_omega.col, two_omega.data)]
            coef = (zs[i] - zs[j]).inverse()
            for r, c, v in cache[key]:
                acc[(r, c)] = acc.get((r, c), _GaussRat(0)) + coef * v
        out.append(acc)
    return out


def s_operator(problem, t):
    """S(t) = sum_i c_i/(t-z_i)^2 Id + sum_i H_i/(t-z_i)."""
    t = complex(t)
    z = problem.z
    if np.min(np.abs(t - z)) <= 1e-14 * problem.scale:
        raise SingularEvaluationError(f"S(t) is singular at t={t}")
    hs = hamiltonians(problem)
    c = problem.double_pole_coefficients()
    dim = hs[0].shape[0]
    out = sp.identity(dim, dtype=complex, format="csr") * complex(np.sum(c / (t - z) ** 2))
    for i, h in enumerate(hs):
        out = out + h * (1.0 / (t - z[i]))
    return sp.csr_array(out)


def spectral_scale(hs):
    return max(float(abs(h).sum(axis=1).max()) for h in hs) if hs else 1.0


@dataclass(frozen=True)
class SpectrumReport:
    lam_inf: tuple
    eigenvalues: np.ndarray  # (k, N)
    eigenvectors: np.ndarray  # (dim, k)
    residuals: np.ndarray  # (k,)
    scale: float
    attempts: int

    @property
    def size(self):
        return self.eigenvalues.shape[0]


DEGENERACY_TOL = 1e-8
MAX_ATTEMPTS = 8


def diagonalize_sector(problem, lam_inf, seed=0, hams=None):
    """Joint spectrum of the H_i on singular vectors of weight ``lam_inf``.

    A random complex combination sum_k c_k H_k is diagonalized on the
    sector; each mu_i is then read off as a Rayleigh quotient.  Raises
    ``DegenerateSpectrumError`` if MAX_ATTEMPTS combinations all have a
    repeated eigenvalue (the joint spectrum is then not simple).
    """
    space = problem.space()
    basis = repcore.singular_vectors(space, lam_inf)
    lam_inf = repcore.normalize_weight(problem.algebra, lam_inf)
    k = basis.shape[1]
    if k == 0:
        raise InvalidInputError(f"singular sector {lam_inf} is empty")
    hs = hamiltonians(problem) if hams is None else hams
    scale = spectral_scale(hs)
    restricted = [basis.conj().T @ (h @ basis) for h in hs]
    rng = np.random.default_rng(seed)
    for attempt in range(1, MAX_ATTEMPTS + 1):
        coef = rng.normal(size=len(hs)) + 1j * rng.normal(size=len(hs))
        combo = sum(c * r for c, r in zip(coef, restricted))
        vals, vecs = np.linalg.eig(combo)
        gap = np.inf
        if k > 1:
            d = np.abs(vals[:, None] - vals[None, :]) + np.diag(np.full(k, np.inf))
            gap = d.min()
        if gap > DEGENERACY_TOL * max(scale, 1e-300) * np.abs(coef).max():
            break
    else:
        raise DegenerateSpectrumError(
            f"sector {lam_inf}: repeated eigenvalue in {MAX_ATTEMPTS} random combinations"
        )
    psi = basis @ vecs
    psi = psi / np.linalg.norm(psi, axis=0)
    mus = np.empty((k, len(hs)), dtype=complex)
    res = np.empty(k)
    for col in range(k):
        v = psi[:, col]
        worst = 0.0
        for i, h in enumerate(hs):
            hv = h @ v
            mus[col, i] = np.vdot(v, hv)
            worst = max(worst, float(np.linalg.norm(hv - mus[col, i] * v)))
        res[col] = worst
    key = np.round(np.column_stack([mus.real, mus.imag]).reshape(k, 2, -1)
                   .transpose(0, 2, 1).reshape(k, -1) / max(scale, 1e-300), 9)
    order = np.lexsort(key.T[::-1])
    return SpectrumReport(
        lam_inf=lam_inf,
        eigenvalues=mus[order],
        eigenvectors=psi[:, order],
        residuals=res[order],
        scale=scale,
        attempts=attempt,
    )
