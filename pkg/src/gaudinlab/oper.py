"""Opers on the punctured sphere and the Miura transformation.

Covers the rational second- and third-order opers attached to Gaudin
data, the expansion of a factorized operator (d - chi_1)...(d - chi_n),
the coefficientwise Riccati recursion with its resonance obstructions
P_m, the sl3 factorization pipeline and the q-difference (TQ) version of
the Miura map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bethe, repcore
from .errors import (
    InvalidInputError,
    LatticeSingularityError,
    ResidueSumError,
    ResonanceObstructionError,
    TracelessnessError,
    UnsupportedColorError,
)
from .polynomial import Poly
from .rational import RationalFunction
from .repcore import SL2, SL3

RESIDUE_SUM_TOL = 1e-12
TRACE_TOL = 1e-12
RESONANCE_TOL = 1e-12
FACTORIZATION_TOL = 1e-10
DEFAULT_DEPTH = 16

# weights of sl3 as diagonal matrices
SL3_FUNDAMENTAL_DIAG = np.array([[2.0, -1.0, -1.0], [1.0, 1.0, -2.0]]) / 3.0
SL3_SIMPLE_ROOT_DIAG = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])


# oper data ------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectiveOper:
    """d^2 - q(t) with q = sum c_i/(t-z_i)^2 + sum mu_i/(t-z_i)."""

    points: np.ndarray
    c: np.ndarray
    mu: np.ndarray

    order = 2

    def q(self):
        out = RationalFunction()
        for zi, ci, mi in zip(self.points, self.c, self.mu):
            out = out + RationalFunction({zi: [mi, ci]})
        return out

    def coefficients(self):
        return (self.q(),)

    def infinity_value(self):
        """sum_i (c_i + z_i mu_i): the t^-2 coefficient of q at infinity."""
        return complex(np.sum(self.c + self.points * self.mu))

    def lam_inf(self):
        """Root lam of lam(lam+2)/4 = infinity_value with Re(lam) >= -1."""
        return complex(-1 + np.sqrt(1 + 4 * self.infinity_value()))


@dataclass(frozen=True)
class ThirdOrderOper:
    """d^3 - q1(t) d - q2(t) with
    q1 = sum c1_i/(t-z_i)^2 + mu_i/(t-z_i),
    q2 = sum c2_i/(t-z_i)^3 + nu_i/(t-z_i)^2 + kappa_i/(t-z_i)."""

    points: np.ndarray
    c1: np.ndarray
    mu: np.ndarray
    c2: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray

    order = 3

    def q1(self):
        out = RationalFunction()
        for zi, a, b in zip(self.points, self.c1, self.mu):
            out = out + RationalFunction({zi: [b, a]})
        return out

    def q2(self):
        out = RationalFunction()
        for zi, a, b, c in zip(self.points, self.c2, self.nu, self.kappa):
            out = out + RationalFunction({zi: [c, b, a]})
        return out

    def coefficients(self):
        return (self.q1(), self.q2())


def sl3_weight_diagonal(weight):
    n = np.asarray(repcore.normalize_weight(SL3, weight), dtype=float)
    return n @ SL3_FUNDAMENTAL_DIAG


def sl3_central_values(weight):
    """(c1, c2) of the vacuum oper with a single pole of residue ``weight``.

    Obtained by expanding (d - a_1/t)(d - a_2/t)(d - a_3/t), a = diagonal
    entries of the weight, and reading the t^-2 and t^-3 coefficients.
    """
    a = sl3_weight_diagonal(weight)
    comps = [RationalFunction({0.0: [x]}) for x in a]
    q1, q2 = miura_expand(MiuraConnection(tuple(comps))).coefficients
    return q1.coefficient(0.0, 2), q2.coefficient(0.0, 3)


def build_oper(problem, mu, nu=None, kappa=None):
    """Oper with the pole orders and leading coefficients fixed by the
    site weights and the given subleading data."""
    mu = np.asarray(mu, dtype=complex)
    if mu.shape != (problem.n_sites,):
        raise InvalidInputError("one residue per site is required")
    if abs(mu.sum()) > RESIDUE_SUM_TOL * max(1.0, float(np.max(np.abs(mu)))):
        raise ResidueSumError(f"residues must sum to zero, got {mu.sum()}")
    z = problem.z
    if problem.algebra == SL2:
        return ProjectiveOper(points=z, c=problem.double_pole_coefficients(), mu=mu)
    nu = np.zeros(problem.n_sites, complex) if nu is None else np.asarray(nu, complex)
    kappa = np.zeros(problem.n_sites, complex) if kappa is None else np.asarray(kappa, complex)
    vals = [sl3_central_values(w) for w in problem.weights]
    return ThirdOrderOper(
        points=z,
        c1=np.array([v[0] for v in vals]),
        mu=mu,
        c2=np.array([v[1] for v in vals]),
        nu=nu,
        kappa=kappa,
    )


# Miura transformation -------------------------------------------------------


@dataclass(frozen=True)
class MiuraConnection:
    """Diagonal connection with components chi_1..chi_n (sum zero)."""

    components: tuple

    @property
    def order(self):
        return len(self.components)

    def trace(self):
        return sum(self.components[1:], self.components[0])

    @classmethod
    def from_sl2(cls, chi):
        """Components (chi/2, -chi/2) for the normalized sl2 connection chi."""
        return cls((chi * 0.5, chi * -0.5))


@dataclass(frozen=True)
class MiuraExpansion:
    """d^n - q_1 d^{n-2} - ... - q_{n-1}; ``coefficients[k]`` is q_{k+1}."""

    order: int
    coefficients: tuple

    @property
    def q(self):
        return self.coefficients[0]


def _left_multiply(chi, coeffs):
    """(d - chi) L for monic L = d^n + sum_{k<n} coeffs[k] d^k."""
    n = len(coeffs)
    out = [None] * (n + 1)
    for k in range(n + 1):
        terms = []
        if k < n and coeffs[k] is not None:
            terms.append(coeffs[k].derivative())
            terms.append(-(chi * coeffs[k]))
        if k >= 1 and coeffs[k - 1] is not None:
            terms.append(coeffs[k - 1])
        if k == n:
            terms.append(-chi)
        out[k] = sum(terms[1:], terms[0]) if terms else None
    return out


def operator_coefficients(components):
    """Coefficients a_0..a_{n-1} of (d - chi_1)...(d - chi_n) = d^n + sum a_k d^k."""
    coeffs = [-components[-1]]
    for chi in reversed(components[:-1]):
        coeffs = _left_multiply(chi, coeffs)
    return coeffs


def miura_expand(connection, check_trace=True):
    """Expand (d - chi_1)...(d - chi_n) into d^n - q_1 d^{n-2} - ... ."""
    comps = tuple(connection.components)
    if len(comps) < 2:
        raise InvalidInputError("need at least two components")
    if check_trace and not connection.trace().is_zero(TRACE_TOL * max(
            1.0, max(c.max_abs_coefficient() for c in comps))):
        raise TracelessnessError("components of a Miura connection must sum to zero")
    a = operator_coefficients(comps)
    n = len(comps)
    qs = tuple(-(a[n - 2 - k]) if a[n - 2 - k] is not None else RationalFunction()
               for k in range(n - 1))
    return MiuraExpansion(order=n, coefficients=qs)


def sl2_miura(chi):
    """q = chi^2/4 - chi'/2."""
    return miura_expand(MiuraConnection.from_sl2(chi)).q


# sl3 factorization ------------------------------------------------------------


def sl3_connection(problem, config):
    """Diagonal components of chi(t) = sum lam_i/(t-z_i) - sum alpha_{c_j}/(t-w_j)."""
    if problem.algebra != SL3:
        raise InvalidInputError("sl3 connection needs an sl3 problem")
    if any(c not in (1, 2) for c in config.colors):
        raise UnsupportedColorError("only simple-reflection colors 1 and 2 are supported")
    comps = []
    diag_l = np.array([sl3_weight_diagonal(w) for w in problem.weights])
    diag_a = np.array([SL3_SIMPLE_ROOT_DIAG[c - 1] for c in config.colors]).reshape(-1, 3)
    for k in range(3):
        chi = RationalFunction.simple_poles(problem.points, diag_l[:, k])
        if config.m:
            chi = chi + RationalFunction.simple_poles(config.roots, -diag_a[:, k])
        comps.append(chi)
    return MiuraConnection(tuple(comps))


@dataclass(frozen=True)
class FactorizationReport:
    oper: ThirdOrderOper
    expansion: MiuraExpansion
    root_residues: np.ndarray  # (m,) max |coefficient| of q1, q2 at each w_j
    bethe_residuals: np.ndarray
    factorizes: bool
    consistent_with_bethe: bool
    tolerance: float = FACTORIZATION_TOL

    @property
    def worst_root_residue(self):
        return float(self.root_residues.max()) if self.root_residues.size else 0.0

    def hamiltonian_eigenvalues(self):
        """Residues of q1 at the marked points."""
        return self.oper.mu


def sl3_factorization_check(problem, config, tol=FACTORIZATION_TOL):
    """Expand the sl3 Miura product for the given colored roots and check
    that q1, q2 have no singular terms at the roots."""
    exp = miura_expand(sl3_connection(problem, config))
    q1, q2 = exp.coefficients
    res = np.array([
        max(np.max(np.abs(q1.principal_part(w)), initial=0.0),
            np.max(np.abs(q2.principal_part(w)), initial=0.0))
        for w in config.roots
    ])
    z = problem.z
    oper = ThirdOrderOper(
        points=z,
        c1=np.array([q1.coefficient(zi, 2) for zi in z]),
        mu=np.array([q1.coefficient(zi, 1) for zi in z]),
        c2=np.array([q2.coefficient(zi, 3) for zi in z]),
        nu=np.array([q2.coefficient(zi, 2) for zi in z]),
        kappa=np.array([q2.coefficient(zi, 1) for zi in z]),
    )
    br = bethe.residuals(problem, config)
    fact = bool(res.size == 0 or res.max() < tol)
    bethe_ok = bool(br.size == 0 or np.max(np.abs(br)) * problem.scale < tol)
    return FactorizationReport(
        oper=oper,
        expansion=exp,
        root_residues=res,
        bethe_residuals=br,
        factorizes=fact,
        consistent_with_bethe=fact == bethe_ok,
        tolerance=tol,
    )


def sl3_local_exponents(weight):
    """Roots of the indicial polynomial s(s-1)(s-2) - c1 s - c2 at a marked point."""
    c1, c2 = sl3_central_values(weight)
    roots = np.roots([1.0, -3.0, 2.0 - c1, -c2])
    return np.sort_complex(roots)


def sl3_expected_exponents(weight):
    n1, n2 = repcore.normalize_weight(SL3, weight)
    return np.sort_complex(np.array(
        [(-n1 - 2 * n2) / 3, (n2 - n1) / 3 + 1, (2 * n1 + n2) / 3 + 2], dtype=complex))


# Riccati recursion --------------------------------------------------------------


@dataclass(frozen=True)
class LocalSeries:
    """Coefficients at a regular singular point t = 0.

    ``coefficients[k]`` is the coefficient with index n = -k, i.e.
    q(t) = sum_k q_{-k} t^{k-2} or chi(t) = sum_k chi_{-k} t^{k-1}.
    """

    coefficients: np.ndarray
    kind: str = "q"

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        if self.kind not in ("q", "chi"):
            raise InvalidInputError("kind must be 'q' or 'chi'")

    @property
    def depth(self):
        return self.coefficients.size - 1

    def __getitem__(self, n):
        """Coefficient with index n <= 0."""
        return self.coefficients[-n]


@dataclass(frozen=True)
class RiccatiBranch:
    leading: complex
    chi: LocalSeries | None
    resonant_step: int | None = None
    obstruction: complex | None = None
    free_parameter: bool = False

    @property
    def solvable(self):
        return self.chi is not None


def _convolution_tail(chi, n):
    """sum_{i+j=n, n<i,j<0... } chi_i chi_j, excluding terms containing chi_n."""
    k = -n
    return sum(chi[a] * chi[k - a] for a in range(1, k))


def riccati_branches(q, depth=None, strict=False, tol=RESONANCE_TOL):
    """Solve chi^2/4 - chi'/2 = q coefficientwise (downward from n = 0).

    Returns one branch per root chi_0 of q_0 = chi_0(chi_0 + 2)/4.  On a
    resonant branch (chi_0 = m a nonnegative integer, step n = -m-1) the
    obstruction value is recorded; the branch continues with chi_{-m-1} = 0
    only if the obstruction vanishes, otherwise its ``chi`` is None (or
    ``ResonanceObstructionError`` is raised when ``strict``).
    """
    if isinstance(q, LocalSeries):
        coeffs = q.coefficients
    else:
        coeffs = np.asarray(q, dtype=complex)
    depth = coeffs.size - 1 if depth is None else int(depth)
    if depth > coeffs.size - 1:
        raise InvalidInputError(f"q given to depth {coeffs.size - 1} < requested {depth}")
    s = np.sqrt(1 + 4 * coeffs[0])
    leads = [-1 + s, -1 - s] if abs(s) > 0 else [-1 + 0j]
    scale = max(1.0, float(np.max(np.abs(coeffs[: depth + 1]))))
    branches = []
    for chi0 in leads:
        chi = np.zeros(depth + 1, dtype=complex)
        chi[0] = chi0
        m_res = None
        if abs(chi0.imag) < tol and abs(chi0.real - round(chi0.real)) < tol and round(chi0.real) >= 0:
            m_res = int(round(chi0.real))
            chi0 = complex(m_res)
            chi[0] = chi0
        branch = None
        for k in range(1, depth + 1):
            rhs = coeffs[k] - 0.25 * _convolution_tail(chi, -k)
            if m_res is not None and k == m_res + 1:
                if abs(rhs) > tol * scale:
                    if strict:
                        raise ResonanceObstructionError(-k, complex(rhs))
                    branch = RiccatiBranch(complex(chi0), None, -k, complex(rhs), False)
                    break
                chi[k] = 0.0
                continue
            chi[k] = rhs / ((chi0 - k + 1) / 2)
        if branch is None:
            resonant = m_res is not None and m_res + 1 <= depth
            obstruction = None
            if resonant:
                obstruction = complex(coeffs[m_res + 1]
                                      - 0.25 * _convolution_tail(chi, -(m_res + 1)))
            branch = RiccatiBranch(
                leading=complex(chi0),
                chi=LocalSeries(chi, kind="chi"),
                resonant_step=-(m_res + 1) if resonant else None,
                obstruction=obstruction,
                free_parameter=resonant,
            )
        branches.append(branch)
    return branches


def miura_series(chi, depth=None):
    """Coefficients q_n = 1/4 sum_{i+j=n} chi_i chi_j + (n+1)/2 chi_n."""
    c = chi.coefficients if isinstance(chi, LocalSeries) else np.asarray(chi, complex)
    depth = c.size - 1 if depth is None else depth
    q = np.zeros(depth + 1, dtype=complex)
    for k in range(depth + 1):
        conv = sum(c[a] * c[k - a] for a in range(k + 1))
        q[k] = 0.25 * conv + (1 - k) / 2 * c[k]
    return LocalSeries(q, kind="q")


def random_regular_series(rng, depth, margin=0.75, radius=4.0):
    """Random q to the given depth whose exponents chi_0 stay at least
    ``margin`` away from the resonant values 0, 1, 2, ...

    chi_0 = -1 +- s with Im s bounded away from zero, so the divisors
    (chi_0 - k + 1)/2 of the recursion never become small.  The tail
    q_{-k} decays like radius^-k (q analytic on |t| < radius).
    """
    s = rng.uniform(-1.5, 1.5) + 1j * rng.choice([-1, 1]) * rng.uniform(margin, 1.5)
    chi0 = -1 + s
    q = rng.normal(size=depth + 1) + 1j * rng.normal(size=depth + 1)
    q = q / float(radius) ** np.arange(depth + 1)
    q[0] = chi0 * (chi0 + 2) / 4
    return q


@dataclass(frozen=True)
class ObstructionPolynomial:
    m: int
    poly: Poly
    chi: tuple = field(default=(), repr=False)

    @property
    def variables(self):
        return self.poly.names

    @property
    def degree_weights(self):
        return tuple(range(1, self.m + 2))

    def weighted_degrees(self):
        return self.poly.weighted_degrees(self.degree_weights)

    def __call__(self, q_values):
        """Evaluate at (q_{-1}, ..., q_{-m-1})."""
        return self.poly(list(q_values))

    def format(self):
        return self.poly.format()

    def solve_last(self, q_values):
        """Value of q_{-m-1} making P_m vanish given q_{-1}..q_{-m}.

        P_m is affine in q_{-m-1} with coefficient 1.
        """
        vals = list(q_values)[: self.m] + [0]
        return -self.poly(vals)


def pm_variable_names(m):
    return tuple(f"q_{{-{k}}}" for k in range(1, m + 2))


def pm_polynomial(m):
    """Obstruction P_m(q_{-1}, ..., q_{-m-1}) of the resonant branch chi_0 = m.

    The Riccati recursion is run in exact rational arithmetic with the q_n
    as indeterminates; P_m is the value that must vanish at step n = -m-1,
    normalized so that q_{-m-1} enters with coefficient +1 (P_0 = q_{-1}).
    """
    if int(m) != m or m < 0:
        raise InvalidInputError("m must be a nonnegative integer")
    m = int(m)
    names = pm_variable_names(m)
    qv = [None] + [Poly.variable(names, k - 1) for k in range(1, m + 2)]
    chi = [Poly.constant(names, m)] + [None] * (m + 1)
    quarter = Fraction(1, 4)
    for k in range(1, m + 1):
        tail = Poly.constant(names, 0)
        for a in range(1, k):
            tail = tail + chi[a] * chi[k - a]
        chi[k] = (qv[k] - tail * quarter) / Fraction(m - k + 1, 2)
    tail = Poly.constant(names, 0)
    for a in range(1, m + 1):
        tail = tail + chi[a] * chi[m + 1 - a]
    p = qv[m + 1] - tail * quarter
    lead = p.coefficient(tuple(1 if i == m else 0 for i in range(m + 1)))
    p = p / lead
    return ObstructionPolynomial(m=m, poly=p, chi=tuple(chi[: m + 1]))


def resonant_potential(m, q_tail):
    """q(t) = m(m+2)/(4t^2) + sum_k q_{-k} t^{k-2} with q_tail = (q_{-1}, q_{-2}, ...).

    Returned as a callable together with its singular points.
    """
    coeffs = np.concatenate([[m * (m + 2) / 4.0], np.asarray(q_tail, dtype=complex)])

    def q(t):
        t = np.asarray(t, dtype=complex)
        return np.polyval(coeffs[::-1], t) / t**2

    return q, coeffs


# q-deformed Miura and the TQ relation ------------------------------------------


@dataclass(frozen=True)
class QMiuraData:
    q: complex
    numerator: tuple
    denominator: tuple
    base: complex = 1.0
    length: int = 32

    def lam(self, z):
        z = np.asarray(z, dtype=complex)
        return np.polyval(self.numerator, z) / np.polyval(self.denominator, z)

    def lattice(self):
        return complex(self.base) * complex(self.q) ** np.arange(self.length + 1)

    def ell(self, z):
        """l(z) = Lambda(qz) + 1/Lambda(z/q)."""
        z = np.asarray(z, dtype=complex)
        return self.lam(self.q * z) + 1.0 / self.lam(z / self.q)


def _validate_lattice(data):
    if data.length < 4:
        raise InvalidInputError("lattice length must be at least 4")
    q = complex(data.q)
    if q == 0 or abs(q) == 0:
        raise InvalidInputError("q must be nonzero")
    pts = data.lattice()
    num = np.abs(np.polyval(data.numerator, pts))
    den = np.abs(np.polyval(data.denominator, pts))
    ref_n = np.polyval(np.abs(data.numerator), np.abs(pts))
    ref_d = np.polyval(np.abs(data.denominator), np.abs(pts))
    if np.any(num <= 1e-12 * ref_n) or np.any(den <= 1e-12 * ref_d):
        raise LatticeSingularityError("Lambda has a zero or pole on the evaluation lattice")
    return pts


@dataclass(frozen=True)
class TQReport:
    residual: float
    q_values: np.ndarray
    pointwise: np.ndarray


def qmiura_tq(data, seeds=(1.0, 1.0)):
    """Build Q on the lattice from Q(zq) = Lambda(z) Q(z/q) and evaluate
    (D + D^{-1} - l(z)) Q at interior points, with D f(z) = f(z q^-2)."""
    pts = _validate_lattice(data)
    lam = data.lam(pts)
    n = pts.size
    qv = np.zeros(n, dtype=complex)
    qv[0], qv[1] = seeds
    for k in range(1, n - 1):
        qv[k + 1] = lam[k] * qv[k - 1]
    ks = np.arange(2, n - 2)
    ell = lam[ks + 1] + 1.0 / lam[ks - 1]
    res = qv[ks - 2] + qv[ks + 2] - ell * qv[ks]
    rel = float(np.max(np.abs(res)) / np.max(np.abs(qv)))
    return TQReport(residual=rel, q_values=qv, pointwise=res)


def tq_operator_identity(data, n_functions=16, seed=0):
    """Max deviation of D^2 - l D + 1 = (D - Lambda(zq))(D - Lambda(zq)^{-1})
    applied to random lattice functions, relative to their size."""
    pts = _validate_lattice(data)
    lam = data.lam(pts)
    n = pts.size
    rng = np.random.default_rng(seed)
    ks = np.arange(4, n - 1)
    worst = 0.0
    for _ in range(n_functions):
        f = rng.normal(size=n) + 1j * rng.normal(size=n)
        ell = lam[ks + 1] + 1.0 / lam[ks - 1]
        lhs = f[ks - 4] - ell * f[ks - 2] + f[ks]
        # (D - a)(D - b) f = f(zq^-4) - b(zq^-2) f(zq^-2) - a f(zq^-2) + a b f
        a = lam[ks + 1]
        b_shift = 1.0 / lam[ks - 1]
        b_here = 1.0 / lam[ks + 1]
        rhs = f[ks - 4] - b_shift * f[ks - 2] - a * f[ks - 2] + a * b_here * f[ks]
        scale = np.max(np.abs(f)) * max(1.0, float(np.max(np.abs(ell))))
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))
    return worst
