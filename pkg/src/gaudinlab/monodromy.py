"""Monodromy of second- and third-order Fuchsian operators on the sphere.

The operator d^n - ... is turned into its companion first-order system
Y' = A(t) Y and the fundamental matrix normalized to the identity at a
common base point is carried around each singularity along a segment, a
full counterclockwise circle and the segment back.  Loop matrices compose
as propagators: following loop g and then loop h gives M_h M_g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import bethe, oper as oper_mod
from .errors import (
    ContourTooCloseError,
    InvalidInputError,
    StepUnderflowError,
    UnsupportedAlgebraError,
)
from .rational import RationalFunction
from .repcore import SL2

RTOL = 1e-12
ATOL = 1e-14
MAX_STEPS = 10**6
TRIVIALITY_TOL = 1e-6
SINGULAR_COEFF_TOL = 1e-9
_DOP853_STAGES = 12


def _evaluator(rf):
    """Fast scalar evaluation of a RationalFunction."""
    data = [(complex(p), np.asarray(c, dtype=complex)) for p, c in rf.poles.items()]

    def f(t):
        total = 0j
        for p, c in data:
            u = 1.0 / (t - p)
            acc = 0j
            for ck in c[::-1]:
                acc = (acc + ck) * u
            total += acc
        return total

    return f


@dataclass(frozen=True)
class FuchsianSystem:
    """Companion system of d^n - sum_k a_k(t) d^{n-2-k}.

    ``coefficients[k]`` is a scalar callable for q_{k+1}: order 2 uses
    phi'' = q phi, order 3 uses phi''' = q1 phi' + q2 phi.
    """

    order: int
    coefficients: tuple
    singularities: tuple

    def __post_init__(self):
        if self.order not in (2, 3):
            raise InvalidInputError("only orders 2 and 3 are supported")
        if len(self.coefficients) != self.order - 1:
            raise InvalidInputError("need order-1 coefficient functions")
        object.__setattr__(self, "singularities", tuple(complex(s) for s in self.singularities))

    def matrix(self, t):
        n = self.order
        a = np.zeros((n, n), dtype=complex)
        a[np.arange(n - 1), np.arange(1, n)] = 1.0
        if n == 2:
            a[1, 0] = self.coefficients[0](t)
        else:
            a[2, 1] = self.coefficients[0](t)
            a[2, 0] = self.coefficients[1](t)
        return a

    @property
    def spread(self):
        s = np.array(self.singularities)
        if s.size == 0:
            return 1.0
        r = float(np.max(np.abs(s - s.mean())))
        return r if r > 0 else max(1.0, float(np.max(np.abs(s))))

    @property
    def center(self):
        s = np.array(self.singularities)
        return complex(s.mean()) if s.size else 0j


def _poles_of(rfs, tol=SINGULAR_COEFF_TOL):
    pts = []
    for rf in rfs:
        for p, c in rf.poles.items():
            if np.max(np.abs(c), initial=0.0) > tol and all(abs(p - q) > 0 for q in pts):
                pts.append(p)
    return sorted(pts, key=lambda z: (z.real, z.imag))


def companion_system(op, singularities=None):
    """FuchsianSystem from a ProjectiveOper, ThirdOrderOper, MiuraExpansion,
    RationalFunction (taken as q of d^2 - q) or a scalar callable q (then
    ``singularities`` is required)."""
    if isinstance(op, FuchsianSystem):
        return op
    if isinstance(op, RationalFunction):
        rfs = (op,)
    elif isinstance(op, (oper_mod.ProjectiveOper, oper_mod.ThirdOrderOper)):
        rfs = op.coefficients()
        if singularities is None:
            singularities = list(op.points)
    elif isinstance(op, oper_mod.MiuraExpansion):
        rfs = op.coefficients
    elif callable(op):
        if singularities is None:
            raise InvalidInputError("singularities are required for a callable potential")
        return FuchsianSystem(2, (op,), tuple(singularities))
    else:
        raise InvalidInputError(f"cannot build a companion system from {type(op).__name__}")
    if singularities is None:
        singularities = _poles_of(rfs)
    return FuchsianSystem(len(rfs) + 1, tuple(_evaluator(r) for r in rfs), tuple(singularities))


# contours ----------------------------------------------------------------------


@dataclass(frozen=True)
class ContourSpec:
    """Loop from ``base`` to the circle |t - z_k| = radius, once around
    counterclockwise, and back.  ``density`` bounds the maximal step as
    a fraction of the piece length (None lets the integrator choose)."""

    base: complex
    index: int
    radius: float
    density: float | None = None


def _segment_distance(p, a, b):
    d = b - a
    if d == 0:
        return abs(p - a)
    s = np.clip(((p - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return abs(p - (a + s * d))


def default_radius(system, index, base=None):
    s = np.array(system.singularities)
    zk = s[index]
    others = np.delete(s, index)
    near = float(np.min(np.abs(others - zk))) if others.size else np.inf
    if base is not None:
        near = min(near, abs(complex(base) - zk))
    if not np.isfinite(near):
        near = 2.0 * system.spread
    return 0.5 * near


def _entry_point(spec, zk):
    d = spec.base - zk
    return zk + spec.radius * d / abs(d)


def validate_contour(system, spec):
    s = np.array(system.singularities)
    if not 0 <= spec.index < s.size:
        raise InvalidInputError(f"no singularity with index {spec.index}")
    zk = s[spec.index]
    if spec.radius <= 0:
        raise InvalidInputError("radius must be positive")
    if abs(spec.base - zk) <= spec.radius:
        raise ContourTooCloseError("base point lies inside the loop circle")
    entry = _entry_point(spec, zk)
    for l, zl in enumerate(s):
        if l == spec.index:
            continue
        clear = min(_segment_distance(zl, spec.base, entry), abs(abs(zl - zk) - spec.radius))
        if clear < spec.radius / 2:
            raise ContourTooCloseError(
                f"contour around singularity {spec.index} passes within {clear:.3g} "
                f"of singularity {l}")
        if abs(zl - zk) < spec.radius:
            raise ContourTooCloseError(f"loop around {spec.index} encloses singularity {l}")


def _pieces(spec, zk):
    """Parametrized pieces (t(s), t'(s)) for s in [0, 1]."""
    base = complex(spec.base)
    entry = _entry_point(spec, zk)
    theta0 = np.angle(entry - zk)
    r = spec.radius

    def seg(a, b):
        return (lambda s: a + s * (b - a)), (lambda s: b - a)

    circle = (lambda s: zk + r * np.exp(1j * (theta0 + 2 * np.pi * s)),
              lambda s: 2j * np.pi * r * np.exp(1j * (theta0 + 2 * np.pi * s)))
    return [seg(base, entry), circle, seg(entry, base)]


def _propagate(system, pieces, y0, density=None):
    n = system.order
    y = np.asarray(y0, dtype=complex).reshape(n * n)
    steps = 0
    for t_of, dt_of in pieces:

        def rhs(s, yv, t_of=t_of, dt_of=dt_of):
            a = system.matrix(t_of(s)) * dt_of(s)
            return (a @ yv.reshape(n, n)).reshape(n * n)

        kw = {}
        if density:
            kw["max_step"] = float(density)
        sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853", rtol=RTOL, atol=ATOL, **kw)
        if sol.status != 0:
            raise StepUnderflowError(f"integration failed: {sol.message}")
        steps += sol.nfev // _DOP853_STAGES
        if steps > MAX_STEPS:
            raise StepUnderflowError("step cap exceeded")
        y = sol.y[:, -1]
    return y.reshape(n, n), steps


@dataclass(frozen=True)
class TransferMatrix:
    order: int
    matrix: np.ndarray
    error_estimate: float
    steps: int = 0

    @property
    def det(self):
        return complex(np.linalg.det(self.matrix))

    @property
    def det_defect(self):
        return abs(self.det - 1.0)


def loop_monodromy(op, index, spec=None):
    """Transfer matrix of the loop around singularity ``index``.

    The error estimate is |det M - 1|, which vanishes exactly for the
    traceless companion system.
    """
    system = companion_system(op)
    if spec is None:
        base = choose_base_point(system)
        spec = ContourSpec(base, index, default_radius(system, index, base))
    validate_contour(system, spec)
    zk = system.singularities[spec.index]
    m, steps = _propagate(system, _pieces(spec, zk), np.eye(system.order), spec.density)
    det = np.linalg.det(m)
    return TransferMatrix(system.order, m, float(abs(det - 1.0)), steps)


def big_loop_monodromy(op, base):
    """Counterclockwise circle about the centre of the singularities
    through ``base``; it encloses every finite singularity."""
    system = companion_system(op)
    c = system.center
    rad = abs(complex(base) - c)
    if np.any(np.abs(np.array(system.singularities) - c) > rad - 0.5 * system.spread):
        raise ContourTooCloseError("base point too close to the singularities for the big loop")
    theta0 = np.angle(complex(base) - c)
    piece = (lambda s: c + rad * np.exp(1j * (theta0 + 2 * np.pi * s)),
             lambda s: 2j * np.pi * rad * np.exp(1j * (theta0 + 2 * np.pi * s)))
    m, steps = _propagate(system, [piece], np.eye(system.order))
    return TransferMatrix(system.order, m, float(abs(np.linalg.det(m) - 1.0)), steps)


def choose_base_point(system, n_candidates=24):
    """Base point at distance 2.5 * spread from the centre, the first
    direction (scanning from straight up) for which every default loop
    contour is valid."""
    c, spread = system.center, system.spread
    big = 2.5 * spread
    k = len(system.singularities)
    for j in range(n_candidates):
        # alternate around the upward direction with a small generic tilt
        theta = np.pi / 2 + 0.05 + (-1) ** j * np.pi * ((j + 1) // 2) / n_candidates
        base = c + big * np.exp(1j * theta)
        try:
            for idx in range(k):
                validate_contour(system, ContourSpec(base, idx, default_radius(system, idx, base)))
        except ContourTooCloseError:
            continue
        return complex(base)
    raise ContourTooCloseError("no admissible base point found")


def loop_order(system, base):
    """Order of the finite loops whose product is the big loop.

    Loops are sorted by the angle of z_k - base measured clockwise from
    the direction towards the centre, starting at the ray just past it.
    """
    s = np.array(system.singularities)
    ref = system.center - base
    ang = np.angle((s - base) / ref)
    return [int(i) for i in np.argsort(ang)]


def projective_trivial(m, tol=TRIVIALITY_TOL):
    """True iff M is within ``tol`` (max-entry norm) of w * I for some n-th
    root of unity w."""
    mat = m.matrix if isinstance(m, TransferMatrix) else np.asarray(m, dtype=complex)
    n = mat.shape[0]
    return scalar_distance(mat) < tol if n else True


def scalar_distance(mat):
    mat = np.asarray(mat, dtype=complex)
    n = mat.shape[0]
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    eye = np.eye(n)
    return float(min(np.max(np.abs(mat - w * eye)) for w in roots))


@dataclass(frozen=True)
class ResonantCheck:
    m: int
    obstruction: complex
    loop: TransferMatrix
    distance: float
    trivial: bool


def resonant_monodromy(m, q_tail, radius=0.5, tol=TRIVIALITY_TOL):
    """Local monodromy at t = 0 of d^2 - q for the resonant potential
    q = m(m+2)/(4t^2) + sum_k q_{-k} t^{k-2}.

    The exponents differ by m + 1, so the loop matrix is (-1)^m I exactly
    when no logarithm appears, i.e. when P_m(q_{-1}, ..., q_{-m-1}) = 0.
    The polynomial tail has no other finite singularity.
    """
    q, coeffs = oper_mod.resonant_potential(m, q_tail)
    if coeffs.size < m + 2:
        raise InvalidInputError(f"q_tail must contain at least {m + 1} coefficients")
    system = companion_system(q, singularities=(0j,))
    spec = ContourSpec(2j * radius, 0, radius)
    loop = loop_monodromy(system, 0, spec)
    pm = oper_mod.pm_polynomial(m)
    dist = scalar_distance(loop.matrix)
    return ResonantCheck(
        m=int(m),
        obstruction=complex(pm(list(coeffs[1: m + 2]))),
        loop=loop,
        distance=dist,
        trivial=dist < tol,
    )


@dataclass(frozen=True)
class MonodromyReport:
    singularities: tuple
    base: complex
    loops: tuple  # TransferMatrix per finite singularity
    infinity: TransferMatrix
    trivial: tuple  # verdict per finite singularity
    trivial_at_infinity: bool
    distances: tuple  # distance to the nearest scalar matrix
    product_defect: float
    order: tuple
    tolerance: float

    @property
    def all_trivial(self):
        return all(self.trivial) and self.trivial_at_infinity

    @property
    def worst_distance(self):
        return max(self.distances + (scalar_distance(self.infinity.matrix),))

    @property
    def worst_det_defect(self):
        return max(t.det_defect for t in self.loops + (self.infinity,))


def monodromy_report(op, tol=TRIVIALITY_TOL, base=None, radius_scale=1.0):
    """Loop matrices at every finite singularity, the loop at infinity
    (inverse of the ordered product) and the defect of the product
    relation measured against an independently integrated big loop."""
    system = companion_system(op)
    base = choose_base_point(system) if base is None else complex(base)
    loops = []
    for k in range(len(system.singularities)):
        r = radius_scale * default_radius(system, k, base)
        loops.append(loop_monodromy(system, k, ContourSpec(base, k, r)))
    order = loop_order(system, base)
    prod = np.eye(system.order, dtype=complex)
    for k in order:
        prod = loops[k].matrix @ prod
    big = big_loop_monodromy(system, base)
    defect = float(np.max(np.abs(big.matrix - prod)) / max(1.0, np.max(np.abs(big.matrix))))
    inf_m = np.linalg.inv(prod)
    infinity = TransferMatrix(system.order, inf_m, float(abs(np.linalg.det(inf_m) - 1.0)))
    dists = tuple(scalar_distance(t.matrix) for t in loops)
    return MonodromyReport(
        singularities=system.singularities,
        base=base,
        loops=tuple(loops),
        infinity=infinity,
        trivial=tuple(d < tol for d in dists),
        trivial_at_infinity=projective_trivial(inf_m, tol),
        distances=dists,
        product_defect=defect,
        order=tuple(order),
        tolerance=tol,
    )


def bethe_oper(problem, config):
    """ProjectiveOper d^2 - q with q from the Bethe roots."""
    pkg = bethe.eigenvalues_from_roots(problem, config)
    return oper_mod.ProjectiveOper(points=problem.z, c=problem.double_pole_coefficients(),
                                   mu=np.asarray(pkg.mu))


# explicit solutions -------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitSolutionReport:
    ode_residual: float
    wronskian_defect: float
    monodromy_agreement: float
    loop_predictions: tuple  # [[s, s*Delta], [0, s]] per site
    samples: np.ndarray


class ExplicitSolutions:
    """phi(t) = prod (t - z_i)^(-lam_i/2) prod (t - w_j) and the second
    solution psi(t) = phi(t) int_b^t phi^-2, both on principal branches
    (valid in a neighbourhood of the base point b)."""

    def __init__(self, problem, config, base):
        self.z = problem.z
        self.lam = np.array(problem.weights, dtype=complex).reshape(-1)
        self.w = config.w
        self.base = complex(base)
        self.q = bethe.eigenvalues_from_roots(problem, config).q()

    def log_derivative(self, t):
        t = np.asarray(t, dtype=complex)
        out = np.sum(-0.5 * self.lam / (t[..., None] - self.z), axis=-1)
        if self.w.size:
            out = out + np.sum(1.0 / (t[..., None] - self.w), axis=-1)
        return out

    def log_second(self, t):
        t = np.asarray(t, dtype=complex)
        out = np.sum(0.5 * self.lam / (t[..., None] - self.z) ** 2, axis=-1)
        if self.w.size:
            out = out - np.sum(1.0 / (t[..., None] - self.w) ** 2, axis=-1)
        return out

    def phi(self, t):
        t = np.asarray(t, dtype=complex)
        val = np.prod((t[..., None] - self.z) ** (-0.5 * self.lam), axis=-1)
        if self.w.size:
            val = val * np.prod(t[..., None] - self.w, axis=-1)
        return val

    def inverse_square(self, t):
        """phi^-2, single valued for integral weights."""
        t = np.asarray(t, dtype=complex)
        val = np.prod((t[..., None] - self.z) ** self.lam, axis=-1)
        if self.w.size:
            val = val / np.prod(t[..., None] - self.w, axis=-1) ** 2
        return val

    def integral(self, t, nodes=40):
        """int_b^t phi^-2 along the straight segment (Gauss-Legendre)."""
        x, wts = np.polynomial.legendre.leggauss(nodes)
        t = complex(t)
        pts = self.base + (x + 1) / 2 * (t - self.base)
        return complex(np.sum(wts * self.inverse_square(pts)) * (t - self.base) / 2)

    def psi(self, t):
        return complex(self.phi(t) * self.integral(t))

    def ode_residual(self, t):
        """|(d^2 - q) phi| / (|phi''| + |q phi|) at t."""
        lp = self.log_derivative(t)
        lpp = self.log_second(t)
        ratio = lpp + lp**2
        qv = self.q(t)
        return float(np.abs(ratio - qv) / (np.abs(ratio) + np.abs(qv) + 1e-300))


def _loop_period(sols, zk, radius):
    """Integral of phi^-2 around the circle |t - z_k| = radius.

    phi^-2 is regular at z_k, so the integral is 2 pi i times the residues
    at the roots inside; at w_j the residue is g(w_j) times the j-th Bethe
    residual, with phi^-2 = g(t)/(t - w_j)^2.
    """
    total = 0j
    for j, wj in enumerate(sols.w):
        if abs(wj - zk) >= radius:
            continue
        others = np.delete(sols.w, j)
        g = np.prod((wj - sols.z) ** sols.lam) / np.prod((wj - others) ** 2)
        bethe_j = np.sum(sols.lam / (wj - sols.z)) - np.sum(2.0 / (wj - others))
        total += g * bethe_j
    return complex(2j * np.pi * total)


def explicit_solutions(problem, config, n_samples=20, seed=0, base=None):
    """Cross-check the closed-form solutions of d^2 - q for a Bethe
    configuration: ODE residual at sample points, Wronskian of the pair,
    and agreement of their monodromy with integrated loop matrices."""
    if problem.algebra != SL2:
        raise UnsupportedAlgebraError("explicit solutions are implemented for sl2")
    op = bethe_oper(problem, config)
    system = companion_system(op)
    base = choose_base_point(system) if base is None else complex(base)
    sols = ExplicitSolutions(problem, config, base)
    rng = np.random.default_rng(seed)
    spread = system.spread
    poles = np.concatenate([problem.z, config.w])
    samples = []
    while len(samples) < n_samples:
        t = problem.centroid + 1.5 * spread * (rng.normal() + 1j * rng.normal())
        if np.min(np.abs(t - poles)) > 0.1 * spread:
            samples.append(t)
    samples = np.array(samples)
    ode = max(sols.ode_residual(t) for t in samples)
    # Wronskian near the base point, where the principal branches are valid
    wr = 0.0
    for k in range(n_samples):
        t = base + 0.2 * spread * np.exp(2j * np.pi * k / n_samples)
        ph, lp = sols.phi(t), sols.log_derivative(t)
        integ = sols.integral(t)
        ps = ph * integ
        dps = ph * lp * integ + 1.0 / ph
        wr = max(wr, abs(ph * dps - ph * lp * ps - 1.0))
    # monodromy of (phi, psi) in the basis of their Cauchy data at b
    ph_b = complex(sols.phi(base))
    basis = np.array([[ph_b, 0.0], [ph_b * complex(sols.log_derivative(base)), 1.0 / ph_b]])
    agreement = 0.0
    preds = []
    for k, zk in enumerate(problem.z):
        spec = ContourSpec(base, k, default_radius(system, k, base))
        m = loop_monodromy(system, k, spec).matrix
        s = np.exp(-1j * np.pi * sols.lam[k])
        delta = _loop_period(sols, zk, spec.radius)
        pred = np.array([[s, s * delta], [0.0, s]])
        preds.append(pred)
        conj = np.linalg.solve(basis, m @ basis)
        agreement = max(agreement, float(np.max(np.abs(conj - pred))))
    return ExplicitSolutionReport(
        ode_residual=ode,
        wronskian_defect=float(wr),
        monodromy_agreement=agreement,
        loop_predictions=tuple(preds),
        samples=samples,
    ), sols


def sl3_exponent_check(problem):
    """Max deviation between the indicial roots of the sl3 oper at each
    site and the closed-form local exponents."""
    dev = 0.0
    for w in problem.weights:
        a = oper_mod.sl3_local_exponents(w)
        b = oper_mod.sl3_expected_exponents(w)
        dev = max(dev, float(np.max(np.abs(a - b))))
    return dev
