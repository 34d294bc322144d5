"""Bethe ansatz for the Gaudin model: equations, multi-start Newton solver,
Bethe vectors, eigenvalues read off the Miura transform, and a
completeness audit against exact diagonalization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import gaudin, repcore
from .errors import (
    CollisionError,
    InvalidInputError,
    UnsupportedAlgebraError,
    ZeroVectorError,
)
from .rational import RationalFunction
from .repcore import SL2, SL3

SEPARATION_TOL = 1e-10
CONVERGED_TOL = 1e-12
DEDUP_TOL = 1e-8
EIGEN_FLAG_TOL = 1e-10
VERIFY_TOL = 1e-9
MATCH_TOL = 1e-7
ESCAPE_RADIUS = 1e3
COLLAPSE_TOL = 1e-6


@dataclass(frozen=True)
class BetheConfiguration:
    roots: tuple
    colors: tuple = None
    residual: float = float("nan")

    def __post_init__(self):
        roots = tuple(complex(w) for w in self.roots)
        colors = (1,) * len(roots) if self.colors is None else tuple(int(c) for c in self.colors)
        if len(colors) != len(roots):
            raise InvalidInputError("one color per root is required")
        order = sorted(range(len(roots)), key=lambda j: (roots[j].real, roots[j].imag, colors[j]))
        object.__setattr__(self, "roots", tuple(roots[j] for j in order))
        object.__setattr__(self, "colors", tuple(colors[j] for j in order))

    @property
    def m(self):
        return len(self.roots)

    @property
    def w(self):
        return np.array(self.roots, dtype=complex)

    def color_counts(self, rank):
        return tuple(sum(1 for c in self.colors if c == k) for k in range(1, rank + 1))

    def perturbed(self, index, delta):
        roots = list(self.roots)
        roots[index] += delta
        return BetheConfiguration(tuple(roots), self.colors)


def _check_separation(problem, w):
    scale = problem.scale
    z = problem.z
    if w.size == 0:
        return
    dz = np.abs(w[:, None] - z[None, :])
    if dz.min() <= SEPARATION_TOL * scale:
        raise CollisionError("a Bethe root coincides with a marked point")
    if w.size > 1:
        dw = np.abs(w[:, None] - w[None, :]) + np.diag(np.full(w.size, np.inf))
        if dw.min() <= SEPARATION_TOL * scale:
            raise CollisionError("two Bethe roots coincide")


def _color_data(problem, colors):
    cartan = repcore.CARTAN[problem.algebra]
    if any(c < 1 or c > cartan.shape[0] for c in colors):
        raise InvalidInputError(f"colors must lie in 1..{cartan.shape[0]}")
    idx = np.array(colors, dtype=int) - 1
    charges = problem.cartan_pairings()[:, idx].T  # (m, N): (lam_i, alpha_{c_j})
    coupling = cartan[np.ix_(idx, idx)].astype(float)  # (alpha_{c_l}, alpha_{c_j})
    return charges, coupling


def _equations(z, charges, coupling, w):
    """Bethe residuals F_j and analytic Jacobian dF_j/dw_l."""
    m = w.size
    dz = w[:, None] - z[None, :]
    f = np.sum(charges / dz, axis=1)
    jac = np.diag(-np.sum(charges / dz**2, axis=1))
    if m > 1:
        dw = w[:, None] - w[None, :]
        np.fill_diagonal(dw, 1.0)
        inter = coupling / dw
        np.fill_diagonal(inter, 0.0)
        f = f - inter.sum(axis=1)
        d2 = coupling / dw**2
        np.fill_diagonal(d2, 0.0)
        jac = jac + np.diag(d2.sum(axis=1)) - d2
    return f, jac


def residuals(problem, config):
    """Left-hand sides of the Bethe equations, one per root.

    sl2: sum_i lam_i/(w_j - z_i) - sum_{s != j} 2/(w_j - w_s);
    sl3: the same with (lam_i, alpha_{c_j}) and (alpha_{c_l}, alpha_{c_j}).
    """
    w = config.w
    _check_separation(problem, w)
    if w.size == 0:
        return np.zeros(0, dtype=complex)
    charges, coupling = _color_data(problem, config.colors)
    f, _ = _equations(problem.z, charges, coupling, w)
    return f


def residual_norm(problem, config):
    """Scale-free residual max_j |F_j| * scale."""
    r = residuals(problem, config)
    return float(np.max(np.abs(r)) * problem.scale) if r.size else 0.0


@dataclass
class SolveResult:
    configurations: list
    starts: int = 0
    converged: int = 0
    failures: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.configurations)

    def __len__(self):
        return len(self.configurations)

    def __getitem__(self, i):
        return self.configurations[i]


def _cleared(z, charges, coupling, w, scale):
    """Equations multiplied through by prod_i (w_j - z_i)/scale^N.

    Clearing the site denominators removes the spurious decay of the raw
    equations at infinity and near the points, which widens the Newton
    basins considerably.  Returns (F, G, J_G).
    """
    f, jac = _equations(z, charges, coupling, w)
    d = (w[:, None] - z[None, :]) / scale
    p = np.prod(d, axis=1)
    dp = p * np.sum(1.0 / (w[:, None] - z[None, :]), axis=1)
    g = f * p
    jg = p[:, None] * jac + np.diag(dp * f)
    return f, g, jg


def _newton(z, charges, coupling, w, scale, max_iter, max_halvings):
    """Damped Newton from a single start.  Returns (w, residual, status)."""
    guard = SEPARATION_TOL * scale
    center = z.mean()
    f, g, jac = _cleared(z, charges, coupling, w, scale)
    norm = float(np.max(np.abs(f))) * scale
    cur = float(np.max(np.abs(g)))
    for _ in range(max_iter):
        if norm < CONVERGED_TOL * 1e-2:
            break
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -g, rcond=None)[0]
        if not np.all(np.isfinite(step)) or not np.any(step):
            break
        # trust radius grows with the distance from the points
        reach = scale + float(np.max(np.abs(w - center)))
        alpha = min(1.0, reach / float(np.max(np.abs(step))))
        for _ in range(max_halvings + 1):
            trial = w + alpha * step
            if _too_close(z, trial, guard):
                alpha *= 0.5
                continue
            ft, gt, jt = _cleared(z, charges, coupling, trial, scale)
            mt = float(np.max(np.abs(gt)))
            if np.isfinite(mt) and mt < cur:
                break
            alpha *= 0.5
        else:
            break
        w, f, g, jac, cur = trial, ft, gt, jt, mt
        norm = float(np.max(np.abs(f))) * scale
        if np.max(np.abs(w - center)) > ESCAPE_RADIUS * scale:
            return w, norm, "diverged"
    else:
        return w, norm, "converged" if norm < CONVERGED_TOL else "max_iter"
    return w, norm, "converged" if norm < CONVERGED_TOL else "stalled"


def _too_close(z, w, guard):
    if np.min(np.abs(w[:, None] - z[None, :])) <= guard:
        return True
    if w.size > 1:
        dw = np.abs(w[:, None] - w[None, :]) + np.diag(np.full(w.size, np.inf))
        return dw.min() <= guard
    return False


def _starts(problem, m, n_random, rng):
    z = problem.z
    c = z.mean()
    radius = 2.0 * max(float(np.max(np.abs(z - c))), problem.scale * 0.5)
    out = []
    for _ in range(n_random):
        r = radius * np.sqrt(rng.random(m))
        phi = 2 * np.pi * rng.random(m)
        out.append(c + r * np.exp(1j * phi))
    mids = [(z[i] + z[j]) / 2 for i in range(len(z)) for j in range(i + 1, len(z))]
    for k, p in enumerate(mids):
        start = np.empty(m, dtype=complex)
        start[0] = p
        if m > 1:
            others = [mids[(k + s) % len(mids)] for s in range(1, m)]
            jitter = 0.05 * problem.scale * (rng.normal(size=m - 1) + 1j * rng.normal(size=m - 1))
            start[1:] = np.array(others) + jitter
        out.append(start)
    return out


def _same_config(a, b, tol):
    if sorted(a.colors) != sorted(b.colors):
        return False
    wa, wb = a.w, b.w
    ca, cb = np.array(a.colors), np.array(b.colors)
    worst = 0.0
    for col in set(a.colors):
        x, y = wa[ca == col], wb[cb == col]
        cost = np.abs(x[:, None] - y[None, :])
        r, c = linear_sum_assignment(cost)
        worst = max(worst, float(cost[r, c].max()))
    return worst <= tol


def expand_colors(algebra, m):
    """Color sequence for m roots: an integer (sl2) or per-color counts."""
    if np.ndim(m) == 0:
        if algebra != SL2:
            raise InvalidInputError("sl3 root counts must be given per color, e.g. (m1, m2)")
        counts = (int(m),)
    else:
        counts = tuple(int(x) for x in m)
    if len(counts) != repcore.rank(algebra) or any(c < 0 for c in counts):
        raise InvalidInputError(f"invalid root counts {m!r} for {algebra}")
    return tuple(k + 1 for k, c in enumerate(counts) for _ in range(c))


def solve(problem, m, starts=None, seed=0, max_iter=200, max_halvings=40):
    """Find Bethe root configurations with ``m`` roots by multi-start
    damped Newton.  ``m`` is an integer for sl2 and a pair of per-color
    counts for sl3.  Converged configurations (scaled residual below
    1e-12) are deduplicated modulo permutations of equal-color roots.
    """
    colors = expand_colors(problem.algebra, m)
    m_tot = len(colors)
    if m_tot == 0:
        cfg = BetheConfiguration((), (), 0.0)
        return SolveResult([cfg], starts=0, converged=1)
    charges, coupling = _color_data(problem, colors)
    rng = np.random.default_rng(seed)
    n_random = 64 * m_tot if starts is None else int(starts)
    scale = problem.scale
    found = []
    failures = {}
    start_list = _starts(problem, m_tot, n_random, rng)
    converged = 0
    for w0 in start_list:
        if _too_close(problem.z, w0, SEPARATION_TOL * scale):
            failures["collision"] = failures.get("collision", 0) + 1
            continue
        w, norm, status = _newton(problem.z, charges, coupling, w0, scale, max_iter, max_halvings)
        if status != "converged":
            failures[status] = failures.get(status, 0) + 1
            continue
        if _too_close(problem.z, w, COLLAPSE_TOL * scale):
            # roots pinching onto a point or onto each other solve the
            # equations only asymptotically
            failures["collapsed"] = failures.get("collapsed", 0) + 1
            continue
        converged += 1
        cfg = BetheConfiguration(tuple(w), colors, norm)
        if any(_same_config(cfg, other, DEDUP_TOL * scale) for other in found):
            continue
        found.append(cfg)
    found.sort(key=lambda c: tuple(x for w in c.roots for x in (w.real, w.imag)))
    return SolveResult(found, starts=len(start_list), converged=converged, failures=failures)


# Bethe vectors and eigenvalues --------------------------------------------


def _require_sl2(problem):
    if problem.algebra != SL2:
        raise UnsupportedAlgebraError("only sl2 supports explicit Bethe vectors here")


def lowering_operator(space, points, w):
    """f(w) = sum_i f^{(i)} / (w - z_i) on a tensor space."""
    op = None
    for i, zi in enumerate(points):
        term = space.site_operator("f", i) * (1.0 / (w - zi))
        op = term if op is None else op + term
    return op


def bethe_vector(problem, config, space=None):
    """f(w_1) ... f(w_m)|0> in the tensor product of the site irreps."""
    _require_sl2(problem)
    _check_separation(problem, config.w)
    space = problem.space() if space is None else space
    v = space.vacuum()
    for w in config.roots:
        v = lowering_operator(space, problem.points, w) @ v
    return v


@dataclass(frozen=True)
class EigenvaluePackage:
    mu: np.ndarray
    lam_inf: complex
    c: np.ndarray
    points: np.ndarray
    bethe_residual: float
    double_pole_defect: float
    infinity_defect: float

    @property
    def is_eigen(self):
        return self.bethe_residual < EIGEN_FLAG_TOL

    def q(self):
        """q(t) as a rational function."""
        out = RationalFunction()
        for zi, ci, mi in zip(self.points, self.c, self.mu):
            out = out + RationalFunction({zi: [mi, ci]})
        return out


def connection(problem, config):
    """chi(t) = sum_i lam_i/(t - z_i) - sum_j 2/(t - w_j)."""
    lam = problem.cartan_pairings()[:, 0]
    chi = RationalFunction.simple_poles(problem.points, lam)
    return chi + RationalFunction.simple_poles(config.roots, [-2.0] * config.m)


def miura_potential(chi):
    """q = chi^2/4 - chi'/2."""
    return chi * chi * 0.25 - chi.derivative() * 0.5


def eigenvalues_from_roots(problem, config):
    """Gaudin eigenvalues mu_i as residues at z_i of the Miura transform of
    the connection chi(t) built from the roots."""
    _require_sl2(problem)
    w = config.w
    _check_separation(problem, w)
    q = miura_potential(connection(problem, config))
    z = problem.z
    mu = np.array([q.residue(zi) for zi in z])
    c_expected = problem.double_pole_coefficients()
    c = np.array([q.coefficient(zi, 2) for zi in z])
    lam = problem.cartan_pairings()[:, 0]
    lam_inf = complex(np.sum(lam) - 2 * config.m)
    inf_lhs = lam_inf * (lam_inf + 2) / 4
    inf_rhs = complex(np.sum(c + z * mu))
    bres = residual_norm(problem, config) if config.m else 0.0
    return EigenvaluePackage(
        mu=mu,
        lam_inf=lam_inf.real if lam_inf.imag == 0 else lam_inf,
        c=c,
        points=z,
        bethe_residual=bres,
        double_pole_defect=float(np.max(np.abs(c - c_expected))),
        infinity_defect=abs(inf_lhs - inf_rhs),
    )


@dataclass(frozen=True)
class VerifyReport:
    residual: float
    passed: bool
    mu: np.ndarray
    norm: float


def verify_eigen(problem, config, hams=None):
    """max_i ||H_i Psi - mu_i Psi|| / ||Psi|| for the Bethe vector Psi."""
    _require_sl2(problem)
    space = problem.space()
    psi = bethe_vector(problem, config, space)
    lam = np.array([w[0] for w in problem.weights], dtype=float)
    bound = 1.0
    for w in config.roots:
        bound *= float(np.sum(np.maximum(lam, 1.0) / np.abs(w - problem.z)))
    norm = float(np.linalg.norm(psi))
    if norm <= 1e-12 * bound:
        raise ZeroVectorError("the Bethe vector vanishes for this configuration")
    pkg = eigenvalues_from_roots(problem, config)
    hs = gaudin.hamiltonians(problem) if hams is None else hams
    r = max(float(np.linalg.norm(h @ psi - mu * psi)) for h, mu in zip(hs, pkg.mu)) / norm
    return VerifyReport(residual=r, passed=r < VERIFY_TOL, mu=pkg.mu, norm=norm)


# completeness ---------------------------------------------------------------


@dataclass(frozen=True)
class SectorAudit:
    m: int
    lam_inf: int
    dimension: int
    solutions: int
    verified: int
    matched: int
    worst_residual: float
    worst_mismatch: float
    unmatched: tuple
    configurations: tuple
    independence: float = 1.0  # smallest singular value of the normalized Bethe vectors

    @property
    def complete(self):
        return self.matched == self.dimension and not self.unmatched


@dataclass(frozen=True)
class CompletenessReport:
    sectors: tuple
    total_dimension: int

    @property
    def complete(self):
        return all(s.complete for s in self.sectors)

    @property
    def verified_count(self):
        return sum(s.matched * (s.lam_inf + 1) for s in self.sectors)


def completeness_audit(problem, seed=0, dim_cap=4096, starts=None):
    """Solve the Bethe equations in every sector and match the resulting
    eigenvalue tuples against the exact-diagonalization oracle."""
    _require_sl2(problem)
    space = problem.space()
    if space.dim > dim_cap:
        raise InvalidInputError(f"tensor space dimension {space.dim} exceeds cap {dim_cap}")
    hams = gaudin.hamiltonians(problem)
    scale = gaudin.spectral_scale(hams)
    top = int(sum(w[0] for w in problem.weights))
    sectors = []
    for m in range(top // 2 + 1):
        lam_inf = top - 2 * m
        basis = repcore.singular_vectors(space, lam_inf)
        dim = basis.shape[1]
        oracle = np.zeros((0, problem.n_sites), dtype=complex)
        if dim:
            rep = gaudin.diagonalize_sector(problem, lam_inf, seed=seed + 7919 * m, hams=hams)
            oracle = rep.eigenvalues
        sol = solve(problem, m, starts=starts, seed=seed + m)
        verified = []
        worst = 0.0
        for cfg in sol:
            try:
                rep_v = verify_eigen(problem, cfg, hams)
            except ZeroVectorError:
                continue
            worst = max(worst, rep_v.residual)
            if rep_v.passed:
                verified.append((cfg, rep_v.mu))
        taken = set()
        worst_mis = 0.0
        for cfg, mu in verified:
            if oracle.shape[0] == 0:
                continue
            d = np.max(np.abs(oracle - mu[None, :]), axis=1) / max(scale, 1.0)
            for k in np.argsort(d, kind="stable"):
                if k not in taken and d[k] < MATCH_TOL:
                    taken.add(int(k))
                    worst_mis = max(worst_mis, float(d[k]))
                    break
        unmatched = tuple(
            tuple(complex(x) for x in oracle[k]) for k in range(oracle.shape[0]) if k not in taken
        )
        sectors.append(
            SectorAudit(
                m=m,
                lam_inf=lam_inf,
                dimension=dim,
                solutions=len(sol),
                verified=len(verified),
                matched=len(taken),
                worst_residual=worst,
                worst_mismatch=worst_mis,
                unmatched=unmatched,
                configurations=tuple(cfg for cfg, _ in verified),
                independence=linear_independence(problem, [cfg for cfg, _ in verified]),
            )
        )
    return CompletenessReport(tuple(sectors), space.dim)


def linear_independence(problem, configs):
    """Smallest singular value of the matrix of normalized Bethe vectors."""
    if not configs:
        return 1.0
    vs = [bethe_vector(problem, c) for c in configs]
    mat = np.column_stack([v / np.linalg.norm(v) for v in vs])
    return float(np.linalg.svd(mat, compute_uv=False).min())


def sector_of(problem, config):
    """Highest weight lam_inf of the sector a configuration lives in."""
    top = np.sum(np.array(problem.weights, dtype=complex), axis=0)
    cartan = repcore.CARTAN[problem.algebra]
    out = top.copy()
    for c in config.colors:
        out = out - cartan[c - 1]
    return tuple(int(x.real) if x.imag == 0 and float(x.real).is_integer() else x for x in out)


__all__ = [
    "BetheConfiguration",
    "CompletenessReport",
    "EigenvaluePackage",
    "SolveResult",
    "bethe_vector",
    "completeness_audit",
    "connection",
    "eigenvalues_from_roots",
    "miura_potential",
    "residuals",
    "residual_norm",
    "solve",
    "verify_eigen",
]

