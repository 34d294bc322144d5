"""Finite-dimensional sl2/sl3 representations, truncated Verma modules and
tensor-product spaces.

Conventions
-----------
sl2 irreps use the monomial basis x^0..x^lam (lowest weight first), so the
highest-weight vector sits at index ``lam``.  sl3 weights are pairs
``(n1, n2)`` of fundamental-weight coordinates and generator matrices are
built from the Chevalley generators of the defining representation.
Generator matrices are stored as integer arrays whenever the entries are
integers; the orthonormal basis ``J_a`` (with respect to the trace form
of the defining representation) is complex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError, UnsupportedAlgebraError, UnsupportedWeightError

SL2 = "sl2"
SL3 = "sl3"

CARTAN = {
    SL2: np.array([[2]]),
    SL3: np.array([[2, -1], [-1, 2]]),
}

# inverse of the Cartan matrix = Gram matrix of fundamental weights
# (trace-form normalization, squared long root = 2)
FUNDAMENTAL_GRAM = {
    SL2: np.array([[0.5]]),
    SL3: np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0,
}

SL3_CHEVALLEY = ("e1", "e2", "e3", "f1", "f2", "f3", "h1", "h2")


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


def rank(algebra):
    if algebra not in CARTAN:
        raise UnsupportedAlgebraError(f"unknown algebra {algebra!r}")
    return CARTAN[algebra].shape[0]


def normalize_weight(algebra, weight, allow_complex=False):
    """Return the weight as a tuple of fundamental-weight coordinates.

    sl2 weights may be given as a bare number.  With ``allow_complex`` the
    coordinates may be arbitrary complex numbers (Verma highest weights);
    otherwise they must be nonnegative integers.
    """
    r = rank(algebra)
    if np.ndim(weight) == 0:
        coords = (weight,)
    else:
        coords = tuple(weight)
    if len(coords) != r:
        raise InvalidInputError(f"{algebra} weight needs {r} coordinate(s), got {weight!r}")
    if allow_complex:
        out = []
        for c in coords:
            c = complex(c)
            if c.imag == 0 and float(c.real).is_integer():
                out.append(int(c.real))
            else:
                out.append(c)
        return tuple(out)
    out = []
    for c in coords:
        if isinstance(c, (bool, np.bool_)) or not float(np.real(c)).is_integer() or np.imag(c) != 0:
            raise InvalidInputError(f"weight coordinates must be integers, got {weight!r}")
        c = int(np.real(c))
        if c < 0:
            raise InvalidInputError(f"weight coordinates must be nonnegative, got {weight!r}")
        out.append(c)
    return tuple(out)


def is_dominant_integral(weight):
    return all(isinstance(c, (int, np.integer)) and c >= 0 for c in weight)


def weight_pairing(algebra, lam, mu):
    """Invariant form (lam, mu) for weights in fundamental coordinates."""
    g = FUNDAMENTAL_GRAM[algebra]
    return complex(np.asarray(lam, dtype=complex) @ g @ np.asarray(mu, dtype=complex))


def casimir_value(algebra, weight):
    """(lam, lam + 2 rho): eigenvalue of sum_a J_a J_a on the irrep."""
    lam = np.asarray(weight, dtype=complex)
    two_rho = 2 * np.ones(rank(algebra))
    val = weight_pairing(algebra, lam, lam + two_rho)
    return val.real if val.imag == 0 else val


def irrep_dimension(algebra, weight):
    if algebra == SL2:
        return weight[0] + 1
    n1, n2 = weight
    return (n1 + 1) * (n2 + 1) * (n1 + n2 + 2) // 2


@dataclass(frozen=True)
class IrrepRealization:
    """Matrices of a (possibly truncated) representation.

    ``generators`` maps labels to matrices acting on column vectors;
    ``basis`` is the orthonormal basis J_a of the algebra in this
    representation; ``weights`` lists the weight (eigenvalues of the Cartan
    generators) of each basis vector.  ``highest`` is the index of the
    highest-weight basis vector.  For truncated Verma modules ``overflow``
    names the generators whose action past the cutoff was dropped.
    """

    algebra: str
    weight: tuple
    dim: int
    generators: dict
    basis: tuple
    weights: tuple
    highest: int
    cutoff: int | None = None
    overflow: tuple = ()

    def __getitem__(self, label):
        return self.generators[label]


def _sl2_basis(e, f, h):
    s = np.sqrt(0.5)
    return (
        _frozen(s * h.astype(complex)),
        _frozen(s * (e + f).astype(complex)),
        _frozen(1j * s * (e - f).astype(complex)),
    )


def sl2_irrep(lam):
    """Irreducible sl2-module V_lam on the basis x^0..x^lam.

    f x^k = k x^{k-1},  h x^k = (2k - lam) x^k,  e x^k = (lam - k) x^{k+1}.
    """
    (lam,) = normalize_weight(SL2, lam)
    n = lam + 1
    k = np.arange(n)
    e = np.zeros((n, n), dtype=np.int64)
    f = np.zeros((n, n), dtype=np.int64)
    e[k[:-1] + 1, k[:-1]] = lam - k[:-1]
    f[k[1:] - 1, k[1:]] = k[1:]
    h = np.diag(2 * k - lam).astype(np.int64)
    gens = {"e": _frozen(e), "f": _frozen(f), "h": _frozen(h)}
    return IrrepRealization(
        algebra=SL2,
        weight=(lam,),
        dim=n,
        generators=gens,
        basis=_sl2_basis(e, f, h),
        weights=tuple((int(2 * kk - lam),) for kk in k),
        highest=lam,
    )


def verma_truncated(lam, cutoff):
    """Verma module of highest weight ``-lam - 2`` on polynomials C[X],
    truncated at degree ``cutoff``.

    This is the Fourier image of the polynomial realization: x -> -d/dX and
    d/dx -> X, which gives

        e = -X d^2/dX^2 - (lam+2) d/dX,   h = -2X d/dX - (lam+2),   f = X.

    Hence e X^k = -k(k+lam+1) X^{k-1}, h X^k = -(2k+lam+2) X^k and
    f X^k = X^{k+1}.  The image of X^cutoff under f is dropped, so
    [e, f] = h holds exactly on degrees below the cutoff.
    """
    if int(cutoff) != cutoff or cutoff < 1:
        raise InvalidInputError(f"cutoff must be a positive integer, got {cutoff!r}")
    cutoff = int(cutoff)
    (lam,) = normalize_weight(SL2, lam, allow_complex=True)
    n = cutoff + 1
    k = np.arange(n)
    exact = isinstance(lam, int)
    dtype = np.int64 if exact else complex
    e = np.zeros((n, n), dtype=dtype)
    f = np.zeros((n, n), dtype=dtype)
    e[k[1:] - 1, k[1:]] = -k[1:] * (k[1:] + lam + 1)
    f[k[:-1] + 1, k[:-1]] = 1
    h = np.diag(-(2 * k + lam + 2)).astype(dtype)
    gens = {"e": _frozen(e), "f": _frozen(f), "h": _frozen(h)}
    return IrrepRealization(
        algebra=SL2,
        weight=(lam,),
        dim=n,
        generators=gens,
        basis=_sl2_basis(e, f, h),
        weights=tuple((-(2 * kk + lam + 2),) for kk in k),
        highest=0,
        cutoff=cutoff,
        overflow=("f",),
    )


def _unit(i, j, n=3):
    m = np.zeros((n, n), dtype=np.int64)
    m[i, j] = 1
    return m


def _defining_chevalley():
    return {
        "e1": _unit(0, 1),
        "e2": _unit(1, 2),
        "e3": _unit(0, 2),
        "f1": _unit(1, 0),
        "f2": _unit(2, 1),
        "f3": _unit(2, 0),
        "h1": np.diag([1, -1, 0]).astype(np.int64),
        "h2": np.diag([0, 1, -1]).astype(np.int64),
    }


def _chevalley_coordinates(y):
    """Coordinates of a traceless 3x3 matrix in the basis SL3_CHEVALLEY."""
    return np.array([y[0, 1], y[1, 2], y[0, 2], y[1, 0], y[2, 1], y[2, 0], y[0, 0], -y[2, 2]])


def _sl3_orthonormal(gens):
    """Orthonormal basis (trace form) expressed through Chevalley images."""
    s2 = np.sqrt(0.5)
    s6 = 1.0 / np.sqrt(6.0)
    out = []
    for up, down in (("e1", "f1"), ("e2", "f2"), ("e3", "f3")):
        a, b = gens[up].astype(complex), gens[down].astype(complex)
        out.append(s2 * (a + b))
        out.append(1j * s2 * (a - b))
    h1, h2 = gens["h1"].astype(complex), gens["h2"].astype(complex)
    out.append(s2 * h1)
    out.append(s6 * (h1 + 2 * h2))
    return tuple(_frozen(x) for x in out)


SL3_SUPPORTED = ((1, 0), (0, 1), (1, 1))


def sl3_irrep(weight):
    """Defining (1,0), dual (0,1) or adjoint (1,1) representation of sl3."""
    weight = normalize_weight(SL3, weight)
    if weight not in SL3_SUPPORTED:
        raise UnsupportedWeightError(
            f"sl3 representation {weight} not implemented; supported: {SL3_SUPPORTED}"
        )
    d = _defining_chevalley()
    if weight == (1, 0):
        gens = d
    elif weight == (0, 1):
        gens = {k: -v.T for k, v in d.items()}
    else:
        basis = [d[k] for k in SL3_CHEVALLEY]
        gens = {}
        for k, x in d.items():
            cols = [_chevalley_coordinates(x @ b - b @ x) for b in basis]
            gens[k] = np.array(cols, dtype=np.int64).T
    hw = [tuple(int(v) for v in pair) for pair in zip(np.diag(gens["h1"]), np.diag(gens["h2"]))]
    highest = hw.index(weight)
    return IrrepRealization(
        algebra=SL3,
        weight=weight,
        dim=gens["h1"].shape[0],
        generators={k: _frozen(v) for k, v in gens.items()},
        basis=_sl3_orthonormal(gens),
        weights=tuple(hw),
        highest=highest,
    )


def irrep(algebra, weight):
    if algebra == SL2:
        return sl2_irrep(weight)
    if algebra == SL3:
        return sl3_irrep(weight)
    raise UnsupportedAlgebraError(f"unknown algebra {algebra!r}")


def raising_labels(algebra):
    return ("e",) if algebra == SL2 else ("e1", "e2")


def cartan_labels(algebra):
    return ("h",) if algebra == SL2 else ("h1", "h2")


@dataclass(frozen=True)
class TensorSpace:
    """Tensor product of site representations, row-major over sites."""

    reps: tuple
    dims: tuple = field(init=False)

    def __post_init__(self):
        if not self.reps:
            raise InvalidInputError("tensor space needs at least one site")
        algs = {r.algebra for r in self.reps}
        if len(algs) != 1:
            raise InvalidInputError("all sites must carry the same algebra")
        object.__setattr__(self, "dims", tuple(r.dim for r in self.reps))

    @property
    def algebra(self):
        return self.reps[0].algebra

    @property
    def n_sites(self):
        return len(self.reps)

    @property
    def dim(self):
        return int(np.prod(self.dims))

    def index(self, multi):
        return int(np.ravel_multi_index(tuple(multi), self.dims))

    def multi_index(self, idx):
        return tuple(int(k) for k in np.unravel_index(idx, self.dims))

    def site_operator(self, op, site):
        """Embed a single-site matrix (or generator label) at ``site``."""
        if isinstance(op, str):
            op = self.reps[site].generators[op]
        mats = [sp.identity(d, dtype=np.asarray(op).dtype, format="csr") for d in self.dims]
        mats[site] = sp.csr_array(np.asarray(op))
        return sp.csr_array(reduce(lambda a, b: sp.kron(a, b, format="csr"), mats))

    def total(self, label):
        """Diagonal action sum_i a^{(i)} of a generator."""
        return sp.csr_array(sum(self.site_operator(label, i) for i in range(self.n_sites)))

    def weight_table(self):
        """Array (dim, rank) of the weight of each product basis vector."""
        per_site = [np.array(r.weights) for r in self.reps]
        out = np.zeros((self.dim, len(per_site[0][0])), dtype=per_site[0].dtype)
        for idx, multi in enumerate(itertools.product(*(range(d) for d in self.dims))):
            out[idx] = sum(per_site[i][k] for i, k in enumerate(multi))
        return out

    def vacuum(self):
        """Tensor product of the highest-weight vectors."""
        v = np.zeros(self.dim, dtype=complex)
        v[self.index([r.highest for r in self.reps])] = 1.0
        return v


def tensor_space(algebra, weights):
    return TensorSpace(tuple(irrep(algebra, w) for w in weights))


def verma_tensor_space(weights, cutoff):
    """Tensor product of truncated Verma modules (sl2), one per site."""
    return TensorSpace(tuple(verma_truncated(w, cutoff) for w in weights))


KERNEL_TOL = 1e-10


def singular_vectors(space, lam_inf):
    """Orthonormal basis (columns) of vectors of weight ``lam_inf`` killed
    by every total raising operator.  Empty (dim x 0) when none exist.
    """
    lam_inf = np.atleast_1d(np.asarray(normalize_weight(space.algebra, lam_inf)))
    wt = space.weight_table()
    cols = np.flatnonzero(np.all(wt == lam_inf, axis=1))
    if cols.size == 0:
        return np.zeros((space.dim, 0), dtype=complex)
    blocks = []
    for label in raising_labels(space.algebra):
        e = space.total(label)[:, cols]
        rows = np.unique(e.nonzero()[0])
        blocks.append(e[rows].toarray() if rows.size else np.zeros((0, cols.size)))
    a = np.vstack(blocks).astype(float)
    if a.shape[0] == 0:
        kernel = np.eye(cols.size)
    else:
        _, s, vh = np.linalg.svd(a)
        scale = max(1.0, s[0]) if s.size else 1.0
        r = int(np.sum(s > KERNEL_TOL * scale))
        kernel = vh[r:].conj().T
    out = np.zeros((space.dim, kernel.shape[1]), dtype=complex)
    out[cols] = kernel
    return out


def sector_weights(algebra, weights):
    """All dominant weights lam_inf that can occur in the tensor product,
    in decreasing order of the number of lowering steps needed."""
    weights = [normalize_weight(algebra, w) for w in weights]
    top = np.sum(np.array(weights), axis=0)
    if algebra == SL2:
        return [(int(top[0] - 2 * m),) for m in range(int(top[0]) // 2 + 1)]
    cartan = CARTAN[algebra]
    out = []
    for m1 in range(0, 2 * int(top.sum()) + 1):
        for m2 in range(0, 2 * int(top.sum()) + 1):
            w = top - m1 * cartan[0] - m2 * cartan[1]
            if np.all(w >= 0):
                out.append(tuple(int(x) for x in w))
    return out


def lowering_counts(algebra, weights, lam_inf):
    """Number of simple-root lowerings (per color) from the top weight."""
    weights = [normalize_weight(algebra, w) for w in weights]
    top = np.sum(np.array(weights), axis=0)
    diff = top - np.asarray(normalize_weight(algebra, lam_inf))
    m = np.linalg.solve(CARTAN[algebra].T.astype(float), diff.astype(float))
    mi = np.rint(m).astype(int)
    if not np.allclose(m, mi) or np.any(mi < 0):
        raise InvalidInputError(f"{lam_inf} is not below the top weight {tuple(top)}")
    return tuple(int(x) for x in mi)
