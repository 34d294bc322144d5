"""Proper rational functions stored as pole/principal-part data.

A ``RationalFunction`` is a finite sum

    sum_p sum_k a_{p,k} / (t - p)^k

(no polynomial part, so it vanishes at infinity).  This class is closed
under addition, multiplication and differentiation, which covers every
object built from simple and double poles: connections chi(t), projective
connections q(t) and the coefficients of third-order opers.
"""

from __future__ import annotations

from math import comb

import numpy as np


def _binom_neg(l, n):
    """Binomial coefficient C(-l, n) for integers l >= 1, n >= 0."""
    return (-1) ** n * comb(l + n - 1, n)


class RationalFunction:
    __slots__ = ("poles",)

    def __init__(self, poles=None):
        self.poles = {}
        for p, coeffs in (poles or {}).items():
            c = np.asarray(coeffs, dtype=complex)
            if c.size:
                self._accumulate(complex(p), c)

    def _accumulate(self, p, coeffs):
        cur = self.poles.get(p)
        if cur is None:
            self.poles[p] = np.array(coeffs, dtype=complex)
            return
        n = max(cur.size, coeffs.size)
        out = np.zeros(n, dtype=complex)
        out[: cur.size] += cur
        out[: coeffs.size] += coeffs
        self.poles[p] = out

    @classmethod
    def simple_poles(cls, points, residues):
        out = cls()
        for p, r in zip(points, residues):
            out._accumulate(complex(p), np.array([r], dtype=complex))
        return out

    @classmethod
    def zero(cls):
        return cls()

    def copy(self):
        return RationalFunction({p: c.copy() for p, c in self.poles.items()})

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, RationalFunction):
            if other == 0:
                return self.copy()
            return NotImplemented
        out = self.copy()
        for p, c in other.poles.items():
            out._accumulate(p, c)
        return out

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction({p: -c for p, c in self.poles.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalFunction):
            s = complex(other)
            return RationalFunction({p: s * c for p, c in self.poles.items()})
        out = RationalFunction()
        for p, a in self.poles.items():
            for s, b in other.poles.items():
                if p == s:
                    prod = np.zeros(a.size + b.size, dtype=complex)
                    # (t-p)^-(k+1) (t-p)^-(l+1) = (t-p)^-(k+l+2)
                    prod[1:] = np.convolve(a, b)
                    out._accumulate(p, prod)
                    continue
                for k, ak in enumerate(a, start=1):
                    if ak == 0:
                        continue
                    for l, bl in enumerate(b, start=1):
                        if bl == 0:
                            continue
                        ab = ak * bl
                        out._accumulate(p, ab * _partial_fraction(k, l, p - s))
                        out._accumulate(s, ab * _partial_fraction(l, k, s - p))
        return out

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        return self * (1.0 / complex(other))

    def __pow__(self, n):
        if n != int(n) or n < 1:
            raise ValueError("only positive integer powers are supported")
        out = self
        for _ in range(int(n) - 1):
            out = out * self
        return out

    def derivative(self):
        out = RationalFunction()
        for p, c in self.poles.items():
            k = np.arange(1, c.size + 1)
            d = np.zeros(c.size + 1, dtype=complex)
            d[1:] = -k * c
            out._accumulate(p, d)
        return out

    # evaluation and inspection --------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=complex)
        out = np.zeros_like(t)
        for p, c in self.poles.items():
            u = 1.0 / (t - p)
            out = out + np.polyval(np.concatenate([c[::-1], [0.0]]), u)
        return out if out.ndim else complex(out)

    def coefficient(self, p, order, tol=0.0):
        """Coefficient of (t-p)^{-order}; poles are matched within ``tol``."""
        for q, c in self.poles.items():
            if abs(q - complex(p)) <= tol:
                return complex(c[order - 1]) if order <= c.size else 0j
        return 0j

    def residue(self, p, tol=0.0):
        return self.coefficient(p, 1, tol)

    def principal_part(self, p, tol=0.0):
        for q, c in self.poles.items():
            if abs(q - complex(p)) <= tol:
                return c.copy()
        return np.zeros(0, dtype=complex)

    def regular_part_at(self, p, depth):
        """Taylor coefficients (t-p)^0..(t-p)^{depth-1} of the part of the
        function that is regular at p (all other poles)."""
        p = complex(p)
        out = np.zeros(depth, dtype=complex)
        for s, c in self.poles.items():
            if s == p:
                continue
            delta = p - s
            for l, cl in enumerate(c, start=1):
                for n in range(depth):
                    out[n] += cl * _binom_neg(l, n) * delta ** (-l - n)
        return out

    def pole_order(self, p):
        c = self.principal_part(p)
        nz = np.flatnonzero(c)
        return int(nz[-1] + 1) if nz.size else 0

    def max_abs_coefficient(self):
        return max((float(np.max(np.abs(c))) for c in self.poles.values()), default=0.0)

    def is_zero(self, tol=0.0):
        return self.max_abs_coefficient() <= tol

    def points(self):
        return list(self.poles)

    def __repr__(self):
        terms = ", ".join(f"{p}: {np.round(c, 12).tolist()}" for p, c in self.poles.items())
        return f"RationalFunction({{{terms}}})"


def _partial_fraction(k, l, delta):
    """Principal part at p of (t-p)^-k (t-s)^-l with delta = p - s.

    Returns coefficients of (t-p)^-1 .. (t-p)^-k.
    """
    out = np.zeros(k, dtype=complex)
    for r in range(1, k + 1):
        n = k - r
        out[r - 1] = _binom_neg(l, n) * delta ** (-l - n)
    return out
