"""Sparse multivariate polynomials with exact rational coefficients.

Monomials are exponent tuples over a fixed, ordered list of variable
names.  Only what the Riccati recursion needs is provided: ring
operations, scalar division, evaluation, weighted degrees and a canonical
printed form.
"""

from __future__ import annotations

from fractions import Fraction


class Poly:
    __slots__ = ("names", "terms")

    def __init__(self, names, terms=None):
        self.names = tuple(names)
        self.terms = {}
        for mono, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                self.terms[tuple(mono)] = c

    @classmethod
    def constant(cls, names, value):
        return cls(names, {(0,) * len(names): value})

    @classmethod
    def variable(cls, names, index):
        mono = [0] * len(names)
        mono[index] = 1
        return cls(names, {tuple(mono): 1})

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.names != self.names:
                raise ValueError("polynomials over different variables")
            return other
        return Poly.constant(self.names, Fraction(other))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(self.names, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.names, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(self.names, out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        s = Fraction(scalar)
        return Poly(self.names, {m: c / s for m, c in self.terms.items()})

    def __eq__(self, other):
        other = self._coerce(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash((self.names, frozenset(self.terms.items())))

    def is_zero(self):
        return not self.terms

    def coefficient(self, mono):
        return self.terms.get(tuple(mono), Fraction(0))

    def __call__(self, values):
        """Evaluate at a sequence of numbers (any numeric type)."""
        total = 0
        for mono, c in self.terms.items():
            term = c
            for v, e in zip(values, mono):
                if e:
                    term = term * v**e
            total = total + (float(term) if isinstance(term, Fraction) else term)
        return total

    def weighted_degrees(self, weights):
        return {sum(w * e for w, e in zip(weights, m)) for m in self.terms}

    def sorted_terms(self, weights=None):
        """Terms in graded lexicographic order (first variable largest)."""
        weights = weights or (1,) * len(self.names)

        def key(item):
            mono = item[0]
            return (-sum(w * e for w, e in zip(weights, mono)), tuple(-e for e in mono))

        return sorted(self.terms.items(), key=key)

    def format(self, weights=None):
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms(weights):
            factors = []
            for name, e in zip(self.names, mono):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            body = "*".join(factors)
            mag = abs(c)
            if body:
                text = body if mag == 1 else f"{mag}*{body}"
            else:
                text = str(mag)
            parts.append(("-" if c < 0 else "+", text))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out

    def __repr__(self):
        return f"Poly({self.format()})"
