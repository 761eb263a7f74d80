"""Sparse real polynomials in phase-space coordinates.

`Poly` holds a fixed polynomial as ``{exponent tuple: coefficient}``.
`PolyJet` holds a one-parameter family whose coefficients are themselves
polynomials in the parameter (ascending powers).  Everything is exact for
polynomial input; no numerical differentiation is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Dict, Iterable, Tuple

import numpy as np

from .errors import H1_VIOLATION, UNSUPPORTED_ORDER, HopfError

Exp = Tuple[int, ...]


def monomial_basis(dim: int, degree: int) -> list:
    """Exponent tuples of all monomials of exactly `degree` in `dim` variables."""
    out = []
    for combo in combinations_with_replacement(range(dim), degree):
        e = [0] * dim
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return out


class Poly:
    """Real polynomial in `dim` variables."""

    __slots__ = ("dim", "terms", "_arrays")

    def __init__(self, dim: int, terms: Dict[Exp, float] | None = None):
        self.dim = int(dim)
        self.terms: Dict[Exp, float] = {}
        self._arrays = None
        if terms:
            for e, c in terms.items():
                e = tuple(int(k) for k in e)
                if len(e) != self.dim:
                    raise ValueError("exponent length does not match dim")
                if c != 0.0:
                    self.terms[e] = self.terms.get(e, 0.0) + float(c)

    # construction helpers
    @classmethod
    def zero(cls, dim: int) -> "Poly":
        return cls(dim)

    @classmethod
    def variable(cls, dim: int, i: int) -> "Poly":
        e = [0] * dim
        e[i] = 1
        return cls(dim, {tuple(e): 1.0})

    @classmethod
    def linear(cls, coeffs) -> "Poly":
        coeffs = np.asarray(coeffs, dtype=float)
        dim = coeffs.size
        terms = {}
        for i, c in enumerate(coeffs):
            if c != 0.0:
                e = [0] * dim
                e[i] = 1
                terms[tuple(e)] = c
        return cls(dim, terms)

    @classmethod
    def quadratic(cls, M) -> "Poly":
        """The form 1/2 x^T M x (M is symmetrized first)."""
        M = np.asarray(M, dtype=float)
        M = 0.5 * (M + M.T)
        dim = M.shape[0]
        terms = {}
        for i in range(dim):
            for j in range(i, dim):
                c = 0.5 * M[i, i] if i == j else M[i, j]
                if c != 0.0:
                    e = [0] * dim
                    e[i] += 1
                    e[j] += 1
                    terms[tuple(e)] = terms.get(tuple(e), 0.0) + c
        return cls(dim, terms)

    # algebra
    def copy(self) -> "Poly":
        return Poly(self.dim, dict(self.terms))

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Poly(self.dim, {e: c for e, c in out.items() if c != 0.0})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1.0)

    def __neg__(self) -> "Poly":
        return self.scale(-1.0)

    def scale(self, s: float) -> "Poly":
        return Poly(self.dim, {e: s * c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return self.scale(float(other))
        out: Dict[Exp, float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Poly(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        out = Poly(self.dim, {(0,) * self.dim: 1.0})
        for _ in range(k):
            out = out * self
        return out

    def deriv(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            if e[i] > 0:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = c * e[i]
        return Poly(self.dim, out)

    def bracket(self, other: "Poly", P: np.ndarray) -> "Poly":
        """Poisson bracket {self, other} = grad(self)^T P grad(other)."""
        ds = [self.deriv(i) for i in range(self.dim)]
        do = [other.deriv(j) for j in range(self.dim)]
        out = Poly(self.dim)
        for i in range(self.dim):
            if not ds[i].terms:
                continue
            acc = Poly(self.dim)
            for j in range(self.dim):
                if P[i, j] != 0.0 and do[j].terms:
                    acc = acc + do[j].scale(P[i, j])
            if acc.terms:
                out = out + ds[i] * acc
        return out

    def compose_linear(self, S) -> "Poly":
        """Substitute x = S y; result is a polynomial in y (dim = S.shape[1])."""
        S = np.asarray(S, dtype=float)
        ny = S.shape[1]
        forms = [Poly.linear(S[i]) for i in range(self.dim)]
        cache: Dict[Tuple[int, int], Poly] = {}

        def power(i, k):
            key = (i, k)
            if key not in cache:
                cache[key] = forms[i] ** k
            return cache[key]

        out = Poly(ny)
        for e, c in self.terms.items():
            term = Poly(ny, {(0,) * ny: c})
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            out = out + term
        return out

    # inspection
    def degree_part(self, d: int) -> "Poly":
        return Poly(self.dim, {e: c for e, c in self.terms.items() if sum(e) == d})

    def degrees(self) -> set:
        return {sum(e) for e in self.terms}

    def prune(self, tol: float) -> "Poly":
        return Poly(self.dim, {e: c for e, c in self.terms.items() if abs(c) > tol})

    def max_abs_coef(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def coefficient_vector(self, basis: list) -> np.ndarray:
        return np.array([self.terms.get(e, 0.0) for e in basis])

    @classmethod
    def from_vector(cls, dim: int, basis: list, vec) -> "Poly":
        return cls(dim, {e: float(c) for e, c in zip(basis, vec) if c != 0.0})

    def quadratic_matrix(self) -> np.ndarray:
        """Hessian of the degree-2 part (constant matrix)."""
        M = np.zeros((self.dim, self.dim))
        for e, c in self.terms.items():
            if sum(e) != 2:
                continue
            idx = [i for i, k in enumerate(e) for _ in range(k)]
            i, j = idx
            if i == j:
                M[i, i] += 2.0 * c
            else:
                M[i, j] += c
                M[j, i] += c
        return M

    # numerics
    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._arrays is None:
            if self.terms:
                exps = np.array(list(self.terms.keys()), dtype=np.int64)
                coefs = np.array(list(self.terms.values()), dtype=float)
            else:
                exps = np.zeros((0, self.dim), dtype=np.int64)
                coefs = np.zeros(0)
            self._arrays = (exps, coefs)
        return self._arrays

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        exps, coefs = self.arrays()
        if not coefs.size:
            return np.zeros(x.shape[:-1])
        mons = np.prod(x[..., None, :] ** exps, axis=-1)
        return mons @ coefs

    def grad(self, x) -> np.ndarray:
        from .kernels import poly_grad

        return poly_grad(*self.arrays(), np.asarray(x, dtype=float))

    def hess(self, x) -> np.ndarray:
        from .kernels import poly_hess

        return poly_hess(*self.arrays(), np.asarray(x, dtype=float))

    def __repr__(self) -> str:
        return f"Poly(dim={self.dim}, nterms={len(self.terms)})"


@dataclass
class PolyJet:
    """Polynomial family h(x, lam) = sum_k lam^k P_k(x), spatial degree <= 4.

    ``terms`` maps an exponent tuple to the ascending coefficients of a
    polynomial in the parameter.
    """

    dim: int
    terms: Dict[Exp, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for e, c in self.terms.items():
            e = tuple(int(k) for k in e)
            if len(e) != self.dim:
                raise ValueError("exponent length does not match dim")
            c = np.atleast_1d(np.asarray(c, dtype=float))
            if np.any(c != 0.0):
                if e in clean:
                    n = max(len(clean[e]), len(c))
                    a = np.zeros(n)
                    a[: len(clean[e])] += clean[e]
                    a[: len(c)] += c
                    c = a
                clean[e] = c
        self.terms = clean

    @classmethod
    def from_polys(cls, polys: Iterable[Poly]) -> "PolyJet":
        """Family sum_k lam^k polys[k]."""
        polys = list(polys)
        dim = polys[0].dim
        terms: Dict[Exp, np.ndarray] = {}
        for k, p in enumerate(polys):
            for e, c in p.terms.items():
                arr = terms.setdefault(e, np.zeros(len(polys)))
                arr[k] += c
        return cls(dim, terms)

    def at(self, lam: float) -> Poly:
        out = {}
        for e, c in self.terms.items():
            val = float(np.polynomial.polynomial.polyval(lam, c))
            if val != 0.0:
                out[e] = val
        return Poly(self.dim, out)

    def degrees(self) -> set:
        return {sum(e) for e in self.terms}

    def truncate(self, order: int) -> "PolyJet":
        return PolyJet(self.dim, {e: c for e, c in self.terms.items() if sum(e) <= order})

    def check_h1(self) -> None:
        """Hypothesis (H1): no constant and no linear terms."""
        bad = sorted(e for e in self.terms if sum(e) <= 1)
        if bad:
            raise HopfError(
                H1_VIOLATION,
                "family has terms of degree 0 or 1; the origin must be an equilibrium "
                "with zero value (h(0)=0, dh(0)=0)",
                exponents=[list(e) for e in bad],
            )

    def check_order(self, order: int = 4) -> None:
        if order > 4:
            raise HopfError(UNSUPPORTED_ORDER, f"order {order} > 4 not supported")

    def to_json(self) -> dict:
        items = sorted(self.terms.items())
        return {"dim": self.dim, "terms": [{"exp": list(e), "coef": c.tolist()} for e, c in items]}

    @classmethod
    def from_json(cls, data: dict) -> "PolyJet":
        dim = int(data["dim"])
        out = cls(dim)
        for t in data["terms"]:
            e = tuple(int(k) for k in t["exp"])
            c = np.atleast_1d(np.asarray(t["coef"], dtype=float))
            out = out + cls(dim, {e: c})
        return out

    def __add__(self, other: "PolyJet") -> "PolyJet":
        terms = dict(self.terms)
        for e, c in other.terms.items():
            if e in terms:
                n = max(len(terms[e]), len(c))
                a = np.zeros(n)
                a[: len(terms[e])] += terms[e]
                a[: len(c)] += c
                terms[e] = a
            else:
                terms[e] = c
        return PolyJet(self.dim, terms)
