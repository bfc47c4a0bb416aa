"""Exact scalar arithmetic: rationals, roots of unity, and dense linear algebra.

All verification in this package is done with exact equality, so scalars are
either Fractions or elements of a cyclotomic field Q(zeta_L).  A Cyc value is
kept as a sparse polynomial in zeta on the group ring Q[Z/L]; canonical forms
(for equality and zero tests) reduce modulo the L-th cyclotomic polynomial.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the n-th cyclotomic polynomial."""
    if n == 1:
        return (-1, 1)
    # (z^n - 1) / prod_{d | n, d < n} Phi_d, exact integer division
    num = [0] * (n + 1)
    num[0], num[n] = -1, 1
    for d in range(1, n):
        if n % d == 0:
            num = _poly_divexact(num, cyclotomic_poly(d))
    return tuple(num)


def _poly_divexact(num, den):
    num = list(num)
    dd = len(den) - 1
    while dd >= 0 and den[dd] == 0:
        dd -= 1
    out = [0] * (len(num) - dd)
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i]
        if c == 0:
            continue
        q, r = divmod(c, den[dd])
        assert r == 0, "non-exact cyclotomic division"
        out[i - dd] = q
        for j in range(dd + 1):
            num[i - dd + j] -= q * den[j]
    assert all(c == 0 for c in num), "non-zero remainder in cyclotomic division"
    return out


class Cyc:
    """An element of Q(zeta_L) for the ambient root order L."""

    __slots__ = ("order", "coeffs", "_canon")

    def __init__(self, order: int, coeffs=None):
        self.order = order
        self.coeffs: dict[int, Fraction] = {}
        self._canon = None
        if coeffs:
            for k, v in coeffs.items():
                v = Fraction(v)
                if v:
                    k %= order
                    w = self.coeffs.get(k)
                    self.coeffs[k] = v if w is None else w + v
                    if not self.coeffs[k]:
                        del self.coeffs[k]

    # -- constructors ------------------------------------------------------
    @staticmethod
    def root(order: int, k: int, scale=1) -> "Cyc":
        return Cyc(order, {k % order: Fraction(scale)})

    @staticmethod
    def rational(value, order: int = 1) -> "Cyc":
        return Cyc(order, {0: Fraction(value)})

    def promote(self, order: int) -> "Cyc":
        """Re-embed into Q(zeta_order); order must be a multiple of self.order."""
        if order == self.order:
            return self
        assert order % self.order == 0
        step = order // self.order
        return Cyc(order, {k * step: v for k, v in self.coeffs.items()})

    def _pair(self, other):
        if isinstance(other, (int, Fraction)):
            other = Cyc.rational(other, self.order)
        L = self.order * other.order // gcd(self.order, other.order)
        return self.promote(L), other.promote(L)

    # -- ring operations ---------------------------------------------------
    def __add__(self, other):
        a, b = self._pair(other)
        out = dict(a.coeffs)
        for k, v in b.coeffs.items():
            w = out.get(k)
            out[k] = v if w is None else w + v
            if not out[k]:
                del out[k]
        return Cyc(a.order, out)

    __radd__ = __add__

    def __neg__(self):
        return Cyc(self.order, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, Cyc) else Cyc.rational(-Fraction(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return Cyc(self.order, {k: v * f for k, v in self.coeffs.items()})
        a, b = self._pair(other)
        out: dict[int, Fraction] = {}
        for k1, v1 in a.coeffs.items():
            for k2, v2 in b.coeffs.items():
                k = (k1 + k2) % a.order
                w = out.get(k)
                p = v1 * v2
                out[k] = p if w is None else w + p
        return Cyc(a.order, out)

    __rmul__ = __mul__

    # -- canonical form and comparisons -------------------------------------
    def canonical(self) -> tuple:
        """Coefficient tuple of the reduction mod Phi_L (degree phi(L))."""
        if self._canon is None:
            phi = cyclotomic_poly(self.order)
            deg = len(phi) - 1
            poly = [Fraction(0)] * self.order
            for k, v in self.coeffs.items():
                poly[k] += v
            for i in range(self.order - 1, deg - 1, -1):
                c = poly[i]
                if c:
                    poly[i] = Fraction(0)
                    for j in range(deg):
                        poly[i - deg + j] -= c * phi[j]
            self._canon = tuple(poly[:deg])
        return self._canon

    def is_zero(self) -> bool:
        if not self.coeffs:
            return True
        return all(c == 0 for c in self.canonical())

    def is_rational(self) -> bool:
        can = self.canonical()
        return all(c == 0 for c in can[1:])

    def as_rational(self) -> Fraction:
        can = self.canonical()
        assert all(c == 0 for c in can[1:]), "not a rational value"
        return can[0] if can else Fraction(0)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Cyc.rational(other)
        if not isinstance(other, Cyc):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        # hash through the canonical form at own order; rationals hash alike
        if self.is_rational():
            return hash(self.as_rational())
        return hash((self.order, self.canonical()))

    def __bool__(self):
        return not self.is_zero()

    def inverse(self) -> "Cyc":
        """Multiplicative inverse via extended Euclid against Phi_L."""
        if self.is_rational():
            r = self.as_rational()
            if r == 0:
                raise ZeroDivisionError("inverse of zero cyclotomic value")
            return Cyc.rational(1 / r, self.order)
        phi = [Fraction(c) for c in cyclotomic_poly(self.order)]
        deg = len(phi) - 1
        a = list(self.canonical())
        # extended gcd of a and phi over Q[z]; gcd is a nonzero constant
        r0, r1 = phi, a + [Fraction(0)] * (deg + 1 - len(a))
        s0, s1 = [Fraction(0)], [Fraction(1)]
        while any(c != 0 for c in r1):
            d0, d1 = _deg(r0), _deg(r1)
            if d0 < d1:
                r0, r1, s0, s1 = r1, r0, s1, s0
                continue
            lc = r0[d0] / r1[d1]
            shift = d0 - d1
            for j in range(d1 + 1):
                r0[j + shift] -= lc * r1[j]
            s0 = _poly_sub_shifted(s0, s1, lc, shift)
            if all(c == 0 for c in r0):
                r0, r1, s0, s1 = r1, r0, s1, s0
                break
        c = r0[_deg(r0)]
        inv_coeffs = {i: v / c for i, v in enumerate(s0) if v}
        out = Cyc(self.order, inv_coeffs)
        assert (out * self - 1).is_zero()
        return out

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return Cyc(self.order, {k: v / f for k, v in self.coeffs.items()})
        a, b = self._pair(other)
        return a * b.inverse()

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for k in sorted(self.coeffs):
            v = self.coeffs[k]
            terms.append(str(v) if k == 0 else f"{v}*z{self.order}^{k}")
        return " + ".join(terms)


def _deg(p):
    for i in range(len(p) - 1, -1, -1):
        if p[i]:
            return i
    return -1


def _poly_sub_shifted(s0, s1, lc, shift):
    out = list(s0) + [Fraction(0)] * max(0, len(s1) + shift - len(s0))
    for j, c in enumerate(s1):
        out[j + shift] -= lc * c
    return out


# ---------------------------------------------------------------------------
# Exact dense linear algebra over Fraction or Cyc entries.
# Matrices are lists of row lists; these are always small (dims <= ~10).
# ---------------------------------------------------------------------------

def _is_zero(x):
    if isinstance(x, Cyc):
        return x.is_zero()
    return x == 0


def mat_mul(A, B):
    n, k = len(A), len(B)
    m = len(B[0]) if B else 0
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = A[i][0] * B[0][j]
            for t in range(1, k):
                acc = acc + A[i][t] * B[t][j]
            row.append(acc)
        out.append(row)
    return out


def mat_rank(A) -> int:
    rows = [list(r) for r in A]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(rows)):
            if not _is_zero(rows[r][col]):
                piv = r
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and not _is_zero(rows[r][col]):
                f = rows[r][col] / pv
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def mat_nullspace(A):
    """Basis of the right kernel of A (list of column vectors)."""
    if not A:
        return []
    ncols = len(A[0])
    rows = [list(r) for r in A]
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(rows)):
            if not _is_zero(rows[r][col]):
                piv = r
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        rows[rank] = [a / pv for a in rows[rank]]
        for r in range(len(rows)):
            if r != rank and not _is_zero(rows[r][col]):
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    zero = A[0][0] - A[0][0]
    one = zero + 1
    for fc in free:
        vec = [zero] * ncols
        vec[fc] = one
        for r, pc in enumerate(pivots):
            vec[pc] = zero - rows[r][fc]
        basis.append(vec)
    return basis


def col_space_contains(A, vecs) -> bool:
    """True iff every vector in vecs lies in the column span of A."""
    cols = [list(c) for c in zip(*A)] if A and A[0] else []
    base_rank = mat_rank(cols) if cols else 0
    for v in vecs:
        test = cols + [list(v)]
        if mat_rank(test) != base_rank:
            return False
    return True


def mat_solve(A, b):
    """One solution x of A x = b, or None if inconsistent (A rows x cols)."""
    n = len(A)
    ncols = len(A[0]) if A else 0
    rows = [list(A[i]) + [b[i]] for i in range(n)]
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, n):
            if not _is_zero(rows[r][col]):
                piv = r
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        rows[rank] = [a / pv for a in rows[rank]]
        for r in range(n):
            if r != rank and not _is_zero(rows[r][col]):
                f = rows[r][col]
                rows[r] = [a - f * c for a, c in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
    for r in range(rank, n):
        if not _is_zero(rows[r][ncols]):
            return None
    zero = b[0] - b[0] if b else Fraction(0)
    x = [zero] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = rows[r][ncols]
    return x
