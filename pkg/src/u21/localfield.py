"""Finite-precision arithmetic in F = Q_p and its unramified quadratic extension.

E = F[sqrt(eps)] with eps a quadratic non-residue mod p, so the residue field
grows from p to p^2 elements and p stays prime (the uniformizer of both F and
E).  An EElement stores a valuation, a unit mantissa pair (a, b) for
(a + b*sqrt(eps)) mod p^w, and the window w of significant p-adic digits.
Every operation propagates the window honestly: results never claim more
digits than their inputs justify.

Zero has two flavours.  The exact zero has infinite valuation.  A value whose
known digits all vanished ("zero at window w") keeps a finite valuation bound
with window 0, and refuses inversion with PrecisionError rather than guessing.
"""

from __future__ import annotations

import math
from fractions import Fraction


class PrecisionError(ArithmeticError):
    """Raised when a result would require digits the inputs do not justify."""


class ConstraintError(ValueError):
    """Raised when a constructor precondition fails (e.g. non-unitary input)."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def smallest_nonresidue(p: int) -> int:
    for c in range(2, p):
        if pow(c, (p - 1) // 2, p) == p - 1:
            return c
    raise ValueError(f"no quadratic non-residue found mod {p}")


class FieldConfig:
    """Residue characteristic p (= residue cardinality q), eps, default window."""

    __slots__ = ("p", "epsilon", "default_window")

    def __init__(self, p: int, epsilon: int | None = None, default_window: int = 10):
        if not is_prime(p) or p < 3:
            raise ConstraintError(f"p must be an odd prime, got {p}")
        if epsilon is None:
            epsilon = smallest_nonresidue(p)
        if pow(epsilon % p, (p - 1) // 2, p) != p - 1:
            raise ConstraintError(f"epsilon={epsilon} is a square mod {p}")
        if default_window < 1:
            raise ConstraintError("default_window must be positive")
        self.p = p
        self.epsilon = epsilon
        self.default_window = default_window

    @property
    def q(self) -> int:
        return self.p

    def __repr__(self):
        return f"FieldConfig(p={self.p}, epsilon={self.epsilon}, window={self.default_window})"

    def __eq__(self, other):
        return (isinstance(other, FieldConfig)
                and (self.p, self.epsilon) == (other.p, other.epsilon))

    def __hash__(self):
        return hash((self.p, self.epsilon))

    # -- element constructors ----------------------------------------------
    def zero(self) -> "EElement":
        return EElement(self, None, 0, 0, self.default_window)

    def one(self, window: int | None = None) -> "EElement":
        return self.from_pair(1, 0, window)

    def sqrt_eps(self, window: int | None = None) -> "EElement":
        return self.from_pair(0, 1, window)

    def uniformizer(self, k: int = 1, window: int | None = None) -> "EElement":
        w = window or self.default_window
        return EElement(self, k, 1, 0, w)

    def from_int(self, n: int, window: int | None = None) -> "EElement":
        return self.from_rational_pair(Fraction(n), Fraction(0), window)

    def from_pair(self, a: int, b: int, window: int | None = None) -> "EElement":
        """Element a + b*sqrt(eps) with integer coordinates."""
        return self.from_rational_pair(Fraction(a), Fraction(b), window)

    def from_rational(self, r, window: int | None = None) -> "EElement":
        return self.from_rational_pair(Fraction(r), Fraction(0), window)

    def from_rational_pair(self, ra: Fraction, rb: Fraction,
                           window: int | None = None) -> "EElement":
        """Exact rational coordinates ra + rb*sqrt(eps), truncated to window."""
        w = window or self.default_window
        ra, rb = Fraction(ra), Fraction(rb)
        if ra == 0 and rb == 0:
            return self.zero()
        v = min(_vp_frac(ra, self.p), _vp_frac(rb, self.p))
        mod = self.p ** w
        scale = Fraction(self.p) ** (-v)
        a = _frac_mod(ra * scale, mod, self.p)
        b = _frac_mod(rb * scale, mod, self.p)
        return EElement(self, v, a, b, w)


def _vp_frac(r: Fraction, p: int) -> int:
    if r == 0:
        return 10 ** 9
    v = 0
    n, d = r.numerator, r.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _frac_mod(r: Fraction, mod: int, p: int) -> int:
    n, d = r.numerator, r.denominator
    assert d % p != 0
    return n * pow(d, -1, mod) % mod


class EElement:
    """A window-tracked element of E; immutable."""

    __slots__ = ("cfg", "val", "a", "b", "window")

    def __init__(self, cfg: FieldConfig, val: int | None, a: int, b: int, window: int):
        self.cfg = cfg
        self.val = val          # None encodes the exact zero
        self.window = window
        if val is None or window <= 0:
            self.a, self.b = 0, 0
            if val is not None and window < 0:
                self.window = 0
        else:
            mod = cfg.p ** window
            self.a, self.b = a % mod, b % mod
            if self.a % cfg.p == 0 and self.b % cfg.p == 0:
                raise ConstraintError("mantissa not normalized (divisible by p)")

    # -- predicates ----------------------------------------------------------
    @property
    def valuation(self):
        return math.inf if self.val is None else self.val

    def is_exact_zero(self) -> bool:
        return self.val is None

    def is_zero(self) -> bool:
        """Zero as far as the window can tell (exact or inexact)."""
        return self.val is None or self.window == 0

    def is_unit(self) -> bool:
        return not self.is_zero() and self.val == 0

    def abs_precision(self):
        """Known up to O(p^N) for this N."""
        return math.inf if self.val is None else self.val + self.window

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, int):
            other = self.cfg.from_int(other)
        x, y = self, other
        if x.is_exact_zero():
            return y
        if y.is_exact_zero():
            return x
        p = self.cfg.p
        N = min(x.abs_precision(), y.abs_precision())
        v = min(x.val, y.val)
        if N - v <= 0:
            return EElement(self.cfg, N, 0, 0, 0)
        mod = p ** (N - v)
        a = (x.a * p ** (x.val - v) + y.a * p ** (y.val - v)) % mod
        b = (x.b * p ** (x.val - v) + y.b * p ** (y.val - v)) % mod
        if a == 0 and b == 0:
            return EElement(self.cfg, N, 0, 0, 0)
        k = 0
        while a % p == 0 and b % p == 0:
            a //= p
            b //= p
            k += 1
        return EElement(self.cfg, v + k, a, b, N - v - k)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        mod = self.cfg.p ** self.window
        return EElement(self.cfg, self.val, (-self.a) % mod, (-self.b) % mod, self.window)

    def __sub__(self, other):
        if isinstance(other, int):
            other = self.cfg.from_int(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            other = self.cfg.from_int(other)
        x, y = self, other
        if x.is_exact_zero() or y.is_exact_zero():
            return self.cfg.zero()
        if x.window == 0 or y.window == 0:
            return EElement(self.cfg, x.val + y.val, 0, 0, 0)
        w = min(x.window, y.window)
        mod = self.cfg.p ** w
        eps = self.cfg.epsilon
        a = (x.a * y.a + eps * x.b * y.b) % mod
        b = (x.a * y.b + x.b * y.a) % mod
        return EElement(self.cfg, x.val + y.val, a, b, w)

    __rmul__ = __mul__

    def inverse(self) -> "EElement":
        if self.is_exact_zero():
            raise ZeroDivisionError("inverse of exact zero")
        if self.window == 0:
            raise PrecisionError(
                f"inverse of a value indistinguishable from 0 (O(p^{self.val}))")
        mod = self.cfg.p ** self.window
        n = (self.a * self.a - self.cfg.epsilon * self.b * self.b) % mod
        ninv = pow(n, -1, mod)
        return EElement(self.cfg, -self.val,
                        self.a * ninv % mod, (-self.b) * ninv % mod, self.window)

    def __truediv__(self, other):
        if isinstance(other, int):
            other = self.cfg.from_int(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        if isinstance(other, int):
            other = self.cfg.from_int(other)
        return other * self.inverse()

    # -- Galois structure ------------------------------------------------------
    def conj(self) -> "EElement":
        if self.is_zero():
            return self
        mod = self.cfg.p ** self.window
        return EElement(self.cfg, self.val, self.a, (-self.b) % mod, self.window)

    def norm(self) -> "EElement":
        return self * self.conj()

    def trace(self) -> "EElement":
        return self + self.conj()

    # -- views -----------------------------------------------------------------
    def residue_pair(self, depth: int) -> tuple[int, int]:
        """The value mod p^depth as an integral pair; requires val >= 0."""
        if self.is_exact_zero():
            return (0, 0)
        if self.val < 0:
            raise PrecisionError("residue of a non-integral element")
        if self.abs_precision() < depth:
            raise PrecisionError(
                f"residue depth {depth} exceeds known precision {self.abs_precision()}")
        mod = self.cfg.p ** depth
        s = self.cfg.p ** self.val
        return (self.a * s % mod, self.b * s % mod)

    def indistinguishable(self, other) -> bool:
        """Equal as far as the joint window can tell."""
        if isinstance(other, int):
            other = self.cfg.from_int(other)
        return (self - other).is_zero()

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.cfg.from_int(other)
        if not isinstance(other, EElement):
            return NotImplemented
        return (self.cfg == other.cfg and self.val == other.val
                and self.a == other.a and self.b == other.b
                and self.window == other.window)

    def __hash__(self):
        return hash((self.val, self.a, self.b, self.window))

    def __repr__(self):
        if self.is_exact_zero():
            return "0"
        if self.window == 0:
            return f"O(p^{self.val})"
        return f"{self.val}:{self.a}+{self.b}*s"


def norm_one_from_unit(z: EElement) -> EElement:
    """-conj(z)/z, a norm-one element; requires z invertible at its window."""
    return -(z.conj() / z)


def rational_padic_pair(cfg: FieldConfig, ra, rb, window: int) -> EElement:
    """Independent truncation oracle: exact rationals -> windowed element."""
    return cfg.from_rational_pair(Fraction(ra), Fraction(rb), window)
