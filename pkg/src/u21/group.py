"""Matrix arithmetic in G = U(2,1)(E/F) and the named subgroup machinery.

G is realized as {g in GL_3(E) : conj(g)^T J g = J} with J the antidiagonal
form.  This module provides the element constructors (unipotents u/uhat,
torus t(a), center z(lam), the level elements t_n, the raising element eta),
membership predicates for the subgroup family, the Iwasawa decomposition
G = B K0, explicit coset representative systems with their verification,
the diagonal factorization probe, and constructive factorization of level
subgroup elements into H-part and integral-unipotent generators.
"""

from __future__ import annotations

from fractions import Fraction

from u21.localfield import (
    FieldConfig, EElement, PrecisionError, ConstraintError, norm_one_from_unit,
)


class GroupElement:
    """A 3x3 matrix over E, expected (and checkable) to be unitary."""

    __slots__ = ("cfg", "rows")

    def __init__(self, cfg: FieldConfig, rows):
        self.cfg = cfg
        self.rows = tuple(tuple(r) for r in rows)
        assert len(self.rows) == 3 and all(len(r) == 3 for r in self.rows)

    def __getitem__(self, ij):
        return self.rows[ij[0]][ij[1]]

    @property
    def min_window(self) -> int:
        return min(e.window for r in self.rows for e in r if not e.is_exact_zero())

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        A, B = self.rows, other.rows
        out = []
        for i in range(3):
            row = []
            for j in range(3):
                acc = A[i][0] * B[0][j] + A[i][1] * B[1][j] + A[i][2] * B[2][j]
                row.append(acc)
            out.append(row)
        return GroupElement(self.cfg, out)

    def conj_transpose(self) -> "GroupElement":
        return GroupElement(self.cfg,
                            [[self.rows[j][i].conj() for j in range(3)] for i in range(3)])

    def inverse(self) -> "GroupElement":
        """J * conj(g)^T * J; the inverse for unitary g."""
        ct = self.conj_transpose().rows
        # J flips both indices: (J M J)[i][j] = M[2-i][2-j]
        return GroupElement(self.cfg, [[ct[2 - i][2 - j] for j in range(3)] for i in range(3)])

    def is_unitary(self) -> bool:
        ct = self.conj_transpose()
        m = ct * _j_times(self)
        for i in range(3):
            for j in range(3):
                want = 1 if i + j == 2 else 0
                if not (m.rows[i][j] - want).is_zero():
                    return False
        return True

    def is_identity(self) -> bool:
        for i in range(3):
            for j in range(3):
                want = 1 if i == j else 0
                if not (self.rows[i][j] - want).is_zero():
                    return False
        return True

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return all((self.rows[i][j] - other.rows[i][j]).is_zero()
                   for i in range(3) for j in range(3))

    def __hash__(self):
        raise TypeError("GroupElement is equality-within-window; use byte keys")

    def __repr__(self):
        return "[" + "; ".join(", ".join(map(repr, r)) for r in self.rows) + "]"


def _j_times(g: GroupElement) -> GroupElement:
    return GroupElement(g.cfg, [g.rows[2], g.rows[1], g.rows[0]])


# -- named elements -----------------------------------------------------------

def identity(cfg: FieldConfig, window: int | None = None) -> GroupElement:
    one, zero = cfg.one(window), cfg.zero()
    return GroupElement(cfg, [[one, zero, zero], [zero, one, zero], [zero, zero, one]])


def j_form(cfg: FieldConfig, window: int | None = None) -> GroupElement:
    one, zero = cfg.one(window), cfg.zero()
    return GroupElement(cfg, [[zero, zero, one], [zero, one, zero], [one, zero, zero]])


def u_elem(x: EElement, y: EElement) -> GroupElement:
    """Upper unipotent u(x, y); requires y + conj(y) + x conj(x) = 0."""
    cfg = x.cfg
    if not (y.trace() + x.norm()).is_zero():
        raise ConstraintError("u(x,y) needs tr(y) + norm(x) = 0")
    one, zero = cfg.one(max(x.window, y.window, 1)), cfg.zero()
    return GroupElement(cfg, [[one, x, y], [zero, one, -x.conj()], [zero, zero, one]])


def uhat_elem(x: EElement, y: EElement) -> GroupElement:
    """Lower unipotent uhat(x, y); same constraint as u."""
    cfg = x.cfg
    if not (y.trace() + x.norm()).is_zero():
        raise ConstraintError("uhat(x,y) needs tr(y) + norm(x) = 0")
    one, zero = cfg.one(max(x.window, y.window, 1)), cfg.zero()
    return GroupElement(cfg, [[one, zero, zero], [x, one, zero], [y, -x.conj(), one]])


def t_elem(a: EElement) -> GroupElement:
    if a.is_zero():
        raise ConstraintError("t(a) needs a != 0")
    cfg = a.cfg
    one, zero = cfg.one(a.window), cfg.zero()
    return GroupElement(cfg, [[a, zero, zero], [zero, one, zero],
                              [zero, zero, a.conj().inverse()]])


def z_elem(lam: EElement) -> GroupElement:
    if not lam.norm().indistinguishable(1):
        raise ConstraintError("z(lam) needs norm(lam) = 1")
    zero = lam.cfg.zero()
    return GroupElement(lam.cfg, [[lam, zero, zero], [zero, lam, zero], [zero, zero, lam]])


def diag_elem(a: EElement, e: EElement) -> GroupElement:
    """diag(a, e, conj(a)^-1) with e of norm one."""
    if not e.norm().indistinguishable(1):
        raise ConstraintError("diag(a,e,.) needs norm(e) = 1")
    zero = a.cfg.zero()
    return GroupElement(a.cfg, [[a, zero, zero], [zero, e, zero],
                                [zero, zero, a.conj().inverse()]])


def tn_elem(cfg: FieldConfig, n: int, window: int | None = None) -> GroupElement:
    one, zero = cfg.one(window), cfg.zero()
    return GroupElement(cfg, [[zero, zero, cfg.uniformizer(-n, window)],
                              [zero, one, zero],
                              [cfg.uniformizer(n, window), zero, zero]])


def eta_elem(cfg: FieldConfig, window: int | None = None) -> GroupElement:
    zero, one = cfg.zero(), cfg.one(window)
    return GroupElement(cfg, [[cfg.uniformizer(-1, window), zero, zero],
                              [zero, one, zero],
                              [zero, zero, cfg.uniformizer(1, window)]])


def make_element(cfg: FieldConfig, kind: str, *args, window: int | None = None) -> GroupElement:
    """Dispatcher over the named constructors; kinds: u, uhat, t, z, t_n, eta."""
    if kind == "u":
        return u_elem(*args)
    if kind == "uhat":
        return uhat_elem(*args)
    if kind == "t":
        return t_elem(*args)
    if kind == "z":
        return z_elem(*args)
    if kind == "t_n":
        return tn_elem(cfg, args[0], window)
    if kind == "eta":
        return eta_elem(cfg, window)
    raise ConstraintError(f"unknown element kind {kind!r}")


# -- subgroup membership -------------------------------------------------------

class SubgroupSpec:
    """Tagged membership predicate for the named open compact subgroups."""

    KINDS = ("Kn", "Gamma", "UO", "UPinv", "BK0", "KnH", "TK0", "Zn", "KnCapKm")

    def __init__(self, kind: str, param: int | None = None, param2: int | None = None):
        if kind not in self.KINDS:
            raise ConstraintError(f"unknown subgroup kind {kind!r}")
        self.kind = kind
        self.param = param
        self.param2 = param2

    def __repr__(self):
        bits = [self.kind] + [str(x) for x in (self.param, self.param2) if x is not None]
        return "/".join(bits)

    def contains(self, g: GroupElement) -> bool:
        k = self.kind
        if k == "Kn":
            return _in_kn(g, self.param)
        if k == "KnCapKm":
            return _in_kn(g, self.param) and _in_kn(g, self.param2)
        if k == "Gamma":
            m = self.param
            return g.is_unitary() and all(
                (g.rows[i][j] - (1 if i == j else 0)).valuation >= m
                for i in range(3) for j in range(3))
        if k == "UO":
            return (_unipotent_upper(g)
                    and g.rows[0][1].valuation >= 0 and g.rows[0][2].valuation >= 0)
        if k == "UPinv":
            return (_unipotent_upper(g)
                    and g.rows[0][1].valuation >= -1 and g.rows[0][2].valuation >= -2)
        if k == "BK0":
            return (g.is_unitary()
                    and all(g.rows[i][j].valuation >= 0 for i in range(3) for j in range(3))
                    and g.rows[1][0].is_zero() and g.rows[2][0].is_zero()
                    and g.rows[2][1].is_zero())
        if k == "KnH":
            return _in_kn(g, self.param) and _in_h(g)
        if k == "TK0":
            return (g.is_unitary()
                    and all(g.rows[i][j].is_zero() for i in range(3) for j in range(3) if i != j)
                    and g.rows[0][0].valuation == 0)
        if k == "Zn":
            lam = g.rows[0][0]
            return (all((g.rows[i][j] - (lam if i == j else 0)).is_zero()
                        for i in range(3) for j in range(3))
                    and lam.norm().indistinguishable(1)
                    and (lam - 1).valuation >= self.param)
        raise AssertionError


def _in_kn(g: GroupElement, n: int) -> bool:
    r = g.rows
    return (g.is_unitary()
            and r[0][0].valuation >= 0 and r[0][1].valuation >= 0
            and r[0][2].valuation >= -n
            and r[1][0].valuation >= n and (r[1][1] - 1).valuation >= n
            and r[1][2].valuation >= 0
            and r[2][0].valuation >= n and r[2][1].valuation >= n
            and r[2][2].valuation >= 0)


def _in_h(g: GroupElement) -> bool:
    r = g.rows
    return (r[0][1].is_zero() and r[1][0].is_zero() and r[1][2].is_zero()
            and r[2][1].is_zero() and (r[1][1] - 1).is_zero())


def _unipotent_upper(g: GroupElement) -> bool:
    r = g.rows
    return (g.is_unitary()
            and all((r[i][i] - 1).is_zero() for i in range(3))
            and r[1][0].is_zero() and r[2][0].is_zero() and r[2][1].is_zero())


# -- Iwasawa decomposition ------------------------------------------------------

def iwasawa(g: GroupElement) -> tuple[GroupElement, GroupElement]:
    """Factor g = b * k with b upper triangular and k integral unitary.

    The bottom row of g is isotropic for the form; it is divided by its entry
    of minimal valuation (leftmost on ties) and completed to an element of K0.
    """
    cfg = g.cfg
    r = g.rows[2]
    vals = [e.valuation for e in r]
    v = min(vals)
    piv = vals.index(v)
    c = r[piv]
    s = [e / c for e in r]
    if piv == 0:
        # bottom row (1, s1, s2): rows of k are (0,0,1), (0,1,-conj s1), (1,s1,s2)
        one, zero = cfg.one(c.window), cfg.zero()
        k = GroupElement(cfg, [[zero, zero, one],
                               [zero, one, -s[1].conj()],
                               [one, s[1], s[2]]])
    elif piv == 2:
        one, zero = cfg.one(c.window), cfg.zero()
        k = GroupElement(cfg, [[one, zero, zero],
                               [-s[1].conj(), one, zero],
                               [s[0], s[1], one]])
    else:
        # an isotropic integral primitive row cannot pivot in the middle
        raise PrecisionError("middle pivot in Iwasawa row reduction")
    b = g * k.inverse()
    for (i, j) in ((1, 0), (2, 0), (2, 1)):
        if not b.rows[i][j].is_zero():
            raise PrecisionError("Iwasawa B-part not upper triangular at this window")
    return b, k


# -- unit-group and norm-one generators -------------------------------------------

def residue_field_generator(cfg: FieldConfig) -> tuple[int, int]:
    """A generator (a, b) of the multiplicative group of the residue field F_{q^2}."""
    p, eps = cfg.p, cfg.epsilon
    order = p * p - 1
    for a in range(p):
        for b in range(1, p):
            x, k = (a, b), 1
            cur = (a, b)
            while cur != (1, 0):
                cur = ((cur[0] * a + eps * cur[1] * b) % p, (cur[0] * b + cur[1] * a) % p)
                k += 1
            if k == order:
                return (a, b)
    raise AssertionError("no residue field generator found")


def teichmueller(cfg: FieldConfig, window: int | None = None) -> EElement:
    """Teichmueller lift of a residue-field generator, exact mod p^window."""
    w = window or cfg.default_window
    a, b = residue_field_generator(cfg)
    x = cfg.from_pair(a, b, window=w)
    q2 = cfg.p * cfg.p
    for _ in range(w + 2):
        nxt = x
        for _ in range(q2 - 1):
            nxt = nxt * x
        if nxt.indistinguishable(x):
            break
        x = nxt
    return x


def norm_one_unit_gen(cfg: FieldConfig, window: int | None = None) -> EElement:
    """A generator of the order-(q+1) part of the norm-one units: T^(q-1)."""
    t = teichmueller(cfg, window)
    return t.conj() / t


def norm_one_depth(cfg: FieldConfig, depth: int, window: int | None = None) -> EElement:
    """Norm-one lam with val(lam - 1) exactly depth >= 1."""
    w = window or cfg.default_window
    u = cfg.one(w) + cfg.uniformizer(1, w) * cfg.sqrt_eps(w)
    lam = u.conj() / u
    assert (lam - 1).valuation == 1
    for _ in range(depth - 1):
        acc = lam
        for _ in range(cfg.p - 1):
            acc = acc * lam
        lam = acc
    assert (lam - 1).valuation == depth
    return lam


def solve_norm_equation(cfg: FieldConfig, target: EElement, window: int | None = None) -> EElement:
    """A unit y with norm(y) = target (a unit of F) to the requested window."""
    w = min(window, target.window) if window else target.window
    p, eps = cfg.p, cfg.epsilon
    if target.valuation != 0 or not target.conj().indistinguishable(target):
        raise ConstraintError("norm equation target must be a unit of F")
    tval = target.residue_pair(w)[0]
    y = None
    for a in range(p):
        for b in range(p):
            if (a * a - eps * b * b) % p == tval % p:
                y = (a, b)
                break
        if y:
            break
    if y is None:
        raise ConstraintError("norm equation unsolvable mod p")
    ya, yb = y
    for k in range(1, w):
        mod = p ** (k + 1)
        cur = (ya * ya - eps * yb * yb) % mod
        diff = (tval - cur) % mod
        assert diff % p ** k == 0
        d = diff // p ** k
        # norm(y + p^k * delta) = norm(y) + p^k * tr(conj(y) * delta) + O(p^2k)
        if (2 * ya) % p != 0:
            da = d * pow(2 * ya, -1, p) % p
            ya += p ** k * da
        else:
            db = d * pow(-2 * eps * yb, -1, p) % p
            yb += p ** k * db
    out = cfg.from_pair(ya, yb, window=w)
    assert out.norm().indistinguishable(target)
    return out


# -- generator families -----------------------------------------------------------

def kn_generators(cfg: FieldConfig, n: int, window: int | None = None):
    """Named generators of K_n: torus units, center, unipotents, and t_n.

    Completeness of this family (it generates K_n) is exercised by the
    factorization certificates and the small-quotient closure tests.
    """
    w = window or cfg.default_window
    half = Fraction(1, 2)
    gens: list[tuple[str, GroupElement]] = []

    def u_of(xa, xb, r):
        x = cfg.from_rational_pair(xa, xb, w)
        y = cfg.from_rational_pair(-(Fraction(xa) ** 2 - cfg.epsilon * Fraction(xb) ** 2) * half, r, w)
        return u_elem(x, y)

    def uhat_of(xa, xb, r):
        x = cfg.from_rational_pair(xa, xb, w)
        y = cfg.from_rational_pair(-(Fraction(xa) ** 2 - cfg.epsilon * Fraction(xb) ** 2) * half, r, w)
        return uhat_elem(x, y)

    pn = Fraction(cfg.p) ** n

    gens.append(("t_n", tn_elem(cfg, n, w)))
    gens.append(("u(1,.)", u_of(1, 0, 0)))
    gens.append(("u(s,.)", u_of(0, 1, 0)))
    gens.append(("u(0,s/p^n)", u_of(0, 0, Fraction(1) / pn)))
    gens.append(("uhat(p^n,.)", uhat_of(pn, 0, 0)))
    gens.append(("uhat(p^n s,.)", uhat_of(0, pn, 0)))
    gens.append(("uhat(0,p^n s)", uhat_of(0, 0, pn)))
    gens.append(("t(teich)", t_elem(teichmueller(cfg, w))))
    gens.append(("t(1+p)", t_elem(cfg.from_pair(1 + cfg.p, 0, w))))
    gens.append(("t(1+ps)", t_elem(cfg.from_pair(1, cfg.p, w))))
    if n == 0:
        gens.append(("z(lam0)", z_elem(norm_one_unit_gen(cfg, w))))
        gens.append(("z(lam1)", z_elem(norm_one_depth(cfg, 1, w))))
    else:
        gens.append((f"z(lam{n})", z_elem(norm_one_depth(cfg, n, w))))
    return gens


def lemma_generating_pair(cfg: FieldConfig, n: int, window: int | None = None):
    """The two generating families of the structure lemma: K_n cap H, and U(o_E)."""
    w = window or cfg.default_window
    pn = Fraction(cfg.p) ** n
    s = cfg.sqrt_eps(w)
    h_gens = [
        ("t_n", tn_elem(cfg, n, w)),
        ("t(teich)", t_elem(teichmueller(cfg, w))),
        ("t(1+p)", t_elem(cfg.from_pair(1 + cfg.p, 0, w))),
        ("t(1+ps)", t_elem(cfg.from_pair(1, cfg.p, w))),
        ("u_H(s/p^n)", u_elem(cfg.zero(), cfg.from_rational_pair(0, Fraction(1) / pn, w))),
        ("uhat_H(p^n s)", uhat_elem(cfg.zero(), cfg.from_rational_pair(0, pn, w))),
    ]
    half = Fraction(1, 2)
    u_gens = [
        ("u(1,.)", u_elem(cfg.from_pair(1, 0, w), cfg.from_rational_pair(-half, 0, w))),
        ("u(s,.)", u_elem(s, cfg.from_rational_pair(cfg.epsilon * half, 0, w))),
        ("u(0,s)", u_elem(cfg.zero(), cfg.from_rational_pair(0, 1, w))),
    ]
    return h_gens, u_gens


# -- coset representative systems ---------------------------------------------------

def coset_reps_theta(cfg: FieldConfig, n: int, window: int | None = None):
    """The q+1 representatives of K_{n+1} / (K_{n+1} cap K_n)."""
    w = window or cfg.default_window
    reps = [tn_elem(cfg, n + 1, w)]
    for c in range(cfg.p):
        y = cfg.from_rational_pair(0, Fraction(c, cfg.p ** (n + 1)), w)
        reps.append(u_elem(cfg.zero(), y))
    return reps


def coset_reps_S(cfg: FieldConfig, window: int | None = None):
    """q^4 representatives of U(p_E^-1) / U(o_E): u(x, y0(x) + s*sqrt(eps))."""
    w = window or cfg.default_window
    p = cfg.p
    half = Fraction(1, 2)
    reps = []
    for ca in range(p):
        for cb in range(p):
            xa, xb = Fraction(ca, p), Fraction(cb, p)
            y0 = -(xa * xa - cfg.epsilon * xb * xb) * half
            for cs in range(p * p):
                x = cfg.from_rational_pair(xa, xb, w)
                y = cfg.from_rational_pair(y0, Fraction(cs, p * p), w)
                reps.append(u_elem(x, y))
    return reps


class CosetReport:
    def __init__(self, ok: bool, index: int, detail: str = ""):
        self.ok = ok
        self.index = index
        self.detail = detail

    def __repr__(self):
        return f"CosetReport(ok={self.ok}, index={self.index}, {self.detail!r})"


def verify_coset_system(reps, small: SubgroupSpec, big_generators) -> CosetReport:
    """Check a coset representative system for big/small.

    (a) pairwise distinct: r_i^-1 r_j not in small;
    (b) complete: the right multiplication action of each generator of big on
        the rep cosets is total (every rep*gen lands in some rep coset) and
        transitive from the identity coset.  Totality of the action over a
        generating set proves the system covers the subgroup they generate.
    """
    n = len(reps)
    for i in range(n):
        for j in range(n):
            if i != j and small.contains(reps[i].inverse() * reps[j]):
                return CosetReport(False, n, f"reps {i} and {j} collide")
    # identity coset index
    ident = None
    for i, r in enumerate(reps):
        if small.contains(r):
            ident = i
            break
    if ident is None:
        return CosetReport(False, n, "no representative of the identity coset")
    perms = []
    for gname, g in big_generators:
        perm = []
        for i in range(n):
            tgt = None
            x = reps[i] * g
            for j in range(n):
                if small.contains(reps[j].inverse() * x):
                    tgt = j
                    break
            if tgt is None:
                return CosetReport(False, n, f"rep {i} * {gname} escapes the system")
            perm.append(tgt)
        perms.append(perm)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for i in frontier:
            for perm in perms:
                j = perm[i]
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    if len(seen) != n:
        return CosetReport(False, n, f"action reaches only {len(seen)} of {n} cosets")
    return CosetReport(True, n)


# -- the diagonal identity probe -------------------------------------------------

def verify_diag_identity(cfg: FieldConfig, n: int, z: EElement,
                         variant: str = "paper") -> bool:
    """Check diag(p^n z, -conj(z)/z, p^-n conj(z)^-1) against the uhat-u-uhat-t_n product.

    variant 'paper' uses second arguments (1/conj z, 1/conj z) for the two
    uhat factors; variant 'alt' uses (1/z, 1/conj z).
    """
    if z.valuation != -n:
        raise ConstraintError("z must have valuation exactly -n")
    trz = z.trace()
    if trz.valuation != 0:
        raise ConstraintError("z + conj(z) must be a unit")
    y = solve_norm_equation(cfg, -trz, window=z.window)
    zc = z.conj()
    lhs = GroupElement(cfg, [
        [cfg.uniformizer(n, z.window) * z, cfg.zero(), cfg.zero()],
        [cfg.zero(), -(zc / z), cfg.zero()],
        [cfg.zero(), cfg.zero(), cfg.uniformizer(-n, z.window) * zc.inverse()],
    ])
    first_second = (1 / zc) if variant == "paper" else (1 / z)
    rhs = (uhat_elem(y.conj() / z, first_second)
           * u_elem(y, z)
           * uhat_elem(y.conj() / zc, 1 / zc)
           * tn_elem(cfg, n, z.window))
    return lhs == rhs


# -- constructive factorization into (K_n cap H) and U(o_E) words ----------------------


def _sqrt_part_below(w: EElement, depth: int) -> EElement:
    """Pure-sqrt(eps) element c with sqrt-part of (w - c) of valuation >= depth."""
    cfg = w.cfg
    if w.is_zero() or w.valuation >= depth:
        return cfg.zero()
    width = depth - w.val
    bcoef = w.b % cfg.p ** width
    return cfg.from_rational_pair(0, Fraction(bcoef) * Fraction(cfg.p) ** w.val, w.window)


class FactorStep:
    """One certified factor: g = product of (tag, element) pieces, left to right."""

    def __init__(self, tag: str, elem: GroupElement):
        self.tag = tag
        self.elem = elem

    def __repr__(self):
        return f"<{self.tag}>"


def _expand_uhat_deep(cfg: FieldConfig, n: int, x: EElement, y: EElement, out: list):
    """uhat(x, y) with val x >= n, val y >= 2n, as t_n * u * t_n (n >= 1) or direct."""
    if x.is_zero() and y.is_zero():
        return
    w = max(x.window if not x.is_exact_zero() else 1,
            y.window if not y.is_exact_zero() else 1)
    pn = Fraction(cfg.p) ** n
    a = (-x.conj()) * cfg.from_rational(1 / pn, x.window + 2 * n) if not x.is_exact_zero() else cfg.zero()
    b = y * cfg.from_rational(1 / pn ** 2, (y.window + 4 * n) if not y.is_exact_zero() else 4) if not y.is_exact_zero() else cfg.zero()
    out.append(FactorStep("H:t_n", tn_elem(cfg, n, w + 2 * n)))
    out.append(FactorStep("U:u", u_elem(a, b)))
    out.append(FactorStep("H:t_n", tn_elem(cfg, n, w + 2 * n)))


def _expand_zn(cfg: FieldConfig, n: int, lam: EElement, out: list):
    """z(lam) for norm-one lam with val(lam-1) >= max(n,?) via the diagonal identity."""
    if (lam - 1).is_zero():
        return
    j = (lam - 1).val
    assert j >= n or n == 0
    depth_pieces = []
    cur = lam
    while not (cur - 1).is_zero() and (cur - 1).val > max(n, 0 if n else 0) and (cur - 1).val != n:
        # peel a canonical element of depth exactly n (depth 0 handled below)
        base = max(n, 0)
        if base == 0:
            mu = norm_one_from_unit(cfg.one(lam.window) + cfg.sqrt_eps(lam.window)) * cfg.from_int(-1)
            # mu = conj(u0)/u0 with u0 = 1 + sqrt(eps): depth exactly 0
        else:
            mu = norm_one_depth(cfg, base, lam.window)
        depth_pieces.append(mu)
        cur = mu.inverse() * cur
        if (cur - 1).is_zero():
            break
        assert (cur - 1).val == base, "shell peeling failed"
    if not (cur - 1).is_zero():
        depth_pieces.append(cur)
    for mu in depth_pieces:
        _expand_zn_shell(cfg, n, mu, out)


def _expand_zn_shell(cfg: FieldConfig, n: int, lam: EElement, out: list):
    """z(lam) for val(lam - 1) exactly n (or a unit-trace solution at n = 0)."""
    wnd = lam.window
    # Hilbert 90: z with -conj(z)/z = lam, val(z) = -n, tr(z) a unit
    z = None
    for wa, wb in ((Fraction(0), Fraction(1, 2)), (Fraction(1, 2), Fraction(0)),
                   (Fraction(1, 2), Fraction(1, 2)), (Fraction(0), Fraction(1))):
        wcand = cfg.from_rational_pair(wa * Fraction(cfg.p) ** (-n), wb * Fraction(cfg.p) ** (-n), wnd)
        cand = wcand - lam.conj() * wcand.conj()
        if cand.is_zero() or cand.valuation != -n:
            continue
        if cand.trace().valuation == 0:
            z = cand
            break
    assert z is not None, "no Hilbert-90 solution in the shell"
    assert norm_one_from_unit(z).indistinguishable(lam)
    zc = z.conj()
    y = solve_norm_equation(cfg, -z.trace(), window=wnd)
    # t-correction: z(lam) = t(-p^-n conj(z)/z^2) * diag(p^n z, lam, p^-n conj(z)^-1)
    a_t = -(cfg.uniformizer(-n, wnd) * zc / (z * z))
    assert a_t.valuation == 0
    out.append(FactorStep("H:t", t_elem(a_t)))
    # diag = uhat(conj(y)/z, 1/conj z) * u(y, z) * uhat(conj(y)/conj z, 1/conj z) * t_n
    _emit_uhat_shell(cfg, n, y.conj() / z, 1 / zc, out)
    _emit_u_shell(cfg, n, y, z, out)
    _emit_uhat_shell(cfg, n, y.conj() / zc, 1 / zc, out)
    out.append(FactorStep("H:t_n", tn_elem(cfg, n, wnd)))


def _emit_u_shell(cfg: FieldConfig, n: int, x: EElement, y: EElement, out: list):
    """u(x, y) with x integral, val(y) >= -n: central H-part times U(o_E)."""
    c = _sqrt_part_below(y, 0)
    if not c.is_zero():
        out.append(FactorStep("H:u_H", u_elem(cfg.zero(), c)))
    rest = y - c
    assert rest.valuation >= 0
    out.append(FactorStep("U:u", u_elem(x, rest)))


def _emit_uhat_shell(cfg: FieldConfig, n: int, x: EElement, y: EElement, out: list):
    """uhat(x, y) with val(x) >= n, val(y) >= n: central H-part, then deep uhat."""
    c = _sqrt_part_below(y, 2 * n)
    if not c.is_zero():
        out.append(FactorStep("H:uhat_H", uhat_elem(cfg.zero(), c)))
    rest = y - c
    assert rest.valuation >= 2 * n
    _expand_uhat_deep(cfg, n, x, rest, out)


def factor_kn_element(g: GroupElement, n: int) -> list[FactorStep]:
    """Express g in K_n as a product of tagged (K_n cap H) and U(o_E) factors.

    Mirrors the constructive content of the generation lemma; raises if any
    step's precondition fails, and the caller re-multiplies the word to
    certify the factorization.
    """
    cfg = g.cfg
    out: list[FactorStep] = []
    suffix: list[FactorStep] = []
    work = g

    # a non-unit (3,3) entry forces val(g31) = n; the involution t_n repairs it
    if work.rows[2][2].valuation != 0:
        suffix.append(FactorStep("H:t_n", tn_elem(cfg, n, g.min_window)))
        work = work * tn_elem(cfg, n, g.min_window)
        assert work.rows[2][2].valuation == 0, "t_n twist did not expose a unit corner"

    if n == 0 and work.rows[0][0].valuation > 0:
        out.append(FactorStep("H:t_n", tn_elem(cfg, 0, g.min_window)))
        work = tn_elem(cfg, 0, g.min_window) * work

    # step 1: clear the (1,3) denominator with a central unipotent of H
    if work.rows[0][2].valuation < 0:
        w13 = work.rows[0][2] / work.rows[2][2]
        c = _sqrt_part_below(w13, 0)
        assert (w13 - c).valuation >= 0, "non-sqrt denominator in the (1,3) entry"
        assert c.valuation >= -n
        out.append(FactorStep("H:u_H", u_elem(cfg.zero(), c)))
        work = u_elem(cfg.zero(), -c) * work

    # step 2: deepen the (3,1) entry to 2n with a central lower unipotent of H
    assert work.rows[0][0].valuation == 0, "non-unit (1,1) after row preparation"
    w31 = work.rows[2][0] / work.rows[0][0]
    c = _sqrt_part_below(w31, 2 * n)
    if not c.is_zero():
        assert c.valuation >= n
        out.append(FactorStep("H:uhat_H", uhat_elem(cfg.zero(), c)))
        work = uhat_elem(cfg.zero(), -c) * work
    assert (work.rows[2][0] / work.rows[0][0]).valuation >= 2 * n, \
        "forced F-part of the (3,1) entry is not deep enough"

    # step 3: peel the lower unipotent determined by the first column
    x = work.rows[1][0] / work.rows[0][0]
    y = work.rows[2][0] / work.rows[0][0]
    if not (x.is_zero() and y.is_zero()):
        x = x if not x.is_zero() else cfg.zero()
        y = y if not y.is_zero() else cfg.zero()
        assert x.valuation >= n and y.valuation >= 2 * n
        if n >= 1:
            _expand_uhat_deep(cfg, n, x, y, out)
        else:
            wnd = work.min_window
            out.append(FactorStep("H:t_n", tn_elem(cfg, 0, wnd)))
            out.append(FactorStep("U:u", u_elem(-x.conj() if not x.is_exact_zero() else cfg.zero(),
                                                y if not y.is_exact_zero() else cfg.zero())))
            out.append(FactorStep("H:t_n", tn_elem(cfg, 0, wnd)))
        work = uhat_elem(-x if not x.is_exact_zero() else cfg.zero(),
                         y.conj() if not y.is_exact_zero() else cfg.zero()) * work

    # work is now upper triangular
    for (i, j) in ((1, 0), (2, 0), (2, 1)):
        assert work.rows[i][j].is_zero(), "matrix not triangular after unipotent peeling"
    d1, d2 = work.rows[0][0], work.rows[1][1]
    assert d1.valuation == 0 and (d2 - 1).valuation >= n
    out.append(FactorStep("H:t", t_elem(d1)))
    if not (d2 - 1).is_zero():
        out.append(FactorStep("H:t", t_elem(d2.inverse())))
        _expand_zn(cfg, n, d2, out)
    rest = diag_elem(d1, d2).inverse() * work
    x2, y2 = rest.rows[0][1], rest.rows[0][2]
    if not (x2.is_zero() and y2.is_zero()):
        assert x2.valuation >= 0
        c = _sqrt_part_below(y2, 0)
        if not c.is_zero():
            assert c.valuation >= -n
            out.append(FactorStep("H:u_H", u_elem(cfg.zero(), c)))
        y2r = y2 - c
        assert y2r.valuation >= 0
        out.append(FactorStep("U:u", u_elem(x2 if not x2.is_exact_zero() else cfg.zero(),
                                            y2r if not y2r.is_exact_zero() else cfg.zero())))
    return out + suffix


def verify_factorization(g: GroupElement, steps: list[FactorStep], n: int,
                         check_depth: int) -> bool:
    """Re-multiply a factorization word and check membership tags and equality."""
    cfg = g.cfg
    acc = identity(cfg, g.min_window)
    kn_h = SubgroupSpec("KnH", n)
    uo = SubgroupSpec("UO")
    for st in steps:
        if st.tag.startswith("H:"):
            if not kn_h.contains(st.elem):
                return False
        else:
            if not uo.contains(st.elem):
                return False
        acc = acc * st.elem
    diff = acc.inverse() * g
    for i in range(3):
        for j in range(3):
            want = 1 if i == j else 0
            d = diff.rows[i][j] - want
            if not d.is_zero() and d.valuation < check_depth:
                return False
    return True
