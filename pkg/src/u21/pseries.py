"""Principal-series model: fixed spaces, raising operators, dimension theorems.

The model of Ind_B^G(chi) at level m is the space of functions on the flag
points with the chi-cocycle.  K_n-fixed vectors correspond to cocycle-
consistent K_n-orbits; the level-raising operators eta (translation by
diag(1/p, 1, p)) and theta' (average over the level-(n+1) subgroup) and the
averaging operator S become explicit matrices between the orbit bases.

Characters chi = (chi_1, chi_2) are given by the value chi_1(p) at the
uniformizer (specialized to two rationals for generic-position checks),
an exponent on the unit group mod p^c, and an exponent on the norm-one
group mod its depth-c' filtration step.  All scalars are exact.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import gcd, lcm

import numpy as np

from u21.localfield import FieldConfig, PrecisionError, ConstraintError
from u21 import group as G
from u21 import flag
from u21.engine import point_count, GenArrays, prepare_generator, orbit_partition
from u21.scalars import Cyc, mat_mul, mat_rank, mat_nullspace, col_space_contains, mat_solve


# ---------------------------------------------------------------------------
# characters of the torus
# ---------------------------------------------------------------------------


def _unit_group_table(cfg: FieldConfig, c: int):
    """Enumerate (o_E/p^c)^x as products of fixed generators; residue -> exponents.

    Generators: the Teichmueller lift T (order q^2-1) and, at level 2, the
    two pro-p directions 1+p and 1+p*sqrt(eps).
    """
    p, eps = cfg.p, cfg.epsilon
    mod = p ** c
    t = G.teichmueller(cfg, max(c + 2, 4))
    tpair = (t.a % mod, t.b % mod)
    gens = [(tpair, p * p - 1)]
    if c >= 2:
        gens.append(((1 + p) % mod, p ** (c - 1)))
        gens.append(((1, p % mod), p ** (c - 1)))
    out = {}

    def mul(u, v):
        if isinstance(u, int):
            u = (u, 0)
        if isinstance(v, int):
            v = (v, 0)
        return ((u[0] * v[0] + eps * u[1] * v[1]) % mod,
                (u[0] * v[1] + u[1] * v[0]) % mod)

    def walk(i, cur, exps):
        if i == len(gens):
            out.setdefault(cur, tuple(exps))
            return
        g, order = gens[i]
        x = (1, 0)
        for e in range(order):
            walk(i + 1, mul(cur, x), exps + [e])
            x = mul(x, g)

    walk(0, (1, 0), [])
    orders = [o for _, o in gens]
    return out, orders


def _norm_one_table(cfg: FieldConfig, c: int):
    """Enumerate E^1/E^1_c; residue pair mod p^c -> exponents on (lam0, lam1)."""
    p, eps = cfg.p, cfg.epsilon
    mod = p ** c
    lam0 = G.norm_one_unit_gen(cfg, c + 4)
    gens = [((lam0.a % mod, lam0.b % mod), p + 1)]
    if c >= 2:
        lam1 = G.norm_one_depth(cfg, 1, c + 4)
        gens.append(((lam1.a % mod, lam1.b % mod), p ** (c - 1)))
    out = {}

    def mul(u, v):
        return ((u[0] * v[0] + eps * u[1] * v[1]) % mod,
                (u[0] * v[1] + u[1] * v[0]) % mod)

    def walk(i, cur, exps):
        if i == len(gens):
            out.setdefault(cur, tuple(exps))
            return
        g, order = gens[i]
        x = (1, 0)
        for e in range(order):
            walk(i + 1, mul(cur, x), exps + [e])
            x = mul(x, g)

    walk(0, (1, 0), [])
    orders = [o for _, o in gens]
    return out, orders


class TorusCharacter:
    """chi(diag(a, b, conj(a)^-1)) = chi_1(a) * chi_2(b).

    chi_1(a) = x_value^val(a) * zeta^(k_unit . dlog of the unit part mod p^c);
    chi_2    = zeta^(k_e1 . dlog on E^1 mod the level-c' step).
    """

    def __init__(self, cfg: FieldConfig, x_value=Fraction(2, 3), x_alt=Fraction(3, 5),
                 unit_level: int = 0, unit_exps=(), e1_level: int = 0, e1_exps=()):
        if unit_level > 2 or e1_level > 2:
            raise ConstraintError("ramification levels above 2 are out of desk scale")
        self.cfg = cfg
        self.x_value = Fraction(x_value)
        self.x_alt = Fraction(x_alt)
        self.unit_level = unit_level
        self.e1_level = e1_level
        self.unit_exps = tuple(unit_exps) if unit_level else ()
        self.e1_exps = tuple(e1_exps) if e1_level else ()
        self._utab, self._uorders = (_unit_group_table(cfg, unit_level)
                                     if unit_level else ({}, []))
        self._etab, self._eorders = (_norm_one_table(cfg, e1_level)
                                     if e1_level else ({}, []))
        if unit_level:
            assert len(self.unit_exps) == len(self._uorders)
        if e1_level:
            assert len(self.e1_exps) == len(self._eorders)
        orders = [o // gcd(o, k) if k else 1
                  for o, k in zip(self._uorders, self.unit_exps)]
        orders += [o // gcd(o, k) if k else 1
                   for o, k in zip(self._eorders, self.e1_exps)]
        self.order = lcm(1, *orders) if orders else 1

    @property
    def is_unramified(self) -> bool:
        return self.order == 1

    def describe(self) -> dict:
        return {
            "x_value": str(self.x_value), "x_alt": str(self.x_alt),
            "unit_level": self.unit_level, "unit_exps": list(self.unit_exps),
            "e1_level": self.e1_level, "e1_exps": list(self.e1_exps),
            "root_order": self.order,
        }

    # -- exponent extraction ----------------------------------------------------
    def _unit_root_exp(self, pair) -> int:
        """Root exponent (mod order) of chi_1 on a unit with residue pair."""
        if not self.unit_level:
            return 0
        mod = self.cfg.p ** self.unit_level
        exps = self._utab[(pair[0] % mod, pair[1] % mod)]
        tot = 0
        for e, k, o in zip(exps, self.unit_exps, self._uorders):
            tot += (self.order // o) * k * e
        return tot % self.order

    def _e1_root_exp(self, pair) -> int:
        if not self.e1_level:
            return 0
        mod = self.cfg.p ** self.e1_level
        exps = self._etab[(pair[0] % mod, pair[1] % mod)]
        tot = 0
        for e, k, o in zip(exps, self.e1_exps, self._eorders):
            tot += (self.order // o) * k * e
        return tot % self.order

    def scalar(self, x_exp: int, root_exp: int, spec: str = "primary"):
        xv = self.x_value if spec == "primary" else self.x_alt
        val = xv ** x_exp
        if self.order == 1 or root_exp % self.order == 0:
            return Fraction(val)
        return Cyc.root(self.order, root_exp, 1) * Fraction(val)

    def eval_bpart(self, b11_val_exp: int, c0_pair, b22_pair, P: int,
                   spec: str = "primary"):
        """chi(B) for a B-part with b33 unit part c0 and middle entry b22."""
        root = 0
        if self.unit_level:
            conj_c0 = (c0_pair[0], (-c0_pair[1]) % P)
            root -= self._unit_root_exp(conj_c0)
        if self.e1_level:
            root += self._e1_root_exp(b22_pair)
        return self.scalar(b11_val_exp, root % self.order if self.order > 1 else 0, spec)

    def engine_dlog(self, eng):
        """Vectorized edge exponent for the orbit BFS (see engine transport)."""
        p = self.cfg.p
        cu = self.cfg.p ** self.unit_level if self.unit_level else 1
        ce = self.cfg.p ** self.e1_level if self.e1_level else 1
        ut = np.zeros(cu * cu, dtype=np.int64)
        if self.unit_level:
            for pair, _ in self._utab.items():
                ut[pair[0] + cu * pair[1]] = self._unit_root_exp(pair)
        et = np.zeros(ce * ce, dtype=np.int64)
        if self.e1_level:
            for pair, _ in self._etab.items():
                et[pair[0] + ce * pair[1]] = self._e1_root_exp(pair)
        order = self.order

        def dlog(c0a, c0b, b22a, b22b):
            out = np.zeros(c0a.shape[0], dtype=np.int64)
            if self.unit_level:
                out += ut[(c0a % cu) + cu * ((-c0b) % cu)]
            if self.e1_level:
                out -= et[(b22a % ce) + ce * (b22b % ce)]
            return out % order

        return dlog, order

    # -- derived data -------------------------------------------------------------
    def omega_root_exp(self, lam_pair, P: int) -> int:
        """Root exponent of the central character at a norm-one unit."""
        return (self._unit_root_exp(lam_pair) + self._e1_root_exp(lam_pair)) % self.order

    def n_pi(self) -> int:
        """Conductor of the central character: min n with omega trivial on E^1_n."""
        depth = max(self.unit_level, self.e1_level, 1)
        mod = self.cfg.p ** depth
        # generators of the filtration steps E^1_j / E^1_{j+1}
        worst = -1
        lam = G.norm_one_unit_gen(self.cfg, depth + 4)
        if self.omega_root_exp((lam.a % mod, lam.b % mod), mod):
            worst = 0
        for j in range(1, depth):
            lamj = G.norm_one_depth(self.cfg, j, depth + 4)
            if self.omega_root_exp((lamj.a % mod, lamj.b % mod), mod):
                worst = max(worst, j)
        return worst + 1


def unramified_character(cfg: FieldConfig, x_value=Fraction(2, 3),
                         x_alt=Fraction(3, 5)) -> TorusCharacter:
    return TorusCharacter(cfg, x_value, x_alt)


def ramified_center_character(cfg: FieldConfig, k: int = 1,
                              x_value=Fraction(2, 3), x_alt=Fraction(3, 5)) -> TorusCharacter:
    """chi with chi_2 nontrivial on E^1/E^1_1: central conductor n_pi = 1."""
    return TorusCharacter(cfg, x_value, x_alt, e1_level=1, e1_exps=(k,))


# ---------------------------------------------------------------------------
# fixed spaces
# ---------------------------------------------------------------------------


class FixedSpace:
    """Basis data for the K_n-fixed vectors in the level-m model."""

    def __init__(self, chi: TorusCharacter, n: int, m: int, part, engine):
        self.chi = chi
        self.n = n
        self.m = m
        self.part = part
        self.engine = engine
        self.basis_orbits = [i for i, ok in enumerate(part.consistent) if ok]
        self.dim = len(self.basis_orbits)
        self.reps = [part.reps[i] for i in self.basis_orbits]
        self._orbit_pos = {o: j for j, o in enumerate(self.basis_orbits)}

    def value_data(self, index: int):
        """(basis position or None, x-exponent, root-exponent) at a point."""
        o = int(self.part.orbit[index])
        pos = self._orbit_pos.get(o)
        if pos is None:
            return None, 0, 0
        z = int(self.part.zexp[index]) if self.part.zexp is not None else 0
        return pos, int(self.part.sexp[index]), z

    def basis_value(self, j: int, index: int, spec: str = "primary"):
        pos, se, ze = self.value_data(index)
        if pos != j:
            return self.chi.scalar(0, 0, spec) * 0
        return self.chi.scalar(se, ze, spec)

    def eval_at_rows(self, row2, row3, denom: int, spec: str = "primary"):
        """All basis values of the model function at an exact group element.

        row2/row3 are integer pair arrays (3, 2) of rows of the element times
        p^denom.  Returns (basis position or None, scalar value).
        """
        eng = self.engine
        tidx, vexp, extra = eng.act_rows(row3.reshape(1, 3, 2), denom, None,
                                         want_unit=True)
        index = int(tidx[0])
        pos, se, ze = self.value_data(index)
        if pos is None:
            return None, None
        c0 = (int(extra["c0"][0][0]), int(extra["c0"][1][0]))
        b22 = (0, 0)
        if self.chi.e1_level:
            b22 = flag._b22_scalar(eng, row2, denom,
                                   flag.FlagPoint(self.chi.cfg, self.m, index))
        chib = self.chi.eval_bpart(-int(vexp[0]), c0, b22, eng.P, spec)
        return pos, chib * self.chi.scalar(se, ze, spec)


def fixed_space(chi: TorusCharacter, n: int, m: int,
                budget: int | None = flag.DEFAULT_BUDGET,
                headroom: int = 8, on_progress=None) -> FixedSpace:
    """Compute the K_n-fixed space of the level-m model (m >= n+1 required)."""
    if m < n + 1:
        raise ConstraintError(f"model level m={m} cannot carry K_{n}-fixed vectors faithfully")
    eng = flag.get_engine(chi.cfg, m, headroom, budget)
    gens = flag.kn_gen_arrays(chi.cfg, n, eng)
    unit_dlog, order = (None, 1)
    if not chi.is_unramified:
        unit_dlog, order = chi.engine_dlog(eng)
    part = orbit_partition(eng, gens, unit_dlog=unit_dlog, order=order,
                           on_progress=on_progress)
    return FixedSpace(chi, n, m, part, eng)


# ---------------------------------------------------------------------------
# operators as exact matrices
# ---------------------------------------------------------------------------


class ModelContext:
    """Caches fixed spaces and operator matrices for one character."""

    def __init__(self, chi: TorusCharacter, budget: int | None = flag.DEFAULT_BUDGET,
                 headroom: int = 8, level_of=None, on_progress=None):
        self.chi = chi
        self.cfg = chi.cfg
        self.budget = budget
        self.headroom = headroom
        self.level_of = level_of or (lambda n: n + 2)
        self._spaces: dict = {}
        self.on_progress = on_progress

    def space(self, n: int, m: int | None = None) -> FixedSpace:
        m = m if m is not None else self.level_of(n)
        key = (n, m)
        if key not in self._spaces:
            self._spaces[key] = fixed_space(self.chi, n, m, self.budget,
                                            self.headroom, self.on_progress)
        return self._spaces[key]

    # -- operator terms ---------------------------------------------------------
    def eta_terms(self, n: int):
        return [G.eta_elem(self.cfg, self._win(1))]

    def theta_terms(self, n: int, route: str = "raising"):
        w = self._win(n + 1)
        if route == "raising":
            terms = [G.eta_elem(self.cfg, w)]
        else:
            terms = [G.tn_elem(self.cfg, n + 1, w)]
        for c in range(self.cfg.p):
            y = self.cfg.from_rational_pair(0, Fraction(c, self.cfg.p ** (n + 1)), w)
            terms.append(G.u_elem(self.cfg.zero(), y))
        return terms

    def s_terms(self):
        return G.coset_reps_S(self.cfg, self._win(2))

    def translation_sum_terms(self, n: int, k: int):
        w = self._win(n + k)
        terms = []
        for c in range(self.cfg.p ** k):
            y = self.cfg.from_rational_pair(0, Fraction(c, self.cfg.p ** (n + k)), w)
            terms.append(G.u_elem(self.cfg.zero(), y))
        return terms

    def _win(self, depth: int) -> int:
        return self.cfg.default_window + 2 * depth + 6

    # -- evaluation of translated vectors ------------------------------------------
    def eval_translated(self, space: FixedSpace, terms, index: int, at_level: int,
                        spec: str = "primary"):
        """Column of values sum_t (pi(t) f_j)(x) over basis j, at point index.

        The point lives at level at_level; its canonical lift is multiplied by
        each term and the result evaluated in the source space.
        """
        eng_pt = flag.get_engine(self.cfg, at_level, self.headroom)
        lift = np.array(eng_pt.lift_matrix(index), dtype=np.int64)
        zero = self.chi.scalar(0, 0, spec) * 0
        col = [zero] * space.dim
        for t in terms:
            rows, d = flag.element_rows_exact(t, space.engine.cap)
            prod = flag._pair_matmul(lift.reshape(1, 3, 3, 2), rows, self.cfg.epsilon)
            pos, val = space.eval_at_rows(prod[0, 1], prod[0, 2], d, spec)
            if pos is not None:
                col[pos] = col[pos] + val
        return col

    def operator_matrix(self, kind: str, n: int, spec: str = "primary",
                        route: str = "raising", verify_samples: int = 0,
                        rng_seed: int = 97):
        """Matrix of the operator from V(n) into the coordinates of its target.

        kind: 'eta' (V(n) -> V(n+2)), 'theta' (V(n) -> V(n+1)),
              'S' (V(n) evaluated back in V(n) coordinates),
              'T1'/'T2' (translation sums, evaluated in V(n+k) coordinates).
        """
        src = self.space(n)
        if kind == "eta":
            terms, tgt = self.eta_terms(n), self.space(n + 2)
        elif kind == "theta":
            terms, tgt = self.theta_terms(n, route), self.space(n + 1)
        elif kind == "S":
            terms, tgt = self.s_terms(), self.space(n)
        elif kind in ("T1", "T2"):
            k = int(kind[1])
            terms, tgt = self.translation_sum_terms(n, k), self.space(n + k)
        else:
            raise ConstraintError(f"unknown operator {kind!r}")
        cols = []
        for i in range(tgt.dim):
            cols.append(self.eval_translated(src, terms, tgt.reps[i], tgt.m, spec))
        mat = [[cols[i][j] for j in range(src.dim)] for i in range(tgt.dim)]
        if verify_samples:
            self._verify_operator(src, tgt, terms, mat, verify_samples, rng_seed, spec)
        return mat

    def _verify_operator(self, src, tgt, terms, mat, samples, seed, spec):
        """Check (op f_j)(y) = sum_i M[i][j] g_i(y) on random points y."""
        rng = random.Random(seed)
        for _ in range(samples):
            y = rng.randrange(tgt.engine.total)
            col = self.eval_translated(src, terms, y, tgt.m, spec)
            for j in range(src.dim):
                rhs = sum((mat[i][j] * tgt.basis_value(i, y, spec)
                           for i in range(tgt.dim)),
                          self.chi.scalar(0, 0, spec) * 0)
                if not _eq(col[j], rhs):
                    raise AssertionError("operator image escapes the target space")

    def function_column(self, space: FixedSpace, j: int, pre_terms, points,
                        at_level: int, spec: str = "primary"):
        """Values of pi(term)f_j at the given points (term a single element)."""
        out = []
        for y in points:
            col = self.eval_translated(space, pre_terms, y, at_level, spec)
            out.append(col[j])
        return out


def _eq(a, b) -> bool:
    d = a - b
    if isinstance(d, Cyc):
        return d.is_zero()
    return d == 0


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------


def verify_commutation(ctx: ModelContext, n: int, spec: str = "primary") -> bool:
    """theta' eta = eta theta' as maps V(n) -> V(n+3)."""
    th_hi = ctx.operator_matrix("theta", n + 2, spec)
    eta_lo = ctx.operator_matrix("eta", n, spec)
    eta_hi = ctx.operator_matrix("eta", n + 1, spec)
    th_lo = ctx.operator_matrix("theta", n, spec)
    lhs = mat_mul(th_hi, eta_lo)
    rhs = mat_mul(eta_hi, th_lo)
    return all(_eq(a, b) for ra, rb in zip(lhs, rhs) for a, b in zip(ra, rb))


def verify_theta_routes(ctx: ModelContext, n: int, spec: str = "primary") -> bool:
    """The averaging definition of theta' equals eta plus central translations."""
    a = ctx.operator_matrix("theta", n, spec, route="raising", verify_samples=2)
    b = ctx.operator_matrix("theta", n, spec, route="definition")
    return all(_eq(x, y) for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def _eval_matrix_on_points(ctx, space, coeff_cols, points, spec):
    """Columns (as functions) of linear combos of a space basis at points."""
    vals = []
    for col in coeff_cols:
        vals.append([
            sum((col[i] * space.basis_value(i, y, spec) for i in range(space.dim)),
                ctx.chi.scalar(0, 0, spec) * 0)
            for y in points])
    return vals


def s_eigenspace_analysis(ctx: ModelContext, n: int, spec: str = "primary",
                          extra_samples: int = 24, seed: int = 11):
    """The q^4-eigenspace of S on V(n) versus the image of eta from V(n-2).

    S need not preserve V(n) pointwise, so the eigen equation is imposed as
    linear constraints on evaluations at the orbit representatives plus random
    sample points.
    """
    cfg = ctx.cfg
    q4 = Fraction(cfg.q ** 4)
    src = ctx.space(n)
    terms = ctx.s_terms()
    rng = random.Random(seed)
    points = list(src.reps) + [rng.randrange(src.engine.total) for _ in range(extra_samples)]
    rows = []
    for y in points:
        s_col = ctx.eval_translated(src, terms, y, src.m, spec)
        for j in range(src.dim):
            s_col[j] = s_col[j] - q4 * src.basis_value(j, y, spec)
        rows.append(s_col)
    kernel = mat_nullspace(rows)
    eta_mat = ctx.operator_matrix("eta", n - 2, spec)   # rows: V(n) coords
    dim_ker = len(kernel)
    dim_im = mat_rank(eta_mat) if eta_mat and eta_mat[0] else 0
    ker_in_im = col_space_contains(eta_mat, kernel) if dim_ker else True
    # image inside eigenspace: (S - q^4) kills eta w at every sample point
    im_in_ker = True
    lowsrc = ctx.space(n - 2)
    eta_term = ctx.eta_terms(n - 2)
    comp_terms = [s * e for s in terms for e in eta_term]
    for j in range(lowsrc.dim):
        for y in points:
            v1 = ctx.eval_translated(lowsrc, comp_terms, y, src.m, spec)[j]
            v2 = ctx.eval_translated(lowsrc, eta_term, y, src.m, spec)[j]
            if not _eq(v1, q4 * v2):
                im_in_ker = False
                break
        if not im_in_ker:
            break
    return {
        "dim_eigenspace": dim_ker,
        "dim_eta_image": dim_im,
        "eigenspace_in_image": bool(ker_in_im),
        "image_in_eigenspace": bool(im_in_ker),
        "equal": bool(ker_in_im and im_in_ker and dim_ker == dim_im),
    }


def verify_eta_preimage(ctx: ModelContext, n: int, spec: str = "primary") -> bool:
    """theta'^{-1}(eta V(n-1)) cap V(n) inside eta V(n-2)."""
    th = ctx.operator_matrix("theta", n, spec)           # V(n) -> V(n+1)
    eta1 = ctx.operator_matrix("eta", n - 1, spec)       # V(n-1) -> V(n+1)
    eta2 = ctx.operator_matrix("eta", n - 2, spec)       # V(n-2) -> V(n)
    dim_n = len(th[0]) if th else 0
    dim_lo = len(eta1[0]) if eta1 else 0
    stacked = [th[i] + [-eta1[i][l] for l in range(dim_lo)] for i in range(len(th))]
    null = mat_nullspace(stacked)
    pre = [vec[:dim_n] for vec in null]
    pre = [v for v in pre if any(not _eq(c, c * 0) for c in v)]
    if not pre:
        return True
    eta2_rows = eta2  # rows indexed by V(n) coordinates
    return col_space_contains(eta2_rows, pre)


def verify_translation_sum(ctx: ModelContext, n: int, k: int, spec: str = "primary",
                           extra_samples: int = 48, seed: int = 23) -> bool:
    """The depth-k central translation sum of V(n) lies in
    theta'^k V(n) + eta V(n+k-2) + eta V(n+k-1), as functions."""
    src = ctx.space(n)
    if src.dim == 0:
        return True
    tgt_level = ctx.level_of(n + k + 1)
    rng = random.Random(seed)
    eng = flag.get_engine(ctx.cfg, tgt_level, ctx.headroom)
    points = [rng.randrange(eng.total) for _ in range(extra_samples)]
    # candidate spanning functions, all evaluated at the common points
    cols = []
    # theta'^k images: coordinates in V(n+k), then values
    comp = None
    for step in range(k):
        mk = ctx.operator_matrix("theta", n + step, spec)
        comp = mk if comp is None else mat_mul(mk, comp)
    sp_nk = ctx.space(n + k)
    for j in range(src.dim):
        coeffs = [comp[i][j] for i in range(sp_nk.dim)]
        cols.append(_weighted_values(ctx, sp_nk, coeffs, points, tgt_level, spec))
    for low, _name in ((n + k - 2, "vlow"), (n + k - 1, "vhigh")):
        if low < 0:
            continue
        sp = ctx.space(low)
        for j in range(sp.dim):
            vals = ctx.function_column(sp, j, ctx.eta_terms(low), points, tgt_level, spec)
            cols.append(vals)
    # left-hand sides
    lhs_terms = ctx.translation_sum_terms(n, k)
    lhs_cols = []
    for j in range(src.dim):
        lhs_cols.append(ctx.function_column(src, j, lhs_terms, points, tgt_level, spec))
    A = [[cols[c][r] for c in range(len(cols))] for r in range(len(points))]
    for j in range(src.dim):
        b = lhs_cols[j]
        if mat_solve(A, b) is None:
            return False
    return True


def _weighted_values(ctx, space, coeffs, points, at_level, spec):
    out = []
    zero = ctx.chi.scalar(0, 0, spec) * 0
    for y in points:
        col = ctx.eval_translated(space, [G.identity(ctx.cfg, ctx.cfg.default_window + 6)],
                                  y, at_level, spec)
        out.append(sum((coeffs[i] * col[i] for i in range(space.dim)), zero))
    return out


def eta_injective(ctx: ModelContext, n: int, spec: str = "primary") -> bool:
    m = ctx.operator_matrix("eta", n, spec)
    cols = len(m[0]) if m else 0
    return mat_rank(m) == cols if cols else True


# ---------------------------------------------------------------------------
# dimension tables and certificates
# ---------------------------------------------------------------------------


def dimension_table(chi: TorusCharacter, n_max: int,
                    budget: int | None = flag.DEFAULT_BUDGET, headroom: int = 8,
                    window_gate: bool = True, on_progress=None) -> dict:
    """dim V(n) for n = 0..n_max with the level, window, and theorem gates."""
    cfg = chi.cfg
    rows = []
    dims = {}
    for n in range(n_max + 1):
        entry_m = n + 2
        if point_count(cfg.q, entry_m) > (budget or 10 ** 30):
            raise flag.BudgetExceeded(point_count(cfg.q, entry_m), budget)
        gate_m2 = entry_m + 1
        degraded = point_count(cfg.q, gate_m2) > (budget or 10 ** 30)
        pair = (entry_m - 1, entry_m) if degraded else (entry_m, gate_m2)
        d_entry = fixed_space(chi, n, entry_m, budget, headroom, on_progress).dim
        d_other = fixed_space(chi, n, pair[0] if degraded else pair[1],
                              budget, headroom, on_progress).dim
        agree = d_entry == d_other
        wagree = None
        if window_gate:
            d_w = fixed_space(chi, n, entry_m, budget, headroom + 2, on_progress).dim
            wagree = d_w == d_entry
        dims[n] = d_entry
        rows.append({
            "n": n, "m": entry_m, "dim": d_entry, "gate_pair": list(pair),
            "gate_dims": [d_entry, d_other] if not degraded else [d_other, d_entry],
            "level_agree": agree, "degraded_gate": degraded,
            "window_agree": wagree,
        })
    n_pi = chi.n_pi()
    nonzero = [n for n in range(n_max + 1) if dims[n] > 0]
    N_pi = nonzero[0] if nonzero else None
    checks = {"n_pi": n_pi, "N_pi": N_pi}
    if N_pi is not None:
        checks["newform_dim_one"] = dims[N_pi] == 1
        checks["conductor_bound"] = N_pi >= n_pi
        checks["growth_steps"] = all(
            dims[n + 2] - dims[n] in (0, 1)
            for n in range(n_max - 1) if n + 2 > n_pi)
        checks["upper_bound"] = all(
            dims[n] <= (n - N_pi) // 2 + 1 for n in range(N_pi, n_max + 1))
        floor_applies = N_pi > n_pi and N_pi >= 2
        pattern = all(dims[n] == (n - N_pi) // 2 + 1 for n in range(N_pi, n_max + 1))
        checks["floor_formula_applies"] = floor_applies
        checks["floor_formula"] = pattern
    return {"dims": dims, "rows": rows, "checks": checks}


def conductor(chi: TorusCharacter, n_max: int = 4, **kw) -> tuple:
    table = dimension_table(chi, n_max, window_gate=False, **kw)
    return table["checks"]["N_pi"], table["checks"]["n_pi"]


def basis_certificate(ctx: ModelContext, n: int, N_pi: int,
                      spec: str = "primary") -> dict:
    """Rank certificate for {theta'^i eta^j v : i + 2j + N_pi = n} in V(n)."""
    new_space = ctx.space(N_pi)
    assert new_space.dim == 1, "newform space is not one-dimensional"
    vectors = []
    labels = []
    for j in range((n - N_pi) // 2 + 1):
        i = n - N_pi - 2 * j
        if i < 0:
            continue
        coeffs = [ctx.chi.scalar(0, 0, spec) + 1]  # v in V(N_pi) coordinates
        level = N_pi
        for _ in range(j):
            mat = ctx.operator_matrix("eta", level, spec)
            coeffs = [sum((mat[r][c] * coeffs[c] for c in range(len(coeffs))),
                          ctx.chi.scalar(0, 0, spec) * 0) for r in range(len(mat))]
            level += 2
        for _ in range(i):
            mat = ctx.operator_matrix("theta", level, spec)
            coeffs = [sum((mat[r][c] * coeffs[c] for c in range(len(coeffs))),
                          ctx.chi.scalar(0, 0, spec) * 0) for r in range(len(mat))]
            level += 1
        assert level == n
        vectors.append(coeffs)
        labels.append((i, j))
    tgt_dim = ctx.space(n).dim
    rank = mat_rank([[v[r] for v in vectors] for r in range(tgt_dim)]) if vectors else 0
    return {
        "n": n, "N_pi": N_pi, "labels": labels,
        "count": len(vectors), "rank": rank, "dim": tgt_dim,
        "is_basis": rank == len(vectors) == tgt_dim,
    }
