"""Vectorized engine for the finite flag model at level m.

A point of the level-m model is a primitive isotropic row vector over
o_E / p^m, normalized so that its leftmost unit entry is 1.  Isotropy pins
the F-part of one coordinate, so each point has exactly three free digits
and a perfect integer index:

  type A (pivot first):  (1, x, y)  ->  index  xa + P*xb + P^2*yb
  type C (pivot last):   (x, y, 1)  ->  index  P^3 + (ya + Q*yb + Q^2*xb)/p
                         with x, y = 0 mod p, Q = P/p

Group elements act by right multiplication of the row followed by
re-normalization; all arithmetic is exact integer arithmetic modulo a
working modulus p^cap with explicit headroom, so the reduction of the true
orbit structure to level m is computed without floating precision anywhere.
"""

from __future__ import annotations

import numpy as np

from u21.localfield import FieldConfig, PrecisionError
from u21.group import GroupElement


class BudgetExceeded(RuntimeError):
    def __init__(self, needed: int, cap: int):
        super().__init__(f"point budget exceeded: need {needed}, cap {cap}")
        self.needed = needed
        self.cap = cap


def point_count(q: int, m: int) -> int:
    return (q ** 3 + 1) * q ** (3 * (m - 1))


class GenArrays:
    """A group element prepared for the engine: integer pair matrices mod p^cap.

    The true matrix is (Ga + Gb*sqrt(eps)) / p^d entrywise.
    """

    __slots__ = ("name", "Ga", "Gb", "d")

    def __init__(self, name, Ga, Gb, d):
        self.name = name
        self.Ga = Ga
        self.Gb = Gb
        self.d = d

    def __repr__(self):
        return f"GenArrays({self.name}, d={self.d})"


def prepare_generator(g: GroupElement, cap_digits: int, name: str = "") -> GenArrays:
    """Convert a GroupElement to exact integer arrays mod p^cap_digits."""
    cfg = g.cfg
    vals = [e.val for r in g.rows for e in r if not e.is_zero()]
    d = max(0, -min(vals)) if vals else 0
    mod = cfg.p ** cap_digits
    Ga = np.zeros((3, 3), dtype=np.int64)
    Gb = np.zeros((3, 3), dtype=np.int64)
    for i in range(3):
        for j in range(3):
            e = g.rows[i][j]
            if e.is_zero():
                continue
            shift = e.val + d
            assert shift >= 0
            if e.window + shift < cap_digits:
                raise PrecisionError(
                    f"generator entry window {e.window} too small for cap {cap_digits}")
            s = cfg.p ** shift
            Ga[i, j] = e.a * s % mod
            Gb[i, j] = e.b * s % mod
    return GenArrays(name or "g", Ga, Gb, d)


class PointEngine:
    """Exact level-m point arithmetic for one field configuration."""

    def __init__(self, cfg: FieldConfig, m: int, headroom: int = 8,
                 budget: int | None = None):
        self.cfg = cfg
        self.m = m
        p = cfg.p
        self.p = p
        self.P = p ** m
        self.Q = p ** (m - 1)
        self.total = self.P ** 3 + self.Q ** 3
        if budget is not None and self.total > budget:
            raise BudgetExceeded(self.total, budget)
        self.cap = m + headroom
        self.pow_table = np.array([p ** k for k in range(self.cap + 1)], dtype=np.int64)
        self.inv2 = pow(2, -1, self.P)
        self.eps = cfg.epsilon

    # -- index <-> row coordinates ------------------------------------------------

    def decode(self, idx: np.ndarray) -> np.ndarray:
        """Rows (N, 3, 2) of canonical lifts, entries in [0, P)."""
        P, Q, p = self.P, self.Q, self.p
        N = idx.shape[0]
        rows = np.zeros((N, 3, 2), dtype=np.int64)
        t1 = idx < P ** 3
        i1 = idx[t1]
        xa = i1 % P
        xb = (i1 // P) % P
        yb = i1 // (P * P)
        ya = (-(xa * xa - self.eps * xb * xb) * self.inv2) % P
        rows[t1, 0, 0] = 1
        rows[t1, 1, 0] = xa
        rows[t1, 1, 1] = xb
        rows[t1, 2, 0] = ya
        rows[t1, 2, 1] = yb
        t3 = ~t1
        i3 = idx[t3] - P ** 3
        ya = p * (i3 % Q)
        yb = p * ((i3 // Q) % Q)
        xb = p * (i3 // (Q * Q))
        xa = (-(ya * ya - self.eps * yb * yb) * self.inv2) % P
        rows[t3, 0, 0] = xa
        rows[t3, 0, 1] = xb
        rows[t3, 1, 0] = ya
        rows[t3, 1, 1] = yb
        rows[t3, 2, 0] = 1
        return rows

    def lift_row2(self, idx: np.ndarray) -> np.ndarray:
        """Second rows (N, 3, 2) of the canonical lifts (for torus cocycles)."""
        P = self.P
        rows = self.decode(idx)
        N = idx.shape[0]
        out = np.zeros((N, 3, 2), dtype=np.int64)
        t1 = idx < P ** 3
        # lift of (1, x, y) is J*u(x, y) with second row (0, 1, -conj x)
        out[t1, 1, 0] = 1
        out[t1, 2, 0] = (-rows[t1, 1, 0]) % P
        out[t1, 2, 1] = rows[t1, 1, 1]
        t3 = ~t1
        # lift of (x, y, 1) is uhat(-conj y, x) with second row (-conj y, 1, 0)
        out[t3, 0, 0] = (-rows[t3, 1, 0]) % P
        out[t3, 0, 1] = rows[t3, 1, 1]
        out[t3, 1, 0] = 1
        return out

    def lift_matrix(self, index: int) -> list[list[tuple[int, int]]]:
        """Canonical lift as a 3x3 python-int pair matrix (scalar path)."""
        row = self.decode(np.array([index], dtype=np.int64))[0]
        P = self.P
        (xa, xb) = int(row[1, 0]), int(row[1, 1])
        if index < P ** 3:
            x = (xa, xb)
            y = (int(row[2, 0]), int(row[2, 1]))
            return [[(0, 0), (0, 0), (1, 0)],
                    [(0, 0), (1, 0), ((-xa) % P, xb % P)],
                    [(1, 0), x, y]]
        x = (int(row[0, 0]), int(row[0, 1]))
        y = (xa, xb)
        return [[(1, 0), (0, 0), (0, 0)],
                [((-xa) % P, xb % P), (1, 0), (0, 0)],
                [x, y, (1, 0)]]

    # -- the vectorized action ------------------------------------------------------

    def _val_pows(self, w: np.ndarray) -> np.ndarray:
        """p^{v_p(w)} per element, capped at p^cap; w may be signed, 0 -> cap."""
        cappow = self.pow_table[self.cap]
        return np.gcd(np.abs(w), cappow)

    def act_rows(self, rows: np.ndarray, denom: int, gen: GenArrays | None,
                 want_unit: bool = False, want_b22_against=None, row_is2=False):
        """Normalize (rows . gen) / p^(denom + gen.d) to canonical points.

        Returns (tidx, vexp, extra) where vexp is the valuation exponent of the
        B-part diagonal entry b33 (so chi_1's power exponent on b11 is -vexp),
        and extra carries unit data when requested:
          want_unit -> (c0a, c0b): the unit part of the pivot scalar mod P.
        """
        if gen is not None:
            ra, rb = rows[:, :, 0], rows[:, :, 1]
            wa = ra @ gen.Ga + self.eps * (rb @ gen.Gb)
            wb = ra @ gen.Gb + rb @ gen.Ga
            denom = denom + gen.d
        else:
            wa = rows[:, :, 0].copy()
            wb = rows[:, :, 1].copy()
        ar = np.arange(wa.shape[0])
        if denom == 0:
            # integral action on integral rows: the pivot is the leftmost unit
            unit = ((wa % self.p) != 0) | ((wb % self.p) != 0)
            piv = np.argmax(unit, axis=1)
            if not np.all(unit[ar, piv]):
                raise PrecisionError("no unit entry in an integral landing row")
            Wa, Wb = wa, wb
            vexp = np.zeros(wa.shape[0], dtype=np.int16)
        else:
            # entry valuations via gcd with p^cap (power-valued)
            pv = np.minimum(self._val_pows(wa), self._val_pows(wb))
            # leftmost minimal valuation: lexicographic key 4*pv + column
            key = 4 * pv + np.arange(3, dtype=np.int64)
            piv = np.argmin(key, axis=1)
            pvp = pv[ar, piv]
            if np.any(pvp >= self.pow_table[self.cap]):
                raise PrecisionError("pivot valuation reached the working cap")
            # exact division of the whole row by the pivot p-power
            Wa = wa // pvp[:, None]
            Wb = wb // pvp[:, None]
            v = np.searchsorted(self.pow_table, pvp)
            vexp = (v - denom).astype(np.int16)
        ca = Wa[ar, piv] % self.P
        cb = Wb[ar, piv] % self.P
        nrm = (ca * ca - self.eps * cb * cb) % self.P
        inv = self._modinv(nrm)
        cca, ccb = ca * inv % self.P, (-cb) * inv % self.P   # c0^{-1} = conj(c0)/norm
        ta = (Wa * cca[:, None] + self.eps * Wb * ccb[:, None]) % self.P
        tb = (Wa * ccb[:, None] + Wb * cca[:, None]) % self.P
        tidx = self._encode(ta, tb, piv)
        extra = {}
        if want_unit:
            extra["c0"] = (ca, cb)
        if want_b22_against is not None:
            extra["b22"] = self._b22(want_b22_against, denom, tidx,
                                     pvp if gen is None else None)
        return tidx, vexp, extra

    def _modinv(self, n: np.ndarray) -> np.ndarray:
        """Inverse mod P of units, vectorized (Fermat mod p + Hensel lifting)."""
        p, P = self.p, self.P
        x = n % p
        # x^(p-2) mod p by square-and-multiply on a small fixed exponent
        e = p - 2
        acc = np.ones_like(x)
        base = x
        while e:
            if e & 1:
                acc = acc * base % p
            base = base * base % p
            e >>= 1
        x = acc
        k = 1
        while k < self.m:
            x = x * (2 - n * x % P) % P
            k *= 2
        return x % P

    def _encode(self, ta: np.ndarray, tb: np.ndarray, piv: np.ndarray) -> np.ndarray:
        P, Q, p = self.P, self.Q, self.p
        N = ta.shape[0]
        idx = np.empty(N, dtype=np.int64)
        m0 = piv == 0
        if np.any(m0):
            idx[m0] = ta[m0, 1] + P * tb[m0, 1] + P * P * tb[m0, 2]
        m2 = piv == 2
        if np.any(m2):
            ya, yb, xb = ta[m2, 1], tb[m2, 1], tb[m2, 0]
            idx[m2] = P ** 3 + (ya // p) + Q * (yb // p) + Q * Q * (xb // p)
        if not np.all(m0 | m2):
            raise PrecisionError("middle pivot in row normalization")
        return idx

    def _b22(self, src_row2_and_gen, denom, tidx, _):
        """b22 = B(row2(lift(src)) . gen, row2(lift(target))) / p^denom mod P."""
        r2g_a, r2g_b = src_row2_and_gen
        t2 = self.lift_row2(tidx)
        # B(u, v) = u1 conj(v3) + u2 conj(v2) + u3 conj(v1)
        va, vb = t2[:, ::-1, 0], -t2[:, ::-1, 1]
        ba = np.sum(r2g_a * va + self.eps * r2g_b * vb, axis=1)
        bb = np.sum(r2g_a * vb + r2g_b * va, axis=1)
        pd = int(self.pow_table[denom])
        if np.any(ba % pd) or np.any(bb % pd):
            raise PrecisionError("b22 extraction hit a non-integral value")
        return (ba // pd) % self.P, (bb // pd) % self.P

    def act_indices(self, idx: np.ndarray, gen: GenArrays,
                    need_unit=False, need_b22=False):
        rows = self.decode(idx)
        args = {}
        if need_b22:
            r2 = self.lift_row2(idx)
            ra, rb = r2[:, :, 0], r2[:, :, 1]
            r2g_a = ra @ gen.Ga + self.eps * (rb @ gen.Gb)
            r2g_b = ra @ gen.Gb + rb @ gen.Ga
            args["want_b22_against"] = (r2g_a, r2g_b)
        return self.act_rows(rows, 0, gen, want_unit=need_unit, **args)


# -- orbit partition with cocycle transport ------------------------------------------


class OrbitPartition:
    """K_n-orbit data on the level-m point set with character transport."""

    def __init__(self, engine, orbit, sexp, zexp, sizes, reps, consistent, order):
        self.engine = engine
        self.orbit = orbit            # int array: point -> orbit id
        self.sexp = sexp              # valuation exponent transport
        self.zexp = zexp              # root-of-unity exponent transport (or None)
        self.sizes = sizes
        self.reps = reps              # orbit id -> representative index (minimal)
        self.consistent = consistent  # orbit id -> bool
        self.order = order            # modulus of zexp
    @property
    def orbit_count(self) -> int:
        return len(self.sizes)

    @property
    def consistent_count(self) -> int:
        return int(sum(1 for c in self.consistent if c))


def orbit_partition(engine: PointEngine, gens: list[GenArrays],
                    unit_dlog=None, order: int = 1,
                    chunk: int = 1 << 20, on_progress=None) -> OrbitPartition:
    """BFS partition of all points under the generators, tracking the cocycle.

    unit_dlog, when given, maps the pivot unit pair (and second-diagonal unit
    pair) to a root exponent mod order: a callable (c0a, c0b, b22a, b22b) ->
    int array.  Generators of finite order make forward-only closure exact.
    """
    total = engine.total
    big = total > 1 << 25
    orbit = np.full(total, -1, dtype=np.int8 if big else np.int32)
    max_oid = 126 if big else 2 ** 31 - 2
    sexp = np.zeros(total, dtype=np.int8 if big else np.int16)
    track_z = unit_dlog is not None
    zexp = np.zeros(total, dtype=np.int16) if track_z else None
    sizes, reps, consistent = [], [], []
    seed_scan = 0
    oid = 0
    visited_total = 0
    while visited_total < total:
        # find the next seed: first unvisited index
        seed = None
        while seed_scan < total:
            stop = min(seed_scan + (chunk << 3), total)
            block = orbit[seed_scan:stop]
            hit = np.flatnonzero(block < 0)
            if hit.size:
                seed = seed_scan + int(hit[0])
                seed_scan = seed
                break
            seed_scan = stop
        assert seed is not None
        if oid > max_oid:
            raise PrecisionError("orbit id dtype overflow")
        orbit[seed] = oid
        sexp[seed] = 0
        if track_z:
            zexp[seed] = 0
        ok = True
        size = 1
        frontier = np.array([seed], dtype=np.int64)
        while frontier.size:
            new_parts = []
            for lo in range(0, frontier.size, chunk):
                src = frontier[lo:lo + chunk]
                rows = engine.decode(src)
                r2 = engine.lift_row2(src) if track_z else None
                for gen in gens:
                    args = {}
                    if track_z:
                        ra, rb = r2[:, :, 0], r2[:, :, 1]
                        args["want_b22_against"] = (
                            ra @ gen.Ga + engine.eps * (rb @ gen.Gb),
                            ra @ gen.Gb + rb @ gen.Ga)
                    tidx, vexp, extra = engine.act_rows(
                        rows, 0, gen, want_unit=track_z, **args)
                    # value(src) = chi(B) value(tgt): sexp[tgt] = sexp[src] - (-vexp)
                    tse = sexp[src].astype(np.int16) + vexp
                    if track_z:
                        c0a, c0b = extra["c0"]
                        b22a, b22b = extra["b22"]
                        zedge = unit_dlog(c0a, c0b, b22a, b22b)
                        tze = (zexp[src] + zedge) % order
                    known = orbit[tidx] >= 0
                    if np.any(known):
                        kt = tidx[known]
                        if np.any(orbit[kt] != oid):
                            raise AssertionError("cross-orbit edge: generators not closed")
                        if ok and np.any(sexp[kt] != tse[known]):
                            ok = False
                        if track_z and ok and np.any(zexp[kt] != tze[known]):
                            ok = False
                    fresh = ~known
                    if np.any(fresh):
                        ft, fs = tidx[fresh], tse[fresh]
                        # first-touch dedup within the chunk
                        ft_u, first = np.unique(ft, return_index=True)
                        still = orbit[ft_u] < 0  # all True, kept for clarity
                        orbit[ft_u] = oid
                        fsv = fs[first]
                        if np.any(np.abs(fsv) > 100):
                            raise PrecisionError("transport exponent overflow")
                        sexp[ft_u] = fsv.astype(sexp.dtype)
                        if track_z:
                            zexp[ft_u] = tze[fresh][first]
                        # duplicates suppressed above may carry conflicting transport
                        if ft.size != ft_u.size:
                            dup_se = sexp[ft].astype(np.int16)
                            if ok and np.any(dup_se != fs):
                                ok = False
                            if track_z and ok and np.any(zexp[ft] != tze[fresh]):
                                ok = False
                        size += ft_u.size
                        new_parts.append(ft_u)
            frontier = np.concatenate(new_parts) if new_parts else np.array([], dtype=np.int64)
        sizes.append(size)
        reps.append(seed)
        consistent.append(ok)
        visited_total += size
        if on_progress:
            on_progress(oid, size, visited_total, total)
        oid += 1
    return OrbitPartition(engine, orbit, sexp, zexp, sizes, reps, consistent, order)
