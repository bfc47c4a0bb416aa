"""Finite level-m model of the flag space B\\G and subgroup actions on it.

Points are canonical primitive isotropic rows over o_E/p_E^m (see engine).
This module exposes the spec-level operations: canonicalization of a maximal
compact element to its point, full point enumeration with the budget guard,
the right action with character cocycle, orbit partitions under subgroup
generator families, and the generation checks for the structure lemma.
"""

from __future__ import annotations

import random

import numpy as np

from u21.localfield import FieldConfig, PrecisionError
from u21 import group as G
from u21.engine import (
    PointEngine, GenArrays, prepare_generator, orbit_partition, OrbitPartition,
    BudgetExceeded, point_count,
)

DEFAULT_BUDGET = 2 * 10 ** 8


class FlagPoint:
    """A canonical point of the level-m flag model."""

    __slots__ = ("cfg", "level", "index")

    def __init__(self, cfg: FieldConfig, level: int, index: int):
        self.cfg = cfg
        self.level = level
        self.index = int(index)

    @property
    def canonical(self) -> bytes:
        return b"%d:%d:%d" % (self.cfg.p, self.level, self.index)

    def __eq__(self, other):
        return (isinstance(other, FlagPoint)
                and (self.cfg, self.level, self.index)
                == (other.cfg, other.level, other.index))

    def __hash__(self):
        return hash((self.cfg.p, self.level, self.index))

    def __repr__(self):
        return f"FlagPoint(m={self.level}, i={self.index})"


_engines: dict = {}


def get_engine(cfg: FieldConfig, m: int, headroom: int = 8,
               budget: int | None = DEFAULT_BUDGET) -> PointEngine:
    key = (cfg.p, cfg.epsilon, m, headroom)
    eng = _engines.get(key)
    if eng is None:
        eng = PointEngine(cfg, m, headroom=headroom, budget=budget)
        _engines[key] = eng
    elif budget is not None and eng.total > budget:
        raise BudgetExceeded(eng.total, budget)
    return eng


def element_rows_exact(g: G.GroupElement, cap_digits: int, rows=(0, 1, 2)):
    """Selected rows of g as signed integer pair arrays with a p-power denominator."""
    cfg = g.cfg
    vals = [e.val for r in g.rows for e in r if not e.is_zero()]
    d = max(0, -min(vals)) if vals else 0
    mod = cfg.p ** cap_digits
    out = np.zeros((len(rows), 3, 2), dtype=np.int64)
    for oi, i in enumerate(rows):
        for j in range(3):
            e = g.rows[i][j]
            if e.is_zero():
                continue
            shift = e.val + d
            if e.window + shift < cap_digits:
                raise PrecisionError("entry window too small for exact row extraction")
            s = cfg.p ** shift
            out[oi, j, 0] = e.a * s % mod
            out[oi, j, 1] = e.b * s % mod
    return out, d


def canonicalize(k: G.GroupElement, m: int, headroom: int = 8) -> FlagPoint:
    """The point of B cap K0 \\ K0 mod Gamma(m) through the bottom row of k."""
    eng = get_engine(k.cfg, m, headroom)
    rows, d = element_rows_exact(k, eng.cap, rows=(2,))
    tidx, _, _ = eng.act_rows(rows, d, None)
    return FlagPoint(k.cfg, m, int(tidx[0]))


def enumerate_points(cfg: FieldConfig, m: int,
                     budget: int | None = DEFAULT_BUDGET) -> int:
    """Cardinality of the level-m model, with the explicit budget refusal."""
    n = point_count(cfg.q, m)
    if budget is not None and n > budget:
        raise BudgetExceeded(n, budget)
    return n


def brute_force_residue_lines(cfg: FieldConfig) -> int:
    """Independent oracle: isotropic lines in the hermitian plane over k_E."""
    p, eps = cfg.p, cfg.epsilon
    els = [(a, b) for a in range(p) for b in range(p)]

    def mul(u, v):
        return ((u[0] * v[0] + eps * u[1] * v[1]) % p, (u[0] * v[1] + u[1] * v[0]) % p)

    count = 0
    for v1 in els:
        for v2 in els:
            for v3 in els:
                if v1 == v2 == v3 == (0, 0):
                    continue
                h = ((mul(v1, (v3[0], -v3[1]))[0] + mul(v2, (v2[0], -v2[1]))[0]
                      + mul(v3, (v1[0], -v1[1]))[0]) % p,
                     (mul(v1, (v3[0], -v3[1]))[1] + mul(v2, (v2[0], -v2[1]))[1]
                      + mul(v3, (v1[0], -v1[1]))[1]) % p)
                if h == (0, 0):
                    count += 1
    return count // (p * p - 1)


def act(x: FlagPoint, g: G.GroupElement, chi=None, headroom: int = 8):
    """Right translation of a point; returns (point, cocycle value of the B-part).

    With chi None the cocycle value is the valuation exponent pair (1 means
    trivial); with a character it is the exact scalar chi(B).
    """
    eng = get_engine(x.cfg, x.level, headroom)
    lift = eng.lift_matrix(x.index)
    grows, d = element_rows_exact(g, eng.cap)
    prod = _pair_matmul(np.array(lift, dtype=np.int64).reshape(1, 3, 3, 2), grows, eng.eps)
    tidx, vexp, extra = eng.act_rows(prod[:, 2], d, None, want_unit=chi is not None)
    target = FlagPoint(x.cfg, x.level, int(tidx[0]))
    if chi is None:
        return target, 1 if int(vexp[0]) + d == d else ("val", int(vexp[0]))
    b22 = _b22_scalar(eng, prod[0, 1], d, target)
    value = chi.eval_bpart(-int(vexp[0]), (int(extra["c0"][0][0]), int(extra["c0"][1][0])),
                           b22, eng.P)
    return target, value


def _pair_matmul(A, B, eps):
    """(N,3,3,2) x (3,3,2) -> (N,3,3,2) integer pair matrix product."""
    Aa, Ab = A[..., 0], A[..., 1]
    Ba, Bb = B[..., 0], B[..., 1]
    Ca = np.einsum("nik,kj->nij", Aa, Ba) + eps * np.einsum("nik,kj->nij", Ab, Bb)
    Cb = np.einsum("nik,kj->nij", Aa, Bb) + np.einsum("nik,kj->nij", Ab, Ba)
    return np.stack([Ca, Cb], axis=-1)


def _b22_scalar(eng: PointEngine, row2_pairs, denom: int, target: FlagPoint):
    """b22 of the B-part against the canonical lift of the target point."""
    t2 = eng.lift_row2(np.array([target.index], dtype=np.int64))[0]
    ua, ub = row2_pairs[:, 0], row2_pairs[:, 1]
    va = t2[::-1, 0]
    vb = -t2[::-1, 1]
    ba = int(np.sum(ua * va + eng.eps * ub * vb))
    bb = int(np.sum(ua * vb + ub * va))
    pd = eng.p ** denom
    if ba % pd or bb % pd:
        raise PrecisionError("b22 extraction hit a non-integral value")
    return (ba // pd) % eng.P, (bb // pd) % eng.P


# -- subgroup generator preparation -----------------------------------------------


def kn_gen_arrays(cfg: FieldConfig, n: int, eng: PointEngine) -> list[GenArrays]:
    window = eng.cap + n + 2
    return [prepare_generator(g, eng.cap, name)
            for name, g in G.kn_generators(cfg, n, window)]


def orbits(cfg: FieldConfig, m: int, n: int | None = None,
           generators: list[G.GroupElement] | None = None,
           chi=None, budget: int | None = DEFAULT_BUDGET,
           headroom: int = 8, on_progress=None) -> OrbitPartition:
    """Orbit partition of level-m points under K_n (or explicit generators)."""
    eng = get_engine(cfg, m, headroom, budget)
    if generators is not None:
        gens = [prepare_generator(g, eng.cap, f"g{i}") for i, g in enumerate(generators)]
    else:
        gens = kn_gen_arrays(cfg, n, eng)
    unit_dlog, order = (None, 1)
    if chi is not None and not chi.is_unramified:
        unit_dlog, order = chi.engine_dlog(eng)
    return orbit_partition(eng, gens, unit_dlog=unit_dlog, order=order,
                           on_progress=on_progress)


# -- generation checks (structure lemma) -------------------------------------------


class GenerationReport:
    def __init__(self, ok: bool, method: str, detail: str = "",
                 closure_sizes=None):
        self.ok = ok
        self.method = method
        self.detail = detail
        self.closure_sizes = closure_sizes

    def __repr__(self):
        return f"GenerationReport(ok={self.ok}, method={self.method}, {self.detail!r})"


def _closure_keys(cfg: FieldConfig, gens: list[G.GroupElement], m: int,
                  cap: int) -> set | None:
    """Hash-BFS closure of integral generators mod Gamma(m); None if cap exceeded."""
    mod = cfg.p ** m

    def key(g):
        out = []
        for i in range(3):
            for j in range(3):
                e = g.rows[i][j]
                if e.is_zero():
                    out.extend((0, 0))
                else:
                    if e.val < 0:
                        raise PrecisionError("closure requires integral elements")
                    s = cfg.p ** e.val
                    out.extend((e.a * s % mod, e.b * s % mod))
        return tuple(out)

    seen = {}
    frontier = []
    ident = G.identity(cfg, m + 4)
    seen[key(ident)] = ident
    frontier.append(ident)
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g
                k = key(y)
                if k not in seen:
                    if len(seen) >= cap:
                        return None
                    seen[k] = y
                    nxt.append(y)
        frontier = nxt
    return set(seen)


def generation_check(cfg: FieldConfig, n: int, generators=None,
                     samples: int = 8, seed: int = 1729,
                     closure_cap: int = 10 ** 5,
                     window: int | None = None) -> GenerationReport:
    """Does the structure-lemma family (K_n cap H plus integral unipotents)
    generate K_n?

    Two mechanisms: a hash-BFS closure-size comparison in a small residue
    quotient when every element involved is integral and the closure fits the
    cap, and constructive factorization certificates for sampled elements of
    K_n otherwise (each sample is rewritten as a word in the family and the
    word is re-multiplied and checked).  Supplying explicit generators forces
    the closure mechanism (used for negative controls).
    """
    w = window or (cfg.default_window + 2 * n + 4)
    if generators is not None:
        ours = _closure_keys(cfg, generators, 1, closure_cap)
        full = _closure_keys(cfg, [g for _, g in G.kn_generators(cfg, 0, w)], 1,
                             closure_cap)
        if ours is None and full is None:
            return GenerationReport(False, "closure", "both closures exceeded cap")
        if ours is None or full is None:
            return GenerationReport(False, "closure",
                                    "closure sizes differ (one exceeded cap)",
                                    (len(ours or ()), len(full or ())))
        ok = len(ours) == len(full)
        return GenerationReport(ok, "closure",
                                f"sizes {len(ours)} vs {len(full)}",
                                (len(ours), len(full)))

    detail = []
    closure_sizes = None
    if n == 0:
        h_gens, u_gens = G.lemma_generating_pair(cfg, 0, w)
        fam = [g for _, g in h_gens + u_gens]
        ours = _closure_keys(cfg, fam, 1, closure_cap)
        full = _closure_keys(cfg, [g for _, g in G.kn_generators(cfg, 0, w)], 1,
                             closure_cap)
        expected = cfg.q ** 3 * (cfg.q + 1) * (cfg.q ** 2 - 1) * (cfg.q ** 3 + 1)
        if ours is None or full is None or len(ours) != len(full) or len(ours) != expected:
            return GenerationReport(False, "closure+certificates",
                                    f"level-1 closure mismatch: "
                                    f"{ours and len(ours)} vs {full and len(full)}")
        closure_sizes = (len(ours), len(full))
        detail.append(f"residue closure size {len(ours)} matches the group order")

    rng = random.Random(seed)
    gens = G.kn_generators(cfg, n, w)
    for trial in range(samples):
        g = G.identity(cfg, w)
        for _ in range(rng.randrange(4, 9)):
            _, h = gens[rng.randrange(len(gens))]
            g = g * (h if rng.random() < 0.8 else h.inverse())
        if not G.SubgroupSpec("Kn", n).contains(g):
            return GenerationReport(False, "certificates",
                                    f"sample {trial} escaped K_{n} (internal error)")
        try:
            steps = G.factor_kn_element(g, n)
        except (AssertionError, PrecisionError) as exc:
            return GenerationReport(False, "certificates",
                                    f"sample {trial} failed to factor: {exc}")
        if not G.verify_factorization(g, steps, n, check_depth=max(4, n + 3)):
            return GenerationReport(False, "certificates",
                                    f"sample {trial} word does not re-multiply")
    detail.append(f"{samples} factorization certificates verified")
    return GenerationReport(True, "closure+certificates" if n == 0 else "certificates",
                            "; ".join(detail), closure_sizes)
