"""Weight constants, bump conditions, cube functionals and symbol norms.

Every supremum runs over the cubes of the domain's configured grids
(``Domain.shifts``) that lie inside the box, and every result carries the id
of the cube attaining it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exponent import ExponentFunction, exponent_from_delta
from .gphi import GPhiFunction, Power, cube_norms
from .grid import DyadicCube, Domain, GridFunction, LevelView, level_view, level_views, tree_sum


class WeightError(ValueError):
    pass


DIVERGENCE_GROWTH = 1.5  # per +2 resolution levels


def check_weight(w: GridFunction) -> GridFunction:
    v = w.values
    if not np.isfinite(v).all() or (v <= 0).any():
        raise WeightError("a weight must be finite and strictly positive on every cell")
    return w


@dataclass(frozen=True)
class ScanResult:
    """A fitted supremum over cubes and the cube attaining it."""

    value: float
    witness: str

    def __float__(self):
        return self.value


def _update(best: ScanResult, vals: np.ndarray, view: LevelView) -> ScanResult:
    if vals.size == 0:
        return best
    nan = np.isnan(vals)
    if nan.any():
        i = int(np.argmax(nan))
        raise WeightError(f"undefined ratio on cube {view.cube(i).id}")
    i = int(np.argmax(vals))
    if vals[i] > best.value or not best.witness:
        return ScanResult(float(vals[i]), view.cube(i).id)
    return best


def _views(dom: Domain, kmin=None, kmax=None) -> list[LevelView]:
    return level_views(dom, kmin, kmax)


def normalized_norm(psi: GPhiFunction, g: np.ndarray | None, view: LevelView) -> np.ndarray:
    """``||chi_Q g||_Psi / ||chi_Q||_Psi`` per cube of ``view``."""
    num = cube_norms(psi, g, view)
    den = cube_norms(psi, None, view)
    return num / den


def block_means(values: np.ndarray, view: LevelView) -> np.ndarray:
    return tree_sum(view.blocks(values), view.domain.dimension) / view.cells_per_cube


def block_oscillations(values: np.ndarray, view: LevelView) -> np.ndarray:
    """``(1/|Q|) int_Q |b - b_Q|`` per cube."""
    n = view.domain.dimension
    B = view.blocks(values)
    m = tree_sum(B, n) / view.cells_per_cube
    dev = np.abs(B - m.reshape((-1,) + (1,) * n))
    return tree_sum(dev, n) / view.cells_per_cube


# --------------------------------------------------------------------------- cube functionals


class CubeFunctional:
    def values(self, view: LevelView) -> np.ndarray:
        raise NotImplementedError

    def value(self, q: DyadicCube, dom: Domain | None = None) -> float:
        dom = dom or self.domain
        view = level_view(dom, q.level, q.shift)
        return float(self.values(view)[view.index_of(q.start)])


@dataclass(frozen=True)
class Constant(CubeFunctional):
    c: float = 1.0
    domain: Domain | None = None

    def __post_init__(self):
        if not self.c > 0:
            raise WeightError("a(Q) must be positive")

    def values(self, view):
        return np.full(view.ncubes, float(self.c))


@dataclass(frozen=True)
class PowerMeasure(CubeFunctional):
    """``a(Q) = |Q|^(delta/n)``."""

    delta: float
    domain: Domain | None = None

    def values(self, view):
        n = view.domain.dimension
        return np.full(view.ncubes, view.cube_measure ** (self.delta / n))


@dataclass(frozen=True, eq=False)
class VarNorm(CubeFunctional):
    """``a(Q) = ||chi_Q||_{n/delta(.)}``; delta = 0 cells use the L-infinity branch."""

    delta: object  # GridFunction or scalar
    domain: Domain | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        dom = self.domain or getattr(self.delta, "domain", None)
        if dom is None:
            raise WeightError("VarNorm needs a domain")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "_psi", Power(exponent_from_delta(self.delta, dom)))

    @property
    def exponent(self) -> ExponentFunction:
        return exponent_from_delta(self.delta, self.domain)

    def values(self, view):
        key = (view.level, view.shift)
        if key not in self._cache:
            self._cache[key] = cube_norms(self._psi, None, view)
        return self._cache[key]


def _ancestor_index(child: LevelView, parent: LevelView) -> np.ndarray:
    """Index in ``parent`` of the ancestor of each cube of ``child`` (-1 if outside the box)."""
    coords = np.indices(child.counts).reshape(len(child.counts), -1)
    idx = np.zeros(coords.shape[1], dtype=np.int64)
    ok = np.ones(coords.shape[1], dtype=bool)
    for ax in range(len(child.counts)):
        start = child.offsets[ax] + coords[ax] * child.side
        rel = start - parent.offsets[ax]
        i = np.floor_divide(rel, parent.side)
        ok &= (rel >= 0) & (i < parent.counts[ax])
        idx = idx * parent.counts[ax] + np.clip(i, 0, parent.counts[ax] - 1)
    return np.where(ok, idx, -1)


def t_infty_constant(a: CubeFunctional, dom: Domain) -> ScanResult:
    """max over nested pairs ``Q' ⊆ Q`` of ``a(Q')/a(Q)`` (so never below 1)."""
    best = ScanResult(0.0, "")
    for sh in dom.shifts:
        views = [v for v in (level_view(dom, k, sh) for k in range(dom.kmin, dom.kmax + 1)) if v.ncubes]
        vals = [a.values(v) for v in views]
        for i, child in enumerate(views):
            best = _update(best, vals[i] / vals[i], child)
            for j in range(i + 1, len(views)):
                anc = _ancestor_index(child, views[j])
                ok = anc >= 0
                if not ok.any():
                    continue
                r = np.where(ok, vals[i] / vals[j][np.where(ok, anc, 0)], 0.0)
                best = _update(best, r, child)
    return best


# --------------------------------------------------------------------------- Muckenhoupt-type constants


def _power(p) -> Power:
    return Power(p)


def ap_constant(w: GridFunction, p: ExponentFunction) -> ScanResult:
    """``sup_Q ||chi_Q w||_p ||chi_Q w^-1||_p' / |Q|``."""
    check_weight(w)
    dom = w.domain
    P, Pc = _power(p), _power(p.conjugate())
    wv, wi = w.values, 1.0 / w.values
    best = ScanResult(0.0, "")
    for view in _views(dom):
        a = cube_norms(P, wv, view)
        b = cube_norms(Pc, wi, view)
        _finite(a, b, view)
        best = _update(best, a * b / view.cube_measure, view)
    return best


def apq_constant(w: GridFunction, p: ExponentFunction, q: ExponentFunction) -> ScanResult:
    """``sup_Q (||chi_Q w||_q/||chi_Q||_q)(||chi_Q w^-1||_p'/||chi_Q||_p')``."""
    check_weight(w)
    dom = w.domain
    Q, Pc = _power(q), _power(p.conjugate())
    best = ScanResult(0.0, "")
    for view in _views(dom):
        a = normalized_norm(Q, w.values, view)
        b = normalized_norm(Pc, 1.0 / w.values, view)
        _finite(a, b, view)
        best = _update(best, a * b, view)
    return best


def _finite(a, b, view):
    bad = ~np.isfinite(a) | ~np.isfinite(b)
    if bad.any():
        i = int(np.argmax(bad))
        raise WeightError(f"norm overflow on cube {view.cube(i).id}")


def bump_constant_power(
    w: GridFunction,
    v: GridFunction,
    p: ExponentFunction,
    S: float,
    R: float,
    a: CubeFunctional,
    m: int,
) -> ScanResult:
    """``sup_Q a(Q)^m (||chi_Q w||_{Sp}/||chi_Q||_{Sp}) (||chi_Q v^-1||_{Rp'}/||chi_Q||_{Rp'})``."""
    pc = p.conjugate()
    if not S > p.p_plus / p.p_minus:
        raise WeightError(f"S = {S} must exceed p+/p- = {p.p_plus / p.p_minus}")
    if not R > pc.p_plus / pc.p_minus:
        raise WeightError(f"R = {R} must exceed (p')+/(p')- = {pc.p_plus / pc.p_minus}")
    return bump_constant_gphi(w, v, _power(p.scale(S)), _power(pc.scale(R)), a, m)


def bump_constant_gphi(
    w: GridFunction,
    v: GridFunction,
    E: GPhiFunction,
    A: GPhiFunction,
    a: CubeFunctional,
    m: int,
) -> ScanResult:
    """``sup_Q a(Q)^m (||chi_Q w||_E/||chi_Q||_E)(||chi_Q v^-1||_A/||chi_Q||_A)``.

    With ``a = VarNorm(delta)`` this is the two-weight condition with the
    factor ``||chi_Q||_{n/delta}^m``.
    """
    check_weight(w)
    check_weight(v)
    dom = w.domain
    best = ScanResult(0.0, "")
    for view in _views(dom):
        x = normalized_norm(E, w.values, view)
        y = normalized_norm(A, 1.0 / v.values, view)
        _finite(x, y, view)
        best = _update(best, a.values(view) ** m * x * y, view)
    return best


def extremal_v(w: GridFunction, E: GPhiFunction, a: CubeFunctional, m: int) -> GridFunction:
    """``v(x) = max over configured dyadic cubes Q containing x of a(Q)^m ||chi_Q w||_E/||chi_Q||_E``.

    With this v every cube satisfies ``v >= a(Q)^m <w>_E`` on Q, so the bump
    constant of the pair (w, v) is at most one.
    """
    check_weight(w)
    dom = w.domain
    out = np.zeros(dom.shape)
    for view in _views(dom):
        vals = a.values(view) ** m * normalized_norm(E, w.values, view)
        out = np.fmax(out, view.spread(vals, fill=0.0))
    return GridFunction(dom, out)


# --------------------------------------------------------------------------- openness


@dataclass(frozen=True)
class OpennessResult:
    s: float
    r: float
    u: ExponentFunction
    v: ExponentFunction
    ap_s: float  # [w^(1/s)]_{A_{sp}}
    ap_r: float  # [w^(-1/r)]_{A_{rq'}}
    p_over_u_minus: float
    qc_over_vc_minus: float
    admissible_s: tuple
    admissible_r: tuple


def _candidates(lo: float, hi: float, count: int = 64) -> np.ndarray:
    """Points in (lo, hi), geometrically clustered at both ends, descending."""
    half = count // 2
    gaps = np.geomspace(1e-4, 0.5, half) * (hi - lo)
    pts = np.concatenate([lo + gaps, hi - gaps])
    return np.unique(pts)[::-1]


def _admissible_run(cands: np.ndarray, ok_fn) -> list[tuple[float, float]]:
    """Scan descending from the top; keep the contiguous admissible run."""
    run = []
    for c in cands:
        val = ok_fn(c)
        if val is None:
            if run:
                break
            continue
        run.append((float(c), val))
    return run


def openness_exponents(w: GridFunction, p: ExponentFunction, q: ExponentFunction, cap: float, count: int = 64) -> OpennessResult:
    """Search ``s in (1/p-, 1)`` and ``r in (1/(q')-, 1)`` with
    ``[w^(1/s)]_{A_{sp}} <= cap`` and ``[w^(-1/r)]_{A_{rq'}} <= cap``.

    Candidates are scanned from the top end down; the smallest value of the
    admissible run starting near 1 is returned, since a smaller exponent gives
    the larger margin in ``p/u = p(1 - s) + 1``.
    """
    check_weight(w)
    if not p.p_minus > 1:
        raise WeightError("openness needs p- > 1")
    if not q.p_plus < math.inf:
        raise WeightError("openness needs q+ < inf")
    qc = q.conjugate()

    def test(weight_fn, expo_fn):
        def ok(s):
            try:
                c = ap_constant(weight_fn(s), expo_fn(s)).value
            except (WeightError, ValueError):
                return None
            return c if c <= cap else None
        return ok

    run_s = _admissible_run(
        _candidates(1.0 / p.p_minus, 1.0, count),
        test(lambda s: w.map(lambda x: x ** (1.0 / s)), lambda s: p.scale(s)),
    )
    run_r = _admissible_run(
        _candidates(1.0 / qc.p_minus, 1.0, count),
        test(lambda r: w.map(lambda x: x ** (-1.0 / r)), lambda r: qc.scale(r)),
    )
    if not run_s:
        raise WeightError(f"no admissible s below the cap {cap}")
    if not run_r:
        raise WeightError(f"no admissible r below the cap {cap}")
    s, cs = run_s[-1]
    r, cr = run_r[-1]
    dom = p.domain
    uc = p.scale(s).conjugate().values / s  # u' = (1/s)(sp)'
    u = ExponentFunction(dom, _conj_arr(uc))
    v = ExponentFunction(dom, qc.scale(r).conjugate().values / r)  # v = (1/r)(rq')'
    p_over_u = float((p.values / u.values).min())
    qc_over_vc = float((qc.values / v.conjugate().values).min())
    return OpennessResult(
        s, r, u, v, cs, cr, p_over_u, qc_over_vc,
        tuple(x for x, _ in run_s), tuple(x for x, _ in run_r),
    )


def _conj_arr(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v == 1.0, np.inf, np.where(np.isinf(v), 1.0, v / (v - 1.0)))


# --------------------------------------------------------------------------- symbols


def lipschitz_a_norm(b: GridFunction, a: CubeFunctional) -> ScanResult:
    """``sup_Q (1/(a(Q)|Q|)) int_Q |b - b_Q|``."""
    best = ScanResult(0.0, "")
    for view in _views(b.domain):
        best = _update(best, block_oscillations(b.values, view) / a.values(view), view)
    return best


def bmo_eta_delta_norm(b: GridFunction, eta: GridFunction, delta) -> float:
    return bmo_eta_delta_scan(b, eta, delta).value


def bmo_eta_delta_scan(b: GridFunction, eta: GridFunction, delta) -> ScanResult:
    """``sup_Q int_Q |b - b_Q| / (||chi_Q||_{n/delta} eta(Q))`` with ``eta(Q) = int_Q eta``."""
    check_weight(eta)
    dom = b.domain
    a = VarNorm(delta, dom)
    best = ScanResult(0.0, "")
    for view in _views(dom):
        osc_int = block_oscillations(b.values, view) * view.cube_measure
        eta_q = tree_sum(view.blocks(eta.values), dom.dimension) * dom.cell_measure
        best = _update(best, osc_int / (a.values(view) * eta_q), view)
    return best


def symbol_pointwise_bound(b: GridFunction, q: DyadicCube, delta, k: int = 3) -> float:
    """max over cells z of ``kQ`` (clipped to the box) of ``|b(z) - b_Q| / ||chi_Q||_{n/delta}``."""
    dom = b.domain
    J = dom.J
    s = q.side_cells(J)
    X = b.values[q.slices(J)]
    bq = float(tree_sum(X[None, ...], dom.dimension)[0]) / X.size
    grow = (k - 1) * s // 2
    region = tuple(
        slice(max(0, a - grow), min(dom.cells_per_axis, a + s + grow)) for a in q.start
    )
    num = float(np.abs(b.values[region] - bq).max())
    return num / VarNorm(delta, dom).value(q)


def symbol_pointwise_sweep(b: GridFunction, delta, k: int = 3) -> ScanResult:
    """Largest :func:`symbol_pointwise_bound` over all configured cubes."""
    dom = b.domain
    a = VarNorm(delta, dom)
    best = ScanResult(0.0, "")
    for view in _views(dom):
        means = block_means(b.values, view)
        norms = a.values(view)
        vals = np.empty(view.ncubes)
        s = view.side
        grow = (k - 1) * s // 2
        for i in range(view.ncubes):
            q = view.cube(i)
            region = tuple(slice(max(0, st - grow), min(dom.cells_per_axis, st + s + grow)) for st in q.start)
            vals[i] = np.abs(b.values[region] - means[i]).max() / norms[i]
        best = _update(best, vals, view)
    return best


def lipschitz_power_check(b: GridFunction, a: CubeFunctional, p: ExponentFunction, k: int) -> ScanResult:
    """max over cubes of ``(||chi_Q (b - b_Q)^k||_p / ||chi_Q||_p) / a(Q)^k``."""
    dom = b.domain
    P = _power(p)
    n = dom.dimension
    best = ScanResult(0.0, "")
    for view in _views(dom):
        B = view.blocks(b.values)
        m = tree_sum(B, n) / view.cells_per_cube
        dev = np.abs(B - m.reshape((-1,) + (1,) * n)) ** k
        num = _rows_norm(P, dev, view)
        den = cube_norms(P, None, view)
        best = _update(best, num / den / a.values(view) ** k, view)
    return best


def _rows_norm(psi: GPhiFunction, blocks: np.ndarray, view: LevelView) -> np.ndarray:
    return cube_norms(psi, view.to_cells(blocks), view)


# --------------------------------------------------------------------------- J sweeps


def divergent(values: Sequence[float], Js: Sequence[int], growth: float = DIVERGENCE_GROWTH) -> bool:
    """True if some consecutive pair grows by at least ``growth`` per +2 levels."""
    for (a, ja), (b, jb) in zip(zip(values, Js), list(zip(values, Js))[1:]):
        if not math.isfinite(b):
            return True
        if a > 0 and b / a >= growth ** ((jb - ja) / 2):
            return True
    return False
