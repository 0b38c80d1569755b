"""Generalized Phi-functions, modulars and Luxemburg norms.

A :class:`GPhiFunction` evaluates ``Psi(x, t)`` for arrays ``t`` laid out
like the grid cells they belong to.  Cell-dependent parameters are exposed
through :meth:`GPhiFunction.params`; callers slice them with the same
selector as the data (whole domain, one cube, or all cubes of a level), so a
single vectorized bisection computes many norms at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exponent import ExponentFunction
from .grid import Domain, GridFunction, LevelView, level_views, tree_sum

DEFAULT_RTOL = 1e-12
MAX_BISECTION = 200
_MAX_EXPANSION = 2100


class GPhiError(ValueError):
    pass


Params = dict  # name -> scalar or array laid out like the cells


def _select(P: Params, fn: Callable[[np.ndarray], np.ndarray]) -> Params:
    return {k: (fn(v) if isinstance(v, np.ndarray) else v) for k, v in P.items()}


class GPhiFunction:
    """Base class; subclasses implement :meth:`phi` and :meth:`params`."""

    domain: Domain | None = None

    def params(self) -> Params:
        return {}

    def phi(self, t: np.ndarray, P: Params) -> np.ndarray:
        raise NotImplementedError

    def knee(self, P: Params):
        """Per-cell value above which Psi jumps to +inf, or None."""
        return None

    def inverse(self, t: np.ndarray, P: Params) -> np.ndarray:
        return _bisect_inverse(self, t, P)

    def conjugate(self) -> "GPhiFunction":
        return numeric_conjugate(self)

    # convenience ------------------------------------------------------------
    def cell_params(self, dom: Domain) -> Params:
        """Parameters broadcast to the full cell array of ``dom``."""
        P = self.params()
        out = {}
        for k, v in P.items():
            if isinstance(v, np.ndarray):
                if v.shape != dom.shape:
                    raise GPhiError(f"parameter {k} has shape {v.shape}, domain {dom.shape}")
                out[k] = v
            else:
                out[k] = np.full(dom.shape, v, dtype=np.result_type(v))
        return out

    def __call__(self, t, cell=None):
        """Psi at one cell (index tuple) or, for x-independent families, anywhere."""
        t = np.asarray(t, dtype=float)
        P = self.params()
        if cell is not None:
            P = {k: (v[tuple(cell)] if isinstance(v, np.ndarray) else v) for k, v in P.items()}
        elif any(isinstance(v, np.ndarray) for v in P.values()):
            raise GPhiError("this function depends on x; pass a cell index")
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = self.phi(t, P)
        return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------- families


def _as_cells(p, dom: Domain | None):
    if isinstance(p, ExponentFunction):
        return p.values, p.domain
    if isinstance(p, GridFunction):
        return p.values, p.domain
    if isinstance(p, np.ndarray):
        return p, dom
    return float(p), dom


@dataclass(frozen=True, eq=False)
class Power(GPhiFunction):
    """``coef * t^p(x)``; where ``p(x) = inf`` it is ``inf * 1{t > coef}``."""

    p: object  # ExponentFunction, cell array or scalar
    coef: object = 1.0
    domain: Domain | None = None

    def __post_init__(self):
        p, dom = _as_cells(self.p, self.domain)
        c, dom = _as_cells(self.coef, dom)
        if np.any(np.asarray(p) < 1):
            raise GPhiError("Power exponent must be >= 1")
        object.__setattr__(self, "_p", p)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "domain", dom)

    def params(self) -> Params:
        return {"p": self._p, "c": self._c}

    def phi(self, t, P):
        p, c = P["p"], P["c"]
        with np.errstate(over="ignore", invalid="ignore"):
            finite = c * np.power(t, np.where(np.isinf(p), 1.0, p))
            jump = np.where(t > c, np.inf, 0.0)
        return np.where(np.isinf(p), jump, finite)

    def knee(self, P):
        p, c = P["p"], P["c"]
        if not np.any(np.isinf(p)):
            return None
        return np.where(np.isinf(p), c, np.inf)

    def inverse(self, t, P):
        p, c = P["p"], P["c"]
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            finite = np.power(t / c, 1.0 / np.where(np.isinf(p), 1.0, p))
        jump = np.where(t > 0, c, 0.0)
        return np.where(np.isinf(p), jump, finite)

    def conjugate(self) -> "Power":
        """Closed form ``(p-1) p^(-p') c^(1-p') u^(p')``; p=1 and p=inf swap."""
        p, c = np.asarray(self._p, dtype=float), np.asarray(self._c, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            pc = np.where(p == 1.0, np.inf, np.where(np.isinf(p), 1.0, p / (p - 1.0)))
            mid = (p - 1.0) * np.power(p, -pc) * np.power(c, 1.0 - pc)
        coef = np.where(p == 1.0, c, np.where(np.isinf(p), c, mid))
        if pc.ndim == 0:
            return Power(float(pc), float(coef), self.domain)
        return Power(pc, coef, self.domain)


@dataclass(frozen=True, eq=False)
class PowerLog(GPhiFunction):
    """``t^p(x) * log(e + t)^q(x)``."""

    p: object
    q: object
    domain: Domain | None = None

    def __post_init__(self):
        p, dom = _as_cells(self.p, self.domain)
        q, dom = _as_cells(self.q, dom)
        if np.any(np.asarray(p) < 1) or np.any(np.isinf(p)) or np.any(np.asarray(q) < 0):
            raise GPhiError("PowerLog needs 1 <= p < inf and q >= 0")
        object.__setattr__(self, "_p", p)
        object.__setattr__(self, "_q", q)
        object.__setattr__(self, "domain", dom)

    def params(self):
        return {"p": self._p, "q": self._q}

    def phi(self, t, P):
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.power(t, P["p"]) * np.power(np.log(math.e + t), P["q"])
        return np.where(t == 0, 0.0, out)


@dataclass(frozen=True, eq=False)
class LinearLog(GPhiFunction):
    """``t * log(e + t)``."""

    domain: Domain | None = None

    def phi(self, t, P):
        with np.errstate(over="ignore", invalid="ignore"):
            return t * np.log(math.e + t)


@dataclass(frozen=True, eq=False)
class Numeric(GPhiFunction):
    """Tabulated Psi: one row of values on a shared increasing grid per parameter row.

    Between nodes Psi is linear, below the first node it is the chord from
    the origin, above the last node it is +inf.  For convex Psi this never
    underestimates the function it samples.
    """

    grid: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)  # (rows, len(grid))
    row: object = 0  # cell array of row indices, or a single row
    domain: Domain | None = None

    def params(self):
        return {"row": self.row}

    def phi(self, t, P):
        u, tab = self.grid, self.table
        t = np.asarray(t, dtype=float)
        row = np.broadcast_to(np.asarray(P["row"]), t.shape)
        k = np.clip(np.searchsorted(u, t, side="right"), 1, len(u) - 1)
        u0, u1 = u[k - 1], u[k]
        w = (t - u0) / (u1 - u0)
        inside = tab[row, k - 1] * (1 - w) + tab[row, k] * w
        below = tab[row, 0] * t / u[0]
        out = np.where(t < u[0], below, inside)
        return np.where(t > u[-1], np.inf, out)


# --------------------------------------------------------------------------- modular and norms


def _lam_shape(lam: np.ndarray, ndim: int) -> np.ndarray:
    return lam.reshape(lam.shape + (1,) * ndim)


def _row_modular(psi: GPhiFunction, F: np.ndarray, P: Params, lam: np.ndarray, ndim: int, meas: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = F / _lam_shape(lam, ndim)
        t = np.where(F == 0, 0.0, t)
        vals = psi.phi(t, P)
    vals = np.where(F == 0, 0.0, vals)
    return tree_sum(vals, ndim) * meas


def _lux_rows(psi: GPhiFunction, F: np.ndarray, P: Params, ndim: int, meas: float, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Luxemburg norms of the rows of ``F`` (shape ``(m, cells...)``, entries >= 0)."""
    m = F.shape[0]
    axes = tuple(range(1, F.ndim))
    fmax = F.max(axis=axes) if F.size else np.zeros(m)
    out = np.zeros(m)
    live = fmax > 0
    if not live.any():
        return out
    # work with F / max F per row: a row and its multiples share one bisection path
    scale = np.where(live, fmax, 1.0)
    F = F / _lam_shape(scale, ndim)
    fmax = np.where(live, 1.0, 0.0)
    knee = psi.knee(P)
    floor = np.zeros(m)
    if knee is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.isinf(knee), 0.0, F / knee)
        floor = np.nan_to_num(ratio, nan=0.0).max(axis=axes)
    mod = lambda lam: _row_modular(psi, F, P, lam, ndim, meas)

    hi = np.where(live, np.maximum(fmax, floor), 1.0)
    for _ in range(_MAX_EXPANSION):
        bad = live & ~(mod(hi) <= 1.0)
        if not bad.any():
            break
        hi = np.where(bad, hi * 2.0, hi)
    else:
        raise GPhiError("modular stays above 1 for every tested lambda")

    # shrink: find lo with modular > 1, or hit the ess-sup floor
    lo = np.where(live, np.maximum(hi / 2.0, floor), 0.0)
    done = ~live
    for _ in range(_MAX_EXPANSION):
        at_floor = lo <= floor
        mlo = mod(lo)
        ok = live & ~done & (mlo <= 1.0)
        # modular already <= 1 at lo: move down
        hi = np.where(ok, lo, hi)
        finished_floor = ok & at_floor
        done = done | finished_floor | (live & ~ok)
        if done.all():
            break
        lo = np.where(ok & ~at_floor, np.maximum(lo / 2.0, floor), lo)
    else:
        raise GPhiError("could not bracket the Luxemburg norm")
    # rows where hi reached the floor and the modular there is <= 1 are exact
    exact = live & (hi <= floor)
    lo = np.where(exact, hi, lo)

    for _ in range(MAX_BISECTION):
        active = live & ~exact & (hi - lo > rtol * hi)
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        ok = mod(np.where(active, mid, hi)) <= 1.0
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    else:
        raise GPhiError(f"bisection did not converge in {MAX_BISECTION} steps")
    out[live] = hi[live] * scale[live]
    return out


def modular(psi: GPhiFunction, f: GridFunction, lam: float) -> float:
    if not lam > 0:
        raise GPhiError("lambda must be positive")
    dom = f.domain
    P = psi.cell_params(dom)
    F = np.abs(f.values)[None, ...]
    P = _select(P, lambda a: a[None, ...])
    return float(_row_modular(psi, F, P, np.array([float(lam)]), dom.dimension, dom.cell_measure)[0])


def luxemburg_norm(psi: GPhiFunction, f: GridFunction, rtol: float = DEFAULT_RTOL) -> float:
    dom = f.domain
    P = _select(psi.cell_params(dom), lambda a: a[None, ...])
    F = np.abs(f.values)[None, ...]
    return float(_lux_rows(psi, F, P, dom.dimension, dom.cell_measure, rtol)[0])


def weighted_norm(psi: GPhiFunction, f: GridFunction, w: GridFunction, rtol: float = DEFAULT_RTOL) -> float:
    if (np.asarray(w.values) <= 0).any():
        raise GPhiError("weight must be positive")
    return luxemburg_norm(psi, f * w, rtol)


def cube_norms(psi: GPhiFunction, values: np.ndarray | None, view: LevelView, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """``||chi_Q f||_Psi`` for every cube of ``view``; ``values=None`` means f = 1."""
    dom = view.domain
    P = _select(psi.cell_params(dom), view.blocks)
    if values is None:
        F = np.ones((view.ncubes,) + (view.side,) * dom.dimension)
    else:
        F = np.abs(view.blocks(np.asarray(values, dtype=float)))
    return _lux_rows(psi, F, P, dom.dimension, dom.cell_measure, rtol)


def indicator_norms(psi: GPhiFunction, dom: Domain, kmin=None, kmax=None, shifts=None) -> list[tuple[LevelView, np.ndarray]]:
    return [(v, cube_norms(psi, None, v)) for v in level_views(dom, kmin, kmax, shifts)]


# --------------------------------------------------------------------------- inverse and conjugate


def _bisect_inverse(psi: GPhiFunction, t, P, rtol: float = 1e-12) -> np.ndarray:
    """``inf{u >= 0 : Psi(x, u) >= t}`` by monotone bisection."""
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(t.shape, *[np.shape(v) for v in P.values() if isinstance(v, np.ndarray)])
    t = np.broadcast_to(t, shape)
    Pb = {k: (np.broadcast_to(v, shape) if isinstance(v, np.ndarray) else v) for k, v in P.items()}
    ev = lambda u: psi.phi(u, Pb)
    hi = np.ones(shape)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(_MAX_EXPANSION):
            bad = (t > 0) & ~(ev(hi) >= t)
            if not bad.any():
                break
            hi = np.where(bad, hi * 2.0, hi)
        lo = np.zeros(shape)
        for _ in range(_MAX_EXPANSION):
            ok = (t > 0) & (ev(hi / 2.0) >= t) & (hi > 1e-300)
            if not ok.any():
                break
            hi = np.where(ok, hi / 2.0, hi)
        lo = np.where(t > 0, hi / 2.0, 0.0)
        for _ in range(MAX_BISECTION):
            active = (t > 0) & (hi - lo > rtol * hi)
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            ok = ev(mid) >= t
            hi = np.where(active & ok, mid, hi)
            lo = np.where(active & ~ok, mid, lo)
    return np.where(t > 0, hi, 0.0)


def inverse_gphi(psi: GPhiFunction, x, t: float) -> float:
    """Generalized inverse at one cell ``x`` (index tuple, or None if x-free)."""
    if t < 0:
        raise GPhiError("t must be non-negative")
    P = psi.params()
    if x is not None:
        P = {k: (v[tuple(x)] if isinstance(v, np.ndarray) else v) for k, v in P.items()}
    return float(psi.inverse(np.asarray(float(t)), P))


CONJUGATE_GRID = np.geomspace(1e-6, 1e3, 512)
_GOLDEN = (math.sqrt(5) - 1) / 2


def _legendre(psi: GPhiFunction, u: np.ndarray, P: Params, tol: float = 1e-8) -> np.ndarray:
    """``sup_t (t u - Psi(t))`` by golden-section search in log t (concave objective)."""
    a = np.full(u.shape, math.log(1e-30))
    b = np.full(u.shape, math.log(1e300))

    def g(s):
        t = np.exp(s)
        with np.errstate(over="ignore", invalid="ignore"):
            v = t * u - psi.phi(t, P)
        return np.where(np.isnan(v), -np.inf, v)

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while np.max(b - a) > tol:
        left = gc >= gd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + _GOLDEN * (b - a))
        c_new = np.where(left, b - _GOLDEN * (b - a), d)
        gd_new = np.where(left, gc, g(d_new))
        gc_new = np.where(left, g(c_new), gd)
        c, d, gc, gd = c_new, d_new, gc_new, gd_new
    best = np.maximum(np.maximum(gc, gd), g(a))
    return np.maximum(best, 0.0)


def numeric_conjugate(psi: GPhiFunction, grid: np.ndarray = CONJUGATE_GRID) -> Numeric:
    P = psi.params()
    arrays = {k: v for k, v in P.items() if isinstance(v, np.ndarray)}
    if not arrays:
        table = _legendre(psi, grid, P)[None, :]
        return Numeric(grid, table, 0, psi.domain)
    shape = next(iter(arrays.values())).shape
    keys = sorted(arrays)
    stacked = np.stack([np.broadcast_to(arrays[k], shape).reshape(-1) for k in keys], axis=1)
    uniq, inv = np.unique(stacked, axis=0, return_inverse=True)
    Pu = dict(P)
    for i, k in enumerate(keys):
        Pu[k] = uniq[:, i][:, None]
    table = _legendre(psi, np.broadcast_to(grid, (len(uniq), len(grid))), Pu)
    return Numeric(grid, table, inv.reshape(shape), psi.domain)


def conjugate_gphi(psi: GPhiFunction) -> GPhiFunction:
    return psi.conjugate()


# --------------------------------------------------------------------------- condition F


@dataclass(frozen=True)
class ConditionFReport:
    c1: float
    c2: float
    c3: float
    c1_witness: str
    c3_witness: str


def _check_finite_pos(name: str, view: LevelView, vals: np.ndarray):
    bad = ~np.isfinite(vals) | (vals <= 0)
    if bad.any():
        i = int(np.argmax(bad))
        raise GPhiError(f"degenerate {name} norm {vals[i]!r} on cube {view.cube(i).id}")


def check_condition_F(A: GPhiFunction, B: GPhiFunction, D: GPhiFunction, dom: Domain, t_grid: np.ndarray | None = None) -> ConditionFReport:
    Dstar = D.conjugate()
    c1 = c3 = 0.0
    w1 = w3 = ""
    for view in level_views(dom):
        na, nb, nd, nds = (cube_norms(g, None, view) for g in (A, B, D, Dstar))
        for name, arr in (("A", na), ("B", nb), ("D", nd), ("D*", nds)):
            _check_finite_pos(name, view, arr)
        r1 = na * nb / nd
        r3 = nd * nds / view.cube_measure
        i1, i3 = int(np.argmax(r1)), int(np.argmax(r3))
        if r1[i1] > c1:
            c1, w1 = float(r1[i1]), view.cube(i1).id
        if r3[i3] > c3:
            c3, w3 = float(r3[i3]), view.cube(i3).id
    if t_grid is None:
        t_grid = np.geomspace(1e-4, 1e4, 81)
    PA, PB, PD = (g.cell_params(dom) for g in (A, B, D))
    tt = t_grid.reshape((-1,) + (1,) * dom.dimension)
    expand = lambda P: {k: v[None, ...] for k, v in P.items()}
    with np.errstate(divide="ignore", invalid="ignore"):
        ia = A.inverse(tt, expand(PA))
        ib = B.inverse(tt, expand(PB))
        idd = D.inverse(tt, expand(PD))
        c2 = float(np.max(ia * ib / idd))
    return ConditionFReport(c1, c2, c3, w1, w3)


def example1(p: ExponentFunction, sigma: float) -> tuple[GPhiFunction, GPhiFunction, GPhiFunction]:
    """``A = t^{sigma p'} log(e+t)^{sigma p'}``, ``B = t^{(sigma p')'}``, ``D = t log(e+t)``."""
    sp = p.conjugate().values * sigma
    return (
        PowerLog(sp, sp, p.domain),
        Power(sp / (sp - 1.0), 1.0, p.domain),
        LinearLog(p.domain),
    )


def example2(p: ExponentFunction, sigma: float, mu: np.ndarray, nu: np.ndarray):
    """``A = t^mu log(e+t)^{nu mu}``, ``B = t^{(sigma p')'}``, ``D = t^alpha log(e+t)^{alpha nu}``
    with ``1/alpha = 1/mu + 1/(sigma p')'``."""
    dom = p.domain
    mu = np.broadcast_to(np.asarray(mu, dtype=float), dom.shape)
    nu = np.broadcast_to(np.asarray(nu, dtype=float), dom.shape)
    sp = p.conjugate().values * sigma
    spc = sp / (sp - 1.0)
    alpha = 1.0 / (1.0 / mu + 1.0 / spc)
    if (alpha < 1).any():
        raise GPhiError("alpha < 1: the triple is not made of Phi-functions")
    return (
        PowerLog(mu, nu * mu, dom),
        Power(spc, 1.0, dom),
        PowerLog(alpha, alpha * nu, dom),
    )
