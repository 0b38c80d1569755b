"""Variable exponents on a grid and their log-Hölder diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .expr import Expression, parse_expression
from .grid import Domain, GridFunction, sample


class ExponentError(ValueError):
    pass


def _conj(v):
    """Conjugate exponent of a scalar or array, with 1 <-> inf."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(v == 1.0, np.inf, np.where(np.isinf(v), 1.0, v / (v - 1.0)))
    return out if out.ndim else float(out)


def conjugate_value(p: float) -> float:
    return float(_conj(p))


@dataclass(frozen=True, eq=False)
class ExponentFunction:
    """p(x) per cell; cells where p = inf carry ``np.inf`` in ``values``."""

    domain: Domain
    values: np.ndarray = field(repr=False)
    p_inf: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.domain.shape)
        if np.isnan(v).any():
            raise ExponentError("exponent has NaN cells")
        if (v < 1.0).any():
            raise ExponentError(f"exponent below 1 (min {v.min()!r})")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.p_inf is not None and not self.p_inf >= 1.0:
            raise ExponentError("p_inf must lie in [1, inf]")

    @classmethod
    def constant(cls, dom: Domain, p: float) -> "ExponentFunction":
        return cls(dom, np.full(dom.shape, float(p)), float(p))

    @classmethod
    def from_expression(cls, expr: Expression | str, dom: Domain, p_inf: float | None = None) -> "ExponentFunction":
        if isinstance(expr, str):
            expr = parse_expression(expr, dom.dimension)
        return cls(dom, sample(expr, dom).values, p_inf)

    @classmethod
    def from_grid(cls, f: GridFunction, p_inf: float | None = None) -> "ExponentFunction":
        return cls(f.domain, f.values, p_inf)

    @cached_property
    def inf_mask(self) -> np.ndarray:
        m = np.isinf(self.values)
        m.flags.writeable = False
        return m

    @cached_property
    def p_minus(self) -> float:
        return float(self.values.min())

    @cached_property
    def p_plus(self) -> float:
        return float(self.values.max())

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def as_grid(self) -> GridFunction:
        return GridFunction(self.domain, self.values)

    def conjugate(self) -> "ExponentFunction":
        p_inf = None if self.p_inf is None else conjugate_value(self.p_inf)
        return ExponentFunction(self.domain, _conj(self.values), p_inf)

    def scale(self, s: float) -> "ExponentFunction":
        """The exponent ``s*p(.)``; requires ``s*p^- >= 1``."""
        if not s > 0:
            raise ExponentError("scale factor must be positive")
        if s * self.p_minus < 1.0 and not math.isclose(s * self.p_minus, 1.0, rel_tol=0, abs_tol=1e-15):
            raise ExponentError(f"s*p^- = {s * self.p_minus!r} < 1")
        vals = np.maximum(self.values * s, 1.0)
        p_inf = None if self.p_inf is None else max(self.p_inf * s, 1.0)
        return ExponentFunction(self.domain, vals, p_inf)

    def restrict_values(self, region) -> np.ndarray:
        return self.values[region]


def reciprocal_subtract(p: ExponentFunction, q: ExponentFunction) -> ExponentFunction:
    """beta with ``1/beta = 1/p - 1/q`` cellwise; ``p == q`` gives beta = inf."""
    if (p.values > q.values).any():
        raise ExponentError("reciprocal_subtract requires p <= q cellwise")
    r = 1.0 / p.values - 1.0 / q.values
    r = np.maximum(r, 0.0)
    with np.errstate(divide="ignore"):
        beta = np.where(r > 0, 1.0 / r, np.inf)
    beta = np.maximum(beta, 1.0)
    p_inf = None
    if p.p_inf is not None and q.p_inf is not None:
        ri = 1.0 / p.p_inf - 1.0 / q.p_inf
        p_inf = 1.0 / ri if ri > 0 else math.inf
    return ExponentFunction(p.domain, beta, p_inf)


def reciprocal_add(beta: ExponentFunction, q: ExponentFunction) -> ExponentFunction:
    """p with ``1/p = 1/beta + 1/q``; the inverse of :func:`reciprocal_subtract`."""
    r = 1.0 / beta.values + 1.0 / q.values
    if (r > 1.0 + 1e-15).any():
        raise ExponentError("1/beta + 1/q exceeds 1")
    return ExponentFunction(beta.domain, np.maximum(1.0 / r, 1.0))


def delta_from(r: ExponentFunction, alpha: float) -> GridFunction:
    """``delta(x) = n*(alpha/n - 1/r(x))``; requires ``n/alpha <= r^-``.

    delta takes values in ``[0, alpha]``, so it is returned as a plain grid
    function rather than an exponent.
    """
    n = r.domain.dimension
    if not 0 < alpha <= n:
        raise ExponentError("alpha must lie in (0, n]")
    if n / alpha > r.p_minus * (1 + 1e-15):
        raise ExponentError(f"n/alpha = {n / alpha!r} exceeds r^- = {r.p_minus!r}")
    d = n * (alpha / n - 1.0 / r.values)
    return GridFunction(r.domain, np.maximum(d, 0.0))


def exponent_from_delta(delta: GridFunction | float, dom: Domain | None = None) -> ExponentFunction:
    """The exponent ``n/delta(.)``; cells with delta = 0 become inf."""
    if not isinstance(delta, GridFunction):
        delta = GridFunction(dom, np.full(dom.shape, float(delta)))
    n = delta.domain.dimension
    d = delta.values
    if (d < 0).any() or (d > n).any():
        raise ExponentError("delta must lie in [0, n]")
    with np.errstate(divide="ignore"):
        vals = np.where(d > 0, n / np.where(d > 0, d, 1.0), np.inf)
    return ExponentFunction(delta.domain, np.maximum(vals, 1.0))


# --------------------------------------------------------------------------- diagnostics

_SMALL_DISPLACEMENTS = 32
_MAX_PAIRS = 10**6


def _displacements(N: int) -> list[int]:
    if N <= 2 * _SMALL_DISPLACEMENTS:
        return list(range(1, N))
    ds = set(range(1, _SMALL_DISPLACEMENTS + 1))
    d = float(_SMALL_DISPLACEMENTS)
    while d < N - 1:
        d *= 2**0.25
        ds.add(min(int(round(d)), N - 1))
    return sorted(ds)


def _displacement_vectors(dom: Domain) -> list[tuple]:
    ds = _displacements(dom.cells_per_axis)
    if dom.dimension == 1:
        return [(d,) for d in ds]
    axis = [0] + ds
    vecs = []
    for a in axis:
        for b in [-d for d in reversed(ds)] + axis:
            if a == 0 and b <= 0:
                continue
            vecs.append((a, b))
    return vecs


def _pair_max(dom: Domain, g: np.ndarray, metric) -> tuple[float, tuple]:
    """max over cell pairs (x, x+d) of ``metric(|g(x)-g(x+d)|, |d|*h)``.

    Every displacement up to 32 cells is taken exactly and longer ones on a
    geometric ladder; for each displacement all base cells are used unless
    the total exceeds 1e6 pairs, in which case base cells are strided.
    """
    N = dom.cells_per_axis
    vecs = _displacement_vectors(dom)
    total = sum(int(np.prod([N - abs(c) for c in v])) for v in vecs)
    stride = max(1, math.ceil((total / _MAX_PAIRS) ** (1.0 / dom.dimension)))
    best, witness = 0.0, ()
    for v in vecs:
        src, dst = [], []
        for c in v:
            if c >= 0:
                src.append(slice(0, N - c, stride))
                dst.append(slice(c, N, stride))
            else:
                src.append(slice(-c, N, stride))
                dst.append(slice(0, N + c, stride))
        diff = np.abs(g[tuple(src)] - g[tuple(dst)])
        if diff.size == 0:
            continue
        dist = dom.h * math.sqrt(sum(c * c for c in v))
        m = float(diff.max())
        val = metric(m, dist)
        if val > best:
            best, witness = val, v
    return best, witness


@dataclass(frozen=True)
class LogHolderReport:
    c_local: float
    c_global: float
    local_witness: tuple  # displacement in cells attaining c_local
    J: int


def check_log_holder(p: ExponentFunction) -> LogHolderReport:
    if p.inf_mask.any():
        raise ExponentError("log-Hölder diagnostics need a finite exponent")
    if p.p_inf is None:
        raise ExponentError("p_inf is not set")
    dom = p.domain
    inv = 1.0 / p.values
    c_loc, wit = _pair_max(dom, inv, lambda m, d: m * math.log(math.e + 1.0 / d))
    centers = dom.centers()
    r = np.sqrt((centers**2).sum(axis=-1))
    c_glob = float((np.abs(inv - 1.0 / p.p_inf) * np.log(math.e + r)).max())
    return LogHolderReport(c_loc, c_glob, wit, dom.J)


def check_loglog(q: ExponentFunction) -> float:
    if q.inf_mask.any():
        raise ExponentError("log-log diagnostic needs q^+ < inf")
    c, _ = _pair_max(
        q.domain, q.values, lambda m, d: m * math.log(math.e + math.log(math.e + 1.0 / d))
    )
    return c


def log_holder_flag(c_coarse: float, c_fine: float, J_coarse: int, J_fine: int) -> bool:
    """True when the local constant grows like log(1/h) between two resolutions.

    A bounded constant stays put under refinement; a jump makes it track
    ``log(e + 2^J)``.  Growth reaching 90% of that factor is flagged.
    """
    if c_coarse <= 0:
        return c_fine > 0
    expected = math.log(math.e + 2.0**J_fine) / math.log(math.e + 2.0**J_coarse)
    return c_fine / c_coarse >= 0.9 * expected
