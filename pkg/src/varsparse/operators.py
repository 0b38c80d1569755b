"""Model singular integrals, commutators, fractional integrals and maximal operators.

Kernel sums are direct ``O(N^2)`` sums over cell pairs, processed in row
tiles of a fixed size so that results do not depend on memory limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate as sp_integrate

from .exponent import ExponentFunction
from .gphi import GPhiFunction, Power, cube_norms
from .grid import Domain, GridFunction, level_views, tree_sum

TILE_ROWS = 256


class OperatorError(ValueError):
    pass


# --------------------------------------------------------------------------- kernels


@dataclass(frozen=True)
class CZKernel:
    """A translation-invariant model kernel ``K(x, y) = k(x - y)``.

    ``"hilbert"`` (n = 1): ``1/(x - y)``.
    ``"riesz1"`` (n = 2): ``(x1 - y1)/|x - y|^3``.
    Both satisfy ``|K(x, y)| <= C_K / |x - y|^n`` with ``C_K = 1`` and are
    smooth with modulus ``omega(t) = c t``.
    """

    tag: str = "hilbert"
    omega: Callable[[float], float] = field(default=lambda t: t, compare=False)
    size_constant: float = 1.0

    def __post_init__(self):
        if self.tag not in ("hilbert", "riesz1"):
            raise OperatorError(f"unknown kernel {self.tag!r}")

    @property
    def dimension(self) -> int:
        return 1 if self.tag == "hilbert" else 2

    def displacement(self, z: np.ndarray) -> np.ndarray:
        """``k(z)`` for displacements ``z`` of shape ``(..., n)``; 0 at z = 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.tag == "hilbert":
                z1 = z[..., 0]
                out = 1.0 / z1
            else:
                r = np.sqrt((z**2).sum(axis=-1))
                out = z[..., 0] / r**3
        return np.where(np.all(z == 0, axis=-1), 0.0, out)


def dini_integral(omega: Callable[[float], float], tol: float = 1e-8) -> float:
    """``int_0^1 omega(t) dt / t`` computed as ``int_0^inf omega(e^-s) ds``."""
    val, err = sp_integrate.quad(lambda s: omega(math.exp(-s)), 0.0, math.inf, epsabs=tol, epsrel=tol, limit=500)
    if not math.isfinite(val):
        raise OperatorError("Dini integral diverges")
    return float(val)


def kernel_size_constant(K: CZKernel, dom: Domain) -> float:
    """max over cell-center pairs of ``|K(x, y)| |x - y|^n``."""
    n = dom.dimension
    N = dom.cells_per_axis
    d = np.arange(-(N - 1), N) * dom.h
    if n == 1:
        z = d[:, None]
    else:
        z = np.stack(np.meshgrid(d, d, indexing="ij"), axis=-1).reshape(-1, 2)
    r = np.sqrt((z**2).sum(axis=-1))
    k = K.displacement(z)
    return float(np.max(np.abs(k) * r**n))


def _check_dim(dom: Domain, n: int):
    if dom.dimension != n:
        raise OperatorError(f"kernel is for n={n}, domain has n={dom.dimension}")


def _cell_indices(dom: Domain) -> np.ndarray:
    """Integer cell coordinates, shape ``(cells, n)`` in C order."""
    return np.indices(dom.shape).reshape(dom.dimension, -1).T


def _pair_sum(dom: Domain, weight_fn, f: np.ndarray, b: np.ndarray | None = None, m: int = 0) -> np.ndarray:
    """``out_i = sum_j weight(x_i - x_j) (b_i - b_j)^m f_j`` over all cells.

    ``weight_fn`` receives integer displacements (shape ``(rows, cells, n)``)
    and returns the pair weight, already including the cell measure.  ``f``
    may carry a leading batch axis, in which case every function is summed
    against the same kernel tiles.
    """
    idx = _cell_indices(dom)
    batched = f.ndim == dom.dimension + 1
    F = f.reshape(f.shape[0], -1).T if batched else f.reshape(-1, 1)
    bv = None if b is None else b.reshape(-1)
    out = np.empty(F.shape)
    for r0 in range(0, idx.shape[0], TILE_ROWS):
        rows = slice(r0, min(r0 + TILE_ROWS, idx.shape[0]))
        disp = idx[rows, None, :] - idx[None, :, :]
        W = weight_fn(disp)
        if m:
            W = W * (bv[rows, None] - bv[None, :]) ** m
        out[rows] = W @ F
    if batched:
        return out.T.reshape(f.shape)
    return out[:, 0].reshape(dom.shape)


def _czo_weights(K: CZKernel, dom: Domain):
    hn = dom.cell_measure

    def w(disp):
        return K.displacement(disp * dom.h) * hn

    return w


def apply_czo(K: CZKernel, f: GridFunction) -> GridFunction:
    """``Tf(x_i) = sum_{j != i} K(x_i, x_j) f_j h^n`` (diagonal cell skipped)."""
    _check_dim(f.domain, K.dimension)
    return GridFunction(f.domain, _pair_sum(f.domain, _czo_weights(K, f.domain), f.values))


def _fractional_weights(alpha: float, dom: Domain):
    n = dom.dimension
    if not 0 < alpha < n:
        raise OperatorError(f"alpha must lie in (0, {n})")
    h = dom.h
    if n == 1:
        # exact integral of |x_i - y|^(alpha-1) over cell j
        def w(disp):
            d = np.abs(disp[..., 0]).astype(float) * h
            hi = (d + h / 2) ** alpha
            lo = np.where(d > 0, (np.maximum(d - h / 2, 0.0)) ** alpha, -((h / 2) ** alpha))
            return (hi - lo) / alpha

        return w
    diag = fractional_diagonal_2d(alpha, h)

    def w(disp):
        z = disp * h
        r = np.sqrt((z**2).sum(axis=-1))
        with np.errstate(divide="ignore"):
            off = r ** (alpha - n) * h**n
        return np.where(r == 0, diag, off)

    return w


def fractional_diagonal_2d(alpha: float, h: float) -> float:
    """``int over [-h/2, h/2]^2 of |z|^(alpha-2) dz`` in polar form.

    By symmetry it is ``(8/alpha) int_0^{pi/4} (a / cos t)^alpha dt`` with a = h/2.
    """
    a = h / 2
    val, _ = sp_integrate.quad(lambda t: (a / math.cos(t)) ** alpha, 0.0, math.pi / 4, epsabs=0, epsrel=1e-13)
    return 8.0 * val / alpha


def fractional_integral(alpha: float, f: GridFunction) -> GridFunction:
    """``I_alpha f(x_i) = sum_j w_ij f_j`` with ``w_ij`` the integral of ``|x_i - y|^(alpha-n)`` over cell j.

    In one dimension every weight is the exact cell integral.  In two
    dimensions off-diagonal weights use the midpoint rule and the diagonal
    weight is the exact integral over the centered cell.
    """
    dom = f.domain
    return GridFunction(dom, _pair_sum(dom, _fractional_weights(alpha, dom), f.values))


def _operator_weights(kind: str, dom: Domain, K: CZKernel | None, alpha: float | None):
    if kind == "czo":
        K = K or CZKernel()
        _check_dim(dom, K.dimension)
        return _czo_weights(K, dom)
    if kind == "fractional":
        if alpha is None:
            raise OperatorError("fractional commutator needs alpha")
        return _fractional_weights(alpha, dom)
    raise OperatorError(f"unknown operator kind {kind!r}")


def commutator(kind: str, b: GridFunction, f: GridFunction, m: int, K: CZKernel | None = None, alpha: float | None = None) -> GridFunction:
    """``T_b^m f(x_i) = sum_j (b_i - b_j)^m w_ij f_j`` for ``kind`` in {"czo", "fractional"}."""
    if m < 0:
        raise OperatorError("m must be non-negative")
    dom = f.domain
    wfn = _operator_weights(kind, dom, K, alpha)
    return GridFunction(dom, _pair_sum(dom, wfn, f.values, b.values, m))


def commutator_many(kind: str, b: GridFunction, fs, m: int, K: CZKernel | None = None, alpha: float | None = None) -> list[GridFunction]:
    """:func:`commutator` for several functions sharing one pass over the kernel."""
    if m < 0:
        raise OperatorError("m must be non-negative")
    fs = list(fs)
    if not fs:
        return []
    dom = fs[0].domain
    wfn = _operator_weights(kind, dom, K, alpha)
    out = _pair_sum(dom, wfn, np.stack([f.values for f in fs]), b.values, m)
    return [GridFunction(dom, o) for o in out]


# --------------------------------------------------------------------------- maximal operators


@dataclass(frozen=True)
class MaximalVariant:
    """``kind`` is one of "plain", "norm_avg", "gphi", "fractional"."""

    kind: str = "plain"
    psi: GPhiFunction | None = None
    beta: ExponentFunction | None = None

    @classmethod
    def plain(cls):
        return cls("plain")

    @classmethod
    def norm_avg(cls, s: ExponentFunction):
        return cls("norm_avg", Power(s))

    @classmethod
    def gphi(cls, psi: GPhiFunction):
        return cls("gphi", psi)

    @classmethod
    def fractional(cls, beta: ExponentFunction, psi: GPhiFunction):
        return cls("fractional", psi, beta)


def maximal(f: GridFunction, variant: MaximalVariant | None = None, kmin=None, kmax=None) -> GridFunction:
    """Per cell, the max over configured dyadic cubes containing it of the cube quantity."""
    variant = variant or MaximalVariant.plain()
    dom = f.domain
    absf = np.abs(f.values)
    out = np.zeros(dom.shape)
    betaP = Power(variant.beta) if variant.kind == "fractional" else None
    for view in level_views(dom, kmin, kmax):
        if variant.kind == "plain":
            vals = tree_sum(view.blocks(absf), dom.dimension) / view.cells_per_cube
        elif variant.kind in ("norm_avg", "gphi", "fractional"):
            vals = cube_norms(variant.psi, absf, view) / cube_norms(variant.psi, None, view)
            if betaP is not None:
                vals = vals * cube_norms(betaP, None, view)
        else:
            raise OperatorError(f"unknown maximal variant {variant.kind!r}")
        out = np.fmax(out, view.spread(vals, fill=0.0))
    return GridFunction(dom, out)
