"""Sparse families of dyadic cubes and the sparse operators built on them."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exponent import ExponentFunction
from .grid import (
    DyadicCube,
    Domain,
    GridFunction,
    _check_cube,
    level_view,
    tree_sum,
)


class SparseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """Cubes of one (possibly shifted) dyadic grid, kept in canonical order."""

    domain: Domain
    shift: tuple
    cubes: tuple

    def __post_init__(self):
        shift = tuple(self.shift)
        for q in self.cubes:
            if tuple(q.shift) != shift:
                raise SparseError(f"cube {q.id} is not on grid {shift}")
            _check_cube(self.domain, q)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "cubes", tuple(sorted(self.cubes, key=_canonical_key)))

    def __len__(self):
        return len(self.cubes)

    def __eq__(self, other):
        if not isinstance(other, SparseFamily):
            return NotImplemented
        return (self.domain, self.shift, self.cubes) == (other.domain, other.shift, other.cubes)

    def __hash__(self):
        return hash((self.domain, self.shift, self.cubes))

    def __iter__(self):
        return iter(self.cubes)

    def __contains__(self, q):
        return q in set(self.cubes)

    def union(self, other: "SparseFamily") -> "SparseFamily":
        if other.shift != self.shift:
            raise SparseError("cannot merge families from different grids")
        return SparseFamily(self.domain, self.shift, tuple(set(self.cubes) | set(other.cubes)))

    def to_json(self) -> str:
        return json.dumps(
            {"domain": self.domain.to_dict(), "shift": list(self.shift), "cubes": [q.id for q in self.cubes]},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SparseFamily":
        d = json.loads(text)
        return cls(
            Domain.from_dict(d["domain"]),
            tuple(d["shift"]),
            tuple(DyadicCube.from_id(c) for c in d["cubes"]),
        )


def _canonical_key(q: DyadicCube):
    return (-q.level, q.start)


# --------------------------------------------------------------------------- local block sums


def _block_reduce(X: np.ndarray, side: int, ndim: int, how: str = "sum") -> np.ndarray:
    """Reduce aligned ``side``-blocks of the local array ``X``."""
    if ndim == 1:
        b = X.reshape(-1, side)
    else:
        m0, m1 = X.shape[0] // side, X.shape[1] // side
        b = X.reshape(m0, side, m1, side).transpose(0, 2, 1, 3)
    if how == "sum":
        return tree_sum(b, ndim)
    return b.any(axis=tuple(range(b.ndim - ndim, b.ndim)))


def _stopping_cubes(Q: DyadicCube, X: np.ndarray, J: int, ndim: int, selects) -> list[DyadicCube]:
    """Maximal proper dyadic subcubes ``R`` of ``Q`` with ``selects(avg_R)`` true.

    ``X`` holds the data on Q's cells; ``selects`` maps block averages to a
    boolean array.
    """
    s = Q.side_cells(J)
    blocked = np.zeros(X.shape, dtype=bool)
    out = []
    side = s // 2
    while side >= 1:
        avg = _block_reduce(X, side, ndim) / side**ndim
        hit = selects(avg) & ~_block_reduce(blocked, side, ndim, "any")
        if hit.any():
            level = Q.level - int(round(math.log2(s // side)))
            for idx in zip(*np.nonzero(hit)):
                start = tuple(a + int(i) * side for a, i in zip(Q.start, idx))
                out.append(DyadicCube(level, start, Q.shift))
                sl = tuple(slice(int(i) * side, (int(i) + 1) * side) for i in idx)
                blocked[sl] = True
        side //= 2
    return out


def grid_roots(dom: Domain, shift: Sequence[int] | None = None) -> list[DyadicCube]:
    """Maximal cubes of the grid with code ``shift`` lying inside the box."""
    shift = tuple(shift) if shift is not None else (0,) * dom.dimension
    covered = np.zeros(dom.shape, dtype=bool)
    roots = []
    for k in range(dom.kmax, dom.kmin - 1, -1):
        v = level_view(dom, k, shift)
        if not v.ncubes:
            continue
        free = ~v.blocks(covered).reshape(v.ncubes, -1).any(axis=1)
        for i in np.nonzero(free)[0]:
            q = v.cube(int(i))
            roots.append(q)
            covered[q.slices(dom.J)] = True
        if covered.all():
            break
    return roots


def cz_sparse(f: GridFunction, root: DyadicCube, threshold: float = 2.0) -> SparseFamily:
    """Calderón-Zygmund stopping family of ``f >= 0`` below ``root``.

    A cube P is a stopping child of Q when ``<f>_P >= threshold * <f>_Q``;
    the sum of the children's measures is then at most ``|Q| / threshold``.
    """
    if threshold < 2:
        raise SparseError("threshold must be >= 2")
    dom = f.domain
    _check_cube(dom, root)
    vals = f.values
    if (vals < 0).any():
        raise SparseError("cz_sparse needs f >= 0")
    J, n = dom.J, dom.dimension
    X0 = vals[root.slices(J)]
    if not X0.any():
        raise SparseError("f vanishes on the root cube")
    family = [root]
    queue = deque([root])
    while queue:
        Q = queue.popleft()
        X = vals[Q.slices(J)]
        avgQ = float(tree_sum(X[None, ...], n)[0]) / X.size
        kids = _stopping_cubes(Q, X, J, n, lambda a: a >= threshold * avgQ)
        family.extend(kids)
        queue.extend(kids)
    return SparseFamily(dom, root.shift, tuple(family))


def cz_sparse_grid(f: GridFunction, shift: Sequence[int] | None = None, threshold: float = 2.0) -> SparseFamily:
    """Union of the stopping families over all roots of one grid (roots where f = 0 skipped)."""
    dom = f.domain
    shift = tuple(shift) if shift is not None else (0,) * dom.dimension
    cubes = []
    for r in grid_roots(dom, shift):
        if f.values[r.slices(dom.J)].any():
            cubes.extend(cz_sparse(f, r, threshold).cubes)
    return SparseFamily(dom, shift, tuple(cubes))


# --------------------------------------------------------------------------- verification


@dataclass(frozen=True)
class SparseReport:
    min_ratio: Fraction  # min |E(Q)|/|Q|, exact
    disjoint: bool
    witness: str  # cube attaining the minimum

    @property
    def sparse(self) -> bool:
        return self.disjoint and self.min_ratio >= Fraction(1, 2)


def e_sets(S: SparseFamily, cubes: Sequence[DyadicCube] | None = None) -> tuple[np.ndarray, list[DyadicCube]]:
    """Owner array: cell -> index of the family cube whose E-set contains it (-1 if none).

    Painting from the largest cube to the smallest leaves each cell with the
    smallest family cube containing it, which is exactly the E-set rule.
    """
    cubes = list(S.cubes) if cubes is None else list(cubes)
    order = sorted(range(len(cubes)), key=lambda i: _canonical_key(cubes[i]))
    owner = np.full(S.domain.shape, -1, dtype=np.int64)
    for i in order:
        owner[cubes[i].slices(S.domain.J)] = i
    return owner, cubes


def verify_sparse(S: SparseFamily | Sequence[DyadicCube], domain: Domain | None = None) -> SparseReport:
    """Exact E-set ratios; accepts a raw cube list so duplicated cubes can be inspected."""
    if not isinstance(S, SparseFamily):
        cubes = list(S)
        if domain is None:
            raise SparseError("a raw cube list needs its domain")
        shifts = {tuple(q.shift) for q in cubes}
        if len(shifts) > 1:
            raise SparseError("cubes from different grids are mixed")
        dom = domain
        shift = shifts.pop() if shifts else (0,) * dom.dimension
    else:
        cubes, dom, shift = list(S.cubes), S.domain, S.shift
    if not cubes:
        return SparseReport(Fraction(1), True, "")
    for q in cubes:
        if tuple(q.shift) != tuple(shift):
            raise SparseError("cubes from different grids are mixed")
    J, n = dom.J, dom.dimension
    # duplicates share their E-set, which breaks disjointness
    disjoint = len(set(cubes)) == len(cubes)
    order = sorted(range(len(cubes)), key=lambda i: _canonical_key(cubes[i]))
    owner = np.full(dom.shape, -1, dtype=np.int64)
    for i in order:
        owner[cubes[i].slices(J)] = i
    counts = np.bincount(owner[owner >= 0].ravel(), minlength=len(cubes))
    # copies of one cube share one E-set; the painting credits it to a single copy
    per_cube: dict = {}
    for i, q in enumerate(cubes):
        per_cube[q] = per_cube.get(q, 0) + int(counts[i])
    best, wit = Fraction(2), ""
    for q, c in per_cube.items():
        r = Fraction(c, q.ncells(J, n))
        if r < best:
            best, wit = r, q.id
    return SparseReport(best, disjoint, wit)


# --------------------------------------------------------------------------- oscillation augmentation


def oscillation_augment(S: SparseFamily, b: GridFunction, factor: float = 2.0) -> SparseFamily:
    """Add, below every cube Q, the maximal R with ``<|b - b_Q|>_R > factor * <|b - b_Q|>_Q``."""
    dom = S.domain
    J, n = dom.J, dom.dimension
    bv = b.values
    members = set(S.cubes)
    queue = deque(S.cubes)
    while queue:
        Q = queue.popleft()
        X = bv[Q.slices(J)]
        bQ = float(tree_sum(X[None, ...], n)[0]) / X.size
        G = np.abs(X - bQ)
        osc = float(tree_sum(G[None, ...], n)[0]) / G.size
        if osc == 0:
            continue
        for R in _stopping_cubes(Q, G, J, n, lambda a: a > factor * osc):
            if R not in members:
                members.add(R)
                queue.append(R)
    return SparseFamily(dom, S.shift, tuple(members))


def _cube_mean(values: np.ndarray, q: DyadicCube, J: int, n: int) -> float:
    X = values[q.slices(J)]
    return float(tree_sum(X[None, ...], n)[0]) / X.size


def verify_oscillation_bound(S: SparseFamily, b: GridFunction) -> tuple[float, str]:
    """max over Q in S and x in Q of ``|b(x) - b_Q| / sum_{R in S, x in R within Q} osc_R``.

    Cells where both sides vanish are skipped; a zero denominator with a
    non-zero numerator gives +inf.
    """
    dom = S.domain
    J, n = dom.J, dom.dimension
    bv = b.values
    osc = {}
    for R in S.cubes:
        X = bv[R.slices(J)]
        m = float(tree_sum(X[None, ...], n)[0]) / X.size
        G = np.abs(X - m)
        osc[R] = float(tree_sum(G[None, ...], n)[0]) / G.size
    # descending through nested cubes: denominator restricted to Q equals the
    # sum over family cubes inside Q that contain x
    best, wit = 0.0, ""
    cubes = sorted(S.cubes, key=_canonical_key)
    for Q in cubes:
        sl = Q.slices(J)
        den = np.zeros(bv[sl].shape)
        for R in cubes:
            if R.level <= Q.level and Q.contains(R, J):
                rs = tuple(slice(a - q0, a - q0 + R.side_cells(J)) for a, q0 in zip(R.start, Q.start))
                den[rs] += osc[R]
        X = bv[sl]
        num = np.abs(X - float(tree_sum(X[None, ...], n)[0]) / X.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(num == 0, 0.0, num / den)
        m = float(r.max())
        if m > best:
            best, wit = m, Q.id
    return best, wit


# --------------------------------------------------------------------------- operators


def apply_AS(S: SparseFamily, f: GridFunction) -> GridFunction:
    dom = S.domain
    J, n = dom.J, dom.dimension
    out = np.zeros(dom.shape)
    for q in S.cubes:
        out[q.slices(J)] += _cube_mean(f.values, q, J, n)
    return GridFunction(dom, out)


def apply_Amh(S: SparseFamily, b: GridFunction, f: GridFunction, m: int, h: int, alpha: float = 0.0) -> GridFunction:
    """``sum_Q |b - b_Q|^(m-h) |Q|^(alpha/n) <|(b - b_Q)^h f|>_Q chi_Q``."""
    if not 0 <= h <= m:
        raise SparseError("need 0 <= h <= m")
    dom = S.domain
    J, n = dom.J, dom.dimension
    if not 0 <= alpha < n:
        raise SparseError("need 0 <= alpha < n")
    out = np.zeros(dom.shape)
    bv, fv = b.values, f.values
    for q in S.cubes:
        sl = q.slices(J)
        X = bv[sl]
        bq = float(tree_sum(X[None, ...], n)[0]) / X.size
        d = X - bq
        inner = np.abs(d**h * fv[sl])
        avg = float(tree_sum(inner[None, ...], n)[0]) / inner.size
        out[sl] += np.abs(d) ** (m - h) * (q.measure(n) ** (alpha / n) * avg)
    return GridFunction(dom, out)


def apply_Amh_sum(S: SparseFamily, b: GridFunction, f: GridFunction, m: int, alpha: float = 0.0) -> GridFunction:
    """``sum_{h=0}^m A^{m,h}_{S,alpha}(b, f)``."""
    total = np.zeros(S.domain.shape)
    for h in range(m + 1):
        total += apply_Amh(S, b, f, m, h, alpha).values
    return GridFunction(S.domain, total)


def indicator_norms_of(S: SparseFamily, beta: ExponentFunction) -> dict:
    """``||chi_Q||_beta`` for every cube of the family, grouped by level."""
    from .gphi import Power, cube_norms

    dom = S.domain
    psi = Power(beta)
    out = {}
    levels = sorted({q.level for q in S.cubes})
    for k in levels:
        view = level_view(dom, k, S.shift)
        norms = cube_norms(psi, None, view)
        for q in S.cubes:
            if q.level == k:
                out[q] = float(norms[view.index_of(q.start)])
    return out


def apply_Ibeta(S: SparseFamily, beta: ExponentFunction, f: GridFunction) -> GridFunction:
    """``sum_Q ||chi_Q||_beta f_Q chi_Q``."""
    dom = S.domain
    J, n = dom.J, dom.dimension
    norms = indicator_norms_of(S, beta)
    out = np.zeros(dom.shape)
    for q in S.cubes:
        out[q.slices(J)] += norms[q] * _cube_mean(f.values, q, J, n)
    return GridFunction(dom, out)


def apply_A_eta_iter(S: SparseFamily, eta: GridFunction, f: GridFunction, k: int) -> GridFunction:
    """``(A_S)_eta`` applied k times, where ``(A_S)_eta g = eta * A_S g``."""
    if k < 0:
        raise SparseError("k must be non-negative")
    g = f
    for _ in range(k):
        g = eta * apply_AS(S, g)
    return g


def chain_bound_ratio(S: SparseFamily, eta: GridFunction, Q: DyadicCube, k: int) -> float:
    """max over x in Q of ``(sum_R a_R chi_R(x))^k / (k! * nested chain sum)``.

    ``a_R = eta(R)/|R|`` over family cubes R inside Q.  The cubes containing x
    form a chain, so the nested sum over ``R_k ⊆ ... ⊆ R_1`` is the complete
    homogeneous symmetric polynomial of degree k in the ``a_R``.
    """
    dom = S.domain
    J, n = dom.J, dom.dimension
    inside = [R for R in S.cubes if Q.contains(R, J)]
    shape = tuple(Q.side_cells(J) for _ in range(n))
    # power sums p_j(x) = sum a_R^j over R containing x
    psums = [np.zeros(shape) for _ in range(k + 1)]
    for R in inside:
        aR = _cube_mean(eta.values, R, J, n)
        rs = tuple(slice(a - q0, a - q0 + R.side_cells(J)) for a, q0 in zip(R.start, Q.start))
        for j in range(1, k + 1):
            psums[j][rs] += aR**j
    # Newton identity for complete homogeneous polynomials: j h_j = sum_i p_i h_{j-i}
    hs = [np.ones(shape)]
    for j in range(1, k + 1):
        acc = np.zeros(shape)
        for i in range(1, j + 1):
            acc += psums[i] * hs[j - i]
        hs.append(acc / j)
    lhs = psums[1] ** k
    rhs = math.factorial(k) * hs[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(lhs == 0, 0.0, lhs / rhs)
    return float(r.max())


@dataclass(frozen=True)
class Prop31Report:
    constant: float
    witness: str
    augmented: SparseFamily
    b_norm: float


def verify_prop31(S: SparseFamily, b: GridFunction, eta: GridFunction, delta, f: GridFunction, k: int) -> Prop31Report:
    """max over Q in the augmented family of LHS/RHS of the iterated oscillation bound.

    LHS is ``int_Q |b - b_Q|^k |f|``; RHS is
    ``||b||^k ||chi_Q||_{n/delta}^k int_Q (A)^k_eta |f|``.
    """
    from .weights import bmo_eta_delta_norm, VarNorm

    dom = S.domain
    J, n = dom.J, dom.dimension
    St = oscillation_augment(S, b)
    bnorm = bmo_eta_delta_norm(b, eta, delta)
    a = VarNorm(delta, dom)
    absf = abs(f)
    Ak = apply_A_eta_iter(St, eta, absf, k).values
    best, wit = 0.0, ""
    h_n = dom.cell_measure
    for Q in St.cubes:
        sl = Q.slices(J)
        X = b.values[sl]
        bq = float(tree_sum(X[None, ...], n)[0]) / X.size
        lhs_cells = np.abs(X - bq) ** k * absf.values[sl]
        lhs = float(tree_sum(lhs_cells[None, ...], n)[0]) * h_n
        if lhs == 0:
            continue
        rhs = bnorm**k * a.value(Q) ** k * float(tree_sum(Ak[sl][None, ...], n)[0]) * h_n
        r = math.inf if rhs == 0 else lhs / rhs
        if r > best:
            best, wit = r, Q.id
    return Prop31Report(best, wit, St, bnorm)
