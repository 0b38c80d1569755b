"""Uniform dyadic discretisation of a truncated box.

The box is ``[-2^L, 2^L)^n`` split into cells of side ``h = 2^-J``.  A grid
function is constant on cells; every integral is an exact Riemann sum over
cells, accumulated in a fixed balanced-tree order so that the integral over a
dyadic cube is exactly the sum of the integrals over its children.

Shifted grids use, per axis, a code ``c`` in ``{0, 1, 2}`` (shift ``c/3``).
Level ``k`` cubes of the shifted grid start at ``d_k + i*2^(k+J)`` cells with

    d_{-J} = 0,   d_k = d_{k-1} + c * (-1)^k * 2^(k-1+J),

the integer analogue of the classical ``(-1)^k 2^k c/3`` offsets.  Consecutive
offsets differ by a multiple of the child side, so cubes of one shifted grid
are nested or disjoint.  Cubes sticking out of the box are dropped.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .expr import Expression, ExpressionDomainError, compile_expression

DEFAULT_CELL_BUDGET = 2**24


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    dimension: int
    L: int
    J: int
    shifts: tuple = None  # tuple of per-axis shift codes; default: unshifted grid only
    budget: int = DEFAULT_CELL_BUDGET

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise GridError("dimension must be 1 or 2")
        # L = -1 gives the unit box [-1/2, 1/2)^n
        if self.L < -1:
            raise GridError("L must be >= -1")
        if self.J < 1:
            raise GridError("J must be >= 1")
        if self.cell_count > self.budget:
            raise GridError(
                f"{self.cell_count} cells exceed the budget of {self.budget}"
            )
        shifts = self.shifts
        if shifts is None:
            shifts = ((0,) * self.dimension,)
        shifts = tuple(tuple(int(c) for c in s) for s in shifts)
        for s in shifts:
            if len(s) != self.dimension or any(c not in (0, 1, 2) for c in s):
                raise GridError(f"invalid shift {s}")
        object.__setattr__(self, "shifts", shifts)

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def cells_per_axis(self) -> int:
        return 2 ** (self.L + self.J + 1)

    @property
    def cell_count(self) -> int:
        return self.cells_per_axis**self.dimension

    @property
    def h(self) -> float:
        return 2.0**-self.J

    @property
    def cell_measure(self) -> float:
        return self.h**self.dimension

    @property
    def lower(self) -> float:
        return -(2.0**self.L)

    @property
    def side(self) -> float:
        return 2.0 ** (self.L + 1)

    @property
    def measure(self) -> float:
        return self.side**self.dimension

    @property
    def shape(self) -> tuple:
        return (self.cells_per_axis,) * self.dimension

    @property
    def kmin(self) -> int:
        return -self.J

    @property
    def kmax(self) -> int:
        return self.L + 1

    def centers_1d(self) -> np.ndarray:
        return self.lower + (np.arange(self.cells_per_axis) + 0.5) * self.h

    def centers(self) -> np.ndarray:
        """Cell centers, shape ``shape + (n,)``."""
        c = self.centers_1d()
        mesh = np.meshgrid(*([c] * self.dimension), indexing="ij")
        return np.stack(mesh, axis=-1)

    def with_shifts(self, shifts) -> "Domain":
        return Domain(self.dimension, self.L, self.J, tuple(shifts), self.budget)

    def with_all_shifts(self) -> "Domain":
        return self.with_shifts(itertools.product((0, 1, 2), repeat=self.dimension))

    def with_resolution(self, J: int) -> "Domain":
        return Domain(self.dimension, self.L, J, self.shifts, self.budget)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "L": self.L,
            "J": self.J,
            "shifts": [list(s) for s in self.shifts],
            "budget": self.budget,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        shifts = d.get("shifts")
        return cls(
            int(d["dimension"]),
            int(d["L"]),
            int(d["J"]),
            None if shifts is None else tuple(tuple(s) for s in shifts),
            int(d.get("budget", DEFAULT_CELL_BUDGET)),
        )


def shift_offset(J: int, level: int, code: int) -> int:
    """Cell offset ``d_k`` of level ``level`` cubes for one axis."""
    d = 0
    for i in range(-J + 1, level + 1):
        d += code * (-1) ** (i % 2) * 2 ** (i - 1 + J)
    return d


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    start: tuple  # corner cell index per axis
    shift: tuple

    def side_cells(self, J: int) -> int:
        return 2 ** (self.level + J)

    @property
    def side(self) -> float:
        return 2.0**self.level

    def measure(self, n: int) -> float:
        return 2.0 ** (self.level * n)

    def slices(self, J: int) -> tuple:
        s = self.side_cells(J)
        return tuple(slice(a, a + s) for a in self.start)

    def ncells(self, J: int, n: int) -> int:
        return self.side_cells(J) ** n

    def contains(self, other: "DyadicCube", J: int) -> bool:
        s, t = self.side_cells(J), other.side_cells(J)
        return all(a <= b and b + t <= a + s for a, b in zip(self.start, other.start))

    def children(self, J: int) -> list["DyadicCube"]:
        if self.level <= -J:
            return []
        half = self.side_cells(J) // 2
        out = []
        for offs in itertools.product((0, half), repeat=len(self.start)):
            out.append(
                DyadicCube(self.level - 1, tuple(a + o for a, o in zip(self.start, offs)), self.shift)
            )
        return out

    @property
    def id(self) -> str:
        sh = "".join(str(c) for c in self.shift)
        st = ",".join(str(a) for a in self.start)
        return f"g{sh}:k{self.level}:{st}"

    @classmethod
    def from_id(cls, text: str) -> "DyadicCube":
        g, k, st = text.split(":")
        return cls(int(k[1:]), tuple(int(a) for a in st.split(",")), tuple(int(c) for c in g[1:]))

    def center(self, dom: Domain) -> tuple:
        s = self.side_cells(dom.J)
        return tuple(dom.lower + (a + s / 2) * dom.h for a in self.start)


@dataclass(frozen=True)
class LevelView:
    """All in-box cubes of one level of one (possibly shifted) grid."""

    domain: Domain
    level: int
    shift: tuple
    side: int  # cells
    offsets: tuple  # first in-box cube start, per axis
    counts: tuple  # number of in-box cubes, per axis

    @property
    def ncubes(self) -> int:
        return int(np.prod(self.counts)) if self.counts else 0

    @property
    def cube_measure(self) -> float:
        return 2.0 ** (self.level * self.domain.dimension)

    @property
    def cells_per_cube(self) -> int:
        return self.side**self.domain.dimension

    def index_of(self, start: Sequence[int]) -> int:
        idx = 0
        for a, o, m in zip(start, self.offsets, self.counts):
            i, r = divmod(a - o, self.side)
            if r or not 0 <= i < m:
                raise GridError(f"cube start {start} not in view (level {self.level})")
            idx = idx * m + i
        return idx

    def cube(self, i: int) -> DyadicCube:
        coords = np.unravel_index(i, self.counts)
        return DyadicCube(
            self.level,
            tuple(int(o + c * self.side) for o, c in zip(self.offsets, coords)),
            self.shift,
        )

    def cubes(self) -> list[DyadicCube]:
        return [self.cube(i) for i in range(self.ncubes)]

    def region(self) -> tuple:
        return tuple(slice(o, o + m * self.side) for o, m in zip(self.offsets, self.counts))

    def blocks(self, arr: np.ndarray) -> np.ndarray:
        """Cells of each cube: shape ``(ncubes, side[, side])``."""
        sub = arr[self.region()]
        s = self.side
        if self.domain.dimension == 1:
            return sub.reshape(self.counts[0], s)
        m0, m1 = self.counts
        return sub.reshape(m0, s, m1, s).transpose(0, 2, 1, 3).reshape(m0 * m1, s, s)

    def spread(self, per_cube: np.ndarray, fill=np.nan) -> np.ndarray:
        """Cell array holding each cube's value on its cells (``fill`` outside)."""
        out = np.full(self.domain.shape, fill, dtype=np.result_type(per_cube, type(fill)))
        s = self.side
        if self.domain.dimension == 1:
            out[self.region()] = np.repeat(per_cube, s)
        else:
            m0, m1 = self.counts
            v = np.asarray(per_cube).reshape(m0, m1)
            out[self.region()] = np.repeat(np.repeat(v, s, axis=0), s, axis=1)
        return out

    def to_cells(self, blocks: np.ndarray, fill=0.0) -> np.ndarray:
        """Inverse of :meth:`blocks` for arrays of shape ``(ncubes, side[, side])``."""
        out = np.full(self.domain.shape, fill, dtype=np.result_type(blocks, type(fill)))
        s = self.side
        if self.domain.dimension == 1:
            out[self.region()] = blocks.reshape(-1)
        else:
            m0, m1 = self.counts
            out[self.region()] = blocks.reshape(m0, m1, s, s).transpose(0, 2, 1, 3).reshape(m0 * s, m1 * s)
        return out


def level_view(dom: Domain, level: int, shift: Sequence[int] | None = None) -> LevelView:
    if not dom.kmin <= level <= dom.kmax:
        raise GridError(f"level {level} outside [{dom.kmin}, {dom.kmax}]")
    shift = tuple(shift) if shift is not None else (0,) * dom.dimension
    s = 2 ** (level + dom.J)
    N = dom.cells_per_axis
    offsets, counts = [], []
    for code in shift:
        o = shift_offset(dom.J, level, code) % s
        offsets.append(o)
        counts.append(max(0, (N - o) // s))
    return LevelView(dom, level, shift, s, tuple(offsets), tuple(counts))


def level_views(dom: Domain, kmin: int | None = None, kmax: int | None = None, shifts=None) -> list[LevelView]:
    """Views in canonical order: level-major, then shift, skipping empty levels."""
    kmin = dom.kmin if kmin is None else kmin
    kmax = dom.kmax if kmax is None else kmax
    if not dom.kmin <= kmin <= kmax <= dom.kmax:
        raise GridError(f"level range [{kmin}, {kmax}] outside [{dom.kmin}, {dom.kmax}]")
    shifts = dom.shifts if shifts is None else shifts
    out = []
    for k in range(kmin, kmax + 1):
        for sh in shifts:
            v = level_view(dom, k, sh)
            if v.ncubes:
                out.append(v)
    return out


def enumerate_cubes(dom: Domain, kmin: int | None = None, kmax: int | None = None, shifts=None) -> list[DyadicCube]:
    cubes = []
    for v in level_views(dom, kmin, kmax, shifts):
        cubes.extend(v.cubes())
    return cubes


def count_clipped(dom: Domain, kmin: int | None = None, kmax: int | None = None, shifts=None) -> int:
    """Number of grid cubes that meet the box but stick out of it."""
    kmin = dom.kmin if kmin is None else kmin
    kmax = dom.kmax if kmax is None else kmax
    shifts = dom.shifts if shifts is None else shifts
    N = dom.cells_per_axis
    total = 0
    for k in range(kmin, kmax + 1):
        for sh in shifts:
            v = level_view(dom, k, sh)
            meeting = 1
            for o, m in zip(v.offsets, v.counts):
                partial = (o > 0) + ((N - o) % v.side > 0)
                meeting *= m + partial
            total += meeting - v.ncubes
    return total


# --------------------------------------------------------------------------- summation


def tree_sum(blocks: np.ndarray, ndim: int) -> np.ndarray:
    """Balanced-tree sum over the trailing ``ndim`` axes (each a power of two).

    Axes are halved alternately, so the sum over an aligned sub-block is an
    exact intermediate of the sum over the block.
    """
    x = np.asarray(blocks, dtype=float)
    axes = list(range(x.ndim - ndim, x.ndim))
    while any(x.shape[a] > 1 for a in axes):
        for a in axes:
            if x.shape[a] > 1:
                lo = [slice(None)] * x.ndim
                hi = [slice(None)] * x.ndim
                lo[a], hi[a] = slice(0, None, 2), slice(1, None, 2)
                x = x[tuple(lo)] + x[tuple(hi)]
    return x.reshape(x.shape[: x.ndim - ndim])


# --------------------------------------------------------------------------- grid functions


@dataclass(frozen=True, eq=False)
class GridFunction:
    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.domain.shape:
            if v.size == self.domain.cell_count:
                v = v.reshape(self.domain.shape)
            else:
                raise GridError(f"expected {self.domain.cell_count} values, got {v.size}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    # arithmetic helpers keep the domain
    def _wrap(self, arr) -> "GridFunction":
        return GridFunction(self.domain, arr)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.domain.shape != self.domain.shape or other.domain.L != self.domain.L:
                raise GridError("grid functions live on different domains")
            return other.values
        return other

    def __add__(self, o):
        return self._wrap(self.values + self._other(o))

    __radd__ = __add__

    def __sub__(self, o):
        return self._wrap(self.values - self._other(o))

    def __rsub__(self, o):
        return self._wrap(self._other(o) - self.values)

    def __mul__(self, o):
        return self._wrap(self.values * self._other(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self._wrap(self.values / self._other(o))

    def __rtruediv__(self, o):
        return self._wrap(self._other(o) / self.values)

    def __neg__(self):
        return self._wrap(-self.values)

    def __pow__(self, s):
        return self._wrap(self.values ** self._other(s))

    def __abs__(self):
        return self._wrap(np.abs(self.values))

    def map(self, fn) -> "GridFunction":
        return self._wrap(fn(self.values))

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def restrict(self, cube: DyadicCube) -> np.ndarray:
        _check_cube(self.domain, cube)
        return self.values[cube.slices(self.domain.J)]

    def indicator_of(self, cube: DyadicCube) -> "GridFunction":
        return indicator(self.domain, cube)


def _check_cube(dom: Domain, cube: DyadicCube):
    s = cube.side_cells(dom.J)
    if s < 1 or cube.level > dom.kmax or len(cube.start) != dom.dimension:
        raise GridError(f"cube {cube.id} does not fit the domain")
    if any(a < 0 or a + s > dom.cells_per_axis for a in cube.start):
        raise GridError(f"cube {cube.id} lies outside the box")


def constant(dom: Domain, c: float) -> GridFunction:
    return GridFunction(dom, np.full(dom.shape, float(c)))


def indicator(dom: Domain, cube: DyadicCube, value: float = 1.0) -> GridFunction:
    _check_cube(dom, cube)
    v = np.zeros(dom.shape)
    v[cube.slices(dom.J)] = value
    return GridFunction(dom, v)


def root_cube(dom: Domain) -> DyadicCube:
    return DyadicCube(dom.kmax, (0,) * dom.dimension, (0,) * dom.dimension)


def sample(expr: Expression, dom: Domain) -> GridFunction:
    """Evaluate ``expr`` at every cell center."""
    if expr.dimension != dom.dimension:
        raise GridError(
            f"expression has dimension {expr.dimension}, domain has {dom.dimension}"
        )
    fn = compile_expression(expr)
    c = dom.centers_1d().tolist()
    out = np.empty(dom.shape)
    for idx in itertools.product(range(dom.cells_per_axis), repeat=dom.dimension):
        point = tuple(c[i] for i in idx)
        try:
            out[idx] = fn(point)
        except ExpressionDomainError as exc:
            raise ExpressionDomainError(f"{exc} at cell {idx} (center {point})") from None
    return GridFunction(dom, out)


def integrate(f: GridFunction) -> float:
    dom = f.domain
    return float(tree_sum(f.values[None, ...], dom.dimension)[0] * dom.cell_measure)


def cube_integral(f: GridFunction, cube: DyadicCube) -> float:
    block = f.restrict(cube)
    return float(tree_sum(block[None, ...], f.domain.dimension)[0] * f.domain.cell_measure)


def cube_average(f: GridFunction, cube: DyadicCube) -> float:
    block = f.restrict(cube)
    return float(tree_sum(block[None, ...], f.domain.dimension)[0] / block.size)


def block_averages(values: np.ndarray, view: LevelView) -> np.ndarray:
    b = view.blocks(values)
    return tree_sum(b, view.domain.dimension) / view.cells_per_cube


# --------------------------------------------------------------------------- I/O


def dump_csv(f: GridFunction, path: str | Path) -> None:
    """Write ``k,i1[,i2],value`` rows plus a ``.json`` sidecar with the domain."""
    path = Path(path)
    dom = f.domain
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + [f"i{a + 1}" for a in range(dom.dimension)] + ["value"])
        for idx in itertools.product(range(dom.cells_per_axis), repeat=dom.dimension):
            w.writerow([dom.kmin, *idx, repr(float(f.values[idx]))])
    path.with_suffix(".json").write_text(json.dumps(dom.to_dict(), sort_keys=True, indent=2) + "\n")


def load_csv(path: str | Path) -> GridFunction:
    path = Path(path)
    dom = Domain.from_dict(json.loads(path.with_suffix(".json").read_text()))
    out = np.full(dom.shape, np.nan)
    with path.open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[0] != "k" or header[-1] != "value" or len(header) != dom.dimension + 2:
            raise GridError(f"bad grid CSV header {header}")
        for row in r:
            if int(row[0]) != dom.kmin:
                raise GridError("only cell-level rows are supported")
            out[tuple(int(a) for a in row[1:-1])] = float(row[-1])
    if np.isnan(out).any():
        raise GridError("grid CSV does not cover every cell")
    return GridFunction(dom, out)
