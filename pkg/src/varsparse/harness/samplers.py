"""Seeded random test functions, exponents and weights.

Every random object is a cell-aligned step function on a fixed number of
pieces per axis, so the same seed describes the same function at every
resolution.
"""

from __future__ import annotations

import zlib

import numpy as np

from ..exponent import ExponentFunction
from ..grid import Domain, GridFunction


def trial_rng(seed: int, *keys) -> np.random.Generator:
    """A generator for one trial; string keys are hashed with CRC32."""
    spawn = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn))


def _expand(pieces: np.ndarray, dom: Domain) -> np.ndarray:
    out = pieces
    rep = dom.cells_per_axis // pieces.shape[0]
    for ax in range(dom.dimension):
        out = np.repeat(out, rep, axis=ax)
    return out


def _pieces(dom: Domain, pieces: int) -> int:
    return min(pieces, dom.cells_per_axis)


def step_function(
    dom: Domain,
    rng: np.random.Generator,
    pieces: int = 32,
    amp: tuple = (1e-2, 1e2),
    zero_prob: float = 0.25,
    signed: bool = False,
) -> GridFunction:
    """Log-uniform amplitudes on ``pieces`` intervals per axis; never identically zero."""
    k = _pieces(dom, pieces)
    shape = (k,) * dom.dimension
    vals = np.exp(rng.uniform(np.log(amp[0]), np.log(amp[1]), size=shape))
    zeros = rng.random(shape) < zero_prob
    signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    vals = np.where(zeros, 0.0, vals)
    if not vals.any():
        vals.flat[int(rng.integers(vals.size))] = amp[1]
    if signed:
        vals = vals * signs
    return GridFunction(dom, _expand(vals, dom))


def step_exponent(dom: Domain, rng: np.random.Generator, lo: float = 1.2, hi: float = 4.0, pieces: int = 8) -> ExponentFunction:
    k = _pieces(dom, pieces)
    vals = rng.uniform(lo, hi, size=(k,) * dom.dimension)
    return ExponentFunction(dom, _expand(vals, dom))


def smooth_exponent(dom: Domain, rng: np.random.Generator, lo: float = 1.2, hi: float = 4.0) -> ExponentFunction:
    """``mid + amp*sin(freq*x1 + phase)`` (summed over axes in 2D), inside [lo, hi]."""
    mid = rng.uniform(lo, hi)
    amp = rng.uniform(0, min(mid - lo, hi - mid)) / dom.dimension
    freq = rng.uniform(0.5, 4.0)
    phase = rng.uniform(0, 2 * np.pi)
    x = dom.centers()
    vals = mid + amp * np.sin(freq * x + phase).sum(axis=-1)
    return ExponentFunction(dom, vals, p_inf=mid)


def random_exponent(dom: Domain, rng: np.random.Generator, lo: float = 1.2, hi: float = 4.0) -> ExponentFunction:
    """Constant, smooth or step exponent, chosen at random."""
    kind = rng.integers(3)
    if kind == 0:
        return ExponentFunction.constant(dom, rng.uniform(lo, hi))
    if kind == 1:
        return smooth_exponent(dom, rng, lo, hi)
    return step_exponent(dom, rng, lo, hi)


def power_weight(dom: Domain, a: float) -> GridFunction:
    """``|x|^a`` sampled at cell centers (centers never hit the origin)."""
    r = np.sqrt((dom.centers() ** 2).sum(axis=-1))
    return GridFunction(dom, r**a)
