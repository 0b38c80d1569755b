"""Sparse-domination sweeps for commutators of singular and fractional integrals.

For each test function the candidate families are the stopping families of
``|f|`` on every shifted grid, each enlarged by its oscillation augmentation
with respect to ``b``.  The measured quantity is the pointwise ratio
``|T_b^m f| / sum_j sum_h A^{m,h}_{S_j, alpha}(b, f)`` and its supremum per
resolution.  Cells where the denominator vanishes are excluded and counted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..expr import parse_expression
from ..grid import Domain, GridFunction, sample
from ..operators import CZKernel, commutator_many
from ..sparse import apply_Amh_sum, cz_sparse_grid, oscillation_augment
from .config import ExperimentConfig
from .registry import register
from .report import Report, js, status
from .samplers import step_function, trial_rng

DEFAULT_SWEEP = (8, 10, 12)
STABILITY_FACTOR = 2.0
DEFAULT_SYMBOL = "abs(x1)^0.5"


def _box_indicator(dom: Domain, lo: float, hi: float) -> GridFunction:
    x = dom.centers()
    inside = np.all((x >= lo) & (x < hi), axis=-1)
    return GridFunction(dom, inside.astype(float))


def domination_functions(dom: Domain, seed: int = 0, count: int = 10) -> list[GridFunction]:
    """The fixed test suite: five closed-form functions, then seeded step functions.

    Every member is defined independently of the resolution.
    """
    x = dom.centers()
    r = np.sqrt((x**2).sum(axis=-1))
    side = dom.side / 2
    fixed = [
        _box_indicator(dom, -0.5 * side, 0.25 * side),
        _box_indicator(dom, 0.1 * side, 0.6 * side),
        GridFunction(dom, np.maximum(1.0 - (r / side) ** 2, 0.0)),
        GridFunction(dom, r ** (-0.3)),
        GridFunction(dom, np.sin(5.0 * x[..., 0] / side)),
    ]
    out = fixed[:count]
    i = 0
    while len(out) < count:
        out.append(step_function(dom, trial_rng(seed, "domination", i), pieces=16, signed=True))
        i += 1
    return out


def all_shift_codes(n: int) -> list[tuple]:
    return [tuple(c) for c in itertools.product((0, 1, 2), repeat=n)]


def candidate_families(f: GridFunction, b: GridFunction) -> list:
    """One augmented stopping family of ``|f|`` per shifted grid."""
    fams = []
    for sh in all_shift_codes(f.domain.dimension):
        S = cz_sparse_grid(abs(f), sh)
        fams.append(oscillation_augment(S, b))
    return fams


@dataclass(frozen=True)
class DominationResult:
    J: int
    sup_ratio: float
    witness: str
    zero_denominator_cells: int


def domination_ratio(kind: str, m: int, fs, b: GridFunction, alpha: float | None = None, K: CZKernel | None = None) -> DominationResult:
    """Supremum over the suite and over cells of the pointwise domination ratio."""
    dom = b.domain
    if kind == "czo":
        K = K or CZKernel("hilbert" if dom.dimension == 1 else "riesz1")
        a = 0.0
    else:
        a = float(alpha)
    Tf = commutator_many(kind, b, fs, m, K=K, alpha=alpha)
    best, wit, zeros = 0.0, "", 0
    for idx, (f, T) in enumerate(zip(fs, Tf)):
        den = np.zeros(dom.shape)
        for S in candidate_families(f, b):
            den += apply_Amh_sum(S, b, f, m, a).values
        num = np.abs(T.values)
        ok = den > 0
        zeros += int((~ok).sum())
        if not ok.any():
            continue
        ratio = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
        j = int(np.argmax(ratio))
        if ratio.flat[j] > best:
            best = float(ratio.flat[j])
            wit = f"f{idx} cell {tuple(int(c) for c in np.unravel_index(j, dom.shape))}"
    return DominationResult(dom.J, best, wit, zeros)


def stability_factor(values) -> float:
    """Largest factor between consecutive per-resolution suprema (1 if both vanish)."""
    worst = 1.0
    for a, b in zip(values, values[1:]):
        if a == 0 and b == 0:
            continue
        if a == 0 or b == 0 or not (math.isfinite(a) and math.isfinite(b)):
            return math.inf
        worst = max(worst, a / b, b / a)
    return worst


def verify_sparse_domination(kind: str, m: int, config: ExperimentConfig) -> Report:
    suite = f"domination_{kind}"
    rep = Report(suite, config.seed)
    Js = config.sweep(DEFAULT_SWEEP)
    alpha = float(config.operator.get("alpha", 0.5)) if kind == "fractional" else None
    count = int(config.param("functions", 10))
    sups = []
    for J in Js:
        dom = config.domain(J)
        b = sample(parse_expression(config.expr("b", DEFAULT_SYMBOL), dom.dimension), dom)
        res = domination_ratio(kind, m, domination_functions(dom, config.seed, count), b, alpha)
        rep.add(f"sup_ratio_m={m}", res.sup_ratio, res.witness, J)
        rep.add(f"zero_denominator_cells_m={m}", float(res.zero_denominator_cells), "", J)
        sups.append(res.sup_ratio)
    finite = all(math.isfinite(s) for s in sups)
    rep.add(f"finite_m={m}", max(sups), "", js(Js), status(finite))
    factor = stability_factor(sups)
    rep.add(f"stability_m={m}", factor, "", js(Js), status(factor <= STABILITY_FACTOR))
    return rep


def _m_values(cfg: ExperimentConfig) -> list[int]:
    if "m" in cfg.operator:
        return [int(cfg.operator["m"])]
    return [int(v) for v in cfg.param("m_values", [0, 1, 2])]


@register("domination_czo", "T2.1", kind="domination")
def domination_czo(cfg: ExperimentConfig) -> Report:
    """Pointwise sparse domination of Calderón-Zygmund commutators, swept over J."""
    rep = Report("domination_czo", cfg.seed)
    for m in _m_values(cfg):
        rep.extend(verify_sparse_domination("czo", m, cfg))
    return rep


@register("domination_fractional", "T2.2", kind="domination")
def domination_fractional(cfg: ExperimentConfig) -> Report:
    """Pointwise sparse domination of fractional-integral commutators, swept over J."""
    rep = Report("domination_fractional", cfg.seed)
    for m in _m_values(cfg):
        rep.extend(verify_sparse_domination("fractional", m, cfg))
    return rep
