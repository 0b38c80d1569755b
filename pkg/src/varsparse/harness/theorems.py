"""Theorem pipelines: hypothesis audit, exponent bookkeeping and a conclusion probe.

A theorem run sweeps the resolutions of the config.  At each resolution it

1. computes every hypothesis constant (bump, weight class, symbol norm),
2. builds and checks the exponent relations cell by cell,
3. estimates the operator norm of the stated mapping from below.

The probe constant ``kappa(J) = probe(J) / H(J)`` divides the estimate by the
product ``H(J)`` of the hypothesis constants.  PASS means every hypothesis
stays finite and non-divergent under refinement and ``kappa(J) <= slack`` at
every J.  The theorems carry no explicit constants, so a PASS is labelled
"consistent with" the theorem, never "verifies".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exponent import ExponentFunction, delta_from
from ..expr import parse_expression
from ..gphi import Power, check_condition_F, example1, weighted_norm
from ..grid import Domain, DyadicCube, GridFunction, constant, indicator, level_views, sample
from ..operators import CZKernel, apply_czo, commutator_many, fractional_integral
from ..sparse import SparseFamily, apply_AS
from ..weights import (
    Constant,
    VarNorm,
    apq_constant,
    bmo_eta_delta_scan,
    bump_constant_gphi,
    bump_constant_power,
    divergent,
    extremal_v,
    lipschitz_a_norm,
    normalized_norm,
    t_infty_constant,
)
from .config import ExperimentConfig
from .registry import register
from .report import Report, js, status
from .samplers import step_function, trial_rng

DEFAULT_SWEEP = (6, 8, 10)
DEFAULT_PROBE_TRIALS = 20
RELATION_TOL = 1e-12


class TheoremError(ValueError):
    """Inconsistent exponent relations or hypotheses that cannot be set up."""


# --------------------------------------------------------------------------- operator-norm probe


@dataclass(frozen=True)
class OperatorSpec:
    """An operator to probe: ``identity``, ``sparse`` (A_S), ``czo`` or ``fractional`` commutators."""

    kind: str
    m: int = 0
    b: GridFunction | None = None
    alpha: float | None = None
    family: SparseFamily | None = None
    kernel: CZKernel | None = None

    def apply_many(self, fs: list[GridFunction]) -> list[GridFunction]:
        if self.kind == "identity":
            return list(fs)
        if self.kind == "sparse":
            return [apply_AS(self.family, f) for f in fs]
        if self.kind in ("czo", "fractional"):
            dom = fs[0].domain
            if self.m == 0 or self.b is None:
                if self.kind == "czo":
                    K = self.kernel or CZKernel("hilbert" if dom.dimension == 1 else "riesz1")
                    return [apply_czo(K, f) for f in fs]
                return [fractional_integral(self.alpha, f) for f in fs]
            return commutator_many(self.kind, self.b, fs, self.m, K=self.kernel, alpha=self.alpha)
        raise TheoremError(f"unknown operator kind {self.kind!r}")


@dataclass(frozen=True)
class NormEstimate:
    value: float
    witness: str
    ratios: tuple = field(repr=False)


def estimate_operator_norm(
    op: OperatorSpec,
    source: tuple,
    target: tuple,
    dom: Domain,
    trials: int = DEFAULT_PROBE_TRIALS,
    seed: int = 0,
    adversarial=(),
    tag: str = "probe",
) -> NormEstimate:
    """Lower estimate of ``||Op||`` from ``L^Psi_v`` (source) to ``L^Theta_w`` (target).

    ``source`` and ``target`` are ``(psi, weight)`` pairs; a weight of None
    means the unweighted space.  Candidates are the constant function,
    ``trials`` seeded step functions and the indicators of the ``adversarial``
    cubes.
    """
    psi_s, v = source
    psi_t, w = target
    fs = [constant(dom, 1.0)]
    names = ["constant"]
    for i in range(trials):
        fs.append(step_function(dom, trial_rng(seed, tag, i)))
        names.append(f"trial {i}")
    for q in adversarial:
        fs.append(indicator(dom, q))
        names.append(q.id)
    outs = op.apply_many(fs)
    ratios = []
    for f, g in zip(fs, outs):
        den = weighted_norm(psi_s, f, v) if v is not None else weighted_norm(psi_s, f, constant(dom, 1.0))
        num = weighted_norm(psi_t, g, w) if w is not None else weighted_norm(psi_t, g, constant(dom, 1.0))
        ratios.append(num / den)
    k = int(np.argmax(ratios))
    return NormEstimate(float(ratios[k]), names[k], tuple(ratios))


def attaining_cubes(dom: Domain, per_view) -> list[DyadicCube]:
    """The cube maximizing ``per_view(view)`` on every level and shift."""
    out = []
    for view in level_views(dom):
        vals = per_view(view)
        out.append(view.cube(int(np.argmax(vals))))
    return out


# --------------------------------------------------------------------------- shared pipeline


@dataclass
class TheoremSetup:
    hypotheses: dict  # name -> (value, witness)
    hypothesis_constant: float
    op: OperatorSpec
    source: tuple
    target: tuple
    adversarial: list
    checks: list = field(default_factory=list)  # (name, value, ok)


def _fn(cfg: ExperimentConfig, dom: Domain, name: str, default: str) -> GridFunction:
    return sample(parse_expression(cfg.expr(name, default), dom.dimension), dom)


def _exp(cfg: ExperimentConfig, dom: Domain, name: str, default: str) -> ExponentFunction:
    return ExponentFunction.from_expression(cfg.expr(name, default), dom)


def _run(tid: str, statement: str, cfg: ExperimentConfig, build) -> Report:
    rep = Report(tid, cfg.seed)
    Js = cfg.sweep(DEFAULT_SWEEP)
    trials = int(cfg.param("probe_trials", min(cfg.trials, DEFAULT_PROBE_TRIALS)))
    hyp_series: dict[str, list] = {}
    kappas = []
    checks_ok = True
    for J in Js:
        dom = cfg.domain(J)
        setup = build(cfg, dom)
        for name, (value, wit) in setup.hypotheses.items():
            rep.add(f"hypothesis_{name}", value, wit, J)
            hyp_series.setdefault(name, []).append(value)
        for name, value, ok in setup.checks:
            rep.add(name, value, "", J, status(ok))
            checks_ok &= ok
        est = estimate_operator_norm(setup.op, setup.source, setup.target, dom, trials, cfg.seed, setup.adversarial, tid)
        rep.add("probe_ratio", est.value, est.witness, J)
        rep.add("hypothesis_constant", setup.hypothesis_constant, "", J)
        kappa = est.value / setup.hypothesis_constant if setup.hypothesis_constant > 0 else math.inf
        rep.add("probe_over_hypothesis", kappa, est.witness, J)
        kappas.append(kappa)
    hyp_ok = True
    for name, vals in hyp_series.items():
        ok = all(math.isfinite(v) for v in vals) and not divergent(vals, Js)
        hyp_ok &= ok
        rep.add(f"hypothesis_{name}_bounded", max(vals), "", js(Js), status(ok))
    worst = max(kappas)
    probe_ok = all(math.isfinite(k) for k in kappas) and worst <= cfg.slack
    rep.add("probe_over_hypothesis_max", worst, f"slack {cfg.slack}", js(Js), status(probe_ok))
    ref = kappas[0]
    growth = max(k / ref for k in kappas) if ref > 0 and all(math.isfinite(k) for k in kappas) else math.inf
    rep.add("probe_growth_over_coarsest", growth, "", js(Js))
    ok = hyp_ok and probe_ok and checks_ok
    label = ("consistent with " if ok else "not consistent with ") + statement
    rep.add("conclusion", worst, label, js(Js), status(ok))
    return rep


def _bookkeeping_residual(lhs: np.ndarray, rhs: np.ndarray, what: str) -> float:
    res = float(np.max(np.abs(lhs - rhs)))
    if not res <= RELATION_TOL:
        raise TheoremError(f"exponent relation {what} violated (max residual {res:.3e})")
    return res


def _czo_kernel(dom: Domain) -> CZKernel:
    return CZKernel("hilbert" if dom.dimension == 1 else "riesz1")


# --------------------------------------------------------------------------- T1.1


def _build_t11(cfg: ExperimentConfig, dom: Domain) -> TheoremSetup:
    p = _exp(cfg, dom, "p", "2 + 0.25*sin(3*x1)")
    pc = p.conjugate()
    if not (p.p_minus > 1 and math.isfinite(p.p_plus)):
        raise TheoremError("T1.1 needs 1 < p^- <= p^+ < inf")
    S = float(cfg.param("S", 2.0))
    R = float(cfg.param("R", 2.0))
    if not S > p.p_plus / p.p_minus:
        raise TheoremError(f"S = {S} must exceed p+/p- = {p.p_plus / p.p_minus:.6g}")
    if not R > pc.p_plus / pc.p_minus:
        raise TheoremError(f"R = {R} must exceed (p')+/(p')- = {pc.p_plus / pc.p_minus:.6g}")
    m = int(cfg.operator.get("m", 1))
    a_delta = cfg.param("a_delta")
    a = Constant(1.0) if a_delta is None else VarNorm(float(a_delta), dom)
    w = _fn(cfg, dom, "w", "abs(x1)^0.2")
    b = _fn(cfg, dom, "b", "abs(x1)^0.5")
    E = Power(p.scale(S))
    v = _fn(cfg, dom, "v", "1") if "v" in cfg.expressions else extremal_v(w, E, a, m)
    bump = bump_constant_power(w, v, p, S, R, a, m)
    bnorm = lipschitz_a_norm(b, a)
    tinf = t_infty_constant(a, dom)
    hyp = {"bump": (bump.value, bump.witness), "b_in_L_a": (bnorm.value, bnorm.witness), "t_infty": (tinf.value, tinf.witness)}
    checks = []
    if "v" not in cfg.expressions:
        checks.append(("remark_bump_at_most_one", bump.value, bump.value <= 1 + 1e-9))
    Rp = Power(pc.scale(R))
    adv = attaining_cubes(dom, lambda view: a.values(view) ** m * normalized_norm(E, w.values, view) * normalized_norm(Rp, 1.0 / v.values, view))
    H = bump.value * bnorm.value**m if m else bump.value
    op = OperatorSpec("czo", m, b, kernel=_czo_kernel(dom))
    P = Power(p)
    return TheoremSetup(hyp, H, op, (P, v), (P, w), adv, checks)


@register("T1.1", "theorem_1_1", kind="theorem")
def theorem_11(cfg: ExperimentConfig) -> Report:
    """Commutators with symbols in L_a under bump conditions with S p and R p'."""
    return _run("T1.1", "T_b^m: L^p_v -> L^p_w", cfg, _build_t11)


# --------------------------------------------------------------------------- T1.2


def _build_t12(cfg: ExperimentConfig, dom: Domain) -> TheoremSetup:
    n = dom.dimension
    p = _exp(cfg, dom, "p", "2")
    r = _exp(cfg, dom, "r", "2 + 0.25*sin(2*x1)")
    alpha = float(cfg.param("alpha", 0.9))
    if not 0 < alpha < n:
        raise TheoremError("T1.2 needs 0 < alpha < n")
    if not n / alpha < r.p_minus:
        raise TheoremError(f"n/alpha = {n / alpha:.6g} must be below r^- = {r.p_minus:.6g}")
    delta = delta_from(r, alpha)
    _bookkeeping_residual(delta.values / n, alpha / n - 1.0 / r.values, "delta/n = alpha/n - 1/r")
    m = int(cfg.operator.get("m", 1))
    sigma = float(cfg.param("sigma", 2.0))
    sigma_e = float(cfg.param("sigma_E", 2.0))
    A, B, D = example1(p, sigma)
    E, H, Jf = example1(p.conjugate(), sigma_e)
    w = _fn(cfg, dom, "w", "abs(x1)^0.2")
    b = _fn(cfg, dom, "b", "abs(x1)^0.5")
    a = VarNorm(delta, dom)
    v = _fn(cfg, dom, "v", "1") if "v" in cfg.expressions else extremal_v(w, E, a, m)
    bump = bump_constant_gphi(w, v, E, A, a, m)
    bnorm = lipschitz_a_norm(b, a)
    fA = check_condition_F(A, B, D, dom)
    fE = check_condition_F(E, H, Jf, dom)
    hyp = {
        "cond1": (bump.value, bump.witness),
        "b_in_L_delta": (bnorm.value, bnorm.witness),
        "F_ABD_c1": (fA.c1, fA.c1_witness),
        "F_ABD_c2": (fA.c2, ""),
        "F_ABD_c3": (fA.c3, fA.c3_witness),
        "F_EHJ_c1": (fE.c1, fE.c1_witness),
        "F_EHJ_c2": (fE.c2, ""),
        "F_EHJ_c3": (fE.c3, fE.c3_witness),
    }
    checks = []
    if "v" not in cfg.expressions:
        checks.append(("remark_cond1_at_most_one", bump.value, bump.value <= 1 + 1e-9))
    adv = attaining_cubes(dom, lambda view: a.values(view) ** m * normalized_norm(E, w.values, view) * normalized_norm(A, 1.0 / v.values, view))
    Hc = bump.value * bnorm.value**m if m else bump.value
    op = OperatorSpec("czo", m, b, kernel=_czo_kernel(dom))
    P = Power(p)
    return TheoremSetup(hyp, Hc, op, (P, v), (P, w), adv, checks)


@register("T1.2", "theorem_1_2", kind="theorem")
def theorem_12(cfg: ExperimentConfig) -> Report:
    """Commutators with variable Lipschitz symbols under GPhi bump conditions and condition F."""
    return _run("T1.2", "T_b^m: L^p_v -> L^p_w", cfg, _build_t12)


# --------------------------------------------------------------------------- T1.4 / T1.5


def _bloom_setup(cfg: ExperimentConfig, dom: Domain, fractional: bool) -> TheoremSetup:
    n = dom.dimension
    m = int(cfg.operator.get("m", 1))
    if m < 1:
        raise TheoremError("the Bloom-type theorems need m >= 1")
    if fractional:
        alpha = float(cfg.operator.get("alpha", 0.5))
        p = _exp(cfg, dom, "p", "4/3")
        q = _exp(cfg, dom, "q", "4")
    else:
        alpha = 0.0
        p = _exp(cfg, dom, "p", "2")
        q = _exp(cfg, dom, "q", "2.5")
    if (p.values >= q.values).any():
        raise TheoremError("need p < q on every cell")
    gap = 1.0 / p.values - 1.0 / q.values
    dv = (n * gap - alpha) / m
    if (dv < -RELATION_TOL).any():
        raise TheoremError(f"(m delta + alpha)/n = 1/p - 1/q forces delta < 0 (min {dv.min():.3e})")
    dv = np.maximum(dv, 0.0)
    _bookkeeping_residual((m * dv + alpha) / n, gap, "(m delta + alpha)/n = 1/p - 1/q")
    delta = GridFunction(dom, dv)
    mu = _fn(cfg, dom, "mu", "abs(x1)^0.1")
    lam = _fn(cfg, dom, "lambda", "abs(x1)^0.1")
    eta = (mu * lam.map(lambda x: 1.0 / x)).map(lambda x: x ** (1.0 / m))
    b = _fn(cfg, dom, "b", "abs(x1)^0.5")
    amu = apq_constant(mu, p, q)
    alam = apq_constant(lam, p, q)
    bnorm = bmo_eta_delta_scan(b, eta, delta)
    hyp = {"mu_in_Apq": (amu.value, amu.witness), "lambda_in_Apq": (alam.value, alam.witness), "b_in_BMO_eta_delta": (bnorm.value, bnorm.witness)}
    checks = [("delta_min", float(dv.min()), True), ("delta_max", float(dv.max()), float(dv.max()) < n)]
    Qn, Pc = Power(q), Power(p.conjugate())
    adv = attaining_cubes(dom, lambda view: normalized_norm(Qn, lam.values, view) * normalized_norm(Pc, 1.0 / mu.values, view))
    H = amu.value * alam.value * bnorm.value**m
    if fractional:
        op = OperatorSpec("fractional", m, b, alpha=alpha)
    else:
        op = OperatorSpec("czo", m, b, kernel=_czo_kernel(dom))
    return TheoremSetup(hyp, H, op, (Power(p), mu), (Qn, lam), adv, checks)


@register("T1.4", "theorem_1_4", kind="theorem")
def theorem_14(cfg: ExperimentConfig) -> Report:
    """Bloom-type bound for CZO commutators from L^p_mu to L^q_lambda."""
    return _run("T1.4", "T_b^m: L^p_mu -> L^q_lambda", cfg, lambda c, d: _bloom_setup(c, d, False))


@register("T1.5", "theorem_1_5", kind="theorem")
def theorem_15(cfg: ExperimentConfig) -> Report:
    """Bloom-type bound for fractional-integral commutators from L^p_mu to L^q_lambda."""
    return _run("T1.5", "(I_alpha)_b^m: L^p_mu -> L^q_lambda", cfg, lambda c, d: _bloom_setup(c, d, True))


def verify_theorem(theorem_id: str, config: ExperimentConfig) -> Report:
    from .registry import resolve

    suite = resolve(theorem_id)
    if suite.kind != "theorem":
        raise TheoremError(f"{theorem_id!r} is not a theorem suite")
    return suite.func(config)
