"""Experiment runners behind the CLI.

Each runner returns an :class:`ExperimentReport` whose rows carry the
value, its standard error, the target and the tolerance, so every verdict
can be recomputed from ``report.csv`` alone. Replica ``r`` always draws
from stream ``r`` and results are merged in replica order, so reports do
not depend on the thread count.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import NumericalError, SelfSimError, ValidationError
from ..functionals import (
    Regime,
    classify_regime,
    f_n_statistic,
    max_admissible_n,
    reference_local_time,
    theorem3_statistic,
)
from ..limit_moments import (
    MomentQuery,
    determinacy_check,
    limit_moment,
    moment_upper_bound,
    sample_limit_mixture,
    stirling_growth,
)
from ..process_models import Family, ProcessSpec, check_assumption_A, check_assumption_B, check_slnd_spectral
from ..simulate import map_replicas, sample_path
from ..slnd import estimate_kappa_slnd
from ..spectral_constants import compute_C, compute_D, direct_C_quadrature, lemma_bounds_check, verify_D_limit
from .config import ExperimentConfig, ExperimentKind
from .ks import ks_two_sample
from .outputs import ExperimentReport

# seed offset for the independent paths behind the limit-mixture samples
MIXTURE_SEED_OFFSET = 0x5EED


class ReplicaFailure(SelfSimError):
    """A replica raised; carries the replica index and the stage."""

    def __init__(self, replica: int, stage: str, cause: BaseException):
        super().__init__(f"replica {replica}, stage {stage!r}: {type(cause).__name__}: {cause}")
        self.replica = replica
        self.stage = stage
        self.cause = cause

    @property
    def numerical(self) -> bool:
        return isinstance(self.cause, NumericalError)


def _guard(stage: str, fn: Callable[[int], object]) -> Callable[[int], object]:
    def run(r: int):
        try:
            return fn(r)
        except SelfSimError as exc:
            raise ReplicaFailure(r, stage, exc) from exc
    return run


# ----------------------------------------------------------------------------
# sample moments


def central_moments(x: np.ndarray) -> dict[str, float]:
    """Mean, central second and fourth moments and skewness, with delta-method errors."""
    x = np.asarray(x, dtype=float)
    R = x.size
    mean = float(x.mean())
    c = x - mean
    mu = {k: float(np.mean(c ** k)) for k in range(2, 9)}
    m2, m3, m4 = mu[2], mu[3], mu[4]
    out = {
        "mean": mean,
        "mean_se": math.sqrt(m2 / R),
        "m2": m2,
        "m2_se": math.sqrt(max(m4 - m2 * m2, 0.0) / R),
        "m4": m4,
        "m4_se": math.sqrt(max(mu[8] - m4 * m4 - 8 * m3 * mu[5] + 16 * m2 * m3 * m3, 0.0) / R),
        "skew": m3 / m2 ** 1.5 if m2 > 0 else 0.0,
        "skew_se": math.sqrt(6.0 * (R - 2) / ((R + 1) * (R + 3))),
    }
    return out


def _product_moment(samples: np.ndarray, m_vec) -> tuple[float, float]:
    prod = np.prod(samples ** np.asarray(m_vec)[None, :], axis=1)
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(prod.size))


# ----------------------------------------------------------------------------
# shared pieces


def assumption_sigma(spec: ProcessSpec) -> float:
    """``sigma`` of Assumption (A), fitted from the increment variance."""
    if spec.family is Family.FBM:
        return 1.0
    rep = check_assumption_A(spec, np.geomspace(0.1, 10.0, 9), np.geomspace(1e-9, 1e-1, 33))
    return rep.sigma_hat


def _check_scales(cfg: ExperimentConfig) -> None:
    dt = cfg.t_max / cfg.N
    top = max_admissible_n(cfg.spec.H_eff, dt, cfg.multiple)
    if max(cfg.n_list) > top * (1 + 1e-12):
        raise ValidationError(
            f"n = {max(cfg.n_list):g} is too fine for grid.N = {cfg.N} "
            f"(largest admissible n is {top:.4g} with grid.multiple = {cfg.multiple:g})"
        )


def _limit_constant(cfg: ExperimentConfig, sigma: float) -> tuple[float, Regime]:
    H, d = cfg.spec.H_eff, cfg.spec.dimension
    regime = classify_regime(H, d, cfg.f.beta_class)
    if regime is Regime.CRITICAL:
        return compute_D(H, d, cfg.f, sigma), regime
    return compute_C(H, d, cfg.f, sigma), regime


# ----------------------------------------------------------------------------
# fluctuation limits (above and at the critical index)


def run_fluctuation(cfg: ExperimentConfig) -> ExperimentReport:
    """Monte Carlo of ``F_n`` against the mixture ``sqrt(C) W(L)`` (C or D)."""
    _check_scales(cfg)
    rep = ExperimentReport(cfg.kind.value)
    spec, f, lam = cfg.spec, cfg.f, np.asarray(cfg.lam)
    sigma = cfg.sigma if cfg.sigma is not None else assumption_sigma(spec)
    const, regime = _limit_constant(cfg, sigma)
    name = "D" if regime is Regime.CRITICAL else "C"
    rep.notes.append(f"regime={regime.value} sigma={sigma!r} {name}={const!r}")
    rep.add("sigma", sigma)
    rep.add(name, const)

    times = np.asarray(cfg.times)
    t_end = float(times[-1])
    ns = list(cfg.n_list)

    def one(r: int):
        path = sample_path(spec, cfg.t_max, cfg.N, cfg.seed, replica=r)
        ref = np.atleast_1d(reference_local_time(path, lam, times))
        F = np.empty((len(ns), times.size))
        for i, n in enumerate(ns):
            F[i] = f_n_statistic(path, f, lam, n, times, reference=ref, multiple=cfg.multiple).values
        return F, ref

    results = map_replicas(_guard("f_n", one), cfg.replications, cfg.threads)
    F = np.stack([r[0] for r in results])  # (R, n, t)
    L = np.stack([r[1] for r in results])
    for r in range(cfg.replications):
        for i, n in enumerate(ns):
            for j, t in enumerate(times):
                rep.replicas.append((r, n, t, F[r, i, j]))

    # targets: C E L_t and 3 C^2 E L_t^2 from the moment formula
    q2 = MomentQuery(((0.0, t_end),), (2,), cfg.lam, spec, const)
    q4 = MomentQuery(((0.0, t_end),), (4,), cfg.lam, spec, const)
    v2, v4 = limit_moment(q2, seed=cfg.seed), limit_moment(q4, seed=cfg.seed)
    rep.add("mean_local_time", float(L[:, -1].mean()), se=float(L[:, -1].std(ddof=1) / math.sqrt(cfg.replications)),
            target=v2.value / const if const > 0 else None)

    tol = cfg.tolerances
    gaps = []
    var_rows = []
    for i, n in enumerate(ns):
        cm = central_moments(F[:, i, -1])
        last = i == len(ns) - 1
        rep.add("mean", cm["mean"], n=n, se=cm["mean_se"])
        var_rows.append(rep.add("variance", cm["m2"], n=n, se=cm["m2_se"], target=v2.value, target_se=v2.se,
                                tolerance=tol["var"], rule="rel" if last else "info"))
        rep.add("fourth_moment", cm["m4"], n=n, se=cm["m4_se"], target=v4.value, target_se=v4.se,
                tolerance=tol["m4"], rule="rel" if last else "info")
        rep.add("skewness", cm["skew"], n=n, se=cm["skew_se"], target=0.0, tolerance=tol["skew_se"],
                rule="nsigma" if last else "info")
        gaps.append(abs(cm["m2"] - v2.value))
    ups = sum(1 for a, b in zip(gaps, gaps[1:]) if b > a)
    rep.add("variance_gap_increases", float(ups), target=0.0, tolerance=0.0, rule="le")

    # disjoint increments at the largest n
    idx = {float(t): j for j, t in enumerate(times)}
    inc = []
    for a, b in cfg.intervals:
        if float(b) not in idx or (a > 0 and float(a) not in idx):
            continue
        Fb = F[:, -1, idx[float(b)]]
        Fa = F[:, -1, idx[float(a)]] if a > 0 else 0.0
        inc.append(((a, b), Fb - Fa))
    for (a, b), x in inc:
        qi = MomentQuery(((a, b),), (2,), cfg.lam, spec, const)
        vi = limit_moment(qi, seed=cfg.seed)
        cm = central_moments(x)
        rep.add(f"increment_variance({a:g},{b:g}]", cm["m2"], n=ns[-1], se=cm["m2_se"], target=vi.value,
                target_se=vi.se, tolerance=tol["var"], rule="rel")
    if len(inc) >= 2:
        (iv1, x1), (iv2, x2) = inc[0], inc[1]
        pm, pse = _product_moment(np.column_stack([x1, x2]), (1, 1))
        rep.add("increment_cross_moment", pm, n=ns[-1], se=pse, target=0.0, tolerance=tol["moment_se"], rule="nsigma")
        q22 = MomentQuery((iv1, iv2), (2, 2), cfg.lam, spec, const)
        v22 = limit_moment(q22, seed=cfg.seed)
        pm, pse = _product_moment(np.column_stack([x1, x2]), (2, 2))
        rep.add("increment_moment_2_2", pm, n=ns[-1], se=pse, target=v22.value, target_se=v22.se,
                tolerance=tol["moment_se"], rule="nsigma")

    # distributional check against independent draws of the mixture
    mix = sample_limit_mixture(spec, [(0.0, t_end)], const, cfg.lam, cfg.replications, t_max=cfg.t_max, N=cfg.N,
                               seed=cfg.seed + MIXTURE_SEED_OFFSET, threads=cfg.threads)[:, 0]
    ks = ks_two_sample(F[:, -1, -1], mix)
    rep.add("ks_D", ks.D, n=ns[-1])
    rep.add("ks_p", ks.p_approx, n=ns[-1], target=tol["ks_p"], rule="gt")

    rep.plots["variance"] = {
        "x": ns, "y": [r.value for r in var_rows], "err": [r.se for r in var_rows], "target": v2.value,
        "xlabel": "n", "ylabel": f"Var F_n({t_end:g})", "title": f"{cfg.kind.value}: {spec.label()}",
    }
    return rep


# ----------------------------------------------------------------------------
# local-time derivative statistic


def run_derivative(cfg: ExperimentConfig) -> ExperimentReport:
    _check_scales(cfg)
    rep = ExperimentReport(cfg.kind.value)
    spec, f, lam = cfg.spec, cfg.f, np.asarray(cfg.lam)
    t = float(cfg.times[-1])
    ns = list(cfg.n_list)

    def one(r: int):
        path = sample_path(spec, cfg.t_max, cfg.N, cfg.seed, replica=r)
        out = np.empty((len(ns), 2))
        for i, n in enumerate(ns):
            v = theorem3_statistic(path, f, lam, n, t, multiple=cfg.multiple)
            out[i] = (v.lhs, v.rhs)
        return out

    res = np.stack(map_replicas(_guard("theorem3", one), cfg.replications, cfg.threads))  # (R, n, 2)
    diff2 = (res[:, :, 0] - res[:, :, 1]) ** 2
    R = cfg.replications
    mse = diff2.mean(axis=0)
    mse_se = diff2.std(axis=0, ddof=1) / math.sqrt(R)
    for r in range(R):
        for i, n in enumerate(ns):
            rep.replicas.append((r, n, t, res[r, i, 0] - res[r, i, 1]))
    for i, n in enumerate(ns):
        rep.add("lhs_mean", float(res[:, i, 0].mean()), n=n, se=float(res[:, i, 0].std(ddof=1) / math.sqrt(R)))
        rep.add("rhs_mean", float(res[:, i, 1].mean()), n=n, se=float(res[:, i, 1].std(ddof=1) / math.sqrt(R)))
        rep.add("mse", float(mse[i]), n=n, se=float(mse_se[i]))
    doublings = math.log2(ns[-1] / ns[0])
    rep.add("doublings", doublings, target=3.0, rule="ge")
    ups = sum(1 for a, b in zip(mse, mse[1:]) if b >= a)
    rep.add("mse_increases", float(ups), target=0.0, tolerance=0.0, rule="le")
    drop = 1.0 - (mse[-1] / mse[0]) ** (1.0 / doublings) if doublings > 0 else 0.0
    rep.add("mean_drop_per_doubling", float(drop), target=cfg.tolerances["thm3_drop"], rule="ge")
    rep.plots["mse"] = {
        "x": ns, "y": list(map(float, mse)), "err": list(map(float, mse_se)), "target": None,
        "xlabel": "n", "ylabel": "E (lhs - rhs)^2", "title": f"{cfg.kind.value}: {spec.label()}",
    }
    return rep


# ----------------------------------------------------------------------------
# structural checks


def run_slnd_audit(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport(cfg.kind.value)
    spec = cfg.spec
    k = estimate_kappa_slnd(spec, cfg.slnd_trials, cfg.slnd_m_max, cfg.seed)
    rep.add("kappa_hat", k.kappa_hat, target=0.0, rule="gt")
    if spec.family is Family.FBM and spec.H == 0.5:
        rep.add("kappa_hat_brownian", k.kappa_hat, target=1.0 - 1e-8, rule="ge")
    sc = check_slnd_spectral(spec, cfg.lambda_max, cfg.spectral_points)
    rep.add("spectral_c_hat", sc.c_hat, target=0.0, rule="gt")
    a = check_assumption_A(spec, np.geomspace(0.1, 10.0, 9), np.geomspace(1e-9, 1e-1, 33))
    rep.add("sigma_hat", a.sigma_hat)
    rep.add("phi_envelope_finest", float(a.phi_envelope[0][1]), target=1e-2, tolerance=0.0, rule="le")
    b = check_assumption_B(spec, np.geomspace(2.0, 1e4, 12), cfg.seed, samples=2000)
    rep.add("psi_envelope_largest_eta", float(b.psi_envelope[-1][1]))
    rep.add("assumption_B", float(b.passed), target=1.0, rule="ge")
    return rep


def run_constants(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport(cfg.kind.value)
    spec, f = cfg.spec, cfg.f
    H, d = spec.H_eff, spec.dimension
    sigma = cfg.sigma if cfg.sigma is not None else assumption_sigma(spec)
    rep.add("sigma", sigma)
    crit = 1.0 / (2 * f.beta_class + d)
    tq = cfg.tolerances["quad"]
    if abs(H - crit) <= 1e-12:
        D = compute_D(H, d, f, sigma)
        rep.add("D", D)
        D2 = compute_D(H, d, f, 2.0 * sigma)
        rep.add("D_sigma_scaling", D2 / D, target=2.0 ** (-1.0 / (2 * H)), tolerance=1e-12, rule="rel")
        n_list = [1e2, 1e4, 1e6]
        vals = verify_D_limit(H, d, f, sigma, n_list)
        gaps = [abs(v - D) for v in vals]
        for n, v in zip(n_list, vals):
            rep.add("D_finite_n", v, n=n, target=D)
        mono = all(b > a for a, b in zip(vals, vals[1:])) if vals[0] < D else all(b < a for a, b in zip(vals, vals[1:]))
        rep.add("D_monotone", float(mono), target=1.0, rule="ge")
        for (n0, g0), g1 in zip(zip(n_list, gaps), gaps[1:]):
            rep.add("D_gap_shrink", 1.0 - g1 / g0, n=n0, target=0.3, rule="ge")
    elif crit < H < 1.0 / d:
        C, err = compute_C(H, d, f, sigma, return_error=True)
        rep.add("C", C, se=err)
        C2 = compute_C(H, d, f, 2.0 * sigma)
        rep.add("C_sigma_scaling", C2 / C, target=2.0 ** (-1.0 / (2 * H)), tolerance=1e-12, rule="rel")
        if d == 1:
            rep.add("C_direct_quadrature", direct_C_quadrature(H, f, sigma), target=C, tolerance=tq, rule="rel")
    else:
        rep.notes.append(f"H = {H:g} is below 1/(2*beta+d) = {crit:g}: neither C nor D is finite")
    lb = lemma_bounds_check(f, H, d)
    rep.add("fourier_difference_constant", lb.c_fit)
    rep.add("lemma_bounds", float(lb.passed), target=1.0, rule="ge")
    return rep


def run_moments(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport(cfg.kind.value)
    spec = cfg.spec
    q = MomentQuery(cfg.intervals, cfg.m_vec, cfg.lam, spec, 1.0)
    v = limit_moment(q, points=cfg.moment_points, seed=cfg.seed)
    rep.notes.append("moments of W(L_t) (C = 1)")
    rep.add("limit_moment", v.value, se=v.se)
    rep.add("skipped_points", float(v.skipped))
    if q.is_even:
        k = estimate_kappa_slnd(spec, min(cfg.slnd_trials, 2000), max(2, q.order // 2), cfg.seed)
        rep.add("kappa_hat", k.kappa_hat, target=0.0, rule="gt")
        bound = moment_upper_bound(q, k.kappa_hat)
        rep.add("upper_bound_dominates", v.value, se=v.se, target=bound, tolerance=3.0, rule="le")
    if cfg.N >= 2:
        samples = sample_limit_mixture(spec, cfg.intervals, 1.0, cfg.lam, cfg.replications, t_max=cfg.t_max,
                                       N=cfg.N, seed=cfg.seed, threads=cfg.threads)
        pm, pse = _product_moment(samples, cfg.m_vec)
        rep.add("mixture_moment", pm, se=pse, target=v.value, target_se=v.se,
                tolerance=cfg.tolerances["moment_se"], rule="nsigma")
    # determinacy from the first interval's even moments
    a, b = cfg.intervals[0]
    logs = []
    for kk in range(1, cfg.k_max + 1):
        qk = MomentQuery(((a, b),), (2 * kk,), cfg.lam, spec, 1.0)
        logs.append(math.log(limit_moment(qk, points=min(cfg.moment_points, 4096), seed=cfg.seed).value))
    det = determinacy_check([logs], log_moments=True)
    rep.add("determinacy_r_hat", float(det.r_hat[0]))
    rep.add("determinate", float(det.verdict == "determinate"), target=1.0, rule="ge")
    sg = stirling_growth(spec.H_eff * spec.dimension, 20, len(cfg.intervals))
    rep.add("stirling_growth_max", float(sg.max()))
    return rep


RUNNERS = {
    ExperimentKind.VERIFY_CLT: run_fluctuation,
    ExperimentKind.VERIFY_CRITICAL: run_fluctuation,
    ExperimentKind.VERIFY_DEGENERATE: run_derivative,
    ExperimentKind.SLND_AUDIT: run_slnd_audit,
    ExperimentKind.CONSTANTS: run_constants,
    ExperimentKind.MOMENTS: run_moments,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the experiment named by ``cfg.kind``."""
    return RUNNERS[cfg.kind](cfg)
