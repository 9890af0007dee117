"""
Verifiers of the decay lemmas for non-negative sequences: the ODE
comparison bound, the discrete recurrence bound and the summability of
delta_j^alpha under a polynomial tail bound. Each verifier checks its
hypothesis first and reports ``vacuous`` with the first offending sample
when it fails.
"""
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import linregress

from common.enums import Provenance, Verdict
from common.errors import InvalidInputError
from schema.check_report import CheckReport, ConstantRecord
from schema.sequence_data import SequenceData

logger = logging.getLogger(__name__)

ODE_ANCHOR = "f' <= -K0 f^{1+gamma} + E with sup t^{(1+gamma)/gamma} E <= C_E implies f(t) <= C t^{-1/gamma}"
DISCRETE_ANCHOR = "f(t)^{1+gamma} <= K (f(t-1) - f(t+1)) + E(t), E = o(t^{-(gamma+1)/gamma}) implies f(t) <= C t^{-1/gamma}"
SUMMABILITY_ANCHOR = "sum_{i>=j} delta_i^2 <= C j^{-rho}, rho > 1 implies sum_j delta_j^alpha < inf for some alpha < 1"

# relative round-off allowance on hypothesis and conclusion sides
ROUNDOFF = 1e-12
# a fitted tail exponent this close to 1 is not evidence of rho > 1
RHO_MARGIN = 0.1


def _scale_tolerance(values: np.ndarray) -> float:
    return ROUNDOFF * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)


def _fit_constant(t: np.ndarray, f: np.ndarray, gamma: float) -> float:
    """Tightest C with f(t) <= C t^{-1/gamma} on the samples."""
    mask = t > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(f[mask] * t[mask] ** (1.0 / gamma)))


def ode_barrier_root(K0: float, gamma: float, C_E: float) -> float:
    """Positive root of K0 C^{1+gamma} = C/gamma + C_E; the barrier C t^{-1/gamma} is a supersolution above it."""
    if K0 <= 0:
        raise InvalidInputError("K0 must be positive")
    base = (1.0 / (gamma * K0)) ** (1.0 / gamma)
    if C_E <= 0.0:
        return base

    def q(C):
        return K0 * C ** (1.0 + gamma) - C / gamma - C_E

    hi = 2.0 * base
    while q(hi) <= 0.0:
        hi *= 2.0
    return float(brentq(q, base, hi, xtol=1e-14, rtol=1e-14))


def verify_ode_lemma(d: SequenceData, tolerance: Optional[float] = None) -> CheckReport:
    """
    ODE comparison on a sampled f over t >= 1.

    The hypothesis is checked in its integrated form
        f(t_{i+1}) - f(t_i) <= dt (-K0 f(t_{i+1})^{1+gamma} + max(E_i, E_{i+1})),
    which holds for every non-increasing solution of the differential
    inequality. C is the larger of f(t_a) t_a^{1/gamma} and the barrier root.
    """
    name = "ode_comparison"
    t, f, E = d.t, d.f, d.E
    gamma, K0 = d.gamma, d.K
    if t[0] < 1.0:
        raise InvalidInputError(f"the comparison lemma starts at t=1, grid starts at {t[0]:.6g}")

    dt = np.diff(t)
    hyp = dt * (-K0 * f[1:] ** (1.0 + gamma) + np.maximum(E[:-1], E[1:])) - (f[1:] - f[:-1])
    hyp_tol = _scale_tolerance(f)
    bad = np.nonzero(hyp < -hyp_tol)[0]
    if bad.size:
        where = float(t[bad[0] + 1])
        logger.info(f"{name}: hypothesis fails at t={where:.6g} (slack {hyp[bad[0]]:.3e})")
        return CheckReport.vacuous(name, ODE_ANCHOR, f"differential inequality fails at t={where:.6g}", where)

    C_E = float(np.max(t ** ((1.0 + gamma) / gamma) * E))
    C_root = ode_barrier_root(K0, gamma, C_E)
    C_start = float(f[0] * t[0] ** (1.0 / gamma))
    C = max(C_start, C_root)

    slacks = C * t ** (-1.0 / gamma) - f
    tol = hyp_tol if tolerance is None else float(tolerance)
    constants = {
        "C": ConstantRecord(value=C, provenance=Provenance.FORMULA,
                            method="max(f(t_a) t_a^(1/gamma), root of K0 C^(1+gamma) = C/gamma + C_E)"),
        "C_root": ConstantRecord(value=C_root, provenance=Provenance.FORMULA, method="brentq"),
        "C_E": ConstantRecord(value=C_E, provenance=Provenance.SAMPLED, method="max t^((1+gamma)/gamma) E(t)"),
        "C_fit": ConstantRecord(value=_fit_constant(t, f, gamma), provenance=Provenance.FITTED,
                                method="max f(t) t^(1/gamma)"),
        "K0": ConstantRecord(value=K0, provenance=Provenance.CONFIGURED, method="SequenceData.K"),
        "gamma": ConstantRecord(value=gamma, provenance=Provenance.CONFIGURED, method="SequenceData.gamma"),
    }
    return CheckReport.from_slacks(
        name=name,
        anchor=ODE_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=t,
        constants=constants,
        auxiliary={"hypothesis_slack": [float(v) for v in hyp]},
    )


# --------------------------------------------------------------------------- #
def error_decay_trend(t: np.ndarray, E: np.ndarray, gamma: float) -> Optional[float]:
    """
    Finite-sample proxy of E = o(t^{-(gamma+1)/gamma}): q = t^{(gamma+1)/gamma} E
    must not increase over the last half of the samples and must end at or
    below half its maximum. Returns the first failing time, or None.
    """
    q = t ** ((gamma + 1.0) / gamma) * E
    q_max = float(np.max(q))
    if q_max == 0.0:
        return None
    half = q.size // 2
    tail = q[half:]
    rises = np.nonzero(np.diff(tail) > ROUNDOFF * q_max)[0]
    if rises.size:
        return float(t[half + rises[0] + 1])
    if q[-1] > 0.5 * q_max:
        return float(t[-1])
    return None


def verify_discrete_lemma(d: SequenceData, tolerance: Optional[float] = None) -> CheckReport:
    """
    Discrete recurrence bound on a unit grid, with the constants of the
    induction argument.

    After translating the grid to start at 0 the sequence is scaled by
    a = min(K^{-1/gamma}, 1/(2 f(0))), which gives K = 1 and f(0) <= 1/2.
    Then t1 is read off the error series, t0 = 2 + max(t1, 2^{3+gamma} f(0)^{-gamma}/gamma)
    and C~ = f(0) t0^{1/gamma}. The bound in the original variables uses
    C = C~ / a * (t_a + 1)^{1/gamma}, valid for t >= t_a + 1 and at t_a itself.
    """
    name = "discrete_recurrence"
    if not d.is_unit_grid:
        raise InvalidInputError("the recurrence lemma needs a unit-spaced grid")
    t, f, E = d.t, d.f, d.E
    gamma, K = d.gamma, d.K
    hyp_tol = _scale_tolerance(f)

    # 1. 假设检查: monotone, recurrence, error decay
    rises = np.nonzero(np.diff(f) > hyp_tol)[0]
    if rises.size:
        where = float(t[rises[0] + 1])
        return CheckReport.vacuous(name, DISCRETE_ANCHOR, f"f increases at t={where:.6g}", where)

    rec = K * (f[:-2] - f[2:]) + E[1:-1] - f[1:-1] ** (1.0 + gamma)
    bad = np.nonzero(rec < -hyp_tol)[0]
    if bad.size:
        where = float(t[bad[0] + 1])
        logger.info(f"{name}: recurrence fails at t={where:.6g} (slack {rec[bad[0]]:.3e})")
        return CheckReport.vacuous(name, DISCRETE_ANCHOR, f"recurrence fails at t={where:.6g}", where)

    trend_fail = error_decay_trend(t, E, gamma)
    if trend_fail is not None:
        return CheckReport.vacuous(name, DISCRETE_ANCHOR,
                                   f"t^((gamma+1)/gamma) E(t) shows no decay trend at t={trend_fail:.6g}", trend_fail)

    t_a = float(t[0])
    f0 = float(f[0])
    C_fit = _fit_constant(t, f, gamma)
    if f0 <= 0.0:
        constants = {"C": ConstantRecord(value=0.0, provenance=Provenance.FORMULA, method="f vanishes identically")}
        return CheckReport.from_slacks(name, DISCRETE_ANCHOR, np.zeros(t.size), hyp_tol, sample_times=t,
                                       constants=constants, notes=["f vanishes identically"])

    # 2. 归一化
    tau = t - t_a
    a = min(K ** (-1.0 / gamma), 1.0 / (2.0 * f0))
    g = a * f
    E_n = a ** (1.0 + gamma) * E
    g0 = float(g[0])

    # t1: tau^{(gamma+1)/gamma} E~(tau - 1) <= g0^{1+gamma}/2 for every sampled tau >= t1
    lag = tau[1:] ** ((gamma + 1.0) / gamma) * E_n[:-1]
    above = np.nonzero(lag > 0.5 * g0 ** (1.0 + gamma))[0]
    t1 = 1.0 if above.size == 0 else float(tau[1:][above[-1]] + 1.0)
    t0 = 2.0 + max(t1, 2.0 ** (3.0 + gamma) * g0 ** (-gamma) / gamma)
    C_tilde = g0 * t0 ** (1.0 / gamma)
    C = C_tilde / a * (t_a + 1.0) ** (1.0 / gamma)

    # 3. 归纳链: evaluated at every sampled tau >= t0
    chain = _induction_chain(tau, g, E_n, gamma, C_tilde, t0)

    mask = t > 0
    slacks = C * t[mask] ** (-1.0 / gamma) - f[mask]
    tol = hyp_tol if tolerance is None else float(tolerance)
    chain_min = min((min(v) for v in chain.values() if v), default=0.0)
    notes = [f"normalised with a={a:.6g}: f(0)={g0:.6g}, t1={t1:.6g}, t0={t0:.6g}"]
    if chain_min < -tol:
        notes.append(f"induction chain broken, min slack {chain_min:.3e}")
    constants = {
        "C": ConstantRecord(value=C, provenance=Provenance.FORMULA,
                            method="C~ / a * (t_a + 1)^(1/gamma), C~ = f(0) t0^(1/gamma)"),
        "C_tilde": ConstantRecord(value=C_tilde, provenance=Provenance.FORMULA, method="f(0) t0^(1/gamma)"),
        "t0": ConstantRecord(value=t0, provenance=Provenance.FORMULA,
                             method="2 + max(t1, 2^(3+gamma) f(0)^(-gamma) / gamma)"),
        "t1": ConstantRecord(value=t1, provenance=Provenance.SAMPLED,
                             method="last sampled failure of t^((gamma+1)/gamma) E(t-1) <= f(0)^(1+gamma)/2, plus 1"),
        "scale": ConstantRecord(value=a, provenance=Provenance.FORMULA, method="min(K^(-1/gamma), 1/(2 f(0)))"),
        "C_fit": ConstantRecord(value=C_fit, provenance=Provenance.FITTED, method="max f(t) t^(1/gamma)"),
        "K": ConstantRecord(value=K, provenance=Provenance.CONFIGURED, method="SequenceData.K"),
        "gamma": ConstantRecord(value=gamma, provenance=Provenance.CONFIGURED, method="SequenceData.gamma"),
    }
    auxiliary = {"recurrence_slack": [float(v) for v in rec]}
    auxiliary.update(chain)
    return CheckReport.from_slacks(
        name=name,
        anchor=DISCRETE_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=t[mask],
        constants=constants,
        notes=notes,
        auxiliary=auxiliary,
        force_fail=chain_min < -tol,
    )


def _induction_chain(tau, g, E_n, gamma, C_tilde, t0) -> Dict[str, List[float]]:
    """Slacks of the inequalities the induction step strings together, in normalised variables."""
    out = {"chain_recurrence": [], "chain_error": [], "chain_bernoulli": [], "chain_step": []}
    for i in range(2, tau.size):
        if tau[i] < t0:
            continue
        s = float(tau[i])
        out["chain_recurrence"].append(float(g[i - 2] - g[i] + E_n[i - 1] - g[i - 1] ** (1.0 + gamma)))
        out["chain_error"].append(float(0.5 * C_tilde ** gamma / s - s ** (1.0 / gamma) * E_n[i - 1] / C_tilde))
        h = 0.5 * C_tilde ** gamma / s
        out["chain_bernoulli"].append(float(1.0 - 2.0 ** (-1.0 - gamma) * gamma * h - (1.0 + h) ** (-gamma)))
    out["chain_step"].append(float(2.0 ** (-2.0 - gamma) * gamma * C_tilde ** gamma - 2.0))
    return out


def lemma_consistency(d: SequenceData, factor: float = 4.0) -> CheckReport:
    """Both lemmas on the same samples; their tight constants must agree within ``factor``."""
    ode = verify_ode_lemma(d)
    disc = verify_discrete_lemma(d)
    anchor = "ODE comparison and discrete recurrence give consistent decay constants"
    for rep in (ode, disc):
        if rep.verdict == Verdict.VACUOUS or "C_fit" not in rep.constants:
            return CheckReport.vacuous("lemma_consistency", anchor, f"{rep.name} is {rep.verdict.value}",
                                       rep.vacuous_at)
    c1, c2 = ode.constants["C_fit"].value, disc.constants["C_fit"].value
    if c1 == 0.0 and c2 == 0.0:
        slacks = [0.0]
    else:
        ratio = max(c1, c2) / max(min(c1, c2), 1e-300)
        slacks = [factor - ratio]
    return CheckReport.from_slacks(
        "lemma_consistency", anchor, slacks, 0.0,
        constants={"C_ode": ode.constants["C_fit"], "C_discrete": disc.constants["C_fit"]},
        notes=[f"proof constants: ode {ode.constants['C'].value:.6g}, discrete {disc.constants['C'].value:.6g}"],
    )


# --------------------------------------------------------------------------- #
def fit_tail_exponent(deltas: np.ndarray) -> Optional[float]:
    """rho from delta_j^2 ~ j^{-(1+rho)}, regressed over the last three quarters of the positive terms."""
    j = np.arange(1, deltas.size + 1, dtype=float)
    start = deltas.size // 4
    keep = deltas[start:] > 0
    if np.count_nonzero(keep) < 4:
        return None
    fit = linregress(np.log(j[start:][keep]), np.log(deltas[start:][keep] ** 2))
    return float(-fit.slope - 1.0)


def verify_summability(deltas: Sequence[float], rho: Optional[float] = None,
                       alpha_bar: Optional[float] = None) -> CheckReport:
    """
    Summability of delta_j^alpha for some alpha < 1 under the tail bound
    sum_{i>=j} delta_i^2 <= C j^{-rho}.

    The exponent window (2/(1+rho), 1) is the one in which Hoelder's
    inequality on dyadic blocks 2^k <= j < 2^{k+1} gives block sums
    bounded by C^{alpha/2} 2^{k(1 - alpha(1+rho)/2)}, a geometric series.
    """
    name = "summability"
    delta = np.asarray(deltas, dtype=float).ravel()
    if delta.size == 0 or not np.all(np.isfinite(delta)) or np.any(delta < 0):
        raise InvalidInputError("deltas must be a non-empty sequence of finite non-negative numbers")

    nonzero = np.nonzero(delta > 0)[0]
    finite_support = nonzero.size == 0 or nonzero[-1] < delta.size - 1
    notes = []
    if rho is None:
        if finite_support:
            rho, rho_prov, rho_method = 3.0, Provenance.CONFIGURED, "finitely many nonzero terms, any rho > 1"
        else:
            rho = fit_tail_exponent(delta)
            if rho is None:
                return CheckReport.vacuous(name, SUMMABILITY_ANCHOR, "too few positive terms to fit the tail exponent")
            rho_prov, rho_method = Provenance.FITTED, "linregress of log delta_j^2 on log j"
            if rho <= 1.0 + RHO_MARGIN:
                return CheckReport.vacuous(
                    name, SUMMABILITY_ANCHOR, f"fitted tail exponent {rho:.4g} is not above 1",
                    constants={"rho": ConstantRecord(value=rho, provenance=rho_prov, method=rho_method)})
    else:
        rho = float(rho)
        rho_prov, rho_method = Provenance.CONFIGURED, "caller"
        if rho <= 1.0:
            return CheckReport.vacuous(name, SUMMABILITY_ANCHOR, f"tail exponent rho={rho:.4g} must exceed 1")

    lower = 2.0 / (1.0 + rho)
    alpha_method = "caller"
    if alpha_bar is None:
        alpha_bar = 0.5 * (lower + 1.0)
        alpha_method = "midpoint of (2/(1+rho), 1)"
    elif not lower < alpha_bar < 1.0:
        raise InvalidInputError(f"alpha_bar={alpha_bar:.4g} outside the window ({lower:.4g}, 1)")
    notes.append(f"alpha window ({lower:.4g}, 1) reconstructed from dyadic Hoelder summation")

    j = np.arange(1, delta.size + 1, dtype=float)
    tails = np.cumsum((delta ** 2)[::-1])[::-1]
    C = float(np.max(tails * j ** rho))
    powers = delta ** alpha_bar
    partial = np.cumsum(powers)

    ratio = 2.0 ** (1.0 - alpha_bar * (1.0 + rho) / 2.0)
    blocks, bounds = [], []
    k = 0
    while 2 ** (k + 1) - 1 <= delta.size:
        lo, hi = 2 ** k, 2 ** (k + 1)
        blocks.append(float(np.sum(powers[lo - 1:hi - 1])))
        bounds.append(C ** (alpha_bar / 2.0) * ratio ** k)
        k += 1
    series_bound = C ** (alpha_bar / 2.0) / (1.0 - ratio)
    slacks = [b - s for b, s in zip(bounds, blocks)] + [series_bound - float(partial[-1])]
    tol = _scale_tolerance(np.asarray(bounds + [series_bound]))

    constants = {
        "rho": ConstantRecord(value=rho, provenance=rho_prov, method=rho_method),
        "C": ConstantRecord(value=C, provenance=Provenance.FITTED, method="max_j j^rho sum_{i>=j} delta_i^2"),
        "alpha_bar": ConstantRecord(value=alpha_bar, provenance=Provenance.CONFIGURED,
                                    method=alpha_method),
        "block_ratio": ConstantRecord(value=ratio, provenance=Provenance.FORMULA,
                                      method="2^(1 - alpha_bar (1+rho)/2)"),
        "series_bound": ConstantRecord(value=series_bound, provenance=Provenance.FORMULA,
                                       method="C^(alpha_bar/2) / (1 - block_ratio)"),
    }
    if finite_support:
        notes.append("finitely many nonzero terms")
    return CheckReport.from_slacks(
        name=name,
        anchor=SUMMABILITY_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        constants=constants,
        notes=notes,
        auxiliary={"partial_sums": [float(v) for v in partial], "block_sums": blocks},
    )


# --------------------------------------------------------------------------- #
def exact_ode_solution(gamma: float, K0: float, length: int, start: float = 1.0) -> np.ndarray:
    """(1 + gamma K0 (t - 1))^{-1/gamma}, the solution of f' = -K0 f^{1+gamma} with f(1) = 1, on a unit grid."""
    t = start + np.arange(length, dtype=float)
    return (1.0 + gamma * K0 * (t - 1.0)) ** (-1.0 / gamma)


def hypothesis_violators(gamma: float, count: int = 100, seed: int = 0, length: int = 64,
                         K0: float = 1.0) -> List[SequenceData]:
    """
    Sequences on the unit grid 1..length that break the hypotheses of both
    lemmas: an interior plateau, an upward bump or a constant tail grafted
    onto a scaled exact solution, with E = 0.
    """
    rng = np.random.default_rng(seed)
    grid = 1.0 + np.arange(length, dtype=float)
    base = exact_ode_solution(gamma, K0, length)
    out = []
    for _ in range(count):
        f = rng.uniform(0.5, 2.0) * base
        i = int(rng.integers(2, length // 2))
        kind = int(rng.integers(3))
        if kind == 0:
            f[i - 1] = f[i + 1] = f[i]
        elif kind == 1:
            f[i] = f[i - 1] * rng.uniform(1.01, 1.5)
        else:
            f[i:] = f[i]
        out.append(SequenceData(grid=grid, values=f, gamma=gamma, K=K0))
    return out
