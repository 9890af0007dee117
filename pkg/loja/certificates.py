"""
Certificates evaluated along recorded rescaled trajectories. Every check
returns a CheckReport whose slacks are RHS - LHS of the inequality it
certifies.
"""
import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import linprog
from scipy.stats import linregress, t as student_t

from common.enums import ModelKind, Picture, Provenance
from common.errors import GraphExtractionError, InvalidInputError
from common.tolerances import TOL_A, TOL_B, differential_tolerance
from flow.graphical import graphical_scale
from gaussian.functionals import ball_mask, f_functional, phi_norm_sq
from gaussian.scales import PHI_BALL_SERIES, shrinker_scale
from mesh.geometry import curvature_data
from mesh.graphs import graph_l2, graph_over_model, mode_perturbation, model_l2_weights
from mesh.surfaces import DEFAULT_WINDOW, make_model_surface
from schema.check_report import CheckReport, ConstantRecord
from schema.functional_config import FunctionalConfig
from schema.shrinker_model import ShrinkerModel
from schema.trajectory import FlowTrajectory

logger = logging.getLogger(__name__)

MONOTONICITY_ANCHOR = "d/dt F~ <= -(3/4) mu(t) int |phi|^2 rho for the compact modified functional"
L2_ANCHOR = "int_{t1}^{t2} int |phi|^2 rho <= 2 (F~(t1) - F~(t2))"
L2_LOCAL_ANCHOR = "int_{t1}^{t2} int_{B_{3 e^{t/2} r0}} |phi|^2 rho <= 2 (F~(t1) - F~(t2)) for the localized F~"
MEAN_VALUE_ANCHOR = (
    "max_{[t1+beta, t2]} ||phi||^2_{B_R} <= (C + 1/beta) int_{t1}^{t2} int_{B_{R+1}} |phi|^2 rho "
    "+ C e^{-t1} max F"
)
LOJA_ANCHOR = "|F~(T) - F(Gamma)| <= K (F~(T-1) - F~(T+1))^{(1+mu)/2} + C e^{-(1+mu) T/4}"
QUADRATIC_ANCHOR = "|F(Gamma_U) - F(Gamma)| <= C ||phi_U|| ||U|| + C ||U||^3"
DISTANCE_ANCHOR = "sup_{t1 <= t2} ||U(t2) - U(t1)||_{L^2} <= C0 t1^{-rho}"
EXTENSION_ANCHOR = "||phi||^2_{L^2(B_{(1+mu) R})} <= C e^{-R_T^2/2} + C_g lambda0 e^{-T/2}"

MU_GRID = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45)
# fitted constants count as stable when the envelope moves by less than this
STABILITY = 0.2
MAX_LOJA_SAMPLES = 64
# C e^{-(1+mu)T/4} this many times above the largest |F~ - F| is not a fit
DEGENERATE_RATIO = 1e3


def _require_rescaled(traj: FlowTrajectory) -> None:
    if traj.picture != Picture.RESCALED:
        raise InvalidInputError("this certificate runs on rescaled trajectories")


def _record_step(traj: FlowTrajectory) -> float:
    if traj.step is not None:
        return float(traj.step)
    return float(np.median(np.diff(traj.times))) if len(traj.states) > 1 else 0.0


def _tolerance_record(step: float, h: float, tol: float) -> ConstantRecord:
    return ConstantRecord(value=tol, provenance=Provenance.FORMULA,
                          method=f"{TOL_A} step^2 + {TOL_B} step h^2 + floor, step={step:.4g}, h={h:.4g}")


def check_monotonicity_compact(traj: FlowTrajectory, tolerance: Optional[float] = None) -> CheckReport:
    _require_rescaled(traj)
    F_tilde = traj.series_array("F_tilde")
    phi_sq = traj.series_array("phi_sq")
    mu = traj.series_array("mu")
    t = traj.times
    if t.size < 3:
        raise InvalidInputError("monotonicity needs at least three recorded states")

    dF = (F_tilde[2:] - F_tilde[:-2]) / (t[2:] - t[:-2])
    slacks = -0.75 * mu[1:-1] * phi_sq[1:-1] - dF
    step, h = _record_step(traj), traj.mesh_size
    tol = differential_tolerance(step, h) if tolerance is None else float(tolerance)
    return CheckReport.from_slacks(
        name="monotonicity_compact",
        anchor=MONOTONICITY_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=t[1:-1],
        constants={
            "K": ConstantRecord(value=traj.forcing.K, provenance=Provenance.CONFIGURED, method="FORCING_K"),
            "tolerance": _tolerance_record(step, h, tol),
        },
        notes=["centered differences of the recorded F~ series"],
    )


def check_l2_control(
    traj: FlowTrajectory,
    t1: float,
    t2: float,
    localized: bool = False,
    tolerance: Optional[float] = None,
) -> CheckReport:
    """Running form: for every recorded t in [t1, t2] the integral up to t against 2(F~(t1) - F~(t))."""
    _require_rescaled(traj)
    if t2 <= t1:
        raise InvalidInputError("l2 control needs t1 < t2")
    idx = traj.window(t1, t2)
    phi = traj.series_array(PHI_BALL_SERIES if localized else "phi_sq")[idx]
    F_tilde = traj.series_array("F_tilde_loc" if localized else "F_tilde")[idx]
    times = traj.times[idx]

    integral = cumulative_trapezoid(phi, times, initial=0.0)
    slacks = 2.0 * (F_tilde[0] - F_tilde) - integral
    step, h = _record_step(traj), traj.mesh_size
    tol = differential_tolerance(step, h) * max(1.0, t2 - t1) if tolerance is None else float(tolerance)
    return CheckReport.from_slacks(
        name="l2_control_localized" if localized else "l2_control",
        anchor=L2_LOCAL_ANCHOR if localized else L2_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=times,
        constants={"tolerance": _tolerance_record(step, h, tol)},
        auxiliary={"lhs": [float(v) for v in integral]},
    )


# --------------------------------------------------------------------------- #
def structural_mean_value_constant(M: float, K: float) -> float:
    """2M + 1 + K/2 from the reaction terms plus 6 |D eta|^2 <= 24 from a cutoff with |D eta| <= 2."""
    return 2.0 * M + 1.0 + 0.5 * K + 24.0


def check_mean_value(
    traj: FlowTrajectory,
    t1: float,
    t2: float,
    beta: float,
    R: float,
    M: Optional[float] = None,
    K: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> CheckReport:
    """
    The mean value inequality with the structural constant C(M, K); the
    smallest C that makes it hold on this window is reported as C_fit.
    """
    _require_rescaled(traj)
    if beta <= 0 or t2 - t1 <= beta:
        raise InvalidInputError(f"window [{t1}, {t2}] is not longer than beta={beta}")
    idx = traj.window(t1, t2)
    times = traj.times[idx]
    states = [traj.states[i] for i in idx]

    phi_R = np.array([phi_norm_sq(s, radius=R) for s in states])
    phi_R1 = np.array([phi_norm_sq(s, radius=R + 1.0) for s in states])
    if traj.has("F"):
        F_max = float(np.max(traj.series_array("F")[idx]))
    else:
        F_max = max(f_functional(s) for s in states)

    if M is None:
        M = 0.0
        for s in states:
            mask = ball_mask(s, R + 1.0)
            if np.any(mask):
                M = max(M, float(np.sqrt(np.max(curvature_data(s).second_fundamental_sq[mask]))))
        M_record = ConstantRecord(value=M, provenance=Provenance.SAMPLED, method="max |A| on B_{R+1} over the window")
    else:
        M_record = ConstantRecord(value=M, provenance=Provenance.CONFIGURED, method="caller")
    K = traj.forcing.K if K is None else float(K)

    I1 = float(trapezoid(phi_R1, times))
    I2 = math.exp(-t1) * F_max
    later = times >= t1 + beta - 1e-9 * max(1.0, beta)
    lhs = phi_R[later]
    C = structural_mean_value_constant(M, K)
    slacks = (C + 1.0 / beta) * I1 + C * I2 - lhs

    lhs_max = float(np.max(lhs))
    C_fit = max(0.0, (lhs_max - I1 / beta) / (I1 + I2)) if I1 + I2 > 0 else 0.0
    step, h = _record_step(traj), traj.mesh_size
    tol = differential_tolerance(step, h) if tolerance is None else float(tolerance)
    return CheckReport.from_slacks(
        name="mean_value",
        anchor=MEAN_VALUE_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=times[later],
        constants={
            "C": ConstantRecord(value=C, provenance=Provenance.FORMULA, method="2M + 1 + K/2 + 24"),
            "C_fit": ConstantRecord(value=C_fit, provenance=Provenance.FITTED,
                                    method="(max lhs - I1/beta) / (I1 + I2), clipped at 0"),
            "M": M_record,
            "K": ConstantRecord(value=K, provenance=Provenance.CONFIGURED, method="FORCING_K"),
            "beta": ConstantRecord(value=beta, provenance=Provenance.CONFIGURED, method="caller"),
            "R": ConstantRecord(value=R, provenance=Provenance.CONFIGURED, method="caller"),
        },
        auxiliary={"I1": [I1], "I2": [I2]},
    )


# --------------------------------------------------------------------------- #
def _fit_envelope(a: np.ndarray, u: np.ndarray, v: np.ndarray) -> Tuple[float, float]:
    """
    Smallest (K, C) >= 0 in the averaged sense with a <= K u + C v on every
    sample: linprog on the mean envelope, then C is raised to close any
    remaining solver slack exactly.
    """
    if a.size == 0 or float(np.max(a)) <= 0.0:
        return 0.0, 0.0
    cost = np.array([np.mean(u), np.mean(v)])
    cost[cost <= 0.0] = 1.0
    res = linprog(cost, A_ub=-np.column_stack([u, v]), b_ub=-a, bounds=[(0, None), (0, None)], method='highs')
    K, C = (float(res.x[0]), float(res.x[1])) if res.success else (0.0, 0.0)
    C = max(C, float(np.max((a - K * u) / v)))
    return K, C


def _loja_times(traj: FlowTrajectory) -> np.ndarray:
    t = traj.times
    slack = 1e-9 * max(1.0, abs(traj.t_end))
    inside = np.nonzero((t - 1.0 >= traj.t_start - slack) & (t + 1.0 <= traj.t_end + slack))[0]
    stride = max(1, int(math.ceil(inside.size / MAX_LOJA_SAMPLES)))
    return t[inside[::stride]]


def check_discrete_loja(
    traj: FlowTrajectory,
    model: ShrinkerModel,
    cfg: FunctionalConfig,
    series: Optional[str] = None,
    mu_grid: Sequence[float] = MU_GRID,
    eps: float = 0.5,
) -> CheckReport:
    """
    For each mu on the grid the smallest (K, C) are fitted on every sampled
    T, on the final half and on the first half of the final half. The
    largest mu whose fit is stable (envelope change below 20%) is reported;
    the slacks are those of that mu with constants fitted on all samples.
    A fit with K = 0, or with C far above the data, certifies nothing about
    the drop term and is reported vacuous.
    """
    name = "discrete_lojasiewicz"
    _require_rescaled(traj)
    series = series or ("F_tilde_loc" if traj.has("F_tilde_loc") else "F_tilde")
    F_tilde = traj.series_array(series)
    T = _loja_times(traj)
    if T.size < 4:
        return CheckReport.vacuous(name, LOJA_ANCHOR, "trajectory does not cover enough windows [T-1, T+1]")

    # 1. 图尺度前提
    for Tk in T:
        readout = shrinker_scale(traj, float(Tk), cfg)
        required = 0.0 if math.isnan(readout.R_star) else readout.R_star
        gs = graphical_scale(traj.states[traj.index_of(float(Tk))], model, eps)
        if gs.radius < required:
            logger.info(f"{name}: graphical scale {gs.radius:.4g} below R*={required:.4g} at T={Tk:.4g}")
            return CheckReport.vacuous(
                name, LOJA_ANCHOR, f"graphical scale {gs.radius:.4g} below R*={required:.4g} at T={Tk:.4g}",
                float(Tk))

    at = np.array([F_tilde[traj.index_of(float(Tk))] for Tk in T])
    drop = np.array([F_tilde[traj.index_of(float(Tk) - 1.0)] - F_tilde[traj.index_of(float(Tk) + 1.0)] for Tk in T])
    a = np.abs(at - model.f_value)
    d = np.maximum(drop, 0.0)

    mid = 0.5 * (T[0] + T[-1])
    final = T >= mid
    early_final = final & (T <= mid + 0.5 * (T[-1] - mid))

    # 2. 扫描 mu
    chosen = None
    variations: Dict[float, float] = {}
    for mu in sorted(mu_grid):
        if not 0.0 < mu < 0.5:
            raise InvalidInputError(f"mu={mu} outside (0, 1/2)")
        u = d ** ((1.0 + mu) / 2.0)
        v = np.exp(-(1.0 + mu) * T / 4.0)
        K_f, C_f = _fit_envelope(a[final], u[final], v[final])
        K_e, C_e = _fit_envelope(a[early_final], u[early_final], v[early_final])
        scale = float(np.mean(K_f * u[final] + C_f * v[final]))
        if scale > 0.0:
            variation = max(abs(K_e - K_f) * float(np.mean(u[final])),
                            abs(C_e - C_f) * float(np.mean(v[final]))) / scale
        else:
            variation = 0.0
        variations[mu] = variation
        if variation < STABILITY:
            chosen = mu

    stable = chosen is not None
    mu = chosen if stable else min(mu_grid)
    u = d ** ((1.0 + mu) / 2.0)
    v = np.exp(-(1.0 + mu) * T / 4.0)
    K_fit, C_fit = _fit_envelope(a, u, v)
    if K_fit <= 0.0 or C_fit * float(np.max(v)) > DEGENERATE_RATIO * float(np.max(a)):
        logger.info(f"{name}: degenerate envelope K={K_fit:.3g}, C={C_fit:.3g} at mu={mu}")
        return CheckReport.vacuous(
            name, LOJA_ANCHOR,
            f"degenerate envelope fit K={K_fit:.3g}, C={C_fit:.3g} against max |F~ - F| = {float(np.max(a)):.3g}",
            constants={
                "K": ConstantRecord(value=K_fit, provenance=Provenance.FITTED, method="linprog (highs) on all T"),
                "C": ConstantRecord(value=C_fit, provenance=Provenance.FITTED, method="linprog (highs) on all T"),
            })
    slacks = K_fit * u + C_fit * v - a
    notes = [f"series {series}; envelope variation by mu: "
             + ", ".join(f"{m:.2f}:{variations[m]:.3f}" for m in sorted(variations))]
    if not stable:
        notes.append("no mu on the grid gives constants stable over the final half")
    tol = 1e-12 * max(1.0, float(np.max(a)))
    return CheckReport.from_slacks(
        name=name,
        anchor=LOJA_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=T,
        constants={
            "mu": ConstantRecord(value=mu, provenance=Provenance.FITTED,
                                 method="largest grid mu with stable constants"),
            "K": ConstantRecord(value=K_fit, provenance=Provenance.FITTED, method="linprog (highs) on all T"),
            "C": ConstantRecord(value=C_fit, provenance=Provenance.FITTED, method="linprog (highs) on all T"),
            "F_model": ConstantRecord(value=model.f_value, provenance=Provenance.FORMULA, method="sqrt(2 pi / e)"),
            "eps": ConstantRecord(value=eps, provenance=Provenance.CONFIGURED, method="graphical closeness"),
        },
        notes=notes,
        auxiliary={"variation": [variations[m] for m in sorted(variations)]},
        force_fail=not stable,
    )


def check_quadratic_bound(
    model: ShrinkerModel,
    amplitudes: Sequence[float] = (0.01, 0.02, 0.04),
    resolution: Optional[int] = None,
    mode: Optional[int] = None,
    window: float = DEFAULT_WINDOW,
    band: float = 0.05,
) -> CheckReport:
    """
    |F(Gamma_U) - F(Gamma)| on graphs U = +-eps cos(mode * parameter) scales
    like eps^2. The even part (F(Gamma_U) + F(Gamma_{-U}))/2 - F(Gamma) drops
    the eps^3 term, which survives on the cylinder because the Gaussian
    weight is not invariant under cos z -> -cos z; its ratio between
    consecutive amplitudes must be the squared amplitude ratio within
    ``band``. The bound itself is checked for both signs, C being the
    smallest constant that makes it hold.
    """
    name = "quadratic_bound"
    eps = np.asarray(sorted(amplitudes), dtype=float)
    if eps.size < 2 or eps[0] <= 0:
        raise InvalidInputError("need at least two positive amplitudes")
    if resolution is None:
        resolution = 256 if model.kind == ModelKind.CIRCLE else 241
    if mode is None:
        mode = 2 if model.kind == ModelKind.CIRCLE else 1

    F_ref = f_functional(make_model_surface(model, resolution, window=window))
    even, lhs, denom = [], [], []
    for e in eps:
        signed = []
        for amplitude in (float(e), -float(e)):
            gf = mode_perturbation(model, {mode: amplitude}, resolution, window)
            s = make_model_surface(model, resolution, gf, window=window)
            F = f_functional(s)
            signed.append(F)
            lhs.append(abs(F - F_ref))
            u_norm = graph_l2(gf)
            denom.append(math.sqrt(phi_norm_sq(s)) * u_norm + u_norm ** 3)
        even.append(abs(0.5 * (signed[0] + signed[1]) - F_ref))
    even, lhs, denom = np.array(even), np.array(lhs), np.array(denom)

    C = float(np.max(lhs / denom))
    ratios = even[1:] / even[:-1]
    expected = (eps[1:] / eps[:-1]) ** 2
    ratio_slacks = np.minimum(ratios - (1.0 - band) * expected, (1.0 + band) * expected - ratios)
    bound_slacks = C * denom - lhs
    return CheckReport.from_slacks(
        name=name,
        anchor=QUADRATIC_ANCHOR,
        slacks=np.concatenate([ratio_slacks, bound_slacks]),
        tolerance=1e-12,
        constants={
            "C": ConstantRecord(value=C, provenance=Provenance.FITTED, method="max lhs / (||phi|| ||U|| + ||U||^3)"),
            "mode": ConstantRecord(value=float(mode), provenance=Provenance.CONFIGURED, method="caller"),
        },
        notes=[f"even-part ratios {', '.join(f'{r:.4f}' for r in ratios)} "
               f"against {', '.join(f'{x:.2f}' for x in expected)}",
               "bound slacks alternate +eps, -eps per amplitude"],
        auxiliary={"amplitudes": [float(x) for x in eps], "even_part": [float(x) for x in even],
                   "lhs": [float(x) for x in lhs], "ratios": [float(x) for x in ratios]},
    )


# --------------------------------------------------------------------------- #
def _graph_matrix(traj: FlowTrajectory, model: ShrinkerModel):
    """Stacked graph samples of every state, or the time of the first graph loss."""
    rows = []
    parameter = None
    for s in traj.states:
        try:
            gf = graph_over_model(s, model)
        except GraphExtractionError:
            return None, None, float(s.time)
        if parameter is not None and gf.parameter.shape != parameter.shape:
            raise InvalidInputError("graphs over the model change resolution along the trajectory")
        parameter = gf.parameter
        rows.append(gf.samples)
    return np.vstack(rows), model_l2_weights(model, parameter), None


def _sup_distances(U: np.ndarray, w: np.ndarray) -> np.ndarray:
    """D_i = max_{j >= i} ||U_j - U_i||_{L^2(w)}."""
    n = U.shape[0]
    out = np.zeros(n)
    for i in range(n):
        diff = U[i:] - U[i]
        out[i] = float(np.sqrt(np.max(np.sum(w * diff ** 2, axis=1))))
    return out


def distance_sup_at(traj: FlowTrajectory, model: ShrinkerModel, t1_values: Sequence[float]) -> np.ndarray:
    """sup_{t2 >= t1} ||U(t2) - U(t1)|| at the requested recorded times."""
    U, w, lost = _graph_matrix(traj, model)
    if lost is not None:
        raise GraphExtractionError(f"trajectory leaves the graphical regime at t={lost:.6g}")
    D = _sup_distances(U, w)
    return np.array([D[traj.index_of(float(t1))] for t1 in t1_values])


def check_distance_decay(traj: FlowTrajectory, model: ShrinkerModel, confidence: float = 0.95) -> CheckReport:
    """
    Fits D(t1) = sup_{t2 >= t1} ||U(t2) - U(t1)|| ~ C0 t1^{-rho} by log-log
    regression on t1 in [max(1, t_a + L/4), t_a + 3L/4], L the trajectory
    length, and requires a positive lower confidence bound on rho.
    """
    name = "distance_decay"
    _require_rescaled(traj)
    U, w, lost = _graph_matrix(traj, model)
    if lost is not None:
        return CheckReport.vacuous(name, DISTANCE_ANCHOR, f"graph over the model lost at t={lost:.6g}", lost)
    D = _sup_distances(U, w)
    t = traj.times
    length = traj.t_end - traj.t_start
    lo, hi = max(1.0, traj.t_start + 0.25 * length), traj.t_start + 0.75 * length
    sel = (t >= lo) & (t <= hi)
    aux = {"t1": [float(x) for x in t], "sup_distance": [float(x) for x in D]}

    if float(np.max(D)) <= 1e-14:
        return CheckReport.from_slacks(
            name, DISTANCE_ANCHOR, [0.0], 0.0, sample_times=[lo],
            constants={"C0": ConstantRecord(value=0.0, provenance=Provenance.FITTED, method="distances vanish")},
            notes=["distances vanish along the trajectory"], auxiliary=aux)

    keep = sel & (D > 0)
    if np.count_nonzero(keep) < 3:
        return CheckReport.vacuous(name, DISTANCE_ANCHOR, f"fewer than 3 positive distances in [{lo:.4g}, {hi:.4g}]")

    fit = linregress(np.log(t[keep]), np.log(D[keep]))
    rho = float(-fit.slope)
    dof = int(np.count_nonzero(keep)) - 2
    half_width = float(student_t.ppf(0.5 * (1.0 + confidence), dof) * fit.stderr) if dof > 0 else math.inf
    rho_lower = rho - half_width
    C0 = float(np.max(D[keep] * t[keep] ** rho))
    envelope = C0 * t[keep] ** (-rho) - D[keep]
    logger.info(f"{name}: rho={rho:.4g} (lower {rho_lower:.4g}), C0={C0:.4g}")
    return CheckReport.from_slacks(
        name=name,
        anchor=DISTANCE_ANCHOR,
        slacks=np.concatenate([[rho_lower], envelope]),
        tolerance=1e-12 * max(1.0, C0),
        sample_times=np.concatenate([[lo], t[keep]]),
        constants={
            "rho": ConstantRecord(value=rho, provenance=Provenance.FITTED, method="linregress of log D on log t1"),
            "rho_lower": ConstantRecord(value=rho_lower, provenance=Provenance.FITTED,
                                        method=f"{confidence:.0%} Student t lower bound"),
            "C0": ConstantRecord(value=C0, provenance=Provenance.FITTED, method="max D(t1) t1^rho on the fit window"),
        },
        notes=["first slack is the lower confidence bound of rho"],
        auxiliary=aux,
    )


# --------------------------------------------------------------------------- #
def check_extension_phi_bound(
    traj: FlowTrajectory,
    T,
    cfg: FunctionalConfig,
    model: ShrinkerModel,
    radii: Optional[Sequence[float]] = None,
    mu: float = 0.1,
    eps: float = 0.5,
) -> CheckReport:
    """
    Smallest (C, C_g) with ||phi(T)||^2 on B_{(1+mu)R} below C e^{-R_T^2/2} +
    C_g lambda0 e^{-T/2} over the sampled T and the radii the slice is
    graphical on. The norm must not decrease in R.
    """
    name = "extension_phi_bound"
    _require_rescaled(traj)
    T_values = np.atleast_1d(np.asarray(T, dtype=float))
    if radii is None:
        radii = (0.5, 1.0, 1.5, 2.0) if model.kind == ModelKind.CIRCLE else (1.0, 2.0, 3.0, 4.0, 5.0)
    radii = np.asarray(sorted(radii), dtype=float)

    lhs, coef_c, coef_g, where, monotone = [], [], [], [], []
    for Tk in T_values:
        readout = shrinker_scale(traj, float(Tk), cfg)
        state = traj.states[traj.index_of(float(Tk))]
        gs = graphical_scale(state, model, eps)
        usable = radii[(1.0 + mu) * radii <= gs.radius]
        values = [phi_norm_sq(state, radius=(1.0 + mu) * R) for R in usable]
        monotone.extend(float(b - a) for a, b in zip(values[:-1], values[1:]))
        for v in values:
            lhs.append(v)
            coef_c.append(readout.phi_window_integral)
            coef_g.append(cfg.lambda0 * math.exp(-float(Tk) / 2.0))
            where.append(float(Tk))
    if not lhs:
        return CheckReport.vacuous(name, EXTENSION_ANCHOR, "graphical scale below (1+mu) R for every tested radius",
                                   float(T_values[0]))

    lhs, coef_c, coef_g = np.array(lhs), np.array(coef_c), np.array(coef_g)
    C, C_g = _fit_envelope(lhs, coef_c, coef_g)
    slacks = np.concatenate([C * coef_c + C_g * coef_g - lhs, monotone])
    return CheckReport.from_slacks(
        name=name,
        anchor=EXTENSION_ANCHOR,
        slacks=slacks,
        tolerance=1e-12 * max(1.0, float(np.max(lhs))),
        sample_times=where + [float(T_values[0])] * len(monotone),
        constants={
            "C": ConstantRecord(value=C, provenance=Provenance.FITTED, method="linprog (highs)"),
            "C_g": ConstantRecord(value=C_g, provenance=Provenance.FITTED, method="linprog (highs)"),
            "lambda0": ConstantRecord(value=cfg.lambda0, provenance=Provenance.CONFIGURED, method="FUNCTIONAL_LAMBDA0"),
            "mu": ConstantRecord(value=mu, provenance=Provenance.CONFIGURED, method="caller"),
        },
        notes=["trailing slacks are increments of the norm in R"] if monotone else [],
        auxiliary={"lhs": [float(x) for x in lhs]},
    )
