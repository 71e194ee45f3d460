"""Mass inequalities and rigidity checks assembled from one scenario.

The ADM mass of the constructed extension is bounded by
``m_aS + m_H(Sigma) + e``.  The checks here compare the solver's own outputs
against that bound.  A violation therefore points at a numerical defect, and
each reported mass carries an explicit tail bound so that the tolerance is
derived rather than guessed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .asphericity import AsphericityResult, asphericity_partial_at, cumulative_at, damping_exponent
from .extension_builder import ExtensionSolution, PrescribedScalar
from .modified_ricci_flow import FlowTrace
from .rotsym import schwarzschild_u
from .sphere_geometry import FOUR_PI, AxisymMetric, integrate

UNCHECKED_HYPOTHESIS = (
    "Sigma is taken as abstract boundary data; the existence of a filling with "
    "nonnegative scalar curvature is assumed, not verified"
)


def hawking_mass_initial(metric: AxisymMetric, H) -> float:
    """Hawking mass ``(1/2)(1 - (1/16 pi) int H^2)`` of the unit-area-normalised boundary."""
    if abs(metric.area - FOUR_PI) > 1e-10 * FOUR_PI:
        raise ValueError("boundary metric must have area 4 pi")
    H = np.broadcast_to(np.asarray(H, dtype=float), (metric.grid.n,))
    return 0.5 * (1.0 - integrate(metric, H * H) / (4.0 * FOUR_PI))


def e_term_at(trace: FlowTrace, Rbar: PrescribedScalar, t) -> np.ndarray:
    """``e_t = (1/2) int_1^t (tau^2/2) Rbar_*(tau) E(tau, t) dtau`` at each given time.

    The part covered by the trace samples uses the trapezoidal rule.  Beyond
    the trace ``E`` is frozen, so that part is integrated in closed form.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if Rbar.is_zero:
        return np.zeros_like(t)
    theta = trace.grid.theta
    times = trace.times
    T = times[-1]
    phi = damping_exponent(trace)
    rstar1 = Rbar.sup(1.0, theta)
    integrand = 0.5 * times**2 * rstar1 * times ** (-Rbar.p) * np.exp(phi - phi[-1])
    t_in = np.minimum(t, T)
    inside = 0.5 * np.exp(phi[-1] - damping_exponent(trace, t_in)) * cumulative_at(times, integrand, t_in)
    outside = 0.25 * (Rbar.weighted_tail(T, 2, theta) - np.array([Rbar.weighted_tail(x, 2, theta) for x in np.maximum(t, T)]))
    return inside + outside


def e_term(trace: FlowTrace, Rbar: PrescribedScalar, t: float) -> float:
    """Scalar version of :func:`e_term_at`."""
    return float(e_term_at(trace, Rbar, [t])[0])


def e_limit(trace: FlowTrace, Rbar: PrescribedScalar) -> tuple[float, float]:
    """``(e, tail)`` with ``e`` the limit as ``t -> inf``; the closed-form tail is exact."""
    if Rbar.is_zero:
        return 0.0, 0.0
    theta = trace.grid.theta
    T = trace.end_time
    tail = 0.25 * Rbar.weighted_tail(T, 2, theta)
    return e_term(trace, Rbar, T) + tail, 0.0


@dataclass
class RigidityFlags:
    triggered: bool
    R_is_zero: bool | None = None
    metric_is_round: bool | None = None
    u_is_rotsym: bool | None = None
    u_matches_model: bool | None = None
    deviations: dict = field(default_factory=dict)
    discrepancies: list = field(default_factory=list)


def verify_rigidity(
    sol: ExtensionSolution,
    trace: FlowTrace,
    Rbar: PrescribedScalar,
    m_H_sigma: float,
    tol: float = 1e-4,
) -> RigidityFlags:
    """When ``|m_ADM - m_H(Sigma)| < tol``, check that the configuration is rigid.

    Rigid means ``Rbar = 0``, a round boundary, a rotationally symmetric lapse
    and Euclidean or Schwarzschild leaves.  A failed flag is reported as a
    discrepancy and never raised.
    """
    gap = abs(sol.adm_estimate - m_H_sigma)
    if gap >= tol:
        return RigidityFlags(False, deviations={"adm_minus_hawking": gap})
    u = sol.u
    oscillation = float(np.max(np.ptp(u, axis=1)))
    roundness = 1.0 - float(trace.K_star_series[0])
    if abs(m_H_sigma) < tol:
        model_dev = float(np.max(np.abs(u - 1.0)))
    else:
        model = schwarzschild_u(m_H_sigma, sol.times)
        model_dev = float(np.max(np.abs(u / model[:, None] - 1.0)))
    flags = RigidityFlags(
        True,
        R_is_zero=Rbar.is_zero,
        metric_is_round=roundness < tol,
        u_is_rotsym=oscillation < tol,
        u_matches_model=model_dev < tol,
        deviations={
            "adm_minus_hawking": gap,
            "one_minus_K_star": roundness,
            "u_oscillation": oscillation,
            "u_model_deviation": model_dev,
        },
    )
    for name in ("R_is_zero", "metric_is_round", "u_is_rotsym", "u_matches_model"):
        if not getattr(flags, name):
            flags.discrepancies.append(name)
    return flags


@dataclass
class MassReport:
    m_H_sigma: float
    m_aS: float
    m_aS_tail: float
    e_term: float
    e_tail: float
    adm_estimate: float
    adm_tail: float
    inequality_slack: float
    tolerance: float
    violated: bool
    per_time_min_slack: float
    per_time_ok: bool
    rigidity: RigidityFlags
    unchecked_hypothesis: str = UNCHECKED_HYPOTHESIS

    def as_dict(self) -> dict:
        return asdict(self)


def verify_mass_bound(
    sol: ExtensionSolution,
    asph: AsphericityResult,
    trace: FlowTrace,
    Rbar: PrescribedScalar,
    m_H_sigma: float | None = None,
    base_tolerance: float = 1e-4,
    rigidity_tol: float = 1e-4,
) -> MassReport:
    """Check ``m_ADM <= m_aS + m_H(Sigma) + e`` and its finite-radius version.

    At every output time ``t`` of the extension the leaf mass must satisfy
    ``m_H(Sigma_t) <= m_aS(t) + e_t + m_H(Sigma)``.  The tolerance is the sum of
    the reported tail bounds plus ``base_tolerance``.
    """
    if m_H_sigma is None:
        m_H_sigma = float(sol.leaf_hawking[0])
    if asph.limit is None:
        raise ValueError("asphericity limit is unavailable")
    e_val, e_tail = e_limit(trace, Rbar)
    slack = asph.limit + m_H_sigma + e_val - sol.adm_estimate
    tolerance = asph.tail_bound + e_tail + sol.adm_tail_bound + base_tolerance
    bound = asphericity_partial_at(trace, sol.times) + e_term_at(trace, Rbar, sol.times) + m_H_sigma
    per_time = bound - sol.leaf_hawking
    per_time_min = float(per_time.min())
    return MassReport(
        m_H_sigma=float(m_H_sigma),
        m_aS=float(asph.limit),
        m_aS_tail=float(asph.tail_bound),
        e_term=float(e_val),
        e_tail=float(e_tail),
        adm_estimate=float(sol.adm_estimate),
        adm_tail=float(sol.adm_tail_bound),
        inequality_slack=float(slack),
        tolerance=float(tolerance),
        violated=bool(slack < -tolerance),
        per_time_min_slack=per_time_min,
        per_time_ok=bool(per_time_min >= -tolerance),
        rigidity=verify_rigidity(sol, trace, Rbar, m_H_sigma, rigidity_tol),
    )


def is_finite_report(report: MassReport) -> bool:
    return all(
        math.isfinite(x)
        for x in (report.m_H_sigma, report.m_aS, report.e_term, report.adm_estimate, report.inequality_slack)
    )
