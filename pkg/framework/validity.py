"""Decoherence-diffusion trade-off and the mean-field validity window.

The trade-off gamma_C gamma_Q >= lam^2/16 decides whether the stochastic unraveling
exists. The window asks for tau >> gamma_C/(lam^2 <A>^2) (noise invisible against the
force) and tau << 1/(gamma_Q Var A) (no decoherence yet); ">>" is the factor chi.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from framework.errors import PreconditionError
from framework.models import ModelParams
from framework.qmat import TOL_HERMITIAN, QubitDensity, expectation

DEFAULT_CHI = 10.0


@dataclass(frozen=True)
class ValidityReport:
    tradeoff_holds: bool
    tradeoff_margin: float
    tau_lower: float | None
    tau_upper: float
    window_nonempty: bool
    separation_factor_used: float
    mean_a: float
    mean_a_sq: float
    variance_a: float
    chain: dict[str, float] = field(default_factory=dict)
    special_case: str | None = None

    @property
    def midpoint(self) -> float | None:
        if not self.window_nonempty or self.tau_lower is None or math.isinf(self.tau_upper):
            return None
        return 0.5 * (self.tau_lower + self.tau_upper)


def check_tradeoff(params: ModelParams) -> tuple[bool, float]:
    """Equality (saturation) counts as holding."""
    margin = params.gamma_c * params.gamma_q - params.lam**2 / 16.0
    return margin >= 0.0, margin


def timescale_window(
    params: ModelParams, rho: QubitDensity, chi: float = DEFAULT_CHI
) -> ValidityReport:
    if not chi > 1.0:
        raise PreconditionError(f"separation factor chi must be > 1 (got {chi})")
    holds, margin = check_tradeoff(params)
    a_op = params.a_op
    mean_a = expectation(a_op, rho)
    # <A^2> from the matrix square; eigenvalues need not be +-1
    mean_a_sq = float(np.trace(a_op.matrix @ a_op.matrix @ rho.matrix).real)
    variance = max(mean_a_sq - mean_a**2, 0.0)

    if params.lam == 0.0:
        return ValidityReport(
            tradeoff_holds=holds,
            tradeoff_margin=margin,
            tau_lower=0.0,
            tau_upper=math.inf,
            window_nonempty=True,
            separation_factor_used=chi,
            mean_a=mean_a,
            mean_a_sq=mean_a_sq,
            variance_a=variance,
            special_case="no_backreaction",
        )

    tau_lower: float | None = None
    if abs(mean_a) > TOL_HERMITIAN:
        tau_lower = chi * params.gamma_c / (params.lam**2 * mean_a**2)
    if variance == 0.0 or params.gamma_q == 0.0:
        tau_upper = math.inf
    else:
        tau_upper = (1.0 / chi) / (params.gamma_q * variance)
    nonempty = tau_lower is not None and tau_upper > tau_lower

    chain: dict[str, float] = {}
    tau_ref = _reference_tau(tau_lower, tau_upper)
    if tau_ref is not None and tau_ref > 0.0:
        # variance << 1/(gamma_Q tau) <= 16 gamma_C/(lam^2 tau) << 16 <A>^2
        chain = {
            "tau_ref": tau_ref,
            "variance_a": variance,
            "decoherence_term": (
                1.0 / (params.gamma_q * tau_ref) if params.gamma_q > 0.0 else math.inf
            ),
            "tradeoff_term": 16.0 * params.gamma_c / (params.lam**2 * tau_ref),
            "diffusion_term": params.gamma_c / (params.lam**2 * tau_ref),
            "expectation_squared": mean_a**2,
        }
    return ValidityReport(
        tradeoff_holds=holds,
        tradeoff_margin=margin,
        tau_lower=tau_lower,
        tau_upper=tau_upper,
        window_nonempty=nonempty,
        separation_factor_used=chi,
        mean_a=mean_a,
        mean_a_sq=mean_a_sq,
        variance_a=variance,
        chain=chain,
    )


def _reference_tau(tau_lower: float | None, tau_upper: float) -> float | None:
    """Point at which the inequality chain is printed: geometric mean of finite bounds."""
    if tau_lower is not None and math.isfinite(tau_upper):
        return math.sqrt(tau_lower * tau_upper) if tau_lower > 0.0 else tau_upper
    if tau_lower is not None:
        return tau_lower
    if math.isfinite(tau_upper):
        return tau_upper
    return None


def window_sweep(
    params: ModelParams, bloch_polar_angles: Sequence[float], chi: float = DEFAULT_CHI
) -> list[dict[str, float | bool | None]]:
    rows: list[dict[str, float | bool | None]] = []
    for theta in bloch_polar_angles:
        if not 0.0 <= theta <= math.pi:
            raise PreconditionError(f"polar angle must lie in [0, pi] (got {theta})")
        report = timescale_window(params, QubitDensity.polar(theta), chi)
        width: float | None = None
        if report.window_nonempty and report.tau_lower is not None:
            width = (
                math.inf
                if math.isinf(report.tau_upper) or report.tau_lower == 0.0
                else math.log(report.tau_upper / report.tau_lower)
            )
        rows.append(
            {
                "theta": float(theta),
                "mean_a": report.mean_a,
                "variance_a": report.variance_a,
                "tau_lower": report.tau_lower,
                "tau_upper": report.tau_upper,
                "window_nonempty": report.window_nonempty,
                "log_width": width,
            }
        )
    return rows


def report_to_dict(report: ValidityReport) -> dict[str, object]:
    return {
        "tradeoff_holds": report.tradeoff_holds,
        "tradeoff_margin": report.tradeoff_margin,
        "tau_lower": report.tau_lower,
        "tau_upper": report.tau_upper,
        "window_nonempty": report.window_nonempty,
        "window_midpoint": report.midpoint,
        "separation_factor_used": report.separation_factor_used,
        "mean_a": report.mean_a,
        "mean_a_sq": report.mean_a_sq,
        "variance_a": report.variance_a,
        "chain": dict(report.chain),
        "special_case": report.special_case,
    }
