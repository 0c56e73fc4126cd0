"""Long-run capacity limit: where maximal revenue exactly covers cost.

Beyond the deliverability threshold the maximal revenue is proportional to
the emissions intensity, so the limit solves C(Q) = M/(exp(1)*eps) * e(Q).
The gap F(Q) = revenue - cost is strictly decreasing there for accepted
models (e nonincreasing, C increasing), which makes plain bisection both
sufficient and robust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import demand_pricing as dp
from . import grid_model as gm
from .errors import InfeasibleAtThresholdError, ThresholdUnreachableError

RESIDUAL_REL_TOL = 1e-8
# Width exit is a safety net only; it sits far below the residual criterion so
# the residual tolerance is what actually decides convergence.
WIDTH_REL_TOL = 1e-12
MAX_ITERATIONS = 200
BRACKET_GROWTH = 2.0


@dataclass(frozen=True)
class EquilibriumResult:
    """Solved long-run limit with the bracket and convergence diagnostics."""

    capacity_limit: float  # Q where expansion stops, GW
    deliverability_threshold: float  # smallest Q with f(Q) >= M/exp(1), GW
    emissions_at_limit: float  # ton-CO2/MWh, strictly positive
    residual: float  # |C - peak revenue| at the limit, M$/yr
    bracket: tuple[float, float]
    iterations: int
    domain_capped: bool = False

    def to_dict(self) -> dict:
        return {
            "capacity_limit": self.capacity_limit,
            "deliverability_threshold": self.deliverability_threshold,
            "emissions_at_limit": self.emissions_at_limit,
            "residual": self.residual,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "domain_capped": self.domain_capped,
        }


def find_deliverability_threshold(dm: dp.DemandModel, model: gm.GridModel) -> float:
    """Smallest Q in the domain where delivered output covers peak sales M/e.

    Bisection on the nondecreasing delivered curve; returns the domain minimum
    when it is already satisfied there.
    """
    target = dm.market_size * math.exp(-1.0)
    lo, hi = model.domain
    if model.delivered_at(lo) >= target:
        return lo
    if model.delivered_at(hi) < target:
        raise ThresholdUnreachableError(
            f"f(Q_max)={model.delivered_at(hi):.6g} GW never reaches peak sales "
            f"{target:.6g} GW"
        )
    width_tol = 1e-12 * max(1.0, abs(hi))
    for _ in range(MAX_ITERATIONS):
        if hi - lo <= width_tol:
            break
        mid = 0.5 * (lo + hi)
        if model.delivered_at(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def _gap(dm: dp.DemandModel, model: gm.GridModel, q: float) -> float:
    return dp.unconstrained_peak_revenue(dm, model.emissions_at(q)) - gm.cost_integrated(
        model, q
    )


def solve_long_run_limit(dm: dp.DemandModel, model: gm.GridModel) -> EquilibriumResult:
    """Bisect the revenue/cost gap above the deliverability threshold.

    Converges when the residual drops below 1e-8 * max(1, |C|) or the bracket
    width below 1e-10 of its upper end.  If the gap never turns negative inside
    the domain, the result is capped at the domain edge and flagged instead of
    raising, since the limit then lies beyond the calibrated data.
    """
    threshold = find_deliverability_threshold(dm, model)
    domain_hi = model.domain[1]

    def residual_tol(q: float) -> float:
        return RESIDUAL_REL_TOL * max(1.0, abs(gm.cost_integrated(model, q)))

    gap_at_threshold = _gap(dm, model, threshold)
    if gap_at_threshold < -residual_tol(threshold):
        raise InfeasibleAtThresholdError(
            f"cost already exceeds maximal revenue by {-gap_at_threshold:.6g} M$/yr "
            f"at the deliverability threshold Q={threshold:.6g}"
        )

    def finish(q: float, bracket: tuple[float, float], iterations: int, capped: bool):
        return EquilibriumResult(
            capacity_limit=q,
            deliverability_threshold=threshold,
            emissions_at_limit=model.emissions_at(q),
            residual=abs(_gap(dm, model, q)),
            bracket=bracket,
            iterations=iterations,
            domain_capped=capped,
        )

    if abs(gap_at_threshold) <= residual_tol(threshold):
        return finish(threshold, (threshold, threshold), 0, False)

    hi = min(threshold * BRACKET_GROWTH + 1.0, domain_hi)
    while _gap(dm, model, hi) > 0.0 and hi < domain_hi:
        hi = min(hi * BRACKET_GROWTH, domain_hi)
    if _gap(dm, model, hi) > 0.0:
        # no sign change inside the domain
        return finish(domain_hi, (threshold, domain_hi), 0, True)

    lo = threshold
    bracket = (lo, hi)
    iterations = 0
    mid = 0.5 * (lo + hi)
    for iterations in range(1, MAX_ITERATIONS + 1):
        mid = 0.5 * (lo + hi)
        gap_mid = _gap(dm, model, mid)
        if abs(gap_mid) <= residual_tol(mid) or hi - lo <= WIDTH_REL_TOL * abs(hi):
            break
        if gap_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return finish(mid, bracket, iterations, False)


def check_nonvanishing_emissions(result: EquilibriumResult) -> bool:
    """True iff the grid keeps strictly positive emissions at the limit."""
    return result.emissions_at_limit > 1e-12


def check_k_independence(
    dm: dp.DemandModel, model: gm.GridModel, k_values: list[float]
) -> float:
    """Max relative spread of the capacity limit across investment costs.

    The revenue/cost gap does not involve k, so the spread is expected to be
    zero up to solver tolerance.
    """
    if not k_values:
        raise ValueError("need at least one investment cost")
    if any(k <= 0 for k in k_values):
        raise ValueError("investment costs must be positive")
    limits = [
        solve_long_run_limit(dm, model.with_invest_cost(k)).capacity_limit
        for k in k_values
    ]
    spread = max(limits) - min(limits)
    return spread / max(abs(max(limits)), 1e-300)
