"""Revenue allocation between the program operator and renewable generators.

A policy-controlled fraction ``gamma`` of program revenue is transferred to
generators; the operator keeps the rest and funds system cost plus expansion.
The accounts are strictly separated: a generator surplus (negative generator
net cost) never subsidizes the operator's budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import demand_pricing as dp
from . import grid_model as gm
from .errors import InfeasibleSharingError, NoRevenueError

PHASE_TOL = 1e-9


@dataclass(frozen=True)
class SharingSolution:
    """Optimal share and budget slacks for one period under separated accounts."""

    share: float
    operator_budget_residual: float  # (1-gamma)R - (C_S + k q), M$/yr
    generator_budget_residual: float  # gamma R - C_2, M$/yr
    equivalent_to_integrated: bool

    def to_dict(self) -> dict:
        return {
            "share": self.share,
            "operator_budget_residual": self.operator_budget_residual,
            "generator_budget_residual": self.generator_budget_residual,
            "equivalent_to_integrated": self.equivalent_to_integrated,
        }


def optimal_share(dm: dp.DemandModel, model: gm.GridModel, q: float) -> float:
    """Smallest revenue share that keeps generators viable: max{0, C_2/R*}.

    A share of 1 or more would leave the operator nothing for its own strictly
    positive cost, so that case is an error rather than a clamp.
    """
    price, _ = dp.optimal_price(dm, model, q)
    rev = dp.revenue(dm, price, model.emissions_at(q))
    if rev <= 0:
        raise NoRevenueError(f"maximal revenue {rev} at Q={q} is nonpositive")
    share = max(0.0, gm.cost_generator(model, q) / rev)
    if share >= 1.0:
        raise InfeasibleSharingError(
            f"required share {share:.6f} at Q={q} leaves the operator nothing"
        )
    return share


def expansion_given_share(
    dm: dp.DemandModel, model: gm.GridModel, q: float, share: float
) -> float:
    """Operator-funded expansion ((1-gamma) R* - C_S)/k, clamped at zero.

    Affine and strictly decreasing in the share before clamping.
    """
    if not 0.0 <= share < 1.0:
        raise ValueError("share must lie in [0, 1)")
    price, _ = dp.optimal_price(dm, model, q)
    rev = dp.revenue(dm, price, model.emissions_at(q))
    return max(
        0.0,
        ((1.0 - share) * rev - model.cost_system.cost(q)) / model.invest_cost,
    )


def classify_phase(share: float, expansion: float, feasible: bool) -> dp.Phase:
    """Exactly one transition label per (share, expansion, feasibility) input.

    Zero comparisons use an absolute tolerance of 1e-9.
    """
    if not feasible:
        return dp.Phase.INFEASIBLE
    if expansion > PHASE_TOL:
        return dp.Phase.SPONTANEOUS if share <= PHASE_TOL else dp.Phase.SUPPORTED
    return dp.Phase.EQUILIBRIUM


def solve_separated_period(
    dm: dp.DemandModel, model: gm.GridModel, q: float
) -> tuple[dp.PeriodSolution, SharingSolution]:
    """Solve one period under separated accounts and compare with integrated.

    Pricing is unchanged (it is a pure revenue problem).  With an interior
    share both budgets bind and their sum recovers the integrated financial
    constraint, so the expansion coincides with the integrated one.  With a
    strict generator surplus (C_2 < 0) the operator cannot tap that surplus,
    and the separated expansion falls short of the integrated benchmark by
    exactly |C_2|/k.
    """
    price, deliverability_binding = dp.optimal_price(dm, model, q)
    rev = dp.revenue(dm, price, model.emissions_at(q))
    share = optimal_share(dm, model, q)
    expansion = expansion_given_share(dm, model, q, share)
    if expansion <= PHASE_TOL:  # equilibrium periods carry an exact zero
        expansion = 0.0
    integrated = dp.optimal_expansion(dm, model, q)

    c_gen = gm.cost_generator(model, q)
    operator_residual = (1.0 - share) * rev - gm.cost_operator(model, q, expansion)
    generator_residual = share * rev - c_gen

    tol = dp.EQUILIBRIUM_REL_TOL * max(1.0, abs(rev))
    feasible = operator_residual >= -tol and generator_residual >= -tol
    financial_binding = abs(operator_residual) <= tol

    equivalent = abs(expansion - integrated.expansion) <= max(
        PHASE_TOL, PHASE_TOL * abs(integrated.expansion)
    )
    if 0.0 < share and expansion > PHASE_TOL:
        aggregation_gap = gm.cost_operator(model, q, expansion) + c_gen - rev
        equivalent = equivalent and abs(aggregation_gap) <= tol

    solution = dp.PeriodSolution(
        price=price,
        expansion=expansion,
        share=share,
        revenue=rev,
        deliverability_binding=deliverability_binding,
        financial_binding=financial_binding,
        phase=classify_phase(share, expansion, feasible),
    )
    sharing = SharingSolution(
        share=share,
        operator_budget_residual=operator_residual,
        generator_budget_residual=generator_residual,
        equivalent_to_integrated=equivalent,
    )
    return solution, sharing
