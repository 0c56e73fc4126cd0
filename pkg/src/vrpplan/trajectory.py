"""Multi-period simulation: state transition, myopic policy, reachability.

The state is cumulative capacity Q_t, advanced by Q_{t+1} = Q_t + q_t with
integer-period bookkeeping (the recorded transition is exact, no drift).  The
myopic policy expands to the maximal feasible level each period, capped by the
long-run limit (no overbuild); per-period feasibility is enforced with no
banking of cash or credits across periods.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import demand_pricing as dp
from . import equilibrium as eqm
from . import grid_model as gm
from . import revenue_sharing as rs
from .errors import InfeasiblePeriodError, InfeasibleSharingError

REACH_TOL = 1e-9  # relative closeness to the limit that counts as "reached"

TRAJECTORY_CSV_COLUMNS = ("t", "Q", "p", "q", "gamma", "R", "phase", "e")


@dataclass(frozen=True)
class SimulationConfig:
    """Initial state and horizon for a run; periods are abstract (default years)."""

    q_init: float
    horizon: int
    stop_at_limit: bool = True
    period_label: str = "year"

    def __post_init__(self):
        if self.q_init < 0:
            raise ValueError("q_init must be nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def to_dict(self) -> dict:
        return {
            "q_init": self.q_init,
            "horizon": self.horizon,
            "stop_at_limit": self.stop_at_limit,
            "period_label": self.period_label,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SimulationConfig":
        return cls(
            q_init=float(doc["q_init"]),
            horizon=int(doc["horizon"]),
            stop_at_limit=bool(doc.get("stop_at_limit", True)),
            period_label=str(doc.get("period_label", "year")),
        )


class Termination(Enum):
    HORIZON_END = "horizon_end"
    REACHED_LIMIT = "reached_limit"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class PeriodRecord:
    t: int
    capacity: float
    solution: dp.PeriodSolution


@dataclass(frozen=True)
class Trajectory:
    records: tuple[PeriodRecord, ...]
    termination: Termination
    cumulative_expansion: float
    cumulative_emission_index: float  # sum of e(Q_t) over recorded periods
    capacity_limit: float

    def capacities(self) -> list[float]:
        return [r.capacity for r in self.records]

    def to_dict(self) -> dict:
        return {
            "termination": self.termination.value,
            "cumulative_expansion": self.cumulative_expansion,
            "cumulative_emission_index": self.cumulative_emission_index,
            "capacity_limit": self.capacity_limit,
            "records": [
                {"t": r.t, "capacity": r.capacity, **r.solution.to_dict()}
                for r in self.records
            ],
        }


def max_feasible_expansion(dm: dp.DemandModel, model: gm.GridModel, q: float) -> float:
    """Maximal one-step expansion at state Q under optimal pricing.

    Equals the optimal-expansion value (R* - C)/k clamped at zero; raises when
    the period is infeasible outright (revenue below cost at q = 0).
    """
    expansion, status = dp.optimal_expansion(dm, model, q)
    if status is dp.ExpansionStatus.INFEASIBLE:
        raise InfeasiblePeriodError(f"revenue cannot cover cost at Q={q}")
    return expansion


def reach_map(dm: dp.DemandModel, model: gm.GridModel, q: float) -> float:
    """One-step reachability S(Q) = Q + max feasible expansion."""
    return q + max_feasible_expansion(dm, model, q)


def reachability_lower_bound(
    market_size: float,
    sensitivity: float,
    invest_cost: float,
    max_abs_emissions_slope: float,
    max_abs_cost_slope: float,
) -> float:
    """Conservative lower bound on the reach-map slope from derivative caps.

    1 - (M/(exp(1)*eps) * max|e'| + max|C'|) / k; nonnegative values certify
    that one-step reachability is monotone, hence the myopic policy optimal.
    """
    revenue_scale = market_size / (math.e * sensitivity)
    return 1.0 - (revenue_scale * max_abs_emissions_slope + max_abs_cost_slope) / invest_cost


@dataclass(frozen=True)
class ReachabilityCertificate:
    holds: bool
    min_margin: float  # worst sampled slope-like margin (primitive or discrete)
    worst_capacity: float
    bound_formula_value: float  # conservative bound from sampled derivative maxima
    max_abs_emissions_slope: float
    max_abs_cost_slope: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "min_margin": self.min_margin,
            "worst_capacity": self.worst_capacity,
            "bound_formula_value": self.bound_formula_value,
            "max_abs_emissions_slope": self.max_abs_emissions_slope,
            "max_abs_cost_slope": self.max_abs_cost_slope,
            "n_samples": self.n_samples,
        }


def certify_monotone_reachability(
    dm: dp.DemandModel,
    model: gm.GridModel,
    n_samples: int = 200,
    q_init: float | None = None,
    equilibrium: eqm.EquilibriumResult | None = None,
) -> ReachabilityCertificate:
    """Check that the reach map is nondecreasing between the start and the limit.

    Two routes, both sampled: the derivative-based margin
    1 + (M/(exp(1)*eps) e'(Q) - C'(Q))/k, and discrete slopes of S itself.
    The certificate holds iff both stay above -1e-9.  The derivative route
    uses the unconstrained revenue form throughout, so the direct S samples
    are the decisive check where the deliverability cap still binds.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    result = equilibrium or eqm.solve_long_run_limit(dm, model)
    lo = model.domain[0] if q_init is None else q_init
    hi = result.capacity_limit
    if hi <= lo:
        return ReachabilityCertificate(
            holds=True,
            min_margin=0.0,
            worst_capacity=lo,
            bound_formula_value=1.0,
            max_abs_emissions_slope=0.0,
            max_abs_cost_slope=0.0,
            n_samples=0,
        )

    qs = np.linspace(lo, hi, n_samples, endpoint=False)
    revenue_scale = dm.market_size / (math.e * dm.sensitivity)
    k = model.invest_cost

    def cost_fn(q: float) -> float:
        return gm.cost_integrated(model, q)

    e_slopes = np.array(
        [gm.numeric_derivative(model.emissions, q, bounds=model.domain).value for q in qs]
    )
    c_slopes = np.array(
        [gm.numeric_derivative(cost_fn, q, bounds=model.domain).value for q in qs]
    )
    margins = 1.0 + (revenue_scale * e_slopes - c_slopes) / k

    reach = np.array([reach_map(dm, model, q) for q in qs])
    discrete = np.diff(reach) / np.diff(qs)

    candidates = np.concatenate([margins, discrete])
    candidate_qs = np.concatenate([qs, qs[:-1]])
    worst = int(np.argmin(candidates))
    min_margin = float(candidates[worst])

    max_e = float(np.max(np.abs(e_slopes)))
    max_c = float(np.max(np.abs(c_slopes)))
    return ReachabilityCertificate(
        holds=min_margin >= -1e-9,
        min_margin=min_margin,
        worst_capacity=float(candidate_qs[worst]),
        bound_formula_value=reachability_lower_bound(
            dm.market_size, dm.sensitivity, k, max_e, max_c
        ),
        max_abs_emissions_slope=max_e,
        max_abs_cost_slope=max_c,
        n_samples=n_samples,
    )


# ---------------------------------------------------------------------------
# Simulation engine
# ---------------------------------------------------------------------------


def build_period_solution(
    dm: dp.DemandModel, model: gm.GridModel, q_state: float, price: float, expansion: float
) -> dp.PeriodSolution:
    """Full per-period telemetry for a (price, expansion) decision at Q."""
    e_q = model.emissions_at(q_state)
    f_q = model.delivered_at(q_state)
    sales = dp.demand(dm, price, e_q)
    rev = price * sales
    cost = gm.cost_integrated(model, q_state)
    tol = dp.EQUILIBRIUM_REL_TOL * max(1.0, abs(rev), abs(cost))
    share = max(0.0, gm.cost_generator(model, q_state) / rev) if rev > 0 else 0.0
    if share >= 1.0:
        raise InfeasibleSharingError(
            f"required share {share:.6f} at Q={q_state} leaves the operator nothing"
        )
    return dp.PeriodSolution(
        price=price,
        expansion=expansion,
        share=share,
        revenue=rev,
        deliverability_binding=sales >= f_q - 1e-9 * max(1.0, f_q),
        financial_binding=abs(cost + model.invest_cost * expansion - rev) <= tol,
        phase=rs.classify_phase(share, expansion, True),
    )


def solve_period(dm: dp.DemandModel, model: gm.GridModel, q_state: float) -> dp.PeriodSolution:
    """Integrated single-period optimum at state Q with full telemetry."""
    expansion, status = dp.optimal_expansion(dm, model, q_state)
    if status is dp.ExpansionStatus.INFEASIBLE:
        raise InfeasiblePeriodError(f"revenue cannot cover cost at Q={q_state}")
    price, _ = dp.optimal_price(dm, model, q_state)
    return build_period_solution(dm, model, q_state, price, expansion)


def _decision_feasible(
    dm: dp.DemandModel,
    model: gm.GridModel,
    q_state: float,
    price: float,
    expansion: float,
    limit: float,
) -> bool:
    if price < 0 or expansion < 0:
        return False
    e_q = model.emissions_at(q_state)
    f_q = model.delivered_at(q_state)
    sales = dp.demand(dm, price, e_q)
    if sales > f_q * (1.0 + 1e-9) + 1e-12:
        return False
    rev = price * sales
    cost = gm.cost_integrated(model, q_state)
    if cost + model.invest_cost * expansion > rev + dp.EQUILIBRIUM_REL_TOL * max(
        1.0, abs(rev), abs(cost)
    ):
        return False
    if expansion > limit - q_state + REACH_TOL * max(1.0, abs(limit)):
        return False
    return True


def myopic_rule(
    dm: dp.DemandModel, model: gm.GridModel, limit: float
) -> Callable[[int, float], tuple[float, float]]:
    """Per-period rule: optimal price, maximal expansion capped at the limit."""

    def decide(t: int, q_state: float) -> tuple[float, float]:
        price, _ = dp.optimal_price(dm, model, q_state)
        expansion = min(max_feasible_expansion(dm, model, q_state), max(0.0, limit - q_state))
        return price, expansion

    return decide


def _at_limit(dm: dp.DemandModel, model: gm.GridModel, q_state: float, limit: float) -> bool:
    # State-based test: both the capacity gap and the revenue/cost gap carry
    # their own tolerance, and near the limit the financial one is the wider.
    if q_state >= limit - REACH_TOL * max(1.0, abs(limit)):
        return True
    return dp.optimal_expansion(dm, model, q_state).status is dp.ExpansionStatus.EQUILIBRIUM


def _simulate(
    dm: dp.DemandModel,
    model: gm.GridModel,
    cfg: SimulationConfig,
    decide: Callable[[int, float], tuple[float, float]],
    limit: float,
) -> Trajectory:
    model._check_domain(cfg.q_init)
    records: list[PeriodRecord] = []
    termination = Termination.HORIZON_END
    q_state = cfg.q_init

    for t in range(cfg.horizon):
        if cfg.stop_at_limit and _at_limit(dm, model, q_state, limit):
            price, _ = dp.optimal_price(dm, model, q_state)
            records.append(
                PeriodRecord(t, q_state, build_period_solution(dm, model, q_state, price, 0.0))
            )
            termination = Termination.REACHED_LIMIT
            break
        try:
            price, expansion = decide(t, q_state)
        except InfeasiblePeriodError:
            termination = Termination.INFEASIBLE
            break
        if not _decision_feasible(dm, model, q_state, price, expansion, limit):
            termination = Termination.INFEASIBLE
            break
        solution = build_period_solution(dm, model, q_state, price, expansion)
        records.append(PeriodRecord(t, q_state, solution))
        q_state = q_state + solution.expansion  # the exact recorded transition

    return Trajectory(
        records=tuple(records),
        termination=termination,
        cumulative_expansion=sum(r.solution.expansion for r in records),
        cumulative_emission_index=sum(
            model.emissions_at(r.capacity) for r in records
        ),
        capacity_limit=limit,
    )


def simulate_myopic(
    dm: dp.DemandModel, model: gm.GridModel, cfg: SimulationConfig
) -> Trajectory:
    """Run the maximal-feasible-expansion policy from the configured state."""
    limit = eqm.solve_long_run_limit(dm, model).capacity_limit
    return _simulate(dm, model, cfg, myopic_rule(dm, model, limit), limit)


def simulate_policy(
    dm: dp.DemandModel,
    model: gm.GridModel,
    cfg: SimulationConfig,
    policy: Callable[[int, float], tuple[float, float]],
) -> Trajectory:
    """Run an arbitrary per-period rule (t, Q_t) -> (price, expansion).

    Every decision is validated against deliverability, the financial
    constraint, and the no-overbuild cap; the first violation truncates the
    trajectory with an infeasible status.
    """
    limit = eqm.solve_long_run_limit(dm, model).capacity_limit
    return _simulate(dm, model, cfg, policy, limit)


# ---------------------------------------------------------------------------
# Serialization: CSV (one row per period) and JSON
# ---------------------------------------------------------------------------


def trajectory_csv_rows(trajectory: Trajectory, model: gm.GridModel) -> list[dict]:
    rows = []
    for r in trajectory.records:
        rows.append(
            {
                "t": r.t,
                "Q": r.capacity,
                "p": r.solution.price,
                "q": r.solution.expansion,
                "gamma": r.solution.share,
                "R": r.solution.revenue,
                "phase": r.solution.phase.value,
                "e": model.emissions_at(r.capacity),
            }
        )
    return rows


def write_trajectory_csv(trajectory: Trajectory, model: gm.GridModel, path) -> None:
    """Fixed column order: t, Q, p, q, gamma, R, phase, e.

    Floats are written with repr so a read back recovers identical values.
    """
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRAJECTORY_CSV_COLUMNS)
        for row in trajectory_csv_rows(trajectory, model):
            writer.writerow(
                [
                    row["t"],
                    repr(row["Q"]),
                    repr(row["p"]),
                    repr(row["q"]),
                    repr(row["gamma"]),
                    repr(row["R"]),
                    row["phase"],
                    repr(row["e"]),
                ]
            )


def read_trajectory_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != TRAJECTORY_CSV_COLUMNS:
            raise ValueError(f"unexpected trajectory CSV header in {path}")
        for raw in reader:
            rows.append(
                {
                    "t": int(raw["t"]),
                    "Q": float(raw["Q"]),
                    "p": float(raw["p"]),
                    "q": float(raw["q"]),
                    "gamma": float(raw["gamma"]),
                    "R": float(raw["R"]),
                    "phase": int(raw["phase"]),
                    "e": float(raw["e"]),
                }
            )
    return rows
