"""Program demand, revenue, and the two-regime closed-form optimal price.

Demand for the renewable premium is exponential in the effective abatement
price p/e(Q): D = M * exp(-eps * p / e(Q)).  The sensitivity eps is treated as
unit-bearing (it absorbs the $/ton conversion), so any consistent price and
intensity units work as long as the scenario declares them consistently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import grid_model as gm
from .errors import NetZeroGridError, NoSellableCreditsError

EQUILIBRIUM_REL_TOL = 1e-8  # |R* - C| below this (times max(1,|C|)) is "no expansion left"
ZERO_TOL = 1e-9
COARSE_BRACKETS = 256  # multi-start brackets for the generic revenue maximizer
KKT_CERTIFICATION_TOL = 1e-6


class DemandKind(str, Enum):
    EXPONENTIAL = "exponential"
    GENERIC = "generic"


@dataclass(frozen=True)
class DemandModel:
    """Voluntary-program demand.

    ``market_size`` is the demand at zero premium (GW); ``sensitivity`` is the
    exponential decay rate in the effective price.  A ``generic`` model instead
    carries an arbitrary revenue curve p -> R(p) with a declared feasible price
    interval, used through :func:`maximize_revenue_generic`.
    """

    market_size: float
    sensitivity: float
    kind: DemandKind = DemandKind.EXPONENTIAL
    generic_revenue: Callable[[float], float] | None = None
    price_interval: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DemandKind(self.kind))
        if self.market_size <= 0:
            raise ValueError("market_size must be positive")
        if self.sensitivity <= 0:
            raise ValueError("sensitivity must be positive")
        if self.kind is DemandKind.GENERIC and self.generic_revenue is None:
            raise ValueError("generic demand model needs a generic_revenue callable")

    def to_dict(self) -> dict:
        if self.kind is not DemandKind.EXPONENTIAL:
            raise ValueError("only exponential demand models serialize to JSON")
        return {"market_size": self.market_size, "sensitivity": self.sensitivity}

    @classmethod
    def from_dict(cls, doc: dict) -> "DemandModel":
        return cls(market_size=float(doc["market_size"]), sensitivity=float(doc["sensitivity"]))


class Phase(Enum):
    """Transition regime of a period: see :func:`vrpplan.revenue_sharing.classify_phase`."""

    SPONTANEOUS = 1  # gamma = 0, q > 0: all revenue funds expansion
    SUPPORTED = 2  # gamma > 0, q > 0: generators need a revenue share
    EQUILIBRIUM = 3  # q = 0: the long-run capacity limit
    INFEASIBLE = 0


class ExpansionStatus(Enum):
    EXPANDING = "expanding"
    EQUILIBRIUM = "equilibrium"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class PeriodSolution:
    """Optimal decisions and diagnostics for a single period at state Q."""

    price: float  # M$/GW-yr
    expansion: float  # GW
    share: float  # fraction of revenue transferred to generators
    revenue: float  # M$/yr at the recorded price
    deliverability_binding: bool
    financial_binding: bool
    phase: Phase

    def __post_init__(self):
        if self.phase is Phase.INFEASIBLE:
            return
        if self.price < 0 or self.expansion < 0:
            raise ValueError("price and expansion must be nonnegative")
        if not 0.0 <= self.share < 1.0:
            raise ValueError("share must lie in [0, 1)")
        if self.phase is Phase.EQUILIBRIUM and self.expansion > ZERO_TOL:
            raise ValueError("an equilibrium period cannot expand")

    @classmethod
    def infeasible(cls) -> "PeriodSolution":
        nan = float("nan")
        return cls(nan, nan, nan, nan, False, False, Phase.INFEASIBLE)

    def to_dict(self) -> dict:
        return {
            "price": self.price,
            "expansion": self.expansion,
            "share": self.share,
            "revenue": self.revenue,
            "deliverability_binding": self.deliverability_binding,
            "financial_binding": self.financial_binding,
            "phase": self.phase.value,
        }


def demand(dm: DemandModel, price: float, e_q: float) -> float:
    """Program demand (GW) at premium ``price`` and grid intensity ``e_q``."""
    if price < 0:
        raise ValueError("price must be nonnegative")
    if e_q <= 0:
        raise NetZeroGridError("demand is undefined on a net-zero grid (e <= 0)")
    return dm.market_size * math.exp(-dm.sensitivity * price / e_q)


def revenue(dm: DemandModel, price: float, e_q: float) -> float:
    """Per-period program revenue price * D(price/e), M$/yr.

    Unimodal in price with its unique peak at price = e_q / sensitivity.
    """
    return price * demand(dm, price, e_q)


def unconstrained_peak_revenue(dm: DemandModel, e_q: float) -> float:
    """Maximal revenue when the deliverability cap is slack.

    At the unconstrained optimum the premium is e/eps and demand sits at
    M*exp(-1), so revenue collapses to e_q * M / (exp(1) * eps).
    """
    if e_q <= 0:
        raise NetZeroGridError("peak revenue undefined on a net-zero grid")
    return e_q * dm.market_size / (math.e * dm.sensitivity)


class PriceSolution(NamedTuple):
    price: float
    deliverability_binding: bool


def optimal_price(dm: DemandModel, model: gm.GridModel, q: float) -> PriceSolution:
    """Revenue-maximizing premium subject to sales <= delivered output.

    Two regimes: when unconstrained peak demand M/e fits under f(Q) the price
    is e(Q)/eps; otherwise the deliverability cap binds and the price rises to
    e(Q)/eps * ln(M/f(Q)).  The branches agree where M/e = f(Q).
    """
    if dm.kind is not DemandKind.EXPONENTIAL:
        raise ValueError("closed-form pricing applies to exponential demand only")
    e_q = model.emissions_at(q)
    f_q = model.delivered_at(q)
    if e_q <= 0:
        raise NetZeroGridError(f"e(Q)={e_q} at Q={q}: no emissions left to differentiate")
    if f_q <= 0:
        raise NoSellableCreditsError(f"f(Q)={f_q} at Q={q}: no credits to sell")
    peak_sales = dm.market_size * math.exp(-1.0)
    base = e_q / dm.sensitivity
    if peak_sales <= f_q:
        return PriceSolution(base, False)
    return PriceSolution(base * math.log(dm.market_size / f_q), True)


class ExpansionSolution(NamedTuple):
    expansion: float
    status: ExpansionStatus


def optimal_expansion(dm: DemandModel, model: gm.GridModel, q: float) -> ExpansionSolution:
    """Expansion implied by the binding financial constraint, (R* - C)/k.

    Clamped at zero.  Status distinguishes an expanding period, the long-run
    equilibrium (R* = C within tolerance), and an infeasible period where
    revenue cannot cover cost even without any expansion.
    """
    price, _ = optimal_price(dm, model, q)
    rev = revenue(dm, price, model.emissions_at(q))
    cost = gm.cost_integrated(model, q)
    tol = EQUILIBRIUM_REL_TOL * max(1.0, abs(cost))
    if rev < cost - tol:
        return ExpansionSolution(0.0, ExpansionStatus.INFEASIBLE)
    if abs(rev - cost) <= tol:
        return ExpansionSolution(0.0, ExpansionStatus.EQUILIBRIUM)
    return ExpansionSolution((rev - cost) / model.invest_cost, ExpansionStatus.EXPANDING)


# ---------------------------------------------------------------------------
# Generic revenue maximization (continuity + vanishing tail only)
# ---------------------------------------------------------------------------


def golden_section_max(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float | None = None,
    max_iter: int = 200,
) -> float:
    """Argmax of a unimodal function on [lo, hi] by golden-section search."""
    if hi < lo:
        raise ValueError("need lo <= hi")
    if tol is None:
        tol = 1e-10 * max(1.0, hi - lo)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
    return 0.5 * (a + b)


def _finite_upper_bound(fn: Callable[[float], float], lo: float) -> float:
    # Vanishing-revenue assumption: walk out geometrically until the curve is
    # negligible relative to the best value seen.
    span = max(1.0, abs(lo))
    best = abs(fn(lo))
    hi = lo
    quiet = 0
    for j in range(64):
        hi = lo + span * (2.0**j)
        val = abs(fn(hi))
        best = max(best, val)
        quiet = quiet + 1 if val <= 1e-12 * (best + 1e-300) else 0
        if quiet >= 3:
            break
    return hi


def maximize_revenue_generic(
    dm: DemandModel,
    feasible_prices: tuple[float, float] | Sequence[tuple[float, float]] | None = None,
) -> tuple[float, float]:
    """Global revenue maximizer for a generic revenue curve.

    Coarse scan over 256 brackets per feasible interval, golden-section
    refinement of every local-max bracket, ties broken toward the smallest
    price.  Only continuity and a vanishing tail are assumed, so the scan
    resolution bounds the accuracy for badly multimodal curves.
    """
    if dm.kind is not DemandKind.GENERIC or dm.generic_revenue is None:
        raise ValueError("maximize_revenue_generic needs a generic demand model")
    fn = dm.generic_revenue
    if feasible_prices is None:
        feasible_prices = dm.price_interval
    if feasible_prices is None:
        raise ValueError("no feasible price set declared")
    if isinstance(feasible_prices, tuple) and len(feasible_prices) == 2 and not isinstance(
        feasible_prices[0], tuple
    ):
        intervals = [feasible_prices]
    else:
        intervals = list(feasible_prices)
    if not intervals:
        raise ValueError("feasible price set is empty")

    candidates: list[tuple[float, float]] = []
    for lo, hi in intervals:
        if hi < lo:
            raise ValueError(f"invalid price interval ({lo}, {hi})")
        if math.isinf(hi):
            hi = _finite_upper_bound(fn, lo)
        if hi == lo:
            candidates.append((lo, fn(lo)))
            continue
        xs = np.linspace(lo, hi, COARSE_BRACKETS + 1)
        vals = np.array([fn(x) for x in xs])
        for i in range(len(xs)):
            left = vals[i - 1] if i > 0 else -math.inf
            right = vals[i + 1] if i < len(xs) - 1 else -math.inf
            if vals[i] >= left and vals[i] >= right:
                a = xs[max(i - 1, 0)]
                b = xs[min(i + 1, len(xs) - 1)]
                x = golden_section_max(fn, a, b)
                candidates.append((x, fn(x)))
        candidates.append((lo, vals[0]))
        candidates.append((hi, vals[-1]))

    best_val = max(v for _, v in candidates)
    tie_tol = 1e-12 * max(1.0, abs(best_val))
    best_p = min(p for p, v in candidates if v >= best_val - tie_tol)
    return best_p, fn(best_p)


# ---------------------------------------------------------------------------
# KKT residuals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KktResiduals:
    """Reconstructed multipliers and residuals of the first-order system.

    Multipliers follow the constraint order: deliverability cap, financial
    (operator budget under sharing), generator budget, q >= 0, p >= 0, and the
    two bounds on the share.  ``comp_slackness`` lists multiplier*slack in the
    same order.  ``max_abs_residual`` also folds in dual-feasibility (negative
    multiplier) and primal-feasibility violations; at or below 1e-6 it
    certifies the solution.
    """

    mult_deliverability: float
    mult_financial: float
    mult_generator_budget: float
    mult_expansion_nonneg: float
    mult_price_nonneg: float
    mult_share_lower: float
    mult_share_upper: float
    stationarity_price: float
    stationarity_expansion: float
    stationarity_share: float
    comp_slackness: tuple[float, ...]
    max_abs_residual: float

    @property
    def certified(self) -> bool:
        return self.max_abs_residual <= KKT_CERTIFICATION_TOL

    def to_dict(self) -> dict:
        return {
            "multipliers": {
                "deliverability": self.mult_deliverability,
                "financial": self.mult_financial,
                "generator_budget": self.mult_generator_budget,
                "expansion_nonneg": self.mult_expansion_nonneg,
                "price_nonneg": self.mult_price_nonneg,
                "share_lower": self.mult_share_lower,
                "share_upper": self.mult_share_upper,
            },
            "stationarity_price": self.stationarity_price,
            "stationarity_expansion": self.stationarity_expansion,
            "stationarity_share": self.stationarity_share,
            "comp_slackness": list(self.comp_slackness),
            "max_abs_residual": self.max_abs_residual,
            "certified": self.certified,
        }


def _kkt_lstsq(rows: list[list[float]], rhs: list[float]) -> np.ndarray:
    from scipy.optimize import nnls

    a = np.asarray(rows, dtype=float)
    b = np.asarray(rhs, dtype=float)
    x, _ = nnls(a, b)
    return x


def kkt_residuals(
    dm: DemandModel,
    model: gm.GridModel,
    q: float,
    solution: PeriodSolution,
    problem: str = "integrated",
) -> KktResiduals:
    """Check a period solution against the stationarity/slackness system.

    When the solution expands (q* > 0) the multipliers have a closed
    reconstruction: the financial multiplier is 1/k, the sign multipliers
    vanish, and the deliverability multiplier is (p - e/eps)/k when that cap
    binds (zero otherwise).  Under revenue sharing with an interior share the
    generator-budget multiplier equals the financial one.  Without expansion
    the multipliers are recovered in a nonnegative least-squares sense.
    """
    if problem not in ("integrated", "revenue-sharing"):
        raise ValueError("problem must be 'integrated' or 'revenue-sharing'")
    sharing = problem == "revenue-sharing"

    e_q = model.emissions_at(q)
    f_q = model.delivered_at(q)
    k = model.invest_cost
    p = solution.price
    x = solution.expansion
    gamma = solution.share if sharing else 0.0

    d = demand(dm, p, e_q)
    rev = p * d
    rev_p = d * (1.0 - dm.sensitivity * p / e_q)
    d_p_coeff = (dm.sensitivity / e_q) * d  # -d(D)/dp

    c_s = model.cost_system.cost(q)
    c_gen = gm.cost_generator(model, q)
    c_total = c_s + c_gen

    slack_deliver = d - f_q
    if sharing:
        slack_financial = (c_s + k * x) - (1.0 - gamma) * rev
        slack_generator = c_gen - gamma * rev
    else:
        slack_financial = (c_total + k * x) - rev
        slack_generator = 0.0

    if x > ZERO_TOL:
        mu = 1.0 / k
        nu = 0.0
        eta = 0.0
        lam = (p - e_q / dm.sensitivity) / k if solution.deliverability_binding else 0.0
        if sharing:
            if gamma > ZERO_TOL:
                theta, alpha, beta = mu, 0.0, 0.0
            else:
                theta, beta = 0.0, 0.0
                alpha = (mu - theta) * rev
        else:
            theta = alpha = beta = 0.0
    else:
        if sharing:
            rows = [
                [0.0, -k, 0.0, 1.0, 0.0, 0.0, 0.0],
                [d_p_coeff, (1.0 - gamma) * rev_p, gamma * rev_p, 0.0, 1.0, 0.0, 0.0],
                [0.0, -rev, rev, 0.0, 0.0, 1.0, -1.0],
                [slack_deliver, 0, 0, 0, 0, 0, 0],
                [0, slack_financial, 0, 0, 0, 0, 0],
                [0, 0, slack_generator, 0, 0, 0, 0],
                [0, 0, 0, -x, 0, 0, 0],
                [0, 0, 0, 0, -p, 0, 0],
                [0, 0, 0, 0, 0, -gamma, 0],
                [0, 0, 0, 0, 0, 0, gamma - 1.0],
            ]
            rhs = [-1.0] + [0.0] * 9
            lam, mu, theta, nu, eta, alpha, beta = _kkt_lstsq(rows, rhs)
        else:
            rows = [
                [0.0, -k, 1.0, 0.0],
                [d_p_coeff, rev_p, 0.0, 1.0],
                [slack_deliver, 0, 0, 0],
                [0, slack_financial, 0, 0],
                [0, 0, -x, 0],
                [0, 0, 0, -p],
            ]
            rhs = [-1.0] + [0.0] * 5
            lam, mu, nu, eta = _kkt_lstsq(rows, rhs)
            theta = alpha = beta = 0.0

    stat_q = 1.0 - mu * k + nu
    if sharing:
        stat_p = lam * d_p_coeff + (mu * (1.0 - gamma) + theta * gamma) * rev_p + eta
        stat_g = -mu * rev + theta * rev + alpha - beta
    else:
        stat_p = lam * d_p_coeff + mu * rev_p + eta
        stat_g = 0.0

    comp = (
        lam * slack_deliver,
        mu * slack_financial,
        theta * slack_generator,
        nu * x,
        eta * p,
        alpha * gamma,
        beta * (gamma - 1.0),
    )
    primal = (
        max(0.0, slack_deliver),
        max(0.0, slack_financial),
        max(0.0, slack_generator),
        max(0.0, -x),
        max(0.0, -p),
        max(0.0, -gamma),
        max(0.0, gamma - 1.0),
    )
    dual = tuple(max(0.0, -m) for m in (lam, mu, theta, nu, eta, alpha, beta))
    residuals = (abs(stat_p), abs(stat_q), abs(stat_g)) + tuple(abs(c) for c in comp)
    max_abs = max(residuals + primal + dual)

    return KktResiduals(
        mult_deliverability=lam,
        mult_financial=mu,
        mult_generator_budget=theta,
        mult_expansion_nonneg=nu,
        mult_price_nonneg=eta,
        mult_share_lower=alpha,
        mult_share_upper=beta,
        stationarity_price=stat_p,
        stationarity_expansion=stat_q,
        stationarity_share=stat_g,
        comp_slackness=comp,
        max_abs_residual=max_abs,
    )
