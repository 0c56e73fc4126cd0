"""Grid primitives: emissions intensity, delivered output, energy value, costs.

Canonical units throughout the package:

* capacity          GW
* money             M$ (million dollars), rates are per year
* emissions         ton-CO2/MWh
* delivered output  GW capacity-equivalent (delivered MWh / (8760 * cf * 1000))
* energy value      M$/GW-yr captured by renewables when producing

A :class:`GridModel` is an immutable value object; every evaluation helper is
a pure function, so models can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import CurveDomainError

MONOTONE_TOL = 1e-9
DELIVERED_ORIGIN_TOL = 1e-6  # |f(0)| tolerance, GW
DERIVATIVE_STEP_FRACTION = 1e-4  # default h = fraction * domain width


class CurveKind(str, Enum):
    POLYNOMIAL = "parametric-polynomial"
    EXPONENTIAL_DECAY = "parametric-exponential-decay"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class GridCurve:
    """One grid property as an evaluable curve.

    ``parametric-polynomial`` curves are zero-intercept: coefficient ``i``
    multiplies ``Q**(i+1)``, so ``(21, 5)`` means ``21*Q + 5*Q**2``.  This is
    the natural shape for delivered-output and cost-like curves, which vanish
    at Q=0; curves with an offset (emissions, energy value) should use
    ``parametric-exponential-decay`` -- coefficients ``(amplitude, rate)`` for
    ``amplitude * exp(-rate * Q)`` -- or a table.

    Tabulated curves are evaluated by monotone piecewise-linear interpolation:
    exact at the knots and monotone between them whenever the knot values are.
    """

    kind: CurveKind
    coefficients: tuple[float, ...] = ()
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", CurveKind(self.kind))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind is CurveKind.TABULATED:
            if self.table is None or len(self.table) < 2:
                raise ValueError("tabulated curve needs at least 2 points")
            table = tuple((float(q), float(v)) for q, v in self.table)
            qs = [q for q, _ in table]
            if any(b <= a for a, b in zip(qs, qs[1:])):
                raise ValueError("tabulated curve Q values must be strictly increasing")
            object.__setattr__(self, "table", table)
        else:
            if self.table is not None:
                raise ValueError("parametric curves must not carry a table")
            if self.kind is CurveKind.EXPONENTIAL_DECAY and len(self.coefficients) != 2:
                raise ValueError("exponential-decay curve takes (amplitude, rate)")
            if self.kind is CurveKind.POLYNOMIAL and not self.coefficients:
                raise ValueError("polynomial curve needs at least one coefficient")

    @cached_property
    def _knots(self) -> tuple[np.ndarray, np.ndarray]:
        qs, vs = zip(*self.table)
        return np.asarray(qs, dtype=float), np.asarray(vs, dtype=float)

    @property
    def domain(self) -> tuple[float, float]:
        """Declared evaluation domain; parametric curves are unbounded."""
        if self.kind is CurveKind.TABULATED:
            return self.table[0][0], self.table[-1][0]
        return -math.inf, math.inf

    def __call__(self, q: float) -> float:
        return eval_curve(self, q)

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind.value}
        if self.kind is CurveKind.TABULATED:
            doc["table"] = [[q, v] for q, v in self.table]
        else:
            doc["coefficients"] = list(self.coefficients)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "GridCurve":
        kind = CurveKind(doc["kind"])
        if kind is CurveKind.TABULATED:
            return cls(kind=kind, table=tuple((q, v) for q, v in doc["table"]))
        return cls(kind=kind, coefficients=tuple(doc["coefficients"]))


def eval_curve(curve: GridCurve, q: float) -> float:
    """Evaluate a curve at capacity ``q`` (GW)."""
    if curve.kind is CurveKind.TABULATED:
        qs, vs = curve._knots
        if q < qs[0] or q > qs[-1]:
            raise CurveDomainError(
                f"Q={q} outside tabulated domain [{qs[0]}, {qs[-1]}]"
            )
        return float(np.interp(q, qs, vs))
    if curve.kind is CurveKind.EXPONENTIAL_DECAY:
        amplitude, rate = curve.coefficients
        return amplitude * math.exp(-rate * q)
    # zero-intercept polynomial: coefficients from the linear term upward
    acc = 0.0
    for c in reversed(curve.coefficients):
        acc = (acc + c) * q
    return acc


@dataclass(frozen=True)
class CostSpec:
    """Quadratic per-period cost, cost(Q) = alpha*Q + beta*Q**2 in M$/yr."""

    alpha: float  # M$/GW-yr
    beta: float  # M$/GW^2-yr

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("cost coefficients must be nonnegative")

    def cost(self, q: float) -> float:
        return self.alpha * q + self.beta * q * q

    def slope(self, q: float) -> float:
        return self.alpha + 2.0 * self.beta * q

    def __call__(self, q: float) -> float:
        return self.cost(q)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, doc: dict) -> "CostSpec":
        return cls(alpha=float(doc["alpha"]), beta=float(doc["beta"]))


@dataclass(frozen=True)
class GridModel:
    """All grid primitives needed to price and expand a renewable program.

    Fields
    ------
    emissions      e(Q), grid-average intensity, ton-CO2/MWh
    delivered      f(Q), usable renewable output, GW capacity-equivalent
    energy_value   pi(Q), wholesale value captured by renewables, M$/GW-yr
    cost_renewable C_R, renewable operating cost
    cost_system    C_S, system/integration cost borne by the operator
    invest_cost    k, unit investment cost of new capacity, M$/GW
    domain         (Q_min, Q_max) over which every curve is evaluable, GW
    """

    emissions: GridCurve
    delivered: GridCurve
    energy_value: GridCurve
    cost_renewable: CostSpec
    cost_system: CostSpec
    invest_cost: float
    domain: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.domain
        object.__setattr__(self, "domain", (float(lo), float(hi)))
        if not lo < hi:
            raise ValueError("domain must satisfy Q_min < Q_max")
        if self.invest_cost <= 0:
            raise ValueError("invest_cost must be positive")
        for name in ("emissions", "delivered", "energy_value"):
            curve: GridCurve = getattr(self, name)
            clo, chi = curve.domain
            if clo > lo or chi < hi:
                raise ValueError(f"{name} curve does not cover the model domain")

    def _check_domain(self, q: float) -> None:
        lo, hi = self.domain
        if q < lo or q > hi:
            raise CurveDomainError(f"Q={q} outside model domain [{lo}, {hi}]")

    def emissions_at(self, q: float) -> float:
        self._check_domain(q)
        return eval_curve(self.emissions, q)

    def delivered_at(self, q: float) -> float:
        self._check_domain(q)
        return eval_curve(self.delivered, q)

    def energy_value_at(self, q: float) -> float:
        self._check_domain(q)
        return eval_curve(self.energy_value, q)

    def with_invest_cost(self, invest_cost: float) -> "GridModel":
        return replace(self, invest_cost=invest_cost)

    def to_dict(self) -> dict:
        return {
            "emissions": self.emissions.to_dict(),
            "delivered": self.delivered.to_dict(),
            "energy_value": self.energy_value.to_dict(),
            "cost_renewable": self.cost_renewable.to_dict(),
            "cost_system": self.cost_system.to_dict(),
            "invest_cost": self.invest_cost,
            "domain": list(self.domain),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GridModel":
        return cls(
            emissions=GridCurve.from_dict(doc["emissions"]),
            delivered=GridCurve.from_dict(doc["delivered"]),
            energy_value=GridCurve.from_dict(doc["energy_value"]),
            cost_renewable=CostSpec.from_dict(doc["cost_renewable"]),
            cost_system=CostSpec.from_dict(doc["cost_system"]),
            invest_cost=float(doc["invest_cost"]),
            domain=(float(doc["domain"][0]), float(doc["domain"][1])),
        )


def cost_integrated(model: GridModel, q: float) -> float:
    """Non-investment cost C(Q) = C_S(Q) + C_R(Q) - f(Q)*pi(Q), M$/yr.

    May be negative when the generators' wholesale surplus exceeds system
    cost, which is the normal state at low penetration.
    """
    model._check_domain(q)
    return (
        model.cost_system.cost(q)
        + model.cost_renewable.cost(q)
        - eval_curve(model.delivered, q) * eval_curve(model.energy_value, q)
    )


def cost_operator(model: GridModel, q: float, expansion: float) -> float:
    """Operator-side aggregate C_S(Q) + k*q for expansion q >= 0."""
    if expansion < 0:
        raise ValueError("expansion must be nonnegative")
    model._check_domain(q)
    return model.cost_system.cost(q) + model.invest_cost * expansion


def cost_generator(model: GridModel, q: float) -> float:
    """Generator-side net cost C_R(Q) - f(Q)*pi(Q).

    Negative values mean wholesale revenue alone keeps generators viable;
    the sign decides whether any program revenue must be shared with them.
    """
    model._check_domain(q)
    return model.cost_renewable.cost(q) - eval_curve(model.delivered, q) * eval_curve(
        model.energy_value, q
    )


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    one_sided: bool = False

    def __float__(self) -> float:
        return self.value


def numeric_derivative(
    target: GridCurve | CostSpec | Callable[[float], float],
    q: float,
    h: float | None = None,
    bounds: tuple[float, float] | None = None,
) -> DerivativeEstimate:
    """Finite-difference slope of a curve, cost spec, or plain callable.

    Central difference (v(Q+h) - v(Q-h)) / (2h) when both sides fit inside
    ``bounds``; falls back to a one-sided difference near a boundary and flags
    it.  ``h`` defaults to 1e-4 of the bounds width.
    """
    if isinstance(target, GridCurve):
        fn = target.__call__
        if bounds is None and target.kind is CurveKind.TABULATED:
            bounds = target.domain
    elif isinstance(target, CostSpec):
        fn = target.cost
    else:
        fn = target

    lo, hi = bounds if bounds is not None else (-math.inf, math.inf)
    if not lo <= q <= hi:
        raise CurveDomainError(f"Q={q} outside bounds [{lo}, {hi}]")
    if h is None:
        width = hi - lo
        h = DERIVATIVE_STEP_FRACTION * (width if math.isfinite(width) else max(1.0, abs(q)))
    if h <= 0:
        raise ValueError("step h must be positive")

    left_ok = q - h >= lo
    right_ok = q + h <= hi
    if left_ok and right_ok:
        return DerivativeEstimate((fn(q + h) - fn(q - h)) / (2.0 * h))
    if right_ok:
        return DerivativeEstimate((fn(q + h) - fn(q)) / h, one_sided=True)
    if left_ok:
        return DerivativeEstimate((fn(q) - fn(q - h)) / h, one_sided=True)
    raise CurveDomainError("step h exceeds the available bounds on both sides")


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    first_violation_q: float | None = None


@dataclass(frozen=True)
class ConditionReport:
    """Pass/fail record of the structural conditions the theory needs."""

    checks: tuple[ConditionCheck, ...]
    n_samples: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_samples": self.n_samples,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "first_violation_q": c.first_violation_q,
                }
                for c in self.checks
            ],
        }


def _first_violation(
    qs: np.ndarray, bad: np.ndarray
) -> tuple[bool, float | None]:
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return True, None
    return False, float(qs[idx[0]])


def validate_grid_conditions(model: GridModel, n_samples: int = 200) -> ConditionReport:
    """Sample every curve and report the structural-condition checks.

    Checked on a uniform grid over the model domain, all with tolerance
    1e-9 (monotonicity non-strict, since tabulated empirical curves are only
    weakly monotone): e > 0 and nonincreasing; f(0) ~ 0, f nondecreasing and
    discretely concave; pi nonincreasing.
    """
    if n_samples < 3:
        raise ValueError("n_samples must be at least 3")
    lo, hi = model.domain
    qs = np.linspace(lo, hi, n_samples)
    e = np.array([eval_curve(model.emissions, q) for q in qs])
    f = np.array([eval_curve(model.delivered, q) for q in qs])
    pi = np.array([eval_curve(model.energy_value, q) for q in qs])

    checks = []
    # e(Q) > 0 on the interior of the sampled grid
    ok, at = _first_violation(qs[1:-1], e[1:-1] <= 0.0)
    checks.append(ConditionCheck("emissions_positive", ok, at))
    ok, at = _first_violation(qs[1:], np.diff(e) > MONOTONE_TOL)
    checks.append(ConditionCheck("emissions_nonincreasing", ok, at))

    if lo <= 0.0 <= hi:
        f0 = eval_curve(model.delivered, 0.0)
        checks.append(
            ConditionCheck(
                "delivered_zero_at_origin",
                abs(f0) <= DELIVERED_ORIGIN_TOL,
                None if abs(f0) <= DELIVERED_ORIGIN_TOL else 0.0,
            )
        )
    else:
        # 0 not in the declared domain: nothing to check
        checks.append(ConditionCheck("delivered_zero_at_origin", True, None))
    ok, at = _first_violation(qs[1:], np.diff(f) < -MONOTONE_TOL)
    checks.append(ConditionCheck("delivered_nondecreasing", ok, at))
    concavity_tol = MONOTONE_TOL * max(1.0, float(np.max(np.abs(f))))
    ok, at = _first_violation(qs[1:-1], np.diff(f, 2) > concavity_tol)
    checks.append(ConditionCheck("delivered_concave", ok, at))

    ok, at = _first_violation(qs[1:], np.diff(pi) > MONOTONE_TOL)
    checks.append(ConditionCheck("energy_value_nonincreasing", ok, at))

    return ConditionReport(checks=tuple(checks), n_samples=n_samples)
