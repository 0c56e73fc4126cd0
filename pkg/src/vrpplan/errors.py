"""Exception types shared across the package."""


class VrpError(Exception):
    """Base class for all package errors."""


class CurveDomainError(VrpError):
    """Evaluation requested outside a curve's or model's declared domain."""


class NetZeroGridError(VrpError):
    """Emissions intensity is zero or negative: program demand is undefined."""


class NoSellableCreditsError(VrpError):
    """Delivered renewable output is zero or negative: nothing to sell."""


class NoRevenueError(VrpError):
    """Maximal program revenue is nonpositive; a revenue share is undefined."""


class InfeasibleSharingError(VrpError):
    """The required generator share would be >= 1, leaving the operator nothing."""


class InfeasiblePeriodError(VrpError):
    """Revenue cannot cover the non-investment cost even with zero expansion."""


class ThresholdUnreachableError(VrpError):
    """Delivered output never reaches the unconstrained-demand level in the domain."""


class InfeasibleAtThresholdError(VrpError):
    """Cost already exceeds maximal revenue where the deliverability cap stops binding."""


class DispatchShortageError(VrpError):
    """Residual load exceeds total thermal capacity in at least one hour."""

    def __init__(self, hour: int, residual_gw: float, fleet_capacity_gw: float):
        self.hour = hour
        self.residual_gw = residual_gw
        self.fleet_capacity_gw = fleet_capacity_gw
        super().__init__(
            f"hour {hour}: residual load {residual_gw:.4f} GW exceeds "
            f"fleet capacity {fleet_capacity_gw:.4f} GW"
        )


class EnumerationConfigError(VrpError):
    """Policy enumeration would exceed the configured cap and no seed was given."""


class ScenarioError(VrpError):
    """A scenario file failed to parse or validate."""
