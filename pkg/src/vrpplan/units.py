"""Capacity-based vs energy-based price conversion.

One GW of capacity-equivalent running at capacity factor cf delivers
8760 * cf MWh over a year, so a capacity price in M$/GW-yr divides by
8.76 * cf to become an energy price in $/MWh.
"""

CAPACITY_ENERGY_FACTOR = 8.76  # (M$/GW-yr) / ($/MWh) at cf = 1


def _check_cf(wind_cf: float) -> None:
    if not 0.0 < wind_cf <= 1.0:
        raise ValueError("wind_cf must lie in (0, 1]")


def convert_price_units(price_capacity: float, wind_cf: float) -> float:
    """M$/GW-yr -> $/MWh at the given capacity factor."""
    _check_cf(wind_cf)
    return price_capacity / (CAPACITY_ENERGY_FACTOR * wind_cf)


def invert_price_units(price_energy: float, wind_cf: float) -> float:
    """$/MWh -> M$/GW-yr at the given capacity factor."""
    _check_cf(wind_cf)
    return price_energy * CAPACITY_ENERGY_FACTOR * wind_cf
