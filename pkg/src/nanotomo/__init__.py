"""Open two-level dynamics, Ramsey interferometry and Wigner tomography of a nanotube flexural mode."""

from .bath import DissipationRates, OhmicBath, dissipation_rates
from .bloch import BlochVector, DriveParams, SimOptions, TLSDensity, integrate_bloch, rabi_population_analytic
from .device import DeviceGeometry, derive, device_table
from .errors import ConfigError, DomainError, IntegrationError, InvariantError

__version__ = "0.1.0"

__all__ = [
    "BlochVector",
    "ConfigError",
    "DeviceGeometry",
    "DissipationRates",
    "DomainError",
    "DriveParams",
    "IntegrationError",
    "InvariantError",
    "OhmicBath",
    "SimOptions",
    "TLSDensity",
    "derive",
    "device_table",
    "dissipation_rates",
    "integrate_bloch",
    "rabi_population_analytic",
]
