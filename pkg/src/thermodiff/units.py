"""Physical parameters, unit systems and the derived thermal scales.

Two unit systems are supported.  In ``natural`` units hbar = k_B = 1 and
mass/temperature are dimensionless; in ``si`` units the CODATA 2018 values
below are used unless explicitly overridden.

The four derived scalars are

    dp   = sqrt(k_B T m)              momentum spread (equipartition)
    dx0  = hbar / (2 dp)              minimum-uncertainty position spread
    D    = hbar / (2 m)               classical diffusion constant
    R    = 2 k_B T / hbar             entropy rate in nats per unit time
"""

import math
import numbers
from dataclasses import dataclass
from enum import Enum

from .errors import ConstantsOverrideInNaturalUnits, NonPositiveParameter

# CODATA 2018.  k_B is exact; hbar = h / 2pi with h exact.
CODATA_2018 = {
    "hbar": 1.054571817e-34,  # J s
    "boltzmann": 1.380649e-23,  # J / K
    "electron_mass": 9.1093837015e-31,  # kg
}


class UnitSystem(str, Enum):
    NATURAL = "natural"
    SI = "si"


class Verdict(str, Enum):
    GOOD = "good"
    MARGINAL = "marginal"
    VIOLATES = "violates_assumption_1"


# Fractions of hbar / (2 k_B T) separating the timestep verdicts.
GOOD_RATIO = 0.01
MARGINAL_RATIO = 0.1


def _check_positive(name, value):
    ok = isinstance(value, numbers.Real) and not isinstance(value, bool)
    if not (ok and math.isfinite(value) and value > 0):
        raise NonPositiveParameter(name, value)


@dataclass(frozen=True)
class PhysicalParams:
    unit_system: UnitSystem
    mass: float
    temperature: float
    hbar: float
    boltzmann: float

    def __post_init__(self):
        object.__setattr__(self, "unit_system", UnitSystem(self.unit_system))
        for name in ("mass", "temperature", "hbar", "boltzmann"):
            _check_positive(name, getattr(self, name))
        if self.unit_system is UnitSystem.NATURAL:
            for name in ("hbar", "boltzmann"):
                if getattr(self, name) != 1:
                    raise ConstantsOverrideInNaturalUnits(name)


@dataclass(frozen=True)
class DerivedScales:
    """Thermal scales of a free particle.

    ``temperature`` and ``boltzmann`` are carried along so that the exact
    rate can be re-expressed from first principles downstream.
    """

    dp: float
    dx0: float
    diffusion_const: float
    rate_exact: float
    mass: float
    hbar: float
    temperature: float
    boltzmann: float

    @property
    def velocity_spread(self):
        """dp / m, the rate at which the coherent spread grows."""
        return self.dp / self.mass

    def containment_width(self, t):
        """dx0 + dp t / m, the standard deviation of the full model at time t."""
        return self.dx0 + self.dp * t / self.mass


@dataclass(frozen=True)
class TimestepReport:
    dt: float
    threshold: float
    ratio: float
    verdict: Verdict


def make_params(unit_system, temperature, mass, hbar=None, boltzmann=None):
    """Build validated :class:`PhysicalParams`.

    ``hbar`` and ``boltzmann`` may only be given in SI mode; they default to
    the CODATA 2018 values there.
    """
    unit_system = UnitSystem(unit_system)
    if unit_system is UnitSystem.NATURAL:
        if hbar is not None:
            raise ConstantsOverrideInNaturalUnits("hbar")
        if boltzmann is not None:
            raise ConstantsOverrideInNaturalUnits("boltzmann")
        hbar = boltzmann = 1.0
    else:
        hbar = CODATA_2018["hbar"] if hbar is None else hbar
        boltzmann = CODATA_2018["boltzmann"] if boltzmann is None else boltzmann
    return PhysicalParams(unit_system, mass, temperature, hbar, boltzmann)


def derive_scales(params):
    kt = params.boltzmann * params.temperature
    dp = math.sqrt(kt * params.mass)
    return DerivedScales(
        dp=dp,
        dx0=params.hbar / (2.0 * dp),
        diffusion_const=params.hbar / (2.0 * params.mass),
        rate_exact=2.0 * kt / params.hbar,
        mass=params.mass,
        hbar=params.hbar,
        temperature=params.temperature,
        boltzmann=params.boltzmann,
    )


def validate_timestep(params, dt):
    """Compare ``dt`` with the thermal time hbar / (2 k_B T).

    The verdict is advisory only; nothing in the library refuses a coarse
    timestep.
    """
    _check_positive("dt", dt)
    threshold = params.hbar / (2.0 * params.boltzmann * params.temperature)
    ratio = dt / threshold
    if ratio <= GOOD_RATIO:
        verdict = Verdict.GOOD
    elif ratio <= MARGINAL_RATIO:
        verdict = Verdict.MARGINAL
    else:
        verdict = Verdict.VIOLATES
    return TimestepReport(dt=dt, threshold=threshold, ratio=ratio, verdict=verdict)
