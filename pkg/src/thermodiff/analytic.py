"""Closed-form variances, Gaussian entropies and entropy-rate curves.

The particle position at time t is modelled as a centred Gaussian whose
variance has three pieces::

    dx0**2              static minimum-uncertainty spread
    (dp t / m)**2       coherent drift of the packet centre
    hbar t / m          classical diffusion, 2 D t

and, because 2 dx0 dp = hbar, the total factors as (dx0 + dp t / m)**2.

Sampling that process at t_n = n dt gives a Gaussian chain X_0, X_1, ...
with entropies h(X_n) = log(dx0 + n dt dp / m) + const.  Two finite-sample
rate constructions follow:

* conditional increment, [h(X_{n+1}) - h(X_n)] / dt
* block average,         [h(X_n) - h(X_0)] / (n dt)

Both are bounded above by dp / (m dx0) = 2 k_B T / hbar (because
log(1 + x) <= x) and approach it as the elapsed time goes to zero.  Neither
construction approaches it from above, so the exact rate is their supremum
over (n, dt), not a two-sided squeeze.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    GridPointError,
    IndexBelowOne,
    NegativeIndex,
    NegativeTime,
    NonPositiveDt,
    NonPositiveVariance,
)

_LOG_2PIE = math.log(2.0 * math.pi * math.e)


class RateMethod(str, Enum):
    CONDITIONAL = "conditional_increment"
    BLOCK = "block_average"
    EXACT = "exact"


@dataclass(frozen=True)
class VarianceBreakdown:
    quantum_static: float
    quantum_drift: float
    classical: float
    total: float

    @property
    def quantum(self):
        return self.quantum_static + self.quantum_drift


@dataclass(frozen=True)
class RateCurvePoint:
    """One point on an entropy-rate curve.

    ``se`` is a standard error and is only populated for rates estimated
    from samples.
    """

    n: int
    dt: float
    rate: float
    method: RateMethod
    se: float | None = None


@dataclass(frozen=True)
class BoundRow:
    n: int
    dt: float
    rate_conditional: float
    rate_block: float | None
    rate_exact: float
    gap_conditional: float
    gap_block: float | None


def _check_time(t):
    if not t >= 0:
        raise NegativeTime(t)


def _check_dt(dt):
    if not (dt > 0 and math.isfinite(dt)):
        raise NonPositiveDt(dt)


def variance_quantum(scales, t):
    """Variance of |psi(x, t)|**2 for the free minimum-uncertainty packet."""
    _check_time(t)
    return scales.dx0**2 + (scales.dp * t / scales.mass) ** 2


def variance_classical(scales, t):
    """Variance 2 D t of the classical diffusion kernel."""
    _check_time(t)
    return 2.0 * scales.diffusion_const * t


def variance_total(scales, t):
    _check_time(t)
    static = scales.dx0**2
    drift = (scales.dp * t / scales.mass) ** 2
    classical = variance_classical(scales, t)
    return VarianceBreakdown(
        quantum_static=static,
        quantum_drift=drift,
        classical=classical,
        total=static + drift + classical,
    )


def gaussian_entropy(variance):
    """Differential entropy in nats of a Gaussian with the given variance.

    Accepts scalars or arrays.
    """
    v = np.asarray(variance, dtype=float)
    if not np.all(v > 0):
        raise NonPositiveVariance(variance)
    h = 0.5 * (_LOG_2PIE + np.log(v))
    return float(h) if h.ndim == 0 else h


def _check_index(n, minimum):
    if isinstance(n, bool) or int(n) != n:
        raise NegativeIndex(n) if minimum == 0 else IndexBelowOne(n)
    if n < minimum:
        raise NegativeIndex(n) if minimum == 0 else IndexBelowOne(n)
    return int(n)


def rate_conditional(scales, n, dt):
    """Entropy produced by step n -> n+1, per unit time.

    Evaluated as log1p(dt v / (dx0 + n dt v)) / dt with v = dp / m, which
    keeps full relative precision for dt down to 1e-12 and below.
    """
    n = _check_index(n, 0)
    _check_dt(dt)
    step = dt * scales.velocity_spread
    x = step / (scales.dx0 + n * step)
    return RateCurvePoint(n=n, dt=dt, rate=math.log1p(x) / dt, method=RateMethod.CONDITIONAL)


def rate_block(scales, n, dt):
    """Entropy produced over the first n steps, per unit elapsed time."""
    n = _check_index(n, 1)
    _check_dt(dt)
    elapsed = n * dt
    ratio = scales.velocity_spread / scales.dx0
    return RateCurvePoint(
        n=n, dt=dt, rate=math.log1p(ratio * elapsed) / elapsed, method=RateMethod.BLOCK
    )


def rate_exact(scales):
    rate = 2.0 * scales.boltzmann * scales.temperature / scales.hbar
    return RateCurvePoint(n=0, dt=0.0, rate=rate, method=RateMethod.EXACT)


def bound_report(scales, grid):
    """Evaluate both rate constructions and their gaps to the exact rate.

    ``grid`` is a sequence of ``(n, dt)`` pairs.  The block average is not
    defined for n = 0 (no elapsed time), so those rows carry ``None`` in the
    block columns.  Invalid entries raise :class:`GridPointError` naming the
    offending index.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    exact = rate_exact(scales).rate
    rows = []
    for index, (n, dt) in enumerate(grid):
        try:
            cond = rate_conditional(scales, n, dt).rate
            block = rate_block(scales, n, dt).rate if n >= 1 else None
        except (NonPositiveDt, NegativeIndex, IndexBelowOne) as exc:
            raise GridPointError(index, exc) from exc
        rows.append(
            BoundRow(
                n=int(n),
                dt=dt,
                rate_conditional=cond,
                rate_block=block,
                rate_exact=exact,
                gap_conditional=exact - cond,
                gap_block=None if block is None else exact - block,
            )
        )
    return rows
