"""Exception hierarchy.

Every error raised by the library derives from :class:`ThermodiffError`,
which is a :class:`ValueError` so callers validating input can catch either.
"""


class ThermodiffError(ValueError):
    """Base class for all library errors."""


class NonPositiveParameter(ThermodiffError):
    def __init__(self, name, value):
        self.name = name
        self.value = value
        super().__init__(f"{name} must be > 0, got {value!r}")


class ConstantsOverrideInNaturalUnits(ThermodiffError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"{name} is fixed to 1 in natural units and cannot be overridden")


class NegativeTime(ThermodiffError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"time must be >= 0, got {t!r}")


class NonPositiveVariance(ThermodiffError):
    def __init__(self, variance):
        self.variance = variance
        super().__init__(f"variance must be > 0, got {variance!r}")


class NonPositiveDt(ThermodiffError):
    def __init__(self, dt):
        self.dt = dt
        super().__init__(f"dt must be > 0, got {dt!r}")


class NegativeIndex(ThermodiffError):
    def __init__(self, n):
        self.n = n
        super().__init__(f"step index must be >= 0, got {n!r}")


class IndexBelowOne(ThermodiffError):
    def __init__(self, n):
        self.n = n
        super().__init__(f"block rate needs n >= 1, got {n!r}")


class GridTooSmall(ThermodiffError):
    def __init__(self, span, required):
        self.span = span
        self.required = required
        super().__init__(f"grid span {span:g} below containment bound {required:g}")


class BackwardEvolution(ThermodiffError):
    def __init__(self, t_from, t_to):
        self.t_from = t_from
        self.t_to = t_to
        super().__init__(f"cannot evolve backwards from t={t_from!r} to t={t_to!r}")


class TooFewParticles(ThermodiffError):
    def __init__(self, n_particles):
        self.n_particles = n_particles
        super().__init__(f"need at least 2 particles, got {n_particles!r}")


class InvalidScheme(ThermodiffError):
    def __init__(self, scheme):
        self.scheme = scheme
        super().__init__(f"unknown scheme {scheme!r}")


class TooFewSamples(ThermodiffError):
    def __init__(self, n_samples, minimum):
        self.n_samples = n_samples
        super().__init__(f"need at least {minimum} samples, got {n_samples}")


class InvalidNeighborOrder(ThermodiffError):
    def __init__(self, k):
        self.k = k
        super().__init__(f"neighbor order k must be in [1, 20], got {k!r}")


class GridPointError(ThermodiffError):
    """A per-point failure inside a grid evaluation, tagged with its index."""

    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"grid entry {index}: {type(cause).__name__}: {cause}")
