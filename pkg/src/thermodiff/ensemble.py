"""Monte Carlo trajectory ensembles and sample-based entropy estimates.

Each particle follows

    x(t) = x0 + (p / m) t + W(t)

with x0 ~ N(0, dx0**2) and p ~ N(0, dp**2) drawn once per particle and W a
Wiener process with variance 2 D t.  The first two terms reproduce the
quantum spreading law, the last one the classical diffusion; their sum has
variance (dx0 + dp t / m)**2 at every t.  Wiener increments are drawn exactly
as N(0, 2 D dt), so there is no discretisation error.

Random numbers come from counter-based Philox streams.  Particles are split
into fixed blocks of ``CHUNK`` and every (block, step, quantity) triple owns a
disjoint counter range under the user seed, so results are bit-identical for
any number of worker threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import digamma

from .analytic import (
    RateCurvePoint,
    RateMethod,
    gaussian_entropy,
    variance_classical,
    variance_quantum,
    variance_total,
)
from .errors import (
    InvalidNeighborOrder,
    InvalidScheme,
    NonPositiveDt,
    ThermodiffError,
    TooFewParticles,
    TooFewSamples,
)

CHUNK = 1 << 16
MIN_NN_SAMPLES = 100
MAX_NN_ORDER = 20

# Stream identifiers, stored in the second counter word.
_STREAM_X0 = 0
_STREAM_P = 1
_STREAM_WIENER = 2


class Scheme(str, Enum):
    FULL = "full"
    QUANTUM_ONLY = "quantum_only"
    CLASSICAL_ONLY = "classical_only"


class Estimator(str, Enum):
    PLUGIN_GAUSSIAN = "plugin_gaussian"
    NEAREST_NEIGHBOR = "nearest_neighbor"


@dataclass(frozen=True)
class TrajectoryEnsemble:
    scales: object = field(repr=False)
    dt: float
    n_steps: int
    n_particles: int
    positions: np.ndarray = field(repr=False)
    seed: int
    scheme: Scheme

    @property
    def times(self):
        return self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class EnsembleStats:
    t: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    se: np.ndarray
    var_analytic: np.ndarray


def _normals(seed, stream, chunk, step, size):
    bitgen = np.random.Philox(counter=[0, stream, chunk, step], key=seed)
    return np.random.Generator(bitgen).standard_normal(size)


def _fill_chunk(out, chunk, scales, dt, seed, scheme):
    size, n_cols = out.shape
    t = dt * np.arange(n_cols)
    out[:] = 0.0
    if scheme is not Scheme.CLASSICAL_ONLY:
        x0 = scales.dx0 * _normals(seed, _STREAM_X0, chunk, 0, size)
        v = scales.velocity_spread * _normals(seed, _STREAM_P, chunk, 0, size)
        out += x0[:, None] + v[:, None] * t
    if scheme is not Scheme.QUANTUM_ONLY:
        scale = math.sqrt(2.0 * scales.diffusion_const * dt)
        walk = np.empty((size, n_cols))
        walk[:, 0] = 0.0
        for step in range(1, n_cols):
            walk[:, step] = scale * _normals(seed, _STREAM_WIENER, chunk, step, size)
        out += np.cumsum(walk, axis=1)


def sample_trajectories(scales, dt, n_steps, n_particles, seed, scheme=Scheme.FULL, workers=1):
    """Draw an ensemble of ``n_particles`` paths over ``n_steps`` steps of ``dt``.

    ``workers`` only affects speed, never the output.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise NonPositiveDt(dt)
    if n_steps < 1:
        raise ThermodiffError(f"n_steps must be >= 1, got {n_steps}")
    if n_particles < 2:
        raise TooFewParticles(n_particles)
    try:
        scheme = Scheme(scheme)
    except ValueError:
        raise InvalidScheme(scheme) from None
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ThermodiffError(f"seed must fit in 64 unsigned bits, got {seed}")

    positions = np.empty((n_particles, n_steps + 1))
    chunks = [
        (positions[start : start + CHUNK], index)
        for index, start in enumerate(range(0, n_particles, CHUNK))
    ]

    def work(item):
        _fill_chunk(item[0], item[1], scales, dt, seed, scheme)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, chunks))
    else:
        for item in chunks:
            work(item)
    positions.setflags(write=False)
    return TrajectoryEnsemble(
        scales=scales,
        dt=dt,
        n_steps=n_steps,
        n_particles=n_particles,
        positions=positions,
        seed=seed,
        scheme=scheme,
    )


def analytic_variance(scales, t, scheme):
    """Exact marginal variance at time ``t`` for the given scheme."""
    scheme = Scheme(scheme)
    if scheme is Scheme.FULL:
        return variance_total(scales, t).total
    if scheme is Scheme.QUANTUM_ONLY:
        return variance_quantum(scales, t)
    return variance_classical(scales, t)


def ensemble_stats(ensemble):
    """Per-step sample moments alongside the analytic variance.

    The standard error of the variance uses the Gaussian result
    Var[s**2] = 2 sigma**4 / (N - 1).
    """
    x = ensemble.positions
    n = ensemble.n_particles
    t = ensemble.times
    var = x.var(axis=0, ddof=1)
    return EnsembleStats(
        t=t,
        mean=x.mean(axis=0),
        var=var,
        se=var * math.sqrt(2.0 / (n - 1)),
        var_analytic=np.array([analytic_variance(ensemble.scales, ti, ensemble.scheme) for ti in t]),
    )


def _nn_log_distances(samples, k):
    """log of each sample's distance to its k-th nearest neighbour, input order.

    In one dimension the k nearest neighbours of a point always form a
    contiguous run in sorted order, so the k-th neighbour distance is the
    smallest over the k + 1 windows of k + 1 consecutive sorted points
    containing it of the window's reach from that point.
    """
    order = np.argsort(samples, kind="stable")
    xs = samples[order]
    n = xs.size
    padded = np.concatenate([np.full(k, -np.inf), xs, np.full(k, np.inf)])
    eps = np.full(n, np.inf)
    for j in range(k + 1):
        left = xs - padded[j : j + n]
        right = padded[k + j : k + j + n] - xs
        eps = np.minimum(eps, np.maximum(left, right))
    if np.any(eps <= 0):
        raise ThermodiffError("duplicate samples give zero neighbour distance")
    out = np.empty(n)
    out[order] = np.log(eps)
    return out


def _check_nn_input(samples, k):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise ThermodiffError("samples must be one-dimensional")
    if samples.size < MIN_NN_SAMPLES:
        raise TooFewSamples(samples.size, MIN_NN_SAMPLES)
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= MAX_NN_ORDER:
        raise InvalidNeighborOrder(k)
    return samples, int(k)


def _nn_offset(n, k):
    # digamma(N) - digamma(k) + log of the unit-ball volume in 1-D (= 2).
    return digamma(n) - digamma(k) + math.log(2.0)


def entropy_nn(samples, k=4):
    """Kozachenko-Leonenko differential entropy estimate in nats.

    h = psi(N) - psi(k) + log 2 + mean(log eps_i), where eps_i is the
    distance from sample i to its k-th nearest neighbour.
    """
    samples, k = _check_nn_input(samples, k)
    return float(_nn_offset(samples.size, k) + _nn_log_distances(samples, k).mean())


def rate_from_ensemble(ensemble, estimator=Estimator.PLUGIN_GAUSSIAN, k=4):
    """Entropy-rate curve from successive per-step entropy estimates.

    Standard errors come from the per-particle influence of each step pair
    on the entropy difference, which accounts for the strong correlation
    between consecutive steps of the same paths.
    """
    estimator = Estimator(estimator)
    if ensemble.n_steps < 2:
        raise ThermodiffError("rate estimation needs n_steps >= 2")
    x = ensemble.positions
    n = ensemble.n_particles
    dt = ensemble.dt
    root_n = math.sqrt(n)

    if estimator is Estimator.PLUGIN_GAUSSIAN:
        var = x.var(axis=0, ddof=1)
        entropy = gaussian_entropy(var)
        centred = x - x.mean(axis=0)
        prev = centred[:, 0] ** 2 / var[0]
    else:
        _check_nn_input(x[:, 0], k)
        offset = _nn_offset(n, k)
        prev = _nn_log_distances(np.ascontiguousarray(x[:, 0]), k)
        entropy = [offset + prev.mean()]

    points = []
    for step in range(ensemble.n_steps):
        if estimator is Estimator.PLUGIN_GAUSSIAN:
            cur = centred[:, step + 1] ** 2 / var[step + 1]
            influence = 0.5 * (cur - prev)
            dh = entropy[step + 1] - entropy[step]
        else:
            cur = _nn_log_distances(np.ascontiguousarray(x[:, step + 1]), k)
            entropy.append(offset + cur.mean())
            influence = cur - prev
            dh = entropy[step + 1] - entropy[step]
        se = float(influence.std(ddof=1) / root_n / dt)
        points.append(
            RateCurvePoint(n=step, dt=dt, rate=float(dh / dt), method=RateMethod.CONDITIONAL, se=se)
        )
        prev = cur
    return points
