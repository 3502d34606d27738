"""Acceptance suite A1-A8.

Each criterion returns a :class:`CriterionResult`.  Targets are fixed numbers
or formulas evaluated directly from the physical parameters, never from the
code path under test, so a defect in :func:`derive_scales` (for instance a
wrong diffusion constant) shows up as a failure instead of moving the target.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .analytic import rate_block, rate_conditional, variance_total
from .ensemble import Scheme, ensemble_stats, entropy_nn, rate_from_ensemble, sample_trajectories
from .spectral import grid_for, grid_moments, psi_closed_form, spectral_evolve, spectral_initialize
from .units import derive_scales, make_params

DEFAULT_SEED = 1729
DEFAULT_PARTICLES = 10**6


@dataclass
class CriterionResult:
    criterion_id: str
    description: str
    target: object
    measured: dict
    tolerance: object
    passed: bool
    runtime_s: float = 0.0
    error: str | None = None


@dataclass
class AcceptanceReport:
    criteria: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.criteria)

    def to_payload(self):
        return {"criteria": [asdict(c) for c in self.criteria], "passed": self.passed}


def _log_uniform(rng, size, lo=1e-3, hi=1e3):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _natural(temperature=1.0, mass=1.0):
    return make_params("natural", temperature, mass)


def a1_exact_rate(seed, scales_factory):
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for temperature, mass in zip(_log_uniform(rng, 1000), _log_uniform(rng, 1000)):
        params = _natural(float(temperature), float(mass))
        s = scales_factory(params)
        target = 2.0 * params.boltzmann * params.temperature / params.hbar
        worst = max(worst, abs(s.dp / (s.mass * s.dx0) - target) / target)
    return dict(
        target="dp/(m dx0) == 2 kB T / hbar",
        measured={"max_rel_error": worst},
        tolerance=1e-12,
        passed=worst <= 1e-12,
    )


def a2_rate_convergence(seed, scales_factory):
    s = scales_factory(_natural())
    cond = rate_conditional(s, 0, 1e-6).rate
    block = rate_block(s, 1, 1e-6).rate
    rng = np.random.default_rng([seed, 2])
    dts = np.exp(rng.uniform(math.log(1e-9), math.log(1e-1), 10_000))
    ns = rng.integers(0, 10**6, size=10_000, endpoint=True)
    max_rate = 0.0
    for n, dt in zip(ns.tolist(), dts.tolist()):
        max_rate = max(max_rate, rate_conditional(s, n, dt).rate)
        if n >= 1:
            max_rate = max(max_rate, rate_block(s, n, dt).rate)
    passed = abs(cond - 2.0) <= 1e-5 and abs(block - 2.0) <= 1e-5 and max_rate <= 2.0 + 1e-12
    return dict(
        target={"limit": 2.0, "upper_bound": 2.0},
        measured={"rate_conditional": cond, "rate_block": block, "max_rate": max_rate},
        tolerance={"limit": 1e-5, "upper_bound": 1e-12},
        passed=passed,
    )


def a3_variance_algebra(seed, scales_factory):
    rng = np.random.default_rng([seed, 3])
    temps, masses, times = (_log_uniform(rng, 10_000) for _ in range(3))
    worst_sum = worst_factored = 0.0
    for temperature, mass, t in zip(temps.tolist(), masses.tolist(), times.tolist()):
        params = _natural(temperature, mass)
        b = variance_total(scales_factory(params), t)
        # Independent factored target from the parameters alone.
        dp = math.sqrt(params.boltzmann * temperature * mass)
        factored = (params.hbar / (2.0 * dp) + dp * t / mass) ** 2
        parts = b.quantum_static + b.quantum_drift + b.classical
        worst_sum = max(worst_sum, abs(b.total - parts) / b.total)
        worst_factored = max(worst_factored, abs(b.total - factored) / factored)
    return dict(
        target="total == sum of components == (dx0 + dp t/m)^2",
        measured={"max_rel_error_sum": worst_sum, "max_rel_error_factored": worst_factored},
        tolerance=1e-12,
        passed=worst_sum <= 1e-12 and worst_factored <= 1e-12,
    )


def a4_spectral_oracle(seed, scales_factory):
    s = scales_factory(_natural())
    worst_var = worst_norm = worst_psi = 0.0
    for t in (0.25, 1.0, 2.0):
        grid = grid_for(s, t, n_points=2**14, span_sigmas=40.0)
        state = spectral_initialize(s, grid)
        start_norm = grid_moments(state).norm
        state = spectral_evolve(state, t)
        m = grid_moments(state)
        target = 0.25 + t**2
        worst_var = max(worst_var, abs(m.variance - target) / target)
        worst_norm = max(worst_norm, abs(m.norm - start_norm))
        psi = psi_closed_form(s, grid.centers, t)
        worst_psi = max(worst_psi, float(np.max(np.abs(state.amplitudes - psi))))
    return dict(
        target={"variance": "0.25 + t^2", "norm_drift": 0.0, "psi_error": 0.0},
        measured={
            "max_rel_variance_error": worst_var,
            "max_norm_drift": worst_norm,
            "max_psi_error": worst_psi,
        },
        tolerance={"variance": 1e-6, "norm_drift": 1e-10, "psi_error": 1e-8},
        passed=worst_var <= 1e-6 and worst_norm <= 1e-10 and worst_psi <= 1e-8,
    )


def a5_mc_marginals(seed, scales_factory, particles):
    s = scales_factory(_natural())
    targets = {Scheme.FULL: 2.25, Scheme.CLASSICAL_ONLY: 1.0, Scheme.QUANTUM_ONLY: 1.25}
    measured = {}
    passed = True
    for offset, (scheme, target) in enumerate(targets.items()):
        ens = sample_trajectories(s, 0.25, 4, particles, seed + offset, scheme)
        stats = ensemble_stats(ens)
        var, se = float(stats.var[-1]), float(stats.se[-1])
        z = (var - target) / se
        measured[scheme.value] = {"var": var, "se": se, "z": z}
        passed = passed and abs(z) <= 3.0
    return dict(
        target={k.value: v for k, v in targets.items()},
        measured=measured,
        tolerance="3 SE",
        passed=passed,
    )


def a6_nn_entropy(seed, scales_factory):
    rng = np.random.default_rng([seed, 6])
    samples = rng.normal(0.0, 0.5, 100_000)
    target = 0.5 * math.log(2.0 * math.pi * math.e * 0.25)
    h = entropy_nn(samples, k=4)
    return dict(
        target=target,
        measured={"entropy": h, "error": h - target},
        tolerance=0.02,
        passed=abs(h - target) <= 0.02,
    )


def a7_ensemble_rate(seed, scales_factory, particles):
    s = scales_factory(_natural())
    full = sample_trajectories(s, 1e-3, 10, particles, seed, Scheme.FULL)
    rates = [p.rate for p in rate_from_ensemble(full)]
    mean_rate = float(np.mean(rates))
    quantum = sample_trajectories(s, 1e-3, 10, particles, seed + 1, Scheme.QUANTUM_ONLY)
    q0 = rate_from_ensemble(quantum)[0].rate
    rel = abs(mean_rate - 2.0) / 2.0
    return dict(
        target={"full_mean_rate": 2.0, "quantum_only_step0_below": 0.1},
        measured={"full_mean_rate": mean_rate, "rel_error": rel, "quantum_only_step0": q0},
        tolerance={"full_mean_rate": 0.05},
        passed=rel <= 0.05 and q0 < 0.1,
    )


CRITERIA = {
    "A1": ("Exact-rate identity over 1000 random (T, m)", a1_exact_rate),
    "A2": ("Rate limits equal 2 and both rates bounded by 2", a2_rate_convergence),
    "A3": ("Three-component variance equals factored form", a3_variance_algebra),
    "A4": ("Spectral propagation matches closed-form wavepacket", a4_spectral_oracle),
    "A5": ("Monte Carlo marginal variances at t = 1", a5_mc_marginals),
    "A6": ("Nearest-neighbour entropy of N(0, 0.25)", a6_nn_entropy),
    "A7": ("Ensemble plug-in entropy rate", a7_ensemble_rate),
}
_NEEDS_PARTICLES = {"A5", "A7"}


def _run_one(cid, seed, scales_factory, particles):
    description, fn = CRITERIA[cid]
    start = time.perf_counter()
    try:
        kwargs = {"particles": particles} if cid in _NEEDS_PARTICLES else {}
        fields = fn(seed, scales_factory, **kwargs)
        result = CriterionResult(cid, description, **fields)
    except Exception as exc:  # a crashing criterion is a failing criterion
        result = CriterionResult(
            cid, description, None, {}, None, False, error=f"{type(exc).__name__}: {exc}"
        )
    result.runtime_s = time.perf_counter() - start
    return result


def _numeric_fingerprint(results):
    return json.dumps([[r.criterion_id, r.measured, r.passed] for r in results], sort_keys=True)


def a8_determinism(seed, scales_factory, particles, first_pass):
    again = [_run_one(r.criterion_id, seed, scales_factory, particles) for r in first_pass]
    same_results = _numeric_fingerprint(again) == _numeric_fingerprint(first_pass)
    s = scales_factory(_natural())
    serial = sample_trajectories(s, 0.1, 5, 3 * 2**16 + 17, seed, Scheme.FULL, workers=1)
    threaded = sample_trajectories(s, 0.1, 5, 3 * 2**16 + 17, seed, Scheme.FULL, workers=4)
    same_workers = serial.positions.tobytes() == threaded.positions.tobytes()
    return dict(
        target="identical bytes on re-run and across worker counts",
        measured={"rerun_identical": same_results, "worker_count_identical": same_workers},
        tolerance=0,
        passed=same_results and same_workers,
    )


def run_acceptance(seed=DEFAULT_SEED, particles=DEFAULT_PARTICLES, scales_factory=derive_scales):
    """Run A1-A8 and collect an :class:`AcceptanceReport`."""
    report = AcceptanceReport()
    for cid in CRITERIA:
        report.criteria.append(_run_one(cid, seed, scales_factory, particles))
    start = time.perf_counter()
    try:
        fields = a8_determinism(seed, scales_factory, particles, list(report.criteria))
        a8 = CriterionResult("A8", "Determinism of seeded results", **fields)
    except Exception as exc:
        a8 = CriterionResult(
            "A8", "Determinism of seeded results", None, {}, None, False,
            error=f"{type(exc).__name__}: {exc}",
        )
    a8.runtime_s = time.perf_counter() - start
    report.criteria.append(a8)
    return report


def format_line(result):
    status = "PASS" if result.passed else "FAIL"
    detail = result.error or json.dumps(result.measured, sort_keys=True, default=str)
    return f"[{status}] {result.criterion_id} {result.description}: {detail}"
