"""Free-particle wavepacket: closed forms and an FFT propagator.

The free Hamiltonian is diagonal in wavenumber space, so evolution over any
interval is a single multiplication by exp(-i hbar k**2 dt / (2 m)) between a
forward and inverse FFT.  The only numerical error left is sampling and
periodic wrap-around, which the containment rule (span >= 40 standard
deviations) makes negligible.  This gives an independent numerical route to
check the closed-form wavefunction

    psi(x, t) = (2 pi a**2)**(-1/4) exp(-x**2 / (4 dx0 a)),  a = dx0 + i dp t / m

and its variance dx0**2 + (dp t / m)**2.
"""

from dataclasses import dataclass, field

import numpy as np

from .analytic import variance_quantum
from .errors import BackwardEvolution, GridTooSmall, NegativeTime, ThermodiffError

DEFAULT_POINTS = 2**14
CONTAINMENT_SIGMAS = 40.0


@dataclass(frozen=True)
class SpatialGrid:
    n_points: int
    span: float

    def __post_init__(self):
        n = self.n_points
        if n < 16 or n & (n - 1):
            raise ThermodiffError(f"n_points must be a power of two >= 16, got {n}")
        if not self.span > 0:
            raise ThermodiffError(f"span must be > 0, got {self.span}")

    @property
    def spacing(self):
        return self.span / self.n_points

    @property
    def centers(self):
        return -0.5 * self.span + self.spacing * np.arange(self.n_points)

    @property
    def wavenumbers(self):
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)


@dataclass(frozen=True)
class SpectralState:
    grid: SpatialGrid
    amplitudes: np.ndarray = field(repr=False)
    time: float
    scales: object = field(repr=False)

    def __post_init__(self):
        self.amplitudes.setflags(write=False)

    @property
    def density(self):
        return np.abs(self.amplitudes) ** 2

    def dispersion(self, k):
        """omega(k) = hbar k**2 / (2 m)."""
        return self.scales.hbar * k**2 / (2.0 * self.scales.mass)


@dataclass(frozen=True)
class GridMoments:
    norm: float
    mean: float
    variance: float


def grid_for(scales, t_max, n_points=DEFAULT_POINTS, span_sigmas=CONTAINMENT_SIGMAS):
    """Grid whose span is ``span_sigmas`` containment widths at ``t_max``."""
    return SpatialGrid(n_points, span_sigmas * scales.containment_width(t_max))


def _check_containment(scales, grid, t):
    required = CONTAINMENT_SIGMAS * scales.containment_width(t)
    if grid.span < required:
        raise GridTooSmall(grid.span, required)


def psi_closed_form(scales, x, t):
    if not t >= 0:
        raise NegativeTime(t)
    a = scales.dx0 + 1j * scales.dp * t / scales.mass
    x = np.asarray(x, dtype=float)
    psi = (2.0 * np.pi * a**2) ** -0.25 * np.exp(-(x**2) / (4.0 * scales.dx0 * a))
    return complex(psi) if psi.ndim == 0 else psi


def pdf_closed_form(scales, x, t):
    var = variance_quantum(scales, t)
    x = np.asarray(x, dtype=float)
    pdf = np.exp(-(x**2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    return float(pdf) if pdf.ndim == 0 else pdf


def spectral_initialize(scales, grid):
    """Sample the t = 0 minimum-uncertainty packet on ``grid``."""
    _check_containment(scales, grid, 0.0)
    x = grid.centers
    amplitudes = (2.0 * np.pi * scales.dx0**2) ** -0.25 * np.exp(-(x**2) / (4.0 * scales.dx0**2))
    return SpectralState(grid=grid, amplitudes=amplitudes.astype(complex), time=0.0, scales=scales)


def spectral_evolve(state, t_target):
    """Propagate ``state`` to ``t_target`` in one exact dispersion multiply."""
    if t_target < state.time:
        raise BackwardEvolution(state.time, t_target)
    _check_containment(state.scales, state.grid, t_target)
    elapsed = t_target - state.time
    k = state.grid.wavenumbers
    spectrum = np.fft.fft(state.amplitudes)
    spectrum *= np.exp(-1j * state.dispersion(k) * elapsed)
    return SpectralState(
        grid=state.grid,
        amplitudes=np.fft.ifft(spectrum),
        time=t_target,
        scales=state.scales,
    )


def grid_moments(state):
    x = state.grid.centers
    rho = state.density
    norm = np.trapezoid(rho, x)
    mean = np.trapezoid(x * rho, x) / norm
    variance = np.trapezoid((x - mean) ** 2 * rho, x) / norm
    return GridMoments(norm=float(norm), mean=float(mean), variance=float(variance))
