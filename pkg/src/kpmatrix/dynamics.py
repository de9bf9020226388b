"""Wave-packet propagation in the eigenbasis of the box Hamiltonian.

Time is measured in units with hbar = 1. Combined with hbar^2/2mu = 1 this
fixes the particle mass at mu = 1/2, so a uniform slope eps accelerates a
packet as x(t) = x0 - eps t^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .eigensolver import GridFunction, Spectrum, basis_matrix
from .errors import TruncationError

MASS = 0.5
CAPTURE_MIN = 0.999


@dataclass(frozen=True)
class GaussianPacket:
    """Psi(x, 0) = (pi sigma^2)^(-1/4) exp(-(x - x0)^2 / (2 sigma^2)), real and normalized."""

    x0: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma^2 must be positive")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (np.pi * self.sigma2) ** -0.25 * np.exp(-((x - self.x0) ** 2) / (2 * self.sigma2))


@dataclass(frozen=True)
class WavePacketState:
    spectrum: Spectrum
    a: np.ndarray

    @property
    def captured(self) -> float:
        return float(np.sum(np.abs(self.a) ** 2))

    def energy(self) -> float:
        """<H> = sum |a_n|^2 E_n; time independent."""
        return float(np.sum(np.abs(self.a) ** 2 * self.spectrum.energies))


def quadrature_grid(packet: GaussianPacket, L: float, N: int) -> np.ndarray:
    """Uniform grid with step <= min(sigma/20, L/(20 N)) and an odd number of points."""
    h = min(packet.sigma / 20.0, L / (20.0 * N))
    n = int(np.ceil(L / h))
    n += n % 2
    return np.linspace(0.0, L, n + 1)


def basis_projections(sp: Spectrum, packet: GaussianPacket, grid=None) -> np.ndarray:
    """<phi_m|Psi0> for m = 1..N by composite Simpson quadrature."""
    L, N = sp.box_length, sp.size
    x = quadrature_grid(packet, L, N) if grid is None else np.asarray(grid, dtype=float)
    Phi = basis_matrix(x, L, N)
    return simpson(Phi * packet(x)[:, None], x=x, axis=0)


def project(sp: Spectrum, packet: GaussianPacket, capture_min: float = CAPTURE_MIN,
            grid=None) -> WavePacketState:
    """Expansion coefficients a_n = sum_m c_m^(n) <phi_m|Psi0>.

    Raises :class:`TruncationError` when less than ``capture_min`` of the
    norm is represented by the basis.
    """
    L = sp.box_length
    peak = packet(packet.x0)
    if packet(0.0) > 1e-8 * peak or packet(L) > 1e-8 * peak:
        raise ValueError("packet is not contained in the box")
    b = basis_projections(sp, packet, grid)
    a = sp.coefficients.T @ b
    state = WavePacketState(sp, a.astype(complex))
    if state.captured < capture_min:
        raise TruncationError(
            f"basis captures only {state.captured:.6f} of the packet norm; increase N"
        )
    return state


def evolve_coefficients(state: WavePacketState, t: float) -> WavePacketState:
    phase = np.exp(-1j * state.spectrum.energies * t)
    return WavePacketState(state.spectrum, state.a * phase)


def wavefunction_at(state: WavePacketState, t: float, grid) -> GridFunction:
    """Psi(x, t) = sum_n a_n exp(-i E_n t) psi_n(x) sampled on ``grid``."""
    sp = state.spectrum
    x = np.asarray(grid, dtype=float)
    Phi = basis_matrix(x, sp.box_length, sp.size)
    coeffs = sp.coefficients @ (state.a * np.exp(-1j * sp.energies * t))
    return GridFunction(x, Phi @ coeffs)


def evolve(state: WavePacketState, t: float, grid) -> tuple[GridFunction, GridFunction]:
    """Complex Psi(x, t) and the density |Psi|^2 on ``grid``."""
    psi = wavefunction_at(state, t, grid)
    return psi, GridFunction(psi.grid, np.abs(psi.values) ** 2)


def norm(density: GridFunction) -> float:
    return float(simpson(density.values, x=density.grid))


def mean_position(density: GridFunction) -> float:
    return float(simpson(density.grid * density.values, x=density.grid) / norm(density))


def peak_position(density: GridFunction) -> float:
    """Global maximum refined by a parabola through the top sample and its neighbours.

    Ties go to the lowest x.
    """
    x, y = density.grid, np.asarray(density.values, dtype=float)
    if len(x) == 0:
        raise ValueError("empty grid")
    i = int(np.argmax(y))
    if i == 0 or i == len(x) - 1:
        return float(x[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return float(x[i])
    # uniform spacing assumed around the maximum
    h = 0.5 * (x[i + 1] - x[i - 1])
    return float(x[i] + 0.5 * h * (y0 - y2) / denom)


def newton_peak(x0: float, eps: float, t: float) -> float:
    """Classical position of a packet released at rest under slope ``eps``."""
    return x0 - eps * t * t / (2 * MASS)


def peak_trajectory(state: WavePacketState, times, grid) -> np.ndarray:
    return np.array([peak_position(evolve(state, t, grid)[1]) for t in times])
