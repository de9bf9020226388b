"""Diagonalization of the Hamiltonian and evaluation of eigenfunctions on grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PotentialError
from .hamiltonian import HamiltonianMatrix
from .potential import PotentialSpec


@dataclass(frozen=True)
class Spectrum:
    """Ascending energies and the matching sine-basis coefficients.

    Column ``n - 1`` of ``coefficients`` holds c_1..c_N of level n.
    """

    energies: np.ndarray
    coefficients: np.ndarray
    spec: PotentialSpec

    @property
    def box_length(self) -> float:
        return self.spec.box_length

    @property
    def size(self) -> int:
        return self.energies.shape[0]


@dataclass(frozen=True)
class GridFunction:
    grid: np.ndarray
    values: np.ndarray


def _fix_signs(C: np.ndarray) -> np.ndarray:
    # make the first entry of largest magnitude in each column positive
    idx = np.argmax(np.abs(C), axis=0)
    signs = np.sign(C[idx, np.arange(C.shape[1])])
    signs[signs == 0] = 1.0
    return C * signs


def solve(H: HamiltonianMatrix) -> Spectrum:
    """Full eigendecomposition of a real symmetric Hamiltonian (LAPACK ``syevd``)."""
    A = H.entries
    if not np.all(np.isfinite(A)):
        raise NumericalError("Hamiltonian contains non-finite entries")
    try:
        E, C = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}") from exc
    C = _fix_signs(C)
    E.setflags(write=False)
    C.setflags(write=False)
    return Spectrum(E, C, H.spec)


def basis_matrix(grid, L: float, N: int) -> np.ndarray:
    """Samples phi_m(x_j) = sqrt(2/L) sin(m pi x_j / L) as a (len(grid), N) array."""
    x = np.asarray(grid, dtype=float)
    if np.any(x < 0) or np.any(x > L):
        raise PotentialError(f"grid leaves the box [0, {L}]")
    m = np.arange(1, N + 1)
    return np.sqrt(2.0 / L) * np.sin(np.outer(x, m) * (np.pi / L))


def _check_level(sp: Spectrum, n: int) -> None:
    if not 1 <= n <= sp.size:
        raise IndexError(f"level {n} outside 1..{sp.size}")


def wavefunction(sp: Spectrum, n: int, grid) -> GridFunction:
    """psi_n on ``grid``; levels are numbered from 1."""
    _check_level(sp, n)
    x = np.asarray(grid, dtype=float)
    Phi = basis_matrix(x, sp.box_length, sp.size)
    return GridFunction(x, Phi @ sp.coefficients[:, n - 1])


def wavefunctions(sp: Spectrum, levels, grid) -> np.ndarray:
    """Several eigenfunctions at once, one column per requested level."""
    levels = list(levels)
    for n in levels:
        _check_level(sp, n)
    Phi = basis_matrix(grid, sp.box_length, sp.size)
    return Phi @ sp.coefficients[:, [n - 1 for n in levels]]


def relative_density(sp: Spectrum, n: int, grid, x_ref: float) -> GridFunction:
    """R(x) = |psi_n(x)|^2 / |psi_n(x_ref)|^2."""
    ref = wavefunction(sp, n, [x_ref]).values[0]
    if abs(ref) < 1e-300:
        raise NumericalError(f"psi_{n} vanishes at the reference point {x_ref}")
    psi = wavefunction(sp, n, grid)
    return GridFunction(psi.grid, psi.values**2 / ref**2)


def residuals(H: HamiltonianMatrix, sp: Spectrum) -> np.ndarray:
    """Max-norm residual |H c - E c| per level."""
    R = H.entries @ sp.coefficients - sp.coefficients * sp.energies
    return np.max(np.abs(R), axis=0)
