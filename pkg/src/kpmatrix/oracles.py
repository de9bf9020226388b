"""Analytic and semi-analytic references for validating the matrix method.

Covers the Dirac-delta Kronig-Penney dispersion, surface states of the
semi-infinite delta crystal, the critical vacuum height above which the
lowest surface state disappears, and a transfer-matrix band solver for
arbitrary piecewise-constant unit cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import cmath

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import NumericalError

XI_STEP = 0.01
ROOT_TOL = 1e-12
# a gap whose half-trace extremum exceeds 1 by less than this is closed
CLOSED_GAP_TOL = 1e-9


@dataclass(frozen=True)
class UnitCell:
    """Ordered ``(width, potential)`` slabs; the cell length is the sum of widths."""

    slabs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "slabs", tuple((float(w), float(v)) for w, v in self.slabs))
        if not self.slabs:
            raise ValueError("unit cell needs at least one slab")
        if any(w <= 0 for w, _ in self.slabs):
            raise ValueError("slab widths must be positive")

    @property
    def length(self) -> float:
        return sum(w for w, _ in self.slabs)

    @classmethod
    def from_barriers(cls, length: float, barriers: Sequence[tuple[float, float, float]]):
        """Build a cell of given length from ``(center, width, height)`` barriers inside it."""
        slabs = []
        pos = 0.0
        for c, w, h in sorted(barriers):
            left = c - w / 2
            if left - pos > 1e-14:
                slabs.append((left - pos, 0.0))
            slabs.append((w, h))
            pos = c + w / 2
        if length - pos > 1e-14:
            slabs.append((length - pos, 0.0))
        return cls(tuple(slabs))


def kp_cell(b: float, V0: float) -> UnitCell:
    """Unit cell of the Kronig-Penney crystal with a centred barrier."""
    return UnitCell.from_barriers(1.0, [(0.5, b, V0)])


def dimer_cell(b: float, V0: float, u: float) -> UnitCell:
    """Length-2 cell with barriers at 1/2 + u and 3/2 - u."""
    return UnitCell.from_barriers(2.0, [(0.5 + u, b, V0), (1.5 - u, b, V0)])


def delta_dispersion_rhs(P: float, E):
    """cos(xi) + P sin(xi)/xi with xi = sqrt(E); the energy is allowed iff |value| <= 1."""
    xi = np.sqrt(np.asarray(E, dtype=float))
    # np.sinc(x) = sin(pi x)/(pi x), so this is sin(xi)/xi with the E = 0 limit built in
    out = np.cos(xi) + P * np.sinc(xi / np.pi)
    return float(out) if np.ndim(out) == 0 else out


def slab_matrix(E, width: float, V: float) -> np.ndarray:
    """2x2 map of (psi, psi') across a constant-potential slab.

    ``E`` may be an array; the matrix axes are then the last two.
    """
    q = np.sqrt(np.asarray(E, dtype=complex) - V)
    qw = q * width
    c = np.cos(qw).real
    s_over_q = (width * np.sinc(qw / np.pi)).real  # sin(qw)/q, finite at q = 0
    q_s = (-q * np.sin(qw)).real
    return np.stack([np.stack([c, s_over_q], -1), np.stack([q_s, c], -1)], -2)


def transfer_matrix(cell: UnitCell, E) -> np.ndarray:
    M = None
    for w, v in cell.slabs:
        S = slab_matrix(E, w, v)
        M = S if M is None else S @ M
    return M


def _half_trace_scalar(cell: UnitCell, E: float) -> float:
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for w, v in cell.slabs:
        q = cmath.sqrt(E - v)
        if abs(q) * w < 1e-8:
            cs, sq, qs = 1.0, w, 0.0
        else:
            cs = cmath.cos(q * w).real
            sq = (cmath.sin(q * w) / q).real
            qs = (-q * cmath.sin(q * w)).real
        a, b, c, d = cs * a + sq * c, cs * b + sq * d, qs * a + cs * c, qs * b + cs * d
    return 0.5 * (a + d)


def half_trace(cell: UnitCell, E):
    """Half the trace of the cell transfer matrix; equals cos(k * cell length) inside bands."""
    if np.ndim(E) == 0:
        return _half_trace_scalar(cell, float(E))
    M = transfer_matrix(cell, E)
    t = 0.5 * (M[..., 0, 0] + M[..., 1, 1])
    return float(t) if np.ndim(t) == 0 else t


def _emin(cell: UnitCell) -> float:
    return min(0.0, min(v for _, v in cell.slabs)) + 1e-9


def _scan(cell: UnitCell, Emin: float, Emax: float, dE: float):
    Es = np.arange(Emin, Emax + dE, dE)
    return Es, half_trace(cell, Es)


def transfer_matrix_bands(cell: UnitCell, Emax: float, tol: float = 1e-10, dE: float = 1e-3):
    """Allowed energy intervals ``(bandMin, bandMax)`` up to ``Emax``.

    Bands touching at a closed gap merge into one interval; use
    :func:`transfer_matrix_gaps` when gaps must be counted by order.
    """
    if Emax <= 0:
        raise ValueError("Emax must be positive")
    Es, t = _scan(cell, _emin(cell), Emax, dE)
    allowed = np.abs(t) <= 1.0
    g = lambda E: abs(half_trace(cell, E)) - 1.0
    bands = []
    start = Es[0] if allowed[0] else None
    for i in range(1, len(Es)):
        if allowed[i] and not allowed[i - 1]:
            start = brentq(g, Es[i - 1], Es[i], xtol=tol)
        elif allowed[i - 1] and not allowed[i]:
            bands.append((start, brentq(g, Es[i - 1], Es[i], xtol=tol)))
            start = None
    if start is not None:
        bands.append((start, min(Emax, Es[-1])))
    return bands


def transfer_matrix_gaps(cell: UnitCell, n_gaps: int, Emax: float | None = None, tol: float = 1e-12):
    """The first ``n_gaps`` gaps in order, as ``(lower_edge, upper_edge)``.

    In one dimension the half trace is monotone inside each band and has
    exactly one extremum per gap, so the j-th interior extremum of the half
    trace marks gap j. A closed gap shows as an extremum with |half trace|
    <= 1 and is returned with zero width.
    """
    dE = 1e-3
    Emin = _emin(cell)
    top = Emax if Emax is not None else 1.5 * (np.pi * (n_gaps + 1) / cell.length) ** 2
    while True:
        Es, t = _scan(cell, Emin, top, dE)
        dt = np.diff(t)
        turns = np.nonzero(np.sign(dt[:-1]) != np.sign(dt[1:]))[0] + 1
        if len(turns) >= n_gaps:
            break
        if Emax is not None or top > 1e6:
            raise NumericalError(f"found only {len(turns)} gaps below E = {top}")
        top *= 2
    gaps = []
    for i in turns[:n_gaps]:
        sign = 1.0 if t[i] > 0 else -1.0
        res = minimize_scalar(
            lambda E: -sign * half_trace(cell, E),
            bracket=(Es[i - 1], Es[i], Es[i + 1]),
            tol=1e-14,
        )
        Ec = res.x
        peak = sign * half_trace(cell, Ec)
        if peak <= 1.0 + CLOSED_GAP_TOL:
            gaps.append((Ec, Ec))
            continue
        f = lambda E: sign * half_trace(cell, E) - 1.0
        inside = sign * t <= 1.0
        below = np.nonzero(inside[: i + 1])[0]
        above = np.nonzero(inside[i:])[0]
        lo = Es[below[-1]] if len(below) else Emin
        hi = Es[i + above[0]] if len(above) else top
        lo, hi = min(lo, Ec - 1e-12), max(hi, Ec + 1e-12)
        gaps.append((brentq(f, lo, Ec, xtol=tol), brentq(f, Ec, hi, xtol=tol)))
    return gaps


def bloch_energy(cell: UnitCell, k: float, band: int, Emax: float | None = None) -> float:
    """Energy on band ``band`` (1-based) with Bloch wave number ``k`` (per unit length).

    Band j covers k * cell length in [(j-1) pi, j pi]; the half trace is
    monotone across the band so the root is bracketed by the adjacent gaps.
    """
    a = cell.length
    target = np.cos(k * a)
    gaps = transfer_matrix_gaps(cell, band, Emax=Emax)
    lo = _band_bottom(cell, gaps, band)
    hi = gaps[band - 1][0]
    f = lambda E: half_trace(cell, E) - target
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        # k sits on a band edge within round-off
        return lo if abs(flo) < abs(fhi) else hi
    return brentq(f, lo, hi, xtol=1e-13)


def _band_bottom(cell: UnitCell, gaps, band: int) -> float:
    if band > 1:
        return gaps[band - 2][1]
    # below band 1 the half trace exceeds 1 and decreases with E
    Emin = _emin(cell)
    hi = gaps[0][0]
    f = lambda E: half_trace(cell, E) - 1.0
    if f(Emin) <= 0:
        return Emin
    return brentq(f, Emin, hi, xtol=1e-13)


def band_bottom(cell: UnitCell) -> float:
    """Lowest allowed energy of the infinite crystal."""
    return _band_bottom(cell, transfer_matrix_gaps(cell, 1), 1)


def delta_band_edges(P: float, n_bands: int):
    """Allowed intervals of the delta crystal; band j ends at xi = j pi where sin(xi) = 0."""
    out = []
    for j in range(1, n_bands + 1):
        top = (j * np.pi) ** 2
        lo_xi = (j - 1) * np.pi + 1e-12
        f = lambda xi: abs(np.cos(xi) + P * np.sin(xi) / xi) - 1.0
        if f(lo_xi) <= 0:
            bottom = lo_xi**2
        else:
            # |rhs| decreases from above 1 into the band; bracket on a fine grid
            xs = np.linspace(lo_xi, j * np.pi - 1e-12, 2001)
            vals = np.array([f(x) for x in xs])
            k = np.argmax(vals <= 0)
            bottom = brentq(f, xs[k - 1], xs[k], xtol=1e-14) ** 2
        out.append((bottom, top))
    return out


def _surface_equation(xi: float, V: float, P: float) -> float:
    q = np.sqrt(V - xi * xi)
    return xi * np.cos(xi) - np.sin(xi) * (V / (2 * P) - q)


def decay_factor(xi: float, V: float) -> float:
    """Per-cell amplitude ratio lambda = cos(xi) + q sin(xi)/xi of the surface solution.

    The crystal sits to the right of the step, with the first delta one
    lattice constant in. |lambda| < 1 means beta > 0 (a decaying state).
    """
    q = np.sqrt(V - xi * xi)
    return np.cos(xi) + q * np.sin(xi) / xi


def surface_state_energies(P: float, Vvac: float, step: float = XI_STEP):
    """Energies xi^2 of the surface states of the semi-infinite delta crystal.

    Solves xi cot(xi) = Vvac/(2P) - sqrt(Vvac - xi^2) for 0 < xi < sqrt(Vvac)
    and keeps roots with a decaying Bloch factor. The equation is used in the
    pole-free form xi cos(xi) - sin(xi) (Vvac/2P - q) = 0.
    """
    if P <= 0 or Vvac <= 0:
        raise ValueError("P and Vvac must be positive")
    xi0 = np.sqrt(Vvac)
    xs = np.arange(step, xi0, step)
    xs = np.append(xs, xi0 * (1 - 1e-12))
    vals = np.array([_surface_equation(x, Vvac, P) for x in xs])
    out = []
    for i in range(len(xs) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            root = xs[i]
        elif np.sign(a) != np.sign(b):
            try:
                root = brentq(_surface_equation, xs[i], xs[i + 1], args=(Vvac, P), xtol=ROOT_TOL)
            except ValueError as exc:
                raise NumericalError(f"surface-state root bracketing failed: {exc}") from exc
        else:
            continue
        if abs(decay_factor(root, Vvac)) < 1.0:
            out.append(root * root)
    return out


def tamm_limit(P: float, Vmax: float | None = None) -> float:
    """Critical vacuum height above which the lowest surface state merges into band 1.

    Smallest root Vvac > P^2 of s cot(s) = Vvac/(2P) - P with s = sqrt(Vvac - P^2).
    """
    if P <= 0:
        raise ValueError("P must be positive")
    if Vmax is None:
        Vmax = P * P + np.pi**2

    def g(V):
        s = np.sqrt(V - P * P)
        return s * np.cos(s) - np.sin(s) * (V / (2 * P) - P)

    Vs = np.linspace(P * P + 1e-9, Vmax, 20001)
    vals = np.array([g(v) for v in Vs])
    flips = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(flips) == 0:
        raise NumericalError(f"no critical vacuum height in ({P * P}, {Vmax})")
    i = flips[0]
    return brentq(g, Vs[i], Vs[i + 1], xtol=1e-12)


def delta_surface_density(P: float, Vvac: float, grid, x_surface: float = 0.0, level: int = 1):
    """R(x) of surface state ``level`` for the semi-infinite delta crystal.

    Vacuum occupies x < x_surface and deltas sit at x_surface + 1, + 2, ...
    In the vacuum psi = exp(q (x - x_s)); inside cell j >= 0 of the crystal
    psi(x_s + j + y) = lambda^j (cos(xi y) + q/xi sin(xi y)) for 0 <= y < 1.
    Returns (grid, R) with R = 1 at the surface.
    """
    energies = surface_state_energies(P, Vvac)
    if len(energies) < level:
        raise NumericalError(f"no surface state number {level} for P={P}, Vvac={Vvac}")
    E = energies[level - 1]
    xi = np.sqrt(E)
    q = np.sqrt(Vvac - E)
    lam = decay_factor(xi, Vvac)
    x = np.asarray(grid, dtype=float)
    d = x - x_surface
    j = np.floor(d)
    y = d - j
    psi = np.where(
        d < 0,
        np.exp(q * np.minimum(d, 0.0)),
        np.power(lam, np.maximum(j, 0.0)) * (np.cos(xi * y) + q / xi * np.sin(xi * y)),
    )
    return x, psi**2
