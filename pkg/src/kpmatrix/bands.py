"""Band structure post-processing of matrix-method spectra.

Levels of a box-confined crystal are labelled by k_n = n pi / L. Bands are
found either by index (a crystal of n cells contributes about n levels per
band) or from the level spacings; the second detector also flags isolated
levels inside gaps, which is how surface states show up.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import Spectrum, solve
from .errors import NumericalError
from .hamiltonian import assemble, f_matrix
from .potential import PotentialSpec, SurfaceConfig, kronig_penney, surface_kp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Gap:
    lower_level: int  # top level of the band below (1-based)
    width: float
    midpoint: float


@dataclass
class BandStructure:
    """Levels ``(n, k_n, E_n)``, bands as inclusive 1-based level ranges, gaps and in-gap states."""

    levels: list[tuple[int, float, float]]
    bands: list[tuple[int, int]]
    gaps: list[Gap] = field(default_factory=list)
    in_gap_states: list[int] = field(default_factory=list)

    def band_energies(self, j: int) -> np.ndarray:
        first, last = self.bands[j]
        return np.array([E for n, _, E in self.levels[first - 1 : last]])

    def summary(self) -> dict:
        return {
            "bands": [
                {"first_level": a, "last_level": b,
                 "e_min": self.levels[a - 1][2], "e_max": self.levels[b - 1][2]}
                for a, b in self.bands
            ],
            "gaps": [
                {"lower_level": g.lower_level, "width": g.width, "midpoint": g.midpoint}
                for g in self.gaps
            ],
            "in_gap_states": [
                {"level": n, "energy": self.levels[n - 1][2]} for n in self.in_gap_states
            ],
        }


def _energies(sp) -> np.ndarray:
    return sp.energies if isinstance(sp, Spectrum) else np.asarray(sp, dtype=float)


def assign_wave_numbers(sp: Spectrum) -> list[tuple[int, float, float]]:
    L = sp.box_length
    return [(n, n * np.pi / L, float(E)) for n, E in enumerate(sp.energies, start=1)]


def gap_width_extrapolated(sp, n: int) -> float:
    """Gap above level ``n`` with both band edges extrapolated half a level spacing outward.

    Returns [E_{n+1} - (E_{n+2} - E_{n+1})/2] - [E_n + (E_n - E_{n-1})/2].
    """
    E = _energies(sp)
    if n < 2 or n + 2 > len(E):
        raise IndexError(f"extrapolated gap needs levels {n - 1}..{n + 2}, have 1..{len(E)}")
    e_prev, e_n, e_up, e_up2 = E[n - 2], E[n - 1], E[n], E[n + 1]
    return float((e_up - 0.5 * (e_up2 - e_up)) - (e_n + 0.5 * (e_n - e_prev)))


def gap_width_naive(sp, n: int) -> float:
    E = _energies(sp)
    return float(E[n] - E[n - 1])


def locate_gap(sp, guess: int, window: int = 3) -> int:
    """Level index at or near ``guess`` followed by the largest spacing.

    Whether the k = j pi edge state closes the lower band or opens the upper
    one depends on the crystal's symmetry, so the gap index can be off by one
    from the cell count.
    """
    E = _energies(sp)
    lo = max(1, guess - window)
    hi = min(len(E) - 1, guess + window)
    idx = np.arange(lo, hi + 1)
    return int(idx[np.argmax(E[idx] - E[idx - 1])])


def _gap_from_levels(E: np.ndarray, n: int) -> Gap:
    if 2 <= n and n + 2 <= len(E):
        width = gap_width_extrapolated(E, n)
    else:
        width = gap_width_naive(E, n)
    return Gap(n, max(width, 0.0), float(0.5 * (E[n - 1] + E[n])))


def partition_by_cell_count(sp: Spectrum, n_cells: int, n_bands: int | None = None,
                            edge: str = "auto") -> BandStructure:
    """Group levels in blocks of ``n_cells``, one block per band.

    With ``edge="lower"`` band j is exactly levels (j-1)*n+1 .. j*n. The
    last level of each block is the k = j pi edge state, which for walls on
    a mirror plane of the crystal may sit at the bottom of the next band
    instead; ``edge="auto"`` moves it across when it is closer in energy to
    the following level.
    """
    if edge not in ("auto", "lower"):
        raise ValueError(f"edge must be 'auto' or 'lower', got {edge!r}")
    E = sp.energies
    if n_bands is None:
        n_bands = len(E) // n_cells
    if n_bands * n_cells > len(E):
        raise ValueError(f"{n_bands} bands of {n_cells} levels need N >= {n_bands * n_cells}")
    tops = []
    for j in range(1, n_bands + 1):
        top = j * n_cells
        # level ``top`` opens the next band when it sits closer to level top + 1
        if edge == "auto" and n_cells > 1 and top < len(E):
            if E[top] - E[top - 1] < E[top - 1] - E[top - 2]:
                top -= 1
        tops.append(top)
    bands = []
    first = 1
    for top in tops:
        bands.append((first, top))
        first = top + 1
    gaps = [_gap_from_levels(E, top) for top in tops[:-1]]
    return BandStructure(assign_wave_numbers(sp), bands, gaps, [])


def _spacing_gaps(E: np.ndarray, factor: float, window: int) -> set[int]:
    # causal pass: spacing s_i is a gap when it exceeds factor x median of the
    # previous ``window`` spacings in the current cluster
    gaps = set()
    history: list[float] = []
    for i, s in enumerate(np.diff(E)):
        if history and s > factor * np.median(history[-window:]):
            gaps.add(i + 1)  # gap above level i + 1
            history = []
            continue
        history.append(s)
    return gaps


def detect_gaps_by_spacing(sp, factor: float = 5.0, n_levels: int | None = None,
                           window: int = 4, max_isolated: int = 2) -> BandStructure:
    """Find gaps as spacings much larger than the running median of recent spacings.

    The scan runs upward and downward through the levels and keeps every gap
    either direction finds, so a level stranded between two bands is cut
    off on both sides. Clusters of at most ``max_isolated`` levels next to
    a larger cluster are reported as in-gap states rather than bands.
    """
    if factor <= 1:
        raise ValueError("factor must exceed 1")
    E = _energies(sp)
    if n_levels is not None:
        E = E[:n_levels]
    if len(E) < 4:
        raise ValueError("spacing-based detection needs at least 4 levels")
    up = _spacing_gaps(E, factor, window)
    down = {len(E) - g for g in _spacing_gaps(-E[::-1], factor, window)}
    cuts = sorted(up | down)
    clusters = []
    first = 1
    for c in cuts:
        clusters.append((first, c))
        first = c + 1
    clusters.append((first, len(E)))

    def size(c):
        return c[1] - c[0] + 1

    isolated = set()
    for i, c in enumerate(clusters[:-1]):
        if size(c) > max_isolated:
            continue
        neighbours = [clusters[j] for j in (i - 1, i + 1) if 0 <= j < len(clusters)]
        if any(size(nb) > max_isolated for nb in neighbours):
            isolated.add(i)
    bands = [c for i, c in enumerate(clusters) if i not in isolated]
    in_gap = [n for i in sorted(isolated) for n in range(clusters[i][0], clusters[i][1] + 1)]
    gaps = [_gap_from_levels(E, b[1]) for b in bands[:-1]]
    if isinstance(sp, Spectrum):
        levels = assign_wave_numbers(sp)[: len(E)]
    else:
        levels = [(n, np.nan, float(e)) for n, e in enumerate(E, start=1)]
    return BandStructure(levels, bands, gaps, in_gap)


def levels_vs_cells(b: float, V0: float, max_cells: int, N: int, cap: float | None = None,
                    workers: int = 1) -> dict[int, np.ndarray]:
    """Levels below ``cap`` (default 1.5 V0) of KP crystals with 1..max_cells cells."""
    if max_cells < 1:
        raise ValueError("max_cells must be >= 1")
    if cap is None:
        cap = 1.5 * V0

    def run(nb):
        E = solve(assemble(kronig_penney(nb, b, V0), N)).energies
        return nb, E[E < cap].copy()

    cells = range(1, max_cells + 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return dict(pool.map(run, cells))
    return dict(run(nb) for nb in cells)


def converge_n(spec: PotentialSpec, K: int, rel_tol: float = 1e-6, N0: int | None = None,
               N_max: int = 4096) -> tuple[int, Spectrum]:
    """Double the basis size until the lowest K energies move by less than ``rel_tol``."""
    if K < 1 or rel_tol <= 0:
        raise ValueError("need K >= 1 and rel_tol > 0")
    N = N0 or max(4 * K, 10 * spec.n_barriers)
    prev = solve(assemble(spec, N))
    while True:
        N2 = 2 * N
        if N2 > N_max:
            raise NumericalError(f"lowest {K} levels not converged to {rel_tol} with N <= {N_max}")
        cur = solve(assemble(spec, N2))
        change = np.max(np.abs(cur.energies[:K] - prev.energies[:K]) / np.abs(cur.energies[:K]))
        log.debug("N=%d -> %d, max relative change %.3e", N, N2, change)
        if change < rel_tol:
            return N, prev
        N, prev = N2, cur


def probability_in(sp: Spectrum, levels, intervals) -> np.ndarray:
    """Probability of each level inside the union of disjoint ``intervals``.

    Uses the closed-form overlap tables, so no grid is involved.
    """
    L, N = sp.box_length, sp.size
    G = np.zeros((N, N))
    for a, b in intervals:
        a, b = max(a, 0.0), min(b, L)
        if b > a:
            G += f_matrix(b, L, N) - f_matrix(a, L, N)
    C = sp.coefficients[:, [n - 1 for n in levels]]
    return np.einsum("ij,ik,kj->j", C, G, C)


def surface_regions(cfg: SurfaceConfig, reach: float = 2.0):
    xs = cfg.surface_position
    L = cfg.box_length
    return [(0.0, xs + reach), (L - xs - reach, L)]


def _clusters(levels):
    out = []
    for n in levels:
        if out and out[-1][-1] == n - 1:
            out[-1].append(n)
        else:
            out.append([n])
    return out


def surface_states(sp: Spectrum, cfg: SurfaceConfig, factor: float = 5.0,
                   min_fraction: float = 0.5, reach: float = 2.0) -> list[list[int]]:
    """Clusters of in-gap levels that are bound below the vacuum and localized at the surfaces.

    Each finite-crystal surface energy splits into a near-degenerate pair;
    the localization test averages the probability within ``reach`` of a
    surface over the whole cluster so it does not depend on how the
    eigensolver rotates the pair.
    """
    bs = detect_gaps_by_spacing(sp, factor)
    regions = surface_regions(cfg, reach)
    out = []
    for cluster in _clusters(bs.in_gap_states):
        if np.any(sp.energies[[n - 1 for n in cluster]] >= cfg.vacuum_height):
            continue
        if np.mean(probability_in(sp, cluster, regions)) >= min_fraction:
            out.append(cluster)
    return out


def surface_pair_localization(cfg: SurfaceConfig, N: int, reach: float = 2.0) -> float:
    """Localization of the two lowest levels, which form the lowest-gap surface pair."""
    sp = solve(assemble(surface_kp(cfg), N))
    return float(np.mean(probability_in(sp, [1, 2], surface_regions(cfg, reach))))


def numeric_tamm_limit(n_barriers: int, b: float, P: float, N: int, v_lo: float = 50.0,
                       v_hi: float = 200.0, tol: float = 0.25, min_fraction: float = 0.5,
                       reach: float = 2.0) -> float:
    """Largest vacuum height for which the lowest surface pair stays localized.

    Bisection on V_vac; the pair counts as a surface state while at least
    ``min_fraction`` of its probability lies within ``reach`` of a surface.
    """
    def localized(v):
        cfg = SurfaceConfig.from_strength(n_barriers, b, P, v)
        return surface_pair_localization(cfg, N, reach) >= min_fraction

    if not localized(v_lo):
        raise NumericalError(f"no localized surface pair even at V_vac = {v_lo}")
    if localized(v_hi):
        raise NumericalError(f"surface pair still localized at V_vac = {v_hi}")
    while v_hi - v_lo > tol:
        mid = 0.5 * (v_lo + v_hi)
        if localized(mid):
            v_lo = mid
        else:
            v_hi = mid
    return 0.5 * (v_lo + v_hi)
