import numpy as np
import pytest

from kpmatrix.bands import (
    assign_wave_numbers,
    converge_n,
    detect_gaps_by_spacing,
    gap_width_extrapolated,
    gap_width_naive,
    levels_vs_cells,
    locate_gap,
    numeric_tamm_limit,
    partition_by_cell_count,
    probability_in,
    surface_states,
)
from kpmatrix.eigensolver import solve
from kpmatrix.errors import NumericalError
from kpmatrix.hamiltonian import assemble
from kpmatrix.oracles import transfer_matrix_gaps, kp_cell
from kpmatrix.potential import SurfaceConfig, dimerized_kp, kronig_penney, surface_kp


@pytest.fixture(scope="module")
def kp10():
    return solve(assemble(kronig_penney(10, 1 / 6, 100.0), 100))


def test_wave_numbers(kp10):
    rows = assign_wave_numbers(kp10)
    assert rows[0] == (1, pytest.approx(np.pi / 10), pytest.approx(kp10.energies[0]))
    assert rows[29][1] == pytest.approx(3 * np.pi)


def test_partition_policies(kp10):
    lower = partition_by_cell_count(kp10, 10, 3, edge="lower")
    assert lower.bands == [(1, 10), (11, 20), (21, 30)]
    auto = partition_by_cell_count(kp10, 10, 3)
    # the k = j pi edge states of this crystal sit at the bottom of the next band
    assert auto.bands == [(1, 9), (10, 20), (21, 29)]
    assert [g.lower_level for g in auto.gaps] == [9, 20]
    with pytest.raises(ValueError):
        partition_by_cell_count(kp10, 10, 3, edge="upper")
    with pytest.raises(ValueError):
        partition_by_cell_count(kp10, 10, 11)


def test_spacing_detector_agrees_with_cell_count(kp10):
    by_spacing = detect_gaps_by_spacing(kp10, n_levels=30)
    # level 30 opens band 4 and shows up as a trailing one-level cluster
    assert by_spacing.bands[:3] == partition_by_cell_count(kp10, 10, 3).bands
    assert by_spacing.bands[3] == (30, 30)
    assert by_spacing.in_gap_states == []
    with pytest.raises(ValueError):
        detect_gaps_by_spacing(kp10, factor=0.5)


def test_gap_widths_track_the_oracle(kp10):
    gaps = transfer_matrix_gaps(kp_cell(1 / 6, 100.0), 2)
    bs = partition_by_cell_count(kp10, 10, 3)
    for g, (lo, hi) in zip(bs.gaps, gaps):
        assert g.width == pytest.approx(hi - lo, rel=0.1)
        assert lo < g.midpoint < hi


def test_extrapolated_gap_formula():
    E = np.array([1.0, 2.0, 10.0, 11.5])
    assert gap_width_extrapolated(E, 2) == pytest.approx((10 - 0.75) - (2 + 0.5))
    assert gap_width_naive(E, 2) == 8.0
    with pytest.raises(IndexError):
        gap_width_extrapolated(E, 1)
    with pytest.raises(IndexError):
        gap_width_extrapolated(E, 3)


def test_locate_gap_in_dimer_crystal():
    sp = solve(assemble(dimerized_kp(80, 0.01, 100.0, 0.1), 200))
    assert locate_gap(sp, 40) in (39, 40, 41)
    n = locate_gap(sp, 80)
    assert sp.energies[n] - sp.energies[n - 1] > 5 * (sp.energies[n - 1] - sp.energies[n - 2])


def test_dimer_at_zero_shift_equals_kronig_penney():
    a = solve(assemble(dimerized_kp(20, 0.05, 50.0, 0.0), 100)).energies
    b = solve(assemble(kronig_penney(20, 0.05, 50.0), 100)).energies
    assert np.max(np.abs(a - b)) <= 1e-8


def test_levels_vs_cells():
    table = levels_vs_cells(1 / 6, 100.0, 4, 60)
    assert sorted(table) == [1, 2, 3, 4]
    assert all(np.all(E < 150.0) for E in table.values())
    # each added cell adds one level to every band below the cap
    counts = [len(table[n]) for n in range(1, 5)]
    assert counts == sorted(counts) and counts[-1] > counts[0]
    parallel = levels_vs_cells(1 / 6, 100.0, 4, 60, workers=2)
    assert all(np.array_equal(table[n], parallel[n]) for n in table)
    with pytest.raises(ValueError):
        levels_vs_cells(1 / 6, 100.0, 0, 60)


def test_converge_n():
    spec = kronig_penney(4, 0.2, 50.0)
    N, sp = converge_n(spec, 5, rel_tol=1e-4)
    assert sp.size == N
    ref = solve(assemble(spec, 2 * N)).energies[:5]
    assert np.max(np.abs(sp.energies[:5] - ref) / ref) < 1e-4
    with pytest.raises(NumericalError):
        converge_n(spec, 5, rel_tol=1e-15, N_max=80)
    with pytest.raises(ValueError):
        converge_n(spec, 0)


def test_probability_in_whole_box(kp10):
    p = probability_in(kp10, [1, 5, 30], [(0.0, 10.0)])
    assert np.allclose(p, 1.0, atol=1e-12)
    halves = probability_in(kp10, [3], [(0.0, 5.0)])
    assert halves[0] == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("b, pairs", [
    (1 / 6, [(8.22, 8.23), (31.91, 31.92)]),
    (1 / 12, [(7.37, 7.37), (28.99, 29.00)]),
    (1 / 96, [(6.77, 6.78), (26.86, 26.86)]),
])
def test_surface_doublets(b, pairs):
    cfg = SurfaceConfig.from_strength(10, b, 10.0, 50.0)
    sp = solve(assemble(surface_kp(cfg), 400))
    found = surface_states(sp, cfg)
    assert [len(c) for c in found] == [2, 2]
    for cluster, want in zip(found, pairs):
        assert sp.energies[[n - 1 for n in cluster]] == pytest.approx(want, abs=0.02)
    # the vacuum-confined levels above the step are not surface states
    assert all(sp.energies[c[-1] - 1] < cfg.vacuum_height for c in found)


def test_numeric_tamm_limit_brackets():
    with pytest.raises(NumericalError):
        numeric_tamm_limit(10, 1 / 96, 10.0, 200, v_lo=150.0, v_hi=200.0)
