import numpy as np
import pytest

from kpmatrix.eigensolver import relative_density, solve
from kpmatrix.errors import NumericalError
from kpmatrix.hamiltonian import assemble
from kpmatrix.oracles import (
    UnitCell,
    band_bottom,
    bloch_energy,
    decay_factor,
    delta_band_edges,
    delta_dispersion_rhs,
    delta_surface_density,
    dimer_cell,
    half_trace,
    kp_cell,
    slab_matrix,
    surface_state_energies,
    tamm_limit,
    transfer_matrix,
    transfer_matrix_bands,
    transfer_matrix_gaps,
)
from kpmatrix.potential import SurfaceConfig, surface_kp


def test_surface_state_energies():
    E = surface_state_energies(10.0, 50.0)
    assert len(E) == 2
    assert E[0] == pytest.approx(6.65, abs=0.01)
    assert E[1] == pytest.approx(26.44, abs=0.01)
    for e in E:
        assert abs(decay_factor(np.sqrt(e), 50.0)) < 1


def test_surface_energies_lie_in_forbidden_intervals():
    # below band 1, then the gap above each band
    edges = delta_band_edges(10.0, 3)
    forbidden = [(0.0, edges[0][0])] + [(edges[j][1], edges[j + 1][0]) for j in range(2)]
    for e, (lo, hi) in zip(surface_state_energies(10.0, 50.0), forbidden):
        assert lo < e < hi


def test_tamm_limit():
    V = tamm_limit(10.0)
    assert V == pytest.approx(107.0, abs=1.0)
    # the lowest surface state disappears above the limit
    assert surface_state_energies(10.0, V - 1.0)[0] < edges_first_band_bottom(10.0)
    below = [e for e in surface_state_energies(10.0, V + 1.0) if e < edges_first_band_bottom(10.0)]
    assert below == []


def edges_first_band_bottom(P):
    return delta_band_edges(P, 1)[0][0]


def test_bad_oracle_input():
    with pytest.raises(ValueError):
        surface_state_energies(-1.0, 50.0)
    with pytest.raises(ValueError):
        tamm_limit(0.0)
    with pytest.raises(NumericalError):
        tamm_limit(10.0, Vmax=100.5)


def test_delta_dispersion_free_limit():
    E = np.array([0.5, 2.0, 30.0])
    assert np.allclose(delta_dispersion_rhs(0.0, E), np.cos(np.sqrt(E)))


def test_transfer_matrix_is_unimodular():
    cell = dimer_cell(0.1, 50.0, 0.12)
    for E in (0.3, 7.0, 49.0, 50.0, 51.0, 300.0):
        assert np.linalg.det(transfer_matrix(cell, E)) == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(slab_matrix(3.0, 0.0, 0.0), np.eye(2))


def test_free_cell_half_trace():
    cell = UnitCell(((1.0, 0.0),))
    E = np.linspace(0.1, 40, 7)
    assert np.allclose(half_trace(cell, E), np.cos(np.sqrt(E)))


def test_thin_slab_reproduces_delta_crystal():
    P, b = 10.0, 1e-4
    cell = kp_cell(b, 2 * P / b)
    delta = delta_band_edges(P, 4)
    assert band_bottom(cell) == pytest.approx(delta[0][0], rel=1e-3)
    for j, (lo, hi) in enumerate(transfer_matrix_gaps(cell, 3)):
        assert lo == pytest.approx(delta[j][1], rel=1e-3)
        assert hi == pytest.approx(delta[j + 1][0], rel=1e-3)


def test_dimer_gaps_at_zero_shift():
    b, V0 = 0.01, 100.0
    dimer = transfer_matrix_gaps(dimer_cell(b, V0, 0.0), 3)
    kp = transfer_matrix_gaps(kp_cell(b, V0), 1)
    assert dimer[0][1] - dimer[0][0] == 0.0
    assert dimer[2][1] - dimer[2][0] == 0.0
    assert dimer[1] == pytest.approx(kp[0], abs=1e-9)


def test_dimer_gap_follows_perturbation_theory():
    # weak barriers: gap j of the doubled cell is about 2 |V_G| with V_G the Fourier component
    b, V0, u = 0.01, 1.0, 0.1
    (lo, hi), = transfer_matrix_gaps(dimer_cell(b, V0, u), 1)
    VG = V0 * b * abs(np.sin(np.pi * u)) * np.sinc(b / 2)
    assert hi - lo == pytest.approx(2 * VG, rel=0.02)


def test_bands_and_bloch_energy_are_consistent():
    cell = kp_cell(1 / 6, 100.0)
    bands = transfer_matrix_bands(cell, 100.0)
    gaps = transfer_matrix_gaps(cell, 2)
    assert bands[0][1] == pytest.approx(gaps[0][0], abs=1e-8)
    assert bands[1][0] == pytest.approx(gaps[0][1], abs=1e-8)
    assert bloch_energy(cell, np.pi, 1) == pytest.approx(gaps[0][0], abs=1e-8)
    assert bloch_energy(cell, 0.0, 1) == pytest.approx(bands[0][0], abs=1e-8)
    mid = bloch_energy(cell, 0.5 * np.pi, 1)
    assert half_trace(cell, mid) == pytest.approx(0.0, abs=1e-10)


def test_delta_surface_density_shape():
    x = np.linspace(-3, 10, 2601)
    _, R = delta_surface_density(10.0, 50.0, x)
    assert R[np.searchsorted(x, 0.0)] == pytest.approx(1.0)
    assert np.all(np.diff(R[x < 0]) > 0)
    # continuity at the surface and decay into the crystal
    assert np.max(np.abs(np.diff(R))) < 0.2
    assert R[(x > 8) & (x < 9)].max() < R[(x > 0) & (x < 1)].max()


def test_delta_density_matches_thin_barrier_matrix_result():
    cfg = SurfaceConfig.from_strength(10, 1 / 96, 10.0, 50.0)
    sp = solve(assemble(surface_kp(cfg), 400))
    xs = cfg.surface_position
    x = np.linspace(0, 6.5, 2001)
    Rm = relative_density(sp, 1, x, xs).values
    _, Ro = delta_surface_density(10.0, 50.0, x, xs)
    vac = x <= xs
    assert np.max(np.abs(Rm[vac] - Ro[vac])) <= 0.01
    assert np.max(np.abs(Rm - Ro)) <= 0.05 * Ro.max()
