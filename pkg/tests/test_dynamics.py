import numpy as np
import pytest
from scipy.integrate import simpson

from kpmatrix.dynamics import (
    GaussianPacket,
    evolve,
    evolve_coefficients,
    mean_position,
    newton_peak,
    norm,
    peak_position,
    peak_trajectory,
    project,
    quadrature_grid,
)
from kpmatrix.eigensolver import GridFunction, solve
from kpmatrix.errors import TruncationError
from kpmatrix.hamiltonian import assemble
from kpmatrix.potential import empty_box, kronig_penney, with_field

GRID = np.linspace(0.0, 10.0, 2001)


@pytest.fixture(scope="module")
def falling():
    H = assemble(with_field(empty_box(10.0), 10.0), 100)
    sp = solve(H)
    return H, project(sp, GaussianPacket(5.0, 0.05))


def test_packet_is_normalized():
    p = GaussianPacket(5.0, 0.05)
    x = np.linspace(0, 10, 20001)
    assert simpson(p(x) ** 2, x=x) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        GaussianPacket(1.0, 0.0)


def test_quadrature_grid_resolution():
    p = GaussianPacket(5.0, 0.05)
    x = quadrature_grid(p, 10.0, 100)
    assert (len(x) - 1) % 2 == 0
    assert x[1] - x[0] <= min(p.sigma / 20, 10.0 / 2000) + 1e-15


def test_projection_captures_the_packet(falling):
    _, state = falling
    assert state.captured >= 0.999
    assert state.captured <= 1.0 + 1e-10


def test_truncation_is_reported():
    sp = solve(assemble(empty_box(10.0), 5))
    with pytest.raises(TruncationError):
        project(sp, GaussianPacket(5.0, 0.05))


def test_packet_must_fit_in_box():
    sp = solve(assemble(empty_box(10.0), 50))
    with pytest.raises(ValueError):
        project(sp, GaussianPacket(0.2, 0.05))


def test_initial_state_is_reproduced(falling):
    _, state = falling
    psi, _ = evolve(state, 0.0, GRID)
    assert np.max(np.abs(psi.values - GaussianPacket(5.0, 0.05)(GRID))) <= 1e-6


def test_norm_and_energy_conservation(falling):
    H, state = falling
    sp = state.spectrum
    n0, e0 = None, None
    for t in np.linspace(0, 0.26, 14):
        d = evolve(state, t, GRID)[1]
        c = sp.coefficients @ evolve_coefficients(state, t).a
        e = float(np.real(np.conj(c) @ H.entries @ c))
        if n0 is None:
            n0, e0 = norm(d), e
        assert abs(norm(d) - n0) <= 1e-6
        assert abs(e - e0) <= 1e-6
    assert e0 == pytest.approx(state.energy(), rel=1e-12)


def test_time_reversal(falling):
    _, state = falling
    back = evolve_coefficients(evolve_coefficients(state, 0.37), -0.37)
    assert np.max(np.abs(back.a - state.a)) <= 1e-10


def test_stationary_packet_without_forces():
    sp = solve(assemble(empty_box(10.0), 100))
    state = project(sp, GaussianPacket(5.0, 0.05))
    for t in (0.0, 0.1, 0.26):
        d = evolve(state, t, GRID)[1]
        assert mean_position(d) == pytest.approx(5.0, abs=1e-9)
        assert peak_position(d) == pytest.approx(5.0, abs=1e-9)


def test_packet_follows_newton_early_on(falling):
    _, state = falling
    times = np.linspace(0, 0.2, 6)
    peaks = peak_trajectory(state, times, GRID)
    assert np.max(np.abs(peaks - [newton_peak(5.0, 10.0, t) for t in times])) <= 0.01


def test_newton_peak_formula():
    assert newton_peak(5.0, 10.0, 0.26) == pytest.approx(4.324)
    assert newton_peak(5.0, 0.0, 3.0) == 5.0


def test_peak_position_refines_between_samples():
    x = np.linspace(0, 1, 11)
    d = GridFunction(x, -((x - 0.43) ** 2))
    assert peak_position(d) == pytest.approx(0.43, abs=1e-12)
    # ties go to the lower position
    assert peak_position(GridFunction(x, np.where(np.isin(np.arange(11), [0, 10]), 1.0, 0.0))) == 0.0


def test_packet_in_crystal_stays_normalized():
    sp = solve(assemble(kronig_penney(10, 1 / 6, 100.0), 100))
    state = project(sp, GaussianPacket(5.0, 0.05))
    assert norm(evolve(state, 0.3, GRID)[1]) == pytest.approx(state.captured, abs=1e-6)
