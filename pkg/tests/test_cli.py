import csv
import json

import numpy as np
import pytest

from kpmatrix.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_bands_default_scenario(tmp_path):
    code, out = run(tmp_path, "bands")
    assert code == 0
    header, data = read_csv(out / "bands.csv")
    assert header == ["n", "k_n", "E_n"]
    assert data.shape == (30, 3)
    assert np.allclose(data[:, 1], data[:, 0] * np.pi / 10)
    summary = json.loads((out / "bands_summary.json").read_text())
    assert len(summary["by_cell_count"]["bands"]) == 3
    assert summary["config"]["barrier_width"] == pytest.approx(1 / 6)
    assert len(summary["oracle_bands"]) >= 3
    # twelve significant digits
    assert (out / "bands.csv").read_text().splitlines()[1] == "1,0.314159265359,7.80968843102"


def test_output_is_byte_identical(tmp_path):
    _, a = run(tmp_path, "bands", "--nb", "6", name="a")
    _, b = run(tmp_path, "bands", "--nb", "6", name="b")
    for f in ("bands.csv", "bands_summary.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_surface_reproduces_published_pairs(tmp_path):
    code, out = run(tmp_path, "surface")
    assert code == 0
    summary = json.loads((out / "surface.json").read_text())
    pairs = [s["energies"] for s in summary["surface_states"]]
    assert pairs[0] == pytest.approx([8.22, 8.23], abs=0.02)
    assert pairs[1] == pytest.approx([31.91, 31.92], abs=0.02)
    assert summary["oracle_energies"] == pytest.approx([6.65, 26.44], abs=0.01)
    assert summary["tamm_limit"] == pytest.approx(107, abs=1)
    header, data = read_csv(out / "surface_density.csv")
    assert header[:3] == ["x", "x_from_surface", "R_level_1"]
    assert "R_oracle_1" in header
    # density is referenced at the surface, which sits between grid points
    assert np.interp(0.0, data[:, 1], data[:, 2]) == pytest.approx(1.0, abs=0.1)


def test_evolve_without_forces_is_stationary(tmp_path):
    code, out = run(tmp_path, "evolve", "--eps", "0", "--v0", "0", "--times", "0,0.1,0.2")
    assert code == 0
    header, traj = read_csv(out / "trajectory.csv")
    assert header == ["t", "x_max", "mean_x", "norm", "x_newton"]
    assert np.allclose(traj[:, 2], 5.0, atol=1e-9)
    assert np.allclose(traj[:, 3], 1.0, atol=1e-6)
    header, dens = read_csv(out / "density.csv")
    assert header == ["x", "t_0", "t_0.1", "t_0.2"]


def test_evolve_default_falls(tmp_path):
    code, out = run(tmp_path, "evolve")
    assert code == 0
    _, traj = read_csv(out / "trajectory.csv")
    assert traj[-1, 0] == pytest.approx(0.26)
    assert traj[-1, 4] == pytest.approx(4.324)
    assert traj[-1, 1] < 5.0


def test_wavefunctions_with_envelope(tmp_path):
    code, out = run(tmp_path, "wavefunctions", "--levels", "1,9", "--grid-points", "201")
    assert code == 0
    header, data = read_csv(out / "wavefunctions.csv")
    assert header == ["x", "V", "psi_1", "envelope_1", "psi_9", "envelope_9"]
    assert data.shape == (201, 6)
    assert np.allclose(data[:, 3], 0.6 * np.sin(np.pi * data[:, 0] / 10), atol=1e-11)


def test_levels_vs_cells(tmp_path):
    code, out = run(tmp_path, "levels-vs-cells", "--bigN", "60")
    assert code == 0
    header, data = read_csv(out / "levels_vs_cells.csv")
    assert header == ["n_cells", "level", "E"]
    assert set(data[:, 0].astype(int)) == set(range(1, 11))
    assert data[:, 2].max() < 150.0


def test_dimer_gaps(tmp_path):
    code, out = run(tmp_path, "dimer-gaps", "--u", "0,0.1")
    assert code == 0
    header, data = read_csv(out / "dimer_gaps.csv")
    assert header[:4] == ["u", "gap", "lower_level", "matrix_width"]
    assert data.shape == (6, 7)
    assert data[0, 6] == 0.0  # gap 1 is closed without dimerization


def test_field_bands(tmp_path):
    code, out = run(tmp_path, "field-bands", "--eps", "0,1", "--grid-points", "101")
    assert code == 0
    header, data = read_csv(out / "field_bands.csv")
    assert header == ["eps", "n", "k_n", "E_n"]
    assert data.shape == (120, 4)
    header, _ = read_csv(out / "field_lowest_state.csv")
    assert header == ["x", "psi_1_eps_0", "psi_1_eps_1"]


def test_oracle(tmp_path, capsys):
    code, out = run(tmp_path, "oracle")
    assert code == 0
    result = json.loads((out / "oracle.json").read_text())
    assert result["surface_state_energies"] == pytest.approx([6.65, 26.44], abs=0.01)
    assert json.loads(capsys.readouterr().out)["tamm_limit"] == result["tamm_limit"]


def test_config_file_and_errors(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('scenario = "bands"\nn_barriers = 4\nbasis_size = 40\nlevel_count = 8\n')
    code, out = run(tmp_path, "bands", "--config", str(cfg))
    assert code == 0
    assert read_csv(out / "bands.csv")[1].shape == (8, 3)

    cfg.write_text('n_barriers = 4\nnonsense = 1\n')
    assert main(["bands", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 1
    assert main(["bands", "--nb", "zero", "--out", str(tmp_path / "x")]) == 1
    assert main(["bands", "--bigN", "10", "--out", str(tmp_path / "x")]) == 1
    # too small a basis to hold the packet is a numerical failure
    assert main(["evolve", "--bigN", "5", "--out", str(tmp_path / "x")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-scenario"])
    assert exc.value.code == 1


def test_error_messages_have_line_numbers(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('n_barriers = 4\nbarrier_width = "x"\n')
    assert main(["bands", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 1
    assert "c.toml:2:" in capsys.readouterr().err
