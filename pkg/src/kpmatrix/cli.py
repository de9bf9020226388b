"""Command-line front end: one subcommand per figure or table, CSV and JSON output.

Exit codes: 0 ok, 1 configuration error, 2 numerical failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .bands import (
    converge_n,
    detect_gaps_by_spacing,
    gap_width_extrapolated,
    levels_vs_cells,
    locate_gap,
    numeric_tamm_limit,
    partition_by_cell_count,
    probability_in,
    surface_regions,
    surface_states,
)
from .config import SCENARIOS, ScenarioConfig, build_config, load_file
from .dynamics import GaussianPacket, evolve, mean_position, newton_peak, norm, peak_position, project
from .eigensolver import Spectrum, relative_density, solve, wavefunctions
from .errors import ConfigError, NumericalError, PotentialError
from .hamiltonian import assemble
from .oracles import (
    delta_band_edges,
    delta_surface_density,
    dimer_cell,
    kp_cell,
    surface_state_energies,
    tamm_limit,
    transfer_matrix_bands,
    transfer_matrix_gaps,
)
from .potential import (
    PotentialSpec,
    SurfaceConfig,
    dimerized_kp,
    empty_box,
    evaluate,
    kronig_penney,
    surface_kp,
    with_field,
)

log = logging.getLogger("kpmatrix")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.12g}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _plain(obj):
    # numpy scalars and arrays to JSON types, floats rounded to 12 significant digits
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(f"{v:.12g}") if np.isfinite(v) else None
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_plain(obj), indent=2) + "\n", encoding="utf-8")


def spectrum_for(cfg: ScenarioConfig, spec: PotentialSpec, K: int) -> tuple[int, Spectrum]:
    """Fixed-N spectrum, or the converged one when ``converge`` is set."""
    if cfg.converge:
        return converge_n(spec, K, cfg.rel_tol)
    N = cfg.basis_size
    if N < K:
        raise ConfigError(f"basis size {N} is smaller than the {K} requested levels")
    return N, solve(assemble(spec, N))


def crystal_spec(cfg: ScenarioConfig, eps: float | None = None) -> PotentialSpec:
    spec = cfg.custom_spec()
    if spec is None:
        V0 = cfg.resolved_height()
        spec = kronig_penney(cfg.n_barriers, cfg.barrier_width, V0) if V0 else empty_box(cfg.n_barriers)
    return with_field(spec, cfg.field_slope if eps is None else eps)


def band_summary(cfg: ScenarioConfig, sp: Spectrum, K: int) -> dict:
    out = {"spacing_detector": detect_gaps_by_spacing(sp, cfg.spacing_factor, n_levels=K).summary()}
    if cfg.barriers is None and K >= cfg.n_barriers:
        out["by_cell_count"] = partition_by_cell_count(sp, cfg.n_barriers, K // cfg.n_barriers).summary()
    return out


def run_bands(cfg: ScenarioConfig, out: Path) -> int:
    K = cfg.level_count
    spec = crystal_spec(cfg)
    N, sp = spectrum_for(cfg, spec, K)
    L = sp.box_length
    write_csv(out / "bands.csv", ["n", "k_n", "E_n"],
              [(n, n * np.pi / L, sp.energies[n - 1]) for n in range(1, K + 1)])
    summary = {"config": cfg.to_dict(), "basis_size": N, **band_summary(cfg, sp, K)}
    if cfg.barriers is None and cfg.field_slope == 0.0 and cfg.resolved_height() > 0:
        cell = kp_cell(cfg.barrier_width, cfg.resolved_height())
        summary["oracle_bands"] = [list(b) for b in transfer_matrix_bands(cell, 1.05 * sp.energies[K - 1])]
    write_json(out / "bands_summary.json", summary)
    return EXIT_OK


def run_wavefunctions(cfg: ScenarioConfig, out: Path) -> int:
    spec = crystal_spec(cfg)
    N, sp = spectrum_for(cfg, spec, max(cfg.levels))
    L = sp.box_length
    x = np.linspace(0.0, L, cfg.grid_points)
    psi = wavefunctions(sp, cfg.levels, x)
    header = ["x", "V"]
    cols = [x, evaluate(spec, x)]
    for j, n in enumerate(cfg.levels):
        header.append(f"psi_{n}")
        cols.append(psi[:, j])
        if cfg.envelope_amplitude:
            header.append(f"envelope_{n}")
            cols.append(cfg.envelope_amplitude * np.sin(n * np.pi * x / L))
    write_csv(out / "wavefunctions.csv", header, zip(*cols))
    write_json(out / "wavefunctions.json", {
        "config": cfg.to_dict(),
        "basis_size": N,
        "levels": [{"level": n, "energy": sp.energies[n - 1]} for n in cfg.levels],
    })
    return EXIT_OK


def run_levels_vs_cells(cfg: ScenarioConfig, out: Path) -> int:
    V0 = cfg.resolved_height()
    table = levels_vs_cells(cfg.barrier_width, V0, cfg.max_cells, cfg.basis_size, cfg.energy_cap)
    rows = [(nb, n, E) for nb, levels in table.items() for n, E in enumerate(levels, start=1)]
    write_csv(out / "levels_vs_cells.csv", ["n_cells", "level", "E"], rows)
    write_json(out / "levels_vs_cells.json", {
        "config": cfg.to_dict(),
        "energy_cap": cfg.energy_cap if cfg.energy_cap is not None else 1.5 * V0,
        "levels_per_cell_count": {nb: len(levels) for nb, levels in table.items()},
    })
    return EXIT_OK


def run_dimer_gaps(cfg: ScenarioConfig, out: Path) -> int:
    b, V0, nb, N = cfg.barrier_width, cfg.resolved_height(), cfg.n_barriers, cfg.basis_size
    cells = nb // 2
    rows = []
    for u in cfg.u_values:
        sp = solve(assemble(dimerized_kp(nb, b, V0, u), N))
        oracle = transfer_matrix_gaps(dimer_cell(b, V0, u), cfg.n_gaps)
        for j, (lo, hi) in enumerate(oracle, start=1):
            n = locate_gap(sp, cells * j)
            rows.append((u, j, n, gap_width_extrapolated(sp, n), lo, hi, hi - lo))
    write_csv(out / "dimer_gaps.csv",
              ["u", "gap", "lower_level", "matrix_width", "oracle_lower", "oracle_upper", "oracle_width"],
              rows)
    kp = transfer_matrix_gaps(kp_cell(b, V0), cfg.n_gaps)
    write_json(out / "dimer_gaps.json", {
        "config": cfg.to_dict(),
        "kp_oracle_gaps": [{"lower": lo, "upper": hi, "width": hi - lo} for lo, hi in kp],
    })
    return EXIT_OK


def run_surface(cfg: ScenarioConfig, out: Path) -> int:
    P = cfg.resolved_strength()
    scfg = SurfaceConfig(cfg.n_barriers, cfg.barrier_width, cfg.resolved_height(), cfg.vacuum_height)
    spec = surface_kp(scfg)
    N = cfg.basis_size
    sp = solve(assemble(spec, N))
    clusters = surface_states(sp, scfg, cfg.spacing_factor)
    regions = surface_regions(scfg)
    states = []
    for c in clusters:
        loc = probability_in(sp, c, regions)
        states.append({"levels": c, "energies": [sp.energies[n - 1] for n in c],
                       "surface_probability": list(loc)})
    oracle = surface_state_energies(P, cfg.vacuum_height)
    summary = {
        "config": cfg.to_dict(),
        "basis_size": N,
        "strength": P,
        "barrier_height": scfg.barrier_height,
        "surface_position": scfg.surface_position,
        "surface_states": states,
        "oracle_energies": oracle,
        "tamm_limit": tamm_limit(P),
    }
    if cfg.numeric_tamm:
        summary["numeric_tamm_limit"] = numeric_tamm_limit(cfg.n_barriers, cfg.barrier_width, P, N)

    xs = scfg.surface_position
    x = np.linspace(0.0, scfg.box_length, cfg.grid_points)
    header, cols = ["x", "x_from_surface"], [x, x - xs]
    for c in clusters:
        n = c[0]
        header.append(f"R_level_{n}")
        cols.append(relative_density(sp, n, x, xs).values)
    for j in range(1, len(oracle) + 1):
        header.append(f"R_oracle_{j}")
        cols.append(delta_surface_density(P, cfg.vacuum_height, x, xs, level=j)[1])
    write_csv(out / "surface_density.csv", header, zip(*cols))
    write_json(out / "surface.json", summary)
    return EXIT_OK


def run_field_bands(cfg: ScenarioConfig, out: Path) -> int:
    K = cfg.level_count
    rows, per_field = [], []
    x = None
    lowest = []
    for eps in cfg.field_values:
        spec = crystal_spec(cfg, eps)
        N, sp = spectrum_for(cfg, spec, K)
        L = sp.box_length
        rows += [(eps, n, n * np.pi / L, sp.energies[n - 1]) for n in range(1, K + 1)]
        per_field.append({"eps": eps, "basis_size": N, **band_summary(cfg, sp, K)})
        if x is None:
            x = np.linspace(0.0, L, cfg.grid_points)
        lowest.append(wavefunctions(sp, [1], x)[:, 0])
    write_csv(out / "field_bands.csv", ["eps", "n", "k_n", "E_n"], rows)
    write_csv(out / "field_lowest_state.csv",
              ["x"] + [f"psi_1_eps_{fmt(e)}" for e in cfg.field_values], zip(x, *lowest))
    write_json(out / "field_bands.json", {"config": cfg.to_dict(), "fields": per_field})
    return EXIT_OK


def run_evolve(cfg: ScenarioConfig, out: Path) -> int:
    spec = crystal_spec(cfg)
    L = spec.box_length
    x0 = cfg.x0 if cfg.x0 is not None else 0.5 * L
    N = cfg.basis_size
    sp = solve(assemble(spec, N))
    state = project(sp, GaussianPacket(x0, cfg.sigma2))
    x = np.linspace(0.0, L, cfg.grid_points)
    dens = [evolve(state, t, x)[1].values for t in cfg.times]
    write_csv(out / "density.csv", ["x"] + [f"t_{fmt(t)}" for t in cfg.times], zip(x, *dens))
    t_end = max(cfg.times)
    traj = []
    for t in np.linspace(0.0, t_end, cfg.trajectory_steps + 1):
        d = evolve(state, t, x)[1]
        traj.append((t, peak_position(d), mean_position(d), norm(d), newton_peak(x0, cfg.field_slope, t)))
    write_csv(out / "trajectory.csv", ["t", "x_max", "mean_x", "norm", "x_newton"], traj)
    write_json(out / "evolve.json", {
        "config": cfg.to_dict(),
        "basis_size": N,
        "captured_norm": state.captured,
        "energy": state.energy(),
        "x_max_final": traj[-1][1],
        "x_newton_final": traj[-1][4],
    })
    return EXIT_OK


def run_oracle(cfg: ScenarioConfig, out: Path) -> int:
    P = cfg.resolved_strength()
    V0 = cfg.resolved_height()
    result = {
        "config": cfg.to_dict(),
        "strength": P,
        "surface_state_energies": surface_state_energies(P, cfg.vacuum_height),
        "tamm_limit": tamm_limit(P),
        "delta_bands": [list(b) for b in delta_band_edges(P, cfg.n_gaps + 1)],
        "finite_barrier_gaps": [list(g) for g in transfer_matrix_gaps(kp_cell(cfg.barrier_width, V0), cfg.n_gaps)],
    }
    write_json(out / "oracle.json", result)
    print(json.dumps(_plain(result), indent=2))
    return EXIT_OK


def run_selftest(out: Path | None) -> int:
    results = acceptance.run_all(print)
    if out is not None:
        write_json(out / "selftest.json", [
            {"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results
        ])
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_ACCEPTANCE if failed else EXIT_OK


RUNNERS = {
    "bands": run_bands,
    "wavefunctions": run_wavefunctions,
    "levels-vs-cells": run_levels_vs_cells,
    "dimer-gaps": run_dimer_gaps,
    "surface": run_surface,
    "field-bands": run_field_bands,
    "evolve": run_evolve,
    "oracle": run_oracle,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kpmatrix", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SCENARIOS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="TOML scenario file")
        s.add_argument("--out", type=Path, help="output directory (default kpmatrix-out/<scenario>)")
        s.add_argument("--nb", help="number of barriers")
        s.add_argument("--b", help="barrier width, e.g. 1/6")
        s.add_argument("--v0", help="barrier height")
        s.add_argument("--strength", help="delta strength P; sets the barrier height to 2P/b")
        s.add_argument("--eps", help="field slope (comma list for field-bands)")
        s.add_argument("--u", help="comma list of dimerization shifts")
        s.add_argument("--vvac", help="vacuum step height")
        s.add_argument("--bigN", help="basis size N")
        s.add_argument("--times", help="comma list of times")
        s.add_argument("--grid-points", help="points in output grids")
        s.add_argument("--levels", help="comma list of levels (wavefunctions)")
        s.add_argument("--converge", action="store_true", help="pick N by doubling until converged")
    st = sub.add_parser("selftest")
    st.add_argument("--out", type=Path, help="also write selftest.json here")
    return p


def _overrides(args) -> dict:
    eps_key = "field_values" if args.command == "field-bands" else "field_slope"
    out = {
        "n_barriers": args.nb,
        "barrier_width": args.b,
        "barrier_height": args.v0,
        "strength": args.strength,
        eps_key: args.eps,
        "u_values": args.u,
        "vacuum_height": args.vvac,
        "basis_size": args.bigN,
        "times": args.times,
        "grid_points": args.grid_points,
        "levels": args.levels,
        "converge": True if args.converge else None,
    }
    if args.v0 is not None and args.strength is not None:
        raise ConfigError("give either --v0 or --strength, not both")
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            if args.out is not None:
                args.out.mkdir(parents=True, exist_ok=True)
            return run_selftest(args.out)
        file_values, text, source = {}, "", "<config>"
        if args.config is not None:
            file_values, text = load_file(args.config)
            source = str(args.config)
        cfg = build_config(args.command, file_values, _overrides(args), source, text)
        out = args.out if args.out is not None else Path("kpmatrix-out") / args.command
        out.mkdir(parents=True, exist_ok=True)
        code = RUNNERS[args.command](cfg, out)
        log.info("wrote %s", out)
        return code
    except (ConfigError, PotentialError) as exc:
        print(f"kpmatrix: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"kpmatrix: numerical failure in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
