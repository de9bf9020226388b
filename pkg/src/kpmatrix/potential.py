"""Piecewise-constant potentials inside an infinite square well.

Units throughout the package: lattice constant a = 1 and hbar^2/2mu = 1,
so energies are measured in hbar^2/(2 mu a^2). The walls at x = 0 and
x = L are implicit and never represented numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import PotentialError

# slack for barrier edges that touch the walls or each other
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Barrier:
    """Rectangular barrier of given ``height`` on ``[center - width/2, center + width/2]``."""

    center: float
    width: float
    height: float

    def __post_init__(self):
        if not self.width > 0:
            raise PotentialError(f"barrier width must be positive, got {self.width}")

    @property
    def left(self) -> float:
        return self.center - 0.5 * self.width

    @property
    def right(self) -> float:
        return self.center + 0.5 * self.width


@dataclass(frozen=True)
class PotentialSpec:
    """Box of length ``box_length`` holding barriers and an optional field term ``field_slope * x``."""

    box_length: float
    barriers: tuple[Barrier, ...] = ()
    field_slope: float = 0.0

    def __post_init__(self):
        if not self.box_length > 0:
            raise PotentialError(f"box length must be positive, got {self.box_length}")
        object.__setattr__(self, "barriers", tuple(self.barriers))
        L = self.box_length
        for bar in self.barriers:
            if bar.left < -EDGE_TOL or bar.right > L + EDGE_TOL:
                raise PotentialError(
                    f"barrier at {bar.center} (width {bar.width}) leaves the box [0, {L}]"
                )
        ordered = sorted(self.barriers, key=lambda bar: bar.left)
        for a, b in zip(ordered, ordered[1:]):
            if b.left < a.right - EDGE_TOL:
                raise PotentialError(
                    f"barriers at {a.center} and {b.center} overlap"
                )

    @property
    def n_barriers(self) -> int:
        return len(self.barriers)

    def is_nonnegative(self) -> bool:
        return self.field_slope >= 0 and all(bar.height >= 0 for bar in self.barriers)

    def to_dict(self) -> dict:
        return {
            "box_length": self.box_length,
            "field_slope": self.field_slope,
            "barriers": [
                {"center": bar.center, "width": bar.width, "height": bar.height}
                for bar in self.barriers
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialSpec":
        unknown = set(data) - {"box_length", "field_slope", "barriers"}
        if unknown:
            raise PotentialError(f"unknown potential keys: {sorted(unknown)}")
        barriers = []
        for item in data.get("barriers", []):
            extra = set(item) - {"center", "width", "height"}
            if extra:
                raise PotentialError(f"unknown barrier keys: {sorted(extra)}")
            barriers.append(Barrier(float(item["center"]), float(item["width"]), float(item["height"])))
        return cls(float(data["box_length"]), tuple(barriers), float(data.get("field_slope", 0.0)))


@dataclass(frozen=True)
class SurfaceConfig:
    """Finite crystal with a vacuum step of height ``vacuum_height`` at each wall."""

    n_barriers: int
    barrier_width: float
    barrier_height: float
    vacuum_height: float

    def __post_init__(self):
        if self.n_barriers < 1:
            raise PotentialError("a surface crystal needs at least one barrier")
        if not 0 < self.barrier_width < 1:
            raise PotentialError(f"barrier width must lie in (0, 1), got {self.barrier_width}")

    @property
    def box_length(self) -> float:
        return self.n_barriers + 3.0

    @property
    def surface_position(self) -> float:
        return 1.0 + 0.5 * self.barrier_width

    @classmethod
    def from_strength(cls, n_barriers: int, barrier_width: float, P: float, vacuum_height: float):
        """Barrier height chosen as 2P/b so that each barrier mimics a delta of strength 2P."""
        return cls(n_barriers, barrier_width, 2.0 * P / barrier_width, vacuum_height)


def kronig_penney(n_barriers: int, b: float, V0: float) -> PotentialSpec:
    """``n_barriers`` unit cells with a centred barrier each; box length equals the cell count."""
    if n_barriers < 1:
        raise PotentialError("need at least one barrier")
    if not 0 < b < 1:
        raise PotentialError(f"barrier width must lie in (0, 1), got {b}")
    bars = tuple(Barrier(r - 0.5, b, V0) for r in range(1, n_barriers + 1))
    return PotentialSpec(float(n_barriers), bars)


def dimerized_kp(n_barriers: int, b: float, V0: float, u: float) -> PotentialSpec:
    """Kronig-Penney crystal with barrier r shifted by ``-(-1)**r * u``.

    The resulting unit cell has length 2 and holds barriers at 1/2 + u and
    3/2 - u.
    """
    if n_barriers < 2 or n_barriers % 2:
        raise PotentialError(f"dimerized crystal needs an even barrier count, got {n_barriers}")
    if not 0 < b < 1:
        raise PotentialError(f"barrier width must lie in (0, 1), got {b}")
    if not 0 <= u < 0.5 * (1 - b):
        raise PotentialError(f"dimerization u must lie in [0, (1-b)/2), got {u}")
    bars = tuple(
        Barrier(r - 0.5 - (-1) ** r * u, b, V0) for r in range(1, n_barriers + 1)
    )
    return PotentialSpec(float(n_barriers), bars)


def surface_kp(cfg: SurfaceConfig) -> PotentialSpec:
    """Crystal with two surfaces: interior barriers at x = 2..n_b+1, vacuum steps flush with the walls.

    All n_b + 1 valleys have width 1 - b.
    """
    L = cfg.box_length
    b = cfg.barrier_width
    x_left = 0.5 * cfg.surface_position
    bars = [Barrier(float(r), b, cfg.barrier_height) for r in range(2, cfg.n_barriers + 2)]
    vac_width = 1.0 + 0.5 * b
    bars.insert(0, Barrier(x_left, vac_width, cfg.vacuum_height))
    bars.append(Barrier(L - x_left, vac_width, cfg.vacuum_height))
    return PotentialSpec(L, tuple(bars))


def with_field(spec: PotentialSpec, eps: float) -> PotentialSpec:
    return replace(spec, field_slope=float(eps))


def empty_box(L: float) -> PotentialSpec:
    return PotentialSpec(float(L))


def evaluate(spec: PotentialSpec, x):
    """Potential inside the box; barriers are closed on the left and open on the right.

    Accepts a scalar or an array; raises for points outside [0, L].
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > spec.box_length):
        raise PotentialError(f"evaluation point outside the box [0, {spec.box_length}]")
    v = spec.field_slope * xa
    for bar in spec.barriers:
        v = v + np.where((xa >= bar.left) & (xa < bar.right), bar.height, 0.0)
    if np.ndim(v) == 0:
        return float(v)
    return v


def valley_widths(spec: PotentialSpec) -> list[float]:
    """Widths of the zero-potential intervals between consecutive barrier supports."""
    ordered = sorted(spec.barriers, key=lambda bar: bar.left)
    edges = [(bar.left, bar.right) for bar in ordered]
    out = []
    prev = 0.0
    for left, right in edges:
        if left - prev > EDGE_TOL:
            out.append(left - prev)
        prev = right
    if spec.box_length - prev > EDGE_TOL:
        out.append(spec.box_length - prev)
    return out
