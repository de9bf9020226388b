"""Hamiltonian matrix in the sine basis of the infinite well.

Basis: phi_p(x) = sqrt(2/L) sin(p pi x / L), p = 1..N, with free energies
pi^2 p^2 / L^2. Barrier and field contributions use closed-form integrals,
so assembly involves no quadrature.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PotentialError
from .potential import EDGE_TOL, PotentialSpec


@dataclass(frozen=True)
class HamiltonianMatrix:
    entries: np.ndarray
    spec: PotentialSpec

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def to_csv(self, path) -> None:
        """Debug dump of the matrix, one row per line."""
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.entries:
                writer.writerow([f"{v:.12g}" for v in row])


def free_energy(p, L: float):
    """Energy pi^2 p^2 / L^2 of the p-th box eigenstate."""
    p = np.asarray(p, dtype=float)
    return (np.pi * p / L) ** 2


def _sines(x: float, L: float, kmax: int) -> np.ndarray:
    # sin(k pi x / L) for k = 0..kmax
    return np.sin(np.arange(kmax + 1) * (np.pi * x / L))


def f_matrix(x: float, L: float, N: int) -> np.ndarray:
    """Antiderivative table F_nm(x) = (2/L) int_0^x sin(n pi t/L) sin(m pi t/L) dt, n, m = 1..N."""
    if x == 0.0:
        return np.zeros((N, N))
    if x == L:
        return np.eye(N)
    S = _sines(x, L, 2 * N)
    n = np.arange(1, N + 1)
    # sin(d t)/d is even in d = m - n
    diff = np.abs(n[None, :] - n[:, None])
    tot = n[None, :] + n[:, None]
    out = S[diff] / (np.pi * np.maximum(diff, 1)) - S[tot] / (np.pi * tot)
    out[n - 1, n - 1] = x / L - S[2 * n] / (2 * np.pi * n)
    return out


def F(n: int, m: int, x: float, L: float) -> float:
    """Scalar F_nm(x); the n = m branch is x/L - sin(2 pi n x/L)/(2 pi n)."""
    if n == m:
        return x / L - np.sin(2 * np.pi * n * x / L) / (2 * np.pi * n)
    d, s = m - n, m + n
    return np.sin(d * np.pi * x / L) / (np.pi * d) - np.sin(s * np.pi * x / L) / (np.pi * s)


def _check_support(s: float, b: float, L: float) -> None:
    if s - 0.5 * b < -EDGE_TOL or s + 0.5 * b > L + EDGE_TOL:
        raise PotentialError(f"barrier [{s - b / 2}, {s + b / 2}] outside box [0, {L}]")


def barrier_element(n: int, m: int, s: float, b: float, L: float) -> float:
    """Overlap (2/L) int sin(n pi x/L) sin(m pi x/L) dx over a barrier of width b centred at s."""
    _check_support(s, b, L)
    return F(n, m, s + 0.5 * b, L) - F(n, m, s - 0.5 * b, L)


def field_element(n: int, m: int, eps: float, L: float) -> float:
    if n == m:
        return 0.5 * eps * L
    if (n + m) % 2 == 0:
        return 0.0
    return -8.0 * m * n * eps * L / (np.pi**2 * (m * m - n * n) ** 2)


def field_matrix(eps: float, L: float, N: int) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=float)
    nn, mm = n[:, None], n[None, :]
    odd = ((nn + mm) % 2) == 1
    denom = np.where(odd, (mm**2 - nn**2) ** 2, 1.0)
    out = np.where(odd, -8.0 * mm * nn * eps * L / (np.pi**2 * denom), 0.0)
    out[np.diag_indices(N)] = 0.5 * eps * L
    return out


def edge_weights(spec: PotentialSpec) -> dict[float, float]:
    """Map each distinct barrier edge to the net height jump across it.

    The potential part of H is then sum_edges weight * F(edge); touching
    barriers share an edge and need a single F table.
    """
    weights: dict[float, float] = defaultdict(float)
    for bar in spec.barriers:
        if bar.height == 0.0:
            continue
        left = min(max(bar.left, 0.0), spec.box_length)
        right = min(max(bar.right, 0.0), spec.box_length)
        weights[right] += bar.height
        weights[left] -= bar.height
    return {x: w for x, w in weights.items() if w != 0.0}


BLOCK_ROWS = 32


def _reciprocal_tables(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Read-only views 1/(pi (m - n)) (zero on the diagonal) and 1/(pi (m + n)).

    The first is Toeplitz and the second Hankel, so both are strided views of
    a vector of length 2N that stays in cache.
    """
    k = np.arange(-(N - 1), N, dtype=float)
    r = np.divide(1.0, np.pi * k, out=np.zeros_like(k), where=k != 0)
    t = 1.0 / (np.pi * np.arange(2, 2 * N + 1, dtype=float))
    step = r.strides[0]
    inv_diff = np.lib.stride_tricks.as_strided(r[N - 1 :], (N, N), (-step, step), writeable=False)
    inv_sum = np.lib.stride_tricks.as_strided(t, (N, N), (step, step), writeable=False)
    return inv_diff, inv_sum


def potential_matrix(edges, weights, L: float, N: int) -> np.ndarray:
    """Sum of weight * F(edge) over interior edges, built from one matrix product.

    With s_k = sin(k pi x/L) and c_k = cos(k pi x/L) at each edge,
    sin((m -+ n) pi x/L) = s_m c_n -+ c_m s_n, so every table entry follows
    from Q_nm = sum_e w_e s_n c_m at a cost of (number of edges) * N^2.
    Each unordered pair (n, m) is evaluated once, in blocks of rows small
    enough to stay in cache, so the result is symmetric bit for bit.
    """
    x = np.asarray(edges, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = np.arange(1, N + 1)
    theta = np.outer(x, n) * (np.pi / L)
    Q = (np.sin(theta) * w[:, None]).T @ np.cos(theta)
    inv_diff, inv_sum = _reciprocal_tables(N)
    out = np.empty((N, N))
    tmp = np.empty((BLOCK_ROWS, N))
    # each row block covers columns from its first row onward; the transpose
    # of that strip fills the matching lower-triangle columns
    for i0 in range(0, N, BLOCK_ROWS):
        i1 = min(N, i0 + BLOCK_ROWS)
        q, qt = Q[i0:i1, i0:], Q[i0:, i0:i1].T
        blk, t = out[i0:i1, i0:], tmp[: i1 - i0, : N - i0]
        np.subtract(qt, q, out=blk)
        blk *= inv_diff[i0:i1, i0:]
        np.add(qt, q, out=t)
        t *= inv_sum[i0:i1, i0:]
        blk -= t
        sq = blk[:, : i1 - i0]
        sq[np.tril_indices(i1 - i0, -1)] = sq.T[np.tril_indices(i1 - i0, -1)]
        out[i1:, i0:i1] = blk[:, i1 - i0 :].T
    out[n - 1, n - 1] = np.dot(w, x) / L - np.diag(Q) / (np.pi * n)
    return out


def assemble(spec: PotentialSpec, N: int) -> HamiltonianMatrix:
    """Dense N x N Hamiltonian; cost scales as (number of barriers) * N^2."""
    if N < 1:
        raise ValueError(f"basis size must be >= 1, got {N}")
    L = spec.box_length
    shift = 0.0
    interior = []
    for x, w in edge_weights(spec).items():
        # F(0) = 0 and F(L) = I exactly; sin(k pi) round-off would spoil that
        if x == L:
            shift += w
        elif x != 0.0:
            interior.append((x, w))
    if interior:
        xs, ws = zip(*interior)
        H = potential_matrix(xs, ws, L, N)
    else:
        H = np.zeros((N, N))
    H[np.diag_indices(N)] += shift
    if spec.field_slope != 0.0:
        H += field_matrix(spec.field_slope, L, N)
    H[np.diag_indices(N)] += free_energy(np.arange(1, N + 1), L)
    H.setflags(write=False)
    return HamiltonianMatrix(H, spec)
