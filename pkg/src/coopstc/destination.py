"""Destination-side ML decoding over the realified frame model.

The complex linear system y = G_c s + w (symbols s with odd Gaussian-integer
coordinates) is mapped to reals with the usual a+bi -> [[a, -b], [b, a]]
block convention; decoding is exact ML, either by exhaustive enumeration of
the PAM hypothesis grid or by a Schnorr-Euchner sphere search whose first
leaf (the Babai point) sets the initial radius.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RealLatticeSystem",
    "SphereResult",
    "MlBudgetError",
    "build_lattice",
    "ml_exhaustive",
    "sphere_search",
    "sphere_decode",
]


class MlBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class RealLatticeSystem:
    """Realified observation y, generator G, and the per-coordinate PAM
    alphabet (odd integers, ascending)."""

    y: np.ndarray                 # real, length 2K
    G: np.ndarray                 # real, 2K x 2n
    alphabet: np.ndarray          # int, e.g. [-3, -1, 1, 3]

    def __post_init__(self):
        if self.y.shape[0] != self.G.shape[0]:
            raise ValueError("observation/generator dimension mismatch")
        if not np.all(np.isfinite(self.G)):
            raise ValueError("non-finite generator")

    @property
    def n_coords(self) -> int:
        return self.G.shape[1]

    @property
    def n_hypotheses(self) -> int:
        return len(self.alphabet) ** self.n_coords


def build_lattice(y_c, G_c, alphabet) -> RealLatticeSystem:
    """Realify the complex model: coordinates interleave as (Re, Im) pairs."""
    y_c = np.asarray(y_c, dtype=complex).reshape(-1)
    G_c = np.atleast_2d(np.asarray(G_c, dtype=complex))
    if y_c.shape[0] != G_c.shape[0]:
        raise ValueError("observation/generator dimension mismatch")
    k, n = G_c.shape
    y = np.empty(2 * k)
    y[0::2], y[1::2] = y_c.real, y_c.imag
    G = np.empty((2 * k, 2 * n))
    G[0::2, 0::2] = G_c.real
    G[0::2, 1::2] = -G_c.imag
    G[1::2, 0::2] = G_c.imag
    G[1::2, 1::2] = G_c.real
    return RealLatticeSystem(y=y, G=G, alphabet=np.asarray(alphabet, dtype=int))


def complex_symbols(coords: np.ndarray) -> np.ndarray:
    """Fold interleaved real coordinates back into complex symbols."""
    return coords[0::2] + 1j * coords[1::2]


@functools.lru_cache(maxsize=8)
def _hypothesis_grid(alphabet: tuple, n_coords: int) -> np.ndarray:
    grids = np.meshgrid(*([np.asarray(alphabet)] * n_coords), indexing="ij")
    S = np.stack([g.reshape(-1) for g in grids], axis=0).astype(float)
    S.setflags(write=False)
    return S


def ml_exhaustive(sys: RealLatticeSystem, budget: int = 1_000_000) -> np.ndarray:
    """Global minimizer of ||y - G s||^2 over the PAM grid; the hypothesis
    enumeration is the row-major product order, so ties pick the lowest
    index."""
    if sys.n_hypotheses > budget:
        raise MlBudgetError(
            f"hypothesis budget exceeded: {sys.n_hypotheses} > {budget}"
        )
    S = _hypothesis_grid(tuple(int(a) for a in sys.alphabet), sys.n_coords)
    d = np.sum((sys.y[:, None] - sys.G @ S) ** 2, axis=0)
    return S[:, int(np.argmin(d))].astype(int)


@dataclass(frozen=True)
class SphereResult:
    coords: np.ndarray
    metric: float
    nodes: int


def sphere_search(sys: RealLatticeSystem) -> SphereResult:
    """Depth-first Schnorr-Euchner enumeration returning the exact ML point.

    Falls back to exhaustive search when G is (numerically) rank deficient
    and the grid fits the budget; otherwise the degenerate levels are
    regularized, which only matters on probability-zero channel draws.
    """
    G, y, alphabet = sys.G, sys.y, sys.alphabet
    n = sys.n_coords
    Q, R = np.linalg.qr(G)
    diag = np.abs(np.diag(R))
    if np.any(diag < 1e-12):
        try:
            coords = ml_exhaustive(sys)
            m = float(np.sum((y - G @ coords) ** 2))
            return SphereResult(coords=coords, metric=m, nodes=sys.n_hypotheses)
        except MlBudgetError:
            R = R + np.diag(np.where(diag < 1e-12, 1e-9, 0.0))
    # flip signs so the diagonal is positive
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    R = signs[:, None] * R
    ytil = signs * (Q.T @ y)
    offset = float(y @ y - ytil @ ytil)      # ||y||^2 - ||Q^T y||^2 >= 0

    alphabet = alphabet.astype(float)
    best_dist = math.inf
    best = None
    nodes = 0

    # per-level state for the iterative DFS
    order = [None] * n                       # candidate values, SE-ordered
    idx = [0] * n
    pdist = [0.0] * (n + 1)                  # pdist[k]: metric below level k
    xvec = np.zeros(n)

    def descend(k: int) -> None:
        rhs = ytil[k] - R[k, k + 1:] @ xvec[k + 1:]
        center = rhs / R[k, k]
        order[k] = alphabet[np.argsort(np.abs(alphabet - center), kind="stable")]
        idx[k] = 0

    k = n - 1
    descend(k)
    while True:
        if idx[k] < len(order[k]):
            v = order[k][idx[k]]
            idx[k] += 1
            rhs = ytil[k] - R[k, k + 1:] @ xvec[k + 1:]
            d = pdist[k + 1] + (rhs - R[k, k] * v) ** 2
            nodes += 1
            if d < best_dist:
                xvec[k] = v
                if k == 0:
                    best_dist = d
                    best = xvec.copy()
                else:
                    pdist[k] = d
                    k -= 1
                    descend(k)
            else:
                # SE ordering: once a value misses the radius, siblings do too
                idx[k] = len(order[k])
        else:
            k += 1
            if k >= n:
                break
    return SphereResult(
        coords=best.astype(int), metric=best_dist + offset, nodes=nodes
    )


def sphere_decode(sys: RealLatticeSystem) -> np.ndarray:
    """Exact ML symbol coordinates (same contract as ml_exhaustive)."""
    return sphere_search(sys).coords
