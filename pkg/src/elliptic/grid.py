"""Uniform interior-node grids on intervals and rectangles.

Fields are plain 1-D numpy arrays holding one value per interior node; the
zero Dirichlet data on the boundary is never stored.  In 2-D the nodes are
ordered with ``x`` as the slow index (``indexing="ij"``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    dim: int
    counts: tuple[int, ...]
    extents: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.counts) != self.dim or len(self.extents) != self.dim:
            raise ValueError("counts and extents must have one entry per axis")
        for n in self.counts:
            if int(n) != n or n < 3:
                raise ValueError(f"need at least 3 interior nodes per axis, got {n}")
        for a, b in self.extents:
            if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
                raise ValueError(f"degenerate extent ({a}, {b})")

    @property
    def n(self) -> int:
        return self.counts[0]

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n + 1) for n, (a, b) in zip(self.counts, self.extents))

    @property
    def h(self) -> float:
        return self.spacing[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.counts)

    @property
    def cell(self) -> float:
        """Quadrature weight of one node (h, or hx*hy)."""
        return float(np.prod(self.spacing))

    def axis(self, k: int) -> np.ndarray:
        a, _ = self.extents[k]
        h = self.spacing[k]
        return a + h * np.arange(1, self.counts[k] + 1)

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape (size,) in 1-D and (size, 2) in 2-D."""
        if self.dim == 1:
            return self.axis(0)
        X, Y = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func`` at the nodes (``func(x)`` or ``func(x, y)``)."""
        if self.dim == 1:
            return np.asarray(func(self.coords), dtype=float) * np.ones(self.size)
        c = self.coords
        return np.asarray(func(c[:, 0], c[:, 1]), dtype=float) * np.ones(self.size)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    def ones(self) -> np.ndarray:
        return np.ones(self.size)

    def check(self, u, name="field") -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.size,):
            raise ValueError(
                f"{name} has shape {u.shape}, expected ({self.size},) for this grid"
            )
        if not np.all(np.isfinite(u)):
            raise ValueError(f"{name} has non-finite values")
        return u

    # quadrature and norms

    def integrate(self, u) -> float:
        return self.cell * float(np.sum(self.check(u)))

    def inner(self, u, v) -> float:
        return self.cell * float(np.dot(self.check(u), self.check(v)))

    def norm_l2(self, u) -> float:
        return np.sqrt(self.inner(u, u))

    def norm_h1(self, u) -> float:
        """Discrete energy norm sqrt(<u, -Lap_h u>)."""
        from .linops import laplacian

        u = self.check(u)
        return np.sqrt(max(self.inner(u, laplacian(self) @ u), 0.0))


def build_grid(dim=1, counts=99, extents=None) -> Grid:
    """Build a grid; ``counts`` may be an int (same count on every axis)."""
    if np.isscalar(counts):
        counts = (int(counts),) * dim
    counts = tuple(int(c) for c in counts)
    if extents is None:
        extents = ((0.0, 1.0),) * dim
    else:
        extents = tuple(extents)
        if dim == 1 and len(extents) == 2 and np.isscalar(extents[0]):
            extents = (extents,)
        extents = tuple((float(a), float(b)) for a, b in extents)
    return Grid(dim, counts, extents)


def integrate(grid: Grid, u) -> float:
    return grid.integrate(u)


def norm_inf(u) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.max(np.abs(u))) if u.size else 0.0


def norm_h1(grid: Grid, u) -> float:
    return grid.norm_h1(u)


def write_field_csv(path, grid: Grid, u) -> None:
    u = grid.check(u)
    header = ["x", "u"] if grid.dim == 1 else ["x", "y", "u"]
    coords = grid.coords.reshape(grid.size, -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for c, val in zip(coords, u):
            w.writerow([f"{v:.17g}" for v in (*c, val)])


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Return (coords, values) from a field CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1].squeeze(), data[:, -1]
