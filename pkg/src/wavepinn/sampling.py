"""Collocation point generation: centered Latin hypercube sets for the
inner domain, the initial condition, and the two boundaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import DomainSpec

__all__ = ["TrainingSet", "latin_hypercube_centered", "assemble_training_set"]


@dataclass(frozen=True)
class TrainingSet:
    """Partitioned collocation points, each row (x, t, x0).

    `bc_normal` carries the outward normal sign (-1 left wall, +1 right
    wall) for every boundary row.
    """

    inner: np.ndarray
    ic: np.ndarray
    bc: np.ndarray
    bc_normal: np.ndarray

    def __post_init__(self):
        for name in ("inner", "ic", "bc"):
            pts = getattr(self, name)
            if pts.ndim != 2 or pts.shape[1] != 3:
                raise ValueError(f"{name} points must be (n, 3), got {pts.shape}")
        if self.bc_normal.shape != (self.bc.shape[0],):
            raise ValueError("bc_normal must have one sign per boundary point")

    @property
    def counts(self):
        return {"inner": len(self.inner), "ic": len(self.ic), "bc": len(self.bc)}

    @property
    def total(self) -> int:
        return len(self.inner) + len(self.ic) + len(self.bc)

    def to_csv(self, path):
        """Inspection export with columns x, t, x0, partition."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "t", "x0", "partition"])
            for name in ("inner", "ic", "bc"):
                for row in getattr(self, name):
                    writer.writerow([repr(float(row[0])), repr(float(row[1])),
                                     repr(float(row[2])), name])


def latin_hypercube_centered(n: int, dims: int, bounds, seed=0) -> np.ndarray:
    """Centered Latin hypercube: one point per stratum, at stratum centers.

    `bounds` is a sequence of (lo, hi) per dimension.  Stratum assignment
    is an independent seeded permutation per dimension; `seed` is anything
    `np.random.default_rng` accepts.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    if len(bounds) != dims:
        raise ValueError(f"expected {dims} bounds, got {len(bounds)}")
    rng = np.random.default_rng(seed)
    centers = (np.arange(n) + 0.5) / n
    pts = np.empty((n, dims))
    for d, (lo, hi) in enumerate(bounds):
        if lo >= hi:
            raise ValueError(f"degenerate bounds in dimension {d}: [{lo}, {hi}]")
        pts[:, d] = lo + (hi - lo) * rng.permutation(centers)
    return pts


def assemble_training_set(
    domain: DomainSpec,
    source_grid,
    total: int,
    fractions=(0.45, 0.25, 0.30),
    seed: int = 0,
    t_max: float | None = None,
) -> TrainingSet:
    """Build the (bc, ic, inner) partitions with the configured proportions.

    `fractions` are (bc, ic, inner) shares of `total`; bc and ic counts are
    rounded, the remainder goes to the inner set.  Boundary points are
    split half/half between the two walls with the same Latin-hypercube
    time samples at both.  Source positions from `source_grid` are cycled
    over every partition so per-source counts differ by at most one.
    """
    source_grid = np.atleast_1d(np.asarray(source_grid, dtype=float))
    if source_grid.size == 0:
        raise ValueError("source_grid must contain at least one position")
    if np.any(source_grid < domain.x_min) or np.any(source_grid > domain.x_max):
        raise ValueError(f"source positions must lie inside the domain, got {source_grid}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    if t_max is None:
        t_max = domain.t_max

    f_bc, f_ic, _ = fractions
    n_bc = int(round(total * f_bc))
    n_ic = int(round(total * f_ic))
    n_inner = total - n_bc - n_ic
    if min(n_bc, n_ic, n_inner) < 0:
        raise ValueError("partition counts came out negative; check total/fractions")

    seeds = np.random.SeedSequence(seed).spawn(4)

    inner_xt = latin_hypercube_centered(
        n_inner, 2, [(domain.x_min, domain.x_max), (0.0, t_max)], seed=seeds[0]
    )
    ic_x = latin_hypercube_centered(n_ic, 1, [(domain.x_min, domain.x_max)], seed=seeds[1])

    n_left = n_bc // 2
    n_right = n_bc - n_left
    bc_t = latin_hypercube_centered(max(n_right, 1), 1, [(0.0, t_max)], seed=seeds[2])[:, 0]
    bc_x = np.concatenate([np.full(n_left, domain.x_min), np.full(n_right, domain.x_max)])
    bc_tt = np.concatenate([bc_t[:n_left], bc_t[:n_right]])
    bc_normal = np.concatenate([np.full(n_left, -1.0), np.full(n_right, 1.0)])

    def label(n, offset=0):
        return source_grid[(np.arange(n) + offset) % source_grid.size]

    inner = np.column_stack([inner_xt[:, 0], inner_xt[:, 1], label(n_inner)])
    ic = np.column_stack([ic_x[:, 0], np.zeros(n_ic), label(n_ic)])
    bc = np.column_stack([bc_x, bc_tt, label(n_bc)])
    return TrainingSet(inner=inner, ic=ic, bc=bc, bc_normal=bc_normal)
