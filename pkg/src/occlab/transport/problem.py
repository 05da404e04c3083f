"""Problem and solution containers shared by all transport solvers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from occlab.geometry import Space, WeightedAtoms, flat_distance_batch

MASS_BALANCE_RTOL = 1e-9
DEFAULT_ENTRY_CAP = 4_000_000


class MassMismatchError(ValueError):
    """Source and target total masses differ: the cost would be infinite."""


class SizeCapExceeded(RuntimeError):
    """Cost matrix exceeds the exact-solver cap; use the entropic solver."""


@dataclass(frozen=True)
class TransportProblem:
    """Source/target atomic measures with exponent p and a metric choice.

    Total masses must agree to relative 1e-9, mirroring the convention that
    the cost between measures of different mass is infinite.  Zero-mass atoms
    are dropped up front; a fully empty problem has cost 0 by convention.
    """

    source: WeightedAtoms
    target: WeightedAtoms
    p: float
    metric: Space = Space.EUCLIDEAN

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("exponent p must be positive")
        src = self.source.drop_zero_mass()
        tgt = self.target.drop_zero_mass()
        scale = max(src.total_mass, tgt.total_mass)
        if scale > 0 and abs(src.total_mass - tgt.total_mass) > MASS_BALANCE_RTOL * scale:
            raise MassMismatchError(
                f"total masses differ: {src.total_mass!r} vs {tgt.total_mass!r}"
            )
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", tgt)

    @property
    def is_empty(self) -> bool:
        return len(self.source) == 0 and len(self.target) == 0

    def matrix_entries(self) -> int:
        return len(self.source) * len(self.target)


def pairwise_distances(x: np.ndarray, y: np.ndarray, metric: Space) -> np.ndarray:
    if metric is Space.TORUS:
        return flat_distance_batch(x[:, None, :], y[None, :, :])
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def cost_matrix(problem: TransportProblem) -> np.ndarray:
    """|x_i - y_j|^p in the problem's metric."""
    d = pairwise_distances(
        problem.source.positions, problem.target.positions, problem.metric
    )
    return d**problem.p


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: (source_index, target_index, mass) rows plus its cost."""

    source_index: np.ndarray
    target_index: np.ndarray
    mass: np.ndarray
    cost: float

    def __post_init__(self):
        i = np.asarray(self.source_index, dtype=np.intp)
        j = np.asarray(self.target_index, dtype=np.intp)
        w = np.asarray(self.mass, dtype=float)
        if not (i.shape == j.shape == w.shape):
            raise ValueError("plan arrays must have matching shapes")
        if np.any(w < 0):
            raise ValueError("plan masses must be nonnegative")
        object.__setattr__(self, "source_index", i)
        object.__setattr__(self, "target_index", j)
        object.__setattr__(self, "mass", w)

    def __len__(self):
        return self.mass.size

    def marginals(self, n_source: int, n_target: int):
        row = np.bincount(self.source_index, weights=self.mass, minlength=n_source)
        col = np.bincount(self.target_index, weights=self.mass, minlength=n_target)
        return row, col

    def check_feasible(self, problem: TransportProblem, rtol: float = 1e-9):
        row, col = self.marginals(len(problem.source), len(problem.target))
        scale = max(problem.source.total_mass, 1e-300)
        if np.max(np.abs(row - problem.source.masses)) > rtol * scale:
            raise AssertionError("row marginals do not match source masses")
        if np.max(np.abs(col - problem.target.masses)) > rtol * scale:
            raise AssertionError("column marginals do not match target masses")

    def to_csv(self, path, problem: TransportProblem):
        """Export rows (i, j, mass, cost_contrib)."""
        src = problem.source.positions[self.source_index]
        tgt = problem.target.positions[self.target_index]
        if problem.metric is Space.TORUS:
            d1 = flat_distance_batch(src, tgt)
        else:
            d1 = np.linalg.norm(src - tgt, axis=-1)
        contrib = self.mass * d1**problem.p
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "mass", "cost_contrib"])
            for i, j, w, c in zip(self.source_index, self.target_index, self.mass, contrib):
                writer.writerow([int(i), int(j), repr(float(w)), repr(float(c))])


@dataclass(frozen=True)
class SolveReport:
    solver: str
    cost: float
    gap_bound: float = 0.0
    iterations: int = 0
    wall_time: float = 0.0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gap_bound < 0:
            raise ValueError("optimality gap bound must be nonnegative")


def atoms_to_csv(atoms: WeightedAtoms, path):
    """Columnar atom file: x1..xd, mass."""
    d = atoms.dim if len(atoms) else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{k + 1}" for k in range(d)] + ["mass"])
        for pos, w in zip(atoms.positions, atoms.masses):
            writer.writerow([repr(float(c)) for c in pos] + [repr(float(w))])


def atoms_from_csv(path, space: Space = Space.EUCLIDEAN) -> WeightedAtoms:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "mass":
            raise ValueError("atom CSV must end with a 'mass' column")
        rows = [[float(cell) for cell in row] for row in reader if row]
    if not rows:
        return WeightedAtoms(np.zeros((0, max(1, len(header) - 1))), np.zeros(0), space)
    arr = np.asarray(rows)
    return WeightedAtoms(arr[:, :-1], arr[:, -1], space)
