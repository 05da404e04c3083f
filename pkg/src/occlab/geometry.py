"""Spaces, metrics, domains, and measure-transformation primitives.

Points are plain float64 arrays.  Torus points live in the canonical cell
[-1/2, 1/2)^d; ``torus_point`` / ``canonicalize`` enforce this on
construction.  Domains are balls or axis-aligned cubes tagged Euclidean or
torus, and ``WeightedAtoms`` is the universal finite-atomic-measure
representation shared by every other module.

All values here are immutable after construction and the operations are pure
functions, so everything is safe to share across threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

_CANONICAL_ATOL = 1e-12


class Space(Enum):
    EUCLIDEAN = "euclidean"
    TORUS = "torus"


def point(coords) -> np.ndarray:
    """Validate a Euclidean point: d >= 1, all coordinates finite."""
    x = np.asarray(coords, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("point must be a 1-d coordinate array")
    if not np.all(np.isfinite(x)):
        raise ValueError("point coordinates must be finite")
    return x


def canonicalize(coords) -> np.ndarray:
    """Reduce coordinates mod 1 into the canonical cell [-1/2, 1/2)^d."""
    x = np.asarray(coords, dtype=float)
    y = x - np.floor(x + 0.5)
    # floor can land exactly on +0.5 through rounding; fold it back
    y = np.where(y >= 0.5, y - 1.0, y)
    return y


def torus_point(coords) -> np.ndarray:
    return canonicalize(point(coords))


def flat_distance(x, y) -> float:
    """Flat (quotient) distance on the torus between canonical points.

    Minimizes |x - y - z| over the 3^d lattice shifts z in {-1,0,1}^d, which
    is sufficient for canonical representatives.
    """
    x = torus_point(x)
    y = torus_point(y)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    d = x.size
    best = np.inf
    for z in itertools.product((-1.0, 0.0, 1.0), repeat=d):
        best = min(best, float(np.linalg.norm(x - y - np.asarray(z))))
    return best


def flat_distance_batch(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized flat distance; same value as the 3^d-shift enumeration.

    The squared flat metric separates per coordinate, so the minimum over
    lattice shifts is taken coordinate-wise.
    """
    delta = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    delta = delta - np.floor(delta + 0.5)
    return np.sqrt(np.sum(delta * delta, axis=-1))


@dataclass(frozen=True)
class Domain:
    """Ball or axis-aligned cube, in Euclidean space or on the torus.

    ``size`` is the radius for balls and the side length for cubes.  Ball
    membership is closed (boundary included).  Torus domains must embed in
    the canonical cell: radius < 1/2 for balls, side <= 1 for cubes.
    """

    shape: str  # "ball" | "cube"
    center: np.ndarray
    size: float
    space: Space = Space.EUCLIDEAN

    def __post_init__(self):
        if self.shape not in ("ball", "cube"):
            raise ValueError(f"unknown domain shape {self.shape!r}")
        c = point(self.center)
        if self.space is Space.TORUS:
            c = canonicalize(c)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "size", float(self.size))
        if self.size <= 0:
            raise ValueError("domain size must be positive")
        if self.space is Space.TORUS:
            if self.shape == "ball" and self.size >= 0.5:
                raise ValueError("torus ball requires radius < 1/2")
            if self.shape == "cube" and self.size > 1.0:
                raise ValueError("torus cube requires side <= 1")

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def radius(self) -> float:
        if self.shape != "ball":
            raise AttributeError("radius is defined for balls only")
        return self.size

    @property
    def side(self) -> float:
        if self.shape != "cube":
            raise AttributeError("side is defined for cubes only")
        return self.size

    def volume(self) -> float:
        d = self.dim
        if self.shape == "cube":
            return self.size**d
        return float(np.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.size**d)

    def diameter(self) -> float:
        if self.shape == "ball":
            return 2.0 * self.size
        return float(self.size * np.sqrt(self.dim))

    def circumradius(self) -> float:
        return self.size if self.shape == "ball" else self.diameter() / 2.0

    def _offsets(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        delta = pts - self.center
        if self.space is Space.TORUS:
            delta = delta - np.floor(delta + 0.5)
        return delta

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Closed membership test, vectorized over rows of ``points``."""
        delta = self._offsets(points)
        if self.shape == "ball":
            inside = np.sum(delta * delta, axis=-1) <= self.size**2
        else:
            inside = np.max(np.abs(delta), axis=-1) <= self.size / 2.0
        return inside if np.asarray(points).ndim > 1 else bool(inside[0])

    def boundary_gap(self, points: np.ndarray) -> np.ndarray:
        """Signed distance to the boundary: positive outside, negative inside."""
        delta = self._offsets(points)
        if self.shape == "ball":
            return np.linalg.norm(delta, axis=-1) - self.size
        outside = np.maximum(np.abs(delta) - self.size / 2.0, 0.0)
        dist_out = np.linalg.norm(outside, axis=-1)
        dist_in = np.max(np.abs(delta), axis=-1) - self.size / 2.0
        return np.where(dist_out > 0, dist_out, dist_in)


def ball(center, radius, space: Space = Space.EUCLIDEAN) -> Domain:
    return Domain("ball", point(center), radius, space)


def cube(center, side, space: Space = Space.EUCLIDEAN) -> Domain:
    return Domain("cube", point(center), side, space)


@dataclass(frozen=True)
class WeightedAtoms:
    """Finite atomic measure: positions (n, d) with nonnegative masses (n,)."""

    positions: np.ndarray
    masses: np.ndarray
    space: Space = Space.EUCLIDEAN
    total_mass: float = field(init=False)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.size == 0:
            pos = pos.reshape(0, max(1, pos.shape[-1] if pos.ndim == 2 else 1))
        w = np.asarray(self.masses, dtype=float).reshape(-1)
        if pos.shape[0] != w.shape[0]:
            raise ValueError("positions and masses must have matching length")
        if not np.all(np.isfinite(pos)):
            raise ValueError("atom positions must be finite")
        if not (np.all(np.isfinite(w)) and np.all(w >= 0)):
            raise ValueError("atom masses must be finite and nonnegative")
        if self.space is Space.TORUS:
            pos = canonicalize(pos)
        pos.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "masses", w)
        object.__setattr__(self, "total_mass", float(np.sum(w)))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def scaled(self, factor: float) -> "WeightedAtoms":
        """Same atoms with all masses multiplied by ``factor`` >= 0."""
        if factor < 0:
            raise ValueError("mass scale factor must be nonnegative")
        return WeightedAtoms(self.positions, self.masses * factor, self.space)

    def drop_zero_mass(self, tol: float = 0.0) -> "WeightedAtoms":
        keep = self.masses > tol
        return WeightedAtoms(self.positions[keep], self.masses[keep], self.space)


def empty_atoms(dim: int, space: Space = Space.EUCLIDEAN) -> WeightedAtoms:
    return WeightedAtoms(np.zeros((0, dim)), np.zeros(0), space)


def dilate_measure(mu: WeightedAtoms, rho: float) -> WeightedAtoms:
    """Push forward by x -> rho * x; masses (hence total mass) unchanged."""
    if mu.space is not Space.EUCLIDEAN:
        raise ValueError("dilation is defined for Euclidean measures only")
    if rho <= 0:
        raise ValueError("dilation factor must be positive")
    return WeightedAtoms(mu.positions * rho, mu.masses, mu.space)


def translate_measure(mu: WeightedAtoms, x) -> WeightedAtoms:
    """Push forward by y -> y + x; torus positions re-canonicalize."""
    shift = point(x)
    if shift.size != mu.dim and len(mu) > 0:
        raise ValueError("dimension mismatch")
    return WeightedAtoms(mu.positions + shift, mu.masses, mu.space)


def restrict_measure(mu: WeightedAtoms, omega: Domain) -> WeightedAtoms:
    """Keep exactly the atoms lying in omega (closed membership)."""
    if mu.space is not omega.space:
        raise ValueError("space mismatch between measure and domain")
    if len(mu) == 0:
        return mu
    keep = omega.contains(mu.positions)
    return WeightedAtoms(mu.positions[keep], mu.masses[keep], mu.space)


def uniform_discretization(
    omega: Domain, n_per_axis: int, with_report: bool = False
):
    """Midpoint-grid stand-in for the uniform measure on omega.

    Cell centers inside omega carry mass = cell volume; the total is then
    rescaled to exactly |omega| (a ball's grid never tiles it exactly and the
    transport cost to a mismatched total mass would be infinite).
    """
    if n_per_axis < 1:
        raise ValueError("n_per_axis must be >= 1")
    d = omega.dim
    extent = omega.size if omega.shape == "cube" else 2.0 * omega.size
    step = extent / n_per_axis
    offsets_1d = (np.arange(n_per_axis) + 0.5) * step - extent / 2.0
    grids = np.meshgrid(*([offsets_1d] * d), indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=-1) + omega.center
    if omega.space is Space.TORUS:
        centers = canonicalize(centers)
    keep = omega.contains(centers)
    centers = centers[keep]
    cell_volume = step**d
    masses = np.full(centers.shape[0], cell_volume)
    covered = float(np.sum(masses))
    target = omega.volume()
    deficit = target - covered
    if covered > 0:
        masses = masses * (target / covered)
    atoms = WeightedAtoms(centers, masses, omega.space)
    if with_report:
        report = {
            "cell_volume": cell_volume,
            "cell_diameter": step * np.sqrt(d),
            "covered_volume_deficit": deficit,
            "n_cells": int(centers.shape[0]),
        }
        return atoms, report
    return atoms
