"""Brownian paths on R^d and T^d: sampling, hitting, exits, occupation.

The generator is Delta/2, so increments over a step dt are Gaussian with
variance dt per coordinate.  Torus paths are canonicalized to [-1/2, 1/2)^d
after every step; projecting Gaussian increments mod 1 is exact for the
torus Brownian law at any step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from occlab import _kernels
from occlab._kernels import _pure as _codes
from occlab.geometry import (
    Domain,
    Space,
    WeightedAtoms,
    canonicalize,
    point,
)
from occlab.rng import SeedSpec

DEFAULT_STEP_FRAC = 0.1


@dataclass(frozen=True)
class PathSample:
    """Time-discretized trajectory: positions[k] is the state at t0 + k*dt.

    The final step may be shorter than dt so that the path ends exactly at
    t0 + elapsed; ``last_dt`` records it.
    """

    t0: float
    dt: float
    positions: np.ndarray
    space: Space
    last_dt: float | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[0] < 1:
            raise ValueError("positions must be non-empty")
        if self.dt <= 0 and pos.shape[0] > 1:
            raise ValueError("dt must be positive for multi-point paths")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(
            self, "last_dt", self.dt if self.last_dt is None else float(self.last_dt)
        )

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def elapsed(self) -> float:
        if self.n_steps == 0:
            return 0.0
        return (self.n_steps - 1) * self.dt + self.last_dt

    def step_durations(self) -> np.ndarray:
        if self.n_steps == 0:
            return np.zeros(0)
        durations = np.full(self.n_steps, self.dt)
        durations[-1] = self.last_dt
        return durations


def suggest_dt(target_length_scale: float, resolution: float = 0.1) -> float:
    """Step size keeping per-step displacement ~ resolution * length scale.

    With the default resolution this is dt = (scale/10)^2, which keeps the
    half-space bridge correction bias at O(dt/scale^2) = O(1e-2).
    """
    if target_length_scale <= 0:
        raise ValueError("length scale must be positive")
    return (resolution * target_length_scale) ** 2


def sample_bm_path(x0, T: float, dt: float, space: Space, seed: SeedSpec) -> PathSample:
    """Simulate ceil(T/dt) Gaussian steps; the final partial step is kept."""
    x0 = point(x0)
    if space is Space.TORUS:
        x0 = canonicalize(x0)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return PathSample(0.0, dt, x0[None, :], space)
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_full = int(T // dt)
    remainder = T - n_full * dt
    durations = [dt] * n_full + ([remainder] if remainder > 1e-15 * max(T, dt) else [])
    rng = seed.generator()
    z = rng.standard_normal((len(durations), x0.size))
    steps = z * np.sqrt(np.asarray(durations))[:, None]
    positions = np.empty((len(durations) + 1, x0.size))
    positions[0] = x0
    np.cumsum(steps, axis=0, out=positions[1:])
    positions[1:] += x0
    if space is Space.TORUS:
        positions = canonicalize(positions)
    return PathSample(0.0, dt, positions, space, last_dt=durations[-1])


def heat_kernel_torus(x, y, t: float, lattice_cutoff: int = 8):
    """Torus transition density as a truncated lattice sum of Gaussian images.

    The sum separates per coordinate, so a cutoff K means (2K+1) images per
    axis.  Returns (density, truncation_bound) where the bound sums the
    neglected one-dimensional Gaussian tails.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if lattice_cutoff < 1:
        raise ValueError("lattice cutoff must be >= 1")
    dx = canonicalize(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    shifts = np.arange(-lattice_cutoff, lattice_cutoff + 1)
    # per-coordinate wrapped Gaussian density values
    vals = np.exp(-((dx[..., None] - shifts) ** 2) / (2.0 * t)) / np.sqrt(2 * np.pi * t)
    per_coord = vals.sum(axis=-1)
    density = float(np.prod(per_coord))
    # tail of one coordinate: 2 * sum_{k > K} phi((k - 1/2)/sqrt(t)) bound
    from scipy.stats import norm

    tail1d = 2.0 * norm.sf((lattice_cutoff - 0.5) / np.sqrt(t))
    peak1d = float(np.max(per_coord)) if per_coord.ndim else float(per_coord)
    d = dx.size
    bound = d * tail1d * max(peak1d, 1.0) ** (d - 1)
    return density, float(bound)


def _resolve_ball(ball: Domain):
    if ball.shape != "ball":
        raise ValueError("expected a ball domain")
    return ball.center, ball.size, ball.space is Space.TORUS


def first_hit_ball(
    x0,
    ball: Domain,
    T_max: float,
    dt: float,
    seed: SeedSpec,
    bridge_correction: bool = True,
    escape_radius: float = np.inf,
    step_frac: float = DEFAULT_STEP_FRAC,
):
    """First entry of a ball, or censoring at T_max / the escape radius.

    Returns (hit: (time, point) | None, final_state dict).  Paths that start
    inside hit at time 0.
    """
    center, radius, torus = _resolve_ball(ball)
    x0 = point(x0)
    if torus:
        x0 = canonicalize(x0)
    out = _kernels.backend().first_hit_batch(
        x0[None, :],
        center,
        radius,
        _codes.SHAPE_BALL,
        torus,
        T_max,
        dt,
        escape_radius,
        bridge_correction,
        step_frac,
        seed.generator(),
    )
    final = {
        "status": int(out["status"][0]),
        "t": float(out["t_event"][0]),
        "position": out["end_pos"][0],
    }
    if out["status"][0] == _codes.STATUS_HIT:
        return (float(out["t_event"][0]), out["hit_pos"][0]), final
    return None, final


def first_exit_ball(
    x0,
    ball: Domain,
    dt: float,
    seed: SeedSpec,
    T_max: float = np.inf,
    bridge_correction: bool = True,
    step_frac: float = DEFAULT_STEP_FRAC,
):
    """First exit from a ball containing x0; censored at T_max if given."""
    center, radius, torus = _resolve_ball(ball)
    x0 = point(x0)
    if torus:
        x0 = canonicalize(x0)
    gap = ball.boundary_gap(x0[None, :])[0]
    if gap > 0:
        raise ValueError("x0 must lie inside the ball")
    out = _kernels.backend().exit_ball_batch(
        x0[None, :],
        center,
        radius,
        torus,
        T_max,
        dt,
        bridge_correction,
        step_frac,
        seed.generator(),
    )
    if out["status"][0] == _codes.STATUS_HIT:
        return (float(out["t_event"][0]), out["exit_pos"][0]), False
    return (float(out["t_event"][0]), out["end_pos"][0]), True


def occupation_atoms(path: PathSample, stride: int = 1) -> WeightedAtoms:
    """Riemann-sum occupation measure of a sampled path.

    Every stride-th sampled position becomes an atom of mass dt * stride;
    the final atom absorbs the remainder so the total equals elapsed time.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if path.n_steps == 0:
        raise ValueError("path carries no elapsed time")
    durations = path.step_durations()
    positions = path.positions[1:]
    n = positions.shape[0]
    edges = np.arange(0, n, stride)
    sums = np.add.reduceat(durations, edges)
    atom_positions = positions[np.minimum(edges + stride - 1, n - 1)]
    return WeightedAtoms(atom_positions, sums, path.space)


def occupation_mass_in(path: PathSample, omega: Domain) -> float:
    """Endpoint-rule mass sum dt * 1{position in omega}; exact for the sample."""
    if path.space is not omega.space:
        raise ValueError("space mismatch")
    if path.n_steps == 0:
        return 0.0
    inside = omega.contains(path.positions[1:])
    return float(np.sum(path.step_durations()[inside]))
