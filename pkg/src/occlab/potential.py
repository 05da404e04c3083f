"""Potential theory for Brownian motion with generator Delta/2, d >= 3.

Closed forms: the Green function g(x,y) = c(d) |x-y|^(2-d) with c(d) the
integral of the transition density over time at unit distance, and the ball
capacity Cap(D_r) = r^(d-2)/c(d) from the equilibrium-potential-equals-one
equation at the center.  Everything without a closed form (cubes) goes
through the sweeping identity: start paths from the enclosing ball's
equilibrium measure and condition on hitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from occlab import _kernels
from occlab._kernels import _pure as _codes
from occlab.geometry import Domain, Space, ball as make_ball
from occlab.rng import SeedSpec

_CAP_D1_CACHE: dict[int, float] = {}


def green_constant(d: int) -> float:
    """Green function at unit distance: int_0^inf (2 pi t)^(-d/2) e^(-1/2t) dt."""
    if d < 3:
        raise ValueError("the Green function requires d >= 3 (transient case)")
    return math.gamma(d / 2.0 - 1.0) / (2.0 * math.pi ** (d / 2.0))


def green_function(r: float, d: int) -> float:
    """g at distance r: c(d) * r^(2-d)."""
    if r <= 0:
        raise ValueError("distance must be positive")
    return green_constant(d) * r ** (2.0 - d)


@dataclass(frozen=True)
class CapacityValue:
    """Capacity in length^(d-2) units, closed-form or sweeping-estimated."""

    value: float
    method: str  # "closed_form" | "sweeping"
    ci_halfwidth: float = 0.0
    replicas: int = 0
    truncation_bound: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("capacity must be positive")
        if self.method == "sweeping" and not np.isfinite(self.ci_halfwidth):
            raise ValueError("sweeping estimates need a finite confidence interval")


def capacity_ball(d: int, r: float) -> CapacityValue:
    if r <= 0:
        raise ValueError("radius must be positive")
    return CapacityValue(r ** (d - 2.0) / green_constant(d), "closed_form")


def capacity_unit_ball(d: int) -> float:
    if d not in _CAP_D1_CACHE:
        _CAP_D1_CACHE[d] = capacity_ball(d, 1.0).value
    return _CAP_D1_CACHE[d]


def sample_equilibrium_ball(ball: Domain, seed: SeedSpec, n: int = 1) -> np.ndarray:
    """Uniform points on the sphere boundary (normalized Gaussian directions)."""
    if ball.shape != "ball" or ball.space is not Space.EUCLIDEAN:
        raise ValueError("equilibrium sampling is for Euclidean balls")
    rng = seed.generator()
    return sphere_points(rng, n, ball.dim, ball.center, ball.size)


def sphere_points(rng, n, d, center, radius) -> np.ndarray:
    z = rng.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    # resample the ~0 probability degenerate rows deterministically
    bad = norms[:, 0] == 0
    while np.any(bad):
        z[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        bad = norms[:, 0] == 0
    return np.asarray(center) + radius * z / norms


def estimate_capacity_sweeping(
    target: Domain,
    enclosing_ball: Domain,
    replicas: int,
    dt: float,
    R_max: float,
    seed: SeedSpec,
    chunk: int = 20_000,
):
    """Sweeping estimate Cap(K) ~ hit_fraction * Cap(enclosing ball).

    Paths start from the enclosing sphere's (uniform) equilibrium law and are
    tracked until they hit K or escape R_max; recorded hit points are
    approximately equilibrium-distributed on K.  Returns (CapacityValue,
    hit_points); the truncation bound on the missed hit fraction is
    (circumradius(K)/R_max)^(d-2) per escaped path.
    """
    if target.space is not Space.EUCLIDEAN or enclosing_ball.shape != "ball":
        raise ValueError("sweeping needs Euclidean target and enclosing ball")
    d = target.dim
    if d < 3:
        raise ValueError("sweeping requires d >= 3")
    offset = float(np.linalg.norm(target.center - enclosing_ball.center))
    if offset + target.circumradius() > enclosing_ball.size + 1e-12:
        raise ValueError("target must be contained in the enclosing ball")
    shape_code = _codes.SHAPE_BALL if target.shape == "ball" else _codes.SHAPE_CUBE
    kern = _kernels.backend()
    hits = 0
    escaped = 0
    hit_points = []
    done = 0
    batch_id = 0
    while done < replicas:
        m = min(chunk, replicas - done)
        rng = seed.generator(batch_id)
        x0 = sphere_points(rng, m, d, enclosing_ball.center, enclosing_ball.size)
        out = kern.first_hit_batch(
            x0,
            target.center,
            target.size,
            shape_code,
            False,
            np.inf,
            dt,
            R_max,
            True,
            0.1,
            rng,
        )
        hits += int(np.count_nonzero(out["status"] == _codes.STATUS_HIT))
        escaped += int(np.count_nonzero(out["status"] == _codes.STATUS_ESCAPED))
        hp = out["hit_pos"][out["status"] == _codes.STATUS_HIT]
        if hp.size:
            hit_points.append(hp)
        done += m
        batch_id += 1
    frac = hits / replicas
    cap_ball = capacity_ball(d, enclosing_ball.size).value
    se = math.sqrt(max(frac * (1 - frac), 1e-300) / replicas) * cap_ball
    trunc = (
        (escaped / replicas)
        * (target.circumradius() / R_max) ** (d - 2)
        * cap_ball
    )
    value = frac * cap_ball
    cap = CapacityValue(
        value,
        "sweeping",
        ci_halfwidth=3.0 * se,
        replicas=replicas,
        truncation_bound=trunc,
        extra={"hit_fraction": frac, "enclosing_capacity": cap_ball, "se": se},
    )
    pts = np.concatenate(hit_points, axis=0) if hit_points else np.zeros((0, d))
    return cap, pts


def torus_hitting_prediction(ell: float, rho: float, sigma: float, d: int):
    """Leading-order P(sigma < tau_{D_ell} <= rho) for stationary torus BM.

    Returns dict with the prediction (rho - sigma) * ell^(d-2) * Cap(D_1),
    the magnitude of the error term, and a regime flag: the expansion needs
    rho << ell^(2-d).
    """
    if not (0 <= sigma <= rho):
        raise ValueError("need 0 <= sigma <= rho")
    if not (0 < ell < 0.5):
        raise ValueError("need 0 < ell < 1/2")
    if d < 3:
        raise ValueError("need d >= 3")
    cap1 = capacity_unit_ball(d)
    lead = (rho - sigma) * ell ** (d - 2) * cap1
    err = (rho - sigma) * rho * ell ** (2 * (d - 2)) * abs(math.log(ell)) + ell**d
    regime_ok = rho * ell ** (d - 2) < 0.2
    return {
        "prediction": lead,
        "error_term": err,
        "regime_ok": bool(regime_ok),
        "cap_unit_ball": cap1,
    }


def _sphere_first_coord_cdf(d: int):
    """CDF of (first coordinate / radius) under the uniform sphere law."""
    a = (d - 1) / 2.0

    def cdf(t):
        return stats.beta.cdf((np.asarray(t) + 1.0) / 2.0, a, a)

    return cdf


def validate_torus_hitting(
    ell: float,
    rho: float,
    sigma: float,
    d: int,
    replicas: int,
    dt: float,
    seed: SeedSpec,
    chunk: int = 20_000,
):
    """Monte Carlo check of the small-ball hitting law on the torus.

    Estimates P(sigma < tau <= rho) from a stationary start and tests a hit
    point angular coordinate against the uniform sphere law.  Starts that are
    already inside the ball (tau = 0) do not count as hits in (sigma, rho].
    """
    pred = torus_hitting_prediction(ell, rho, sigma, d)
    kern = _kernels.backend()
    center = np.zeros(d)
    hits = 0
    first_coords = []
    done = 0
    batch_id = 0
    while done < replicas:
        m = min(chunk, replicas - done)
        rng = seed.generator(batch_id)
        x0 = rng.random((m, d)) - 0.5
        out = kern.first_hit_batch(
            x0, center, ell, _codes.SHAPE_BALL, True, rho, dt, np.inf, True, 0.1, rng
        )
        ok = (out["status"] == _codes.STATUS_HIT) & (out["t_event"] > sigma) & (
            out["t_event"] > 0
        )
        hits += int(np.count_nonzero(ok))
        if np.any(ok):
            first_coords.append(out["hit_pos"][ok][:, 0] / ell)
        done += m
        batch_id += 1
    emp = hits / replicas
    se = math.sqrt(max(emp * (1 - emp), 1e-300) / replicas)
    ks_stat = ks_p = float("nan")
    if first_coords:
        coords = np.concatenate(first_coords)
        res = stats.kstest(coords, _sphere_first_coord_cdf(d))
        ks_stat, ks_p = float(res.statistic), float(res.pvalue)
    return {
        "empirical_prob": emp,
        "se": se,
        "ci_halfwidth": 3.0 * se,
        "prediction": pred["prediction"],
        "error_term": pred["error_term"],
        "regime_ok": pred["regime_ok"],
        "replicas": replicas,
        "hit_count": hits,
        "hit_point_ks_stat": ks_stat,
        "hit_point_ks_pvalue": ks_p,
    }


def iterated_hit_frequencies(
    ell: float,
    big_l: float,
    rho: float,
    d: int,
    k_max: int,
    replicas: int,
    dt: float,
    seed: SeedSpec,
    chunk: int = 20_000,
):
    """Empirical P(tau_{k,ell} <= rho) for k = 1..k_max, with 3-SE intervals.

    tau_{k,ell} is the k-th entry of D_ell after an intervening exit of D_L;
    geometric decay in k is the expected signature.
    """
    if not (0 < ell < big_l < 0.5):
        raise ValueError("need 0 < ell < L < 1/2")
    kern = _kernels.backend()
    counts = np.zeros(replicas, dtype=np.int64)
    done = 0
    batch_id = 0
    while done < replicas:
        m = min(chunk, replicas - done)
        rng = seed.generator(batch_id)
        x0 = rng.random((m, d)) - 0.5
        counts[done : done + m] = kern.iterated_hits_batch(
            x0, ell, big_l, rho, dt, k_max, True, 0.1, rng
        )
        done += m
        batch_id += 1
    freqs = []
    for k in range(1, k_max + 1):
        p_k = float(np.mean(counts >= k))
        se = math.sqrt(max(p_k * (1 - p_k), 1e-300) / replicas)
        freqs.append({"k": k, "freq": p_k, "se": se, "ci_halfwidth": 3.0 * se})
    return freqs
