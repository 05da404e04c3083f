"""Numpy fallback kernels: vectorized across paths, one python loop over steps.

Step-size policy shared by both backends: a path at signed boundary gap g
from the event surface takes a Gaussian step of per-coordinate sigma
max(sqrt(dt_base), step_frac * g), so far-field motion is accelerated while
the law stays exactly Brownian (Gaussian increments of the chosen variance).
Crossings missed between endpoints are recovered by the half-space bridge
correction exp(-2ab/dt).

Status codes: 0 = hit/exit detected, 1 = censored at t_max, 2 = escaped
beyond the truncation radius.
"""

from __future__ import annotations

import numpy as np

STATUS_HIT = 0
STATUS_CENSORED = 1
STATUS_ESCAPED = 2

SHAPE_BALL = 0
SHAPE_CUBE = 1


def _wrap(delta):
    return delta - np.floor(delta + 0.5)


def _region_gap(offsets, shape_code, size):
    """Distance to the target region (0 inside): ball radius / cube side."""
    if shape_code == SHAPE_BALL:
        return np.linalg.norm(offsets, axis=-1) - size
    half = size / 2.0
    out = np.maximum(np.abs(offsets) - half, 0.0)
    return np.linalg.norm(out, axis=-1)


def _project_to_boundary(offsets, shape_code, size):
    if shape_code == SHAPE_BALL:
        norms = np.linalg.norm(offsets, axis=-1, keepdims=True)
        norms = np.where(norms == 0, 1.0, norms)
        return offsets * (size / norms)
    half = size / 2.0
    return np.clip(offsets, -half, half)


def _ball_entry_fraction(r0, delta, radius):
    """Smallest s in [0,1] with |r0 + s delta| = radius (endpoint inside)."""
    aa = np.sum(delta * delta, axis=-1)
    bb = 2.0 * np.sum(r0 * delta, axis=-1)
    cc = np.sum(r0 * r0, axis=-1) - radius * radius
    disc = np.maximum(bb * bb - 4.0 * aa * cc, 0.0)
    aa = np.where(aa == 0, 1.0, aa)
    s = (-bb - np.sqrt(disc)) / (2.0 * aa)
    return np.clip(s, 0.0, 1.0)


def first_hit_batch(
    x0,
    center,
    size,
    shape_code,
    torus,
    t_max,
    dt_base,
    escape_radius,
    bridge,
    step_frac,
    rng,
    max_steps=100_000_000,
):
    """First hitting of a ball/cube target for a batch of Brownian paths.

    Returns dict with status, t_event, hit_pos (nan where no hit), end_pos.
    Paths starting inside the target report an immediate hit at t = 0.
    """
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[None, :]
    n, d = x.shape
    center = np.asarray(center, dtype=float)
    status = np.full(n, -1, dtype=np.int8)
    t = np.zeros(n)
    t_event = np.full(n, np.nan)
    hit_pos = np.full((n, d), np.nan)
    end_pos = x.copy()

    offs = x - center
    if torus:
        offs = _wrap(offs)
    gap0 = _region_gap(offs, shape_code, size)
    inside0 = gap0 <= 0
    status[inside0] = STATUS_HIT
    t_event[inside0] = 0.0
    hit_pos[inside0] = x[inside0]

    active = np.flatnonzero(status < 0)
    pos = x[active].copy()
    t_act = t[active].copy()
    sqrt_dt_base = np.sqrt(dt_base)
    has_escape = np.isfinite(escape_radius)
    steps = 0
    while active.size and steps < max_steps:
        steps += 1
        r0 = pos - center
        if torus:
            r0 = _wrap(r0)
        g0 = _region_gap(r0, shape_code, size)
        # keep steps fine near both event surfaces (target and escape sphere)
        surface_gap = g0
        if has_escape:
            e0 = escape_radius - np.linalg.norm(pos - center, axis=-1)
            surface_gap = np.minimum(g0, np.maximum(e0, 0.0))
        sigma = np.maximum(sqrt_dt_base, step_frac * surface_gap)
        dt = sigma * sigma
        if np.isfinite(t_max):
            dt = np.minimum(dt, t_max - t_act)
            sigma = np.sqrt(dt)
        z = rng.standard_normal((active.size, d))
        delta = sigma[:, None] * z
        r1 = r0 + delta
        g1 = _region_gap(r1, shape_code, size)
        u = rng.random(active.size) if bridge else None
        u_esc = rng.random(active.size) if (bridge and has_escape) else None
        t_new = t_act + dt

        hit_now = g1 <= 0
        if bridge:
            both_out = (~hit_now) & (g0 > 0) & (g1 > 0)
            p_cross = np.zeros(active.size)
            with np.errstate(over="ignore", divide="ignore"):
                p_cross[both_out] = np.exp(
                    -2.0 * g0[both_out] * g1[both_out] / dt[both_out]
                )
            bridge_hit = both_out & (u < p_cross)
        else:
            bridge_hit = np.zeros(active.size, dtype=bool)

        # event bookkeeping on the active view
        any_hit = hit_now | bridge_hit
        if np.any(any_hit):
            idx = np.flatnonzero(any_hit)
            s = np.empty(idx.size)
            endpoint = hit_now[idx]
            if shape_code == SHAPE_BALL:
                s_entry = _ball_entry_fraction(r0[idx], delta[idx], size)
            else:
                # cube entry fraction: bisection is overkill; use gap ratio
                s_entry = g0[idx] / np.maximum(g0[idx] + np.abs(g1[idx]), 1e-300)
            s_bridge = g0[idx] / np.maximum(g0[idx] + g1[idx], 1e-300)
            s = np.where(endpoint, s_entry, s_bridge)
            r_cross = r0[idx] + s[:, None] * delta[idx]
            r_surf = _project_to_boundary(r_cross, shape_code, size)
            pts = center + r_surf
            if torus:
                pts = pts - np.floor(pts + 0.5)
            rows = active[idx]
            status[rows] = STATUS_HIT
            t_event[rows] = t_act[idx] + s * dt[idx]
            hit_pos[rows] = pts
            end_pos[rows] = pts

        survivors = ~any_hit
        new_pos = pos + delta
        if torus:
            new_pos = new_pos - np.floor(new_pos + 0.5)
        if has_escape:
            dist_center = np.linalg.norm(new_pos - center, axis=-1)
            escaped = survivors & (dist_center >= escape_radius)
            if bridge:
                e1 = escape_radius - dist_center
                both_in = survivors & ~escaped & (e0 > 0) & (e1 > 0)
                p_esc = np.zeros(active.size)
                with np.errstate(over="ignore"):
                    p_esc[both_in] = np.exp(
                        -2.0 * e0[both_in] * e1[both_in] / dt[both_in]
                    )
                escaped |= both_in & (u_esc < p_esc)
            if np.any(escaped):
                idx = np.flatnonzero(escaped)
                rows = active[idx]
                status[rows] = STATUS_ESCAPED
                t_event[rows] = t_new[idx]
                end_pos[rows] = new_pos[idx]
                survivors &= ~escaped
        if np.isfinite(t_max):
            timed_out = survivors & (t_new >= t_max * (1 - 1e-15))
            if np.any(timed_out):
                idx = np.flatnonzero(timed_out)
                rows = active[idx]
                status[rows] = STATUS_CENSORED
                t_event[rows] = t_max
                end_pos[rows] = new_pos[idx]
                survivors &= ~timed_out

        keep = np.flatnonzero(survivors)
        pos = new_pos[keep]
        t_act = t_new[keep]
        active = active[keep]

    if active.size:
        status[active] = STATUS_CENSORED
        t_event[active] = t_act
        end_pos[active] = pos
    return {
        "status": status,
        "t_event": t_event,
        "hit_pos": hit_pos,
        "end_pos": end_pos,
    }


def exit_ball_batch(x0, center, radius, torus, t_max, dt_base, bridge, step_frac, rng,
                    max_steps=100_000_000):
    """First exit from a ball for paths started inside it."""
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[None, :]
    n, d = x.shape
    center = np.asarray(center, dtype=float)
    status = np.full(n, -1, dtype=np.int8)
    t_event = np.full(n, np.nan)
    exit_pos = np.full((n, d), np.nan)
    end_pos = x.copy()
    active = np.arange(n)
    pos = x.copy()
    t_act = np.zeros(n)
    sqrt_dt_base = np.sqrt(dt_base)
    steps = 0
    while active.size and steps < max_steps:
        steps += 1
        r0 = pos - center
        if torus:
            r0 = _wrap(r0)
        inner_gap0 = radius - np.linalg.norm(r0, axis=-1)
        sigma = np.maximum(sqrt_dt_base, step_frac * inner_gap0)
        dt = sigma * sigma
        if np.isfinite(t_max):
            dt = np.minimum(dt, t_max - t_act)
            sigma = np.sqrt(dt)
        z = rng.standard_normal((active.size, d))
        delta = sigma[:, None] * z
        r1 = r0 + delta
        norm1 = np.linalg.norm(r1, axis=-1)
        inner_gap1 = radius - norm1
        u = rng.random(active.size) if bridge else None
        t_new = t_act + dt

        out_now = inner_gap1 <= 0
        if bridge:
            both_in = (~out_now) & (inner_gap0 > 0) & (inner_gap1 > 0)
            p_cross = np.zeros(active.size)
            with np.errstate(over="ignore"):
                p_cross[both_in] = np.exp(
                    -2.0 * inner_gap0[both_in] * inner_gap1[both_in] / dt[both_in]
                )
            bridge_out = both_in & (u < p_cross)
        else:
            bridge_out = np.zeros(active.size, dtype=bool)
        any_out = out_now | bridge_out
        if np.any(any_out):
            idx = np.flatnonzero(any_out)
            endpoint = out_now[idx]
            aa = np.sum(delta[idx] * delta[idx], axis=-1)
            bb = 2.0 * np.sum(r0[idx] * delta[idx], axis=-1)
            cc = np.sum(r0[idx] * r0[idx], axis=-1) - radius * radius
            disc = np.maximum(bb * bb - 4 * aa * cc, 0.0)
            aa = np.where(aa == 0, 1.0, aa)
            s_exit = np.clip((-bb + np.sqrt(disc)) / (2 * aa), 0.0, 1.0)
            s_bridge = inner_gap0[idx] / np.maximum(
                inner_gap0[idx] + inner_gap1[idx], 1e-300
            )
            s = np.where(endpoint, s_exit, s_bridge)
            r_cross = r0[idx] + s[:, None] * delta[idx]
            norms = np.linalg.norm(r_cross, axis=-1, keepdims=True)
            norms = np.where(norms == 0, 1.0, norms)
            pts = center + r_cross * (radius / norms)
            if torus:
                pts = pts - np.floor(pts + 0.5)
            rows = active[idx]
            status[rows] = STATUS_HIT
            t_event[rows] = t_act[idx] + s * dt[idx]
            exit_pos[rows] = pts
            end_pos[rows] = pts
        survivors = ~any_out
        new_pos = pos + delta
        if torus:
            new_pos = new_pos - np.floor(new_pos + 0.5)
        if np.isfinite(t_max):
            timed_out = survivors & (t_new >= t_max * (1 - 1e-15))
            if np.any(timed_out):
                idx = np.flatnonzero(timed_out)
                rows = active[idx]
                status[rows] = STATUS_CENSORED
                t_event[rows] = t_max
                end_pos[rows] = new_pos[idx]
                survivors &= ~timed_out
        keep = np.flatnonzero(survivors)
        pos = new_pos[keep]
        t_act = t_new[keep]
        active = active[keep]
    if active.size:
        status[active] = STATUS_CENSORED
        t_event[active] = t_act
        end_pos[active] = pos
    return {
        "status": status,
        "t_event": t_event,
        "exit_pos": exit_pos,
        "end_pos": end_pos,
    }


def transient_occupation_batch(
    x0,
    center,
    size,
    shape_code,
    dt,
    escape_radius,
    step_frac,
    atom_stride,
    collect_atoms,
    rng,
    max_steps_per_path=2_000_000,
):
    """Occupation of a Euclidean domain by transient paths run to escape.

    Each fine step inside the domain contributes dt of occupation; every
    ``atom_stride``-th inside-step emits an atom carrying the mass
    accumulated since the previous emission, and the remainder is flushed at
    path end, so atom masses sum exactly to the per-path occupation.
    """
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[None, :]
    n, d = x.shape
    center = np.asarray(center, dtype=float)
    mass = np.zeros(n)
    censored = np.zeros(n, dtype=bool)
    atoms_pos = []
    atoms_mass = []
    atoms_path = []
    pending_mass = np.zeros(n)
    pending_count = np.zeros(n, dtype=np.int64)
    last_inside = np.zeros((n, d))
    has_pending = np.zeros(n, dtype=bool)

    active = np.arange(n)
    pos = x.copy()
    nsteps = np.zeros(n, dtype=np.int64)
    sqrt_dt = np.sqrt(dt)
    while active.size:
        r0 = pos - center
        g0 = _region_gap(r0, shape_code, size)
        sigma = np.maximum(sqrt_dt, step_frac * g0)
        z = rng.standard_normal((active.size, d))
        new_pos = pos + sigma[:, None] * z
        r1 = new_pos - center
        g1 = _region_gap(r1, shape_code, size)
        step_dt = sigma * sigma

        inside = g1 <= 0
        if np.any(inside):
            rows = active[inside]
            mass[rows] += step_dt[inside]
            pending_mass[rows] += step_dt[inside]
            pending_count[rows] += 1
            last_inside[rows] = new_pos[inside]
            has_pending[rows] = True
            if collect_atoms:
                emit = pending_count[rows] >= atom_stride
                if np.any(emit):
                    er = rows[emit]
                    atoms_pos.append(new_pos[inside][emit])
                    atoms_mass.append(pending_mass[er])
                    atoms_path.append(er)
                    pending_mass[er] = 0.0
                    pending_count[er] = 0
                    has_pending[er] = False

        nsteps[active] += 1
        dist_center = np.linalg.norm(r1, axis=-1)
        done = dist_center >= escape_radius
        over = nsteps[active] >= max_steps_per_path
        censored[active[over & ~done]] = True
        done |= over
        keep = np.flatnonzero(~done)
        pos = new_pos[keep]
        active = active[keep]

    if collect_atoms:
        flush = np.flatnonzero(has_pending & (pending_mass > 0))
        if flush.size:
            atoms_pos.append(last_inside[flush])
            atoms_mass.append(pending_mass[flush])
            atoms_path.append(flush)
        if atoms_pos:
            atoms_pos = np.concatenate(atoms_pos, axis=0)
            atoms_mass = np.concatenate(atoms_mass)
            atoms_path = np.concatenate(atoms_path)
        else:
            atoms_pos = np.zeros((0, d))
            atoms_mass = np.zeros(0)
            atoms_path = np.zeros(0, dtype=np.int64)
    else:
        atoms_pos = np.zeros((0, d))
        atoms_mass = np.zeros(0)
        atoms_path = np.zeros(0, dtype=np.int64)
    return {
        "mass": mass,
        "atoms_pos": atoms_pos,
        "atoms_mass": atoms_mass,
        "atoms_path": atoms_path,
        "n_censored": int(np.count_nonzero(censored)),
    }


def iterated_hits_batch(x0, ell, big_l, rho, dt_base, k_max, bridge, step_frac, rng,
                        max_steps=100_000_000):
    """Count successive (hit D_ell, exit D_L) excursions completed by rho.

    Torus geometry, target balls centred at the origin.  Returns the number
    of ell-hits with hitting time <= rho for each path (capped at k_max).
    """
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[None, :]
    n, d = x.shape
    counts = np.zeros(n, dtype=np.int64)
    phase = np.zeros(n, dtype=np.int8)  # 0: seeking D_ell, 1: seeking exit of D_L
    t = np.zeros(n)
    # paths starting inside D_ell hit at time 0+, which the caller may discard
    start_gap = _region_gap(_wrap(x), SHAPE_BALL, ell)
    inside0 = start_gap <= 0
    counts[inside0] += 1
    phase[inside0] = 1

    active = np.arange(n)
    pos = x.copy()
    sqrt_dt_base = np.sqrt(dt_base)
    steps = 0
    while active.size and steps < max_steps:
        steps += 1
        r0 = _wrap(pos)
        dist0 = np.linalg.norm(r0, axis=-1)
        ph = phase[active]
        seeking = ph == 0
        gap0 = np.where(seeking, dist0 - ell, np.maximum(big_l - dist0, 0.0))
        sigma = np.maximum(sqrt_dt_base, step_frac * gap0)
        dt = sigma * sigma
        dt = np.minimum(dt, np.maximum(rho - t[active], dt_base))
        sigma = np.sqrt(dt)
        z = rng.standard_normal((active.size, d))
        delta = sigma[:, None] * z
        r1 = r0 + delta
        dist1 = np.linalg.norm(r1, axis=-1)
        u = rng.random(active.size) if bridge else None
        t_new = t[active] + dt

        # phase 0 events: entering D_ell before rho
        hit_end = seeking & (dist1 <= ell)
        if bridge:
            both_out = seeking & ~hit_end & (dist0 > ell) & (dist1 > ell)
            p = np.zeros(active.size)
            with np.errstate(over="ignore"):
                go = both_out
                p[go] = np.exp(-2.0 * (dist0[go] - ell) * (dist1[go] - ell) / dt[go])
            hit_bridge = both_out & (u < p)
        else:
            hit_bridge = np.zeros(active.size, dtype=bool)
        hits = hit_end | hit_bridge
        if np.any(hits):
            idx = np.flatnonzero(hits)
            s = np.where(
                hit_end[idx],
                _ball_entry_fraction(r0[idx], delta[idx], ell),
                (dist0[idx] - ell)
                / np.maximum((dist0[idx] - ell) + (dist1[idx] - ell), 1e-300),
            )
            t_hit = t[active[idx]] + s * dt[idx]
            ok = t_hit <= rho
            rows = active[idx[ok]]
            counts[rows] += 1
            phase[rows] = 1
            # paths that "hit" after rho are finished
            overshoot = active[idx[~ok]]
            phase[overshoot] = -1

        # phase 1 events: exiting D_L
        exits = (ph == 1) & (dist1 > big_l)
        phase[active[exits]] = 0

        t[active] = t_new
        pos = pos + delta
        pos = pos - np.floor(pos + 0.5)

        done = (t[active] >= rho) | (phase[active] < 0) | (counts[active] >= k_max)
        keep = np.flatnonzero(~done)
        pos = pos[keep]
        active = active[keep]
    return counts


def sinkhorn_stage(C, loga, logb, f, g, eps, max_iter, tol):
    """Run log-domain Sinkhorn updates at one epsilon until tol or budget.

    Potentials parametrize the plan pi = exp((f+g-C)/eps + loga + logb);
    tol bounds the L1 row-marginal violation (masses are normalized).
    """
    f = f.copy()
    g = g.copy()
    a = np.exp(loga)
    violation = np.inf
    it = 0
    check_every = 5
    while it < max_iter:
        it += 1
        m = (g[None, :] - C) / eps + logb[None, :]
        mmax = m.max(axis=1)
        f = -eps * (np.log(np.sum(np.exp(m - mmax[:, None]), axis=1)) + mmax)
        m = (f[:, None] - C) / eps + loga[:, None]
        mmax = m.max(axis=0)
        g = -eps * (np.log(np.sum(np.exp(m - mmax[None, :]), axis=0)) + mmax)
        if it % check_every == 0 or it == max_iter:
            logpi = (f[:, None] + g[None, :] - C) / eps + loga[:, None] + logb[None, :]
            row = np.exp(logpi).sum(axis=1)
            violation = float(np.abs(row - a).sum())
            if violation <= tol:
                break
    return f, g, violation, it
