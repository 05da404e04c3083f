"""Fourier-side machinery: ball-indicator transform, coefficient tables for
torus measures, double-ball-average smoothing, and the negative-Sobolev
upper-bound surrogate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, jv


def ball_indicator_fourier(xi, ell: float, d: int):
    """Normalized transform of a radius-ell ball indicator at frequency xi.

    Evaluates int_{D_ell} exp(-2 pi i xi . x) dx / |D_ell| through the
    Bessel-function closed form Gamma(d/2+1) (2/z)^{d/2} J_{d/2}(z) with
    z = 2 pi |xi| ell; the value at xi = 0 is 1 by continuity.  Real by
    radial symmetry.
    """
    if ell <= 0:
        raise ValueError("radius must be positive")
    xi = np.asarray(xi, dtype=float)
    r = np.abs(xi) if xi.ndim == 0 else np.linalg.norm(xi, axis=-1)
    z = np.asarray(2.0 * math.pi * ell * r, dtype=float)
    scalar = z.ndim == 0
    vals = _normalized_ball_transform(z.reshape(-1), d).reshape(z.shape)
    return float(vals) if scalar else vals


def _normalized_ball_transform(z: np.ndarray, d: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    nu = d / 2.0
    out = np.empty_like(z)
    small = z < 1e-4
    zs = z[small]
    out[small] = 1.0 - zs**2 / (2 * (d + 2)) + zs**4 / (8 * (d + 2) * (d + 4))
    zl = z[~small]
    if zl.size:
        log_pref = gammaln(nu + 1.0) + nu * (math.log(2.0) - np.log(zl))
        out[~small] = np.exp(log_pref) * jv(nu, zl)
    return out


@dataclass(frozen=True)
class FourierTable:
    """mu_hat(xi) on the integer lattice {-M..M}^d; index (M,..,M) is xi=0."""

    coeffs: np.ndarray
    M: int

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))

    @property
    def d(self) -> int:
        return self.coeffs.ndim

    def freq_norms(self) -> np.ndarray:
        axes = np.meshgrid(
            *([np.arange(-self.M, self.M + 1)] * self.d), indexing="ij"
        )
        return np.sqrt(sum(a.astype(float) ** 2 for a in axes))

    def at_zero(self) -> complex:
        return self.coeffs[(self.M,) * self.d]


def fourier_coefficients(mu, cutoff: int) -> FourierTable:
    """Direct sums mu_hat(xi) = sum_k m_k exp(-2 pi i xi . x_k), |xi|_inf <= M."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    from occlab.geometry import Space

    if mu.space is not Space.TORUS:
        raise ValueError("Fourier coefficients are defined for torus measures")
    M = cutoff
    qs = np.arange(-M, M + 1)
    d = mu.dim
    x = mu.positions
    m = mu.masses
    # separable per-axis phase matrices E_a[q, k] = exp(-2 pi i q x_k[a])
    phases = [np.exp(-2j * np.pi * np.outer(qs, x[:, a])) for a in range(d)]
    if d == 1:
        coeffs = phases[0] @ m
    elif d == 2:
        coeffs = np.einsum("qk,rk,k->qr", phases[0], phases[1], m)
    elif d == 3:
        coeffs = np.empty((qs.size,) * 3, dtype=complex)
        weighted = phases[0] * m[None, :]
        for i in range(qs.size):
            coeffs[i] = (phases[1] * weighted[i][None, :]) @ phases[2].T
    else:
        grids = np.meshgrid(*([qs] * d), indexing="ij")
        xi = np.stack([g.ravel() for g in grids], axis=-1).astype(float)
        coeffs = (np.exp(-2j * np.pi * (xi @ x.T)) @ m).reshape((qs.size,) * d)
    return FourierTable(coeffs, M)


def smoothed_coefficients(table: FourierTable, ell: float) -> FourierTable:
    """Double ball-average multiplier: nu_hat(xi) = h(xi)^2 mu_hat(xi)."""
    if not (0 < ell < 0.5):
        raise ValueError("need 0 < ell < 1/2")
    z = 2.0 * math.pi * ell * table.freq_norms()
    mult = _normalized_ball_transform(z.ravel(), table.d).reshape(z.shape)
    return FourierTable(table.coeffs * mult**2, table.M)


def sobolev_upper_bound(mu, q: float, cutoff: int):
    """Truncated negative-Sobolev L2 surrogate for the distance to uniform.

    sqrt( sum_{0 < |xi|_inf <= M} |mu_hat(xi)|^2 / |2 pi xi|^(2q) ); the zero
    mode is excluded, which centers mu against the uniform measure of equal
    mass.  Returns dict with the partial value and an analytic tail bound
    from |mu_hat| <= total mass (infinite when 2q <= d, where the full norm
    of an atomic measure genuinely diverges).
    """
    if q <= 0:
        raise ValueError("order q must be positive")
    table = mu if isinstance(mu, FourierTable) else fourier_coefficients(mu, cutoff)
    d = table.d
    norms = table.freq_norms()
    mask = norms > 0
    weights = np.zeros_like(norms)
    weights[mask] = (2.0 * np.pi * norms[mask]) ** (-2.0 * q)
    partial = float(np.sqrt(np.sum(np.abs(table.coeffs) ** 2 * weights)))
    mass = float(abs(table.at_zero()))
    if 2 * q > d:
        # integral comparison over |x| > M of |2 pi x|^(-2q)
        surface = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
        tail_sq = mass**2 * surface * (2 * math.pi) ** (-2 * q) * (
            table.M ** (d - 2 * q) / (2 * q - d)
        )
        tail = math.sqrt(tail_sq)
    else:
        tail = math.inf
    return {"value": partial, "tail_bound": tail, "cutoff": table.M}
