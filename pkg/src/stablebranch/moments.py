"""Moment formulas for the branching field and its occupation time.

Criticality makes the mean field Lebesgue at every time, so first
moments are exact one-liners.  Second moments close in terms of the
migration semigroup and the lifetime renewal function: with

    G(u) = <phi . S_u psi, Lambda>

the stationary pair correlation at time lag u,

    Cov(<phi, X_s>, <psi, X_t>) = G(t - s) + Int_{(0,s]} G(s + t - 2r) dU(r)

for 0 <= s <= t; the single-tree second moment has the same renewal
structure run from a point, and the occupation-time variance is the
double time integral of the covariance kernel.

G itself is evaluated as a one-dimensional radial Fourier integral,
using the closed-form transforms of the test functions; unlike a
real-space product quadrature this stays uniformly accurate down to
u -> 0, where the transition density degenerates to a point mass.  A
real-space route is kept alongside as an independent cross-check.
Periodic images of the test functions can be summed into G so the same
formulas serve as oracles for torus simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError, RegimeError
from .occupation import TestFunction, lebesgue_integral
from .renewal import RenewalTable
from .stable_motion import (
    StableKernel,
    _check_tail,
    _default_nodes,
    _gl_rule,
    _panel_nodes,
    semigroup_apply,
    support_quadrature,
    transition_density_radial,
)

_LOG_TRUNC = math.log(1e12)


def occupation_mean(phi: TestFunction, t: float) -> float:
    """E<phi, J_t> = <phi, Lambda> * t, exact under criticality."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    return lebesgue_integral(phi) * t


def _angular_factor(dim: int, z) -> np.ndarray:
    """Spherical average of exp(i xi . w) over |xi|=1 at |w| = z."""
    z = np.asarray(z, dtype=float)
    if dim == 1:
        return np.cos(z)
    nu = dim / 2.0 - 1.0
    out = np.ones_like(z)
    big = z >= 1e-6
    zb = z[big]
    out[big] = special.gamma(dim / 2.0) * (2.0 / zb) ** nu * special.jv(nu, zb)
    return out


def _offset_vectors(phi, psi, torus_half_side, n_images) -> np.ndarray:
    base = np.asarray(psi.center, dtype=float) - np.asarray(phi.center, dtype=float)
    if torus_half_side is None:
        return base[None, :]
    period = 2.0 * torus_half_side
    shifts = np.arange(-n_images, n_images + 1) * period
    grids = np.meshgrid(*([shifts] * base.size), indexing="ij")
    lattice = np.stack([g.ravel() for g in grids], axis=-1)
    return base[None, :] + lattice


def _radial_profile(tf: TestFunction):
    if tf.shape == "indicator":
        return lambda s: np.where(s <= tf.radius, 1.0, 0.0)
    r2 = tf.radius**2
    return lambda s: np.where(
        s <= tf.radius, np.clip(1.0 - s * s / r2, 0.0, None) ** 2, 0.0
    )


def _overlap_integral(phi: TestFunction, psi: TestFunction, delta: float,
                      dim: int) -> float:
    """Int phi(x) psi(x) dx for centers a distance ``delta`` apart."""
    r1, r2 = phi.radius, psi.radius
    if delta >= r1 + r2:
        return 0.0
    f1, f2 = _radial_profile(phi), _radial_profile(psi)
    x, w = _gl_rule(128)
    if delta == 0.0:
        hi = min(r1, r2)
        s = hi / 2.0 * (x + 1.0)
        ws = w * hi / 2.0
        omega = 2.0 * np.pi ** (dim / 2.0) / special.gamma(dim / 2.0)
        return float(omega * np.sum(ws * f1(s) * f2(s) * s ** (dim - 1)))
    lo, hi = max(-r1, delta - r2), min(r1, delta + r2)
    if dim == 1:
        z = (hi + lo) / 2.0 + (hi - lo) / 2.0 * x
        wz = w * (hi - lo) / 2.0
        return float(np.sum(wz * f1(np.abs(z)) * f2(np.abs(z - delta))))
    # Reduce to (axis, transverse-radius) coordinates; split where the
    # active transverse bound switches between the two balls.
    cross = (r1**2 - r2**2 + delta**2) / (2.0 * delta)
    edges = sorted({lo, hi} | ({cross} if lo < cross < hi else set()))
    omega = 2.0 * np.pi ** ((dim - 1) / 2.0) / special.gamma((dim - 1) / 2.0)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        z = (b + a) / 2.0 + (b - a) / 2.0 * x
        wz = w * (b - a) / 2.0
        rho_max = np.sqrt(
            np.clip(np.minimum(r1**2 - z**2, r2**2 - (z - delta) ** 2), 0.0, None)
        )
        rho = rho_max[:, None] / 2.0 * (x[None, :] + 1.0)
        wr = rho_max[:, None] / 2.0 * w[None, :]
        vals = (
            f1(np.sqrt(z[:, None] ** 2 + rho**2))
            * f2(np.sqrt((z[:, None] - delta) ** 2 + rho**2))
            * rho ** (dim - 2)
        )
        total += float(np.sum(wz * np.sum(wr * vals, axis=1)))
    return omega * total


def pair_correlation(kernel: StableKernel, phi: TestFunction, psi: TestFunction,
                     u: float, *, torus_half_side: float | None = None,
                     n_images: int = 1, tail_tol: float = 1e-6) -> float:
    """Stationary pair correlation G(u) = <phi . S_u psi, Lambda>.

    With ``torus_half_side`` set, periodic images of ``psi`` within
    ``n_images`` lattice shells are summed in, giving the analogous
    quantity for the dynamics wrapped on the torus [-L, L)^d.
    """
    if u < 0.0:
        raise ValueError("time lag must be nonnegative")
    d = kernel.dim
    vecs = _offset_vectors(phi, psi, torus_half_side, n_images)
    dists = np.linalg.norm(vecs, axis=1)
    if u == 0.0:
        return float(sum(_overlap_integral(phi, psi, dl, d) for dl in dists))
    alpha = kernel.alpha
    k_max = 1.25 * (_LOG_TRUNC / u) ** (1.0 / alpha)
    osc = phi.radius + psi.radius + float(dists.max())
    nodes, weights = _panel_nodes(float(k_max), float(2.0 * np.pi / osc))
    fprod = phi.fourier_profile(nodes) * psi.fourier_profile(nodes)
    ang = _angular_factor(d, nodes[None, :] * dists[:, None]).sum(axis=0)
    integ = fprod * ang * np.exp(-u * nodes**alpha) * nodes ** (d - 1)
    total = weights @ integ
    floor = 1e-9 * lebesgue_integral(phi) * lebesgue_integral(psi)
    _check_tail(integ, weights, max(abs(float(total)), floor), tail_tol)
    omega = 2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0)
    return float((2.0 * np.pi) ** (-d) * omega * total)


def pair_correlation_realspace(kernel: StableKernel, phi: TestFunction,
                               psi: TestFunction, u: float, *,
                               nodes_per_dim: int | None = None) -> float:
    """G(u) by Simpson quadrature of phi . (S_u psi) over phi's support.

    Independent cross-check route for `pair_correlation`; loses accuracy
    as u -> 0 when the transition density outruns the grid.
    """
    if u < 0.0:
        raise ValueError("time lag must be nonnegative")
    d = kernel.dim
    if u == 0.0:
        base = np.linalg.norm(
            np.asarray(psi.center, float) - np.asarray(phi.center, float)
        )
        return _overlap_integral(phi, psi, float(base), d)
    n = nodes_per_dim or _default_nodes(d)
    pts, w = support_quadrature(phi.center, phi.radius, d, n)
    return float(w @ (phi.evaluate(pts) * semigroup_apply(kernel, psi, u, pts)))


@dataclass(frozen=True)
class CovarianceSpec:
    """Inputs of the field covariance Cov(<phi, X_s>, <psi, X_t>)."""

    kernel: StableKernel
    table: RenewalTable
    phi: TestFunction
    psi: TestFunction
    s: float
    t: float

    def __post_init__(self):
        if not 0.0 <= self.s <= self.t:
            raise ValueError("need 0 <= s <= t")
        if self.t > self.table.horizon + 1e-12:
            raise ValueError(
                f"t={self.t} exceeds the renewal table horizon {self.table.horizon}"
            )


def field_covariance(spec: CovarianceSpec, *, torus_half_side: float | None = None,
                     n_images: int = 1, r_points: int = 129) -> float:
    """Cov(<phi, X_s>, <psi, X_t>) for the stationary branching field.

    Equals G(t-s) plus the renewal-smoothed correlation picked up by
    shared branching ancestry on (0, s]; the renewal measure is applied
    by a trapezoidal Stieltjes rule on ``r_points`` nodes with U
    interpolated from the table.
    """
    k, phi, psi, s, t = spec.kernel, spec.phi, spec.psi, spec.s, spec.t

    def g(u):
        return pair_correlation(k, phi, psi, u, torus_half_side=torus_half_side,
                                n_images=n_images)

    out = g(t - s)
    if s == 0.0:
        return float(out)
    rs = np.linspace(0.0, s, r_points)
    uvals = spec.table.value(rs)
    gvals = np.array([g(s + t - 2.0 * r) for r in rs])
    out += float(np.sum(0.5 * (gvals[1:] + gvals[:-1]) * np.diff(uvals)))
    return float(out)


def tree_second_moment(kernel: StableKernel, table: RenewalTable, x0, s: float,
                       t: float, phi: TestFunction, psi: TestFunction, *,
                       r_points: int = 33, nodes_per_dim: int | None = None,
                       margin: float = 4.0) -> float:
    """E_x[<phi, Z_s> <psi, Z_t>] for the tree of one ancestor at ``x0``.

    First term: density-weighted quadrature of phi . (S_{t-s} psi) at
    time s from x0.  Second term: Int_{(0,s]} (S_r g_r)(x0) dU(r) with
    g_r = (S_{s-r} phi)(S_{t-r} psi), evaluated on a tensor grid over
    the joint support inflated by ``margin * t**(1/alpha)`` (the
    migration scale), with the r -> 0 limit (S_s phi)(S_t psi)(x0)
    anchoring the Stieltjes rule.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (kernel.dim,):
        raise ValueError(f"x0 must have shape ({kernel.dim},)")
    if not 0.0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    if s > table.horizon + 1e-12:
        raise ValueError(f"s={s} exceeds the renewal table horizon {table.horizon}")
    if s == 0.0:
        return float(phi.evaluate(x0[None, :])[0] * semigroup_apply(kernel, psi, t, x0))
    d = kernel.dim
    n = nodes_per_dim or _default_nodes(d)

    pts, w = support_quadrature(phi.center, phi.radius, d, n)
    inner = psi.evaluate(pts) if t == s else semigroup_apply(kernel, psi, t - s, pts)
    fy = phi.evaluate(pts) * inner * w
    rad = np.linalg.norm(pts - x0[None, :], axis=1)
    out = float(transition_density_radial(kernel, s, rad) @ fy)

    c1 = np.asarray(phi.center, dtype=float)
    c2 = np.asarray(psi.center, dtype=float)
    mid = (c1 + c2) / 2.0
    half = float(
        max(np.max(np.abs(c1 - mid)) + phi.radius,
            np.max(np.abs(c2 - mid)) + psi.radius)
        + margin * t ** (1.0 / kernel.alpha)
    )
    zpts, zw = support_quadrature(mid, half, d, n)
    zrad = np.linalg.norm(zpts - x0[None, :], axis=1)
    rs = np.linspace(0.0, s, r_points)
    fvals = np.empty(r_points)
    fvals[0] = float(
        semigroup_apply(kernel, phi, s, x0) * semigroup_apply(kernel, psi, t, x0)
    )
    for j in range(1, r_points):
        r = rs[j]
        g = semigroup_apply(kernel, phi, s - r, zpts) * semigroup_apply(
            kernel, psi, t - r, zpts
        )
        fvals[j] = float(transition_density_radial(kernel, r, zrad) @ (g * zw))
    uvals = table.value(rs)
    out += float(np.sum(0.5 * (fvals[1:] + fvals[:-1]) * np.diff(uvals)))
    return out


def occupation_variance(kernel: StableKernel, table: RenewalTable,
                        phi: TestFunction, horizon: float, *,
                        grid_points: int | None = None,
                        torus_half_side: float | None = None,
                        n_images: int = 1) -> float:
    """Var<phi, J_T> of the stationary field's occupation time.

    Double trapezoid of the covariance kernel C(u, v) over [0, T]^2 on a
    uniform grid.  Every C entry only needs G at integer multiples of
    the grid step, so G is tabulated once; choosing the grid equal to a
    simulation's observation grid makes the result the exact variance of
    the discretized occupation estimator.
    """
    if horizon < 0.0:
        raise ValueError("horizon must be nonnegative")
    if horizon == 0.0:
        return 0.0
    if horizon > table.horizon + 1e-12:
        raise ValueError(
            f"horizon {horizon} exceeds the renewal table horizon {table.horizon}"
        )
    if grid_points is None:
        grid_points = int(min(320, max(8, math.ceil(horizon / 0.25)))) + 1
    m = grid_points - 1
    delta = horizon / m
    gd = np.array([
        pair_correlation(kernel, phi, phi, q * delta,
                         torus_half_side=torus_half_side, n_images=n_images)
        for q in range(2 * m + 1)
    ])
    uu = table.value(np.arange(m + 1) * delta)
    du = np.diff(uu)
    cov = np.empty((m + 1, m + 1))
    for i in range(m + 1):
        js = np.arange(i, m + 1)
        row = gd[js - i].copy()
        if i > 0:
            cw = np.empty(i + 1)
            cw[0] = du[0] / 2.0
            cw[-1] = du[i - 1] / 2.0
            if i > 1:
                cw[1:-1] = 0.5 * (du[: i - 1] + du[1:i])
            idx = (i + js)[None, :] - 2 * np.arange(i + 1)[:, None]
            row += cw @ gd[idx]
        cov[i, i:] = row
        cov[i:, i] = row
    tw = np.full(m + 1, delta)
    tw[[0, -1]] = delta / 2.0
    return float(tw @ cov @ tw)


def decay_exponent_prediction(dim: int, alpha: float, gamma: float | None = None,
                              regime: str | None = None) -> float:
    """Dominant T-exponent of Var(T^{-1} <phi, J_T>) in the validated regimes.

    Heavy-tail lifetimes (tail exponent ``gamma``) require
    alpha*gamma < d < 2*alpha and give max(-2, -1, -d/alpha,
    gamma - d/alpha); finite-mean lifetimes require d > alpha and give
    max(-1, -d/alpha, 1 - d/alpha).  The critical equalities are
    refused: they sit on open boundary cases the implemented
    asymptotics do not cover.
    """
    if regime is None:
        regime = "heavy_tail" if gamma is not None else "finite_mean"
    if regime == "heavy_tail":
        if gamma is None:
            raise ConfigError("heavy_tail prediction requires the tail exponent gamma")
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        if dim == alpha * gamma:
            raise RegimeError(
                "d = alpha*gamma is the interface between local extinction and "
                "local persistence; it is an open boundary case and no decay "
                "prediction is available"
            )
        if dim < alpha * gamma:
            raise RegimeError(
                "d < alpha*gamma is the local-extinction regime; the variance "
                "decay prediction applies only for alpha*gamma < d < 2*alpha"
            )
        if dim >= 2.0 * alpha:
            raise RegimeError(
                "d >= 2*alpha is outside the window alpha*gamma < d < 2*alpha "
                "covered by the heavy-tail decay prediction"
            )
        return max(-2.0, -1.0, -dim / alpha, gamma - dim / alpha)
    if regime == "finite_mean":
        if gamma is not None:
            raise ConfigError("finite_mean prediction takes no tail exponent")
        if dim == alpha:
            raise RegimeError(
                "d = alpha is an open boundary case for finite-mean lifetimes; "
                "no decay prediction is available"
            )
        if dim < alpha:
            raise RegimeError(
                "the finite-mean decay prediction requires transient migration, "
                "d > alpha"
            )
        return max(-1.0, -dim / alpha, 1.0 - dim / alpha)
    raise ConfigError(f"unknown regime {regime!r}")
