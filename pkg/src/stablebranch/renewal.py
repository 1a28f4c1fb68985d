"""Renewal function of a lifetime law.

U(r) = sum_k F^{*k}(r) counts the expected renewals through time r,
including the unit atom at r = 0 (so U(0) = 1).  It solves the
convolution identity U = 1 + F * U, which is discretised here on a
uniform grid with trapezoidal Stieltjes weights and solved by forward
substitution:

    U_n = 1 + sum_{j=1..n} (U_{n-j} + U_{n-j+1})/2 * (F_j - F_{j-1}).

Integrals against the renewal measure deliberately exclude the atom at
zero; callers that need it add the boundary term themselves.  That
convention keeps the second-moment formulas free of double counting at
coincident times.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RenewalTable:
    """Tabulated renewal function on a uniform grid starting at 0."""

    grid: np.ndarray
    values: np.ndarray
    grid_step: float
    law: object
    error_estimate: float = field(default=float("nan"))

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def value(self, r):
        """U(r) by linear interpolation; r may be an array."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > self.horizon * (1.0 + 1e-12)):
            raise ValueError("query outside the tabulated range")
        return np.interp(r, self.grid, self.values)


def _solve_renewal(cdf_vals: np.ndarray) -> np.ndarray:
    """Forward substitution for the discretised renewal equation."""
    n_steps = len(cdf_vals) - 1
    dF = np.diff(cdf_vals)
    # weight on U_{n-j}: pairs (dF_j + dF_{j+1})/2, except the oldest cell
    cw = np.empty(n_steps + 1)
    cw[0] = 0.0
    cw[1:n_steps] = (dF[:-1] + dF[1:]) / 2.0
    cw[n_steps] = dF[-1] / 2.0
    cwr = cw[::-1].copy()  # contiguous reversed weights for fast dot products
    denom = 1.0 - dF[0] / 2.0
    u = np.empty(n_steps + 1)
    u[0] = 1.0
    n_total = n_steps + 1
    for n in range(1, n_steps + 1):
        acc = np.dot(u[:n], cwr[n_total - 1 - n : n_total - 1])
        if n < n_steps:
            # the oldest cell's weight on U_0 is dF_n/2, not the paired
            # (dF_n + dF_{n+1})/2 the fixed stencil assigns
            acc -= 0.5 * dF[n] * u[0]
        u[n] = (1.0 + acc) / denom
    return u


def build_renewal(law, horizon: float, grid_step: float, *,
                  error_check: bool = True) -> RenewalTable:
    """Tabulate U on [0, horizon] with the given step.

    A coarse solve at twice the step supplies a Richardson error
    estimate (the scheme is second order); a warning fires if the
    estimated relative error at the horizon exceeds 1%.
    """
    if horizon <= 0.0 or grid_step <= 0.0:
        raise ValueError("horizon and grid_step must be positive")
    if grid_step >= horizon:
        raise ValueError("grid_step must be smaller than the horizon")
    n_steps = int(np.ceil(horizon / grid_step))
    grid = np.linspace(0.0, n_steps * grid_step, n_steps + 1)
    u = _solve_renewal(np.asarray(law.cdf(grid)))

    err = float("nan")
    if error_check:
        coarse_n = n_steps // 2
        if coarse_n >= 2:
            coarse_grid = np.linspace(0.0, coarse_n * 2.0 * grid_step, coarse_n + 1)
            u_coarse = _solve_renewal(np.asarray(law.cdf(coarse_grid)))
            err = abs(u[2 * coarse_n] - u_coarse[-1]) / 3.0
            rel = err / abs(u[2 * coarse_n])
            if rel > 0.01:
                warnings.warn(
                    f"renewal discretisation error ~{rel:.2%} at the horizon; "
                    f"shrink grid_step",
                    stacklevel=2,
                )
    return RenewalTable(grid=grid, values=u, grid_step=grid_step, law=law,
                        error_estimate=err)


def renewal_measure_integral(table: RenewalTable, g, s: float) -> float:
    """Integral of g over (0, s] against dU, excluding the atom at 0.

    ``g`` must accept an array of times; its value at 0 is used only as
    the left endpoint of the first trapezoid (the limit from the right).
    """
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 0.0
    if s > table.horizon * (1.0 + 1e-12):
        raise ValueError("s exceeds the tabulated horizon")
    step = table.grid_step
    m = int(np.floor(s / step * (1.0 + 1e-12)))
    m = min(m, len(table.grid) - 1)
    pts = table.grid[: m + 1]
    gv = np.asarray(g(pts), dtype=float)
    du = np.diff(table.values[: m + 1])
    total = float(np.dot((gv[:-1] + gv[1:]) / 2.0, du))
    r_m = table.grid[m]
    if s > r_m + 1e-12 * max(1.0, s):
        g_pair = np.asarray(g(np.array([r_m, s])), dtype=float)
        du_tail = float(table.value(s) - table.values[m])
        total += (g_pair[0] + g_pair[1]) / 2.0 * du_tail
    return total


def elementary_renewal_check(law, horizon: float, grid_step: float | None = None):
    """Compare U(horizon)/horizon with 1/mean for a finite-mean law.

    Returns (ratio, inverse_mean, relative_gap).
    """
    mu = law.mean()
    if not np.isfinite(mu):
        raise ValueError("the elementary renewal theorem needs a finite mean")
    if grid_step is None:
        grid_step = min(0.05, horizon / 2000.0)
    table = build_renewal(law, horizon, grid_step)
    ratio = table.values[-1] / table.horizon
    target = 1.0 / mu
    return ratio, target, abs(ratio - target) / target
