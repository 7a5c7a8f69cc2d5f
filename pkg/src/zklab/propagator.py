"""Linear group of ``u_t + d_x Lap u = 0``, the bi-Laplacian semigroup and
Duhamel quadrature.

The linear flow is the Fourier multiplier ``exp(i t k_x |k|^2)``; it is a
unitary group, so it is applied exactly at every node of every quadrature.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .spectral import Grid3, SpectralField, irfft3, spectral_l2

RULES = ("trapezoid", "gauss4")

_GAUSS2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


def dispersion_symbol(grid: Grid3) -> np.ndarray:
    """``k_x (k_x^2 + |k_y|^2)``, the phase speed-weighted symbol of the flow."""
    return grid.k[0] * grid.k2


def group_multiplier(grid: Grid3, t: float) -> np.ndarray:
    return np.exp(1j * t * dispersion_symbol(grid))


def parabolic_multiplier(grid: Grid3, t: float, eta: float) -> np.ndarray:
    return np.exp(-eta * t * grid.k2**2)


def apply_group(U0: SpectralField, t: float) -> SpectralField:
    if t == 0:
        return SpectralField(U0.grid, U0.coeffs.copy())
    return SpectralField(U0.grid, U0.coeffs * group_multiplier(U0.grid, t))


def apply_parabolic(U0: SpectralField, t: float, eta: float) -> SpectralField:
    """``exp(-eta t Lap^2)`` applied to ``U0``; forward in time only."""
    if t < 0:
        raise ValueError(f"parabolic semigroup needs t >= 0, got {t}")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if t == 0:
        return SpectralField(U0.grid, U0.coeffs.copy())
    return SpectralField(U0.grid, U0.coeffs * parabolic_multiplier(U0.grid, t, eta))


# -- Duhamel quadrature ---------------------------------------------------------


def _check_nodes(times: np.ndarray, t_end: float) -> None:
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two sample times")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if abs(times[0]) > 1e-14 * max(1.0, abs(times[-1])):
        raise ValueError(f"first sample time must be 0, got {times[0]}")
    if not 0 <= t_end <= times[-1] * (1 + 1e-14):
        raise ValueError(f"target time {t_end} outside sampled range [0, {times[-1]}]")


def cumulative_integral(times: np.ndarray, values: np.ndarray, rule: str = "gauss4") -> np.ndarray:
    """Running integrals ``int_0^{t_k} H`` at every node for samples ``values[k] = H(t_k)``.

    ``trapezoid`` integrates the piecewise-linear interpolant.  ``gauss4``
    integrates the not-a-knot cubic spline through the samples with two-point
    Gauss-Legendre per panel (exact for the cubic pieces), so the result is
    fourth-order accurate in the node spacing.
    """
    times = np.asarray(times, float)
    values = np.asarray(values)
    if rule not in RULES:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    dt = np.diff(times)
    shape = (-1,) + (1,) * (values.ndim - 1)
    if rule == "trapezoid" or times.size < 3:
        panels = 0.5 * dt.reshape(shape) * (values[1:] + values[:-1])
    else:
        spline = CubicSpline(times, values, axis=0, bc_type="not-a-knot")
        g0 = spline(times[:-1] + _GAUSS2[0] * dt)
        g1 = spline(times[:-1] + _GAUSS2[1] * dt)
        panels = 0.5 * dt.reshape(shape) * (g0 + g1)
    out = np.zeros_like(values, dtype=np.result_type(values, float))
    np.cumsum(panels, axis=0, out=out[1:])
    return out


def _partial_integral(times: np.ndarray, values: np.ndarray, t: float, rule: str):
    cum = cumulative_integral(times, values, rule)
    k = int(np.searchsorted(times, t, side="right")) - 1
    k = min(k, times.size - 1)
    if np.isclose(times[k], t, rtol=0, atol=1e-14 * max(1.0, abs(t))):
        return cum[k]
    # remaining partial panel [t_k, t]
    a, b = times[k], times[k + 1]
    if rule == "trapezoid" or times.size < 3:
        theta = (t - a) / (b - a)
        h_t = (1 - theta) * values[k] + theta * values[k + 1]
        return cum[k] + 0.5 * (t - a) * (values[k] + h_t)
    spline = CubicSpline(times, values, axis=0, bc_type="not-a-knot")
    return cum[k] + 0.5 * (t - a) * (spline(a + _GAUSS2[0] * (t - a)) + spline(a + _GAUSS2[1] * (t - a)))


def duhamel_integral(
    samples: Sequence[tuple[float, object]],
    t: float,
    rule: str = "gauss4",
    propagate: Callable[[object, float], object] | None = None,
):
    """Quadrature of ``int_0^t U(t - s) F(s) ds`` from samples ``(s_i, F_i)``.

    The integrand is pulled back to the interaction picture
    ``H(s) = U(-s) F(s)`` with the propagator applied exactly, ``H`` is
    integrated with ``rule`` and the result is pushed forward by ``U(t)``.
    ``propagate(value, tau)`` defaults to the linear group for
    :class:`SpectralField` samples; any other linear unitary family (e.g. a
    scalar phase) may be supplied.
    """
    if not samples:
        raise ValueError("no samples")
    times = np.array([s for s, _ in samples], float)
    _check_nodes(times, t)
    first = samples[0][1]
    if propagate is None:
        if not isinstance(first, SpectralField):
            raise TypeError("propagate must be given for non-SpectralField samples")
        grid = first.grid
        sym = dispersion_symbol(grid)
        H = np.stack([F.coeffs * np.exp(-1j * s * sym) for s, F in samples])
        integral = _partial_integral(times, H, t, rule)
        return SpectralField(grid, integral * np.exp(1j * t * sym))
    H = np.stack([np.asarray(propagate(F, -s)) for s, F in samples])
    integral = _partial_integral(times, H, t, rule)
    return propagate(integral, t)


# -- statistical probes of the linear estimates -----------------------------------


def strichartz_ratio(U0: SpectralField, T: float = 1.0, n_t: int = 17) -> float:
    """``||U(t) u0||_{L^4_{x,y,t in [0,T]}} / ||u0||_2`` with trapezoid in time."""
    grid = U0.grid
    ts = np.linspace(0.0, T, n_t)
    w = np.full(n_t, T / (n_t - 1))
    w[[0, -1]] *= 0.5
    acc = 0.0
    for ti, wi in zip(ts, w):
        u = irfft3(grid, U0.coeffs * group_multiplier(grid, ti))
        acc += wi * np.sum(u**4) * grid.cell_volume
    return float(acc**0.25 / spectral_l2(grid, U0.coeffs))


def smoothing_ratio(U0: SpectralField, T: float = 1.0, n_t: int = 17) -> float:
    """``||grad U(t) u0||_{L^inf_x L^2_{y,T}} / ||u0||_2`` (Kato smoothing probe)."""
    grid = U0.grid
    ts = np.linspace(0.0, T, n_t)
    w = np.full(n_t, T / (n_t - 1))
    w[[0, -1]] *= 0.5
    hy = grid.spacing[1] * grid.spacing[2]
    per_x = np.zeros(grid.n_x)
    for ti, wi in zip(ts, w):
        c = U0.coeffs * group_multiplier(grid, ti)
        sq = np.zeros(grid.shape)
        for ka in grid.k:
            sq += irfft3(grid, 1j * ka * c) ** 2
        per_x += wi * sq.sum(axis=(1, 2)) * hy
    return float(np.sqrt(per_x.max()) / spectral_l2(grid, U0.coeffs))
