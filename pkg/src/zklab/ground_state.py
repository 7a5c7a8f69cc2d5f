"""Ground state of ``Lap phi - phi + phi^{7/3} = 0``, the sharp
Gagliardo-Nirenberg constant and the exact traveling-wave family.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .norms import potential_integral
from .spectral import (
    Grid3,
    RealField,
    dealias_pad_multiply_raw,
    irfft3,
    rfft3,
    spectral_l2,
)

log = logging.getLogger(__name__)


class GroundStateError(RuntimeError):
    """Petviashvili iteration failed; ``history`` holds the residual trace."""

    def __init__(self, msg, history=()):
        super().__init__(msg)
        self.history = list(history)


class SeedTooSmallError(GroundStateError):
    pass


@dataclass(eq=False)
class GroundState:
    grid: Grid3
    phi: RealField = field(repr=False)
    l2_norm: float
    grad_l2_norm: float
    p_norm_10_3: float
    c_opt: float
    pohozaev_residual_1: float
    pohozaev_residual_2: float
    iterations: int
    converged: bool
    pad: float = 1.5
    equation_residual: float = float("nan")
    stabilizer: float = float("nan")
    history: list = field(default_factory=list, repr=False)

    @property
    def mass_threshold(self) -> float:
        return self.l2_norm

    def summary(self) -> dict:
        return {
            "l2_norm": self.l2_norm,
            "grad_l2_norm": self.grad_l2_norm,
            "p_norm_10_3": self.p_norm_10_3,
            "c_opt": self.c_opt,
            "pohozaev_residual_1": self.pohozaev_residual_1,
            "pohozaev_residual_2": self.pohozaev_residual_2,
            "equation_residual": self.equation_residual,
            "iterations": self.iterations,
            "converged": int(self.converged),
            "pad": self.pad,
        }


def _norms(grid: Grid3, coeffs: np.ndarray, pad: float):
    mass = spectral_l2(grid, coeffs) ** 2
    grad2 = float(np.sum(grid.weights * grid.k2 * np.abs(coeffs) ** 2) / grid.volume)
    pot = potential_integral(grid, coeffs, pad)
    return mass, grad2, pot


def equation_residual(grid: Grid3, coeffs: np.ndarray, pad: float = 1.5) -> float:
    """``||Lap phi - phi + phi^{7/3}||_2 / ||phi||_2``."""
    res = -(1.0 + grid.k2) * coeffs + dealias_pad_multiply_raw(grid, coeffs, 7 / 3, pad)
    return spectral_l2(grid, res) / spectral_l2(grid, coeffs)


def petviashvili_solve(grid: Grid3, amplitude_seed: float = 1.0, gamma: float = 1.75,
                       tol: float = 1e-9, max_iter: int = 500, pad: float = 1.5) -> GroundState:
    """Stabilized fixed-point iteration ``phi <- S^gamma (1 - Lap)^{-1} phi^{7/3}``.

    ``S = <(1 - Lap) phi, phi> / <phi^{7/3}, phi>`` tends to 1 at the fixed
    point.  The seed is ``amplitude_seed * exp(-|z|^2)`` centred in the box.
    """
    if amplitude_seed <= 0:
        raise ValueError("amplitude_seed must be positive")
    if not 1 < gamma < 2:
        raise ValueError("gamma must lie in (1, 2)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    x, y1, y2 = grid.coords()
    coeffs = rfft3(grid, amplitude_seed * np.exp(-(x**2 + y1**2 + y2**2)))
    op = 1.0 + grid.k2
    w = grid.weights
    history = []
    converged = False
    S = change = np.nan
    for it in range(max_iter + 1):
        nl = dealias_pad_multiply_raw(grid, coeffs, 7 / 3, pad)
        norm = spectral_l2(grid, coeffs)
        res = spectral_l2(grid, nl - op * coeffs) / norm
        if it:
            history.append((it, float(S), float(change), float(res)))
            if change < tol and res < 10 * tol:
                converged = True
                break
        den = np.sum(w * (nl * np.conj(coeffs)).real)
        if not den > 0 or not np.isfinite(den):
            raise SeedTooSmallError(f"iterate collapsed at step {it}", history)
        S = np.sum(w * op * np.abs(coeffs) ** 2) / den
        new = S**gamma * nl / op
        norm_new = spectral_l2(grid, new)
        if norm_new < 1e-12 * max(1.0, norm):
            raise SeedTooSmallError(f"iterate collapsed to zero at step {it}", history)
        change = spectral_l2(grid, new - coeffs) / norm_new
        coeffs = new
    if not converged:
        raise GroundStateError(f"no convergence in {max_iter} iterations "
                               f"(last change {change:.3e}, residual {res:.3e})", history)
    phi = irfft3(grid, coeffs)
    gs = _finish(grid, phi, pad, it, converged, history)
    gs.stabilizer = float(S)
    log.info("ground state: |phi|_2=%.10f after %d iterations", gs.l2_norm, it)
    return gs


def _finish(grid, phi, pad, iterations, converged, history) -> GroundState:
    coeffs = rfft3(grid, phi)
    mass, grad2, pot = _norms(grid, coeffs, pad)
    gs = GroundState(
        grid=grid,
        phi=RealField(grid, phi),
        l2_norm=float(np.sqrt(mass)),
        grad_l2_norm=float(np.sqrt(grad2)),
        p_norm_10_3=float(pot**0.3),
        c_opt=float((5 / 3) ** 0.3 / mass**0.2),
        pohozaev_residual_1=np.nan,
        pohozaev_residual_2=np.nan,
        iterations=iterations,
        converged=converged,
        pad=pad,
        equation_residual=equation_residual(grid, coeffs, pad),
        history=list(history),
    )
    gs.pohozaev_residual_1, gs.pohozaev_residual_2 = pohozaev_residuals(gs)
    return gs


def ground_state_from_field(phi: RealField, pad: float = 1.5, converged: bool = True) -> GroundState:
    """Rebuild the derived quantities for a stored profile (e.g. a loaded snapshot)."""
    return _finish(phi.grid, phi.values, pad, 0, converged, [])


def pohozaev_residuals(gs: GroundState) -> tuple[float, float]:
    """Relative defects of the two integral identities of the elliptic equation.

    r1 pairs the equation with phi; r2 is the Pohozaev (dilation) identity in
    three dimensions for the power 7/3.
    """
    coeffs = rfft3(gs.grid, gs.phi.values)
    mass, grad2, pot = _norms(gs.grid, coeffs, gs.pad)
    r1 = abs(grad2 + mass - pot) / mass
    r2 = abs(0.5 * grad2 + 1.5 * mass - 0.9 * pot) / mass
    return float(r1), float(r2)


def gn_constant(gs: GroundState) -> tuple[float, float]:
    """``(C_opt, ||phi||_2)`` with ``C_opt = (5/3)^{3/10} / ||phi||_2^{2/5}``."""
    if not gs.converged:
        raise ValueError("ground state is not converged")
    c_opt = (5 / 3) ** 0.3 / gs.l2_norm**0.4
    return float(c_opt), float(gs.l2_norm)


def gn_ratio(w: RealField, pad: float = 1.5) -> float:
    """``||w||_{10/3} / (||grad w||_2^{3/5} ||w||_2^{2/5})``."""
    coeffs = rfft3(w.grid, w.values)
    mass, grad2, pot = _norms(w.grid, coeffs, pad)
    if grad2 == 0:
        return 0.0
    return float(pot**0.3 / (grad2**0.3 * mass**0.2))


# -- radial profile and traveling waves -----------------------------------------


class RadialProfile:
    """phi(r) for r >= 0 from the axis line of a centred 3D profile.

    The line ``phi(x, 0, 0)`` is band-limited, so its trigonometric
    interpolant is sampled 64x finer and splined.  Beyond 3/4 of the box the
    profile continues with the free decay ``A exp(-r) / r``.
    """

    refine = 64

    def __init__(self, gs_or_field):
        phi = gs_or_field.phi if isinstance(gs_or_field, GroundState) else gs_or_field
        g = phi.grid
        line = phi.values[:, g.n_y1 // 2, g.n_y2 // 2]
        n = line.size
        L = g.L_x
        c = np.fft.rfft(line, norm="forward")
        m = n * self.refine
        cb = np.zeros(m // 2 + 1, complex)
        cb[: n // 2] = c[: n // 2]
        cb[n // 2] = 0.5 * c[n // 2]
        fine = np.fft.irfft(cb, m, norm="forward")
        xs = -L + 2 * L * np.arange(m) / m
        # grid index n/2 is x = 0
        r = xs[m // 2:]
        vals = fine[m // 2:]
        self.r_match = 0.75 * L
        keep = r <= self.r_match
        self._spline = CubicSpline(r[keep], vals[keep], bc_type=((1, 0.0), "not-a-knot"))
        v = float(self._spline(self.r_match))
        self._tail_amp = v * self.r_match * np.exp(self.r_match)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        inner = r <= self.r_match
        out = np.empty_like(r)
        out[inner] = self._spline(r[inner])
        ro = r[~inner]
        out[~inner] = self._tail_amp * np.exp(-ro) / ro
        return out


def periodic_offset(x: np.ndarray, center: float, L: float) -> np.ndarray:
    return (x - center + L) % (2 * L) - L


def translate_x(u: RealField, shift: float) -> RealField:
    """``u(x - shift, y)`` by a Fourier phase shift (exact for band-limited fields)."""
    g = u.grid
    c = rfft3(g, u.values)
    phase = np.where(g.nyquist_mask[0], np.cos(shift * g.k[0]), np.exp(-1j * shift * g.k[0]))
    c = c * phase
    return RealField(g, irfft3(g, c))


def soliton_field(gs: GroundState, c: float, t: float = 0.0, center_x: float = 0.0,
                  profile: RadialProfile | None = None, grid: Grid3 | None = None,
                  resolution_fraction: float = 0.5) -> RealField:
    """``c^{3/4} phi(sqrt(c) rho)``, rho the distance to ``(center_x + c t, 0, 0)``.

    The profile argument written in squared-radius form is read as a radial
    function of rho.  The centre wraps periodically in x.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    g = grid or gs.grid
    h = max(g.spacing)
    if np.sqrt(c) * h > resolution_fraction:
        warnings.warn(f"soliton with c={c} under-resolved: sqrt(c) h = {np.sqrt(c) * h:.3f}",
                      stacklevel=2)
    if c == 1.0 and g == gs.grid:
        # no dilation: exact trigonometric translation of the stored profile
        return translate_x(gs.phi, center_x + t)
    prof = profile or RadialProfile(gs)
    x, y1, y2 = g.coords()
    dx = periodic_offset(x, center_x + c * t, g.L_x)
    rho = np.sqrt(dx**2 + y1**2 + y2**2)
    return RealField(g, c**0.75 * prof(np.sqrt(c) * rho))


# -- independent radial cross-check ------------------------------------------------


def _radial_rhs(r, y):
    p, q = y
    return [q, -2.0 * q / r + p - np.cbrt(p) * p * p]


def _crosses_zero(r, y):
    return y[0]


_crosses_zero.terminal = True


def _turns_up(r, y):
    return y[1]


_turns_up.terminal = True


def shooting_profile(lo: float = 3.0, hi: float = 6.0, r_max: float = 30.0,
                     n_bisect: int = 60) -> tuple[float, CubicSpline, float]:
    """Radial shooting for ``phi'' + 2 phi'/r - phi + phi^{7/3} = 0``.

    Bisects on ``phi(0)`` between profiles that cross zero (too large) and
    profiles that turn back up (too small).  Returns ``(phi0, spline, r_end)``;
    the spline is trusted on ``[0, r_end]`` and the profile is zero beyond.
    """
    def shoot(a):
        r0 = 1e-6
        a2 = (a - np.cbrt(a) * a * a) / 6.0
        return solve_ivp(_radial_rhs, [r0, r_max], [a + a2 * r0**2, 2 * a2 * r0],
                         method="DOP853", rtol=1e-13, atol=1e-16,
                         events=[_crosses_zero, _turns_up], dense_output=True)

    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        if shoot(mid).t_events[0].size:
            hi = mid
        else:
            lo = mid
    sol = shoot(lo)
    other = shoot(hi)
    # trust the range where the bracketing shots agree
    r = np.linspace(1e-6, min(sol.t[-1], other.t[-1]), 20001)
    a, b = sol.sol(r)[0], other.sol(r)[0]
    scale = np.abs(a).max()
    bad = np.nonzero(np.abs(a - b) > 1e-9 * scale)[0]
    r_end = r[bad[0]] if bad.size else r[-1]
    rr = np.linspace(0.0, r_end, 8001)
    vals = sol.sol(np.maximum(rr, 1e-6))[0]
    return lo, CubicSpline(rr, vals, bc_type=((1, 0.0), "not-a-knot")), float(r_end)


def shooting_difference(gs: GroundState) -> float:
    """Relative L^2 distance between the grid profile and the shooting profile."""
    phi0, spline, r_end = shooting_profile()
    x, y1, y2 = gs.grid.coords()
    rho = np.sqrt(x**2 + y1**2 + y2**2)
    ref = np.where(rho <= r_end, spline(np.minimum(rho, r_end)), 0.0)
    diff = gs.phi.values - ref
    return float(np.sqrt(np.sum(diff**2) / np.sum(ref**2)))
