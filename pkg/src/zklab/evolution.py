"""Time evolution: integrating-factor RK4, Picard iteration of the Duhamel
map, blow-up detection and the Gronwall envelope monitor.

Variants
--------
exact       u_t + d_x Lap u + d_x(u^{7/3}) = 0
mollified   the flux replaced by d_x(eta_eps * (eta_eps * u)^{7/3})
parabolic   the mollified equation plus eta * Lap^2 w dissipation

In Fourier space every variant reads ``v' = lin * v + N(v)`` with
``lin = i k_x |k|^2 - eta |k|^4``; the stepper applies ``exp(lin dt)`` exactly.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .nonlinear import MollifierSpec, flux_spectral, mollified_flux_spectral
from .norms import Trajectory, hs_norms, invariants_spectral
from .propagator import cumulative_integral, dispersion_symbol
from .spectral import Grid3, RealField, check_finite, hs_norm_raw, irfft3, rfft3, spectral_l2

log = logging.getLogger(__name__)

VARIANTS = ("exact", "mollified", "parabolic")


class BlowUpError(RuntimeError):
    """Raised by a step whose result exceeds the configured caps."""

    def __init__(self, time: float, max_abs: float, h1: float = float("nan"), trajectory=None):
        super().__init__(f"blow-up detected at t={time:.6g} (max|u|={max_abs:.3e}, H1={h1:.3e})")
        self.time = time
        self.max_abs = max_abs
        self.h1 = h1
        self.trajectory = trajectory


class PicardDivergenceError(RuntimeError):
    def __init__(self, report):
        super().__init__(f"Picard iteration not contracting: distances {report.iterate_distances}")
        self.report = report


@dataclass
class EvolutionConfig:
    variant: str = "exact"
    dt: float = 1e-3
    T: float = 1.0
    pad: float = 1.5
    diag_every: int = 10
    blowup_threshold: float = 1e6
    h1_threshold: float = 1e6
    stored_s_values: tuple = (1.0,)
    epsilon: float = 0.0
    eta: float = 0.0
    mollifier_kind: str = "sharp_cutoff"
    nonlinear: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if self.variant in ("mollified", "parabolic") and not self.epsilon > 0:
            raise ValueError(f"variant {self.variant} needs epsilon > 0")
        if self.variant == "parabolic" and not self.eta > 0:
            raise ValueError("parabolic variant needs eta > 0")
        self.stored_s_values = tuple(float(s) for s in self.stored_s_values)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def mollifier(self) -> MollifierSpec | None:
        if self.variant == "exact":
            return None
        return MollifierSpec(self.epsilon, self.mollifier_kind)

    def to_dict(self) -> dict:
        return asdict(self)


def default_dt(grid: Grid3) -> float:
    """``0.5 h^3 / pi^2`` with h the coarsest spacing."""
    h = max(grid.spacing)
    return 0.5 * h**3 / np.pi**2


class _Rhs:
    """Nonlinear part ``N(v)`` of the spectral ODE for a given config."""

    def __init__(self, grid: Grid3, cfg: EvolutionConfig):
        self.grid = grid
        self.cfg = cfg
        m = cfg.mollifier()
        self.mult = None if m is None else m.multiplier(grid)

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        if not self.cfg.nonlinear:
            return np.zeros_like(coeffs)
        if self.mult is None:
            return -flux_spectral(self.grid, coeffs, self.cfg.pad)
        return -mollified_flux_spectral(self.grid, coeffs, self.mult, self.cfg.pad)


def linear_symbol(grid: Grid3, cfg: EvolutionConfig) -> np.ndarray:
    lin = 1j * dispersion_symbol(grid)
    if cfg.variant == "parabolic":
        lin = lin - cfg.eta * grid.k2**2
    return lin


class IFRK4:
    """Integrating-factor RK4 with the linear part exact.

    ``e = exp(lin dt / 2)``:
        k1 = N(v)
        k2 = N(e (v + dt/2 k1))
        k3 = N(e v + dt/2 k2)
        k4 = N(e^2 v + dt e k3)
        v+ = e^2 v + dt/6 (e^2 k1 + 2 e (k2 + k3) + k4)
    """

    def __init__(self, grid: Grid3, cfg: EvolutionConfig, dt: float | None = None):
        self.grid = grid
        self.cfg = cfg
        self.dt = cfg.dt if dt is None else dt
        lin = linear_symbol(grid, cfg)
        self.half = np.exp(0.5 * self.dt * lin)
        self.full = self.half * self.half
        self.rhs = _Rhs(grid, cfg)

    def step(self, v: np.ndarray) -> np.ndarray:
        dt, e, e2, N = self.dt, self.half, self.full, self.rhs
        if not self.cfg.nonlinear:
            return e2 * v
        k1 = N(v)
        ev = e * v
        k2 = N(ev + (0.5 * dt) * (e * k1))
        k3 = N(ev + (0.5 * dt) * k2)
        k4 = N(e2 * v + dt * (e * k3))
        return e2 * v + (dt / 6.0) * (e2 * k1 + 2.0 * e * (k2 + k3) + k4)


def _check_blowup(grid, coeffs, values, t, cfg):
    max_abs = float(np.abs(values).max())
    if not np.isfinite(max_abs) or max_abs > cfg.blowup_threshold:
        raise BlowUpError(t, max_abs)
    h1 = hs_norm_raw(grid, coeffs, 1.0)
    if not np.isfinite(h1) or h1 > cfg.h1_threshold:
        raise BlowUpError(t, max_abs, h1)


def step_ifrk4(u: RealField, dt: float, cfg: EvolutionConfig, t: float = 0.0) -> RealField:
    """Advance ``u`` by one IFRK4 step of size ``dt``.

    Raises :class:`BlowUpError` (carrying ``t + dt``) when the new state
    exceeds the max-abs or H^1 caps.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    check_finite(u.values)
    g = u.grid
    v = IFRK4(g, cfg, dt).step(rfft3(g, u.values))
    out = irfft3(g, v)
    _check_blowup(g, v, out, t + dt, cfg)
    return RealField(g, out)


def diagnostics(grid: Grid3, coeffs: np.ndarray, cfg: EvolutionConfig) -> dict:
    mass, energy, mean = invariants_spectral(grid, coeffs, cfg.pad)
    d = {"mass": mass, "energy": energy, "mean": mean}
    d.update(hs_norms(grid, coeffs, sorted(set(cfg.stored_s_values) | {1.0})))
    return d


def evolve(u0: RealField, cfg: EvolutionConfig, t0: float = 0.0, step0: int = 0,
           checkpoint=None) -> Trajectory:
    """Integrate from ``u0`` to ``cfg.T`` storing every ``diag_every`` steps.

    The spectral state is re-derived from the physical samples at every
    stored time, so a run resumed from a stored snapshot continues bit for
    bit.  On blow-up the partial trajectory is returned with
    ``blowup_time`` set.  ``checkpoint(step, t, values)`` is called at every
    stored time if given.
    """
    g = u0.grid
    check_finite(u0.values)
    stepper = IFRK4(g, cfg)
    values = np.array(u0.values, float)
    v = rfft3(g, values)
    traj = Trajectory(g)
    traj.append(t0, values, diagnostics(g, v, cfg))
    n_total = cfg.n_steps
    for n in range(step0 + 1, n_total + 1):
        t = n * cfg.dt
        v = stepper.step(v)
        stored = n % cfg.diag_every == 0 or n == n_total
        if stored:
            values = irfft3(g, v)
            v = rfft3(g, values)
        else:
            values = None
        try:
            if values is None:
                h = irfft3(g, v)
                _check_blowup(g, v, h, t, cfg)
            else:
                _check_blowup(g, v, values, t, cfg)
        except BlowUpError as err:
            log.warning("%s", err)
            traj.blowup_time = err.time
            err.trajectory = traj
            return traj
        if stored:
            traj.append(t, values, diagnostics(g, v, cfg))
            if checkpoint is not None:
                checkpoint(n, t, values)
    return traj


# -- Picard iteration of the Duhamel map -------------------------------------------


@dataclass
class PicardReport:
    iterate_distances: list = field(default_factory=list)
    contraction_ratio: float = float("nan")
    converged: bool = False
    residual: float = float("nan")

    def ratios(self) -> np.ndarray:
        d = np.asarray(self.iterate_distances, float)
        return d[1:] / d[:-1]


def _geometric_ratio(d):
    d = np.asarray(d, float)
    d = d[d > 0]
    if d.size < 2:
        return 0.0
    return float(np.exp(np.mean(np.log(d[1:] / d[:-1]))))


def picard_solve(u0: RealField, T: float, n_nodes: int = 16, max_iter: int = 50,
                 tol: float = 1e-12, cfg: EvolutionConfig | None = None,
                 rule: str = "gauss4") -> tuple[Trajectory, PicardReport]:
    """Fixed point of ``w -> U(t)u0 - int_0^t U(t-s) d_x(w^{7/3})(s) ds`` on a time grid.

    The candidate is held at the ``n_nodes + 1`` times ``k T / n_nodes``; the
    Duhamel integral is evaluated in the interaction picture with
    :func:`cumulative_integral`.  Iteration stops once the sup-in-time L^2
    distance between successive iterates falls below ``tol``; three
    consecutive increases abort with :class:`PicardDivergenceError`.
    """
    if n_nodes < 8:
        raise ValueError("n_nodes must be at least 8")
    cfg = cfg or EvolutionConfig(dt=T / n_nodes, T=T)
    g = u0.grid
    rhs = _Rhs(g, cfg)
    sym = dispersion_symbol(g)
    times = np.linspace(0.0, T, n_nodes + 1)
    fwd = np.exp(1j * times[:, None, None, None] * sym[None])
    c0 = rfft3(g, u0.values)
    w = fwd * c0[None]
    report = PicardReport()
    growth = 0

    def gamma(w):
        F = np.stack([rhs(wk) for wk in w])
        H = np.conj(fwd) * F
        return fwd * (c0[None] + cumulative_integral(times, H, rule))

    for it in range(max_iter):
        new = gamma(w)
        dist = max(spectral_l2(g, a - b) for a, b in zip(new, w))
        report.iterate_distances.append(dist)
        w = new
        if len(report.iterate_distances) > 1 and dist > report.iterate_distances[-2]:
            growth += 1
            if growth >= 3:
                report.contraction_ratio = _geometric_ratio(report.iterate_distances)
                raise PicardDivergenceError(report)
        else:
            growth = 0
        if dist < tol:
            report.converged = True
            break
    report.contraction_ratio = _geometric_ratio(report.iterate_distances)
    report.residual = max(spectral_l2(g, a - b) for a, b in zip(gamma(w), w))
    traj = Trajectory(g)
    for tk, wk in zip(times, w):
        traj.append(tk, irfft3(g, wk), diagnostics(g, wk, cfg))
    return traj, report


# -- Gronwall envelope ------------------------------------------------------------


def _hs_key(s: float) -> str:
    return f"hs_{s:g}"


def gronwall_monitor(traj: Trajectory, N: float, C: float) -> list[tuple[float, float, float]]:
    """Rows ``(t, ||w(t)||_{H^N}, ||w(0)||_{H^N} exp(C int_0^t ||w||_{H^1}^{4/3}))``."""
    lhs = traj.series(_hs_key(N))
    h1 = traj.series(_hs_key(1.0))
    t = np.asarray(traj.times)
    acc = cumulative_integral(t, h1 ** (4 / 3), "trapezoid") if t.size > 1 else np.zeros(1)
    env = lhs[0] * np.exp(C * acc)
    return [(float(a), float(b), float(c)) for a, b, c in zip(t, lhs, env)]


def fit_gronwall_constant(traj: Trajectory, N: float, fraction: float = 0.1) -> float:
    """Smallest ``C >= 0`` keeping the envelope above ``||w||_{H^N}`` on the
    first ``fraction`` of stored times."""
    lhs = traj.series(_hs_key(N))
    h1 = traj.series(_hs_key(1.0))
    t = np.asarray(traj.times)
    acc = cumulative_integral(t, h1 ** (4 / 3), "trapezoid")
    n = max(2, int(np.ceil(fraction * t.size)))
    C = 0.0
    for k in range(1, n):
        if acc[k] > 0 and lhs[0] > 0 and lhs[k] > lhs[0]:
            C = max(C, np.log(lhs[k] / lhs[0]) / acc[k])
    return float(C)
