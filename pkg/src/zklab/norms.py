"""Littlewood-Paley blocks, LP Sobolev norms, the space-time X^s_T norms and the
conserved quantities.

Blocks are sharp indicator masks: block 0 holds |k| <= 1 and block j > 0 holds
2^(j-1) < |k| <= 2^j, so the masks partition the stored modes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .spectral import (
    Grid3,
    RealField,
    SpectralField,
    hs_norm_raw,
    irfft3,
    padded_shape,
    pow103,
    resize_spectrum,
    rfft3,
    spectral_l2,
)

import scipy.fft as sfft

COMPONENTS = ("sobolev", "smooth", "maximal", "strichartz")


# -- dyadic decomposition ---------------------------------------------------------


def block_index(grid: Grid3) -> np.ndarray:
    """Dyadic index of every stored mode (0 for |k| <= 1)."""
    kabs = grid.kabs
    safe = np.where(kabs > 1.0, kabs, 2.0)
    j = np.ceil(np.log2(safe) - 1e-12).astype(int)
    return np.where(kabs > 1.0 + 1e-12, j, 0)


@dataclass(frozen=True, eq=False)
class DyadicDecomposition:
    grid: Grid3
    j_max: int
    index: np.ndarray = field(repr=False)

    def mask(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.j_max:
            raise IndexError(f"block {j} outside 0..{self.j_max}")
        return self.index == j

    @property
    def blocks(self) -> list[np.ndarray]:
        return [self.mask(j) for j in range(self.j_max + 1)]


@lru_cache(maxsize=16)
def dyadic_decomposition(grid: Grid3) -> DyadicDecomposition:
    idx = block_index(grid)
    return DyadicDecomposition(grid, int(idx.max()), idx)


def lp_project(U: SpectralField, j: int) -> SpectralField:
    dec = dyadic_decomposition(U.grid)
    return SpectralField(U.grid, np.where(dec.mask(j), U.coeffs, 0.0))


def block_l2(U: SpectralField) -> np.ndarray:
    """``||Delta_j u||_2`` for every block j."""
    g = U.grid
    dec = dyadic_decomposition(g)
    e = g.weights * np.abs(U.coeffs) ** 2
    sums = np.bincount(dec.index.ravel(), weights=e.ravel(), minlength=dec.j_max + 1)
    return np.sqrt(sums / g.volume)


def _combine(b: np.ndarray, a: float) -> float:
    j = np.arange(1, b.size)
    return float(b[0] + np.sqrt(np.sum(2.0 ** (2 * a * j) * b[1:] ** 2)))


def lp_sobolev_norm(U: SpectralField, s: float) -> float:
    """``||Delta_0 u||_2 + (sum_{j>0} 2^{2sj} ||Delta_j u||_2^2)^{1/2}``."""
    return _combine(block_l2(U), s)


# -- trajectories -------------------------------------------------------------


@dataclass
class Trajectory:
    """Time-stamped fields on one grid plus per-time diagnostics."""

    grid: Grid3
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list, repr=False)
    diagnostics: list = field(default_factory=list, repr=False)
    blowup_time: float | None = None

    def append(self, t: float, values: np.ndarray, diag: dict | None = None) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError(f"times must increase strictly ({t} after {self.times[-1]})")
        values = np.asarray(values, float)
        if values.shape != self.grid.shape:
            raise ValueError("field does not match trajectory grid")
        self.times.append(float(t))
        self.fields.append(values)
        self.diagnostics.append(dict(diag or {}))

    def __len__(self):
        return len(self.times)

    def field_at(self, i: int) -> RealField:
        return RealField(self.grid, self.fields[i])

    def series(self, key: str) -> np.ndarray:
        try:
            return np.array([d[key] for d in self.diagnostics], float)
        except KeyError:
            raise KeyError(f"diagnostic {key!r} missing from trajectory") from None

    def scaled(self, lam: float) -> "Trajectory":
        out = Trajectory(self.grid)
        for t, f in zip(self.times, self.fields):
            out.append(t, lam * f)
        return out


def trapezoid_weights(times) -> np.ndarray:
    t = np.asarray(times, float)
    w = np.zeros_like(t)
    if t.size > 1:
        d = np.diff(t)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
    return w


@dataclass(frozen=True)
class XstReport:
    s: float
    epsilon_max: float
    sobolev: float
    smooth: float
    maximal: float
    strichartz: float

    @property
    def total(self) -> float:
        return self.sobolev + self.smooth + self.maximal + self.strichartz

    def as_row(self) -> dict:
        return {"s": self.s, "epsilon": self.epsilon_max, "sobolev": self.sobolev,
                "smooth": self.smooth, "maximal": self.maximal,
                "strichartz": self.strichartz, "total": self.total}


def block_mixed_norms(traj: Trajectory) -> np.ndarray:
    """Per-block mixed norms, shape (n_blocks, 4).

    Columns: L^inf_T L^2_{x,y}, L^inf_x L^2_{y,T}, L^2_x L^inf_{y,T},
    L^4_{x,y,T}.  Sup norms are maxima over grid samples and stored times;
    integrals are Riemann sums in space and trapezoid in time.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    g = traj.grid
    dec = dyadic_decomposition(g)
    nb = dec.j_max + 1
    hx, hy1, hy2 = g.spacing
    dv = g.cell_volume
    wt = trapezoid_weights(traj.times)
    sob = np.zeros(nb)
    per_x = np.zeros((nb, g.n_x))
    sup_x = np.zeros((nb, g.n_x))
    l4 = np.zeros(nb)
    masks = dec.blocks
    for values, w in zip(traj.fields, wt):
        c = rfft3(g, values)
        for j, m in enumerate(masks):
            p = irfft3(g, np.where(m, c, 0.0))
            sq = p * p
            sob[j] = max(sob[j], np.sqrt(sq.sum() * dv))
            per_x[j] += w * sq.sum(axis=(1, 2)) * hy1 * hy2
            np.maximum(sup_x[j], np.abs(p).max(axis=(1, 2)), out=sup_x[j])
            l4[j] += w * np.sum(sq * sq) * dv
    return np.column_stack([
        sob,
        np.sqrt(per_x.max(axis=1)),
        np.sqrt(np.sum(sup_x**2, axis=1) * hx),
        l4**0.25,
    ])


def xst_from_blocks(table: np.ndarray, s: float, eps: float = 0.01) -> XstReport:
    return XstReport(
        s=s,
        epsilon_max=eps,
        sobolev=_combine(table[:, 0], s),
        smooth=_combine(table[:, 1], s + 1),
        maximal=_combine(table[:, 2], s - 1 - eps),
        strichartz=_combine(table[:, 3], s),
    )


def xst_norms(traj: Trajectory, s: float, eps: float = 0.01, table: np.ndarray | None = None) -> XstReport:
    """The four component norms of X^s_T for a stored trajectory."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if table is None:
        table = block_mixed_norms(traj)
    return xst_from_blocks(table, s, eps)


def xtilde_norm(traj: Trajectory, s: float, n_quad: int = 8, eps: float = 0.01,
                table: np.ndarray | None = None) -> float:
    """``(int_{5/6}^s ||u||_{X^r_T}^2 dr)^{1/2}`` by the trapezoid rule in r."""
    if s <= 5 / 6:
        raise ValueError(f"s must exceed 5/6, got {s}")
    if n_quad < 3:
        raise ValueError("n_quad must be at least 3")
    if table is None:
        table = block_mixed_norms(traj)
    rs = np.linspace(5 / 6, s, n_quad)
    vals = np.array([xst_from_blocks(table, r, eps).total ** 2 for r in rs])
    return float(np.sqrt(np.sum(trapezoid_weights(rs) * vals)))


# -- conserved quantities --------------------------------------------------------


def potential_integral(grid: Grid3, coeffs: np.ndarray, pad: float = 1.5) -> float:
    """``int |u|^{10/3}`` by quadrature on the grid refined by ``pad``."""
    if pad == 1.0:
        u = irfft3(grid, coeffs)
        return float(np.sum(pow103(u)) * grid.cell_volume)
    big = padded_shape(grid, pad)
    cb = resize_spectrum(coeffs / grid.volume, grid.shape, big)
    u = sfft.irfftn(cb, s=big, norm="forward", workers=-1)
    return float(np.sum(pow103(u)) * grid.volume / np.prod(big))


def invariants_spectral(grid: Grid3, coeffs: np.ndarray, pad: float = 1.5) -> tuple[float, float, float]:
    mass = spectral_l2(grid, coeffs) ** 2
    grad2 = float(np.sum(grid.weights * grid.k2 * np.abs(coeffs) ** 2) / grid.volume)
    energy = grad2 - 0.6 * potential_integral(grid, coeffs, pad)
    mean = float(coeffs[0, 0, 0].real)
    return mass, energy, mean


def invariants(u: RealField, pad: float = 1.5) -> tuple[float, float, float]:
    """(mass, energy, mean) = (||u||^2, ||grad u||^2 - 3/5 int |u|^{10/3}, int u).

    The potential term is evaluated on the same refined grid as the flux, so
    the semi-discrete flow conserves this energy exactly.
    """
    return invariants_spectral(u.grid, rfft3(u.grid, u.values), pad)


def hs_norms(grid: Grid3, coeffs: np.ndarray, s_values) -> dict:
    return {f"hs_{s:g}": hs_norm_raw(grid, coeffs, s) for s in s_values}
