"""The flux d_x(u^{7/3}), frequency-cutoff mollifiers and the mollified flux.

The power uses the real cube root: u^{7/3} = sign(u)|u|^{7/3}, an odd function
of u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid3,
    RealField,
    dealias_pad_multiply_raw,
    derivative_multiplier,
    irfft3,
    rfft3,
)

KINDS = ("sharp_cutoff", "gaussian")


@dataclass(frozen=True)
class MollifierSpec:
    """Smoothing at scale ``epsilon``.

    ``sharp_cutoff`` keeps every dyadic block whose upper edge 2^j is at most
    1/epsilon (the partial sum P_{1/epsilon}); ``gaussian`` multiplies by
    ``exp(-(epsilon |k|)^2 / 2)``.
    """

    epsilon: float
    kind: str = "sharp_cutoff"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown mollifier kind {self.kind!r}")

    def multiplier(self, grid: Grid3) -> np.ndarray:
        kabs = grid.kabs
        if self.kind == "gaussian":
            return np.exp(-0.5 * (self.epsilon * kabs) ** 2)
        # dyadic upper edge of the block holding |k|; the zero mode sits in
        # every j <= 0 block and therefore always survives
        with np.errstate(divide="ignore"):
            edge = np.where(kabs > 0, 2.0 ** np.ceil(np.log2(np.where(kabs > 0, kabs, 1.0))), 0.0)
        return (edge <= 1.0 / self.epsilon).astype(float)


def flux_spectral(grid: Grid3, coeffs: np.ndarray, pad: float = 1.5) -> np.ndarray:
    """Spectral coefficients of ``d_x(u^{7/3})`` for ``u`` given by ``coeffs``."""
    power = dealias_pad_multiply_raw(grid, coeffs, 7 / 3, pad)
    return derivative_multiplier(grid, 0, 1) * power


def mollified_flux_spectral(grid: Grid3, coeffs: np.ndarray, mult: np.ndarray,
                            pad: float = 1.5) -> np.ndarray:
    power = dealias_pad_multiply_raw(grid, mult * coeffs, 7 / 3, pad)
    return derivative_multiplier(grid, 0, 1) * (mult * power)


def flux(u: RealField, pad: float = 1.5) -> RealField:
    """``d_x(u^{7/3})`` with the power evaluated on a grid refined by ``pad``."""
    g = u.grid
    return RealField(g, irfft3(g, flux_spectral(g, rfft3(g, u.values), pad)))


def mollify(u: RealField, m: MollifierSpec) -> RealField:
    g = u.grid
    return RealField(g, irfft3(g, m.multiplier(g) * rfft3(g, u.values)))


def mollified_flux(u: RealField, m: MollifierSpec, pad: float = 1.5) -> RealField:
    """``d_x(eta_eps * (eta_eps * u)^{7/3})``: inner mollify, power, outer mollify."""
    g = u.grid
    c = mollified_flux_spectral(g, rfft3(g, u.values), m.multiplier(g), pad)
    return RealField(g, irfft3(g, c))
