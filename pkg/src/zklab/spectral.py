"""Periodic 3D grid, Fourier transforms and spectral operators.

Coordinates are ordered (x, y1, y2); x is the propagation direction of the
equation and the remaining two axes carry the transverse variable y.  The box
is the product of the intervals [-L, L) so the wavenumbers along an axis are
``pi * m / L`` for integer ``m``.

Spectral coefficients use the real-input layout of :func:`scipy.fft.rfftn`
(the last axis, y2, is halved) and carry the factor ``volume / n_points`` so
that Parseval's identity reads

    sum(u**2) * h_x * h_y1 * h_y2 == sum(weights * |u_hat|**2) / volume.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

AXES = {"x": 0, "y1": 1, "y2": 2}

# Exponents handled by the real cube root convention.
_CUBE_ROOT_POWERS = (1 / 3, 4 / 3, 7 / 3, 10 / 3)

TAIL_WARN_RATIO = 1e-6


class NonFiniteFieldError(ValueError):
    """Raised when a field contains NaN or infinite values."""


class UnsupportedOrderError(ValueError):
    """Raised for derivative orders outside 1..4."""


def _fft_workers():
    return -1


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid on [-Lx, Lx) x [-Ly1, Ly1) x [-Ly2, Ly2)."""

    n_x: int
    n_y1: int
    n_y2: int
    L_x: float = np.pi
    L_y1: float = np.pi
    L_y2: float = np.pi

    def __post_init__(self):
        for n in self.shape:
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"point counts must be even integers >= 8, got {self.shape}")
        for L in self.lengths:
            if not (np.isfinite(L) and L > 0):
                raise ValueError(f"box half-periods must be positive, got {self.lengths}")

    @classmethod
    def cube(cls, n: int, L: float = np.pi) -> "Grid3":
        return cls(n, n, n, L, L, L)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_x, self.n_y1, self.n_y2)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n_x, self.n_y1, self.n_y2 // 2 + 1)

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (float(self.L_x), float(self.L_y1), float(self.L_y2))

    @property
    def size(self) -> int:
        return self.n_x * self.n_y1 * self.n_y2

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(2.0 * L / n for L, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self) -> float:
        hx, hy1, hy2 = self.spacing
        return hx * hy1 * hy2

    @property
    def volume(self) -> float:
        return 8.0 * self.L_x * self.L_y1 * self.L_y2

    def axis_points(self, axis: int) -> np.ndarray:
        L, n = self.lengths[axis], self.shape[axis]
        return -L + 2.0 * L * np.arange(n) / n

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays (x, y1, y2)."""
        x, y1, y2 = (self.axis_points(a) for a in range(3))
        return x[:, None, None], y1[None, :, None], y2[None, None, :]

    def axis_wavenumbers(self, axis: int) -> np.ndarray:
        """All n wavenumbers of an axis in FFT order (Nyquist stored as negative)."""
        L, n = self.lengths[axis], self.shape[axis]
        return np.pi / L * np.fft.fftfreq(n, 1.0 / n)

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumbers broadcastable against the spectral layout."""
        kx = self.axis_wavenumbers(0)[:, None, None]
        ky1 = self.axis_wavenumbers(1)[None, :, None]
        n2 = self.n_y2
        ky2 = (np.pi / self.L_y2 * np.arange(n2 // 2 + 1))[None, None, :]
        return kx, ky1, ky2

    @cached_property
    def k2(self) -> np.ndarray:
        kx, ky1, ky2 = self.k
        return kx**2 + ky1**2 + ky2**2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full (Hermitian) spectrum."""
        w = np.full(self.n_y2 // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w[None, None, :], self.spectral_shape)

    @cached_property
    def nyquist_mask(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis boolean arrays flagging Nyquist planes in the spectral layout."""
        mx = np.zeros((self.n_x, 1, 1), bool)
        mx[self.n_x // 2] = True
        my1 = np.zeros((1, self.n_y1, 1), bool)
        my1[0, self.n_y1 // 2] = True
        my2 = np.zeros((1, 1, self.n_y2 // 2 + 1), bool)
        my2[0, 0, -1] = True
        return mx, my1, my2

    @property
    def k_nyquist(self) -> float:
        """Smallest of the per-axis Nyquist wavenumbers."""
        return min(np.pi * n / (2 * L) for n, L in zip(self.shape, self.lengths))


def check_finite(values: np.ndarray, what: str = "field") -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteFieldError(f"{what} has non-finite value {values[idx]!r} at index {idx}")


@dataclass(frozen=True, eq=False)
class RealField:
    """Real scalar field sampled on a :class:`Grid3`, indexed (x, y1, y2)."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            if v.size != self.grid.size:
                raise ValueError(f"expected {self.grid.size} values, got {v.size}")
            v = v.reshape(self.grid.shape)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return RealField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return RealField(self.grid, self.values - _vals(other))

    def __mul__(self, a):
        return RealField(self.grid, self.values * _vals(a))

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.values)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.grid.cell_volume))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field in real-input transform layout."""

    grid: Grid3
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.spectral_shape:
            raise ValueError(f"expected shape {self.grid.spectral_shape}, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + _coeffs(other))

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - _coeffs(other))

    def __mul__(self, a):
        return SpectralField(self.grid, self.coeffs * a)

    __rmul__ = __mul__

    def l2(self) -> float:
        return spectral_l2(self.grid, self.coeffs)


def _vals(a):
    return a.values if isinstance(a, RealField) else a


def _coeffs(a):
    return a.coeffs if isinstance(a, SpectralField) else a


# -- raw-array transforms used by the hot loops ------------------------------


def rfft3(grid: Grid3, values: np.ndarray) -> np.ndarray:
    return sfft.rfftn(values, norm="forward", workers=_fft_workers()) * grid.volume


def irfft3(grid: Grid3, coeffs: np.ndarray) -> np.ndarray:
    return sfft.irfftn(coeffs / grid.volume, s=grid.shape, norm="forward", workers=_fft_workers())


def spectral_l2(grid: Grid3, coeffs: np.ndarray) -> float:
    return float(np.sqrt(np.sum(grid.weights * np.abs(coeffs) ** 2) / grid.volume))


def forward_transform(u: RealField) -> SpectralField:
    check_finite(u.values)
    return SpectralField(u.grid, rfft3(u.grid, u.values))


def inverse_transform(U: SpectralField) -> RealField:
    return RealField(U.grid, irfft3(U.grid, U.coeffs))


def derivative_multiplier(grid: Grid3, axis: int | str, order: int) -> np.ndarray:
    if isinstance(axis, str):
        axis = AXES[axis]
    if not 1 <= order <= 4:
        raise UnsupportedOrderError(f"derivative order must be in 1..4, got {order}")
    mult = (1j * grid.k[axis]) ** order
    if order % 2:
        mult = np.where(grid.nyquist_mask[axis], 0.0, mult)
    return mult


def spectral_derivative(U: SpectralField, axis: int | str, order: int = 1) -> SpectralField:
    """Multiply each coefficient by ``(i k_axis)**order``.

    Odd orders zero the Nyquist plane of ``axis`` so the result stays the
    transform of a real field and the first derivative stays skew-symmetric.
    """
    return SpectralField(U.grid, U.coeffs * derivative_multiplier(U.grid, axis, order))


def laplacian(U: SpectralField) -> SpectralField:
    return SpectralField(U.grid, -U.grid.k2 * U.coeffs)


def bilaplacian(U: SpectralField) -> SpectralField:
    return SpectralField(U.grid, U.grid.k2**2 * U.coeffs)


# -- fractional powers --------------------------------------------------------


def real_power(values: np.ndarray, p: float) -> np.ndarray:
    """``u**p`` with the real cube root for ``p`` in {1/3, 4/3, 7/3, 10/3}.

    Odd numerators keep the sign (u^{7/3} = sign(u)|u|^{7/3}); even ones give
    the absolute value (u^{10/3} = |u|^{10/3}).
    """
    for q in _CUBE_ROOT_POWERS:
        if abs(p - q) < 1e-14:
            n = int(round(3 * q))
            c = np.cbrt(values)
            return c**n
    if float(p).is_integer():
        return values ** int(p)
    raise ValueError(f"unsupported exponent {p}")


def pow73(values: np.ndarray) -> np.ndarray:
    c = np.cbrt(values)
    return values * values * c


def pow103(values: np.ndarray) -> np.ndarray:
    c = np.cbrt(values)
    return values * values * values * c


def padded_shape(grid: Grid3, pad: float) -> tuple[int, int, int]:
    out = []
    for n in grid.shape:
        m = int(np.ceil(n * pad))
        out.append(m + (m % 2))
    return tuple(out)


def _axis_pieces(n: int, m: int):
    """(small-grid slice, large-grid slice, weight) covering a full FFT axis."""
    h = n // 2
    pieces = [(slice(0, h), slice(0, h), 1.0), (slice(h + 1, n), slice(m - h + 1, m), 1.0)]
    if m == n:
        pieces.append((slice(h, h + 1), slice(h, h + 1), 1.0))
    else:
        pieces.append((slice(h, h + 1), slice(h, h + 1), 0.5))
        pieces.append((slice(h, h + 1), slice(m - h, m - h + 1), 0.5))
    return pieces


def resize_spectrum(coeffs: np.ndarray, shape: tuple, new_shape: tuple) -> np.ndarray:
    """Zero-pad or truncate an rfft-layout spectrum between grid shapes.

    Coefficients are in ``norm="forward"`` scaling (independent of the point
    count).  Nyquist modes are split symmetrically when padding and folded
    (aliased) when truncating, so pad followed by truncate is the identity.
    """
    up = all(b >= a for a, b in zip(shape, new_shape))
    if not up and not all(b <= a for a, b in zip(shape, new_shape)):
        raise ValueError("mixed padding and truncation is not supported")
    small, large = (shape, new_shape) if up else (new_shape, shape)
    (n0, n1, n2), (m0, m1, m2) = small, large
    h2 = n2 // 2
    z = slice(0, h2 + 1)
    if up:
        out = np.zeros((m0, m1, m2 // 2 + 1), complex)
        for a_s, a_l, wa in _axis_pieces(n0, m0):
            for b_s, b_l, wb in _axis_pieces(n1, m1):
                w = wa * wb
                out[a_l, b_l, z] += coeffs[a_s, b_s, :] * w if w != 1.0 else coeffs[a_s, b_s, :]
        if m2 > n2:
            out[:, :, h2] *= 0.5
        return out
    out = np.zeros((n0, n1, h2 + 1), complex)
    for a_s, a_l, _ in _axis_pieces(n0, m0):
        for b_s, b_l, _ in _axis_pieces(n1, m1):
            out[a_s, b_s, :] += coeffs[a_l, b_l, z]
    if m2 > n2:
        # +n2/2 on the large grid aliases onto the small Nyquist together with
        # its implicit conjugate partner
        a = out[:, :, h2]
        neg = np.roll(a[::-1, ::-1], 1, axis=(0, 1))
        out[:, :, h2] = a + np.conj(neg)
    return out


def dealias_pad_multiply_raw(grid: Grid3, coeffs: np.ndarray, p: float, pad: float) -> np.ndarray:
    """Spectral coefficients of ``u**p`` evaluated on a grid oversampled by ``pad``."""
    if not 1.0 <= pad <= 2.0:
        raise ValueError(f"pad must lie in [1, 2], got {pad}")
    c = coeffs / grid.volume
    if pad == 1.0:
        big_shape = grid.shape
        cb = c
    else:
        big_shape = padded_shape(grid, pad)
        cb = resize_spectrum(c, grid.shape, big_shape)
    u = sfft.irfftn(cb, s=big_shape, norm="forward", workers=_fft_workers())
    w = pow73(u) if abs(p - 7 / 3) < 1e-14 else real_power(u, p)
    wb = sfft.rfftn(w, norm="forward", workers=_fft_workers())
    if pad != 1.0:
        wb = resize_spectrum(wb, big_shape, grid.shape)
    return wb * grid.volume


def dealias_pad_multiply(u: RealField, p: float, pad: float = 1.5) -> RealField:
    """Pointwise ``u**p`` computed on a grid refined by ``pad`` per axis.

    The band-limited interpolant of ``u`` is sampled on the finer grid, the
    power is taken there, and the result is truncated back to the modes of
    the original grid.  ``pad == 1`` is plain pointwise evaluation.
    """
    if pad == 1.0:
        return RealField(u.grid, real_power(u.values, p))
    coeffs = dealias_pad_multiply_raw(u.grid, rfft3(u.grid, u.values), p, pad)
    return RealField(u.grid, irfft3(u.grid, coeffs))


def spectral_tail_ratio(grid: Grid3, coeffs: np.ndarray) -> float:
    """Energy in the top octave (|k| > k_nyquist / 2) over total energy."""
    e = grid.weights * np.abs(coeffs) ** 2
    total = e.sum()
    if total == 0:
        return 0.0
    return float(e[grid.kabs > 0.5 * grid.k_nyquist].sum() / total)


def warn_if_tail_heavy(grid: Grid3, coeffs: np.ndarray, where: str = "") -> float:
    r = spectral_tail_ratio(grid, coeffs)
    if r > TAIL_WARN_RATIO:
        warnings.warn(f"{where}spectral tail ratio {r:.2e} exceeds {TAIL_WARN_RATIO:g}", stacklevel=2)
    return r


# -- norms --------------------------------------------------------------------


def hs_norm_direct(U: SpectralField, s: float) -> float:
    """Sobolev norm with the weight ``(1 + |k|)**(2 s)`` summed over all modes."""
    return hs_norm_raw(U.grid, U.coeffs, s)


def hs_norm_raw(grid: Grid3, coeffs: np.ndarray, s: float) -> float:
    w = grid.weights * (1.0 + grid.kabs) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(coeffs) ** 2) / grid.volume))


def bessel_norm(U: SpectralField, s: float) -> float:
    """``||<grad>^s u||_2`` with the multiplier ``(1 + |k|^2)**(s/2)``."""
    w = U.grid.weights * (1.0 + U.grid.k2) ** s
    return float(np.sqrt(np.sum(w * np.abs(U.coeffs) ** 2) / U.grid.volume))


def random_bandlimited(grid: Grid3, rng: np.random.Generator, k_max: float | None = None,
                       decay: float = 0.0) -> RealField:
    """Random real field with modes up to ``k_max`` and no Nyquist content."""
    shape = grid.spectral_shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kabs = grid.kabs
    if k_max is None:
        k_max = 0.5 * grid.k_nyquist
    c = np.where(kabs <= k_max, c, 0.0) * (1.0 + kabs) ** (-decay)
    for m in grid.nyquist_mask:
        c = np.where(m, 0.0, c)
    # round trip through physical space enforces Hermitian symmetry
    u = irfft3(grid, c)
    return RealField(grid, u)
