"""Fourier toolkit on the unit circle S = R/Z.

Fields are sampled at the nodes x_j = j/N and carry a lazily computed
one-sided spectrum ``c_k = rfft(samples)[k] / N`` for k = 0..N/2, so that

    f(x) = c_0 + 2 Re sum_{0<k<N/2} c_k exp(2 pi i k x) + c_{N/2} cos(pi N x).

All operators are Fourier multipliers on that spectrum.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator

import numpy as np

TWO_PI = 2.0 * np.pi


class NonZeroMean(ValueError):
    """Raised when an operation requiring a zero-mean input receives one with nonzero mean."""

    def __init__(self, mean: float, tolerance: float):
        super().__init__(f"input mean {mean!r} exceeds tolerance {tolerance!r}")
        self.mean = mean
        self.tolerance = tolerance


# Multiplies the k != 0 symbol of A^{-1}; only ever changed by fault-injection tests.
_A_INV_SCALE = 1.0


@contextlib.contextmanager
def perturbed_a_inv(scale: float) -> Iterator[None]:
    """Temporarily scale the nonzero-mode symbol of (mu - d_x^2)^{-1}.

    Test hook: lets the property suites prove they notice a wrong operator.
    """
    global _A_INV_SCALE
    previous = _A_INV_SCALE
    _A_INV_SCALE = float(scale)
    try:
        yield
    finally:
        _A_INV_SCALE = previous


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform collocation grid with ``n_points`` nodes on the unit circle."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise TypeError(f"n_points must be an integer, got {n!r}")
        if n < 8 or n % 2:
            raise ValueError(f"n_points must be even and >= 8, got {n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_points

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n_points) / self.n_points
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Non-negative integer wavenumbers 0..N/2 of the one-sided spectrum."""
        k = np.arange(self.n_points // 2 + 1)
        k.flags.writeable = False
        return k

    @cached_property
    def mode_weights(self) -> np.ndarray:
        """Multiplicity of each one-sided mode in the two-sided spectrum."""
        w = np.full(self.n_points // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        w.flags.writeable = False
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = (self.wavenumbers <= self.n_points / 3).astype(float)
        mask.flags.writeable = False
        return mask

    @cached_property
    def ik(self) -> np.ndarray:
        """First-derivative symbol 2 pi i k with the Nyquist mode zeroed."""
        s = 1j * TWO_PI * self.wavenumbers
        s[-1] = 0.0
        s.flags.writeable = False
        return s

    def a_inv_symbol(self) -> np.ndarray:
        k = self.wavenumbers
        s = np.ones(k.shape)
        s[1:] = _A_INV_SCALE / (TWO_PI * k[1:]) ** 2
        return s

    def __repr__(self):
        return f"PeriodicGrid({self.n_points})"


class Field:
    """Real periodic grid function; immutable once constructed."""

    __slots__ = ("grid", "_samples", "_coeffs")

    def __init__(self, grid: PeriodicGrid, samples):
        values = np.array(samples, dtype=float, copy=True)
        if values.shape != (grid.n_points,):
            raise ValueError(
                f"expected {grid.n_points} samples, got array of shape {values.shape}"
            )
        values.flags.writeable = False
        self.grid = grid
        self._samples = values
        self._coeffs = None

    @classmethod
    def from_coeffs(cls, grid: PeriodicGrid, coeffs) -> "Field":
        coeffs = np.asarray(coeffs, dtype=complex)
        f = cls(grid, np.fft.irfft(coeffs * grid.n_points, grid.n_points))
        return f

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(func(grid.nodes), (grid.n_points,)))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "Field":
        return cls(grid, np.full(grid.n_points, float(value)))

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            c = np.fft.rfft(self._samples) / self.grid.n_points
            c.flags.writeable = False
            self._coeffs = c
        return self._coeffs

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._samples + other._samples)
        return Field(self.grid, self._samples + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._samples - other._samples)
        return Field(self.grid, self._samples - other)

    def __rsub__(self, other):
        return Field(self.grid, other - self._samples)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._samples * other._samples)
        return Field(self.grid, self._samples * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self._samples)

    def __repr__(self):
        return f"Field(N={self.grid.n_points}, mean={mean(self):.6g})"


def mean(f: Field) -> float:
    """Mean over the circle, i.e. the zeroth Fourier coefficient."""
    return float(f.coeffs[0].real)


def _deriv_coeffs(grid: PeriodicGrid, coeffs: np.ndarray, order: int) -> np.ndarray:
    out = coeffs * (1j * TWO_PI * grid.wavenumbers) ** order
    if order % 2:
        out[-1] = 0.0
    return out


def deriv(f: Field, order: int = 1) -> Field:
    """Spectral derivative of the given order."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return Field.from_coeffs(f.grid, _deriv_coeffs(f.grid, f.coeffs, order))


def apply_A(f: Field) -> Field:
    """Forward operator A f = mean(f) - f_xx."""
    return mean(f) - deriv(f, 2)


def apply_A_inv(f: Field) -> Field:
    """Inverse of A = mu - d_x^2: mode 0 kept, mode k divided by (2 pi k)^2."""
    return Field.from_coeffs(f.grid, f.coeffs * f.grid.a_inv_symbol())


def dx_A_inv(f: Field) -> Field:
    """d_x (mu - d_x^2)^{-1} f; the result has exactly zero mean."""
    g = f.grid
    return Field.from_coeffs(g, f.coeffs * g.a_inv_symbol() * g.ik)


def antideriv_zero_base(f: Field, mean_tolerance: float = 1e-10) -> Field:
    """Periodic antiderivative of a zero-mean field, normalised to vanish at x = 0."""
    m = mean(f)
    if abs(m) > mean_tolerance:
        raise NonZeroMean(m, mean_tolerance)
    g = f.grid
    c = np.zeros_like(f.coeffs)
    k = g.wavenumbers[1:-1]
    c[1:-1] = f.coeffs[1:-1] / (1j * TWO_PI * k)
    samples = np.fft.irfft(c * g.n_points, g.n_points)
    return Field(g, samples - samples[0])


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm through the symbol of (mu - d_x^2)^{1/2}: 1 on mode 0, 2 pi |k| elsewhere."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    g = f.grid
    c2 = np.abs(f.coeffs) ** 2 * g.mode_weights
    lam = np.ones(c2.shape)
    lam[1:] = (TWO_PI * g.wavenumbers[1:]) ** (2.0 * s)
    return float(np.sqrt(np.sum(lam * c2)))


def interpolate(f: Field, y):
    """Evaluate the trigonometric interpolant at ``y`` (scalar or array, taken mod 1)."""
    g = f.grid
    y_arr = np.asarray(y, dtype=float)
    phase = np.exp(1j * TWO_PI * np.multiply.outer(np.mod(y_arr, 1.0), g.wavenumbers))
    weighted = f.coeffs * g.mode_weights
    # Nyquist enters as c cos(pi N y); taking the real part of c e^{i pi N y} gives that for real c.
    values = (phase @ weighted).real
    if y_arr.ndim == 0:
        return float(values)
    return values


def dealias(f: Field) -> Field:
    """Two-thirds rule: zero every mode with |k| > N/3."""
    return Field.from_coeffs(f.grid, f.coeffs * f.grid.dealias_mask)


def spectral_tail(f: Field) -> float:
    """Fraction of the retained derivative spectrum sitting in its upper half.

    Computed as sqrt(sum_{K/2<k<=K} |k c_k|^2 / sum_{0<k<=K} |k c_k|^2) with K = N/3.
    Small values mean the field is resolved; zero for constants.
    """
    return _tail_from_coeffs(f.grid, f.coeffs)


def _tail_from_coeffs(grid: PeriodicGrid, coeffs: np.ndarray) -> float:
    k = grid.wavenumbers
    keep = k <= grid.n_points / 3
    e = np.abs(k * coeffs) ** 2
    total = float(np.sum(e[keep]))
    if total == 0.0:
        return 0.0
    upper = float(np.sum(e[keep & (k > grid.n_points / 6)]))
    return float(np.sqrt(upper / total))


def fine_max_abs(f: Field, factor: int = 8) -> float:
    """Max |f| of the interpolant evaluated on a grid ``factor`` times finer."""
    g = f.grid
    n_fine = g.n_points * factor
    c = np.zeros(n_fine // 2 + 1, dtype=complex)
    c[: g.n_points // 2 + 1] = f.coeffs
    # the Nyquist mode of the coarse grid is a cosine shared by +-N/2; split it
    c[g.n_points // 2] *= 0.5
    fine = np.fft.irfft(c * n_fine, n_fine)
    return float(np.max(np.abs(fine)))
