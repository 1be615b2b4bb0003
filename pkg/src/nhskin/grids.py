"""Brillouin-zone grids and the unitary lattice Fourier transform."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Window(Enum):
    """Labeling convention for the momentum window spanning one BZ."""

    ZERO_TO_2PI = "0_2pi"
    MINUS_PI_TO_PI = "pm_pi"

    @property
    def start(self) -> float:
        return 0.0 if self is Window.ZERO_TO_2PI else -float(np.pi)


@dataclass(frozen=True)
class KGrid:
    """Uniform momentum grid, k_m = window_start + 2*pi*m/n for m = 0..n-1.

    ``n`` doubles as the number of lattice sites: the grid points are
    exactly the allowed ring momenta, so ``to_real_space`` /
    ``to_momentum_space`` form a unitary transform pair.
    """

    n: int
    window: Window = Window.ZERO_TO_2PI

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"momentum grid needs >= 16 points, got {self.n}")

    @property
    def points(self) -> np.ndarray:
        return self.window.start + 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n

    def _alternating_sign(self, ndim: int) -> np.ndarray:
        s = np.where(np.arange(self.n) % 2 == 0, 1.0, -1.0)
        return s.reshape((self.n,) + (1,) * (ndim - 1))

    def to_real_space(self, fk: np.ndarray) -> np.ndarray:
        """psi(n) = N^{-1/2} sum_m f(k_m) e^{i k_m n}, applied along axis 0."""
        out = np.fft.ifft(fk, axis=0) * np.sqrt(self.n)
        if self.window is Window.MINUS_PI_TO_PI:
            # e^{-i pi n} = (-1)^n at integer sites
            out = out * self._alternating_sign(out.ndim)
        return out

    def to_momentum_space(self, fn: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_real_space` (exactly unitary)."""
        if self.window is Window.MINUS_PI_TO_PI:
            fn = fn * self._alternating_sign(fn.ndim)
        return np.fft.fft(fn, axis=0) / np.sqrt(self.n)


def wrap_to_window(k: np.ndarray | float, window: Window) -> np.ndarray | float:
    """Reduce momenta into [window_start, window_start + 2*pi)."""
    start = window.start
    return (np.asarray(k) - start) % (2.0 * np.pi) + start
