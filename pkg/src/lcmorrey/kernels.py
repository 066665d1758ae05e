"""Discrete heat and Oseen kernels obtained from a grid delta."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import GridSpec, grad_hat, heat_multiplier, leray_hat


def delta_hat(grid: GridSpec) -> np.ndarray:
    """Spectrum of the unit-mass delta sitting on the origin node."""
    d = np.zeros(grid.shape)
    d[(grid.points // 2,) * grid.dim] = 1.0 / grid.cell_volume
    return grid.fft(d)


@dataclass
class PowerFit:
    slope: float
    constant: float
    x: np.ndarray
    y: np.ndarray

    @property
    def compensated(self) -> np.ndarray:
        """y / x^slope with the fitted slope replaced by the nominal one elsewhere."""
        return self.y / self.x**self.slope


def power_fit(x, y) -> PowerFit:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, icpt = np.polyfit(np.log(x), np.log(y), 1)
    return PowerFit(float(slope), float(np.exp(icpt)), x, y)


def heat_gradient_l1(grid: GridSpec, t: float) -> float:
    """Grid L1 norm of grad h_t, with h_t the heat evolution of the discrete delta."""
    gh = grad_hat(grid, delta_hat(grid) * heat_multiplier(grid, t))
    g = grid.ifft(gh)
    return float(np.sum(np.sqrt(np.sum(g**2, axis=0))) * grid.cell_volume)


def heat_gradient_table(grid: GridSpec, times) -> PowerFit:
    return power_fit(times, [heat_gradient_l1(grid, t) for t in times])


def oseen_kernel(grid: GridSpec, t: float) -> np.ndarray:
    """K[i, l, j](x): component i of e^{t Lap} P div applied to delta E_lj."""
    n = grid.dim
    dh = delta_hat(grid) * heat_multiplier(grid, t)
    out = np.empty((n, n, n) + grid.shape)
    for l in range(n):
        for j in range(n):
            vh = np.zeros((n,) + dh.shape, dtype=complex)
            vh[l] = 1j * grid.k_odd[j] * dh
            out[:, l, j] = grid.ifft(leray_hat(grid, vh))
    return out


@dataclass
class OseenTable:
    times: np.ndarray
    bounds: np.ndarray

    @property
    def spread(self) -> float:
        return float(self.bounds.max() / self.bounds.min())


def oseen_table(grid: GridSpec, times) -> OseenTable:
    """For each t, max over nodes with |x| <= L/4 of |K(t, x)| (sqrt(t) + |x|)^{n+1}."""
    r = grid.radius
    inside = r <= grid.length / 4
    bounds = []
    for t in times:
        K = oseen_kernel(grid, t)
        mag = np.sqrt(np.sum(K**2, axis=(0, 1, 2)))
        weighted = mag * (np.sqrt(t) + r) ** (grid.dim + 1)
        bounds.append(float(weighted[inside].max()))
    return OseenTable(np.asarray(times, float), np.asarray(bounds))
