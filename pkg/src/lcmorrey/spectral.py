"""Periodic-box pseudo-spectral fields and constant-coefficient operators.

Whole-space operators are approximated on a periodic box of side ``L``
centred at the origin, where they become diagonal Fourier multipliers.
Fields hold real samples at the nodes ``x_j = -L/2 + j h``; the spectral
representation is the real-to-complex DFT over the spatial axes.

Nyquist convention: multipliers built from an odd power of a wavenumber
component vanish on that component's Nyquist plane (``k_odd``), even powers
use the full wavenumber. Every multiplier then respects Hermitian symmetry,
so the inverse real transform is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple, Union

import numpy as np
import scipy.fft as sfft

MultiIndex = Tuple[int, ...]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid of ``points**dim`` nodes on a box of side ``length``."""

    dim: int = 2
    points: int = 128
    length: float = 2 * np.pi
    dealias: bool = False
    max_order: int = 4

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        n = self.points
        if n < 8 or n & (n - 1):
            raise ValueError(f"points must be a power of two >= 8, got {n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def h(self) -> float:
        return self.length / self.points

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def axes(self) -> tuple:
        return tuple(range(-self.dim, 0))

    def with_dealias(self, flag: bool = True) -> "GridSpec":
        return GridSpec(self.dim, self.points, self.length, flag, self.max_order)

    @cached_property
    def nodes_1d(self) -> np.ndarray:
        return -self.length / 2 + self.h * np.arange(self.points)

    @cached_property
    def coords(self) -> tuple:
        """Node coordinates, one broadcastable array per axis."""
        x = self.nodes_1d
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coords))

    @cached_property
    def _wave_index(self) -> tuple:
        n = self.points
        full = np.fft.fftfreq(n, 1.0 / n)
        last = np.fft.rfftfreq(n, 1.0 / n)
        idx = [full] * (self.dim - 1) + [last]
        return tuple(np.meshgrid(*idx, indexing="ij"))

    @cached_property
    def k(self) -> tuple:
        """Angular wavenumbers per axis on the half-spectrum layout."""
        scale = 2 * np.pi / self.length
        return tuple(m * scale for m in self._wave_index)

    @cached_property
    def k_odd(self) -> tuple:
        nyq = self.points // 2
        return tuple(np.where(np.abs(m) == nyq, 0.0, k) for m, k in zip(self._wave_index, self.k))

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(k * k for k in self.k)

    @cached_property
    def ksq_odd(self) -> np.ndarray:
        return sum(k * k for k in self.k_odd)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.points / 3
        keep = np.ones(self._wave_index[0].shape, dtype=bool)
        for m in self._wave_index:
            keep &= np.abs(m) < cut
        return keep

    def fft(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, axes=self.axes)

    def ifft(self, hat: np.ndarray) -> np.ndarray:
        return sfft.irfftn(hat, s=self.shape, axes=self.axes)

    def zeros(self, rank: int = 0) -> "Field":
        return Field(self, np.zeros((self.dim,) * rank + self.shape))


class Field:
    """Real samples of a scalar, vector or matrix field on a grid.

    ``values`` has shape ``(dim,)*rank + grid.shape``. Instances are treated
    as immutable; the array is stored read-only.
    """

    __slots__ = ("grid", "values", "_hat")

    def __init__(self, grid: GridSpec, values, hat: np.ndarray | None = None):
        arr = np.array(values, dtype=np.float64)
        lead = arr.ndim - grid.dim
        if lead < 0 or lead > 2 or arr.shape[lead:] != grid.shape:
            raise ValueError(f"values of shape {arr.shape} do not live on {grid.shape}")
        if any(s != grid.dim for s in arr.shape[:lead]):
            raise ValueError(f"component shape {arr.shape[:lead]} incompatible with dim={grid.dim}")
        if not np.isfinite(arr).all():
            raise FloatingPointError("field contains NaN or Inf")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        self._hat = hat

    @classmethod
    def from_hat(cls, grid: GridSpec, hat: np.ndarray) -> "Field":
        return cls(grid, grid.ifft(hat), hat)

    @property
    def rank(self) -> int:
        return self.values.ndim - self.grid.dim

    @property
    def hat(self) -> np.ndarray:
        """Cached half-spectrum DFT of ``values``."""
        if self._hat is None:
            h = self.grid.fft(self.values)
            h.setflags(write=False)
            self._hat = h
        return self._hat

    def pointwise_norm(self) -> np.ndarray:
        """Euclidean (Frobenius for matrices) norm at every node."""
        if self.rank == 0:
            return np.abs(self.values)
        comps = tuple(range(self.rank))
        return np.sqrt(np.sum(self.values**2, axis=comps))

    def sup_norm(self) -> float:
        return float(self.pointwise_norm().max())

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=self.grid.axes)

    def component(self, *idx) -> "Field":
        return Field(self.grid, self.values[idx])

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        if other.rank != self.rank:
            raise ValueError(f"rank mismatch: {self.rank} vs {other.rank}")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, scalar: float):
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return Field(self.grid, self.values / scalar)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        kind = ("scalar", "vector", "tensor")[self.rank]
        return f"Field({kind}, N={self.grid.points}, dim={self.grid.dim}, L={self.grid.length:g})"


ScalarField = VectorField = TensorField = Field
FieldLike = Union[Field, np.ndarray]


def _same_grid(*fields: Field) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("fields live on different grids")
    return grid


# --- spectral building blocks on half-spectrum arrays -----------------------


def derivative_multiplier(grid: GridSpec, alpha: Sequence[int]) -> np.ndarray | complex:
    """Fourier symbol of ``d^alpha``: prod_i (i k_i)^alpha_i."""
    if len(alpha) != grid.dim or any(a < 0 for a in alpha):
        raise ValueError(f"invalid multi-index {tuple(alpha)} for dim={grid.dim}")
    out: np.ndarray | complex = 1.0 + 0j
    for a, k, ko in zip(alpha, grid.k, grid.k_odd):
        if a:
            out = out * (1j * (ko if a % 2 else k)) ** a
    return out


def dealias_hat(grid: GridSpec, hat: np.ndarray) -> np.ndarray:
    return hat * grid.dealias_mask if grid.dealias else hat


def grad_hat(grid: GridSpec, fh: np.ndarray) -> np.ndarray:
    """Gradient along a new leading axis: out[i] = d_i f."""
    return np.stack([1j * ko * fh for ko in grid.k_odd])


def div_hat(grid: GridSpec, vh: np.ndarray) -> np.ndarray:
    """Contract the last component axis with the derivative: sum_j d_j v[..., j]."""
    tail = (slice(None),) * grid.dim
    return sum(1j * grid.k_odd[j] * vh[(Ellipsis, j) + tail] for j in range(grid.dim))


def leray_hat(grid: GridSpec, vh: np.ndarray) -> np.ndarray:
    """Apply I - k k^T/|k|^2 to a vector spectrum (first axis = component)."""
    kk = grid.k_odd
    ksq = np.where(grid.ksq_odd == 0, 1.0, grid.ksq_odd)
    proj = sum(kk[j] * vh[j] for j in range(grid.dim)) / ksq
    return np.stack([vh[i] - kk[i] * proj for i in range(grid.dim)])


def inv_laplacian_multiplier(grid: GridSpec) -> np.ndarray:
    ksq = grid.ksq
    out = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=out, where=ksq != 0)
    return out


def heat_multiplier(grid: GridSpec, t: float) -> np.ndarray:
    return np.exp(-grid.ksq * t)


def pointwise_product(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Pass a physical-space product through the 2/3-rule filter when enabled."""
    if not grid.dealias:
        return values
    return grid.ifft(grid.fft(values) * grid.dealias_mask)


# --- public operators -------------------------------------------------------


def gradient(f: ScalarField) -> VectorField:
    if f.rank != 0:
        raise ValueError("gradient expects a scalar field")
    return Field.from_hat(f.grid, grad_hat(f.grid, f.hat))


def deformation_tensor(v: VectorField) -> TensorField:
    """Jacobian (d_i v_j), derivative index first."""
    if v.rank != 1:
        raise ValueError("deformation_tensor expects a vector field")
    return Field.from_hat(v.grid, grad_hat(v.grid, v.hat))


def divergence(v: VectorField) -> ScalarField:
    if v.rank != 1:
        raise ValueError("divergence expects a vector field")
    g = v.grid
    return Field.from_hat(g, sum(1j * g.k_odd[j] * v.hat[j] for j in range(g.dim)))


def tensor_divergence(T: TensorField) -> VectorField:
    """[div T]_i = sum_j d_j T_ij (second index contracted)."""
    if T.rank != 2:
        raise ValueError("tensor_divergence expects a matrix field")
    g = T.grid
    return Field.from_hat(g, div_hat(g, T.hat))


def laplacian(f: Field) -> Field:
    return Field.from_hat(f.grid, -f.grid.ksq * f.hat)


def outer(a: VectorField, b: VectorField) -> TensorField:
    """(a (x) b)_ij = a_i b_j, dealiased when the grid asks for it."""
    g = _same_grid(a, b)
    return Field(g, pointwise_product(g, np.einsum("i...,j...->ij...", a.values, b.values)))


def odot(A: TensorField, B: TensorField) -> TensorField:
    """(A . B)_ij = sum_k A_ik B_jk."""
    g = _same_grid(A, B)
    if A.rank != 2 or B.rank != 2:
        raise ValueError("odot expects two matrix fields")
    return Field(g, pointwise_product(g, np.einsum("ik...,jk...->ij...", A.values, B.values)))


def multiply(a: Field, b: Field) -> Field:
    """Pointwise product of a scalar field with any field."""
    g = _same_grid(a, b)
    if a.rank != 0:
        a, b = b, a
    if a.rank != 0:
        raise ValueError("multiply needs at least one scalar factor")
    return Field(g, pointwise_product(g, a.values * b.values))


def dealias(f: Field) -> Field:
    return Field.from_hat(f.grid, f.hat * f.grid.dealias_mask)


def heat_semigroup(f: Field, t: float) -> Field:
    """e^{t Laplacian} f, exact on the grid."""
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return f
    return Field.from_hat(f.grid, f.hat * heat_multiplier(f.grid, t))


def leray_project(v: VectorField) -> VectorField:
    if v.rank != 1:
        raise ValueError("leray_project expects a vector field")
    return Field.from_hat(v.grid, leray_hat(v.grid, v.hat))


def riesz_riesz(f: ScalarField, i: int, j: int) -> ScalarField:
    """R_i R_j f with symbol -k_i k_j/|k|^2; the mean is annihilated."""
    g = f.grid
    if not (0 <= i < g.dim and 0 <= j < g.dim):
        raise ValueError(f"axis indices ({i}, {j}) out of range for dim={g.dim}")
    alpha = [0] * g.dim
    alpha[i] += 1
    alpha[j] += 1
    return Field.from_hat(g, derivative_multiplier(g, alpha) * inv_laplacian_multiplier(g) * f.hat)


def inverse_laplacian(f: Field) -> Field:
    """Mean-free solution of -Lap g = f - mean(f)."""
    return Field.from_hat(f.grid, inv_laplacian_multiplier(f.grid) * f.hat)


def partial_alpha(f: Field, alpha: Sequence[int]) -> Field:
    g = f.grid
    order = sum(alpha)
    if order > g.max_order:
        raise ValueError(f"derivative order {order} exceeds the grid's max_order={g.max_order}")
    if order == 0:
        if len(alpha) != g.dim:
            raise ValueError(f"invalid multi-index {tuple(alpha)} for dim={g.dim}")
        return f
    return Field.from_hat(g, derivative_multiplier(g, alpha) * f.hat)


def multi_indices(dim: int, order: int) -> list:
    """All multi-indices of exactly the given order, in lexicographic order."""
    if dim == 1:
        return [(order,)]
    out = []
    for first in range(order, -1, -1):
        out.extend((first,) + rest for rest in multi_indices(dim - 1, order - first))
    return out


def inner(a: Field, b: Field) -> float:
    """Grid L2 inner product sum_x a(x).b(x) h^n."""
    g = _same_grid(a, b)
    return float(np.sum(a.values * b.values) * g.cell_volume)


def lp_norm(f: Field, p: float) -> float:
    return float((np.sum(f.pointwise_norm() ** p) * f.grid.cell_volume) ** (1.0 / p))
