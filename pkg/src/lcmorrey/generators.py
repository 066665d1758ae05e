"""Synthetic test fields addressed by short textual specs such as ``"mode(k=2)"``."""

from __future__ import annotations

import ast
import math
import re
from typing import Callable

import numpy as np

from .spectral import Field, GridSpec, leray_hat

_SPEC = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$", re.S)


def parse_spec(spec: str) -> tuple:
    """Split ``"name(a=1, b='x')"`` into ``("name", {"a": 1, "b": "x"})``."""
    m = _SPEC.match(spec)
    if not m:
        raise ValueError(f"malformed generator spec {spec!r}")
    name, body = m.group(1), m.group(2)
    kwargs = {}
    if body and body.strip():
        try:
            call = ast.parse(f"f({body})", mode="eval").body
            if call.args:
                raise ValueError("arguments must be keywords")
            for kw in call.keywords:
                kwargs[kw.arg] = ast.literal_eval(kw.value)
        except (SyntaxError, ValueError) as exc:
            raise ValueError(f"malformed generator spec {spec!r}: {exc}") from exc
    return name, kwargs


def smooth_cutoff(r: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """C-infinity step equal to 1 for r <= inner and 0 for r >= outer."""
    s = np.clip((r - inner) / (outer - inner), 0.0, 1.0)

    def bump(z):
        return np.where(z > 0, np.exp(-1.0 / np.maximum(z, 1e-300)), 0.0)

    a, b = bump(1 - s), bump(s)
    return a / (a + b)


def sphere_area(n: int) -> float:
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def power_decay_amplitude(dim: int, p: float, target: float = 0.9) -> float:
    """Amplitude A with R^{-n} int_{|x|<R} A^2 |x|^{-2n/p} = target R^{-2n/p} for every R."""
    if not p > 2:
        raise ValueError("power decay needs 2n/p < n, i.e. p > 2")
    return math.sqrt(target * (dim - 2 * dim / p) / sphere_area(dim))


def power_decay_profile(grid: GridSpec, p: float, amp: float = 1.0, eps: float | None = None) -> np.ndarray:
    """amp * max(|x|, eps)^{-n/p}, cut off smoothly between L/4 and 3L/8."""
    eps = 4 * grid.h if eps is None else eps
    r = grid.radius
    L = grid.length
    return amp * np.maximum(r, eps) ** (-grid.dim / p) * smooth_cutoff(r, L / 4, 3 * L / 8)


def _as_rank(grid: GridSpec, scalar: np.ndarray, rank: int, axis: int = 0) -> np.ndarray:
    n = grid.dim
    if rank == 0:
        return scalar
    out = np.zeros((n,) * rank + grid.shape)
    out[(axis,) * rank] = scalar
    return out


def _unit(n: int, axis: int) -> np.ndarray:
    e = np.zeros(n)
    e[axis] = 1.0
    return e


def harmonic_map(grid: GridSpec, k: int = 1) -> np.ndarray:
    """Director (cos(a.x), sin(a.x), 0...) with a = (2 pi k / L) e1."""
    a = 2 * np.pi * k / grid.length
    th = a * grid.coords[0]
    out = np.zeros((grid.dim,) + grid.shape)
    out[0], out[1] = np.cos(th), np.sin(th)
    return out


def harmonic_map_gradient(grid: GridSpec, k: int = 1) -> np.ndarray:
    """Closed-form deformation tensor (d_i V_j) of ``harmonic_map``."""
    a = 2 * np.pi * k / grid.length
    th = a * grid.coords[0]
    out = np.zeros((grid.dim, grid.dim) + grid.shape)
    out[0, 0], out[0, 1] = -a * np.sin(th), a * np.cos(th)
    return out


def random_solenoidal(grid: GridSpec, rng: np.random.Generator, kmax: int = 4, amp: float = 1.0) -> np.ndarray:
    """Band-limited divergence-free field with sup norm ``amp``."""
    n = grid.dim
    raw = rng.normal(size=(n,) + grid.shape)
    hat = grid.fft(raw)
    m = [np.abs(k) * grid.length / (2 * np.pi) for k in grid.k]
    band = np.ones(hat.shape[1:], dtype=bool)
    for mi in m:
        band &= mi <= kmax
    band &= grid.ksq > 0
    v = grid.ifft(leray_hat(grid, hat * band))
    scale = np.sqrt(np.sum(v**2, axis=0)).max()
    return v * (amp / scale)


def taylor_green(grid: GridSpec, k: int = 1, amp: float = 1.0) -> np.ndarray:
    q = 2 * np.pi * k / grid.length
    x, y = grid.coords[0], grid.coords[1]
    out = np.zeros((grid.dim,) + grid.shape)
    out[0] = amp * np.sin(q * x) * np.cos(q * y)
    out[1] = -amp * np.cos(q * x) * np.sin(q * y)
    return out


def beltrami(grid: GridSpec, k: int = 1, amp: float = 1.0) -> np.ndarray:
    """Single-wavenumber solenoidal field: ABC flow in 3-D, (sin qy, sin qx) in 2-D."""
    q = 2 * np.pi * k / grid.length
    c = grid.coords
    out = np.zeros((grid.dim,) + grid.shape)
    if grid.dim == 2:
        out[0], out[1] = np.sin(q * c[1]), np.sin(q * c[0])
    else:
        x, y, z = c
        out[0] = np.sin(q * z) + np.cos(q * y)
        out[1] = np.sin(q * x) + np.cos(q * z)
        out[2] = np.sin(q * y) + np.cos(q * x)
    return amp * out


def gaussian(grid: GridSpec, sigma: float, center=None) -> np.ndarray:
    """Periodized Gaussian exp(-|x-c|^2 / (2 sigma^2)) summed over neighbouring images."""
    center = np.zeros(grid.dim) if center is None else np.asarray(center, float)
    L = grid.length
    images = range(-2, 3)
    total = np.zeros(grid.shape)
    for shift in np.array(np.meshgrid(*([images] * grid.dim), indexing="ij")).reshape(grid.dim, -1).T:
        sq = sum((x - c - s * L) ** 2 for x, c, s in zip(grid.coords, center, shift))
        total += np.exp(-sq / (2 * sigma**2))
    return total


def dipole_velocity(grid: GridSpec, sigma: float, p: float) -> np.ndarray:
    """Mean-free solenoidal field sigma^{-n/p} (d_2 psi, -d_1 psi) with psi = x1 exp(-|x|^2/2sigma^2)."""
    g = sigma ** (-grid.dim / p) * np.exp(-grid.radius**2 / (2 * sigma**2))
    ph = grid.fft(grid.coords[0] * g)
    out = np.zeros((grid.dim,) + grid.shape)
    out[0] = grid.ifft(1j * grid.k_odd[1] * ph)
    out[1] = grid.ifft(-1j * grid.k_odd[0] * ph)
    return out


def gaussian_matrix(grid: GridSpec, sigma: float, p: float) -> np.ndarray:
    """Symmetric off-diagonal matrix field with entries sigma^{-n/p} exp(-|x|^2/2sigma^2)."""
    g = sigma ** (-grid.dim / p) * np.exp(-grid.radius**2 / (2 * sigma**2))
    out = np.zeros((grid.dim, grid.dim) + grid.shape)
    out[0, 1] = out[1, 0] = g
    return out


def self_similar_inputs(grid: GridSpec, p: float) -> tuple:
    """Callables sigma -> Field for the scale-covariant velocity and matrix inputs."""
    return (
        lambda s: Field(grid, dipole_velocity(grid, s, p)),
        lambda s: Field(grid, gaussian_matrix(grid, s, p)),
    )


def _gen_zero(grid, rng, rank=0):
    return np.zeros((grid.dim,) * rank + grid.shape)


def _gen_constant(grid, rng, value=1.0, rank=1, axis=0):
    return _as_rank(grid, np.full(grid.shape, float(value)), rank, axis)


def _gen_mode(grid, rng, k=1, axis=0, amp=1.0, rank=0):
    """Scalar sin(2 pi k x_axis / L); as a vector, the shear amp sin(2 pi k x2/L) e1."""
    q = 2 * np.pi * k / grid.length
    if rank == 0:
        return amp * np.sin(q * grid.coords[axis])
    if rank == 1:
        return _as_rank(grid, amp * np.sin(q * grid.coords[1]), 1, 0)
    raise ValueError("mode supports rank 0 or 1")


def _gen_gaussian(grid, rng, sigma=None, rank=0):
    sigma = grid.length / 16 if sigma is None else sigma
    return _as_rank(grid, gaussian(grid, sigma), rank)


def _gen_power_decay(grid, rng, p=4.0, amp=None, rank=0, eps=None):
    amp = power_decay_amplitude(grid.dim, p) if amp is None else amp
    return _as_rank(grid, power_decay_profile(grid, p, amp, eps), rank)


def _gen_abs_power(grid, rng, beta=0.5):
    return grid.radius**beta


_GENERATORS: dict = {
    "zero": _gen_zero,
    "constant": _gen_constant,
    "mode": _gen_mode,
    "gaussian": _gen_gaussian,
    "power_decay": _gen_power_decay,
    "harmonic_map": lambda g, rng, k=1: harmonic_map(g, k),
    "harmonic_map_gradient": lambda g, rng, k=1: harmonic_map_gradient(g, k),
    "random_solenoidal": lambda g, rng, kmax=4, amp=1.0: random_solenoidal(g, rng, kmax, amp),
    "taylor_green": lambda g, rng, k=1, amp=1.0: taylor_green(g, k, amp),
    "beltrami": lambda g, rng, k=1, amp=1.0: beltrami(g, k, amp),
    "dipole": lambda g, rng, sigma=None, p=4.0: dipole_velocity(g, g.length / 16 if sigma is None else sigma, p),
    "abs_power": _gen_abs_power,
}


def generator_names() -> list:
    return sorted(_GENERATORS)


def generate_field(spec: str, grid: GridSpec, seed: int = 0) -> Field:
    """Build the field named by ``spec``; random generators draw from ``seed`` only."""
    name, kwargs = parse_spec(spec)
    if name not in _GENERATORS:
        raise KeyError(f"unknown generator {name!r}; known: {', '.join(generator_names())}")
    rng = np.random.default_rng(seed)
    try:
        values = _GENERATORS[name](grid, rng, **kwargs)
    except TypeError as exc:
        raise ValueError(f"bad arguments for generator {name!r}: {exc}") from exc
    return Field(grid, values)


SelfSimilar = Callable[[float], Field]
