"""Deterministic identity checks for the spectral operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .generators import gaussian, random_solenoidal
from .spectral import Field, GridSpec


@dataclass
class Check:
    name: str
    measured: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.tol)

    def to_dict(self) -> dict:
        return {"name": self.name, "measured": float(self.measured), "tol": self.tol, "pass": self.passed}


def band_limited(grid: GridSpec, rng: np.random.Generator, comps: tuple = (), kmax: int = 16) -> Field:
    """Random real field whose spectrum is confined to |m_i| <= kmax."""
    raw = rng.normal(size=comps + grid.shape)
    hat = grid.fft(raw)
    band = np.ones(hat.shape[len(comps):], dtype=bool)
    for k in grid.k:
        band &= np.abs(k) * grid.length / (2 * np.pi) <= kmax
    return Field(grid, grid.ifft(hat * band))


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def operator_checks(grid: GridSpec | None = None, seed: int = 0) -> list:
    """Leray, Riesz, heat-semigroup and derivative identities on random band-limited fields."""
    g = grid or GridSpec(2, 128, 2 * np.pi)
    rng = np.random.default_rng(seed)
    v = band_limited(g, rng, (g.dim,))
    w = band_limited(g, rng, (g.dim,))
    f = band_limited(g, rng)
    x1 = g.coords[0]
    q = 2 * np.pi / g.length
    s1 = Field(g, np.sin(q * x1))
    out = []

    Pv = sp.leray_project(v)
    out.append(Check("leray_idempotent", _rel(sp.leray_project(Pv).values, Pv.values), 1e-10))
    out.append(Check("leray_divergence_free", float(np.abs(sp.divergence(Pv).values).max() / v.sup_norm()), 1e-10))
    lhs, rhs = sp.inner(Pv, w), sp.inner(v, sp.leray_project(w))
    out.append(Check("leray_self_adjoint", abs(lhs - rhs) / (sp.lp_norm(v, 2) * sp.lp_norm(w, 2)), 1e-10))
    fm = f - float(f.mean())
    out.append(Check("leray_kills_gradients", sp.leray_project(sp.gradient(fm)).sup_norm() / sp.gradient(fm).sup_norm(), 1e-10))
    sol = Field(g, random_solenoidal(g, rng, kmax=8))
    out.append(Check("leray_fixes_solenoidal", _rel(sp.leray_project(sol).values, sol.values), 1e-10))

    sym = max(
        float(np.abs(sp.riesz_riesz(f, i, j).values - sp.riesz_riesz(f, j, i).values).max())
        for i in range(g.dim)
        for j in range(g.dim)
    )
    out.append(Check("riesz_symmetry", sym, 0.0))
    trace = sum(sp.riesz_riesz(f, i, i).values for i in range(g.dim))
    out.append(Check("riesz_trace", _rel(trace, -(f.values - f.values.mean())), 1e-10))
    out.append(Check("riesz_single_mode", _rel(sp.riesz_riesz(s1, 0, 0).values, -s1.values), 1e-10))

    a = sp.heat_semigroup(sp.heat_semigroup(f, 0.013), 0.021)
    out.append(Check("heat_semigroup_law", _rel(a.values, sp.heat_semigroup(f, 0.034).values), 1e-10))
    out.append(Check("heat_identity_at_zero", float(np.abs(sp.heat_semigroup(f, 0.0).values - f.values).max()), 0.0))
    const = Field(g, np.full(g.shape, 2.5))
    out.append(Check("heat_preserves_constants", _rel(sp.heat_semigroup(const, 0.7).values, const.values), 1e-12))
    sigma, t = 6 * g.h, 0.05 * (g.length / (2 * np.pi)) ** 2
    var = sigma**2 + 2 * t
    if var > (g.length / 8) ** 2:
        raise ValueError("grid too coarse for the Gaussian heat oracle")
    g0 = Field(g, gaussian(g, sigma))
    exact = (sigma**2 / var) ** (g.dim / 2) * gaussian(g, np.sqrt(var))
    out.append(Check("heat_gaussian_oracle", _rel(sp.heat_semigroup(g0, t).values, exact), 1e-8))
    contr = sp.lp_norm(sp.heat_semigroup(f, 0.1), 2) - sp.lp_norm(f, 2)
    out.append(Check("heat_l2_contraction", max(contr, 0.0), 0.0))

    out.append(Check("gradient_single_mode", _rel(sp.gradient(s1).values[0], q * np.cos(q * x1)), 1e-10))
    out.append(Check("div_grad_is_laplacian", _rel(sp.divergence(sp.gradient(f)).values, sp.laplacian(f).values), 1e-10))
    inv = -sp.laplacian(sp.inverse_laplacian(f)).values
    out.append(Check("inverse_laplacian", _rel(inv, f.values - f.values.mean()), 1e-10))
    e1 = (1,) + (0,) * (g.dim - 1)
    e2 = (0, 1) + (0,) * (g.dim - 2)
    e12 = (1, 1) + (0,) * (g.dim - 2)
    mixed = sp.partial_alpha(sp.partial_alpha(f, e1), e2).values
    out.append(Check("partial_alpha_commute", _rel(mixed, sp.partial_alpha(f, e12).values), 1e-10))
    return out
