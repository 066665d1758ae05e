"""The stationary coupled system: weak residuals, pressure recovery, integral
identities, the derivative bootstrap and the regularity pipeline.

The system, for a velocity U, pressure P and unit director V, is

    -Lap U + div(U (x) U) + div(grad V . grad V) + grad P = 0,   div U = 0,
    -Lap V + div(V (x) U) = |grad V|^2 V,

with (grad V . grad V)_ij = sum_k d_i V_k d_j V_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .morrey import (
    BallSampling,
    DecayReport,
    MorreyParams,
    check_decay_condition,
    decay_gate,
    holder_estimate,
    morrey_norm,
)
from .spectral import (
    Field,
    GridSpec,
    derivative_multiplier,
    divergence,
    deformation_tensor,
    grad_hat,
    inv_laplacian_multiplier,
    leray_hat,
    multi_indices,
)

RESIDUAL_TOL = 1e-6


# --- triplets ----------------------------------------------------------------


@dataclass
class WeakSolutionTriplet:
    """Candidate (U, P, V); ``P=None`` marks the pressure as unknown."""

    U: Field
    V: Field
    P: Field | None = None
    check: bool = True

    def __post_init__(self):
        g = self.U.grid
        if self.V.grid != g or (self.P is not None and self.P.grid != g):
            raise ValueError("triplet fields live on different grids")
        if self.U.rank != 1 or self.V.rank != 1 or (self.P is not None and self.P.rank != 0):
            raise ValueError("expected vector U, vector V and scalar P")
        if self.check:
            unit = float(np.abs(self.V.pointwise_norm() - 1.0).max())
            if unit > 1e-10:
                raise ValueError(f"director is not unit length (max deviation {unit:.3e})")
            div = float(np.abs(divergence(self.U).values).max())
            if div > 1e-8:
                raise ValueError(f"U is not divergence free (max |div U| = {div:.3e})")

    @property
    def grid(self) -> GridSpec:
        return self.U.grid

    @property
    def gradV(self) -> Field:
        return deformation_tensor(self.V)


# --- test bank ---------------------------------------------------------------


def bump(grid: GridSpec, center: Sequence[float], width: float) -> np.ndarray:
    """prod_i exp(-1/(1 - s_i^2)), s_i = 2 (x_i - c_i)/width, zero for |s_i| >= 1."""
    L = grid.length
    out = np.ones(grid.shape)
    for x, c in zip(grid.coords, center):
        s = 2 * (np.mod(x - c + L / 2, L) - L / 2) / width
        inside = np.abs(s) < 1
        out = out * np.where(inside, np.exp(-1.0 / np.where(inside, 1 - s * s, 1.0)), 0.0)
    return out


@dataclass(frozen=True)
class TestBank:
    """Scalar bumps plus their vector and solenoidal versions, each with a W^{2,1} norm."""

    grid: GridSpec
    scalars: np.ndarray
    vectors: np.ndarray
    solenoidal: np.ndarray
    scalar_norms: np.ndarray
    vector_norms: np.ndarray
    solenoidal_norms: np.ndarray

    @property
    def size(self) -> int:
        return len(self.scalars) + len(self.vectors) + len(self.solenoidal)


def _w21(grid: GridSpec, tests: np.ndarray) -> np.ndarray:
    """Grid W^{2,1} norms of a stack of scalar or vector tests (first axis indexes tests)."""
    n = grid.dim
    hat = grid.fft(tests)
    grad = grid.ifft(np.stack([1j * k * hat for k in grid.k_odd], axis=1))
    hess = grid.ifft(
        np.stack([derivative_multiplier(grid, _unit2(n, i, j)) * hat for i in range(n) for j in range(n)], axis=1)
    )

    def l1(a):
        comps = tuple(range(1, a.ndim - n))
        mag = np.sqrt(np.sum(a**2, axis=comps)) if comps else np.abs(a)
        return mag.sum(axis=tuple(range(1, mag.ndim))) * grid.cell_volume

    return l1(tests) + l1(grad) + l1(hess)


def _unit2(n: int, i: int, j: int) -> tuple:
    a = [0] * n
    a[i] += 1
    a[j] += 1
    return tuple(a)


@lru_cache(maxsize=8)
def build_test_bank(grid: GridSpec) -> TestBank:
    """Bumps of widths L/4 and L/8 on the {-L/4, 0, L/4}^n lattice, each also shifted by w/4."""
    L = grid.length
    n = grid.dim
    lattice = list(product((-L / 4, 0.0, L / 4), repeat=n))
    scal = []
    for w in (L / 4, L / 8):
        for c in lattice:
            scal.append(bump(grid, c, w))
            scal.append(bump(grid, tuple(ci + w / 4 for ci in c), w))
    scalars = np.array(scal)
    vectors = np.zeros((len(scal) * n, n) + grid.shape)
    for t, s in enumerate(scal):
        for i in range(n):
            vectors[t * n + i, i] = s
    sol_hat = np.stack([leray_hat(grid, grid.fft(v)) for v in vectors])
    solenoidal = grid.ifft(sol_hat)
    return TestBank(
        grid, scalars, vectors, solenoidal, _w21(grid, scalars), _w21(grid, vectors), _w21(grid, solenoidal)
    )


def _test_derivatives(grid: GridSpec, tests: np.ndarray):
    """Laplacian and gradient (d_j phi_i stored as [t, j, i]) of a stack of vector tests."""
    hat = grid.fft(tests)
    lap = grid.ifft(-grid.ksq * hat)
    grad = grid.ifft(np.stack([1j * k * hat for k in grid.k_odd], axis=1))
    return lap, grad


def _mag(a: np.ndarray, comps: int) -> np.ndarray:
    """Pointwise Euclidean norm over the first ``comps`` axes after the leading one(s)."""
    return np.sqrt(np.sum(a**2, axis=tuple(range(a.ndim - 1 - comps, a.ndim - 1))))


def _pairings(grid: GridSpec, tests: np.ndarray, vec=None, tens=None, src=None, chunk: int = 16) -> tuple:
    """For each vector test phi: the pairing <vec, Lap phi> + sum_ij <tens_ij, d_j phi_i> + <src, phi>
    and the same sum taken over pointwise magnitudes (its Cauchy-Schwarz majorant)."""
    nums, dens = [], []
    hn = grid.cell_volume
    n = grid.dim
    for a in range(0, len(tests), chunk):
        block = tests[a : a + chunk]
        lap, grad = _test_derivatives(grid, block)
        t = len(block)
        num = np.zeros(t)
        den = np.zeros(t)
        for data, test, c in ((vec, lap, 1), (tens, grad, 2), (src, block, 1)):
            if data is None:
                continue
            if c == 2:
                test = np.swapaxes(test, 1, 2)
            tf = test.reshape(t, n**c, -1)
            df = data.reshape(n**c, -1)
            num += np.einsum("tcx,cx->t", tf, df)
            den += np.sqrt(np.sum(tf**2, axis=1)) @ np.sqrt(np.sum(df**2, axis=0))
        nums.append(num * hn)
        dens.append(den * hn)
    return np.concatenate(nums), np.concatenate(dens)


def _relative(num: np.ndarray, den: np.ndarray) -> float:
    """max over tests of |pairing| / majorant, with 0/0 read as 0."""
    scale = np.finfo(float).tiny
    ratio = np.where(den > scale, np.abs(num) / np.where(den > scale, den, 1.0), 0.0)
    return float(ratio.max()) if ratio.size else 0.0


def _w21_normalized(num: np.ndarray, norms: np.ndarray, data_scale: float) -> float:
    return float(np.max(np.abs(num) / norms) / data_scale)


# --- residuals ---------------------------------------------------------------


@dataclass
class ResidualReport:
    """Relative residuals: each pairing divided by its pointwise-magnitude majorant.

    ``w21`` holds the alternative normalization by ||phi||_{W^{2,1}} times
    (1 + data sup norms), kept for reference.
    """

    momentum_residual: float
    director_residual: float
    divergence_residual: float
    test_bank_size: int
    momentum_full_residual: float | None = None
    w21: dict = field(default_factory=dict)
    tol: float = RESIDUAL_TOL

    @property
    def passed(self) -> bool:
        return max(self.momentum_residual, self.director_residual, self.divergence_residual) <= self.tol

    def to_dict(self) -> dict:
        d = {
            "momentum": float(self.momentum_residual),
            "director": float(self.director_residual),
            "divergence": float(self.divergence_residual),
            "test_bank_size": self.test_bank_size,
            "tol": self.tol,
            "pass": self.passed,
            "w21_normalized": {k: float(v) for k, v in self.w21.items()},
        }
        if self.momentum_full_residual is not None:
            d["momentum_with_pressure"] = float(self.momentum_full_residual)
        return d


def _data_scale(*sups: float) -> float:
    return 1.0 + sum(sups)


def _ericksen(gradV: np.ndarray) -> np.ndarray:
    return np.einsum("ik...,jk...->ij...", gradV, gradV)


def _pressure_diag(P: Field) -> np.ndarray:
    """P - mean(P) on the diagonal; the mean pairs to zero with div phi."""
    n = P.grid.dim
    return np.einsum("ij,...->ij...", np.eye(n), P.values - P.values.mean())


def residual_very_weak(
    triplet: WeakSolutionTriplet, test_bank: TestBank | None = None, tol: float = RESIDUAL_TOL
) -> ResidualReport:
    """Distributional residuals of the coupled system against a finite bank of tests.

    Every derivative of the equations sits on the tests except those inside
    grad V itself; pressure drops out against solenoidal tests. When P is
    known, a second momentum residual against raw vector bumps includes it.
    """
    g = triplet.grid
    bank = test_bank or build_test_bank(g)
    if bank.size == 0:
        raise ValueError("empty test bank")
    U, V = triplet.U.values, triplet.V.values
    G = triplet.gradV.values
    S = np.einsum("i...,j...->ij...", U, U) + _ericksen(G)
    supU, supG, supV = triplet.U.sup_norm(), triplet.gradV.sup_norm(), triplet.V.sup_norm()
    scale = _data_scale(supU, supU**2, supG**2, supV * (1 + supU), supV * supG**2)

    mom = _pairings(g, bank.solenoidal, vec=U, tens=S)
    vu = np.einsum("i...,j...->ij...", V, U)
    cubic = np.sum(G**2, axis=(0, 1)) * V
    dire = _pairings(g, bank.vectors, vec=V, tens=vu, src=cubic)
    divr = _scalar_pairings(g, bank.scalars, U)

    full = None
    if triplet.P is not None:
        full = _relative(*_pairings(g, bank.vectors, vec=U, tens=S + _pressure_diag(triplet.P)))
    w21 = {
        "momentum": _w21_normalized(mom[0], bank.solenoidal_norms, scale),
        "director": _w21_normalized(dire[0], bank.vector_norms, scale),
        "divergence": _w21_normalized(divr[0], bank.scalar_norms, scale),
    }
    return ResidualReport(
        momentum_residual=_relative(*mom),
        director_residual=_relative(*dire),
        divergence_residual=_relative(*divr),
        test_bank_size=bank.size,
        momentum_full_residual=full,
        w21=w21,
        tol=tol,
    )


def _scalar_pairings(grid: GridSpec, scalars: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """<vec, grad chi> and its magnitude majorant for each scalar test chi."""
    hat = grid.fft(scalars)
    grad = grid.ifft(np.stack([1j * k * hat for k in grid.k_odd], axis=1))
    n = grid.dim
    gf = grad.reshape(len(scalars), n, -1)
    vf = vec.reshape(n, -1)
    num = np.einsum("tjx,jx->t", gf, vf) * grid.cell_volume
    den = (np.sqrt(np.sum(gf**2, axis=1)) @ np.sqrt(np.sum(vf**2, axis=0))) * grid.cell_volume
    return num, den


# --- pressure and integral identities ---------------------------------------


def _product_hat(grid: GridSpec, values: np.ndarray, dealias: bool) -> np.ndarray:
    hat = grid.fft(values)
    return hat * grid.dealias_mask if dealias else hat


def pressure_from_UV(U: Field, V: Field, dealias: bool = True) -> Field:
    """P = sum_ij R_i R_j (U_i U_j + sum_k d_i V_k d_j V_k), mean free."""
    g = U.grid
    if V.grid != g:
        raise ValueError("U and V live on different grids")
    T = np.einsum("i...,j...->ij...", U.values, U.values) + _ericksen(deformation_tensor(V).values)
    th = _product_hat(g, T, dealias)
    inv = inv_laplacian_multiplier(g)
    ph = sum(derivative_multiplier(g, _unit2(g.dim, i, j)) * inv * th[i, j] for i in range(g.dim) for j in range(g.dim))
    return Field.from_hat(g, ph)


def _rows_div(grid: GridSpec, th: np.ndarray) -> np.ndarray:
    return np.stack([sum(1j * grid.k_odd[j] * th[i, j] for j in range(grid.dim)) for i in range(grid.dim)])


def integral_rhs(triplet: WeakSolutionTriplet, dealias: bool = True) -> tuple:
    """Right sides of U = -(-Lap)^-1 P div(U(x)U + gradV.gradV) and
    V = -(-Lap)^-1 div(V(x)U) + (-Lap)^-1 (|grad V|^2 V)."""
    g = triplet.grid
    U, V, G = triplet.U.values, triplet.V.values, triplet.gradV.values
    inv = inv_laplacian_multiplier(g)
    th = _product_hat(g, np.einsum("i...,j...->ij...", U, U) + _ericksen(G), dealias)
    u_rhs = Field.from_hat(g, -inv * leray_hat(g, _rows_div(g, th)))
    vh = _product_hat(g, np.einsum("i...,j...->ij...", V, U), dealias)
    ch = _product_hat(g, np.sum(G**2, axis=(0, 1)) * V, dealias)
    v_rhs = Field.from_hat(g, inv * (ch - _rows_div(g, vh)))
    return u_rhs, v_rhs


@dataclass
class IdentityReport:
    U_mismatch: float
    V_mismatch: float
    U_morrey_mismatch: float
    V_morrey_mismatch: float
    note: str = "comparison modulo constants: (-Lap)^-1 removes the mean"

    def to_dict(self) -> dict:
        return {
            "U_mismatch": float(self.U_mismatch),
            "V_mismatch": float(self.V_mismatch),
            "U_morrey_mismatch": float(self.U_morrey_mismatch),
            "V_morrey_mismatch": float(self.V_morrey_mismatch),
            "note": self.note,
        }


def _demean(f: Field) -> Field:
    m = f.mean()
    return Field(f.grid, f.values - m.reshape(m.shape + (1,) * f.grid.dim))


def integral_identity_check(
    triplet: WeakSolutionTriplet, p: float = 4.0, sampling: BallSampling | None = None, dealias: bool = True
) -> IdentityReport:
    g = triplet.grid
    u_rhs, v_rhs = integral_rhs(triplet, dealias)
    du = _demean(triplet.U) - u_rhs
    dv = _demean(triplet.V) - v_rhs
    params = MorreyParams(2.0, p, g.dim)
    sampling = sampling or BallSampling.default(g)
    return IdentityReport(
        du.sup_norm(),
        dv.sup_norm(),
        morrey_norm(du, params, sampling).value,
        morrey_norm(dv, params, sampling).value,
    )


# --- derivative bootstrap ----------------------------------------------------


def _derive(grid: GridSpec, hat: np.ndarray, alpha: tuple) -> np.ndarray:
    if not any(alpha):
        return grid.ifft(hat)
    return grid.ifft(derivative_multiplier(grid, alpha) * hat)


def _compositions(alpha: tuple, parts: int):
    """All ordered splits alpha = beta_1 + ... + beta_parts with their multinomial weight."""
    if parts == 1:
        yield (alpha,), 1
        return
    for beta in product(*(range(a + 1) for a in alpha)):
        rest = tuple(a - b for a, b in zip(alpha, beta))
        w = math.prod(math.comb(a, b) for a, b in zip(alpha, beta))
        for tail, wt in _compositions(rest, parts - 1):
            yield (beta,) + tail, w * wt


class _DerivCache:
    def __init__(self, grid: GridSpec, field_: Field):
        self.grid = grid
        self.hat = field_.hat
        self.cache: dict = {}

    def __call__(self, alpha: tuple) -> np.ndarray:
        if alpha not in self.cache:
            self.cache[alpha] = _derive(self.grid, self.hat, alpha)
        return self.cache[alpha]


def _split(alpha: tuple) -> tuple:
    """alpha = alpha1 + alpha2 with alpha1 the first unit direction present in alpha."""
    i = next(k for k, a in enumerate(alpha) if a)
    a1 = tuple(int(k == i) for k in range(len(alpha)))
    return a1, tuple(a - b for a, b in zip(alpha, a1))


def bootstrap_identity(triplet: WeakSolutionTriplet, alpha: tuple, dealias: bool = True) -> tuple:
    """d^alpha U and d^alpha V read off the integral identities via the Leibniz rule.

    The order-one part alpha1 is applied to the whole product after the
    remaining derivatives alpha2 have been distributed across its factors.
    """
    g = triplet.grid
    n = g.dim
    dU = _DerivCache(g, triplet.U)
    dV = _DerivCache(g, triplet.V)
    if not any(alpha):
        return integral_rhs(triplet, dealias)
    a1, a2 = _split(alpha)
    # d^alpha2 of U(x)U and of gradV.gradV = sum_k d_i V_k d_j V_k
    quad = np.zeros((n, n) + g.shape)
    for (b, c), w in _compositions(a2, 2):
        quad += w * np.einsum("i...,j...->ij...", dU(b), dU(c))
        gb = np.stack([dV(_add_unit(b, i)) for i in range(n)])
        gc = np.stack([dV(_add_unit(c, j)) for j in range(n)])
        quad += w * np.einsum("ik...,jk...->ij...", gb, gc)
    vu = np.zeros((n, n) + g.shape)
    for (b, c), w in _compositions(a2, 2):
        vu += w * np.einsum("i...,j...->ij...", dV(b), dU(c))
    cubic = np.zeros((n,) + g.shape)
    for (b, c, d), w in _compositions(a2, 3):
        for i in range(n):
            cubic += w * np.einsum("k...,k...->...", dV(_add_unit(b, i)), dV(_add_unit(c, i))) * dV(d)
    m1 = derivative_multiplier(g, a1)
    inv = inv_laplacian_multiplier(g)
    qh = m1 * _product_hat(g, quad, dealias)
    u_alpha = Field.from_hat(g, -inv * leray_hat(g, _rows_div(g, qh)))
    vh = m1 * _product_hat(g, vu, dealias)
    ch = m1 * _product_hat(g, cubic, dealias)
    v_alpha = Field.from_hat(g, inv * (ch - _rows_div(g, vh)))
    return u_alpha, v_alpha


def _add_unit(beta: tuple, i: int) -> tuple:
    return tuple(b + (k == i) for k, b in enumerate(beta))


@dataclass
class BootstrapEntry:
    alpha: tuple
    identity_mismatch_U: float
    identity_mismatch_V: float
    norms: dict
    holder: dict

    @property
    def identity_mismatch(self) -> float:
        return max(self.identity_mismatch_U, self.identity_mismatch_V)

    def to_dict(self) -> dict:
        return {
            "alpha": list(self.alpha),
            "identity_mismatch": float(self.identity_mismatch),
            "identity_mismatch_U": float(self.identity_mismatch_U),
            "identity_mismatch_V": float(self.identity_mismatch_V),
            "norms": {k: float(v) for k, v in self.norms.items()},
            "holder": {k: (None if v is None else float(v)) for k, v in self.holder.items()},
        }


@dataclass
class BootstrapReport:
    p: float
    K: int
    entries: list

    @property
    def max_identity_mismatch(self) -> float:
        return max((e.identity_mismatch for e in self.entries), default=0.0)

    def holder_fits(self) -> list:
        return [v for e in self.entries for v in e.holder.values() if v is not None]

    def to_dict(self) -> list:
        return [e.to_dict() for e in self.entries]


def bootstrap_derivatives(
    triplet: WeakSolutionTriplet,
    p: float,
    K: int = 3,
    sigmas: Sequence[float] = (1.0,),
    sampling: BallSampling | None = None,
    holder_pairs: int = 200,
    seed: int = 0,
    dealias: bool = True,
) -> BootstrapReport:
    """Compare identity-derived and direct derivatives up to order K and record their norms."""
    g = triplet.grid
    if not p > g.dim:
        raise ValueError(f"bootstrap requires p > n, got p={p}")
    if K > 4 or K > g.max_order:
        raise ValueError(f"derivative order {K} exceeds the resolution guard (4)")
    sampling = sampling or BallSampling.default(g)
    P = triplet.P if triplet.P is not None else pressure_from_UV(triplet.U, triplet.V, dealias)
    dU, dV, dP = _DerivCache(g, triplet.U), _DerivCache(g, triplet.V), _DerivCache(g, P)
    entries = []
    for order in range(0, K + 1):
        for alpha in multi_indices(g.dim, order):
            u_id, v_id = bootstrap_identity(triplet, alpha, dealias)
            fu, fv, fp = Field(g, dU(alpha)), Field(g, dV(alpha)), Field(g, dP(alpha))
            if order == 0:
                fu_c, fv_c = _demean(fu), _demean(fv)
            else:
                fu_c, fv_c = fu, fv
            norms = {}
            for s in sigmas:
                params = MorreyParams(2.0 * s, p * s, g.dim)
                tag = "" if s == 1 else f"_sigma{s:g}"
                norms["U" + tag] = morrey_norm(fu, params, sampling).value
                norms["V" + tag] = morrey_norm(fv, params, sampling).value
                norms["P" + tag] = morrey_norm(fp, params, sampling).value
            holder = {}
            for name, f in (("U", fu), ("V", fv), ("P", fp)):
                h = holder_estimate(f, holder_pairs, seed)
                holder[name] = h.beta if h.defined else None
            entries.append(
                BootstrapEntry(alpha, (fu_c - u_id).sup_norm(), (fv_c - v_id).sup_norm(), norms, holder)
            )
    return BootstrapReport(p, K, entries)


# --- regularity pipeline -----------------------------------------------------


@dataclass
class RegularityReport:
    p: float
    dim: int
    hypotheses: dict
    decay: DecayReport
    residuals: ResidualReport
    norms: dict
    bootstrap: BootstrapReport | None
    holder_floor: float
    holder_tol: float
    holder_pass: bool | None
    verdict: str

    @property
    def hypotheses_met(self) -> bool:
        return all(self.hypotheses.values())

    def to_dict(self) -> dict:
        return {
            "p": float(self.p),
            "dim": self.dim,
            "hypotheses": {k: bool(v) for k, v in self.hypotheses.items()},
            "decay": self.decay.to_dict(),
            "residuals": self.residuals.to_dict(),
            "norms": {k: float(v) for k, v in self.norms.items()},
            "bootstrap": None if self.bootstrap is None else self.bootstrap.to_dict(),
            "holder": {
                "floor": self.holder_floor,
                "tol": self.holder_tol,
                "fits": None if self.bootstrap is None else [float(b) for b in self.bootstrap.holder_fits()],
                "pass": self.holder_pass,
            },
            "verdict": self.verdict,
        }


def regularity_report(
    triplet: WeakSolutionTriplet,
    p: float,
    K: int = 3,
    sampling: BallSampling | None = None,
    holder_tol: float = 0.1,
    residual_tol: float = RESIDUAL_TOL,
    seed: int = 0,
) -> RegularityReport:
    """Run decay gate, residual gate, pressure recovery, bootstrap and Hölder fits.

    Verdicts: ``hypotheses_not_met`` (decay gate failed, nothing further is
    claimed), ``not_a_solution`` (residual gate failed),
    ``holder_floor_failed`` and ``regular``.
    """
    g = triplet.grid
    if not p > g.dim:
        raise ValueError(f"regularity claims require p > n, got p={p}, n={g.dim}")
    sampling = sampling or BallSampling.default(g)
    gradV = triplet.gradV
    decay = check_decay_condition(triplet.U, gradV, p)
    residuals = residual_very_weak(triplet, tol=residual_tol)
    params = MorreyParams(2.0, p, g.dim)
    norms = {
        "U_morrey": morrey_norm(triplet.U, params, sampling).value,
        "gradV_morrey": morrey_norm(gradV, params, sampling).value,
    }
    hyp = {"p_gt_n": True, "decay_condition": decay.passed, "very_weak_solution": residuals.passed}
    floor = 1.0 - g.dim / p
    boot = None
    holder_pass = None
    if not decay.passed:
        verdict = "hypotheses_not_met"
    elif not residuals.passed:
        verdict = "not_a_solution"
    else:
        if triplet.P is None:
            triplet = WeakSolutionTriplet(triplet.U, triplet.V, pressure_from_UV(triplet.U, triplet.V), check=False)
        boot = bootstrap_derivatives(triplet, p, K, sampling=sampling, seed=seed)
        holder_pass = all(b >= floor - holder_tol for b in boot.holder_fits())
        verdict = "regular" if holder_pass else "holder_floor_failed"
    return RegularityReport(p, g.dim, hyp, decay, residuals, norms, boot, floor, holder_tol, holder_pass, verdict)


def constant_director(grid: GridSpec, axis: int = 0) -> Field:
    v = np.zeros((grid.dim,) + grid.shape)
    v[axis] = 1.0
    return Field(grid, v)


def nse_mode(U: Field, P: Field | None, p: float, **kwargs) -> RegularityReport:
    """Regularity pipeline for steady Navier-Stokes: the director is frozen to e1."""
    return regularity_report(WeakSolutionTriplet(U, constant_director(U.grid), P), p, **kwargs)


# --- MHD variant -------------------------------------------------------------


@dataclass
class MHDReport:
    momentum_residual: float
    induction_residual: float
    antisymmetry_residual: float
    divergence_residual: float
    test_bank_size: int
    decay: DecayReport
    tol: float = RESIDUAL_TOL

    @property
    def passed(self) -> bool:
        return max(self.momentum_residual, self.induction_residual, self.divergence_residual) <= self.tol

    def to_dict(self) -> dict:
        return {
            "momentum": float(self.momentum_residual),
            "induction": float(self.induction_residual),
            "antisymmetry": float(self.antisymmetry_residual),
            "divergence": float(self.divergence_residual),
            "test_bank_size": self.test_bank_size,
            "decay": self.decay.to_dict(),
            "pass": self.passed,
        }


def mhd_residual(U: Field, B: Field, P: Field | None, p: float, test_bank: TestBank | None = None) -> MHDReport:
    """Weak residuals of -Lap U + div(U(x)U - B(x)B) + grad P = 0 and -Lap B + div(B(x)U - U(x)B) = 0."""
    g = U.grid
    if B.grid != g:
        raise ValueError("U and B live on different grids")
    for name, f in (("U", U), ("B", B)):
        d = float(np.abs(divergence(f).values).max())
        if d > 1e-8:
            raise ValueError(f"{name} is not divergence free (max |div| = {d:.3e})")
    bank = test_bank or build_test_bank(g)
    u, b = U.values, B.values
    lorentz = np.einsum("i...,j...->ij...", u, u) - np.einsum("i...,j...->ij...", b, b)
    induct = np.einsum("i...,j...->ij...", b, u) - np.einsum("i...,j...->ij...", u, b)
    if P is None:
        mom_r = _relative(*_pairings(g, bank.solenoidal, vec=u, tens=lorentz))
    else:
        mom_r = _relative(*_pairings(g, bank.vectors, vec=u, tens=lorentz + _pressure_diag(P)))
    ind_r = _relative(*_pairings(g, bank.vectors, vec=b, tens=induct))
    anti = _relative(*_pairings(g, bank.vectors, tens=induct))
    divr = max(_relative(*_scalar_pairings(g, bank.scalars, u)), _relative(*_scalar_pairings(g, bank.scalars, b)))
    decay = decay_gate({"U": U, "B": B}, p)
    return MHDReport(
        mom_r,
        ind_r,
        anti,
        float(divr),
        bank.size,
        decay,
    )
