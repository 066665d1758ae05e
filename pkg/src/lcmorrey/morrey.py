"""Sampled-ball Morrey norms, the origin-centred decay gate, the E_T norm
and Hölder-exponent fits.

The double supremum over centres and radii is replaced by a finite lattice
of centres and a geometric ladder of radii, so every value returned here is
a lower bound for the continuum quantity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .spectral import Field, GridSpec


@dataclass(frozen=True)
class MorreyParams:
    """Exponents of the homogeneous Morrey space M^{r,p} in dimension ``dim``."""

    r: float = 2.0
    p: float = 4.0
    dim: int = 2

    def __post_init__(self):
        if not (1 <= self.r < self.p):
            raise ValueError(f"need 1 <= r < p, got r={self.r}, p={self.p}")

    @property
    def supercritical(self) -> bool:
        return self.p > self.dim


@dataclass(frozen=True)
class BallSampling:
    """Ball centres (physical coordinates of grid nodes) and radii."""

    centers: tuple
    radii: tuple

    def __post_init__(self):
        if not self.centers or not self.radii:
            raise ValueError("ball sampling needs at least one centre and one radius")

    @classmethod
    def default(
        cls, grid: GridSpec, levels: int = 6, per_octave: int = 1, lattice: bool = True
    ) -> "BallSampling":
        """Centres on the {-L/4, 0, L/4}^n lattice, radii (L/4) 2^(-j/per_octave) down to 2h."""
        q = grid.length / 4
        if lattice:
            axes = [(-q, 0.0, q)] * grid.dim
            centers = tuple(tuple(c) for c in np.array(np.meshgrid(*axes, indexing="ij")).reshape(grid.dim, -1).T)
        else:
            centers = ((0.0,) * grid.dim,)
        # origin first so ties resolve to it
        origin = (0.0,) * grid.dim
        centers = (origin,) + tuple(c for c in centers if any(ci != 0.0 for ci in c))
        j = np.arange(levels * per_octave + 1)
        radii = q * 2.0 ** (-j / per_octave)
        radii = radii[radii >= 2 * grid.h * (1 - 1e-12)]
        return cls(centers, tuple(float(r) for r in radii))

    @classmethod
    def origin(cls, grid: GridSpec, levels: int = 6, per_octave: int = 1) -> "BallSampling":
        return cls.default(grid, levels, per_octave, lattice=False)

    def validate(self, grid: GridSpec) -> None:
        tol = 1e-12 * grid.length
        if max(self.radii) > grid.length / 4 + tol:
            raise ValueError(f"radius {max(self.radii):g} exceeds L/4 = {grid.length / 4:g}")
        if min(self.radii) < 2 * grid.h - tol:
            raise ValueError(f"radius {min(self.radii):g} is below 2h = {2 * grid.h:g}")
        for c in self.centers:
            if len(c) != grid.dim:
                raise ValueError(f"centre {c} does not have {grid.dim} coordinates")


@lru_cache(maxsize=128)
def _sorted_distances(grid: GridSpec, center: tuple):
    """Node order by minimum-image distance to ``center`` and the sorted distances."""
    L = grid.length
    sq = 0.0
    for x, c in zip(grid.coords, center):
        d = np.mod(x - c + L / 2, L) - L / 2
        sq = sq + d * d
    dist = np.sqrt(sq).ravel()
    order = np.argsort(dist, kind="stable")
    return order, dist[order]


def ball_sums(density: np.ndarray, grid: GridSpec, center: tuple, radii: Sequence[float]):
    """Return (grid integral of ``density`` over each open ball, node counts)."""
    order, ds = _sorted_distances(grid, tuple(float(c) for c in center))
    cs = np.concatenate(([0.0], np.cumsum(density.ravel()[order])))
    counts = np.searchsorted(ds, np.asarray(radii, dtype=float), side="left")
    return cs[counts] * grid.cell_volume, counts


@dataclass
class MorreyEstimate:
    value: float
    witness_center: tuple
    witness_radius: float
    profile: list
    local_averages: np.ndarray = field(repr=False)
    ball_volumes: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "witness_center": [float(c) for c in self.witness_center],
            "witness_radius": float(self.witness_radius),
            "profile": [[float(R), float(v)] for R, v in self.profile],
        }


def morrey_norm(f: Field, params: MorreyParams, sampling: BallSampling | None = None) -> MorreyEstimate:
    """max over sampled balls of R^{n/p} (R^{-n} int_B |f|^r)^{1/r}."""
    g = f.grid
    if params.dim != g.dim:
        raise ValueError(f"params are for dim={params.dim}, field has dim={g.dim}")
    sampling = sampling or BallSampling.default(g)
    sampling.validate(g)
    radii = np.asarray(sampling.radii, dtype=float)
    n, r, p = g.dim, params.r, params.p
    density = f.pointwise_norm() ** r
    avg = np.empty((len(sampling.centers), radii.size))
    vol = np.empty_like(avg)
    for ci, c in enumerate(sampling.centers):
        sums, counts = ball_sums(density, g, c, radii)
        avg[ci] = sums / radii**n
        vol[ci] = counts * g.cell_volume
    vals = radii ** (n / p) * avg ** (1.0 / r)
    ci, ri = np.unravel_index(int(np.argmax(vals)), vals.shape)
    per_radius = vals.max(axis=0)
    return MorreyEstimate(
        value=float(vals[ci, ri]),
        witness_center=tuple(sampling.centers[ci]),
        witness_radius=float(radii[ri]),
        profile=[(float(R), float(v)) for R, v in zip(radii, per_radius)],
        local_averages=avg,
        ball_volumes=vol,
    )


@dataclass
class DecayReport:
    passed: bool
    worst_ratio: float
    radii: list
    ratios: dict
    tol: float

    def to_dict(self) -> dict:
        return {
            "pass": bool(self.passed),
            "worst_ratio": float(self.worst_ratio),
            "tol": self.tol,
            "profile": {
                k: [[float(R), float(v)] for R, v in zip(self.radii, vals)] for k, vals in self.ratios.items()
            },
        }


def decay_ratios(f: Field, p: float, radii: Sequence[float]) -> np.ndarray:
    """R^{-n} int_{|x|<R} |f|^2 divided by R^{-2n/p}, at the origin."""
    g = f.grid
    n = g.dim
    radii = np.asarray(radii, dtype=float)
    sums, _ = ball_sums(f.pointwise_norm() ** 2, g, (0.0,) * n, radii)
    return sums / radii**n * radii ** (2 * n / p)


def decay_gate(named: dict, p: float, sampling: BallSampling | None = None, tol: float = 0.05) -> DecayReport:
    """Origin-centred decay gate applied to every field in ``named``."""
    fields = list(named.values())
    g = fields[0].grid
    if any(f.grid != g for f in fields):
        raise ValueError("decay gate fields live on different grids")
    if not p > g.dim:
        raise ValueError(f"decay condition requires p > n, got p={p}, n={g.dim}")
    sampling = sampling or BallSampling.origin(g)
    sampling.validate(g)
    ratios = {k: decay_ratios(f, p, sampling.radii) for k, f in named.items()}
    worst = max(float(v.max()) for v in ratios.values())
    return DecayReport(worst <= 1 + tol, worst, list(sampling.radii), ratios, tol)


def check_decay_condition(
    U: Field, gradV: Field, p: float, sampling: BallSampling | None = None, tol: float = 0.05
) -> DecayReport:
    """Pass iff R^{-n} int_{|x|<R} |f|^2 <= (1 + tol) R^{-2n/p} at every sampled R, for f = U and grad V."""
    return decay_gate({"U": U, "gradV": gradV}, p, sampling, tol)


# --- E_T norm ---------------------------------------------------------------


def et_norm_parts(times: Sequence[float], fields: Sequence[Field], p: float, sampling: BallSampling | None = None):
    """(sup_t Morrey M^{2,p} norm, sup_t t^{n/2p} sup-norm) over the samples."""
    if len(fields) == 0:
        raise ValueError("empty trajectory")
    if len(times) != len(fields):
        raise ValueError("times and fields differ in length")
    g = fields[0].grid
    params = MorreyParams(2.0, p, g.dim)
    sampling = sampling or BallSampling.default(g)
    m = max(morrey_norm(f, params, sampling).value for f in fields)
    w = max(float(t) ** (g.dim / (2 * p)) * f.sup_norm() for t, f in zip(times, fields))
    return m, w


def et_norm_series(times, fields, p: float, sampling: BallSampling | None = None) -> float:
    m, w = et_norm_parts(times, fields, p, sampling)
    return m + w


def et_norm(traj, p: float, sampling: BallSampling | None = None) -> float:
    """E_T norm of a trajectory, summed over its velocity and matrix parts.

    ``traj`` is anything exposing ``times`` and ``series()`` returning a list
    of per-component field lists (see ``mild.Trajectory``), or a pair
    ``(times, fields)``.
    """
    if isinstance(traj, tuple):
        times, fields = traj
        return et_norm_series(times, fields, p, sampling)
    return sum(et_norm_series(traj.times, fs, p, sampling) for fs in traj.series())


# --- Hölder exponent ---------------------------------------------------------


@dataclass
class HolderReport:
    beta: float
    constant: float
    defined: bool
    lengths: list
    envelope: list

    def to_dict(self) -> dict:
        return {
            "beta_fit": float(self.beta) if self.defined else None,
            "constant_fit": float(self.constant) if self.defined else None,
            "defined": self.defined,
        }


def _offset_increment(values: np.ndarray, offset: Sequence[int], dim: int) -> float:
    """max_x |f(x+d) - f(x)| over node pairs that do not wrap around the box."""
    a = [Ellipsis]
    b = [Ellipsis]
    for d in offset:
        if d >= 0:
            a.append(slice(d, None))
            b.append(slice(None, values.shape[-dim] - d))
        else:
            a.append(slice(None, d))
            b.append(slice(-d, None))
    diff = values[tuple(a)] - values[tuple(b)]
    lead = tuple(range(diff.ndim - dim))
    if lead:
        diff = np.sqrt(np.sum(diff**2, axis=lead))
    else:
        diff = np.abs(diff)
    return float(diff.max()) if diff.size else 0.0


def holder_estimate(f: Field, sample_pairs: int = 400, seed: int = 0, bins: int = 10) -> HolderReport:
    """Fit the exponent of the upper envelope of |f(x) - f(y)| against |x - y|.

    Separations range over [2h, L/8]. For every sampled node offset the
    largest increment over all non-wrapping node pairs is taken; offsets are
    then binned by length and a least-squares line is fitted through the
    per-bin maxima in log-log coordinates.
    """
    if sample_pairs < 100:
        raise ValueError("holder_estimate needs at least 100 sampled offsets")
    g = f.grid
    n, h = g.dim, g.h
    rng = np.random.default_rng(seed)
    lo, hi = 2.0, g.length / 8 / h
    lengths = np.exp(rng.uniform(np.log(lo), np.log(hi), sample_pairs))
    dirs = rng.normal(size=(sample_pairs, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    offs = {tuple(int(v) for v in np.rint(l * d)) for l, d in zip(lengths, dirs)}
    for k in np.unique(np.rint(np.geomspace(lo, hi, 2 * bins)).astype(int)):
        for ax in range(n):
            e = [0] * n
            e[ax] = int(k)
            offs.add(tuple(e))
    offs = sorted(o for o in offs if lo - 1e-9 <= np.linalg.norm(o) <= hi + 1e-9)
    dist = np.array([np.linalg.norm(o) * h for o in offs])
    incr = np.array([_offset_increment(f.values, o, n) for o in offs])

    scale = max(f.sup_norm(), 1.0)
    if incr.max() <= 1e-10 * scale:
        return HolderReport(float("nan"), float("nan"), False, [], [])
    edges = np.geomspace(dist.min(), dist.max() * (1 + 1e-12), bins + 1)
    idx = np.clip(np.searchsorted(edges, dist, side="right") - 1, 0, bins - 1)
    bl, be = [], []
    for b in range(bins):
        sel = idx == b
        if sel.any() and incr[sel].max() > 0:
            k = int(np.argmax(np.where(sel, incr, -1.0)))
            bl.append(dist[k])
            be.append(incr[k])
    if len(bl) < 3:
        return HolderReport(float("nan"), float("nan"), False, bl, be)
    slope, icpt = np.polyfit(np.log(bl), np.log(be), 1)
    return HolderReport(float(slope), float(np.exp(icpt)), True, [float(v) for v in bl], [float(v) for v in be])
