"""Mild formulation of the auxiliary parabolic system.

The unknown is a pair (u, V): a solenoidal velocity and a matrix field that
stands in for the deformation tensor of the director. With a fixed unit
director d the integral equations read

    u(t) = e^{t Lap} u0 - B1(u, u)(t) - B2(V, V)(t)
    V(t) = e^{t Lap} V0 - B3(u, V)(t) + B4(V, V; d)(t)

where each B is a Duhamel integral int_0^t e^{(t-s) Lap} S(s) ds of a
quadratic source:

    B1: P div(u (x) u')        B2: P div(V . V')
    B3: grad (x) (u V)          B4: grad (x) ((V : V') d)

Time integrals use an exponential midpoint rule on the graded mesh
t_m = T (m/M)^gamma: the source on slice j is built from the averaged
states, and heat propagation across the slice is integrated exactly, so the
scheme is exact for sources that are constant in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .morrey import BallSampling, MorreyParams, et_norm_series, morrey_norm
from .spectral import (
    Field,
    GridSpec,
    divergence,
    grad_hat,
    heat_semigroup,
    leray_hat,
)
from .kernels import power_fit


@dataclass(frozen=True)
class SolverConfig:
    """Picard iteration settings for the auxiliary system."""

    p: float = 4.0
    T: float = 0.1
    steps: int = 16
    picard_max: int = 30
    picard_tol: float = 1e-8
    grading: float = 2.0
    max_halvings: int = 5
    contraction_target: float = 0.5
    dealias: bool = True

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if self.steps < 8:
            raise ValueError(f"need at least 8 time samples, got {self.steps}")
        if self.grading < 1:
            raise ValueError(f"grading exponent must be >= 1, got {self.grading}")
        if self.picard_max < 1:
            raise ValueError("picard_max must be at least 1")

    def check_dim(self, dim: int) -> None:
        if not self.p > dim:
            raise ValueError(f"need p > n, got p={self.p}, n={dim}")

    def mesh(self) -> np.ndarray:
        return graded_mesh(self.T, self.steps, self.grading)


def graded_mesh(T: float, steps: int, grading: float) -> np.ndarray:
    return T * (np.arange(steps + 1) / steps) ** grading


@dataclass
class TimeSeries:
    """Samples of one field on a time mesh starting at 0."""

    times: np.ndarray
    fields: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.fields) != self.times.size or self.times.size < 2:
            raise ValueError("a time series needs matching times and fields, at least two of each")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        grid = self.fields[0].grid
        if any(f.grid != grid for f in self.fields):
            raise ValueError("all samples must share one grid")

    @property
    def grid(self) -> GridSpec:
        return self.fields[0].grid

    def midpoint(self, j: int) -> np.ndarray:
        return 0.5 * (self.fields[j - 1].values + self.fields[j].values)

    def index_of(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-12 * max(1.0, abs(self.times[-1])):
            raise ValueError(f"t={t} is not a mesh point")
        return j

    def at(self, t: float) -> Field:
        return self.fields[self.index_of(t)]

    def _combine(self, other: "TimeSeries", op) -> "TimeSeries":
        if other.times.shape != self.times.shape or np.any(other.times != self.times):
            raise ValueError("time series live on different meshes")
        return TimeSeries(self.times, [op(a, b) for a, b in zip(self.fields, other.fields)])

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, s: float):
        return TimeSeries(self.times, [f * s for f in self.fields])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def sup_norm(self) -> float:
        return max(f.sup_norm() for f in self.fields)

    def et_norm(self, p: float, sampling: BallSampling | None = None) -> float:
        return et_norm_series(self.times, self.fields, p, sampling)

    @classmethod
    def heat(cls, f0: Field, times) -> "TimeSeries":
        return cls(times, [heat_semigroup(f0, float(t)) for t in times])

    @classmethod
    def constant(cls, f: Field, times) -> "TimeSeries":
        return cls(times, [f] * len(times))


@dataclass
class State:
    u: Field
    V: Field
    director: Field


@dataclass
class Trajectory:
    u: TimeSeries
    V: TimeSeries
    director: Field
    grading: float

    @property
    def times(self) -> np.ndarray:
        return self.u.times

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def series(self) -> list:
        return [self.u.fields, self.V.fields]

    @property
    def states(self) -> list:
        return [State(a, b, self.director) for a, b in zip(self.u.fields, self.V.fields)]

    def et_norm(self, p: float, sampling: BallSampling | None = None) -> float:
        return self.u.et_norm(p, sampling) + self.V.et_norm(p, sampling)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.u - other.u, self.V - other.V, self.director, self.grading)


# --- Duhamel machinery -------------------------------------------------------


def _phi(z: np.ndarray) -> np.ndarray:
    """(1 - e^{-z}) / z with the removable singularity filled in."""
    safe = np.where(z == 0, 1.0, z)
    return np.where(z == 0, 1.0, -np.expm1(-safe) / safe)


def duhamel(grid: GridSpec, times: np.ndarray, sources: Sequence[np.ndarray]) -> TimeSeries:
    """Accumulate int_0^{t_m} e^{(t_m - s) Lap} S(s) ds with S constant on each slice."""
    if len(sources) != len(times) - 1:
        raise ValueError("need one source per time slice")
    acc = np.zeros_like(sources[0])
    out = [grid.ifft(acc)]
    for j in range(1, len(times)):
        dt = times[j] - times[j - 1]
        z = grid.ksq * dt
        acc = np.exp(-z) * acc + dt * _phi(z) * sources[j - 1]
        out.append(grid.ifft(acc))
    return TimeSeries(times, [Field(grid, v) for v in out])


def _product_hat(grid: GridSpec, values: np.ndarray, dealias: bool) -> np.ndarray:
    hat = grid.fft(values)
    return hat * grid.dealias_mask if dealias else hat


def source_B1(grid, u, u2, dealias=True):
    th = _product_hat(grid, np.einsum("i...,j...->ij...", u, u2), dealias)
    return leray_hat(grid, _div_rows(grid, th))


def source_B2(grid, V, V2, dealias=True):
    th = _product_hat(grid, np.einsum("ik...,jk...->ij...", V, V2), dealias)
    return leray_hat(grid, _div_rows(grid, th))


def source_B3(grid, u, V, dealias=True):
    wh = _product_hat(grid, np.einsum("i...,ij...->j...", u, V), dealias)
    return grad_hat(grid, wh)


def source_B4(grid, V, V2, director, dealias=True):
    q = np.einsum("ij...,ij...->...", V, V2)
    wh = _product_hat(grid, q * director, dealias)
    return grad_hat(grid, wh)


def _div_rows(grid: GridSpec, th: np.ndarray) -> np.ndarray:
    return np.stack([sum(1j * grid.k_odd[j] * th[i, j] for j in range(grid.dim)) for i in range(grid.dim)])


def _same_mesh(*series: TimeSeries) -> np.ndarray:
    t0 = series[0].times
    for s in series[1:]:
        if s.times.shape != t0.shape or np.any(s.times != t0):
            raise ValueError("inputs are sampled on different meshes")
        if s.grid != series[0].grid:
            raise ValueError("inputs live on different grids")
    return t0


def _finish(result: TimeSeries, t: float | None):
    return result if t is None else result.at(t)


def B1(u: TimeSeries, u2: TimeSeries, t: float | None = None, dealias: bool = True):
    """int_0^t e^{(t-s) Lap} P div(u (x) u') ds on every mesh time, or at ``t``."""
    times = _same_mesh(u, u2)
    if t is not None:
        u.index_of(t)
    g = u.grid
    src = [source_B1(g, u.midpoint(j), u2.midpoint(j), dealias) for j in range(1, times.size)]
    return _finish(duhamel(g, times, src), t)


def B2(V: TimeSeries, V2: TimeSeries, t: float | None = None, dealias: bool = True):
    """int_0^t e^{(t-s) Lap} P div(V . V') ds."""
    times = _same_mesh(V, V2)
    if t is not None:
        V.index_of(t)
    g = V.grid
    src = [source_B2(g, V.midpoint(j), V2.midpoint(j), dealias) for j in range(1, times.size)]
    return _finish(duhamel(g, times, src), t)


def B3(u: TimeSeries, V: TimeSeries, t: float | None = None, dealias: bool = True):
    """int_0^t e^{(t-s) Lap} grad (x) (u V) ds with (uV)_j = sum_i u_i V_ij."""
    times = _same_mesh(u, V)
    if t is not None:
        u.index_of(t)
    g = u.grid
    src = [source_B3(g, u.midpoint(j), V.midpoint(j), dealias) for j in range(1, times.size)]
    return _finish(duhamel(g, times, src), t)


def B4(V: TimeSeries, V2: TimeSeries, director: Field, t: float | None = None, dealias: bool = True):
    """int_0^t e^{(t-s) Lap} grad (x) ((V : V') d) ds for the fixed director d."""
    times = _same_mesh(V, V2)
    if t is not None:
        V.index_of(t)
    if director.grid != V.grid:
        raise ValueError("director lives on a different grid")
    g = V.grid
    d = director.values
    src = [source_B4(g, V.midpoint(j), V2.midpoint(j), d, dealias) for j in range(1, times.size)]
    return _finish(duhamel(g, times, src), t)


def nonlinear_parts(u: TimeSeries, V: TimeSeries, director: Field, dealias: bool = True):
    """(B1(u,u) + B2(V,V), B4(V,V;d) - B3(u,V)) sharing one Duhamel sweep per unknown."""
    times = _same_mesh(u, V)
    g = u.grid
    d = director.values
    su, sv = [], []
    for j in range(1, times.size):
        ub, Vb = u.midpoint(j), V.midpoint(j)
        su.append(source_B1(g, ub, ub, dealias) + source_B2(g, Vb, Vb, dealias))
        sv.append(source_B4(g, Vb, Vb, d, dealias) - source_B3(g, ub, Vb, dealias))
    return duhamel(g, times, su), duhamel(g, times, sv)


def linear_part(u0: Field, V0: Field, director: Field, times, grading: float) -> Trajectory:
    return Trajectory(TimeSeries.heat(u0, times), TimeSeries.heat(V0, times), director, grading)


def fixed_point_map(X: Trajectory, lin: Trajectory, dealias: bool = True) -> Trajectory:
    """Right-hand side of the integral equations evaluated on X."""
    nu, nv = nonlinear_parts(X.u, X.V, X.director, dealias)
    return Trajectory(lin.u - nu, lin.V + nv, X.director, X.grading)


# --- Picard iteration --------------------------------------------------------


@dataclass
class PicardResult:
    traj: Trajectory
    et_norms: list
    increments: list
    converged: bool
    diverged: bool
    contraction_factor: float
    residual: float
    T_used: float
    halvings: int
    attempts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "diverged": self.diverged,
            "iterations": len(self.increments),
            "et_norm_per_iterate": [float(v) for v in self.et_norms],
            "increments": [float(v) for v in self.increments],
            "contraction_factor": _finite_or_none(self.contraction_factor),
            "fixed_point_residual": float(self.residual),
            "T_used": float(self.T_used),
            "halvings": self.halvings,
        }


def _finite_or_none(x: float):
    return float(x) if np.isfinite(x) else None


def _check_inputs(u0: Field, V0: Field, director: Field, cfg: SolverConfig) -> None:
    g = u0.grid
    if V0.grid != g or director.grid != g:
        raise ValueError("u0, V0 and director must share one grid")
    if u0.rank != 1 or V0.rank != 2 or director.rank != 1:
        raise ValueError("expected a vector u0, a matrix V0 and a vector director")
    cfg.check_dim(g.dim)
    div = np.abs(divergence(u0).values).max()
    if div > 1e-8:
        raise ValueError(f"initial velocity is not solenoidal (max |div u0| = {div:.3e})")
    unit = np.abs(director.pointwise_norm() - 1.0).max()
    if unit > 1e-12:
        raise ValueError(f"director is not unit length (max deviation {unit:.3e})")


def contraction_factor(increments: Sequence[float], floor: float) -> float:
    """Largest ratio of consecutive increments while both exceed ``floor``."""
    ratios = [b / a for a, b in zip(increments, increments[1:]) if a > floor and b > floor]
    return max(ratios) if ratios else 0.0


def _iterate(u0, V0, director, cfg: SolverConfig, sampling):
    p = cfg.p
    times = cfg.mesh()
    lin = linear_part(u0, V0, director, times, cfg.grading)
    X = lin
    norm0 = X.et_norm(p, sampling)
    norms = [norm0]
    incs = []
    converged = diverged = False
    for _ in range(cfg.picard_max):
        Y = fixed_point_map(X, lin, cfg.dealias)
        inc = (Y - X).et_norm(p, sampling)
        incs.append(inc)
        X = Y
        norms.append(X.et_norm(p, sampling))
        if norms[-1] > 1e3 * max(norm0, np.finfo(float).tiny) or not np.isfinite(norms[-1]):
            diverged = True
            break
        if inc < cfg.picard_tol:
            converged = True
            break
    floor = 1e3 * np.finfo(float).eps * max(norm0, 1.0)
    return X, lin, norms, incs, converged, diverged, contraction_factor(incs, floor)


def picard_solve(
    u0: Field,
    V0: Field,
    director: Field,
    cfg: SolverConfig,
    sampling: BallSampling | None = None,
) -> PicardResult:
    """Iterate the integral equations from the linear part until the E_T increment drops below tolerance.

    A run that diverges, fails to converge, or contracts more slowly than
    ``cfg.contraction_target`` is retried on half the horizon, at most
    ``cfg.max_halvings`` times.
    """
    _check_inputs(u0, V0, director, cfg)
    sampling = sampling or BallSampling.default(u0.grid)
    attempts = []
    run_cfg = cfg
    for halving in range(cfg.max_halvings + 1):
        X, lin, norms, incs, conv, div, factor = _iterate(u0, V0, director, run_cfg, sampling)
        attempts.append({"T": run_cfg.T, "converged": conv, "diverged": div, "contraction_factor": factor})
        ok = conv and factor <= cfg.contraction_target
        if ok or halving == cfg.max_halvings:
            break
        run_cfg = replace(run_cfg, T=run_cfg.T / 2)
    residual = (X - fixed_point_map(X, lin, cfg.dealias)).et_norm(cfg.p, sampling) if not div else float("inf")
    return PicardResult(X, norms, incs, conv, div, factor, residual, run_cfg.T, halving, attempts)


# --- exponent and uniqueness experiments ------------------------------------


@dataclass
class ContractionFit:
    T_list: np.ndarray
    norm_B12: np.ndarray
    norm_B34: np.ndarray
    slope_B12: float
    slope_B34: float
    constant_B12: float
    constant_B34: float
    predicted: float

    def to_dict(self) -> dict:
        return {
            "predicted_slope": self.predicted,
            "slope_B12": self.slope_B12,
            "slope_B34": self.slope_B34,
            "constant_B12": self.constant_B12,
            "constant_B34": self.constant_B34,
            "rows": [[float(a), float(b), float(c)] for a, b, c in zip(self.T_list, self.norm_B12, self.norm_B34)],
        }


InputLike = "Field | Callable[[float], Field]"


def _input_series(src, times: np.ndarray, T: float, eta: float) -> TimeSeries:
    if isinstance(src, Field):
        return TimeSeries.heat(src, times)
    return TimeSeries(times, [src(math.sqrt(t + eta * T)) for t in times])


def fit_sampling(grid: GridSpec, per_octave: int = 4) -> BallSampling:
    """Origin-centred balls on a fine radius ladder, used for exponent fits."""
    return BallSampling.origin(grid, levels=int(np.log2(grid.points)), per_octave=per_octave)


def contraction_exponent_fit(
    u0,
    V0,
    director: Field,
    p: float,
    T_list: Sequence[float],
    steps: int = 12,
    grading: float = 2.0,
    eta: float = 0.25,
    sampling: BallSampling | None = None,
    dealias: bool = True,
) -> ContractionFit:
    """Fit the T-exponent of the E_T norms of B1+B2 and B4-B3 on frozen inputs.

    ``u0`` and ``V0`` are either fields, frozen as their heat evolution, or
    callables ``sigma -> Field`` giving a family of profiles at width
    ``sigma = sqrt(s + eta T)``; the latter keeps the inputs resolved and
    self-similar across horizons.
    """
    T_list = np.asarray(sorted(T_list), dtype=float)
    if T_list.size < 4:
        raise ValueError("need at least four horizons")
    g = director.grid
    if not p > g.dim:
        raise ValueError(f"need p > n, got p={p}")
    sampling = sampling or fit_sampling(g)
    n12, n34 = [], []
    for T in T_list:
        times = graded_mesh(T, steps, grading)
        u = _input_series(u0, times, T, eta)
        V = _input_series(V0, times, T, eta)
        if u.sup_norm() == 0 and V.sup_norm() == 0:
            raise ValueError("contraction fit needs non-zero inputs")
        nu, nv = nonlinear_parts(u, V, director, dealias)
        n12.append(nu.et_norm(p, sampling))
        n34.append(nv.et_norm(p, sampling))
    n12, n34 = np.array(n12), np.array(n34)
    if not (n12.min() > 0 and n34.min() > 0):
        raise ValueError("a bilinear norm vanished; inputs are degenerate for this fit")
    f12, f34 = power_fit(T_list, n12), power_fit(T_list, n34)
    return ContractionFit(
        T_list, n12, n34, f12.slope, f34.slope, f12.constant, f34.constant, 0.5 - g.dim / (2 * p)
    )


@dataclass(frozen=True)
class Schedule:
    steps: int
    grading: float = 2.0


@dataclass
class UniquenessReport:
    max_divergence_MT: float
    richardson_estimate: float
    bound: float
    passed: bool
    common_times: list
    estimates: dict

    def to_dict(self) -> dict:
        return {
            "max_divergence_MT": float(self.max_divergence_MT),
            "richardson_estimate": float(self.richardson_estimate),
            "bound": float(self.bound),
            "pass": bool(self.passed),
            "common_times": [float(t) for t in self.common_times],
            "estimates": {k: float(v) for k, v in self.estimates.items()},
        }


def _common_indices(ta: np.ndarray, tb: np.ndarray):
    tol = 1e-12 * max(ta[-1], 1.0)
    ia, ib = [], []
    for i, t in enumerate(ta):
        j = int(np.argmin(np.abs(tb - t)))
        if abs(tb[j] - t) <= tol:
            ia.append(i)
            ib.append(j)
    return ia, ib


def morrey_distance(X: Trajectory, Y: Trajectory, p: float, sampling: BallSampling) -> tuple:
    """sup over common mesh times of the M^{2,p} distance, summed over u and V."""
    ia, ib = _common_indices(X.times, Y.times)
    params = MorreyParams(2.0, p, X.grid.dim)
    worst = 0.0
    for i, j in zip(ia, ib):
        d = morrey_norm(X.u.fields[i] - Y.u.fields[j], params, sampling).value
        d += morrey_norm(X.V.fields[i] - Y.V.fields[j], params, sampling).value
        worst = max(worst, d)
    return worst, [float(X.times[i]) for i in ia]


def uniqueness_experiment(
    u0: Field,
    V0: Field,
    director: Field,
    cfg: SolverConfig,
    schedule_a: Schedule,
    schedule_b: Schedule,
    sampling: BallSampling | None = None,
    factor: float = 10.0,
) -> UniquenessReport:
    """Solve from identical data on two schedules and compare at shared mesh times.

    Each schedule's quadrature error is estimated by a Richardson comparison
    with its own refinement (twice the samples, same grading): for a second
    order rule the error of the coarse run is about 4/3 of that difference.
    """
    sampling = sampling or BallSampling.default(u0.grid)
    base = replace(cfg, max_halvings=0)

    def solve(s: Schedule) -> Trajectory:
        res = picard_solve(u0, V0, director, replace(base, steps=s.steps, grading=s.grading), sampling)
        if res.diverged or not res.converged:
            raise RuntimeError(f"schedule {s} did not converge")
        return res.traj

    Xa, Xb = solve(schedule_a), solve(schedule_b)
    estimates = {}
    for name, s, X in (("a", schedule_a, Xa), ("b", schedule_b, Xb)):
        fine = solve(Schedule(2 * s.steps, s.grading))
        d, _ = morrey_distance(X, fine, cfg.p, sampling)
        estimates[name] = 4.0 / 3.0 * d
    dist, common = morrey_distance(Xa, Xb, cfg.p, sampling)
    est = estimates["a"] + estimates["b"]
    # each run stops within about one increment of its own fixed point
    floor = 2 * cfg.picard_tol
    estimates["picard_floor"] = floor
    bound = factor * est + floor
    return UniquenessReport(dist, est, bound, dist <= bound, common, estimates)


@dataclass
class SmoothingReport:
    times: np.ndarray
    sup_norms: np.ndarray
    sup_weighted: float
    slope: float
    predicted: float

    def to_dict(self) -> dict:
        return {
            "sup_weighted": float(self.sup_weighted),
            "slope": _finite_or_none(self.slope),
            "predicted_slope": self.predicted,
            "rows": [[float(t), float(v)] for t, v in zip(self.times, self.sup_norms)],
        }


def smoothing_estimate_check(u0: Field, p: float, t_list: Sequence[float]) -> SmoothingReport:
    """Evaluate t^{n/2p} ||e^{t Lap} u0||_inf along ``t_list`` and fit the sup-norm decay."""
    t = np.asarray(t_list, dtype=float)
    if np.any(t <= 0):
        raise ValueError("smoothing times must be positive")
    n = u0.grid.dim
    sups = np.array([heat_semigroup(u0, float(s)).sup_norm() for s in t])
    weighted = t ** (n / (2 * p)) * sups
    slope = power_fit(t, sups).slope if sups.min() > 0 and t.size >= 2 else float("nan")
    return SmoothingReport(t, sups, float(weighted.max()), slope, -n / (2 * p))
