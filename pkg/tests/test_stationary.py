import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcmorrey import spectral as sp
from lcmorrey.generators import beltrami, dipole_velocity, harmonic_map, random_solenoidal, taylor_green
from lcmorrey.morrey import BallSampling, MorreyParams, morrey_norm
from lcmorrey.stationary import (
    WeakSolutionTriplet,
    bootstrap_derivatives,
    bootstrap_identity,
    build_test_bank,
    constant_director,
    integral_identity_check,
    mhd_residual,
    nse_mode,
    pressure_from_UV,
    regularity_report,
    residual_very_weak,
)
from lcmorrey.spectral import Field, GridSpec

from .oracles import HARMONIC_DV_MORREY_L32

G = GridSpec(2, 64, 2 * np.pi)
BIG = GridSpec(2, 64, 32.0)


def hm_triplet(g=BIG, P=None):
    return WeakSolutionTriplet(g.zeros(1), Field(g, harmonic_map(g)), P)


def shear(g, amp=1.0):
    return Field(g, np.stack([amp * np.sin(2 * np.pi * g.coords[1] / g.length), np.zeros(g.shape)]))


def perturbed_director(g, eps=0.3):
    th = 2 * np.pi / g.length * g.coords[0] + eps * np.exp(-g.radius**2 / 8)
    return Field(g, np.stack([np.cos(th), np.sin(th)]))


# --- triplet ------------------------------------------------------------------


def test_triplet_validation():
    with pytest.raises(ValueError):
        WeakSolutionTriplet(G.zeros(1), constant_director(G) * 1.1)
    bad_U = Field(G, np.stack([np.sin(G.coords[0]), np.zeros(G.shape)]))
    with pytest.raises(ValueError):
        WeakSolutionTriplet(bad_U, constant_director(G))
    with pytest.raises(ValueError):
        WeakSolutionTriplet(G.zeros(1), constant_director(GridSpec(2, 32, 1.0)))
    with pytest.raises(ValueError):
        WeakSolutionTriplet(G.zeros(1), constant_director(G), G.zeros(1))


def test_test_bank_shape():
    bank = build_test_bank(G)
    assert len(bank.scalars) >= 27
    assert bank.size == 180
    div = max(np.abs(sp.divergence(Field(G, t)).values).max() for t in bank.solenoidal)
    assert div < 1e-10
    assert np.all(bank.scalar_norms > 0)


# --- residuals ----------------------------------------------------------------


def test_residuals_trivial_solution():
    rep = residual_very_weak(WeakSolutionTriplet(G.zeros(1), constant_director(G), G.zeros()))
    assert max(rep.momentum_residual, rep.director_residual, rep.divergence_residual) <= 1e-10
    assert rep.momentum_full_residual <= 1e-10
    assert rep.passed


@pytest.mark.parametrize("g", [G, BIG])
def test_residuals_harmonic_map(g):
    rep = residual_very_weak(hm_triplet(g, Field(g, np.full(g.shape, 3.0))))
    assert max(rep.momentum_residual, rep.director_residual, rep.divergence_residual) <= 1e-8
    assert rep.momentum_full_residual <= 1e-8


def test_residuals_flag_shear_non_solution():
    rep = residual_very_weak(WeakSolutionTriplet(shear(G), constant_director(G)))
    assert rep.momentum_residual > 1e-2
    assert not rep.passed
    assert set(rep.to_dict()["w21_normalized"]) == {"momentum", "director", "divergence"}


def test_residuals_nonnegative(rng):
    U = Field(G, random_solenoidal(G, rng, kmax=4))
    rep = residual_very_weak(WeakSolutionTriplet(U, perturbed_director(G)))
    assert min(rep.momentum_residual, rep.director_residual, rep.divergence_residual) >= 0


@settings(max_examples=10, deadline=None)
@given(st.floats(-1e3, 1e3), st.integers(0, 1000))
def test_pressure_gauge_invariance(c, seed):
    rng = np.random.default_rng(seed)
    U = Field(G, random_solenoidal(G, rng, kmax=3))
    V = perturbed_director(G)
    P = Field(G, rng.normal(size=G.shape))
    a = residual_very_weak(WeakSolutionTriplet(U, V, P))
    b = residual_very_weak(WeakSolutionTriplet(U, V, P + c))
    assert abs(a.momentum_full_residual - b.momentum_full_residual) <= 1e-12
    assert a.momentum_residual == b.momentum_residual


# --- pressure -----------------------------------------------------------------


def test_pressure_trivial_and_harmonic_map():
    assert pressure_from_UV(G.zeros(1), constant_director(G)).sup_norm() == 0.0
    assert pressure_from_UV(BIG.zeros(1), Field(BIG, harmonic_map(BIG))).sup_norm() < 1e-12


def test_pressure_solves_poisson_relation(rng):
    U = Field(G, random_solenoidal(G, rng, kmax=4))
    V = perturbed_director(G, 0.2)
    P = pressure_from_UV(U, V)
    assert abs(float(P.mean())) < 1e-14
    D = sp.deformation_tensor(V).values
    S = np.einsum("i...,j...->ij...", U.values, U.values) + np.einsum("ik...,jk...->ij...", D, D)
    Sh = G.fft(S) * G.dealias_mask
    rhs = sum(-G.k_odd[i] * G.k_odd[j] * Sh[i, j] for i in range(2) for j in range(2))
    lhs = -sp.laplacian(P).values
    expected = G.ifft(rhs)
    assert np.abs(lhs - expected).max() <= 1e-8 * max(np.abs(expected).max(), 1.0)


# --- integral identities ------------------------------------------------------


def test_identity_zero_solution():
    rep = integral_identity_check(WeakSolutionTriplet(G.zeros(1), constant_director(G)))
    assert rep.U_mismatch == 0.0 and rep.V_mismatch == 0.0


def test_identity_harmonic_map():
    rep = integral_identity_check(hm_triplet())
    assert rep.U_mismatch <= 1e-8
    assert rep.V_mismatch <= 1e-8
    assert "constants" in rep.to_dict()["note"]


def test_identity_flags_perturbed_director():
    rep = integral_identity_check(WeakSolutionTriplet(BIG.zeros(1), perturbed_director(BIG)))
    assert rep.V_mismatch > 1e-3


# --- bootstrap ----------------------------------------------------------------


def test_bootstrap_harmonic_map():
    rep = bootstrap_derivatives(hm_triplet(), 4.0, K=3)
    assert len(rep.entries) == 1 + 2 + 3 + 4
    assert rep.max_identity_mismatch <= 1e-6
    e = next(x for x in rep.entries if x.alpha == (1, 0))
    assert e.identity_mismatch <= 1e-7
    assert abs(e.norms["V"] / HARMONIC_DV_MORREY_L32 - 1) <= 0.05
    assert min(rep.holder_fits()) >= 0.95


def test_bootstrap_first_derivative_matches_closed_form():
    a = 2 * np.pi / BIG.length
    th = a * BIG.coords[0]
    d1V = sp.partial_alpha(Field(BIG, harmonic_map(BIG)), (1, 0)).values
    assert np.abs(d1V - a * np.stack([-np.sin(th), np.cos(th)])).max() < 1e-12
    u_id, v_id = bootstrap_identity(hm_triplet(), (1, 0))
    assert np.abs(v_id.values - d1V).max() < 1e-7
    assert u_id.sup_norm() < 1e-12


def test_bootstrap_zero_solution():
    rep = bootstrap_derivatives(WeakSolutionTriplet(G.zeros(1), constant_director(G)), 4.0, K=2)
    for e in rep.entries:
        assert e.norms["U"] == 0.0 and e.norms["P"] == 0.0
        if any(e.alpha):
            assert e.norms["V"] == 0.0


def test_bootstrap_guards():
    tr = WeakSolutionTriplet(G.zeros(1), constant_director(G))
    with pytest.raises(ValueError):
        bootstrap_derivatives(tr, 4.0, K=5)
    with pytest.raises(ValueError):
        bootstrap_derivatives(tr, 2.0, K=1)


def test_bootstrap_sigma_knob_adds_norms():
    rep = bootstrap_derivatives(hm_triplet(), 4.0, K=1, sigmas=(1.0, 2.0))
    assert {"V", "V_sigma2"} <= set(rep.entries[0].norms)


def test_derivative_norms_grid_stable():
    vals = []
    for N in (64, 128):
        g = GridSpec(2, N, 32.0)
        V = Field(g, harmonic_map(g))
        params = MorreyParams(2.0, 4.0, 2)
        vals.append([morrey_norm(sp.partial_alpha(V, a), params).value for a in ((1, 0), (2, 0), (3, 0))])
    np.testing.assert_allclose(vals[1], vals[0], rtol=0.1)


# --- regularity pipeline ------------------------------------------------------


def test_regularity_harmonic_map_is_regular():
    rep = regularity_report(hm_triplet(), 4.0)
    assert rep.hypotheses_met
    assert rep.verdict == "regular"
    assert all(b >= 1 - 2 / 4 - 0.1 for b in rep.bootstrap.holder_fits())
    d = rep.to_dict()
    assert {"hypotheses", "residuals", "bootstrap", "verdict"} <= set(d)


def test_regularity_on_small_box_reports_hypotheses_not_met():
    rep = regularity_report(hm_triplet(G), 4.0)
    assert rep.verdict == "hypotheses_not_met"
    assert rep.bootstrap is None


def test_regularity_constant_velocity_fails_decay_gate():
    U = Field(BIG, np.stack([np.ones(BIG.shape), np.zeros(BIG.shape)]))
    rep = regularity_report(WeakSolutionTriplet(U, constant_director(BIG)), 4.0)
    assert not rep.decay.passed
    assert rep.verdict == "hypotheses_not_met"


def test_regularity_zero_solution():
    rep = regularity_report(WeakSolutionTriplet(G.zeros(1), constant_director(G)), 4.0, K=2)
    assert rep.verdict == "regular"


def test_regularity_requires_supercritical_p():
    with pytest.raises(ValueError):
        regularity_report(hm_triplet(), 2.0)


# --- Navier-Stokes and MHD reductions -----------------------------------------


def test_nse_zero_passes():
    assert nse_mode(G.zeros(1), None, 4.0, K=2).verdict == "regular"


def test_nse_taylor_green_flagged_by_residual():
    rep = nse_mode(Field(G, taylor_green(G)), None, 4.0)
    assert rep.residuals.momentum_residual > 1e-2


def test_nse_decaying_non_solution_distinguishes_gates():
    U = Field(G, 0.1 * dipole_velocity(G, G.length / 16, 4.0))
    rep = nse_mode(U, None, 4.0)
    assert rep.decay.passed
    assert not rep.residuals.passed
    assert rep.verdict == "not_a_solution"


def test_nse_matches_constant_director_report():
    U = Field(G, 0.1 * dipole_velocity(G, G.length / 16, 4.0))
    P = pressure_from_UV(U, constant_director(G))
    a = nse_mode(U, P, 4.0).to_dict()
    b = regularity_report(WeakSolutionTriplet(U, constant_director(G), P), 4.0).to_dict()
    assert a == b


def test_mhd_zero():
    rep = mhd_residual(G.zeros(1), G.zeros(1), None, 4.0)
    assert rep.momentum_residual == rep.induction_residual == rep.antisymmetry_residual == 0.0


def test_mhd_equal_fields_antisymmetry(rng):
    U = Field(G, random_solenoidal(G, rng, kmax=4))
    rep = mhd_residual(U, U, None, 4.0)
    assert rep.antisymmetry_residual <= 1e-10
    assert rep.induction_residual > 1e-3


def test_mhd_beltrami_momentum_reduces_to_viscous_term():
    U = Field(G, beltrami(G, 1, 0.1))
    rep = mhd_residual(U, U, None, 4.0)
    bank = build_test_bank(G)
    # U (x) U - B (x) B cancels, so only <U, Lap phi> is left
    lap = np.stack([sp.laplacian(Field(G, t)).values for t in bank.solenoidal]).reshape(len(bank.solenoidal), 2, -1)
    u = U.values.reshape(2, -1)
    num = np.einsum("tcx,cx->t", lap, u)
    den = np.sqrt(np.sum(lap**2, axis=1)) @ np.sqrt(np.sum(u**2, axis=0))
    assert rep.momentum_residual == pytest.approx(float(np.max(np.abs(num) / den)), abs=1e-8)


def test_mhd_rejects_non_solenoidal():
    bad = Field(G, np.stack([np.sin(G.coords[0]), np.zeros(G.shape)]))
    with pytest.raises(ValueError):
        mhd_residual(bad, G.zeros(1), None, 4.0)


def test_sampling_override_is_used():
    s = BallSampling.origin(BIG)
    rep = integral_identity_check(hm_triplet(), 4.0, sampling=s)
    assert rep.U_morrey_mismatch <= 1e-8
