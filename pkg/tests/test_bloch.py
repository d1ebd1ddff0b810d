import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nanotomo.bath import DissipationRates
from nanotomo.bloch import (
    BlochVector,
    DriveParams,
    SimOptions,
    TLSDensity,
    bloch_rhs,
    bloch_to_density,
    density_to_bloch,
    integrate_bloch,
    rabi_population_analytic,
    steady_state_population,
)
from nanotomo.errors import DomainError, IntegrationError, InvariantError

from oracles import OMEGA_R_REF, STEADY_G01, STEADY_G09, bloch_ode_reference

W = OMEGA_R_REF


def rates(g1, g2, zeq=-1.0):
    return DissipationRates.from_rates(g1, g2, zeq)


def test_rhs_fixed_point():
    r = rates(1e5, 7e4, -0.8)
    d = bloch_rhs(BlochVector(0, 0, -0.8), DriveParams(0.0), r)
    assert (d.X, d.Y, d.Z) == (0.0, 0.0, 0.0)


def test_rhs_transverse_decay():
    r = rates(1e5, 7e4, -0.8)
    d = bloch_rhs(BlochVector(1, 0, 0), DriveParams(0.0), r)
    assert (d.X, d.Y) == (-7e4, 0.0)
    assert d.Z == pytest.approx(-1e5 * 0.8)


def test_rhs_drive_from_south_pole():
    r = rates(1e5, 7e4, -0.8)
    d = bloch_rhs(BlochVector(0, 0, -1), DriveParams(W), r)
    assert d.X == 0.0 and d.Y == pytest.approx(-W)
    assert d.Z == pytest.approx(-1e5 * (-1 + 0.8))


def test_rhs_may_exceed_unit_norm():
    d = bloch_rhs(BlochVector(0, 0, -1), DriveParams(W), rates(0, 0))
    assert d.norm() > 1


def test_equilibrium_trajectory_constant():
    t = np.linspace(0, 1e-5, 50)
    tr = integrate_bloch(BlochVector.ground(), DriveParams(0.0), rates(1e5, 5e4), t)
    assert np.all(tr.Z == -1.0) and np.all(tr.X == 0)


def test_undamped_rabi():
    t = np.linspace(0, 10 * 2 * math.pi / W, 400)
    tr = integrate_bloch(BlochVector.ground(), DriveParams(W), rates(0, 0), t)
    assert np.max(np.abs(tr.Z + np.cos(W * t))) < 1e-7


def test_against_independent_integrator_off_resonance():
    t = np.linspace(0, 8e-6, 200)
    r = rates(2e5, 1.5e5, -0.9)
    tr = integrate_bloch(BlochVector(0.3, -0.2, 0.5), DriveParams(W, 1.3e6), r, t)
    ref = bloch_ode_reference(W, 1.3e6, 2e5, 1.5e5, -0.9, [0.3, -0.2, 0.5], t)
    assert np.max(np.abs(np.vstack([tr.X, tr.Y, tr.Z]) - ref)) < 1e-7


def test_grid_validation():
    with pytest.raises(DomainError):
        integrate_bloch(BlochVector.ground(), DriveParams(W), rates(0, 0), [1e-6, 2e-6])
    with pytest.raises(DomainError):
        integrate_bloch(BlochVector.ground(), DriveParams(W), rates(0, 0), [0, 2e-6, 1e-6])


def test_single_point_grid():
    tr = integrate_bloch(BlochVector.ground(), DriveParams(W), rates(0, 0), [0.0])
    assert tr.t.size == 1 and tr.P1[0] == 0


def test_trajectory_is_read_only():
    tr = integrate_bloch(BlochVector.ground(), DriveParams(W), rates(0, 0), [0.0, 1e-7])
    with pytest.raises(ValueError):
        tr.Z[0] = 1.0


def test_solver_failure_reports_failure_time(monkeypatch):
    from types import SimpleNamespace

    import nanotomo.bloch as bloch

    def failing(*args, **kwargs):
        return SimpleNamespace(success=False, message="Required step size is less than spacing between numbers.",
                               t=np.array([0.0, 3e-7]))

    monkeypatch.setattr(bloch, "solve_ivp", failing)
    with pytest.raises(IntegrationError) as info:
        integrate_bloch(BlochVector.ground(), DriveParams(W), rates(0, 0), [0.0, 1e-6])
    assert info.value.t_fail == 3e-7


def test_sim_options_validation():
    for kw in (dict(rel_tol=0.0), dict(abs_tol=1e-2), dict(max_step=0.0)):
        with pytest.raises(DomainError):
            SimOptions(**kw)


def test_drive_rwa_flag():
    assert DriveParams(1e6, 0.0, 1e9).rwa_valid is True
    assert DriveParams(2e8, 0.0, 1e9).rwa_valid is False
    assert DriveParams(1e6).rwa_valid is None
    assert DriveParams(1e6, 1e5, 1e9).omega_d == pytest.approx(1e9 - 1e5)
    with pytest.raises(DomainError):
        DriveParams(-1.0)


def test_analytic_starts_at_zero():
    assert rabi_population_analytic(W, 0.1 * W, 0.05 * W, 0.0) == 0.0


def test_analytic_lossless():
    t = np.linspace(0, 5e-6, 101)
    np.testing.assert_allclose(rabi_population_analytic(W, 0, 0, t), 0.5 * (1 - np.cos(W * t)), atol=1e-14)
    assert rabi_population_analytic(W, 0, 0, math.pi / W) == pytest.approx(1.0, abs=1e-15)


def test_analytic_long_time_limit():
    assert rabi_population_analytic(W, 0.1 * W, 0.05 * W, 1e-2) == pytest.approx(STEADY_G01, rel=1e-12)
    assert STEADY_G01 == pytest.approx(0.49751, abs=1e-5)


def test_printed_coefficient_disagrees_with_ode():
    g1, g2 = 0.5 * W, 0.25 * W
    t = np.linspace(0, 10 / g1, 300)
    ode = integrate_bloch(BlochVector.ground(), DriveParams(W), rates(g1, g2), t).P1
    ic = rabi_population_analytic(W, g1, g2, t)
    printed = rabi_population_analytic(W, g1, g2, t, sine_coefficient="printed")
    assert np.max(np.abs(ic - ode)) < 1e-6
    assert np.max(np.abs(printed - ode)) > 1e-2


def test_unknown_coefficient_branch():
    with pytest.raises(ValueError):
        rabi_population_analytic(W, 1, 1, 0.0, sine_coefficient="other")


@pytest.mark.parametrize("g1_over_w", [1.5, 2.0, 3.0])
def test_overdamped_and_critical_branches_match_ode(g1_over_w):
    # |G1 - G2|/2 = Omega_R exactly at 4.0 when G2 = G1/2; 2.0 and 3.0 are overdamped for G2 = 0
    g1 = g1_over_w * W
    g2 = 0.0 if g1_over_w != 1.5 else 0.5 * g1
    t = np.linspace(0, 10 / g1, 200)
    ode = integrate_bloch(BlochVector.ground(), DriveParams(W), rates(g1, g2), t).P1
    assert np.max(np.abs(rabi_population_analytic(W, g1, g2, t) - ode)) < 1e-6


def test_critically_damped_point_is_finite():
    g1, g2 = 2.0 * W, 0.0
    t = np.linspace(0, 1e-5, 50)
    p = rabi_population_analytic(W, g1, g2, t)
    ode = integrate_bloch(BlochVector.ground(), DriveParams(W), rates(g1, g2), t).P1
    assert np.all(np.isfinite(p)) and np.max(np.abs(p - ode)) < 1e-6


def test_steady_state_values():
    assert steady_state_population(W, 0.0, 3.0) == 0.5
    assert steady_state_population(0.0, 1.0, 1.0) == 0.0
    assert steady_state_population(W, 0.9 * W, 0.45 * W) == pytest.approx(STEADY_G09, rel=1e-14)
    assert STEADY_G09 == pytest.approx(0.35587, abs=1e-5)
    with pytest.raises(DomainError):
        steady_state_population(0.0, 0.0, 1.0)


def test_envelope_decays_at_three_quarters_gamma1():
    g1 = 0.1 * W
    t = np.linspace(0, 8 / g1, 20000)
    dev = np.abs(rabi_population_analytic(W, g1, g1 / 2, t) - steady_state_population(W, g1, g1 / 2))
    peaks = (dev[1:-1] > dev[:-2]) & (dev[1:-1] > dev[2:])
    tp, dp = t[1:-1][peaks], dev[1:-1][peaks]
    rate = -np.polyfit(tp, np.log(dp), 1)[0]
    assert rate == pytest.approx(0.75 * g1, rel=0.01)


def test_density_examples():
    g = bloch_to_density(BlochVector(0, 0, -1))
    assert (g.rho00, g.rho11, g.rho01) == (1.0, 0.0, 0j)
    s = bloch_to_density(BlochVector(1, 0, 0))
    assert (s.rho00, s.rho11, s.rho01) == (0.5, 0.5, 0.5 + 0j)
    assert BlochVector(0, 0, 0.2).P1 == pytest.approx(0.6)


def test_invariants_enforced():
    with pytest.raises(InvariantError):
        BlochVector(1, 1, 0)
    with pytest.raises(InvariantError):
        TLSDensity(0.5, 0.6, 0)
    with pytest.raises(InvariantError):
        TLSDensity(0.5, 0.5, 0.6)
    BlochVector(0, 0, 1 + 5e-10)


def test_density_matrix_hermitian():
    m = bloch_to_density(BlochVector(0.3, -0.4, 0.1)).matrix()
    np.testing.assert_allclose(m, m.conj().T)
    assert np.trace(m).real == pytest.approx(1.0)


unit_ball = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(lambda v: sum(x * x for x in v) <= 1)


@given(unit_ball)
def test_density_round_trip(v):
    b = BlochVector(*v)
    b2 = density_to_bloch(bloch_to_density(b))
    assert np.allclose(b2.as_array(), b.as_array(), atol=1e-12, rtol=0)


@given(unit_ball, st.floats(0.0, 2.0), st.floats(0.05, 1.0), st.floats(-1.0, 1.0))
def test_trajectories_stay_physical(v, g1_over_w, g2_ratio, delta_over_w):
    g1 = g1_over_w * W
    g2 = max(g1 * g2_ratio, g1 / 2)  # complete positivity needs G2 >= G1/2
    t = np.linspace(0, 4e-6, 60)
    tr = integrate_bloch(BlochVector(*v), DriveParams(W, delta_over_w * W), rates(g1, g2), t)
    norms = np.sqrt(tr.X**2 + tr.Y**2 + tr.Z**2)
    assert np.all(norms <= 1 + 1e-9)
    p0 = (1 - tr.Z) / 2
    assert np.all(np.abs(p0 + tr.P1 - 1) < 1e-12)


@given(unit_ball, st.floats(0.01, 2.0))
def test_free_decay_contracts_norm(v, g1_over_w):
    g1 = g1_over_w * W
    t = np.linspace(0, 2e-6, 40)
    tr = integrate_bloch(BlochVector(*v), DriveParams(0.0), rates(g1, g1 / 2), t)
    # distance to the fixed point (0, 0, -1) never grows
    d = np.sqrt(tr.X**2 + tr.Y**2 + (tr.Z + 1) ** 2)
    assert np.all(np.diff(d) <= 1e-9)
