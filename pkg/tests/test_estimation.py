import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nanotomo.bloch import rabi_population_analytic
from nanotomo.errors import DomainError
from nanotomo.estimation import (
    MeasurementRecord,
    RecordKind,
    dominant_angular_frequency,
    fit_rabi,
    fit_ramsey,
    fit_ringdown,
    ramsey_model,
    read_record,
    ringdown_model,
    sample_record,
    write_record,
)

from oracles import DELTA_REF, OMEGA_R_REF

W = OMEGA_R_REF
T2_500 = 14.8e-6


def ramsey_curve(T2=T2_500, phi0=0.4, n=150, span=3.0):
    tau = np.linspace(0, span * T2, n)
    return tau, ramsey_model(tau, [DELTA_REF, T2, phi0])


def rabi_curve(ratio):
    g1 = ratio * W
    t = np.linspace(0, 10 / g1, 200)
    return t, rabi_population_analytic(W, g1, g1 / 2, t), g1


def test_sample_extremes():
    x = np.linspace(0, 1, 10)
    assert np.all(sample_record(0.0, x, 50, 1).counts == 0)
    assert np.all(sample_record(1.0, x, 50, 1).counts == 50)


def test_sample_mean_within_five_sigma():
    rec = sample_record(0.5, np.arange(400.0), 10**4, 3)
    assert abs(rec.p_hat.mean() - 0.5) < 5 * 0.005


def test_sample_reproducible_per_point():
    x = np.linspace(0, 1, 20)
    a = sample_record(0.3, x, 1000, 11)
    b = sample_record(0.3, x[:5], 1000, 11)
    assert np.array_equal(a.counts[:5], b.counts)


def test_sample_accepts_callable_and_rejects_bad_probabilities():
    x = np.linspace(0, 1, 5)
    assert sample_record(lambda v: 0 * v, x, 10, 0).counts.sum() == 0
    with pytest.raises(DomainError):
        sample_record(1.2, x, 10, 0)
    with pytest.raises(DomainError):
        sample_record(0.5, x, 0, 0)


def test_record_invariants():
    with pytest.raises(DomainError):
        MeasurementRecord([0, 1], [1, 11], 10, "rabi")
    with pytest.raises(DomainError):
        MeasurementRecord([1, 0], [1, 1], 10, "rabi")
    with pytest.raises(ValueError):
        MeasurementRecord([0, 1], [1, 1], 10, "spectroscopy")


def test_sigma_floor():
    rec = MeasurementRecord([0, 1], [0, 100], 100, RecordKind.RINGDOWN)
    assert np.all(rec.sigma == pytest.approx(math.sqrt(0.25 / 100) / 10))


def test_record_csv_round_trip(tmp_path):
    rec = sample_record(0.3, np.linspace(0, 1e-5, 7), 1000, 2, RecordKind.RAMSEY)
    write_record(tmp_path / "r.csv", rec)
    text = (tmp_path / "r.csv").read_text()
    assert text.startswith("x,count,shots\n") and "\r" not in text
    back = read_record(tmp_path / "r.csv", "ramsey")
    assert np.array_equal(back.abscissa, rec.abscissa) and np.array_equal(back.counts, rec.counts)


def test_record_csv_missing_column(tmp_path):
    (tmp_path / "bad.csv").write_text("x,count\n0,1\n")
    with pytest.raises(DomainError):
        read_record(tmp_path / "bad.csv", "ramsey")


def test_kind_mismatch_rejected():
    tau, p = ramsey_curve()
    with pytest.raises(DomainError):
        fit_rabi(MeasurementRecord.from_probabilities(tau, p, 100, "ramsey"))


@pytest.mark.parametrize("ratio", [0.1, 0.5, 0.9])
def test_rabi_noiseless_recovery(ratio):
    t, p, g1 = rabi_curve(ratio)
    r = fit_rabi(MeasurementRecord.from_probabilities(t, p, 10**4, "rabi"))
    assert r.converged
    assert r.params["Omega_R"] == pytest.approx(W, rel=1e-6)
    assert r.params["Gamma1"] == pytest.approx(g1, rel=1e-6)
    assert r.params["Gamma2"] == pytest.approx(g1 / 2, rel=1e-6)
    assert r.params["T1"] == pytest.approx(1 / g1, rel=1e-6)
    assert r.units["T1"] == "s"


def test_rabi_monte_carlo_T1():
    t, p, g1 = rabi_curve(0.1)
    T1 = [fit_rabi(sample_record(p, t, 10**4, s, "rabi")).params["T1"] for s in range(5)]
    assert np.median(T1) == pytest.approx(1 / g1, rel=0.05)


def test_rabi_constant_record_flagged():
    t = np.linspace(0, 1e-5, 100)
    r = fit_rabi(sample_record(0.5, t, 10**4, 0, "rabi"))
    assert not r.converged
    assert any("unidentifiable" in d for d in r.diagnostics)


@pytest.mark.parametrize("phi0", [0.0, 0.4, -2.5, 3.0])
def test_ramsey_noiseless_recovery(phi0):
    tau, p = ramsey_curve(phi0=phi0)
    r = fit_ramsey(MeasurementRecord.from_probabilities(tau, p, 10**4, "ramsey"))
    assert r.converged
    assert r.params["Delta"] == pytest.approx(DELTA_REF, rel=1e-6)
    assert r.params["T2"] == pytest.approx(T2_500, rel=1e-6)
    assert math.remainder(r.params["phi0"] - phi0, 2 * math.pi) == pytest.approx(0.0, abs=1e-6)


def test_ramsey_monte_carlo():
    tau, p = ramsey_curve()
    fits = [fit_ramsey(sample_record(p, tau, 10**4, s, "ramsey")) for s in range(5)]
    assert np.median([f.params["T2"] for f in fits]) == pytest.approx(T2_500, rel=0.05)
    assert np.median([f.params["Delta"] for f in fits]) == pytest.approx(DELTA_REF, rel=0.05)


def test_ramsey_washed_out_flagged():
    tau = np.linspace(20 * T2_500, 25 * T2_500, 150)
    p = ramsey_model(tau, [DELTA_REF, T2_500, 0.4])
    r = fit_ramsey(sample_record(p, tau, 10**4, 1, "ramsey"))
    assert not r.converged
    assert any(d.startswith("T2 unidentifiable") for d in r.diagnostics)


def test_ramsey_stderr_brackets_spread():
    tau, p = ramsey_curve()
    fits = [fit_ramsey(sample_record(p, tau, 10**4, s, "ramsey")) for s in range(20)]
    spread = np.std([f.params["T2"] for f in fits], ddof=1)
    reported = np.median([f.stderr["T2"] for f in fits])
    assert 0.5 <= reported / spread <= 2.0


def test_ramsey_error_decreases_with_shots():
    tau, p = ramsey_curve()
    med = []
    for shots in (10**2, 10**3, 10**4):
        err = [abs(fit_ramsey(sample_record(p, tau, shots, s, "ramsey")).params["T2"] / T2_500 - 1) for s in range(20)]
        med.append(np.median(err))
    assert med[0] > med[1] > med[2]


def test_optimum_not_worse_than_truth():
    tau, p = ramsey_curve()
    rec = sample_record(p, tau, 10**3, 4, "ramsey")
    r = fit_ramsey(rec)
    truth = np.linalg.norm((p - rec.p_hat) / rec.sigma)
    assert r.residual_norm <= truth * (1 + 1e-9)


def test_ringdown_noiseless():
    t = np.linspace(0, 5 * 7.4e-6, 120)
    p = ringdown_model(t, [0.9, 7.4e-6, 0.05])
    r = fit_ringdown(MeasurementRecord.from_probabilities(t, p, 10**4, "ringdown"))
    assert r.converged
    assert r.params["T1"] == pytest.approx(7.4e-6, rel=1e-6)
    assert r.params["A"] == pytest.approx(0.9, rel=1e-6)


def test_ringdown_noisy():
    t = np.linspace(0, 5 * 7.4e-6, 120)
    p = ringdown_model(t, [0.9, 7.4e-6, 0.05])
    T1 = [fit_ringdown(sample_record(p, t, 10**4, s, "ringdown")).params["T1"] for s in range(5)]
    assert np.median(T1) == pytest.approx(7.4e-6, rel=0.05)


def test_ringdown_constant_flagged():
    t = np.linspace(0, 4e-5, 120)
    r = fit_ringdown(sample_record(0.2, t, 10**4, 2, "ringdown"))
    assert not r.converged and any("T1 unidentifiable" in d for d in r.diagnostics)


def test_fit_result_json_ready():
    tau, p = ramsey_curve()
    d = fit_ramsey(MeasurementRecord.from_probabilities(tau, p, 100, "ramsey")).to_dict()
    assert set(d) == {"params", "stderr", "units", "residual_norm", "converged", "iterations", "diagnostics"}
    assert all(v >= 0 for v in d["stderr"].values() if isinstance(v, float))


@given(st.floats(2 * math.pi * 5e4, 2 * math.pi * 2e6))
def test_spectral_peak_frequency(delta):
    x = np.linspace(0, 5e-5, 400)
    w = dominant_angular_frequency(x, np.cos(delta * x))
    assert w == pytest.approx(delta, rel=0.02)
