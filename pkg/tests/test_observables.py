import numpy as np
import pytest

from wgmps import operators as ops
from wgmps.errors import ContractViolation, DimensionError
from wgmps.evolution import t_evol_mar, t_evol_nmar
from wgmps.model import SimParams, hamiltonian_1tls, hamiltonian_1tls_feedback
from wgmps.mps import SchmidtSpectrum, Snapshot
from wgmps.observables import (
    TimeSeries,
    entanglement,
    integrated_flux,
    loop_flux,
    loop_integrated_statistics,
    output_fluxes,
    populations,
    quanta_conservation,
    single_time_expectation,
    write_csv,
)
from wgmps.states import SystemState, tls_excited, vacuum


def _snap(vec, step=0):
    v = np.asarray(vec, dtype=complex)
    return Snapshot(v.reshape(1, -1, 1), step)


def test_single_time_expectation():
    states = [_snap([1, 0]), _snap([0.6, 0.8], 1), _snap([0, 1], 2)]
    (n,) = single_time_expectation(states, ops.tls_pop(), 0.5, ["n"])
    np.testing.assert_allclose(n.times, [0, 0.5, 1.0])
    np.testing.assert_allclose(n.values, [0, 0.64, 1])
    assert n.values.dtype == float


def test_non_hermitian_operator_rejected():
    with pytest.raises(ContractViolation, match="imaginary"):
        single_time_expectation([_snap([0.6, 0.8j])], [ops.sigma_minus()], 1.0)
    with pytest.raises(DimensionError):
        single_time_expectation([_snap([1, 0])], [np.eye(3)], 1.0)


def test_time_series_checks():
    with pytest.raises(DimensionError):
        TimeSeries(np.zeros(3), np.zeros(2))
    with pytest.raises(ContractViolation):
        TimeSeries(np.zeros(1), np.array([np.nan]))
    s = TimeSeries(np.arange(5) * 0.1, np.arange(5.0))
    assert s.at(0.21) == 2.0


def test_integrated_flux_is_left_riemann():
    f = TimeSeries(np.arange(4) * 0.5, np.array([2.0, 2.0, 1.0, 0.0]), "flux_R")
    n = integrated_flux(f)
    assert n.label == "N_R"
    np.testing.assert_allclose(n.values, [0, 1, 2, 2.5, 2.5])
    np.testing.assert_allclose(n.times, [0, 0.5, 1.0, 1.5, 2.0])
    with pytest.raises(ValueError):
        integrated_flux(TimeSeries(np.array([0.0, 0.1, 0.3]), np.ones(3)))


def test_decay_bookkeeping():
    p = SimParams()
    rec = t_evol_mar(hamiltonian_1tls(p), tls_excited(), vacuum(p.n_steps, p), p)
    (n,) = populations(rec)
    f_r, f_l = output_fluxes(rec)
    assert n.label == "n_tls" and f_r.label == "flux_R" and f_l.label == "flux_L"
    np.testing.assert_allclose(f_r.values, f_l.values, atol=1e-14)
    # each step moves n_k - n_{k+1} into the two channels
    np.testing.assert_allclose((f_r.values + f_l.values) * p.delta_t, -np.diff(n.values), atol=1e-13)
    c = quanta_conservation(rec)
    assert np.abs(c.values - 1).max() < 1e-12
    with pytest.raises(ContractViolation):
        loop_flux(rec)


def test_loop_window():
    p = SimParams(d_t=(2,), tau=0.2, delta_t=0.1, t_max=0.6)
    f = TimeSeries(np.arange(6) * 0.1, np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]))
    loop = loop_integrated_statistics(f, p)
    np.testing.assert_allclose(loop.values, [0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.1])
    with pytest.raises(ValueError):
        loop_integrated_statistics(f)


def test_mirror_conservation_and_loop():
    p = SimParams(d_t=(2,), tau=1.0, phi=np.pi, t_max=4.0)
    rec = t_evol_nmar(hamiltonian_1tls_feedback(p), tls_excited(), vacuum(p.n_steps, p), p)
    c = quanta_conservation(rec)
    assert np.abs(c.values - 1).max() < 1e-12
    loop = loop_integrated_statistics(rec)
    assert loop.values[0] == 0 and np.all(loop.values >= -1e-15)
    assert len(loop) == p.n_steps + 1


def test_entanglement_values():
    s = [SchmidtSpectrum(np.array([1.0]), time_index=0), SchmidtSpectrum(np.array([1, 1]) / np.sqrt(2), time_index=1)]
    e = entanglement(s, 0.5)
    np.testing.assert_allclose(e.values, [0.0, 1.0])
    np.testing.assert_allclose(e.times, [0.0, 0.5])
    assert e.units == "bits"
    with pytest.raises(ContractViolation):
        entanglement([SchmidtSpectrum(np.array([0.5, 0.5]))])


def test_write_csv(tmp_path):
    a = TimeSeries(np.array([0.0, 0.1]), np.array([1.0, 1 / 3]), "n")
    b = TimeSeries(np.array([0.0, 0.1, 0.2]), np.array([0.0, 0.5, 1.0]), "N_R")
    path = tmp_path / "out.csv"
    write_csv(path, [a, b])
    assert path.read_bytes() == b"t,n,N_R\n0,1,0\n0.10000000000000001,0.33333333333333331,0.5\n"
    with pytest.raises(ValueError):
        write_csv(path, [])


def test_static_state_populations():
    p = SimParams(gamma_l=0, gamma_r=0, t_max=0.2)
    rec = t_evol_mar(hamiltonian_1tls(p), SystemState(np.array([0.8, 0.6])), vacuum(p.n_steps, p), p)
    np.testing.assert_allclose(populations(rec)[0].values, 0.36, atol=1e-14)


def test_free_single_photon_pulse_is_counted_once():
    p = SimParams(gamma_l=0, gamma_r=0, t_max=4.0, d_t=(2, 2))
    from wgmps.states import fock_pulse, gaussian_envelope, tls_ground

    field = fock_pulse(gaussian_envelope(1.5, 0.4, p), 1, p)
    rec = t_evol_mar(hamiltonian_1tls(p), tls_ground(), field, p)
    f_r, f_l = output_fluxes(rec)
    assert np.sum(f_r.values) * p.delta_t == pytest.approx(1.0, abs=1e-6)
    assert np.abs(f_l.values).max() < 1e-14


def test_fluxes_nonnegative_and_counts_monotone():
    p = SimParams(d_t=(2,), tau=0.5, phi=0.3, t_max=4.0, bond_max=32)
    rec = t_evol_nmar(hamiltonian_1tls_feedback(p, pump=1.5), tls_excited(), vacuum(p.n_steps, p), p)
    (f,) = output_fluxes(rec)
    assert f.values.min() >= -1e-10
    assert np.diff(integrated_flux(f, p.delta_t).values).min() >= -1e-10
    assert loop_flux(rec).values.min() >= -1e-10
