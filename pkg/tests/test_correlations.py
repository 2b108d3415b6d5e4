import numpy as np
import pytest
from conftest import random_state
from dense import DenseRun, dense_grids
from hypothesis import given, settings
from hypothesis import strategies as st

from wgmps.correlations import (
    CorrelationGrid,
    correlation_ss_2op,
    correlation_ss_4op,
    field_operators,
    g1_grid,
    g2_grid,
    normalize_g,
    spectrum_w,
    steady_state_time,
    time_dependent_spectrum,
    write_grid_csv,
    write_ss_csv,
)
from wgmps.errors import ContractViolation, DimensionError
from wgmps.evolution import t_evol_mar, t_evol_nmar
from wgmps.model import SimParams, hamiltonian_1tls, hamiltonian_1tls_feedback
from wgmps.mps import product_sites
from wgmps.observables import output_fluxes
from wgmps.states import tls_excited, tls_ground, vacuum

TOL = 1e-8


@settings(max_examples=6, deadline=None)
@given(seed=st.integers(0, 2**31), channel=st.sampled_from(["R", "L"]))
def test_markovian_grids_match_dense(seed, channel):
    rng = np.random.default_rng(seed)
    p = SimParams(delta_t=0.25, t_max=1.0, d_t=(3, 2) if channel == "R" else (2, 3), bond_max=4096, cutoff=0.0)
    gen = hamiltonian_1tls(p, pump=0.9)
    sys0 = random_state(rng, 2)
    vecs = [random_state(rng, p.d_bin) for _ in range(p.n_steps)]
    rec = t_evol_mar(gen, sys0, product_sites(vecs, labels=list(range(p.n_steps))), p)
    dense = DenseRun(sys0, vecs, p)
    dense.run(gen)
    ref1, ref2 = dense_grids(dense, p, channel)
    np.testing.assert_allclose(g1_grid(rec, p, (channel, channel)).values, ref1, atol=TOL)
    np.testing.assert_allclose(g2_grid(rec, p, (channel, channel)).values, ref2, atol=TOL)


@settings(max_examples=4, deadline=None)
@given(seed=st.integers(0, 2**31), phi=st.floats(0, 2 * np.pi))
def test_feedback_grids_match_dense(seed, phi):
    rng = np.random.default_rng(seed)
    p = SimParams(delta_t=0.25, t_max=1.0, d_t=(3,), tau=0.5, phi=phi, bond_max=4096, cutoff=0.0)
    gen = hamiltonian_1tls_feedback(p, pump=0.6)
    sys0 = random_state(rng, 2)
    vecs = [random_state(rng, p.d_bin) for _ in range(p.n_steps)]
    rec = t_evol_nmar(gen, sys0, product_sites(vecs, labels=list(range(p.n_steps))), p)
    dense = DenseRun(sys0, vecs, p)
    dense.run(gen)
    ref1, ref2 = dense_grids(dense, p, 0)
    np.testing.assert_allclose(g1_grid(rec, p, (0, 0)).values, ref1, atol=TOL)
    np.testing.assert_allclose(g2_grid(rec, p, (0, 0)).values, ref2, atol=TOL)


@pytest.fixture(scope="module")
def decay_record():
    p = SimParams(gamma_l=0.0, gamma_r=1.0, t_max=8.0)
    return t_evol_mar(hamiltonian_1tls(p), tls_excited(), vacuum(p.n_steps, p), p)


def test_g1_diagonal_is_flux(decay_record):
    p = decay_record.params
    grid = g1_grid(decay_record, p)
    flux = output_fluxes(decay_record)[0].values
    np.testing.assert_allclose(grid.values[:, 0].real, flux, atol=1e-12)
    assert np.abs(grid.values[:, 0].imag).max() < 1e-12
    assert grid.values.shape == (p.n_steps, p.n_steps)
    # entries beyond the grid edge are zero-filled
    assert np.all(grid.values[-1, 1:] == 0)


def test_single_emitter_has_no_coincidences(decay_record):
    g2 = g2_grid(decay_record, decay_record.params, n_t=40, n_tprime=40)
    assert np.abs(g2.values).max() < 1e-12


def test_vacuum_correlations_vanish():
    p = SimParams(gamma_l=0, gamma_r=0, t_max=1.0)
    rec = t_evol_mar(hamiltonian_1tls(p), tls_excited(), vacuum(p.n_steps, p), p)
    assert np.abs(g1_grid(rec, p).values).max() == 0.0
    assert np.abs(g2_grid(rec, p).values).max() == 0.0


def test_grid_bounds_checked(decay_record):
    with pytest.raises(ContractViolation):
        g1_grid(decay_record, decay_record.params, n_t=10_000)
    bd, b = field_operators(decay_record.params)
    with pytest.raises(DimensionError):
        correlation_ss_2op(decay_record, bd[:2, :2], b[:2, :2], decay_record.params, t_ss=1.0)


def test_steady_state_time_of_decay(decay_record):
    # population e^{-t}: the trailing unit window varies by (e - 1) e^{-t} < 1e-3 from t = ln(1718.3) = 7.449
    assert steady_state_time(decay_record) == pytest.approx(7.449, abs=0.06)
    assert steady_state_time(decay_record, tol=1e-6) is None


def test_steady_state_rows_match_grid(decay_record):
    p = decay_record.params
    bd, b = field_operators(p)
    (g1,), tp, t_ss = correlation_ss_2op(decay_record, bd, b, p, t_ss=2.0, span=1.0)
    assert t_ss == pytest.approx(2.0) and len(tp) == 21
    grid = g1_grid(decay_record, p)
    np.testing.assert_allclose(g1, grid.values[40, :21], atol=1e-14)
    (g2,), _, _ = correlation_ss_4op(decay_record, (bd, bd, b, b), p, t_ss=2.0, span=1.0)
    assert np.abs(g2).max() < 1e-12
    with pytest.raises(ContractViolation, match="steady state"):
        correlation_ss_2op(decay_record, bd, b, p, t_ss=7.9, span=1.0)


def test_normalize_g():
    np.testing.assert_allclose(normalize_g([2.0, 4.0], 2.0, 1), [1.0, 2.0])
    np.testing.assert_allclose(normalize_g([2.0, 4.0], 2.0, 2), [0.5, 1.0])
    with pytest.raises(ValueError):
        normalize_g([1.0], 1.0, 3)
    with pytest.raises(ContractViolation):
        normalize_g([1.0], 0.0, 1)


def test_lorentzian_spectrum():
    dt, gamma = 0.01, 1.0
    t = np.arange(4000) * dt
    spec = spectrum_w(dt, np.exp(-gamma * t / 2), pad=4)
    w = spec.omega_values
    exact = (gamma / 2) / ((gamma / 2) ** 2 + w**2)
    near = np.abs(w) < 5
    # left Riemann sum of the transform: offset dt/2 at most
    assert np.abs(spec.values[near] - exact[near]).max() < dt
    assert w[np.argmax(spec.values)] == pytest.approx(0.0, abs=1e-12)
    norm = spectrum_w(dt, np.exp(-gamma * t / 2), normalize=True)
    assert norm.values.max() == pytest.approx(1.0) and norm.normalization == "max1"


def test_impulse_spectrum_is_flat():
    spec = spectrum_w(0.1, np.r_[1.0, np.zeros(15)], pad=2)
    np.testing.assert_allclose(spec.values, 0.1, atol=1e-15)
    assert len(spec.omega_values) == 32
    assert np.all(np.diff(spec.omega_values) > 0)


def test_detuned_exponential_peaks_at_detuning():
    dt = 0.02
    t = np.arange(3000) * dt
    # a field oscillating at +3 has g1 ~ exp(-3i t')
    spec = spectrum_w(dt, np.exp(-t / 2 - 3j * t))
    step = spec.omega_values[1] - spec.omega_values[0]
    assert abs(spec.omega_values[np.argmax(spec.values)] - 3.0) <= step


def test_time_dependent_spectrum_sum_rules(decay_record):
    p = decay_record.params
    grid = g1_grid(decay_record, p)
    tds = time_dependent_spectrum(grid)
    dw = tds.omega_values[1] - tds.omega_values[0]
    flux = output_fluxes(decay_record)[0].values
    # integrating I over the full frequency window returns 2 pi times the flux
    np.testing.assert_allclose(tds.intensity.sum(axis=1) * dw, 2 * np.pi * flux, rtol=1e-10)
    # the accumulated spectrum at the end is the time integral of I
    np.testing.assert_allclose(tds.spectrum[-1], tds.intensity.sum(axis=0) * p.delta_t, atol=1e-12)
    assert np.all(tds.spectrum[0] == 0)
    assert tds.spectrum.shape == (p.n_steps + 1, len(tds.omega_values))


def test_accumulated_spectrum_approaches_steady_state_shape():
    p = SimParams(t_max=22.0, delta_t=0.1, bond_max=12)
    rec = t_evol_mar(hamiltonian_1tls(p, pump=2 * np.pi), tls_ground(), vacuum(p.n_steps, p), p)
    tds = time_dependent_spectrum(g1_grid(rec, p, n_tprime=100))
    bd, b = field_operators(p)
    (g1,), _, _ = correlation_ss_2op(rec, bd, b, p, span=9.9)
    steady = spectrum_w(p.delta_t, g1).values
    s = tds.spectrum[-1]
    assert s @ steady / (np.linalg.norm(s) * np.linalg.norm(steady)) > 0.99


def test_time_dependent_spectrum_offset():
    dt = 0.05
    n = 40
    tp = np.arange(n) * dt
    g = np.tile(np.exp((-0.5 - 2j) * tp), (n, 1))
    grid = CorrelationGrid(tp, tp, g)
    shifted = time_dependent_spectrum(grid, center_frequency_offset=2.0)
    peak = shifted.omega_values[np.argmax(shifted.intensity[0])]
    assert abs(peak) <= shifted.omega_values[1] - shifted.omega_values[0]
    with pytest.raises(ValueError):
        time_dependent_spectrum(CorrelationGrid(tp[:3], tp[:3], g[:3, :3]))


def test_csv_writers(tmp_path, decay_record):
    grid = g1_grid(decay_record, decay_record.params, n_t=2, n_tprime=2)
    write_grid_csv(tmp_path / "g1.csv", grid)
    lines = (tmp_path / "g1.csv").read_text().splitlines()
    assert lines[0] == "t,t_prime,re,im" and len(lines) == 5
    write_ss_csv(tmp_path / "g1_ss.csv", [0.0, 0.05], [1.0, 0.5j], 7.45)
    assert (tmp_path / "g1_ss.csv").read_text().splitlines()[2] == "0.050000000000000003,0,0.5"
    assert (tmp_path / "g1_ss.csv.t_ss").read_text() == "t_ss,7.4500000000000002\n"


def test_driven_grid_invariants():
    p = SimParams(t_max=3.0, bond_max=16)
    rec = t_evol_mar(hamiltonian_1tls(p, pump=2.0), tls_ground(), vacuum(p.n_steps, p), p)
    g1 = g1_grid(rec, p).values
    g2 = g2_grid(rec, p).values
    assert np.abs(g2.imag).max() < 1e-8
    assert g2.real.min() > -1e-8
    assert np.abs(g1[:, 0].imag).max() < 1e-8
    # antibunching: no two photons leave a single emitter in the same bin pair at t' = 0
    assert np.abs(g2[:, 0]).max() < 1e-8
