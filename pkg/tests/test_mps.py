import numpy as np
import pytest
from conftest import random_mps, random_sites
from hypothesis import given, settings
from hypothesis import strategies as st

from wgmps.errors import ContractViolation, DimensionError
from wgmps.mps import SYSTEM, Mps, SiteTensor, global_overlap, local_expectation, product_sites
from wgmps.tensor_core import matrix_exponential_unitary


def _is_left_normalized(a):
    m = a.reshape(-1, a.shape[2])
    return np.allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=1e-10)


def _is_right_normalized(a):
    m = a.reshape(a.shape[0], -1)
    return np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-10)


def _dense_schmidt(psi, dims, cut):
    m = psi.reshape(int(np.prod(dims[:cut])), -1)
    s = np.linalg.svd(m, compute_uv=False)
    s = s[s > 1e-13]
    return s / np.linalg.norm(s)


def test_canonical_form_after_construction(rng):
    mps = random_mps(rng, [2, 3, 2, 4, 2], oc=2)
    assert all(_is_left_normalized(mps.sites[k].data) for k in range(2))
    assert all(_is_right_normalized(mps.sites[k].data) for k in range(3, 5))
    assert mps.norm() == pytest.approx(1.0, abs=1e-12)


def test_site_tensor_rank_check():
    with pytest.raises(DimensionError):
        SiteTensor(np.ones((2, 2)))


def test_bond_mismatch_rejected(rng):
    sites = random_sites(rng, [2, 2, 2])
    sites[1] = SiteTensor(np.ones((2, 2, 3)))
    with pytest.raises(DimensionError, match="bond mismatch"):
        Mps(sites)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), target=st.integers(0, 5))
def test_gauge_invariance(seed, target):
    rng = np.random.default_rng(seed)
    mps = random_mps(rng, [2, 3, 2, 2, 3, 2], oc=0)
    psi = mps.to_dense()
    spectra = [mps.schmidt_at_cut(c).values for c in range(1, 6)]
    mps.move_oc(target)
    np.testing.assert_allclose(mps.to_dense(), psi, atol=1e-10)
    for c, s in zip(range(1, 6), spectra):
        np.testing.assert_allclose(mps.schmidt_at_cut(c).values, s, atol=1e-10)


def test_schmidt_matches_dense(rng):
    dims = [2, 3, 2, 2]
    mps = random_mps(rng, dims, oc=1)
    psi = mps.to_dense()
    for cut in range(1, 4):
        ref = _dense_schmidt(psi, dims, cut)
        got = mps.schmidt_at_cut(cut).values
        np.testing.assert_allclose(got[: len(ref)], ref, atol=1e-10)
    assert mps.schmidt_at_cut(0).values.tolist() == [1.0]


def test_sweep_spectra_are_normalized(rng):
    mps = random_mps(rng, [2, 2, 2, 2])
    spectra = mps.sweep_oc_right(3)
    assert sorted(spectra) == [1, 2, 3]
    for s in spectra.values():
        assert np.sum(s**2) == pytest.approx(1.0, abs=1e-12)


def test_swap_exchanges_legs_and_labels(rng):
    dims = [2, 3, 2]
    mps = random_mps(rng, dims, oc=0)
    psi = mps.to_dense().reshape(dims)
    mps.swap_adjacent(0)
    assert mps.oc_index == 1
    assert mps.physical_dims() == [3, 2, 2]
    assert [s.time_index for s in mps.sites] == [1, 0, 2]
    np.testing.assert_allclose(mps.to_dense().reshape(3, 2, 2), psi.transpose(1, 0, 2), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 3))
def test_swap_involution(seed, k):
    rng = np.random.default_rng(seed)
    mps = random_mps(rng, [2, 3, 2, 3, 2], oc=k)
    psi = mps.to_dense()
    mps.swap_adjacent(k)
    mps.swap_adjacent(k)
    np.testing.assert_allclose(mps.to_dense(), psi, atol=1e-8)


def test_swap_requires_center_on_pair(rng):
    mps = random_mps(rng, [2, 2, 2, 2], oc=3)
    with pytest.raises(ContractViolation):
        mps.swap_adjacent(0)


def test_apply_gate_matches_dense(rng):
    dims = [2, 3, 2, 2]
    mps = random_mps(rng, dims, oc=1)
    psi = mps.to_dense().reshape(dims)
    h = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    u = matrix_exponential_unitary(h + h.conj().T)
    mps.apply_gate(u, 1, n=2)
    ref = np.einsum("ij,ajb->aib", u.reshape(6, 6), psi.reshape(2, 6, 2)).reshape(-1)
    np.testing.assert_allclose(mps.to_dense(), ref, atol=1e-10)
    assert mps.norm() == pytest.approx(1.0, abs=1e-12)


def test_apply_gate_with_reordering(rng):
    dims = [2, 2, 3, 2]
    mps = random_mps(rng, dims, oc=1)
    mps.sites[2].kind = SYSTEM
    psi = mps.to_dense().reshape(dims)
    u = matrix_exponential_unitary(np.diag(np.arange(12.0)) + np.eye(12, k=1) + np.eye(12, k=-1))
    report = mps.apply_gate(u, 0, n=3, out_order=(0, 2, 1))
    g = u.reshape(2, 2, 3, 2, 2, 3)
    ref = np.einsum("ijkabc,abcd->ijkd", g, psi).transpose(0, 2, 1, 3)
    np.testing.assert_allclose(mps.to_dense(), ref.reshape(-1), atol=1e-10)
    assert mps.oc_index == 1  # the system site now sits at position 1
    assert mps.sites[1].kind == SYSTEM
    assert set(report.spectra) == {1, 2}


def test_apply_gate_checks(rng):
    mps = random_mps(rng, [2, 2, 2], oc=0)
    with pytest.raises(ContractViolation, match="unitary"):
        mps.apply_gate(np.ones((4, 4)), 0, n=2)
    with pytest.raises(ContractViolation, match="orthogonality center"):
        mps.apply_gate(np.eye(4), 1, n=2)
    with pytest.raises(DimensionError):
        mps.apply_gate(np.eye(3), 0, n=2)


def test_truncating_gate_norm_bounded_by_discarded_weight(rng):
    mps = random_mps(rng, [2, 2, 2, 2, 2, 2], bond=4, oc=2, bond_max=2)
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    u = matrix_exponential_unitary(h + h.conj().T)
    mps.apply_gate(u, 2, n=2)
    assert abs(mps.norm() - 1.0) <= mps.discarded_weight + 1e-10
    assert max(mps.bond_dims()) <= 4


def test_snapshot_expectation_without_moving(rng):
    mps = random_mps(rng, [2, 3, 2], oc=1)
    op = np.diag([0.0, 1.0, 2.0])
    ref = mps.copy().expectation_local(op, 1)
    left = mps.snapshot(0, 0)
    right = mps.snapshot(2, 0)
    assert mps.oc_index == 1
    z = np.diag([1.0, -1.0])
    for snap, site in ((left, 0), (right, 2)):
        assert local_expectation(snap.data, z) == pytest.approx(mps.copy().expectation_local(z, site), abs=1e-12)
    assert local_expectation(mps.snapshot(1, 0).data, op) == pytest.approx(ref, abs=1e-12)


def test_product_sites_and_overlap():
    a = Mps(product_sites([[1, 0], [0, 1]]))
    b = Mps(product_sites([[1, 0], [1, 1]]))
    assert global_overlap(a, b) == pytest.approx(1 / np.sqrt(2))


def test_dump_roundtrip(tmp_path, rng):
    mps = random_mps(rng, [2, 3, 2], oc=2)
    mps.sites[1].kind = SYSTEM
    mps.sites[1].time_index = None
    path = tmp_path / "chain.npz"
    mps.dump(path)
    back = Mps.load(path)
    assert back.oc_index == 2
    assert [s.kind for s in back.sites] == [s.kind for s in mps.sites]
    np.testing.assert_array_equal(back.to_dense(), mps.to_dense())


def test_find_sites(rng):
    mps = random_mps(rng, [2, 2, 2])
    mps.sites[1].kind = SYSTEM
    assert mps.find(SYSTEM) == 1
    assert mps.find("time_bin", 2) == 2
    with pytest.raises(KeyError):
        mps.find("time_bin", 7)
