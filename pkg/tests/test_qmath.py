from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_herm
from ncpbattery.battery import PSI_PLUS, SX, SZ, I2, bell_mixture, bell_mixture_purification
from ncpbattery.qmath import (
    DimensionError,
    HermiticityError,
    eig_hermitian,
    kron,
    kron_all,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    psd_check,
    von_neumann_entropy,
)


def test_kron_examples():
    assert np.allclose(kron(I2, I2), np.eye(4))
    assert np.allclose(kron(SZ, I2), np.diag([1, 1, -1, -1]))
    ket01 = np.array([0, 1, 0, 0])
    assert np.allclose(kron(SX, SX) @ ket01, [0, 0, 1, 0])


def test_kron_all_matches_nested():
    a, b, c = np.arange(4).reshape(2, 2), SX, SZ
    assert np.allclose(kron_all([a, b, c]), np.kron(np.kron(a, b), c))


def test_partial_trace_examples():
    bell = np.outer(PSI_PLUS, PSI_PLUS.conj())
    assert np.allclose(partial_trace(bell, [2, 2], [0]), np.eye(2) / 2)
    rng = np.random.default_rng(0)
    rho, sigma = random_density(rng, 2), random_density(rng, 3)
    assert np.allclose(partial_trace(np.kron(rho, sigma), [2, 3], [0]), rho)
    assert np.allclose(partial_trace(np.kron(rho, sigma), [2, 3], [1]), sigma)


def test_partial_trace_of_purification_by_explicit_sum():
    psi = bell_mixture_purification(0.25).ket.reshape(2, 4)
    explicit = sum(np.outer(psi[e], psi[e].conj()) for e in range(2))
    assert np.allclose(partial_trace(np.outer(psi.ravel(), psi.ravel().conj()), [2, 2, 2], [1, 2]), explicit)
    assert np.allclose(explicit, bell_mixture(0.25).matrix)


def test_partial_trace_keeps_order_and_full_trace():
    rng = np.random.default_rng(1)
    a, b, c = (random_density(rng, d) for d in (2, 3, 2))
    m = kron_all([a, b, c])
    assert np.allclose(partial_trace(m, [2, 3, 2], [2, 0]), np.kron(a, c))
    assert np.allclose(partial_trace(m, [2, 3, 2], []), [[1.0]])


def test_partial_trace_dimension_error():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), [2, 3], [0])
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), [2, 2], [5])


def test_partial_transpose_examples():
    bell = np.outer(PSI_PLUS, PSI_PLUS.conj())
    pt = partial_transpose(bell, [2, 2], 0)
    # |psi+> has a negative partial transpose eigenvalue of -1/2
    assert np.isclose(np.linalg.eigvalsh(pt)[0], -0.5)
    rng = np.random.default_rng(2)
    rho = random_density(rng, 4)
    assert np.allclose(partial_transpose(rho, [2, 2], [0, 1]), rho.T)
    assert np.allclose(partial_transpose(partial_transpose(rho, [2, 2], 1), [2, 2], 1), rho)


def test_permute_subsystems_swaps_factors():
    rng = np.random.default_rng(3)
    a, b = random_herm(rng, 2), random_herm(rng, 3)
    assert np.allclose(permute_subsystems(np.kron(a, b), [2, 3], [1, 0]), np.kron(b, a))
    with pytest.raises(DimensionError):
        permute_subsystems(np.eye(4), [2, 2], [0, 0])


def test_eig_hermitian_and_errors():
    w, v = eig_hermitian(SZ)
    assert np.allclose(w, [-1, 1])
    assert np.allclose(v.conj().T @ v, np.eye(2))
    with pytest.raises(HermiticityError):
        eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_psd_check_reports():
    assert psd_check(np.eye(3)).is_psd
    rep = psd_check(np.diag([1.0, -0.1]))
    assert not rep.is_psd and np.isclose(rep.min_eig, -0.1)
    assert not psd_check(np.array([[1, 1], [0, 1]])).is_psd


def test_entropy_examples():
    assert np.isclose(von_neumann_entropy(np.eye(2) / 2), 1.0)
    assert abs(von_neumann_entropy(np.diag([1.0, 0.0]))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([(2, 2), (2, 3), (3, 2, 2)]))
def test_partial_trace_preserves_trace(seed, dims):
    rng = np.random.default_rng(seed)
    m = random_density(rng, int(np.prod(dims)))
    for k in range(len(dims)):
        assert np.isclose(np.trace(partial_trace(m, dims, [k])), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_permutation_roundtrip(seed):
    rng = np.random.default_rng(seed)
    dims = [2, 3, 2]
    m = random_herm(rng, 12)
    perm = list(rng.permutation(3))
    inv = list(np.argsort(perm))
    back = permute_subsystems(permute_subsystems(m, dims, perm), [dims[p] for p in perm], inv)
    assert np.allclose(back, m)
