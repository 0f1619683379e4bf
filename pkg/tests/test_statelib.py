import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from qrpe import qla
from qrpe import statelib as sl


def test_ghz_type_limits_and_spectrum():
    np.testing.assert_allclose(sl.ghz_type(1.0).matrix, sl.ghz(3).projector(), atol=1e-15)
    np.testing.assert_allclose(sl.ghz_type(0.0).matrix, np.eye(8) / 8, atol=1e-15)
    ev = np.sort(np.linalg.eigvalsh(sl.ghz_type(0.5).matrix))
    np.testing.assert_allclose(ev, [0.0625] * 7 + [0.5625], atol=1e-12)
    with pytest.raises(qla.ContractError):
        sl.ghz_type(1.5)


def test_ghz_states():
    g = sl.ghz(4)
    assert g.amplitudes[0] == pytest.approx(1 / math.sqrt(2))
    assert abs(np.vdot(sl.ghz(3).amplitudes, sl.ghz_minus(3).amplitudes)) < 1e-15
    with pytest.raises(qla.ContractError):
        sl.ghz(1)


def test_dephasing_limits():
    rho = sl.ghz_type(0.7)
    np.testing.assert_allclose(sl.dephase(rho, 0.0).matrix, rho.matrix, atol=1e-15)
    far = sl.dephase(rho, 60.0).matrix
    np.testing.assert_allclose(far, np.diag(np.diag(far)), atol=1e-15)
    with pytest.raises(qla.ContractError):
        sl.dephase(rho, -1)


def test_dephasing_plus_state_ln2():
    plus = np.full((2, 2), 0.5)
    out = sl.dephase(plus, math.log(2)).matrix
    np.testing.assert_allclose(out, [[0.5, 0.25], [0.25, 0.5]], atol=1e-15)
    np.testing.assert_allclose(out, oracles.dephase_kraus_sum(plus, math.log(2), 1), atol=1e-15)


@given(seed=st.integers(0, 2 ** 32 - 1), kt=st.floats(0, 5))
def test_dephasing_matches_kraus_sum(seed, kt):
    rho = qla.random_density((2, 2, 2), np.random.default_rng(seed)).matrix
    np.testing.assert_allclose(sl.dephase(rho, kt).matrix,
                               oracles.dephase_kraus_sum(rho, kt, 3), atol=1e-12)
    ks = sl.dephasing_kraus(kt)
    np.testing.assert_allclose(sum(k.conj().T @ k for k in ks), np.eye(2), atol=1e-12)


def test_witnesses():
    g, m = sl.witnesses_ghz3(normalize=False)
    rg = sl.ghz(3).projector()
    assert oracles.trace_loop(g.matrix, rg).real == pytest.approx(-1)
    assert oracles.trace_loop(m.matrix, rg).real == pytest.approx(-3)
    gn, mn = sl.witnesses_ghz3()
    assert qla.spectral_norm_herm(gn.matrix) == pytest.approx(1, abs=1e-12)
    assert qla.spectral_norm_herm(mn.matrix) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("q", [0.0, 0.3, 0.8, 1.0])
@pytest.mark.parametrize("kt", [0.0, 0.4, 1.5])
def test_witness_closed_forms(q, kt):
    gn, mn = sl.witnesses_ghz3()
    rho = sl.dephase(sl.ghz_type(q), kt).matrix
    e = math.exp(-3 * kt)
    assert np.trace(gn.matrix @ rho).real == pytest.approx(0.75 * (1 - q) - q * e, abs=1e-12)
    assert np.trace(mn.matrix @ rho).real == pytest.approx((0.75 * (1 - q) - 3 * q * e) / 3,
                                                           abs=1e-12)


def test_observable_spec_validation():
    with pytest.raises(qla.ContractError):
        sl.ObservableSpec("bad", np.array([[0, 1], [0, 0]]))
    with pytest.raises(qla.ContractError):
        sl.ObservableSpec("big", 2 * np.eye(2), normalized=True)


def test_noisy_state_limits():
    psi1, psi2 = sl.max_entangled()
    np.testing.assert_allclose(sl.noisy_state(psi2, 0).matrix, psi2.projector(), atol=1e-15)
    np.testing.assert_allclose(sl.noisy_state(psi2, 1).matrix, np.eye(9) / 9, atol=1e-15)
    with pytest.raises(qla.ContractError):
        sl.noisy_state(psi1, 1.1)


def test_max_entangled_states():
    psi1, psi2 = sl.max_entangled()
    assert psi1.dims == (2, 3) and psi2.dims == (3, 3)
    for keep in ([0], [1]):
        np.testing.assert_allclose(oracles.partial_trace_loop(psi2.projector(), (3, 3), keep),
                                   np.eye(3) / 3, atol=1e-15)
    # qubit marginal of psi1 is maximally mixed
    np.testing.assert_allclose(oracles.partial_trace_loop(psi1.projector(), (2, 3), [0]),
                               np.eye(2) / 2, atol=1e-15)


def test_wbp_depth_zero_and_reproducible():
    psi = sl.wbp_circuit(6, 0, seed=3)
    assert psi.amplitudes[0] == 1
    assert sl.renyi2_exact(psi, [0, 1]) == 0.0
    a = sl.wbp_circuit(6, 5, seed=3)
    b = sl.wbp_circuit(6, 5, seed=3)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert not np.allclose(a.amplitudes, sl.wbp_circuit(6, 5, seed=4).amplitudes)
    with pytest.raises(qla.ContractError):
        sl.wbp_circuit(2, 1, 0)


def test_wbp_single_layer_matches_dense_construction():
    n, theta_max = 3, 0.4
    psi = sl.wbp_circuit(n, 1, seed=9, theta_max=theta_max)
    rng = np.random.default_rng(9)
    axes = rng.integers(0, 3, size=n)
    thetas = rng.uniform(-theta_max, theta_max, size=n)
    paulis = [oracles.SX, oracles.SY, oracles.SZ]
    U = oracles.kron_all(*[oracles.taylor_expm(-0.5j * th * paulis[a])
                           for a, th in zip(axes, thetas)])
    cz = np.eye(8)
    for i in range(n):
        j = (i + 1) % n
        for b in range(8):
            bits = [(b >> (n - 1 - k)) & 1 for k in range(n)]
            if bits[i] and bits[j]:
                cz[b, b] *= -1
    ref = cz @ U @ np.eye(8)[:, 0]
    np.testing.assert_allclose(psi.amplitudes, ref, atol=1e-12)


def test_wbp_saturates_with_full_angle_range():
    n = 8
    page = sl.page_renyi2(4, 2 ** n // 4)
    vals = [sl.renyi2_exact(sl.wbp_circuit(n, 60, s, theta_max=math.pi), [0, 1]) for s in range(10)]
    assert abs(np.mean(vals) - page) < 0.1


def test_wbp_small_angles_stay_weakly_entangled():
    # with rotations limited to pi/20 the ring barely entangles within 60 layers
    vals = [sl.renyi2_exact(sl.wbp_circuit(8, 60, s), [0, 1]) for s in range(3)]
    assert np.mean(vals) < 0.3


def test_page_value():
    assert sl.page_renyi2(2, 2) == pytest.approx(-math.log(4 / 5))
    assert sl.page_renyi2(4, 64) == pytest.approx(-math.log(68 / 257))


def test_swap_operator():
    S = sl.swap_operator([2])
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(S.matrix)), [-1, 1, 1, 1], atol=1e-12)
    rho = qla.random_density((2,), np.random.default_rng(0)).matrix
    assert np.trace(S.matrix @ np.kron(rho, rho)).real == pytest.approx(np.trace(rho @ rho).real)


@pytest.mark.parametrize("n,k", [(2, 1), (3, 2), (4, 4)])
def test_pauli_klocal_counts(n, k):
    obs = sl.pauli_klocal_set(n, k)
    assert len(obs) == math.comb(n, k) * 3 ** k
    assert len({o.name for o in obs}) == len(obs)
    for o in obs[:5]:
        assert sum(ch != "I" for ch in o.name) == k
        assert qla.spectral_norm_herm(o.matrix) == pytest.approx(1)
    with pytest.raises(qla.ContractError):
        sl.pauli_klocal_set(2, 3)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_ghz_projector_terms(n):
    dense = sum(c * qla.kron(*fs) for c, fs in sl.ghz_projector_terms(n))
    np.testing.assert_allclose(dense, sl.ghz(n).projector(), atol=1e-14)
