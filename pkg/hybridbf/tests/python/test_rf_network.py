import math

import numpy as np
import pytest

from hybridbf.lib import rf_network as rf
from hybridbf.lib.butler import dft_matrix
from hybridbf.lib.channel_model import ArrayGeometry


def _random_phases(n, n_rf, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi, size=(n, n_rf))


def test_butler_static_loss_sub5ghz():
    # 5 etapas híbridas de 0.15 dB y 4 desfasadores fijos de 0.5 dB
    loss = rf.static_loss_db(rf.get_profile("sub5ghz"), rf.RfArchitecture.BUTLER, 32, 32)
    assert math.isclose(loss, 2.75, abs_tol=1e-12)
    assert abs(loss - 2.8) < 0.1


def test_fc_static_and_dynamic_loss():
    profile = rf.get_profile("sub5ghz")
    static = rf.static_loss_db(profile, "fully_connected", 64, 32)
    # 0.5·6 + 3.5 + 0.5·5
    assert math.isclose(static, 9.0, abs_tol=1e-12)
    assert math.isclose(rf.dynamic_loss_db("fully_connected", 32), 10 * math.log10(32))
    assert rf.dynamic_loss_db("butler", 32) == 0.0
    budget = rf.loss_budget(profile, "fully_connected", 64, 32)
    assert math.isclose(budget.compensation_db, 9.0 + 15.0515, abs_tol=1e-4)
    assert rf.static_loss_db(profile, rf.RfArchitecture.IDENTITY, 64, 64) == 0.0


def test_ideal_profiles_have_no_static_loss():
    ideal = rf.get_profile("ideal")
    assert rf.static_loss_db(ideal, "fully_connected", 128, 64) == 0.0
    assert rf.static_loss_db(ideal, "butler", 128, 64) == 0.0


@pytest.mark.parametrize("n_rf", [2, 8, 32])
def test_dynamic_loss_law_monte_carlo(n_rf):
    n = 32
    net = rf.compose_fc_abfn(ArrayGeometry(n), n_rf, _random_phases(n, n_rf, seed=n_rf), rf.get_profile("ideal"))
    assert math.isclose(np.linalg.norm(net.matrix, "fro") ** 2, 1.0, abs_tol=1e-12)
    rng = np.random.default_rng(2024)
    trials = 10_000
    u = rng.standard_normal((n_rf, trials)) + 1j * rng.standard_normal((n_rf, trials))
    ratios = np.sum(np.abs(net.matrix @ u) ** 2, axis=0) / np.sum(np.abs(u) ** 2, axis=0)
    mean = ratios.mean()
    stderr = ratios.std(ddof=1) / math.sqrt(trials)
    assert abs(mean - 1.0 / n_rf) <= 3 * stderr + 1e-12


def test_fc_entries_closed_form():
    n, n_rf = 16, 4
    profile = rf.get_profile("mmwave")
    phases = _random_phases(n, n_rf, seed=3)
    net = rf.compose_fc_abfn(ArrayGeometry(n), n_rf, phases, profile)
    l_s = rf.db_to_linear(0.6 * 4)
    l_ps = rf.db_to_linear(0.5)
    l_c = rf.db_to_linear(0.6 * 2)
    expected = np.exp(1j * phases) / math.sqrt(l_s * l_ps * l_c * n * n_rf)
    assert np.allclose(net.matrix, expected, atol=1e-14)
    # el vector plano usa el índice m = j·N + i
    flat = rf.compose_fc_abfn(ArrayGeometry(n), n_rf, phases.ravel(order="F"), profile)
    assert np.allclose(flat.matrix, net.matrix)
    assert net.loss_breakdown == pytest.approx({"divider": 2.4, "phase_shifter": 0.5, "combiner": 1.2})


def test_fc_with_dft_phases_is_scaled_butler():
    n, beams = 16, [0, 3, 5, 9]
    geom = ArrayGeometry(n)
    ideal = rf.get_profile("ideal")
    fc = rf.compose_fc_abfn(geom, len(beams), rf.dft_matched_phases(n, beams), ideal, beam_indices=beams)
    bt = rf.butler_rf_matrix(geom, beams, ideal)
    assert np.allclose(fc.matrix, bt.matrix / math.sqrt(len(beams)), atol=1e-12)
    assert list(fc.columns_for([5, 0])) == [2, 0]


def test_branch_ratios():
    n, n_rf = 8, 2
    geom = ArrayGeometry(n)
    ideal = rf.get_profile("ideal")
    phases = np.zeros((n, n_rf))
    equal = rf.compose_fc_abfn(geom, n_rf, phases, ideal, branch_ratios=[1.0] * n)
    default = rf.compose_fc_abfn(geom, n_rf, phases, ideal)
    assert np.allclose(equal.matrix, default.matrix)
    ratios = np.arange(1, n + 1, dtype=float)
    skewed = rf.compose_fc_abfn(geom, n_rf, phases, ideal, branch_ratios=ratios)
    p = ratios / ratios.sum()
    assert np.allclose(np.abs(skewed.matrix[:, 0]) ** 2, p / n_rf)
    with pytest.raises(ValueError):
        rf.compose_fc_abfn(geom, n_rf, phases, ideal, branch_ratios=[1.0] * (n - 1))


def test_butler_network():
    geom = ArrayGeometry(32)
    beams = [1, 4, 7]
    net = rf.butler_rf_matrix(geom, beams, rf.get_profile("sub5ghz"))
    kappa2 = 10 ** (-2.75 / 10)
    assert np.allclose(net.matrix.conj().T @ net.matrix, kappa2 * np.eye(3), atol=1e-12)
    assert np.allclose(net.matrix, math.sqrt(kappa2) * dft_matrix(32)[:, beams])
    assert net.beam_indices == (1, 4, 7)
    with pytest.raises(ValueError):
        rf.butler_rf_matrix(geom, [1, 1], rf.get_profile("ideal"))
    with pytest.raises(ValueError):
        rf.butler_rf_matrix(geom, [32], rf.get_profile("ideal"))
    with pytest.raises(ValueError):
        rf.butler_rf_matrix(ArrayGeometry(24), [0], rf.get_profile("ideal"))


def test_power_transfer_ratio_and_identity():
    net = rf.identity_network(8)
    assert math.isclose(rf.power_transfer_ratio(net, np.ones(8)), 1.0)
    with pytest.raises(ValueError):
        rf.power_transfer_ratio(net, np.zeros(8))
    with pytest.raises(ValueError):
        rf.power_transfer_ratio(net, np.ones(4))
    bt = rf.butler_rf_matrix(ArrayGeometry(8), [0, 1], rf.get_profile("ideal"))
    assert math.isclose(rf.power_transfer_ratio(bt, [1.0, 1j]), 1.0)


def test_component_matrices_reject_gain():
    with pytest.raises(ValueError):
        rf.divider_matrix(4, 2, 0.5)
    with pytest.raises(ValueError):
        rf.phase_shift_matrix([0.0, 1.0], 0.9)
    with pytest.raises(ValueError):
        rf.phase_shift_matrix([0.0, np.inf], 1.0)


def test_loss_profiles():
    with pytest.raises(ValueError):
        rf.get_profile("xband")
    with pytest.raises(ValueError):
        rf.LossProfile(-0.1, 0.0, 0.0, 0.0)
    assert rf.get_profile("SUB5GHZ").band_tag is rf.BandTag.SUB5GHZ
    assert rf.tree_stages(1) == 0
    assert rf.tree_stages(5) == 3


def test_array_response_phases():
    geom = ArrayGeometry(8)
    phases = rf.array_response_phases(geom, [30.0, 60.0])
    assert phases.shape == (8, 2)
    i = np.arange(8)
    expected = np.exp(1j * np.pi * i * np.cos(np.radians(60.0)))
    assert np.allclose(np.exp(1j * phases[:, 1]), expected)


@pytest.mark.parametrize("profile", ["sub5ghz", "mmwave"])
@pytest.mark.parametrize("architecture", ["fully_connected", "butler"])
def test_static_loss_is_monotone(profile, architecture):
    profile = rf.get_profile(profile)
    sizes = [2 ** p for p in range(1, 9)]
    for n_rf in (1, 4, 16):
        losses = [rf.static_loss_db(profile, architecture, n, n_rf) for n in sizes]
        assert all(b >= a for a, b in zip(losses, losses[1:]))
    for n in (64, 256):
        losses = [rf.static_loss_db(profile, architecture, n, n_rf) for n_rf in range(1, 65)]
        assert all(b >= a for a, b in zip(losses, losses[1:]))


@pytest.mark.parametrize("n, n_rf", [(8, 4), (16, 16), (64, 32)])
def test_coherent_combining_is_lossless(n, n_rf):
    geom = ArrayGeometry(n)
    net = rf.compose_fc_abfn(geom, n_rf, np.full((n, n_rf), 0.7), rf.get_profile("ideal"))
    u = (0.3 - 1.2j) * np.ones(n_rf)
    assert math.isclose(rf.power_transfer_ratio(net, u), 1.0, rel_tol=1e-12)


def test_divider_structure():
    n, n_rf = 4, 3
    loss = rf.db_to_linear(1.0)
    fd = rf.divider_matrix(n, n_rf, loss)
    assert fd.shape == (n * n_rf, n_rf)
    for j in range(n_rf):
        rows = np.flatnonzero(fd[:, j])
        assert list(rows) == list(range(j * n, (j + 1) * n))
        assert np.allclose(fd[rows, j], math.sqrt(1 / (loss * n)))
    assert math.isclose(abs(fd[0, 0]), 0.44566, abs_tol=1e-4)


def test_combiner_structure():
    n, n_rf = 4, 32
    loss = rf.db_to_linear(0.5 * 5)
    fc = rf.combiner_matrix(n, n_rf, loss)
    assert fc.shape == (n, n * n_rf)
    for i in range(n):
        cols = np.flatnonzero(fc[i])
        assert list(cols) == [i + k * n for k in range(n_rf)]
        assert np.allclose(np.abs(fc[i, cols]), 1 / math.sqrt(loss * n_rf), rtol=1e-12)
        assert np.allclose(np.abs(fc[i, cols]), 0.13249, atol=1e-4)
    assert np.allclose(rf.combiner_matrix(2, 2, 1.0), np.hstack([np.eye(2), np.eye(2)]) / math.sqrt(2))


@pytest.mark.parametrize("n_rf", [1, 4, 12])
def test_fc_basis_input_transfers_inverse_chain_count(n_rf):
    geom = ArrayGeometry(16)
    net = rf.compose_fc_abfn(geom, n_rf, _random_phases(16, n_rf, seed=n_rf), rf.get_profile("ideal"))
    for j in range(n_rf):
        e_j = np.zeros(n_rf)
        e_j[j] = 1.0
        assert math.isclose(rf.power_transfer_ratio(net, e_j), 1.0 / n_rf, rel_tol=1e-12)
