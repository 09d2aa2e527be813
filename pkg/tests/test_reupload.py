import json
import logging

import numpy as np
import pytest

from nisqkit.datasets import LabeledDataset, LabelSet, make_dataset
from nisqkit.reupload import (ReuploadModel, SharedParameterError, accuracy,
                              build_model_circuit, classify, fidelity_cost, fidelity_objective,
                              parameter_shift_grad, simulate, uat_recursion, uat_rotation_angles,
                              weighted_fidelity_cost, xy_benchmark_loss, z_benchmark_loss,
                              z_objective)
from nisqkit.sim import run_exact

LS2 = LabelSet.for_classes(2)


def _point(label, x=(0.0,)):
    return LabeledDataset(np.array([x], dtype=float), np.array([label]), np.array(["train"]))


def _uat(phi, layers=1):
    return ReuploadModel("UAT", layers, params=np.tile([0.0, 0.0, phi], layers))


@pytest.mark.parametrize("family,d,per", [("FOURIER", 1, 5), ("UAT", 1, 3), ("UAT", 3, 5),
                                          ("ANSATZ_A", 2, 4), ("CLASSIFIER_U3", 2, 6),
                                          ("CLASSIFIER_U3", 4, 12)])
def test_parameter_counts(family, d, per):
    m = ReuploadModel(family, 3, d, n_qubits=2)
    assert m.per_gate == per and m.n_params == 3 * 2 * per
    with pytest.raises(ValueError):
        ReuploadModel(family, 3, d, params=np.zeros(m.n_params + 1))


def test_construction_errors():
    with pytest.raises(ValueError):
        ReuploadModel("UAT", 0)
    with pytest.raises(ValueError):
        ReuploadModel("FOURIER", 2, data_dim=2)
    with pytest.raises(ValueError):
        ReuploadModel("UAT", 2, entangling="CZ_alternating")
    with pytest.raises(ValueError):
        ReuploadModel("QAOA", 2)


@pytest.mark.parametrize("nq,layers", [(2, 3), (4, 5), (6, 2)])
def test_cz_count_and_placement(nq, layers):
    m = ReuploadModel("UAT", layers, 2, nq, "CZ_alternating")
    ops = m.program.ops
    assert sum(op[0] == "cz" for op in ops) == (layers - 1) * nq // 2
    assert ops[-1][0] == "rot"  # no entangler after the last layer
    c = build_model_circuit(m.with_params(np.ones(m.n_params)), [[0.1, 0.2]])
    assert c.count()["two_qubit"] == (layers - 1) * nq // 2


def test_zero_uat_is_identity():
    psi = simulate(ReuploadModel("UAT", 4, 2), np.random.default_rng(0).uniform(-1, 1, (20, 2)))
    assert np.allclose(np.abs(psi[:, 0]), 1)


def test_fourier_without_frequency_ignores_input():
    p = np.random.default_rng(1).uniform(-np.pi, np.pi, (3, 5))
    p[:, 0] = 0
    psi = simulate(ReuploadModel("FOURIER", 3, params=p.ravel()), np.linspace(-1, 1, 7))
    assert np.allclose(psi, psi[0])


def test_rotation_table():
    p = np.array([-2.501, 1.685, 1.757, 2.105, 3.822, -1.788, -1.507, -4.640, 0.430, 1.875,
                  5.038, -1.906]).reshape(4, 3)
    # per layer (w, alpha, phi) = (p2, p1, p3) / 2
    m = ReuploadModel("UAT", 4, params=np.column_stack([p[:, 1], p[:, 0], p[:, 2]]).ravel() / 2)
    table = {0.0: (3.782, 2.105, 4.776, 1.875), -0.5: (2.939, 0.194, 0.813, 5.639),
             1.0: (5.467, 5.927, 0.136, 0.630)}
    for x, zs in table.items():
        ang = uat_rotation_angles(m, x)
        assert np.allclose([a[0] for a in ang], zs, atol=1e-3)
        assert np.allclose([a[1] for a in ang], (1.757, 4.495, 0.430, 4.377), atol=1e-3)


def test_uat_recursion_matches_simulation():
    m = ReuploadModel("UAT", 5, 2, params=np.random.default_rng(2).normal(size=20))
    for x in ([0.3, -0.7], [1.0, 0.0]):
        a, b = uat_recursion(m, x)
        psi = simulate(m, [x])[0]
        assert np.isclose(abs(a), abs(psi[0])) and np.isclose(abs(b), abs(psi[1]))
        assert np.isclose(abs(np.vdot([a, b], psi)), 1)


def test_circuit_export_matches_batched_simulation():
    m = ReuploadModel("CLASSIFIER_U3", 3, 4, 3, "CZ_alternating")
    m = m.with_params(np.random.default_rng(3).normal(size=m.n_params))
    x = np.array([[0.1, -0.4, 0.8, 0.3]])
    assert np.allclose(run_exact(build_model_circuit(m, x)).amps, simulate(m, x)[0])


def test_input_dimension_checked():
    with pytest.raises(ValueError):
        simulate(ReuploadModel("UAT", 2, 2), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        build_model_circuit(ReuploadModel("UAT", 2), [0.1, 0.2])


# --------------------------------------------------------------- losses

def test_z_loss_example():
    assert np.isclose(z_benchmark_loss(ReuploadModel("UAT", 1), [0.0], [-1.0]), 4.0)


def test_xy_loss_example():
    # the xy readout starts from |+>; RY(-pi/2) returns it to |0>, whose x and y vanish
    m = _uat(-np.pi / 4)
    assert np.isclose(xy_benchmark_loss(m, [0.0, 0.5, 1.0], [1j, 1j, 1j]), 1.0)
    assert np.isclose(xy_benchmark_loss(ReuploadModel("UAT", 1), [0.0], [1j]), 2.0)


def test_fidelity_cost_examples():
    plus = _uat(np.pi / 4)
    assert np.isclose(fidelity_cost(plus, _point(0), LS2), 0.75)
    pts = LabeledDataset(np.zeros((5, 1)), np.ones(5, int), np.array(["train"] * 5))
    assert np.isclose(fidelity_cost(ReuploadModel("UAT", 2), pts, LS2), 5.0)


def test_label_overlaps():
    y4 = LabelSet.for_classes(4).overlaps
    assert np.allclose(y4[0], [1, 1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(y4, y4.T) and np.allclose(np.diag(y4), 1)
    y6 = LabelSet.for_classes(6).overlaps
    off = y6[~np.eye(6, dtype=bool)]
    assert set(np.round(off, 12)) == {0.0, 0.5}
    assert np.allclose(LabelSet.for_classes(3).overlaps[0], [1, 0.25, 0.25])
    with pytest.raises(ValueError):
        LabelSet.for_classes(5)


def test_weighted_cost_with_zero_weights():
    ls = LabelSet.for_classes(4)
    data = make_dataset("3circles", 30, 0, seed=1).train
    m = ReuploadModel("UAT", 2, 2, params=np.random.default_rng(4).normal(size=8))
    want = 0.5 * np.sum(ls.overlaps[data.labels] ** 2)
    assert np.isclose(weighted_fidelity_cost(m, data, ls, np.zeros(4)), want)
    with pytest.raises(ValueError):
        weighted_fidelity_cost(m, data, ls, np.zeros(3))


# --------------------------------------------------------------- decisions

def test_equatorial_tie_goes_to_class_zero(caplog):
    with caplog.at_level(logging.INFO, logger="nisqkit.reupload"):
        guess, f = classify(_uat(np.pi / 4), LS2, [0.0])
    assert guess[0] == 0 and np.allclose(f, 0.5)
    assert "tie" in caplog.text


def test_decisions_ignore_weight_scale():
    ls = LabelSet.for_classes(3)
    m = ReuploadModel("UAT", 3, 2, params=np.random.default_rng(5).normal(size=12))
    x = np.random.default_rng(6).uniform(-1, 1, (200, 2))
    w = np.array([0.7, 1.3, 0.9])
    assert np.array_equal(classify(m, ls, x, weights=w)[0], classify(m, ls, x, weights=3.5 * w)[0])


def test_threshold_half_matches_plain_comparison():
    data = make_dataset("circle", 0, 500, seed=2).test
    m = ReuploadModel("UAT", 3, 2, params=np.random.default_rng(7).normal(size=12))
    assert accuracy(m, LS2, data, threshold=0.5) == accuracy(m, LS2, data)
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            accuracy(m, LS2, data, threshold=bad)


# --------------------------------------------------------------- gradients

def _fd(obj, theta, i, h=1e-6):
    e = np.zeros_like(theta)
    e[i] = h
    return (obj.value(theta + e) - obj.value(theta - e)) / (2 * h)


def test_full_gradient_matches_finite_differences():
    rng = np.random.default_rng(8)
    x = np.linspace(-1, 1, 9)
    m = ReuploadModel("FOURIER", 2)
    obj = z_objective(m, x, np.sin(2 * x))
    th = rng.normal(size=m.n_params)
    g = obj.grad(th)
    assert np.allclose(g, [_fd(obj, th, i) for i in range(th.size)], atol=1e-6)


def test_shared_fourier_parameters_refuse_single_shift():
    m = ReuploadModel("FOURIER", 2)
    obj = z_objective(m, np.linspace(-1, 1, 5), np.zeros(5))
    th = np.random.default_rng(9).normal(size=m.n_params)
    with pytest.raises(SharedParameterError):
        parameter_shift_grad(obj, th, 1)  # the alpha offset enters two z rotations
    assert np.isclose(parameter_shift_grad(obj, th, 0), obj.grad(th)[0])


def test_parameter_shift_matches_full_gradient():
    data = make_dataset("circle", 20, 0, seed=3).train
    m = ReuploadModel("UAT", 2, 2, 2, "CZ_alternating")
    obj = fidelity_objective(m, data, LS2)
    th = np.random.default_rng(10).normal(size=obj.dim)
    g = obj.grad(th)
    for i in range(obj.dim):
        assert abs(parameter_shift_grad(obj, th, i) - g[i]) < 1e-10


# --------------------------------------------------------------- serialisation

def test_model_json_round_trip():
    m = ReuploadModel("ANSATZ_A", 2, 3, 2, "CZ_alternating")
    m = m.with_params(np.random.default_rng(11).normal(size=m.n_params))
    back = ReuploadModel.from_json(m.to_json())
    assert np.array_equal(back.params, m.params) and back.to_dict() == m.to_dict()
    assert json.loads(m.to_json())["family"] == "ANSATZ_A"
