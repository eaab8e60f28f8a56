import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxgrowth import linalg
from maxgrowth.errors import DefinitenessError, UnsupportedStructureError
from maxgrowth.growth import max_growth
from maxgrowth.models import (
    ClassicalNetwork,
    FixtureId,
    TwoMachineParams,
    classical_linear_A,
    cos_sqrt_oracle,
    electrical_power,
    energy_norm_weight,
    fixture,
    ground_reference,
    henrici_sweep,
    speed_weight,
    two_machine_jacobian,
    two_machine_K,
)

FREE_TWO_BUS = ClassicalNetwork(H=[1.0, 1.0], D=[0.0, 0.0], K=[[2.0, -2.0], [-2.0, 2.0]])


def random_spd_network(rng, n, damping=0.0):
    X = rng.standard_normal((n, n))
    return ClassicalNetwork(H=rng.uniform(0.5, 5.0, n), D=np.full(n, damping), K=X @ X.T + n * np.eye(n))


# -- ClassicalNetwork and the linear operator ----------------------------------------


def test_network_validation():
    with pytest.raises(ValueError):
        ClassicalNetwork(H=[1.0, -1.0], D=[0.0, 0.0], K=np.eye(2))
    with pytest.raises(ValueError):
        ClassicalNetwork(H=[1.0, 1.0], D=[0.0, -0.1], K=np.eye(2))
    with pytest.raises(ValueError):
        ClassicalNetwork(H=[1.0, 1.0], D=[0.0, 0.0], K=np.eye(3))
    net = ClassicalNetwork(H=np.diag([2.0, 3.0]), D=0.5, K=np.eye(2))
    np.testing.assert_array_equal(net.H, [2.0, 3.0])
    np.testing.assert_array_equal(net.D, [0.5, 0.5])


def test_classical_A_grounded_two_bus():
    net = ClassicalNetwork(H=[1.0], D=[0.0], K=[[4.0]])
    np.testing.assert_array_equal(classical_linear_A(net), [[0.0, 1.0], [-4.0, 0.0]])


def test_classical_A_no_stiffness():
    net = ClassicalNetwork(H=[2.0], D=[3.0], K=[[0.0]])
    A = classical_linear_A(net)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(A).real), [-1.5, 0.0])
    assert A[1, 0] == 0.0


def test_classical_A_undamped_spectrum(rng):
    net = random_spd_network(rng, 3)
    w = np.linalg.eigvals(classical_linear_A(net))
    expect = np.sqrt(np.linalg.eigvals(net.omega).real)
    np.testing.assert_allclose(w.real, 0.0, atol=1e-9)
    np.testing.assert_allclose(np.sort(np.abs(w.imag)), np.sort(np.r_[expect, expect]), rtol=1e-9)
    # conjugate pairs
    np.testing.assert_allclose(np.sort(w.imag), np.sort(-w.imag), atol=1e-9)


# -- energy norm -------------------------------------------------------------------


def test_energy_weight_grounded_two_bus():
    W = energy_norm_weight(ground_reference(FREE_TWO_BUS, 0))
    np.testing.assert_allclose(W.C, np.diag([2.0, 1.0]))
    np.testing.assert_allclose(W.B, W.C)


def test_energy_weight_identity():
    W = energy_norm_weight(ClassicalNetwork(H=[1.0, 1.0], D=[0.0, 0.0], K=np.eye(2)))
    np.testing.assert_allclose(W.C, np.eye(4))


def test_energy_weight_ungrounded_raises():
    with pytest.raises(DefinitenessError, match="ground"):
        energy_norm_weight(FREE_TWO_BUS)


def test_energy_weight_measures_energy(rng):
    net = random_spd_network(rng, 3)
    W = energy_norm_weight(net)
    x = rng.standard_normal(6)
    d, w = x[:3], x[3:]
    assert W.output_norm(x) ** 2 == pytest.approx(d @ net.K @ d + w @ (net.H * w), rel=1e-12)


def test_energy_conserved_for_undamped_network(rng):
    net = random_spd_network(rng, 3)
    res = max_growth(classical_linear_A(net), energy_norm_weight(net), dT=0.25, n=20)
    np.testing.assert_allclose(res.curve.growth, 1.0, atol=1e-8)


# -- grounding -------------------------------------------------------------------


def test_ground_two_bus_gives_reference_operator():
    g = ground_reference(FREE_TWO_BUS, 0)
    np.testing.assert_allclose(g.K, [[4.0]])
    np.testing.assert_allclose(classical_linear_A(g), [[0.0, 1.0], [-4.0, 0.0]])
    assert ground_reference(FREE_TWO_BUS, 1).K[0, 0] == pytest.approx(4.0)


def test_ground_two_machines_unequal_inertia_positive():
    net = ClassicalNetwork(H=[2.0, 5.0], D=[0.0, 0.0], K=[[3.0, -3.0], [-3.0, 3.0]])
    g = ground_reference(net, 0)
    assert g.K.shape == (1, 1) and g.K[0, 0] > 0


def test_ground_three_machine_chain():
    K = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    H = np.array([1.0, 2.0, 4.0])
    net = ClassicalNetwork(H=H, D=0.1 * H, K=K)
    g = ground_reference(net, 0)
    assert g.K.shape == (2, 2)
    # relative-angle stiffness keeps the nonzero modes of the free network
    w_free = np.sort(np.linalg.eigvals(net.omega).real)[1:]
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(g.omega).real), w_free, rtol=1e-12)
    assert np.all(np.linalg.eigvals(g.K).real > 0)
    np.testing.assert_allclose(g.D / g.H, 0.1)


def test_ground_preserves_relative_dynamics(rng):
    K = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    H = np.array([1.0, 2.0, 4.0])
    net = ClassicalNetwork(H=H, D=0.3 * H, K=K)
    g = ground_reference(net, 0)
    x0 = rng.standard_normal(6)
    T = np.zeros((4, 6))
    T[0, 1] = T[1, 2] = T[2, 4] = T[3, 5] = 1.0
    T[0, 0] = T[1, 0] = T[2, 3] = T[3, 3] = -1.0
    full = T @ linalg.dense_expm(classical_linear_A(net), 1.3) @ x0
    red = linalg.dense_expm(classical_linear_A(g), 1.3) @ (T @ x0)
    np.testing.assert_allclose(red, full, rtol=1e-10, atol=1e-12)


def test_ground_errors():
    with pytest.raises(IndexError):
        ground_reference(FREE_TWO_BUS, 2)
    with pytest.raises(ValueError):
        ground_reference(ClassicalNetwork(H=[1.0], D=[0.0], K=[[1.0]]), 0)
    with pytest.raises(UnsupportedStructureError):
        ground_reference(ClassicalNetwork(H=[1.0, 1.0], D=[0.0, 0.0], K=np.eye(2)), 0)


# -- two-machine infinite-bus model --------------------------------------------


def test_two_machine_lossless_flat_start():
    p = TwoMachineParams().lossless()
    K = two_machine_K(p, 0.0, 0.0)
    np.testing.assert_allclose(K, [[p.B10 + p.B12, -p.B12], [-p.B12, p.B20 + p.B12]])


@settings(max_examples=40, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_two_machine_lossless_symmetric(d1, d2):
    K = two_machine_K(TwoMachineParams().lossless(), d1, d2)
    assert np.abs(K - K.T).max() <= 1e-14


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_two_machine_K_matches_finite_differences(d1, d2):
    p = TwoMachineParams()
    h = 1e-6
    fd = np.column_stack(
        [
            (electrical_power(p, d1 + h, d2) - electrical_power(p, d1 - h, d2)) / (2 * h),
            (electrical_power(p, d1, d2 + h) - electrical_power(p, d1, d2 - h)) / (2 * h),
        ]
    )
    np.testing.assert_allclose(two_machine_K(p, d1, d2), fd, atol=1e-8)


def test_two_machine_lossy_asymmetry_grows():
    p = TwoMachineParams()
    asym = [np.linalg.norm(two_machine_K(p, d, 0.0) - two_machine_K(p, d, 0.0).T) for d in np.linspace(0, 1, 6)]
    assert asym[0] == pytest.approx(0.0, abs=1e-15)
    assert np.all(np.diff(asym) > 0)


def test_two_machine_jacobian_structure():
    p = TwoMachineParams(D1=0.2, D2=0.4, H1=2.0, H2=4.0)
    A = two_machine_jacobian(p, 0.3, 0.1)
    np.testing.assert_array_equal(A[:2, :2], 0.0)
    np.testing.assert_array_equal(A[:2, 2:], np.eye(2))
    np.testing.assert_allclose(A[2:, :2], -two_machine_K(p, 0.3, 0.1) / [[2.0], [4.0]])
    np.testing.assert_allclose(A[2:, 2:], np.diag([-0.1, -0.1]))


def test_two_machine_params_validation():
    with pytest.raises(ValueError):
        TwoMachineParams(H1=0.0)
    with pytest.raises(ValueError):
        TwoMachineParams(B12=np.nan)


# -- cos(sqrt(Omega) t) ------------------------------------------------------------


def test_cos_oracle_at_zero(rng):
    np.testing.assert_allclose(cos_sqrt_oracle(random_spd_network(rng, 3), 0.0), np.eye(3), atol=1e-14)


def test_cos_oracle_scalar():
    net = ClassicalNetwork(H=[1.0], D=[0.0], K=[[4.0]])
    for t in (0.3, 1.0, 2.5):
        assert cos_sqrt_oracle(net, t)[0, 0] == pytest.approx(np.cos(2 * t), abs=1e-15)


def test_cos_oracle_matches_exponential_block(rng):
    for _ in range(5):
        n = int(rng.integers(1, 6))
        net = random_spd_network(rng, n)
        E = linalg.dense_expm(classical_linear_A(net), 1.7)
        np.testing.assert_allclose(E[n:, n:], cos_sqrt_oracle(net, 1.7), atol=1e-10)


def test_cos_oracle_rejects_nonsymmetric():
    with pytest.raises(UnsupportedStructureError):
        cos_sqrt_oracle(ClassicalNetwork(H=[1.0, 1.0], D=[0.0, 0.0], K=[[1.0, 0.5], [0.0, 1.0]]), 1.0)


# -- Henrici sweep -----------------------------------------------------------------


def test_henrici_sweep_lossless_is_normal():
    rows = henrici_sweep(TwoMachineParams().lossless(), np.radians(np.arange(0, 61, 5)))
    assert rows.shape == (13, 2)
    assert np.all(rows[:, 1] <= 1e-12)


def test_henrici_sweep_lossy_nondecreasing():
    rows = henrici_sweep(TwoMachineParams(), np.radians(np.arange(0, 61, 1)))
    assert np.all(np.diff(rows[:, 1]) >= -1e-12)
    assert rows[-1, 1] > rows[0, 1]


def test_henrici_sweep_heterogeneous_inertia_runs():
    rows = henrici_sweep(TwoMachineParams(H1=10.0, H2=1.0), np.radians([0.0, 30.0, 60.0]))
    assert np.all(np.isfinite(rows)) and np.all(rows[:, 1] >= 0)


# -- fixtures and speed weights ---------------------------------------------------


def test_fixture_ids():
    assert [f.value for f in FixtureId] == [
        "vreg_sys1", "vreg_sys2", "oscillator_2bus", "classical_custom", "two_machine_lossy",
    ]
    with pytest.raises(ValueError):
        fixture("ieee39")


def test_fixture_reference_jacobians():
    assert fixture("vreg_sys1").A[1][0] == -1.015
    assert fixture("vreg_sys2").A[1][0] == -8.123
    np.testing.assert_array_equal(fixture("vreg_sys1").A, [[-0.082, 0.1], [-1.015, -2.0]])
    np.testing.assert_array_equal(fixture("vreg_sys2").A, [[-0.069, 0.1], [-8.123, -2.0]])


def test_fixture_oscillator():
    fx = fixture(FixtureId.oscillator_2bus)
    np.testing.assert_array_equal(fx.A, [[0.0, 1.0], [-4.0, 0.0]])
    W = fx.metadata["weights"]
    assert W["euclidean"].mode == "euclidean"
    np.testing.assert_allclose(W["energy"].C, np.diag([2.0, 1.0]))


@pytest.mark.parametrize("fid", list(FixtureId))
def test_fixtures_are_consistent(fid):
    fx = fixture(fid)
    n = fx.A.shape[0]
    md = fx.metadata
    assert len(md["labels"]) == n
    assert np.linalg.eigvals(fx.A).real.max() <= 1e-9
    if "speed_indices" in md:
        assert len(md["speed_indices"]) == len(md["inertias"])


def test_speed_weight_scalar():
    W = speed_weight([4.0], [0], 2)
    np.testing.assert_allclose(W.output_matrix(2).to_dense(), [[2.0, 0.0]])
    _, C_hat = W.restriction(2)
    np.testing.assert_allclose(C_hat.to_dense()[:, 0], [0.5, 0.0])


def test_speed_weight_common_scale_invariance():
    fx = fixture("classical_custom")
    r1 = max_growth(fx.A, speed_weight([1.0, 1.0, 1.0], [3, 4, 5], 6), dT=0.1, n=20)
    r9 = max_growth(fx.A, speed_weight([9.0, 9.0, 9.0], [3, 4, 5], 6), dT=0.1, n=20)
    np.testing.assert_allclose(r9.curve.sigma_max, r1.curve.sigma_max, rtol=1e-12)
    np.testing.assert_allclose(r9.x_max, r1.x_max, atol=1e-12)
    assert r9.t_star == r1.t_star


def test_speed_weight_three_machine_shape():
    W = speed_weight([4.0, 2.0, 1.0], [3, 4, 5], 6)
    F, C_hat = W.restriction(6)
    assert F.shape == (6, 3) and C_hat.shape == (6, 3)
    assert W.output_matrix(6).shape == (3, 6)


def test_speed_weight_errors():
    with pytest.raises(ValueError):
        speed_weight([1.0, 0.0], [0, 1], 4)
    with pytest.raises(ValueError):
        speed_weight([1.0], [0, 1], 4)
    with pytest.raises(ValueError):
        speed_weight([1.0], [4], 4)
