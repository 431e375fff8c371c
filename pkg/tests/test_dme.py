import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from uqemu.dme import (
    NoiseBudget,
    controlled_dme,
    controlled_swap_step_superoperator,
    dme_error,
    dme_error_curve,
    dme_evolution,
    exact_conjugation,
    exact_controlled_superoperator,
    loglog_slope,
    noisy_emulation_run,
    partial_swap_step,
    partial_swap_superoperator,
    rus_swap_exponential,
    swap_exponential,
    swap_operator,
)
from uqemu.errors import DimensionError, DomainError
from uqemu.instances import generate_instance, random_density, random_ket
from uqemu.numerics import (
    apply_superoperator,
    apply_superoperator_subsystems,
    basis,
    choi_distance,
    controlled,
    projector,
    trace_norm,
    trace_norm_distance,
    unitary_superoperator,
)

seeds = st.integers(0, 2**32 - 1)


def test_swap_operator():
    s = swap_operator(3)
    a, b = random_ket(3, 0), random_ket(3, 1)
    np.testing.assert_allclose(s @ np.kron(a, b), np.kron(b, a), atol=1e-14)


def test_partial_swap_fixed_cases(rng):
    rho = random_density(2, seed=rng)
    np.testing.assert_allclose(partial_swap_step(rho, rho, 0.3), rho, atol=1e-12)
    sigma = random_density(2, seed=rng)
    np.testing.assert_allclose(partial_swap_step(rho, sigma, 0.0), rho, atol=1e-14)
    with pytest.raises(DimensionError):
        partial_swap_step(rho, np.eye(3) / 3, 0.1)


@given(seeds)
def test_partial_swap_second_order(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(2, seed=rng), random_density(2, seed=rng)
    dt = 0.01
    out = partial_swap_step(rho, sigma, dt)
    assert trace_norm(out - exact_conjugation(rho, sigma, dt)) <= 4 * dt**2


@given(seeds, st.floats(-3, 3))
def test_partial_swap_closed_form_and_validity(seed, dt):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(3, seed=rng), random_density(3, rank=1, seed=rng)
    out = partial_swap_step(rho, sigma, dt)
    np.testing.assert_allclose(apply_superoperator(partial_swap_superoperator(sigma, dt), rho), out, atol=1e-12)
    assert abs(np.trace(out) - 1) < 1e-10
    assert np.linalg.eigvalsh(out)[0] > -1e-10


def test_dme_limits(rng):
    sigma = random_density(2, seed=rng)
    rho = random_density(2, seed=rng)
    np.testing.assert_allclose(dme_evolution(rho, sigma, 0.0, 5), rho, atol=1e-14)
    e8, e256 = dme_error(sigma, 1.0, 8), dme_error(sigma, 1.0, 256)
    assert e256 * 16 <= e8
    with pytest.raises(DomainError):
        dme_evolution(rho, sigma, 1.0, 0)


def test_dme_pure_sigma_at_pi_approaches_reflection():
    phi = random_ket(2, 3)
    rho = random_density(2, seed=4)
    r = np.eye(2) - 2 * projector(phi)
    errs = [trace_norm(dme_evolution(rho, projector(phi), np.pi, n) - r @ rho @ r) for n in (16, 64, 256)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.1


def test_dme_with_maximally_mixed_sigma_depolarizes():
    # exp(-i t I/D) is a global phase, but each partial swap also mixes in I/D
    D, t, n = 2, 1.0, 16
    rho = random_density(D, seed=5)
    c2 = np.cos(t / n) ** 2
    expected = c2**n * rho + (1 - c2**n) * np.eye(D) / D
    np.testing.assert_allclose(dme_evolution(rho, np.eye(D) / D, t, n), expected, atol=1e-12)
    np.testing.assert_allclose(exact_conjugation(rho, np.eye(D) / D, t), rho, atol=1e-14)


def test_dme_error_curve_scaling():
    sigma = random_density(2, seed=11)
    ns = [8, 16, 32, 64, 128, 256]
    curve = dme_error_curve(sigma, 1.0, ns)
    errs = [e for _, e in curve]
    assert abs(loglog_slope(ns, errs) + 1) <= 0.15
    for a, b in zip(errs, errs[1:]):
        assert b <= a * 1.1
    assert dme_error(sigma, 2.0, 128) / dme_error(sigma, 1.0, 128) <= 4.5
    with pytest.raises(DomainError):
        dme_error_curve(sigma, 1.0, [])


@pytest.mark.parametrize("r", [1, 2, 3])
def test_rus_success_law(r):
    n = 3000
    rng = np.random.default_rng(r)
    wins = sum(rus_swap_exponential(0.7, r, rng).success for _ in range(n))
    p = 1 - 2.0**-r
    assert abs(wins / n - p) <= 3 * np.sqrt(p * (1 - p) / n)


@given(seeds, st.floats(-np.pi, np.pi), st.integers(1, 5))
def test_rus_net_operator(seed, theta, rounds):
    res = rus_swap_exponential(theta, rounds, seed)
    assert len(res.outcomes) == res.rounds_used
    np.testing.assert_allclose(res.unitary.conj().T @ res.unitary, np.eye(4), atol=1e-10)
    if res.success:
        np.testing.assert_allclose(res.unitary, swap_exponential(theta), atol=1e-10)
        np.testing.assert_allclose(
            res.unitary, np.cos(theta) * np.eye(4) + 1j * np.sin(theta) * swap_operator(2), atol=1e-10
        )
    else:
        assert res.rounds_used == rounds
        np.testing.assert_allclose(res.unitary, swap_exponential(-(2**rounds - 1) * theta), atol=1e-10)


def test_rus_zero_angle_is_identity():
    for seed in range(10):
        res = rus_swap_exponential(0.0, 3, seed)
        np.testing.assert_allclose(res.unitary, np.eye(4), atol=1e-14)


def test_rus_controlled_swap_and_pure_state():
    state = np.kron(basis(2, 1), np.kron(random_ket(2, 0), random_ket(2, 1)))
    res = rus_swap_exponential(0.4, 6, 3, controlled_swap=True, state=state)
    g = controlled(swap_operator(2), "first")
    if res.success:
        expect = np.cos(0.4) * np.eye(8) + 1j * np.sin(0.4) * g
        np.testing.assert_allclose(res.unitary, expect, atol=1e-10)
    with pytest.raises(DomainError):
        rus_swap_exponential(0.4, 0)


def test_controlled_dme_examples():
    phi = random_ket(2, 2)
    sigma = projector(phi)
    L0 = controlled_dme(sigma, 0.0, 4)
    np.testing.assert_allclose(L0, np.eye(16), atol=1e-12)
    exact = exact_controlled_superoperator(sigma, np.pi)
    np.testing.assert_allclose(exact, unitary_superoperator(controlled(np.eye(2) - 2 * sigma, "first")), atol=1e-12)
    d64 = choi_distance(controlled_dme(sigma, np.pi, 64), exact, 4)
    d128 = choi_distance(controlled_dme(sigma, np.pi, 128), exact, 4)
    assert d64 < 0.5
    assert 1.6 < d64 / d128 < 2.4
    # control |0>: system untouched up to the same error
    rho = np.kron(projector(basis(2, 0)), random_density(2, seed=1))
    out = apply_superoperator(controlled_dme(sigma, np.pi, 64), rho)
    assert trace_norm(out - rho) <= d64 + 1e-12
    with pytest.raises(DomainError):
        controlled_dme(sigma, 1.0, 0)


def test_controlled_step_matches_explicit_unitary():
    sigma = random_density(2, seed=3)
    dt = 0.2
    sc = controlled(swap_operator(2), "first")
    e = np.cos(dt) * np.eye(8) - 1j * np.sin(dt) * sc
    x = random_density(4, seed=4)
    joint = e @ np.kron(x, sigma) @ e.conj().T
    ref = np.einsum("iaja->ij", joint.reshape(4, 2, 4, 2))
    np.testing.assert_allclose(apply_superoperator(controlled_swap_step_superoperator(sigma, dt), x), ref, atol=1e-12)


def test_noise_budget_accounting():
    b = NoiseBudget(eps_id=0.1, eps_ref=0.01, n_copies=64, T=3)
    assert b.n_reflections == 13
    assert b.eps_tot == pytest.approx(13 * 0.01 + 0.1)
    assert b.N_tot == 13 * 64


def test_noisy_run_ideal_error_matches_dense_circuit():
    rng = np.random.default_rng(3)
    p = generate_instance(4, 2, 3, rng)
    q = p.samples.basis_in
    psi = q @ random_ket(2, rng)
    rec, budget = noisy_emulation_run(p, psi, 3, 64, seed=17)
    s = p.samples
    ideal = oracles.circuit_output(s.inputs, s.outputs, p.anchor_index, psi, rec.k_draws)
    assert budget.eps_id == pytest.approx(trace_norm_distance(ideal, s.hidden_unitary @ psi), abs=1e-10)
    assert rec.trace_distance <= budget.eps_tot + 0.05
    assert budget.N_tot == 13 * 64


def test_noisy_run_converges_to_ideal():
    rng = np.random.default_rng(9)
    p = generate_instance(4, 2, 3, rng)
    psi = p.samples.basis_in @ random_ket(2, rng)
    rec, budget = noisy_emulation_run(p, psi, 2, 1024, seed=1)
    assert abs(rec.trace_distance - budget.eps_id) <= 0.05
    worst, wb = noisy_emulation_run(p, psi, 2, 1, seed=1)
    assert wb.eps_ref > 0.5
    assert worst.trace_distance <= wb.eps_tot + 0.05


def test_noisy_run_validates():
    p = generate_instance(2, 1, 1, 0)
    with pytest.raises(DomainError):
        noisy_emulation_run(p, p.anchor_in, 2, 0)
    with pytest.raises(DomainError):
        noisy_emulation_run(p, p.anchor_in, 0, 4)


def test_subsystem_superoperator_consistency():
    # controlled reflection applied through the table layout equals the dense matrix
    phi = random_ket(2, 0)
    L = unitary_superoperator(controlled(np.eye(2) - 2 * projector(phi), "first"))
    rho = random_density(8, seed=2)  # system(2), c(2), a(2)
    cr = controlled(np.eye(2) - 2 * projector(phi), "first")  # (control, system)
    swap_sc = np.kron(swap_operator(2), np.eye(2))  # system<->c
    full = swap_sc @ np.kron(cr, np.eye(2)) @ swap_sc
    got = apply_superoperator_subsystems(rho, L, [2, 2, 2], [1, 0])
    np.testing.assert_allclose(got, full @ rho @ full.conj().T, atol=1e-12)
