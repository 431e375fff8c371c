import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uqemu.channels import erase_probability
from uqemu.emulator import EXACT, MonteCarlo, channel_output
from uqemu.errors import DomainError, PreconditionError
from uqemu.extensions import (
    LABEL_IN,
    LABEL_OUT,
    ConjugateBasisSet,
    MeasurementProblem,
    MixedSampleSet,
    conjugate_basis_emulation,
    conjugate_basis_joint,
    controlled_translation,
    controlled_unitary_sampleset,
    line_fit_through,
    measurement_channel,
    mixed_erase_probability,
    mixed_lambda_perp,
    mixed_sample_emulation,
    out_branch_probability,
    perturb_kets,
    perturbed_sample_run,
    phase_register_unitary,
    projective_fidelity_check,
    projective_measurement_run,
    qft_matrix,
    random_conjugate_basis_set,
    random_measurement_problem,
    sample_out_frequency,
    t_grid,
    two_outcome_sequence,
)
from uqemu.instances import EmulationProblem, generate_instance, haar_unitary, random_density, random_ket
from uqemu.numerics import KET_MINUS, KET_PLUS, basis, controlled, projector, trace_norm_distance, uhlmann_fidelity

seeds = st.integers(0, 2**32 - 1)


def qubit_mixed_set(u=None):
    u = haar_unitary(2, 4) if u is None else u
    rho2 = 0.7 * projector(KET_PLUS) + 0.3 * projector(KET_MINUS)
    return MixedSampleSet.from_inputs(u, [projector(basis(2, 0)), rho2])


# ---------------------------------------------------------------- translations


def test_controlled_translation_examples():
    rho = random_density(3, seed=1)
    np.testing.assert_allclose(controlled_translation(rho, 0.0), np.eye(6), atol=1e-14)
    phi = random_ket(3, 2)
    refl = np.eye(3) - 2 * projector(phi)
    np.testing.assert_allclose(controlled_translation(projector(phi), np.pi), controlled(refl, "first"), atol=1e-12)
    u = controlled_translation(rho, 0.73)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-10)


def test_mixed_set_requires_pure_anchor():
    with pytest.raises(PreconditionError):
        MixedSampleSet.from_inputs(np.eye(2), [np.eye(2) / 2, projector(basis(2, 0))])


def test_t_grid():
    np.testing.assert_allclose(t_grid(4), [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(DomainError):
        t_grid(0)


def test_mixed_emulation_anchor_is_exact():
    mixed = qubit_mixed_set()
    out = mixed_sample_emulation(mixed, basis(2, 0), 2, t_grid_size=4)
    assert uhlmann_fidelity(out, mixed.hidden_unitary @ basis(2, 0)) == pytest.approx(1, abs=1e-10)


def test_mixed_emulation_with_one_mixed_sample():
    mixed = qubit_mixed_set()
    assert mixed.algebra_generates()
    lp = mixed_lambda_perp(mixed)
    assert lp < 1 - 1e-6
    psi = basis(2, 1)
    Ts = (1, 10, 100, 1000, 3000)
    probs = [mixed_erase_probability(mixed, psi, T) for T in Ts]
    assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))
    assert probs[-1] > 1 - 1e-6
    for T, p in zip(Ts, probs):
        assert 1 - p <= 2 * lp**T + 1e-12
    out = mixed_sample_emulation(mixed, psi, 3, t_grid_size=8)
    assert uhlmann_fidelity(out, mixed.hidden_unitary @ psi) >= mixed_erase_probability(mixed, psi, 3) - 1e-9


def test_mixed_emulation_all_pure_keeps_guarantee():
    rng = np.random.default_rng(3)
    p = generate_instance(3, 2, 3, rng)
    s = p.samples
    order = [p.anchor_index] + [k for k in range(3) if k != p.anchor_index]
    mixed = MixedSampleSet.from_inputs(s.hidden_unitary, [projector(s.inputs[k]) for k in order])
    psi = s.basis_in @ random_ket(2, rng)
    out = mixed_sample_emulation(mixed, psi, 2, t_grid_size=4)
    pe = mixed_erase_probability(mixed, psi, 2, t_grid_size=4)
    assert uhlmann_fidelity(out, s.hidden_unitary @ psi) >= pe - 1e-9


def test_mixed_monte_carlo_agrees_with_grid():
    mixed = qubit_mixed_set()
    psi = random_ket(2, 8)
    grid = mixed_sample_emulation(mixed, psi, 2, t_grid_size=32)
    mc = mixed_sample_emulation(mixed, psi, 2, mode=MonteCarlo(6000, 2))
    assert trace_norm_distance(grid, mc) < 0.05


# ------------------------------------------------------------ controlled unitary


def controlled_problem(seed, alpha=0.6):
    rng = np.random.default_rng(seed)
    base = generate_instance(2, 1, 1, rng)
    s = base.samples
    phi = s.inputs[0]
    beta = np.sqrt(1 - alpha**2)
    aug = controlled_unitary_sampleset(s, alpha, beta, phi)
    return EmulationProblem(aug, aug.K - 1), s


def test_controlled_unitary_samples_are_images():
    prob, s = controlled_problem(0)
    aug = prob.samples
    np.testing.assert_allclose(aug.outputs, aug.inputs @ aug.hidden_unitary.T, atol=1e-10)
    np.testing.assert_allclose(aug.hidden_unitary, controlled(s.hidden_unitary, "first"))
    assert aug.dim_subspace == 2


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_controlled_unitary_branches(seed):
    prob, s = controlled_problem(seed)
    u = s.hidden_unitary
    psi = s.inputs[0]
    T = 7
    on = np.kron(basis(2, 1), psi)
    out = channel_output(prob, on, T)
    assert uhlmann_fidelity(out, np.kron(basis(2, 1), u @ psi)) >= erase_probability(prob, on, T) - 1e-9
    off = np.kron(basis(2, 0), psi)
    out = channel_output(prob, off, T)
    assert uhlmann_fidelity(out, off) >= erase_probability(prob, off, T) - 1e-9


def test_controlled_unitary_fixes_relative_phase():
    prob, s = controlled_problem(5, alpha=np.sqrt(0.5))
    u = s.hidden_unitary
    psi = s.inputs[0]
    inp = np.kron(KET_PLUS, psi)
    T = 7
    out = channel_output(prob, inp, T)
    right = (np.kron(basis(2, 0), psi) + np.kron(basis(2, 1), u @ psi)) / np.sqrt(2)
    wrong = (np.kron(basis(2, 0), psi) - np.kron(basis(2, 1), u @ psi)) / np.sqrt(2)
    f_right, f_wrong = uhlmann_fidelity(out, right), uhlmann_fidelity(out, wrong)
    assert f_right >= erase_probability(prob, inp, T) - 1e-9
    assert f_right > f_wrong + 0.5


def test_controlled_unitary_rejects_unfixable_phase():
    s = generate_instance(2, 1, 1, 0).samples
    with pytest.raises(PreconditionError):
        controlled_unitary_sampleset(s, 1.0, 0.0, s.inputs[0])
    with pytest.raises(PreconditionError):
        controlled_unitary_sampleset(s, 0.0, 1.0, s.inputs[0])
    with pytest.raises(DomainError):
        controlled_unitary_sampleset(s, 0.5, 0.5, s.inputs[0])


# --------------------------------------------------------------- conjugate bases


def test_qft_convention():
    d = 4
    f = qft_matrix(d)
    np.testing.assert_allclose(f.conj().T @ f, np.eye(d), atol=1e-14)
    for k in range(d):
        fourier = np.exp(2j * np.pi * np.arange(d) * k / d) / np.sqrt(d)
        np.testing.assert_allclose(f @ fourier, basis(d, k), atol=1e-14)


@given(seeds, st.sampled_from([(4, 2), (4, 3), (8, 3), (8, 4), (3, 3)]))
def test_conjugate_basis_set_invariants(seed, dims):
    cb = random_conjugate_basis_set(*dims, seed)
    d = cb.d
    for fam in (cb.theta_in, cb.alpha_in, cb.theta_out, cb.alpha_out):
        np.testing.assert_allclose(fam.conj() @ fam.T, np.eye(d), atol=1e-10)
    np.testing.assert_allclose(np.abs(cb.theta_in.conj() @ cb.alpha_in.T), np.full((d, d), 1 / np.sqrt(d)), atol=1e-10)
    other = ConjugateBasisSet.from_one_alpha(cb.hidden_unitary, cb.theta_in, cb.theta_out, cb.alpha_in[0], cb.alpha_out[0])
    np.testing.assert_allclose(other.alpha_in, cb.alpha_in, atol=1e-10)
    np.testing.assert_allclose(other.alpha_out, cb.alpha_out, atol=1e-10)
    np.testing.assert_allclose(
        phase_register_unitary(cb.theta_in, True), phase_register_unitary(cb.theta_in, False), atol=1e-10
    )


def test_conjugate_basis_examples():
    cb = random_conjugate_basis_set(8, 3, 1)
    np.testing.assert_allclose(conjugate_basis_emulation(cb, cb.theta_in[0]), cb.theta_out[0], atol=1e-12)
    out = conjugate_basis_emulation(cb, cb.alpha_in[0])
    assert abs(np.vdot(cb.alpha_out[0], out)) == pytest.approx(1, abs=1e-9)


@given(seeds, st.sampled_from([(4, 2), (8, 3), (8, 4)]))
def test_conjugate_basis_is_exact_and_deterministic(seed, dims):
    rng = np.random.default_rng(seed)
    cb = random_conjugate_basis_set(*dims, rng)
    psi = cb.theta_in.T @ random_ket(cb.d, rng)
    out = conjugate_basis_emulation(cb, psi)
    assert abs(np.vdot(cb.hidden_unitary @ psi, out)) == pytest.approx(1, abs=1e-9)
    np.testing.assert_array_equal(out, conjugate_basis_emulation(cb, psi))
    gamma = np.ones(cb.d) / np.sqrt(cb.d)
    np.testing.assert_allclose(conjugate_basis_joint(cb, psi), np.kron(out, gamma), atol=1e-9)


def test_conjugate_basis_rejects_outside_input():
    cb = random_conjugate_basis_set(4, 2, 0)
    _, v = np.linalg.eigh(np.eye(4) - cb.theta_in.T @ cb.theta_in.conj())
    with pytest.raises(PreconditionError):
        conjugate_basis_emulation(cb, v[:, -1])


# ------------------------------------------------------------ perturbed samples


@given(seeds, st.floats(0, 0.2))
def test_perturb_kets_distance(seed, delta):
    kets = np.stack([random_ket(4, i) for i in range(3)])
    out = perturb_kets(kets, delta, seed)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(out - kets, axis=1), delta, atol=1e-12)


def test_perturbed_run_reduces_to_standard():
    rng = np.random.default_rng(2)
    p = generate_instance(4, 2, 3, rng)
    psi = p.samples.basis_in @ random_ket(2, rng)
    ideal = trace_norm_distance(channel_output(p, psi, 4), p.samples.hidden_unitary @ psi)
    assert perturbed_sample_run(p, 0.0, psi, 4, 5) == pytest.approx(ideal, abs=1e-9)
    with pytest.raises(DomainError):
        perturbed_sample_run(p, 0.3, psi, 4, 5)


@pytest.mark.parametrize("target", ["outputs", "inputs"])
def test_perturbed_error_grows_at_most_linearly(target):
    rng = np.random.default_rng(4)
    p = generate_instance(4, 2, 3, rng)
    psi = p.samples.basis_in @ random_ket(2, rng)
    T = 5
    err0 = perturbed_sample_run(p, 0.0, psi, T, 1, target=target)
    deltas = [0.01, 0.02, 0.04]
    errs = [perturbed_sample_run(p, dl, psi, T, 1, target=target) for dl in deltas]
    slope, _ = line_fit_through(deltas, errs, 0.0, err0)
    assert slope <= 8 * T
    for dl, e in zip(deltas, errs):
        assert abs(e - err0) <= 8 * T * dl


def test_line_fit_through_exact_line():
    slope, r2 = line_fit_through([1, 2, 3], [3, 5, 7], 0, 1)
    assert slope == pytest.approx(2)
    assert r2 == pytest.approx(1)


# ---------------------------------------------------------- projective measurement


def test_measurement_trivial_cases():
    mp = MeasurementProblem.from_kets([basis(2, 0)], 3)
    for seed in range(5):
        rec = projective_measurement_run(mp, basis(2, 1), seed)
        assert rec.label == LABEL_OUT
        np.testing.assert_allclose(rec.post_state, projector(basis(2, 1)), atol=1e-12)
        rec = projective_measurement_run(mp, basis(2, 0), seed)
        assert rec.label == LABEL_IN
    assert mp.lambda_min == pytest.approx(1)
    assert out_branch_probability(mp, basis(2, 0)) == pytest.approx(0, abs=1e-14)


def test_measurement_two_state_oracle():
    mp = MeasurementProblem.from_kets([basis(2, 0), KET_PLUS], 6)
    lam = (1 - 1 / np.sqrt(2)) / 2
    assert mp.lambda_min == pytest.approx(lam)
    # iterate the 2x2 map by hand
    rho = projector(KET_PLUS)
    p0, pp = np.eye(2) - projector(basis(2, 0)), np.eye(2) - projector(KET_PLUS)
    x = rho
    for _ in range(6):
        x = (p0 @ x @ p0 + pp @ x @ pp) / 2
    exact = np.trace(x).real
    assert out_branch_probability(mp, rho) == pytest.approx(exact, abs=1e-14)
    assert exact <= (1 - lam) ** 6
    _, probs = measurement_channel(mp, rho)
    assert probs[LABEL_OUT] == pytest.approx(exact, abs=1e-12)


def test_sampled_out_frequency_matches_trace_formula():
    mp = random_measurement_problem(4, 3, 4, 1, rank=2)
    psi = random_ket(4, 2)
    p = out_branch_probability(mp, psi)
    n = 20000
    f = sample_out_frequency(mp, psi, n, 3)
    assert abs(f - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_fidelity_check_examples():
    mp = MeasurementProblem.from_kets([basis(3, 0), (basis(3, 0) + basis(3, 1)) / np.sqrt(2)], 5)
    rep = projective_fidelity_check(mp, basis(3, 2))
    assert rep.fidelity == pytest.approx(1, abs=1e-12)
    assert rep.branch == LABEL_OUT
    mixed = mp.projector / 2
    rep = projective_fidelity_check(mp, mixed)
    assert rep.branch == LABEL_IN
    assert rep.fidelity >= 1 - (1 - mp.lambda_min) ** mp.T - 1e-9
    assert rep.branch_bound_holds and rep.label_bound_holds


@given(seeds)
def test_fidelity_exceeds_top_label_probability(seed):
    rng = np.random.default_rng(seed)
    mp = random_measurement_problem(3, 2, 3, rng)
    rho = random_density(3, seed=rng)
    rep = projective_fidelity_check(mp, rho)
    assert rep.fidelity >= max(rep.label_probabilities.values()) - 1e-9
    with pytest.raises(DomainError):
        projective_fidelity_check(mp, rho, mode=MonteCarlo(10))


def test_measurement_problem_json():
    mp = random_measurement_problem(4, 3, 2, 0)
    back = MeasurementProblem.from_json(mp.to_json())
    np.testing.assert_array_equal(back.samples, mp.samples)
    assert back.T == 2


def test_two_outcome_sequence_examples():
    label, post = two_outcome_sequence([[basis(2, 0)], [basis(2, 1)]], basis(2, 0), 0, T=4)
    assert label == 0
    np.testing.assert_allclose(post, projector(basis(2, 0)), atol=1e-12)
    label, post = two_outcome_sequence([[basis(3, 0)], [basis(3, 1)]], basis(3, 2), 0, T=4)
    assert label == "residual"
    np.testing.assert_allclose(post, projector(basis(3, 2)), atol=1e-12)
    with pytest.raises(PreconditionError):
        two_outcome_sequence([[basis(2, 0)], [KET_PLUS]], basis(2, 0))


def test_two_outcome_sequence_born_rule():
    fam_a = [basis(4, 0), basis(4, 1)]
    fam_b = [basis(4, 2), basis(4, 3)]
    psi = np.ones(4) / 2
    rng = np.random.default_rng(6)
    n = 2000
    labels = [two_outcome_sequence([fam_a, fam_b], psi, rng, T=12)[0] for _ in range(n)]
    for lab in (0, 1):
        f = labels.count(lab) / n
        assert abs(f - 0.5) <= 3 * np.sqrt(0.25 / n)
