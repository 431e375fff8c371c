"""Density-matrix exponentiation from copies and the noisy emulator built on it.

A partial swap ``exp(-i dt S)`` between the system and one copy of ``sigma``,
followed by discarding the copy, rotates the system by ``exp(-i dt sigma)``
up to ``O(dt^2)``.  Chaining ``n`` such steps with ``dt = t/n`` simulates
``exp(-i t sigma)``; a controlled swap gives the controlled unitary.
Swap exponentials themselves are realized with a repeat-until-success loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channels import reflection
from .errors import DimensionError, DomainError
from .instances import EmulationProblem, SeedLike, as_generator, random_ket
from .numerics import (
    HADAMARD,
    KET_MINUS,
    apply_superoperator,
    apply_superoperator_subsystems,
    basis,
    choi_distance,
    controlled,
    partial_trace,
    projector,
    superoperator,
    trace_norm,
    trace_norm_distance,
    unitary_exp,
    unitary_superoperator,
)


def swap_operator(dim: int) -> np.ndarray:
    """SWAP on ``C^dim (x) C^dim``."""
    s = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            s[j * dim + i, i * dim + j] = 1.0
    return s


def partial_swap_step(rho, sigma, dt: float) -> np.ndarray:
    """``Tr_2[exp(-i dt S) (rho x sigma) exp(i dt S)]`` with ``exp(-i dt S) = cos(dt) I - i sin(dt) S``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape or rho.ndim != 2:
        raise DimensionError(f"rho {rho.shape} and sigma {sigma.shape} must be equal square shapes")
    D = rho.shape[0]
    u = np.cos(dt) * np.eye(D * D) - 1j * np.sin(dt) * swap_operator(D)
    joint = u @ np.kron(rho, sigma) @ u.conj().T
    return partial_trace(joint, [D, D], [0])


def partial_swap_superoperator(sigma, dt: float) -> np.ndarray:
    """Superoperator of one partial-swap step on trace-one inputs.

    ``rho -> cos^2 rho + sin^2 Tr(rho) sigma + i cos sin [rho, sigma]``.
    """
    sigma = np.asarray(sigma, dtype=complex)
    c, s = np.cos(dt), np.sin(dt)
    D = sigma.shape[0]
    eye = np.eye(D)
    vec_sigma = sigma.reshape(-1)
    tr_row = eye.reshape(-1)  # vec(I) . vec(X) = Tr X for row-major vec
    return (
        c * c * np.eye(D * D)
        + s * s * np.outer(vec_sigma, tr_row)
        + 1j * c * s * (np.kron(eye, sigma.T) - np.kron(sigma, eye))
    )


def exact_conjugation(rho, sigma, t: float) -> np.ndarray:
    u = unitary_exp(sigma, t)
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T


def dme_evolution(rho, sigma, t: float, n: int) -> np.ndarray:
    """``n`` partial-swap steps with ``dt = t/n``, each consuming one copy of ``sigma``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    L = np.linalg.matrix_power(partial_swap_superoperator(sigma, t / n), n)
    return apply_superoperator(L, rho)


def default_probes(dim: int, n_random: int = 4, seed: int = 7) -> list:
    """Fixed probe kets: the computational basis, uniform superpositions and a few seeded random kets."""
    probes = [basis(dim, i) for i in range(dim)]
    probes.append(np.ones(dim, dtype=complex) / np.sqrt(dim))
    probes.append(np.exp(2j * np.pi * np.arange(dim) / dim) / np.sqrt(dim))
    rng = np.random.default_rng(seed)
    probes += [random_ket(dim, rng) for _ in range(n_random)]
    return probes


def dme_error(sigma, t: float, n: int, probes: Optional[Sequence] = None) -> float:
    """Max over probe kets of ``||dme(rho) - exp(-i t sigma) rho exp(i t sigma)||_1``."""
    sigma = np.asarray(sigma, dtype=complex)
    probes = default_probes(sigma.shape[0]) if probes is None else probes
    L = np.linalg.matrix_power(partial_swap_superoperator(sigma, t / n), n)
    u = unitary_exp(sigma, t)
    errs = []
    for p in probes:
        rho = projector(p)
        errs.append(trace_norm(apply_superoperator(L, rho) - u @ rho @ u.conj().T))
    return float(max(errs))


def dme_error_curve(sigma, t: float, n_list: Sequence[int], probes: Optional[Sequence] = None) -> list:
    """List of ``(n, error)`` pairs for :func:`dme_error`."""
    if len(n_list) == 0:
        raise DomainError("n_list must be nonempty")
    return [(int(n), dme_error(sigma, t, int(n), probes)) for n in n_list]


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log(ys)`` against ``log(xs)``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


# ----------------------------------------------------------------------------
# repeat-until-success swap exponentials


@dataclass
class RUSResult:
    """Net operator applied by the repeat-until-success loop."""

    unitary: np.ndarray
    rounds_used: int
    success: bool
    outcomes: tuple


def rus_swap_exponential(
    theta: float,
    max_rounds: int,
    seed: SeedLike = None,
    *,
    dim: int = 2,
    controlled_swap: bool = False,
    state=None,
) -> RUSResult:
    """Realize ``exp(i theta G)`` (``G`` = SWAP or controlled SWAP) by repeat-until-success.

    Round ``j`` prepares the ancilla in ``cos(a)|0> + i sin(a)|1>`` with
    ``a = 2^(j-1) theta``, applies ``|0><0| (x) I + |1><1| (x) G`` and
    measures the ancilla in the ``|+>, |->`` basis.  Outcome ``+`` applies
    ``exp(i a G)`` and completes the target; outcome ``-`` applies
    ``exp(-i a G)``, which the next, doubled, round compensates.  Outcome
    probabilities follow the Born rule on ``state`` (maximally mixed by
    default); they equal 1/2 for every state.
    """
    if max_rounds < 1:
        raise DomainError(f"max_rounds must be >= 1, got {max_rounds}")
    rng = as_generator(seed)
    G = swap_operator(dim)
    if controlled_swap:
        G = controlled(G, "first")
    n = G.shape[0]
    eye = np.eye(n)
    rho = eye / n if state is None else np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = projector(rho)
    net = eye.astype(complex)
    outcomes = []
    for j in range(1, max_rounds + 1):
        a = 2 ** (j - 1) * theta
        anc = np.array([np.cos(a), 1j * np.sin(a)])
        # conditional operators <+-| C_G |anc> acting on the target systems
        k_plus = (anc[0] * eye + anc[1] * G) / np.sqrt(2)
        k_minus = (anc[0] * eye - anc[1] * G) / np.sqrt(2)
        p_plus = float(np.real(np.trace(k_plus @ rho @ k_plus.conj().T)))
        if rng.random() < p_plus:
            outcomes.append("+")
            net = np.sqrt(2) * k_plus @ net
            return RUSResult(net, j, True, tuple(outcomes))
        outcomes.append("-")
        step = np.sqrt(2) * k_minus
        net = step @ net
        rho = step @ rho @ step.conj().T
    return RUSResult(net, max_rounds, False, tuple(outcomes))


def swap_exponential(theta: float, dim: int = 2) -> np.ndarray:
    """``exp(i theta S) = cos(theta) I + i sin(theta) S``."""
    return np.cos(theta) * np.eye(dim * dim) + 1j * np.sin(theta) * swap_operator(dim)


# ----------------------------------------------------------------------------
# controlled DME


def controlled_swap_step_superoperator(sigma, dt: float) -> np.ndarray:
    """Superoperator on ``control (x) system`` of one ``exp(-i dt S_c)`` step with a fresh copy."""
    sigma = np.asarray(sigma, dtype=complex)
    D = sigma.shape[0]
    sc = controlled(swap_operator(D), "first")
    e = np.cos(dt) * np.eye(2 * D * D) - 1j * np.sin(dt) * sc

    def step(x):
        joint = e @ np.kron(x, sigma) @ e.conj().T
        return partial_trace(joint, [2 * D, D], [0])

    return superoperator(step, 2 * D)


def controlled_dme(sigma, t: float, n: int) -> np.ndarray:
    """Superoperator on ``control (x) system`` approximating ``|0><0| (x) I + |1><1| (x) exp(-i t sigma)``.

    ``n`` controlled partial swaps with ``dt = t/n`` followed by
    ``exp(i t Z / 2)`` on the control, which removes the relative phase
    ``exp(-i t)`` picked up by the control-off branch.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sigma = np.asarray(sigma, dtype=complex)
    D = sigma.shape[0]
    L = np.linalg.matrix_power(controlled_swap_step_superoperator(sigma, t / n), n)
    fix = np.kron(np.diag([np.exp(1j * t / 2), np.exp(-1j * t / 2)]), np.eye(D))
    return unitary_superoperator(fix) @ L


def exact_controlled_superoperator(sigma, t: float) -> np.ndarray:
    return unitary_superoperator(controlled(unitary_exp(sigma, t), "first"))


# ----------------------------------------------------------------------------
# noisy emulation


@dataclass(frozen=True)
class NoiseBudget:
    """Error accounting for a circuit whose ``4T+1`` controlled reflections are simulated."""

    eps_id: float
    eps_ref: float
    n_copies: int
    T: int

    @property
    def n_reflections(self) -> int:
        return 4 * self.T + 1

    @property
    def eps_tot(self) -> float:
        return self.n_reflections * self.eps_ref + self.eps_id

    @property
    def N_tot(self) -> int:
        return self.n_reflections * self.n_copies


def _emulation_density(problem, psi, draws, cref_in, cref_out):
    """Unconditioned output of the circuit with the given controlled-reflection superoperators.

    Layout: system, measurement qubit ``c``, ancillas ``a_1..a_T``.
    ``cref_in[k]``/``cref_out[k]`` act on ``(control, system)``; index ``-1`` is the anchor.
    Returns the output density and the probability of ``b=0``.
    """
    s = problem.samples
    D = s.dim_total
    T = len(draws)
    dims = [D, 2] + [2] * T
    hsup = unitary_superoperator(HADAMARD)
    minus = projector(KET_MINUS)
    rho = projector(psi)
    for _ in range(T + 1):
        rho = np.kron(rho, minus)
    for i, k in enumerate(draws):
        a = 2 + i
        rho = apply_superoperator_subsystems(rho, cref_in["anchor"], dims, [a, 0])
        rho = apply_superoperator_subsystems(rho, hsup, dims, [a])
        rho = apply_superoperator_subsystems(rho, cref_in[k], dims, [a, 0])
    rho = apply_superoperator_subsystems(rho, cref_in["anchor"], dims, [1, 0])
    rho = apply_superoperator_subsystems(rho, hsup, dims, [1])
    # measure c (dephase) and record the b=0 probability
    red_c = partial_trace(rho, dims, [1])
    p0 = float(red_c[0, 0].real)
    anc = partial_trace(rho, dims, list(range(2, 2 + T)))  # discard system and c
    rho = np.kron(projector(problem.anchor_out), anc)
    dims_iv = [D] + [2] * T
    for i in range(T - 1, -1, -1):
        a = 1 + i
        rho = apply_superoperator_subsystems(rho, cref_out[draws[i]], dims_iv, [a, 0])
        rho = apply_superoperator_subsystems(rho, hsup, dims_iv, [a])
        rho = apply_superoperator_subsystems(rho, cref_out["anchor"], dims_iv, [a, 0])
    return partial_trace(rho, dims_iv, [0]), p0


def _reflection_tables(problem: EmulationProblem, make):
    s = problem.samples
    tin = {k: make(s.inputs[k]) for k in range(s.K)}
    tout = {k: make(s.outputs[k]) for k in range(s.K)}
    tin["anchor"] = tin[problem.anchor_index]
    tout["anchor"] = tout[problem.anchor_index]
    return tin, tout


def noisy_emulation_run(problem: EmulationProblem, psi, T: int, n_copies_per_reflection: int, seed: SeedLike = None):
    """Run the circuit with every controlled reflection simulated from ``n`` sample copies.

    Each controlled reflection is replaced by :func:`controlled_dme` of the
    relevant sample projector with ``t = pi``.  The returned record holds
    the output averaged over the step-(ii) outcome (the outcome itself is
    sampled for the record) and its trace distance to ``U|psi>``.  The
    budget uses ``eps_ref`` = the largest Choi distance between a simulated
    and an exact controlled reflection, and ``eps_id`` = the error of the
    ideal circuit for the same draws.
    """
    from .emulator import RunRecord, exact_erase_probability

    if n_copies_per_reflection < 1:
        raise DomainError(f"n_copies must be >= 1, got {n_copies_per_reflection}")
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    rng = as_generator(seed)
    s = problem.samples
    D = s.dim_total
    psi = np.asarray(psi, dtype=complex)
    draws = [int(k) for k in rng.integers(s.K, size=T)]
    noisy_in, noisy_out = _reflection_tables(problem, lambda p: controlled_dme(projector(p), np.pi, n_copies_per_reflection))
    ideal_in, ideal_out = _reflection_tables(problem, lambda p: unitary_superoperator(controlled(reflection(p), "first")))
    eps_ref = 0.0
    for tab_n, tab_i in ((noisy_in, ideal_in), (noisy_out, ideal_out)):
        for k in range(s.K):
            eps_ref = max(eps_ref, choi_distance(tab_n[k], tab_i[k], 2 * D))
    out, p0 = _emulation_density(problem, psi, draws, noisy_in, noisy_out)
    ideal, _ = _emulation_density(problem, psi, draws, ideal_in, ideal_out)
    target = projector(s.hidden_unitary @ psi)
    realized = trace_norm_distance(out, target)
    eps_id = trace_norm_distance(ideal, target)
    b = 0 if rng.random() < p0 else 1
    record = RunRecord(
        tuple(draws),
        b,
        out,
        exact_erase_probability(problem, psi, T),
        int(seed) if isinstance(seed, (int, np.integer)) else None,
        p0,
        realized,
    )
    return record, NoiseBudget(eps_id, eps_ref, n_copies_per_reflection, T)
