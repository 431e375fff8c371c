"""Variants of the emulator.

* mixed sample states, erased with random controlled translations ``exp(-i rho_k t)``;
* controlled versions of the hidden unitary, with the global phase pinned by an extra sample;
* an exact, deterministic algorithm for samples forming two conjugate bases;
* robustness to approximately consistent samples;
* two-outcome projective measurements onto the span of labelled samples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channels import SuperOpMatrix, iterate_kraus, reflection, superop_from_kraus
from .emulator import (
    EXACT,
    ControlledFamily,
    Mode,
    MonteCarlo,
    _accumulate,
    _apply_coupling,
    _decompose,
    channel_output,
    enumerate_draws,
)
from .errors import DomainError, PreconditionError, ResourceError
from .instances import (
    RANK_RTOL,
    EmulationProblem,
    SampleSet,
    SeedLike,
    _decode,
    _encode,
    as_generator,
    haar_unitary,
    matrix_algebra_dimension,
    random_ket,
)
from .numerics import (
    KET_MINUS,
    as_ket,
    basis,
    controlled,
    is_hermitian,
    orthonormal_span,
    partial_trace,
    projector,
    trace_norm_distance,
    uhlmann_fidelity,
    unitary_exp,
)

# ----------------------------------------------------------------------------
# mixed samples


def controlled_translation(rho, t: float) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) exp(-i t rho)`` with the control qubit first."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, 1e-10):
        raise DomainError("controlled_translation needs a Hermitian generator")
    return controlled(unitary_exp(rho, t), "first")


@dataclass(frozen=True, eq=False)
class MixedSampleSet:
    """Mixed input samples ``rho_k`` (anchor pure) and their images under the hidden unitary."""

    hidden_unitary: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    anchor_index: int = 0

    @classmethod
    def from_inputs(cls, unitary, inputs, anchor_index: int = 0) -> "MixedSampleSet":
        u = np.asarray(unitary, dtype=complex)
        ins = np.stack([np.asarray(r, dtype=complex) for r in inputs])
        outs = np.einsum("ij,kjl,ml->kim", u, ins, u.conj())
        obj = cls(u, ins, outs, anchor_index)
        if np.linalg.eigvalsh(ins[anchor_index])[-1] < 1 - 1e-8:
            raise PreconditionError("the anchor sample must be (numerically) pure")
        return obj

    @property
    def K(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim_total(self) -> int:
        return self.inputs.shape[1]

    @property
    def basis_in(self) -> np.ndarray:
        vecs = []
        for r in self.inputs:
            w, v = np.linalg.eigh(r)
            vecs += [v[:, j] * np.sqrt(max(w[j], 0)) for j in range(w.size)]
        return orthonormal_span(np.array(vecs), RANK_RTOL)

    @property
    def dim_subspace(self) -> int:
        return self.basis_in.shape[1]

    def anchor_ket(self, which: str = "in") -> np.ndarray:
        r = (self.inputs if which == "in" else self.outputs)[self.anchor_index]
        return np.linalg.eigh(r)[1][:, -1]

    def algebra_generates(self) -> bool:
        q = self.basis_in
        gens = [q.conj().T @ r @ q for r in self.inputs]
        return matrix_algebra_dimension(gens) == q.shape[1] ** 2

    def as_problem(self) -> EmulationProblem:
        """Pure-state view used for the verification helpers (anchor as the only sample)."""
        a_in = self.anchor_ket("in")
        samples = SampleSet.from_inputs(self.hidden_unitary, a_in[None], (self.hidden_unitary @ a_in)[None])
        return EmulationProblem(samples, 0, 0)


def t_grid(size: int) -> np.ndarray:
    """Midpoints ``(j + 1/2)/size`` of a uniform partition of ``[0, 1]``."""
    if size < 1:
        raise DomainError(f"t_grid_size must be >= 1, got {size}")
    return (np.arange(size) + 0.5) / size


def mixed_family(mixed: MixedSampleSet, ks, ts, probs=None) -> ControlledFamily:
    """Couplings ``T(k, t) H T(anchor, pi)`` for the listed ``(k, t)`` pairs."""
    v_in = np.stack([unitary_exp(mixed.inputs[k], t) for k, t in zip(ks, ts)])
    v_out = np.stack([unitary_exp(mixed.outputs[k], t) for k, t in zip(ks, ts)])
    n = len(ks)
    probs = np.full(n, 1.0 / n) if probs is None else np.asarray(probs, dtype=float)
    # the anchor is pure, so exp(-i pi rho_anchor) is the reflection about its ket
    return ControlledFamily(v_in, v_out, probs, mixed.anchor_ket("in"), mixed.anchor_ket("out"))


def mixed_grid_family(mixed: MixedSampleSet, t_grid_size: int = 8) -> ControlledFamily:
    ts = t_grid(t_grid_size)
    pairs = [(k, t) for k in range(mixed.K) for t in ts]
    return mixed_family(mixed, [p[0] for p in pairs], [p[1] for p in pairs])


def mixed_w_channel(mixed: MixedSampleSet, t_grid_size: int = 8) -> SuperOpMatrix:
    """Erasing channel of the grid-averaged translation couplings, restricted to the input subspace."""
    return superop_from_kraus(mixed_grid_family(mixed, t_grid_size).kraus(), mixed.basis_in)


def mixed_erase_probability(mixed: MixedSampleSet, rho, T: int, t_grid_size: int = 8) -> float:
    fam = mixed_grid_family(mixed, t_grid_size)
    out = iterate_kraus(fam.kraus(), rho, T)
    a = fam.anchor_in
    return float(np.clip((a.conj() @ out @ a).real, 0, 1))


def mixed_lambda_perp(mixed: MixedSampleSet, t_grid_size: int = 8) -> float:
    """Spectral radius of the erasing channel compressed to the complement of the anchor in H_in."""
    chan = mixed_w_channel(mixed, t_grid_size)
    qp = chan.projector_in - projector(mixed.anchor_ket("in"))
    comp = np.stack([chan.coordinates(qp @ f @ qp) for f in chan.basis], axis=1)
    return float(np.max(np.abs(np.linalg.eigvals(comp @ chan.matrix @ comp))))


def mixed_sample_emulation(
    mixed: MixedSampleSet,
    psi,
    T: int,
    t_grid_size: int = 8,
    mode: Mode = EXACT,
    *,
    chunk: int = 512,
) -> np.ndarray:
    """Channel output of the emulator driven by random controlled translations.

    EXACT mode enumerates ``(k, t)`` over ``K x t_grid_size`` grid points;
    Monte Carlo mode draws ``t`` uniformly from ``[0, 1]``.
    """
    if np.linalg.eigvalsh(mixed.inputs[mixed.anchor_index])[-1] < 1 - 1e-8:
        raise PreconditionError("the anchor sample must be (numerically) pure")
    D = mixed.dim_total
    if not isinstance(mode, MonteCarlo):
        fam = mixed_grid_family(mixed, t_grid_size)
        problem = mixed.as_problem()
        return channel_output(problem, psi, T, mode, family=fam)
    rng = as_generator(mode.seed)
    out = np.zeros((D, D), dtype=complex)
    parts = _decompose(psi)
    done = 0
    while done < mode.trials:
        n = min(chunk, mode.trials - done)
        ks = rng.integers(mixed.K, size=n * T)
        ts = rng.random(n * T)
        fam = mixed_family(mixed, ks, ts)
        draws = np.arange(n * T).reshape(n, T)
        w = np.full(n, 1.0 / mode.trials)
        for wgt, v in parts:
            _, o, _ = _accumulate(v, fam, draws, w, "total", "continue", "compact")
            out += wgt * o
        done += n
    return out


# ----------------------------------------------------------------------------
# controlled unitaries


def controlled_unitary_sampleset(samples: SampleSet, alpha: complex, beta: complex, phi_in) -> SampleSet:
    """Samples on ``qubit (x) system`` whose emulation realizes ``|0><0| (x) I + |1><1| (x) U``.

    Inputs are ``|0>|phi_k>``, ``|1>|phi_k>`` and ``(alpha|0> + beta|1>)|phi>``;
    the outputs are their images under the controlled unitary, so the
    control-off samples are left unchanged and the last sample fixes the
    relative phase between the two control branches.
    """
    if abs(alpha) < 1e-12 or abs(beta) < 1e-12:
        raise PreconditionError("alpha and beta must both be nonzero to fix the phase")
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-10:
        raise DomainError("|alpha|^2 + |beta|^2 must equal 1")
    phi_in = as_ket(phi_in)
    q = samples.basis_in
    if np.linalg.norm(phi_in - q @ (q.conj().T @ phi_in)) > 1e-8:
        raise PreconditionError("phi_in must lie in the input subspace")
    u = samples.hidden_unitary
    e0, e1 = basis(2, 0), basis(2, 1)
    ins = [np.kron(e0, p) for p in samples.inputs] + [np.kron(e1, p) for p in samples.inputs]
    outs = [np.kron(e0, p) for p in samples.inputs] + [np.kron(e1, p) for p in samples.outputs]
    ins.append(np.kron(alpha * e0 + beta * e1, phi_in))
    outs.append(alpha * np.kron(e0, phi_in) + beta * np.kron(e1, u @ phi_in))
    uc = controlled(u, "first")
    return SampleSet.from_inputs(uc, np.array(ins), np.array(outs))


# ----------------------------------------------------------------------------
# conjugate bases


def qft_matrix(d: int) -> np.ndarray:
    """``F`` with ``F sum_t exp(2 pi i t k / d)|t>/sqrt(d) = |k>``."""
    t = np.arange(d)
    return np.exp(-2j * np.pi * np.outer(t, t) / d) / np.sqrt(d)


@dataclass(frozen=True, eq=False)
class ConjugateBasisSet:
    """Orthonormal basis ``theta_k`` of H_in, its Fourier-conjugate basis ``alpha_j`` and their images."""

    hidden_unitary: np.ndarray
    theta_in: np.ndarray
    alpha_in: np.ndarray
    theta_out: np.ndarray
    alpha_out: np.ndarray

    @property
    def d(self) -> int:
        return self.theta_in.shape[0]

    @property
    def dim_total(self) -> int:
        return self.theta_in.shape[1]

    @staticmethod
    def conjugate_of(theta: np.ndarray) -> np.ndarray:
        d = theta.shape[0]
        k = np.arange(d)
        phases = np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)  # [j, k]
        return phases @ theta

    @classmethod
    def from_theta(cls, unitary, theta_in) -> "ConjugateBasisSet":
        u = np.asarray(unitary, dtype=complex)
        th = np.asarray(theta_in, dtype=complex)
        al = cls.conjugate_of(th)
        return cls(u, th, al, th @ u.T, al @ u.T)

    @classmethod
    def from_one_alpha(cls, unitary, theta_in, theta_out, alpha0_in, alpha0_out) -> "ConjugateBasisSet":
        """Generate every ``alpha_j`` from ``alpha_0`` with ``exp(-i P s)``, ``P = sum_k k |theta_k><theta_k|``.

        ``s = -2 pi j / d`` maps ``alpha_0`` to ``alpha_j``; the same holds on the output side.
        """
        th_in = np.asarray(theta_in, dtype=complex)
        th_out = np.asarray(theta_out, dtype=complex)
        d = th_in.shape[0]
        p_in = sum(k * projector(th_in[k]) for k in range(d))
        p_out = sum(k * projector(th_out[k]) for k in range(d))
        a_in = np.stack([unitary_exp(p_in, -2 * np.pi * j / d) @ alpha0_in for j in range(d)])
        a_out = np.stack([unitary_exp(p_out, -2 * np.pi * j / d) @ alpha0_out for j in range(d)])
        return cls(np.asarray(unitary, dtype=complex), th_in, a_in, th_out, a_out)


def random_conjugate_basis_set(D: int, d: int, seed: SeedLike = None) -> ConjugateBasisSet:
    rng = as_generator(seed)
    u = haar_unitary(D, rng)
    frame = haar_unitary(D, rng)[:, :d]
    return ConjugateBasisSet.from_theta(u, frame.T)


def phase_register_unitary(kets: np.ndarray, product_form: bool = True) -> np.ndarray:
    """``sum_t exp(2 pi i t P / d) (x) |t><t|`` with ``P = sum_k k |ket_k><ket_k|`` (system first).

    ``product_form`` builds it as the product over ``k`` of the commuting
    single-projector factors, each of which needs copies of one sample only.
    """
    d, D = kets.shape
    eye = np.eye(D, dtype=complex)
    total = np.eye(D * d, dtype=complex)
    if product_form:
        for k in range(d):
            pk = projector(kets[k])
            factor = np.zeros((D * d, D * d), dtype=complex)
            for t in range(d):
                block = eye + (np.exp(2j * np.pi * t * k / d) - 1) * pk
                factor += np.kron(block, projector(basis(d, t)))
            total = factor @ total
        return total
    gen = sum(k * projector(kets[k]) for k in range(d))
    out = np.zeros((D * d, D * d), dtype=complex)
    for t in range(d):
        out += np.kron(unitary_exp(gen, -2 * np.pi * t / d), projector(basis(d, t)))
    return out


def conjugate_basis_joint(cb: ConjugateBasisSet, psi) -> np.ndarray:
    """Final joint ``system (x) register`` state of the conjugate-basis algorithm."""
    psi = as_ket(psi)
    d, D = cb.d, cb.dim_total
    q = orthonormal_span(cb.theta_in)
    if np.linalg.norm(psi - q @ (q.conj().T @ psi)) > 1e-8:
        raise PreconditionError("input must lie in the span of the theta basis")
    gamma = np.ones(d, dtype=complex) / np.sqrt(d)
    f = np.kron(np.eye(D), qft_matrix(d))
    vp_in = phase_register_unitary(cb.theta_in)
    vq_in = phase_register_unitary(cb.alpha_in)
    joint = vq_in @ f @ vp_in @ np.kron(psi, gamma)
    # the system now sits in theta_0^in; swap in a fresh theta_0^out
    register = np.einsum("i,ia->a", cb.theta_in[0].conj(), joint.reshape(D, d))
    joint = np.kron(cb.theta_out[0], register)
    vp_out = phase_register_unitary(cb.theta_out)
    vq_out = phase_register_unitary(cb.alpha_out)
    return vp_out.conj().T @ f.conj().T @ vq_out.conj().T @ joint


def conjugate_basis_emulation(cb: ConjugateBasisSet, psi) -> np.ndarray:
    """Deterministic emulation: returns the system ket (register projected onto the uniform state)."""
    joint = conjugate_basis_joint(cb, psi).reshape(cb.dim_total, cb.d)
    gamma = np.ones(cb.d) / np.sqrt(cb.d)
    return joint @ gamma


# ----------------------------------------------------------------------------
# approximate samples


def perturb_kets(kets: np.ndarray, delta: float, seed: SeedLike = None) -> np.ndarray:
    """Rotate each ket toward an independent random orthogonal direction so that ``||v' - v|| = delta``.

    Directions depend only on ``seed``, so varying ``delta`` moves along fixed great circles.
    """
    if not 0 <= delta <= 2:
        raise DomainError(f"delta must lie in [0, 2], got {delta}")
    rng = as_generator(seed)
    angle = 2 * np.arcsin(delta / 2)
    out = []
    for v in kets:
        w = random_ket(v.size, rng)
        w = w - v * (v.conj() @ w)
        w = w / np.linalg.norm(w)
        out.append(np.cos(angle) * v + np.sin(angle) * w)
    return np.array(out)


def perturbed_problem(problem: EmulationProblem, delta: float, seed: SeedLike = None, target: str = "outputs") -> EmulationProblem:
    s = problem.samples
    if target == "outputs":
        new = SampleSet.from_inputs(s.hidden_unitary, s.inputs, perturb_kets(s.outputs, delta, seed))
    elif target == "inputs":
        new = SampleSet.from_inputs(s.hidden_unitary, perturb_kets(s.inputs, delta, seed), s.outputs)
    else:
        raise DomainError(f"target must be 'outputs' or 'inputs', got {target!r}")
    return EmulationProblem(new, problem.anchor_index, problem.rng_seed)


def perturbed_sample_run(
    problem: EmulationProblem,
    delta: float,
    psi,
    T: int,
    seed: SeedLike = 0,
    *,
    target: str = "outputs",
    mode: Mode = EXACT,
) -> float:
    """Trace distance between the emulator output with perturbed samples and ``U|psi>``."""
    if not 0 <= delta <= 0.2:
        raise DomainError(f"delta must lie in [0, 0.2], got {delta}")
    pp = perturbed_problem(problem, delta, seed, target)
    out = channel_output(pp, psi, T, mode)
    u = problem.samples.hidden_unitary
    return trace_norm_distance(out, projector(u @ as_ket(psi)))


def line_fit_through(x, y, x0: float, y0: float):
    """Least-squares slope of a line through ``(x0, y0)`` and its coefficient of determination."""
    x = np.asarray(x, float) - x0
    y = np.asarray(y, float)
    yy = y - y0
    slope = float(x @ yy / (x @ x))
    resid = yy - slope * x
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return slope, r2


# ----------------------------------------------------------------------------
# projective measurements

LABEL_IN = "in"
LABEL_OUT = "out"


@dataclass(frozen=True, eq=False)
class MeasurementProblem:
    """Sample kets spanning ``H_Pi`` and the number ``T`` of random controlled reflections."""

    samples: np.ndarray
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise DomainError(f"T must be >= 1, got {self.T}")

    @classmethod
    def from_kets(cls, kets, T: int) -> "MeasurementProblem":
        kets = np.atleast_2d(np.asarray(kets, dtype=complex))
        if np.any(np.abs(np.linalg.norm(kets, axis=1) - 1) > 1e-10):
            raise DomainError("sample kets must be normalized")
        return cls(kets, T)

    @property
    def K(self) -> int:
        return self.samples.shape[0]

    @property
    def dim_total(self) -> int:
        return self.samples.shape[1]

    @property
    def basis(self) -> np.ndarray:
        return orthonormal_span(self.samples)

    @property
    def projector(self) -> np.ndarray:
        q = self.basis
        return q @ q.conj().T

    @property
    def sigma_avg(self) -> np.ndarray:
        return sum(projector(p) for p in self.samples) / self.K

    @property
    def lambda_min(self) -> float:
        """Smallest eigenvalue of ``sigma_avg`` on ``H_Pi``."""
        q = self.basis
        return float(np.linalg.eigvalsh(q.conj().T @ self.sigma_avg @ q)[0])

    def with_T(self, T: int) -> "MeasurementProblem":
        return MeasurementProblem(self.samples, T)

    def to_json(self) -> str:
        """Same encoding as a sample set: complex entries as ``[re, im]`` pairs."""
        return json.dumps({"inputs": _encode(self.samples), "T": self.T})

    @classmethod
    def from_json(cls, text: str) -> "MeasurementProblem":
        doc = json.loads(text)
        return cls.from_kets(_decode(doc["inputs"]), int(doc["T"]))


def random_measurement_problem(D: int, K: int, T: int, seed: SeedLike = None, rank: Optional[int] = None) -> MeasurementProblem:
    """``K`` Haar kets inside a random subspace of dimension ``rank`` (random in ``[1, min(K, D-1)]``)."""
    rng = as_generator(seed)
    if rank is None:
        rank = int(rng.integers(1, min(K, D - 1) + 1))
    frame = haar_unitary(D, rng)[:, :rank]
    kets = np.stack([frame @ random_ket(rank, rng) for _ in range(K)])
    return MeasurementProblem.from_kets(kets, T)


def m_map(mp: MeasurementProblem, x) -> np.ndarray:
    """``X -> (1/K) sum_k P_k^perp X P_k^perp`` with ``P_k^perp = I - |phi_k><phi_k|``."""
    x = np.asarray(x, dtype=complex)
    eye = np.eye(mp.dim_total)
    return sum((eye - projector(p)) @ x @ (eye - projector(p)) for p in mp.samples) / mp.K


def out_branch_probability(mp: MeasurementProblem, rho) -> float:
    """Probability that every ancilla is found in ``|->``: ``Tr M^T(rho)``."""
    x = np.asarray(rho, dtype=complex)
    if x.ndim == 1:
        x = projector(x)
    for _ in range(mp.T):
        x = m_map(mp, x)
    return float(np.real(np.trace(x)))


def _reflection_ops(mp: MeasurementProblem) -> np.ndarray:
    return np.stack([controlled(reflection(p), "last") for p in mp.samples])


def _measurement_branches(mp: MeasurementProblem, psi, draws):
    """Post-measurement system states for both labels, per draw vector.

    Returns ``(p_out, rho_in, rho_out)`` where the densities are unnormalized
    (weights equal to the branch probabilities) and shaped ``(N, D, D)``.
    """
    n, T = draws.shape
    D = mp.dim_total
    ops = _reflection_ops(mp)
    st = psi
    for _ in range(T):
        st = np.kron(st, KET_MINUS)
    state = np.broadcast_to(st, (n, st.size)).reshape((n, D) + (2,) * T).copy()
    for i in range(T):
        state = _apply_coupling(state, ops[draws[:, i]], i, T)
    # project on |->^T
    minus_all = KET_MINUS
    for _ in range(T - 1):
        minus_all = np.kron(minus_all, KET_MINUS)
    flat = state.reshape(n, D, -1)
    amp = flat @ minus_all.conj()  # (n, D)
    out_part = np.einsum("ni,a->nia", amp, minus_all)
    in_part = flat - out_part
    results = []
    for part in (in_part, out_part):
        s = part.reshape((n, D) + (2,) * T)
        for i in range(T - 1, -1, -1):
            s = _apply_coupling(s, ops[draws[:, i]], i, T)
        f = s.reshape(n, D, -1)
        results.append(np.einsum("nia,nja->nij", f, f.conj()))
    p_out = np.sum(np.abs(amp) ** 2, axis=1)
    return p_out, results[0], results[1]


@dataclass
class MeasurementRecord:
    label: str
    post_state: np.ndarray
    k_draws: tuple
    p_out_given_draws: float


def projective_measurement_run(mp: MeasurementProblem, psi, seed: SeedLike = None) -> MeasurementRecord:
    """One sampled run: random controlled reflections, test for ``|->^T``, undo the reflections.

    Label ``"out"`` means every ancilla returned to ``|->`` (state judged
    outside ``H_Pi``), ``"in"`` otherwise.  The post-measurement system
    state is returned as a density operator because the ancillas may stay
    entangled with the system after the reflections are undone.
    """
    psi = as_ket(psi)
    rng = as_generator(seed)
    draws = rng.integers(mp.K, size=(1, mp.T))
    p_out, r_in, r_out = _measurement_branches(mp, psi, draws)
    p = float(p_out[0])
    if rng.random() < p:
        return MeasurementRecord(LABEL_OUT, r_out[0] / p, tuple(int(k) for k in draws[0]), p)
    return MeasurementRecord(LABEL_IN, r_in[0] / (1 - p), tuple(int(k) for k in draws[0]), p)


def sample_out_frequency(mp: MeasurementProblem, psi, n_runs: int, seed: SeedLike = None, chunk: int = 1024) -> float:
    """Fraction of ``n_runs`` sampled runs that end with the ``"out"`` label."""
    psi = as_ket(psi)
    rng = as_generator(seed)
    hits = 0
    done = 0
    while done < n_runs:
        n = min(chunk, n_runs - done)
        draws = rng.integers(mp.K, size=(n, mp.T))
        p_out = _out_probabilities(mp, psi, draws)
        hits += int(np.sum(rng.random(n) < p_out))
        done += n
    return hits / n_runs


def _out_probabilities(mp: MeasurementProblem, psi, draws) -> np.ndarray:
    """Per-draw probability of ``|->^T``: ``||P_{k_T}^perp ... P_{k_1}^perp psi||^2``."""
    x = np.broadcast_to(psi, (draws.shape[0], psi.size)).copy()
    for i in range(draws.shape[1]):
        phi = mp.samples[draws[:, i]]
        x = x - phi * np.sum(phi.conj() * x, axis=1, keepdims=True)
    return np.sum(np.abs(x) ** 2, axis=1)


def measurement_channel(mp: MeasurementProblem, rho, budget: int = 4096):
    """Exact branch-averaged output ``E(rho)`` and the average label probabilities."""
    if mp.K**mp.T > budget:
        raise ResourceError(f"enumeration needs {mp.K}^{mp.T} draw vectors (budget {budget})")
    draws, weights = enumerate_draws(mp.K, mp.T)
    D = mp.dim_total
    out = np.zeros((D, D), dtype=complex)
    p_out = 0.0
    step = max(1, (1 << 20) // (D * 2**mp.T))
    for wgt, v in _decompose(rho):
        for lo in range(0, draws.shape[0], step):
            dr, w = draws[lo : lo + step], weights[lo : lo + step]
            po, r_in, r_out = _measurement_branches(mp, v, dr)
            out += wgt * np.einsum("n,nij->ij", w, r_in + r_out)
            p_out += wgt * float(w @ po)
    return out, {LABEL_IN: 1.0 - p_out, LABEL_OUT: p_out}


@dataclass
class ProjectiveReport:
    """Checks of the branch-averaged measurement emulation on one input."""

    fidelity: float
    label_probabilities: dict
    label_bound_holds: bool
    branch: Optional[str]
    error_probability: Optional[float]
    error_bound: float
    branch_bound_holds: Optional[bool]


def projective_fidelity_check(mp: MeasurementProblem, rho, mode: str = EXACT, atol: float = 1e-9) -> ProjectiveReport:
    """Compare ``F(rho, E(rho))`` with the label probabilities and with ``1 - (1 - lambda_min)^T``.

    The branch bound applies only when ``rho`` is supported in ``H_Pi`` or in
    its complement; otherwise ``branch`` is None and it is skipped.
    """
    if mode != EXACT:
        raise DomainError("projective_fidelity_check supports exact enumeration only")
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = projector(rho)
    out, probs = measurement_channel(mp, rho)
    fid = uhlmann_fidelity(rho, out)
    label_ok = fid >= max(probs.values()) - atol
    pi = mp.projector
    weight_in = float(np.real(np.trace(pi @ rho)))
    bound = (1 - mp.lambda_min) ** mp.T
    branch, err, branch_ok = None, None, None
    if weight_in > 1 - 1e-10:
        branch, err = LABEL_IN, probs[LABEL_OUT]
    elif weight_in < 1e-10:
        branch, err = LABEL_OUT, probs[LABEL_IN]
    if branch is not None:
        branch_ok = bool(err <= bound + atol and fid >= 1 - bound - atol)
    return ProjectiveReport(fid, probs, bool(label_ok), branch, err, bound, branch_ok)


def two_outcome_sequence(subspace_sample_lists: Sequence, psi, seed: SeedLike = None, T: int = 8, atol: float = 1e-8):
    """Multi-outcome measurement as a sequence of two-outcome emulations.

    Families are tried in order; the first one whose run reports ``"in"``
    gives the label (its index).  If none fires the label is ``"residual"``.
    Returns ``(label, post_state)`` with the post state as a density operator.
    """
    fams = [MeasurementProblem.from_kets(k, T) for k in subspace_sample_lists]
    bases = [f.basis for f in fams]
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            if np.max(np.abs(bases[i].conj().T @ bases[j])) > atol:
                raise PreconditionError(f"families {i} and {j} span non-orthogonal subspaces")
    rng = as_generator(seed)
    state = as_ket(psi)
    rho = projector(state)
    for idx, mp in enumerate(fams):
        rec = projective_measurement_run(mp, state, rng)
        rho = rec.post_state
        if rec.label == LABEL_IN:
            return idx, rho
        # continue from a pure state drawn from the post-measurement mixture
        w, v = np.linalg.eigh(rho)
        w = np.clip(w, 0, None)
        state = v[:, rng.choice(w.size, p=w / w.sum())]
    return "residual", rho
