"""Simulation of the coherent-erasure emulator circuit.

Circuit summary (system first, then ancilla qubits ``a_1 .. a_T``):

(i)   each ancilla starts in ``|->`` and interacts with the system through a
      coupling unitary ``W(l_i)`` drawn at random;
(ii)  a controlled reflection about the input anchor plus a Hadamard on a
      fresh ``|->`` qubit measures whether the system sits in the anchor
      (``b=0``) or not (``b=1``);
(iii) the system is swapped for a copy of the output anchor;
(iv)  the inverse output couplings ``W_out(l_T)^dag .. W_out(l_1)^dag`` are applied.

For the standard coupling ``W(k) = R_a(k) H_a R_a(anchor)`` one has
``W |y>|-> = P y |0> + R_k P^perp y |1>``, so after step (i) the ancillas
occupy only the domain-wall states ``|t> = |1..1 0..0>`` (``t`` ones).  The
COMPACT engine exploits this: during step (iv) the joint state is a pure
branch (coefficients on ``|anchor_out>`` for the lower walls plus a free
system vector on the top wall) together with a mixed operator carried by
the top wall only.  It is exact, and agrees with the FULL ``D * 2^T``
statevector engine, which handles arbitrary couplings.

On ``b=1`` two policies are offered.  ``"continue"`` executes steps
(iii)-(iv) unconditionally, which realizes the averaged channel whose
fidelity obeys the erase-probability bound.  ``"halt"`` stops after the
measurement and returns the projected system state; with it an input
orthogonal to the input subspace leaves the circuit untouched.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .channels import coupling_kraus, iterate_kraus, reflection
from .errors import DomainError, PostselectionError, PreconditionError, ResourceError
from .instances import EmulationProblem, SeedLike, as_generator
from .numerics import HADAMARD, KET_MINUS, as_ket, check_unitary, controlled, projector

EXACT = "exact"
EXACT_BUDGET = 4096
POLICIES = ("continue", "halt")
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class MonteCarlo:
    """Monte Carlo estimation mode: ``trials`` independent draw vectors."""

    trials: int
    seed: SeedLike = 0

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")


Mode = Union[str, MonteCarlo]


def controlled_reflection(phi, control: str = "first") -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) (I - 2|phi><phi|)`` with the control qubit first or last."""
    return controlled(reflection(as_ket(phi)), control)


def coupling_unitary(v, anchor) -> np.ndarray:
    """``C_V H R(anchor)`` on ``system (x) qubit`` (qubit last).

    With ``v`` a reflection this is the standard erasing coupling.
    """
    h = np.kron(np.eye(len(anchor)), HADAMARD)
    return controlled(v, "last") @ h @ controlled(reflection(anchor), "last")


@dataclass(frozen=True, eq=False)
class ControlledFamily:
    """Couplings of the form ``W(l) = C_{V_l} H R(anchor)`` with weights ``probs``.

    ``v_in[l]`` acts in step (i); ``v_out[l]`` is its counterpart built from
    output samples and enters step (iv) as ``v_out[l]^dag``.
    """

    v_in: np.ndarray
    v_out: np.ndarray
    probs: np.ndarray
    anchor_in: np.ndarray
    anchor_out: np.ndarray

    @property
    def size(self) -> int:
        return self.probs.size

    def unitaries(self, which: str = "in") -> np.ndarray:
        v, a = (self.v_in, self.anchor_in) if which == "in" else (self.v_out, self.anchor_out)
        return np.stack([coupling_unitary(x, a) for x in v])

    def to_coupling(self) -> "CouplingFamily":
        return CouplingFamily(self.unitaries("in"), self.unitaries("out"), self.probs, self.anchor_in, self.anchor_out)

    def kraus(self) -> list:
        return coupling_kraus(self.unitaries("in"), self.probs)


@dataclass(frozen=True, eq=False)
class CouplingFamily:
    """Arbitrary couplings ``w_in[l]`` on ``system (x) qubit`` with matching ``w_out[l]``."""

    w_in: np.ndarray
    w_out: np.ndarray
    probs: np.ndarray
    anchor_in: np.ndarray
    anchor_out: np.ndarray

    @classmethod
    def from_unitaries(cls, w_in: Sequence, probs, problem: EmulationProblem) -> "CouplingFamily":
        """Outputs are obtained by conjugating with the hidden unitary (verification only)."""
        w_in = np.stack([check_unitary(w, 1e-9) for w in w_in])
        u2 = np.kron(problem.samples.hidden_unitary, np.eye(2))
        w_out = np.einsum("ij,ljk,mk->lim", u2, w_in, u2.conj())
        probs = np.asarray(probs, dtype=float)
        return cls(w_in, w_out, probs / probs.sum(), problem.anchor_in, problem.anchor_out)

    @property
    def size(self) -> int:
        return self.probs.size

    def to_coupling(self) -> "CouplingFamily":
        return self

    def kraus(self) -> list:
        return coupling_kraus(self.w_in, self.probs)


Family = Union[ControlledFamily, CouplingFamily]


def standard_family(problem: EmulationProblem) -> ControlledFamily:
    """Uniform random reflections about the sample states."""
    s = problem.samples
    v_in = np.stack([reflection(p) for p in s.inputs])
    v_out = np.stack([reflection(p) for p in s.outputs])
    return ControlledFamily(v_in, v_out, np.full(s.K, 1.0 / s.K), problem.anchor_in, problem.anchor_out)


@dataclass
class RunRecord:
    """Outcome of one sampled execution of the circuit."""

    k_draws: tuple
    outcome_b: int
    output_state: np.ndarray
    p_erase_exact: float
    seed: Optional[int]
    p0_given_draws: float = float("nan")
    trace_distance: Optional[float] = None

    @property
    def erased(self) -> bool:
        return self.outcome_b == 0

    def to_json(self) -> str:
        rho = self.output_state
        return json.dumps(
            {
                "k_draws": [int(k) for k in self.k_draws],
                "outcome_b": int(self.outcome_b),
                "p_erase_exact": float(self.p_erase_exact),
                "p0_given_draws": float(self.p0_given_draws),
                "seed": self.seed,
                "trace_distance": self.trace_distance,
                "output_state": np.stack([rho.real, rho.imag], axis=-1).tolist(),
            }
        )


@dataclass(frozen=True)
class ChannelEstimate:
    """Averaged output with its Monte Carlo uncertainty (zero for exact enumeration).

    ``stderr_trace_norm`` is ``sqrt(D)`` times the Frobenius-norm standard error,
    an upper estimate of the trace-norm standard error.
    """

    state: np.ndarray
    p_erase: float
    stderr_frobenius: float
    stderr_trace_norm: float
    trials: int


# ----------------------------------------------------------------------------
# draw enumeration / sampling


def enumerate_draws(L: int, T: int, probs=None, budget: int = EXACT_BUDGET):
    """All ``L^T`` draw vectors with their product weights."""
    if L**T > budget:
        raise ResourceError(f"exact enumeration needs {L}^{T} = {L**T} draw vectors (budget {budget})")
    draws = np.array(list(itertools.product(range(L), repeat=T)), dtype=np.int64).reshape(-1, T)
    p = np.full(L, 1.0 / L) if probs is None else np.asarray(probs, dtype=float)
    weights = np.prod(p[draws], axis=1) if T else np.ones(1)
    return draws, weights


def sample_draws(L: int, T: int, n: int, probs, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(L, size=(n, T), p=probs)


def _draws_for_mode(fam: Family, T: int, mode: Mode):
    if isinstance(mode, MonteCarlo):
        rng = as_generator(mode.seed)
        draws = sample_draws(fam.size, T, mode.trials, fam.probs, rng)
        return draws, np.full(mode.trials, 1.0 / mode.trials)
    if mode != EXACT:
        raise DomainError(f"mode must be 'exact' or MonteCarlo(...), got {mode!r}")
    return enumerate_draws(fam.size, T, fam.probs)


# ----------------------------------------------------------------------------
# COMPACT engine


def _compact_chunk(psi, fam: ControlledFamily, draws, want: str, policy: str):
    """Per-draw ``(p0, output)`` for one ket and a chunk of draw vectors.

    ``want`` selects the unnormalized output of the ``b=0`` branch
    (``"success"``), of the ``b=1`` branch (``"failure"``) or their sum
    (``"total"``).
    """
    n, T = draws.shape
    D = psi.size
    phi_in, phi_out = fam.anchor_in, fam.anchor_out
    # step (i): coordinates of the domain-wall expansion
    coef = np.empty((n, T + 1), dtype=complex)
    x = np.broadcast_to(psi, (n, D)).copy()
    for t in range(T):
        c = x @ phi_in.conj()
        coef[:, t] = c
        x = x - c[:, None] * phi_in
        x = np.einsum("nij,nj->ni", fam.v_in[draws[:, t]], x)
    c_top = x @ phi_in.conj()
    coef[:, T] = c_top
    resid = x - c_top[:, None] * phi_in
    p1 = np.sum(np.abs(resid) ** 2, axis=1)
    p0 = np.sum(np.abs(coef) ** 2, axis=1)

    sources = want in ("success", "total")
    P = projector(phi_out)
    if want == "failure" and policy == "halt":
        return p0, np.einsum("ni,nj->nij", resid, resid.conj())
    sigma = np.zeros((n, D, D), dtype=complex)
    if policy == "continue" and want in ("failure", "total"):
        sigma += p1[:, None, None] * P
    y = coef[:, T, None] * phi_out if sources else np.zeros((n, D), dtype=complex)
    # step (iv): ancillas a_T .. a_1
    for i in range(T, 0, -1):
        vd = fam.v_out[draws[:, i - 1]].conj().transpose(0, 2, 1)
        if sources:
            ry = np.einsum("nij,nj->ni", vd, y)
            a = ry @ phi_out.conj()
            y = coef[:, i - 1, None] * phi_out + ry - a[:, None] * phi_out
        s = vd @ sigma @ vd.conj().transpose(0, 2, 1)
        sp = np.einsum("i,nij->nj", phi_out.conj(), s)  # phi^dag S
        ps = np.einsum("nij,j->ni", s, phi_out)  # S phi
        pspp = sp @ phi_out  # phi^dag S phi
        sigma = (
            s
            - np.einsum("i,nj->nij", phi_out, sp)
            - np.einsum("ni,j->nij", ps, phi_out.conj())
            + 2 * pspp[:, None, None] * P
        )
        if sources:
            sigma += (np.abs(a) ** 2)[:, None, None] * P
    out = sigma
    if sources:
        out = out + np.einsum("ni,nj->nij", y, y.conj())
    if want == "total" and policy == "halt":
        out = out + np.einsum("ni,nj->nij", resid, resid.conj())
    return p0, out


# ----------------------------------------------------------------------------
# FULL engine


def _apply_coupling(state: np.ndarray, ops: np.ndarray, i: int, T: int) -> np.ndarray:
    """Apply per-batch ``ops`` (N, 2D, 2D) to the system and ancilla ``i`` (0-based).

    ``state`` has shape ``(N, D, 2, ..., 2)``.
    """
    n, D = state.shape[:2]
    s = np.moveaxis(state, 2 + i, 2)
    shp = s.shape
    s = ops @ s.reshape(n, 2 * D, -1)
    return np.moveaxis(s.reshape(shp), 2, 2 + i)


def full_step_i(psi, w_in: np.ndarray) -> np.ndarray:
    """Joint states after step (i) for a batch of coupling sequences.

    ``w_in`` has shape ``(N, T, 2D, 2D)``; the result has shape ``(N, D * 2^T)``
    with the system as the most significant factor and ``a_1`` next.
    """
    w_in = np.asarray(w_in, dtype=complex)
    n, T = w_in.shape[:2]
    D = psi.size
    st = psi
    for _ in range(T):
        st = np.kron(st, KET_MINUS)
    state = np.broadcast_to(st, (n, st.size)).reshape((n, D) + (2,) * T).copy()
    for i in range(T):
        state = _apply_coupling(state, w_in[:, i], i, T)
    return state.reshape(n, -1)


def _full_chunk(psi, fam: CouplingFamily, draws, want: str, policy: str):
    n, T = draws.shape
    D = psi.size
    theta = full_step_i(psi, fam.w_in[draws]).reshape(n, D, -1)
    phi_in, phi_out = fam.anchor_in, fam.anchor_out
    alpha = np.einsum("i,nia->na", phi_in.conj(), theta)
    p0 = np.sum(np.abs(alpha) ** 2, axis=1)
    m = theta - np.einsum("i,na->nia", phi_in, alpha)  # P^perp Theta

    branches = []  # (ancilla vectors (n, r, 2^T))
    if want in ("success", "total"):
        branches.append(alpha[:, None, :])
    failure_direct = None
    if want in ("failure", "total"):
        if policy == "continue":
            branches.append(m)
        else:
            failure_direct = m @ m.conj().transpose(0, 2, 1)
    out = np.zeros((n, D, D), dtype=complex)
    for anc in branches:
        r = anc.shape[1]
        joint = np.einsum("i,nra->nria", phi_out, anc).reshape((n * r, D) + (2,) * T)
        for i in range(T - 1, -1, -1):
            ops = np.repeat(fam.w_out[draws[:, i]].conj().transpose(0, 2, 1), r, axis=0)
            joint = _apply_coupling(joint, ops, i, T)
        y = joint.reshape(n, r, D, -1)
        out += np.einsum("nria,nrja->nij", y, y.conj())
    if failure_direct is not None:
        out += failure_direct
    return p0, out


# ----------------------------------------------------------------------------
# drivers


def _check_policy(policy: str):
    if policy not in POLICIES:
        raise DomainError(f"on_failure must be one of {POLICIES}, got {policy!r}")


def _select_engine(fam: Family, representation: Optional[str]):
    if representation is None:
        representation = "compact" if isinstance(fam, ControlledFamily) else "full"
    if representation == "compact":
        if not isinstance(fam, ControlledFamily):
            raise PreconditionError("the compact representation needs a ControlledFamily")
        return _compact_chunk, fam
    if representation == "full":
        return _full_chunk, fam.to_coupling()
    raise DomainError(f"representation must be 'compact' or 'full', got {representation!r}")


def _accumulate(psi, fam, draws, weights, want, policy, representation, second_moment=False):
    """Weighted sums over draws of ``p0`` and the output, processed in chunks."""
    engine, fam = _select_engine(fam, representation)
    D = psi.size
    T = draws.shape[1]
    per = D * D * (1 if engine is _compact_chunk else 2**T * (D + 1))
    chunk = max(1, _CHUNK_ELEMENTS // max(per, 1))
    p_sum = 0.0
    out_sum = np.zeros((D, D), dtype=complex)
    sq_sum = np.zeros((D, D)) if second_moment else None
    for lo in range(0, draws.shape[0], chunk):
        dr = draws[lo : lo + chunk]
        w = weights[lo : lo + chunk]
        p0, out = engine(psi, fam, dr, want, policy)
        p_sum += float(w @ p0)
        out_sum += np.einsum("n,nij->ij", w, out)
        if second_moment:
            sq_sum += np.einsum("n,nij->ij", w, np.abs(out) ** 2)
    return p_sum, out_sum, sq_sum


def _decompose(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        return [(1.0, as_ket(rho))]
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return [(float(w[j]), v[:, j]) for j in range(w.size) if w[j] > 1e-14]


def _estimate(problem, rho, T, mode, family, want, policy, representation) -> ChannelEstimate:
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T}")
    _check_policy(policy)
    fam = standard_family(problem) if family is None else family
    draws, weights = _draws_for_mode(fam, T, mode)
    mc = isinstance(mode, MonteCarlo)
    parts = _decompose(rho)
    D = problem.samples.dim_total
    p_tot, out_tot = 0.0, np.zeros((D, D), dtype=complex)
    var = 0.0
    for wgt, psi in parts:
        p, out, sq = _accumulate(psi, fam, draws, weights, want, policy, representation, mc)
        p_tot += wgt * p
        out_tot += wgt * out
        if mc:
            # per-entry variance of the sample mean, combined across mixture components
            var += wgt * np.sum(np.clip(sq - np.abs(out) ** 2, 0, None)) / draws.shape[0]
    se = float(np.sqrt(var))
    return ChannelEstimate(out_tot, float(p_tot), se, float(np.sqrt(D) * se), draws.shape[0])


def channel_output(
    problem: EmulationProblem,
    rho,
    T: int,
    mode: Mode = EXACT,
    *,
    family: Optional[Family] = None,
    on_failure: str = "continue",
    representation: Optional[str] = None,
) -> np.ndarray:
    """Output of the circuit averaged over draws and both measurement outcomes."""
    return _estimate(problem, rho, T, mode, family, "total", on_failure, representation).state


def channel_estimate(
    problem: EmulationProblem,
    rho,
    T: int,
    mode: Mode = EXACT,
    *,
    family: Optional[Family] = None,
    on_failure: str = "continue",
    representation: Optional[str] = None,
) -> ChannelEstimate:
    """Like :func:`channel_output` but also reports ``p_erase`` and Monte Carlo errors."""
    return _estimate(problem, rho, T, mode, family, "total", on_failure, representation)


def postselected_output(
    problem: EmulationProblem,
    psi,
    T: int,
    mode: Mode = EXACT,
    *,
    family: Optional[Family] = None,
    representation: Optional[str] = None,
    min_probability: float = 1e-12,
):
    """Output conditioned on ``b=0`` and the probability of that outcome."""
    est = _estimate(problem, psi, T, mode, family, "success", "continue", representation)
    if est.p_erase < min_probability:
        raise PostselectionError(f"erasure succeeds with probability {est.p_erase:.3e}")
    return est.state / est.p_erase, est.p_erase


def exact_erase_probability(problem: EmulationProblem, rho, T: int, family: Optional[Family] = None) -> float:
    """``<anchor| W^T(rho) |anchor>`` for the channel induced by ``family``."""
    fam = standard_family(problem) if family is None else family
    out = iterate_kraus(fam.kraus(), rho, T)
    a = fam.anchor_in
    return float(np.clip((a.conj() @ out @ a).real, 0.0, 1.0))


def generalized_run(
    problem: EmulationProblem,
    psi,
    T: int,
    family: Optional[Family] = None,
    seed: SeedLike = None,
    *,
    on_failure: str = "continue",
    representation: Optional[str] = None,
) -> RunRecord:
    """One sampled execution with couplings drawn from ``family``."""
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    _check_policy(on_failure)
    fam = standard_family(problem) if family is None else family
    if representation is None:
        representation = "compact" if isinstance(fam, ControlledFamily) else "full"
    psi = as_ket(psi)
    if psi.size != problem.samples.dim_total:
        raise DomainError("input ket dimension does not match the problem")
    rng = as_generator(seed)
    draws = sample_draws(fam.size, T, 1, fam.probs, rng)
    one = np.ones(1)
    p0, out0, _ = _accumulate(psi, fam, draws, one, "success", on_failure, representation)
    b = 0 if rng.random() < p0 else 1
    if b == 0:
        out = out0 / p0
    else:
        _, out1, _ = _accumulate(psi, fam, draws, one, "failure", on_failure, representation)
        out = out1 / max(1.0 - p0, 1e-300)
    seed_val = int(seed) if isinstance(seed, (int, np.integer)) else None
    return RunRecord(
        tuple(int(k) for k in draws[0]),
        b,
        out,
        exact_erase_probability(problem, psi, T, fam),
        seed_val,
        float(p0),
    )


def run_circuit_sampled(problem: EmulationProblem, psi, T: int, seed: SeedLike = None, *, on_failure: str = "continue") -> RunRecord:
    """One sampled execution of the standard circuit (uniform random reflections)."""
    return generalized_run(problem, psi, T, None, seed, on_failure=on_failure)


# ----------------------------------------------------------------------------
# step (i) structure


def coordinates(problem: EmulationProblem, psi, k_draws) -> tuple:
    """Coordinates ``c_t = <anchor|psi(t)>`` for ``t < T`` and the residual ``psi(T)``.

    ``psi(t+1) = R_in(k_{t+1}) P^perp psi(t)`` with ``psi(0) = psi``.
    """
    phi = problem.anchor_in
    x = np.asarray(psi, dtype=complex)
    cs = []
    for k in k_draws:
        c = phi.conj() @ x
        cs.append(c)
        x = x - c * phi
        r = problem.samples.inputs[k]
        x = x - 2 * r * (r.conj() @ x)
    return np.array(cs, dtype=complex), x


def step_i_state(problem: EmulationProblem, psi, k_draws, representation: str = "compact") -> np.ndarray:
    """Joint system/ancilla state after step (i) of the standard circuit.

    COMPACT: array of shape ``(T+1, D)`` whose row ``t`` is the system vector
    attached to the domain-wall state ``|t>``.  FULL: the ``D * 2^T`` statevector.
    """
    psi = as_ket(psi)
    k_draws = np.asarray(k_draws, dtype=np.int64)
    if representation == "compact":
        c, resid = coordinates(problem, psi, k_draws)
        rows = [ci * problem.anchor_in for ci in c] + [resid]
        return np.stack(rows)
    if representation == "full":
        fam = standard_family(problem).to_coupling()
        return full_step_i(psi, fam.w_in[k_draws][None])[0]
    raise DomainError(f"unknown representation {representation!r}")


def domain_wall_index(t: int, T: int) -> int:
    """Computational index of ``|1^t 0^(T-t)>`` with ``a_1`` most significant."""
    return 2**T - 2 ** (T - t)


def compact_to_full(compact: np.ndarray) -> np.ndarray:
    """Embed a COMPACT ``(T+1, D)`` state into the FULL ``D * 2^T`` statevector."""
    T = compact.shape[0] - 1
    D = compact.shape[1]
    full = np.zeros((D, 2**T), dtype=complex)
    for t in range(T + 1):
        full[:, domain_wall_index(t, T)] = compact[t]
    return full.reshape(-1)


def off_wall_weight(full_state: np.ndarray, D: int) -> float:
    """Norm squared of a FULL state outside the domain-wall subspace."""
    m = np.asarray(full_state).reshape(D, -1)
    T = int(round(np.log2(m.shape[1])))
    mask = np.ones(m.shape[1], dtype=bool)
    mask[[domain_wall_index(t, T) for t in range(T + 1)]] = False
    return float(np.sum(np.abs(m[:, mask]) ** 2))
