"""Problem instances: a hidden unitary and sample input/output pairs.

Sample indices are 0-based everywhere in the package; ``anchor_index=0``
designates the first sample as the anchor state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionError, DomainError, GenerationError, PreconditionError
from .numerics import ATOL, KET_PLUS, basis, normalize, orthonormal_span

SeedLike = Union[int, np.random.Generator, None]

RANK_RTOL = 1e-8
MAX_RETRIES = 32


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitary(dim: int, seed: SeedLike = None) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix.

    The phases of the diagonal of ``R`` are absorbed into ``Q`` so that the
    result is exactly Haar distributed, not merely unitary.
    """
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    rng = as_generator(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


def random_ket(dim: int, seed: SeedLike = None) -> np.ndarray:
    rng = as_generator(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rank: Optional[int] = None, seed: SeedLike = None) -> np.ndarray:
    """Random density operator of the given rank (full rank by default)."""
    rng = as_generator(seed)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Hidden unitary with ``K`` input/output sample kets.

    Attributes
    ----------
    hidden_unitary : ndarray, shape (D, D)
        Only verification code may look at this.
    inputs, outputs : ndarray, shape (K, D)
        Row ``k`` holds ``|phi_k^in>`` and ``|phi_k^out>``.
    basis_in : ndarray, shape (D, d)
        Orthonormal columns spanning the input subspace.
    """

    hidden_unitary: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    basis_in: np.ndarray = field(repr=False)

    @classmethod
    def from_inputs(cls, unitary, inputs, outputs=None) -> "SampleSet":
        u = np.asarray(unitary, dtype=complex)
        ins = np.atleast_2d(np.asarray(inputs, dtype=complex))
        if ins.shape[1] != u.shape[0]:
            raise DimensionError(f"inputs of length {ins.shape[1]} for a {u.shape[0]}-dim unitary")
        norms = np.linalg.norm(ins, axis=1)
        if np.any(np.abs(norms - 1) > ATOL):
            raise DomainError("sample inputs must be normalized")
        outs = ins @ u.T if outputs is None else np.atleast_2d(np.asarray(outputs, dtype=complex))
        if outs.shape != ins.shape:
            raise DimensionError("inputs and outputs must have the same shape")
        return cls(u, ins, outs, orthonormal_span(ins, RANK_RTOL))

    @property
    def K(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim_total(self) -> int:
        return self.inputs.shape[1]

    @property
    def dim_subspace(self) -> int:
        return self.basis_in.shape[1]

    @property
    def projector_in(self) -> np.ndarray:
        return self.basis_in @ self.basis_in.conj().T

    @property
    def basis_out(self) -> np.ndarray:
        return self.hidden_unitary @ self.basis_in

    def with_outputs(self, outputs) -> "SampleSet":
        return SampleSet(self.hidden_unitary, self.inputs, np.asarray(outputs, dtype=complex), self.basis_in)

    def to_dict(self) -> dict:
        return {
            "hidden_unitary": _encode(self.hidden_unitary),
            "inputs": _encode(self.inputs),
            "outputs": _encode(self.outputs),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SampleSet":
        return cls.from_inputs(_decode(doc["hidden_unitary"]), _decode(doc["inputs"]), _decode(doc["outputs"]))


@dataclass(frozen=True, eq=False)
class EmulationProblem:
    samples: SampleSet
    anchor_index: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.anchor_index < self.samples.K:
            raise DomainError(f"anchor_index {self.anchor_index} out of range for K={self.samples.K}")

    @property
    def anchor_in(self) -> np.ndarray:
        return self.samples.inputs[self.anchor_index]

    @property
    def anchor_out(self) -> np.ndarray:
        return self.samples.outputs[self.anchor_index]

    def to_json(self) -> str:
        doc = self.samples.to_dict()
        doc["anchor_index"] = self.anchor_index
        doc["rng_seed"] = self.rng_seed
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "EmulationProblem":
        doc = json.loads(text)
        return cls(SampleSet.from_dict(doc), int(doc.get("anchor_index", 0)), int(doc.get("rng_seed", 0)))


def _encode(a: np.ndarray):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _decode(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape[-1] != 2:
        raise DimensionError("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def matrix_algebra_dimension(gens, rtol: float = RANK_RTOL) -> int:
    """Dimension of the associative algebra generated by square matrices ``gens``.

    The linear span is repeatedly closed under products with the generators
    until its dimension stops growing; ranks use singular values above
    ``rtol`` times the largest.
    """
    gens = [np.asarray(g, dtype=complex) for g in gens]
    d = gens[0].shape[0]

    def span_basis(mats):
        m = np.stack([x.reshape(-1) for x in mats], axis=0)
        _, s, vh = np.linalg.svd(m, full_matrices=False)
        if s[0] == 0:
            return []
        r = int(np.sum(s > rtol * s[0]))
        return [row.reshape(d, d) for row in vh[:r]]

    current = span_basis(gens)
    while True:
        nxt = span_basis(current + [a @ b for a in current for b in gens])
        if len(nxt) == len(current) or len(nxt) == d * d:
            return len(nxt)
        current = nxt


def operator_algebra_dimension(kets, basis_in=None, rtol: float = RANK_RTOL) -> int:
    """Dimension of the algebra generated by the projectors onto ``kets``.

    Projectors are expressed in the coordinates of ``basis_in`` (the span of
    ``kets`` if omitted).
    """
    kets = np.atleast_2d(np.asarray(kets, dtype=complex))
    if basis_in is None:
        basis_in = orthonormal_span(kets, rtol)
    coords = kets @ basis_in.conj()
    return matrix_algebra_dimension([np.outer(c, c.conj()) for c in coords], rtol)


def algebra_generates(samples: SampleSet) -> bool:
    """True iff the sample projectors generate the full matrix algebra on the input subspace."""
    d = samples.dim_subspace
    return operator_algebra_dimension(samples.inputs, samples.basis_in) == d * d


def generate_instance(D: int, d: int, K: int, seed: SeedLike = 0, anchor: Optional[int] = None) -> EmulationProblem:
    """Random instance: Haar unitary, Haar subspace of dimension ``d``, ``K`` Haar kets inside it.

    When ``anchor`` is None the anchor index is drawn uniformly from the samples.
    """
    if not 1 <= d <= D:
        raise DomainError(f"need 1 <= d <= D, got d={d}, D={D}")
    if K < d:
        raise DomainError(f"need K >= d, got K={K}, d={d}")
    rng = as_generator(seed)
    seed_int = seed if isinstance(seed, (int, np.integer)) else 0
    u = haar_unitary(D, rng)
    last = "no attempt"
    for _ in range(MAX_RETRIES):
        frame = haar_unitary(D, rng)[:, :d]
        coords = np.stack([random_ket(d, rng) for _ in range(K)])
        samples = SampleSet.from_inputs(u, coords @ frame.T)
        if samples.dim_subspace != d:
            last = f"input span has rank {samples.dim_subspace} != {d}"
            continue
        if not algebra_generates(samples):
            last = "sample projectors do not generate the full algebra"
            continue
        a = int(rng.integers(K)) if anchor is None else int(anchor)
        return EmulationProblem(samples, a, int(seed_int))
    raise GenerationError(f"no valid instance after {MAX_RETRIES} attempts: {last}")


def pauli_instance(unitary=None) -> EmulationProblem:
    """Qubit instance with inputs ``|0>, |+>, |+i>`` and anchor ``|0>``.

    The hidden unitary defaults to the identity.
    """
    ket_i = normalize([1, 1j])
    inputs = np.stack([basis(2, 0), KET_PLUS, ket_i])
    u = np.eye(2, dtype=complex) if unitary is None else unitary
    return EmulationProblem(SampleSet.from_inputs(u, inputs), 0, 0)


def problem_from_kets(unitary, inputs, anchor: int = 0, outputs=None) -> EmulationProblem:
    samples = SampleSet.from_inputs(unitary, inputs, outputs)
    if samples.dim_subspace < 1:
        raise PreconditionError("sample set is empty")
    return EmulationProblem(samples, anchor, 0)
