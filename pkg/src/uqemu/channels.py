"""Random-reflection channels on the input subspace and their spectral data.

Two channels drive the analysis of the emulator:

* ``D(rho) = (1/K) sum_k R_k rho R_k`` with reflections ``R_k = I - 2|phi_k><phi_k|``;
* ``W(rho) = P rho P + D(Pp rho Pp)`` with ``P`` the anchor projector and ``Pp = I - P``.

Both are represented as ``d^2 x d^2`` matrices in a Hermitian, orthonormal
(generalized Gell-Mann) operator basis of the input subspace, identity first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, GapCollapseError
from .instances import EmulationProblem, SampleSet
from .numerics import KET_MINUS, basis, projector


def gell_mann_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis of ``d x d`` matrices, shape ``(d*d, d, d)``.

    Element 0 is ``I/sqrt(d)``; then symmetric and antisymmetric off-diagonal
    pairs; then the traceless diagonal elements.
    """
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j / np.sqrt(2)
            a[k, j] = 1j / np.sqrt(2)
            mats += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.stack(mats)


@dataclass(frozen=True, eq=False)
class SuperOpMatrix:
    """Matrix ``M[mu, nu] = Tr(F_mu^dag Phi(F_nu))`` of a map restricted to a subspace.

    ``isometry`` (shape ``(D, d)``) identifies the subspace; the basis
    operators are ``F_mu = Q G_mu Q^dag`` with ``G_mu`` from :func:`gell_mann_basis`.
    ``kraus`` keeps the full-space Kraus operators the matrix was built from.
    """

    matrix: np.ndarray
    isometry: np.ndarray
    kraus: tuple = field(default=(), repr=False)

    @property
    def d(self) -> int:
        return self.isometry.shape[1]

    @property
    def projector_in(self) -> np.ndarray:
        return self.isometry @ self.isometry.conj().T

    @property
    def basis(self) -> np.ndarray:
        """Basis operators ``F_mu`` on the full space, shape ``(d*d, D, D)``."""
        q = self.isometry
        return np.einsum("ia,mab,jb->mij", q, gell_mann_basis(self.d), q.conj())

    def coordinates(self, x) -> np.ndarray:
        q = self.isometry
        inner = q.conj().T @ np.asarray(x, dtype=complex) @ q
        return np.einsum("mab,ab->m", gell_mann_basis(self.d).conj(), inner)

    def from_coordinates(self, c) -> np.ndarray:
        q = self.isometry
        return q @ np.einsum("m,mab->ab", c, gell_mann_basis(self.d)) @ q.conj().T

    def apply(self, x) -> np.ndarray:
        """Apply the map (through its matrix) to an operator supported on the subspace."""
        return self.from_coordinates(self.matrix @ self.coordinates(x))

    def apply_kraus(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return sum(a @ x @ a.conj().T for a in self.kraus)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def superop_from_kraus(kraus: Sequence[np.ndarray], isometry: np.ndarray) -> SuperOpMatrix:
    """Build the restricted matrix of ``X -> sum_a A X A^dag`` on ``span(isometry)``."""
    q = np.asarray(isometry, dtype=complex)
    d = q.shape[1]
    # superoperator in the computational basis of the subspace (row-major vec)
    L = np.zeros((d * d, d * d), dtype=complex)
    for a in kraus:
        ai = q.conj().T @ a @ q
        L += np.kron(ai, ai.conj())
    B = gell_mann_basis(d).reshape(d * d, d * d).T  # columns vec(G_mu)
    return SuperOpMatrix(B.conj().T @ L @ B, q, tuple(np.asarray(a, dtype=complex) for a in kraus))


def reflection(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    return np.eye(phi.size, dtype=complex) - 2 * projector(phi)


def d_kraus(samples: SampleSet) -> list:
    return [reflection(phi) / np.sqrt(samples.K) for phi in samples.inputs]


def w_kraus(samples: SampleSet, anchor: int) -> list:
    p = projector(samples.inputs[anchor])
    pp = np.eye(samples.dim_total) - p
    return [p] + [reflection(phi) @ pp / np.sqrt(samples.K) for phi in samples.inputs]


def build_D(samples: SampleSet) -> SuperOpMatrix:
    """Uniform random-reflection channel over the sample inputs."""
    return superop_from_kraus(d_kraus(samples), samples.basis_in)


def build_W(samples: SampleSet, anchor: int = 0) -> SuperOpMatrix:
    """Erasing channel: keep the anchor component, randomly reflect the rest."""
    if not 0 <= anchor < samples.K:
        raise DomainError(f"anchor {anchor} out of range for K={samples.K}")
    return superop_from_kraus(w_kraus(samples, anchor), samples.basis_in)


def coupling_kraus(unitaries: Sequence[np.ndarray], probs: Sequence[float]) -> list:
    """Kraus operators of ``tau -> sum_l p_l Tr_a(W_l (tau x |-><-|) W_l^dag)``.

    Each ``W_l`` acts on ``system (x) qubit`` with the qubit last.
    """
    out = []
    for w, p in zip(unitaries, probs):
        w = np.asarray(w, dtype=complex)
        D = w.shape[0] // 2
        w4 = w.reshape(D, 2, D, 2)
        col = np.einsum("iajb,b->iaj", w4, KET_MINUS)
        for a in range(2):
            out.append(np.sqrt(p) * col[:, a, :])
    return out


def _identity_direction(chan: SuperOpMatrix) -> np.ndarray:
    v = np.zeros(chan.d * chan.d, dtype=complex)
    v[0] = 1.0
    return v


def lambda_D(dchan: SuperOpMatrix, atol: float = 1e-9) -> float:
    """Second-largest eigenvalue magnitude of a Hermitian unital channel matrix.

    The trivial eigenvector ``Pi_in/sqrt(d)`` is deflated first; ``d=1``
    returns 0 by convention.
    """
    m = dchan.matrix
    if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
        raise DomainError("lambda_D requires a Hermitian superoperator matrix")
    if dchan.d == 1:
        return 0.0
    v = _identity_direction(dchan)
    proj = np.eye(m.shape[0]) - np.outer(v, v.conj())
    w = np.linalg.eigvalsh(proj @ ((m + m.conj().T) / 2) @ proj)
    return float(np.max(np.abs(w)))


def lambda_perp(dchan: SuperOpMatrix, anchor_projector) -> float:
    """Spectral radius of ``X -> Q D(Q X Q) Q`` with ``Q = Pi_in - P``.

    For a completely positive map the spectral radius is itself an
    eigenvalue, so this is the largest-magnitude eigenvalue.  ``d=1`` gives 0.
    """
    if dchan.d == 1:
        return 0.0
    qp = dchan.projector_in - np.asarray(anchor_projector, dtype=complex)
    n = dchan.d * dchan.d
    basis_ops = dchan.basis
    # matrix of X -> qp X qp in the same orthonormal operator basis
    compressed = np.stack([dchan.coordinates(qp @ f @ qp) for f in basis_ops], axis=1)
    c = compressed @ dchan.matrix @ compressed
    return float(np.max(np.abs(np.linalg.eigvals(c)))) if n else 0.0


def required_T(d: int, eps_id: float, lambda_d: float) -> int:
    """Number of erasing steps that makes the ideal emulation error at most ``eps_id``.

    ``ceil(d * ln(8 d / eps_id^2) / (1 - |lambda_d|))``, clamped to at least 1.
    """
    lam = abs(float(lambda_d))
    if lam >= 1.0:
        raise GapCollapseError(f"|lambda_D| = {lam} leaves no spectral gap")
    if not eps_id > 0:
        raise DomainError(f"eps_id must be positive, got {eps_id}")
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    t = d * math.log(8 * d / eps_id**2) / (1 - lam)
    return max(1, math.ceil(t))


def iterate_kraus(kraus: Sequence[np.ndarray], rho, T: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = projector(rho)
    for _ in range(T):
        rho = sum(a @ rho @ a.conj().T for a in kraus)
    return rho


def w_power(problem: EmulationProblem, rho, T: int) -> np.ndarray:
    """``W^T(rho)`` on the full space."""
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T}")
    s = problem.samples
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = projector(rho)
    p = projector(problem.anchor_in)
    pp = np.eye(s.dim_total) - p
    refl = [reflection(phi) for phi in s.inputs]
    for _ in range(T):
        x = pp @ rho @ pp
        rho = p @ rho @ p + sum(r @ x @ r for r in refl) / s.K
    return rho


def erase_probability(problem: EmulationProblem, rho, T: int) -> float:
    """Probability ``<anchor| W^T(rho) |anchor>`` that T erasing steps succeed."""
    out = w_power(problem, rho, T)
    a = problem.anchor_in
    return float(np.clip((a.conj() @ out @ a).real, 0.0, 1.0))
