"""Dense complex linear algebra used throughout the package.

States and operators are plain :class:`numpy.ndarray` objects: a ket is a
1-D complex array, a density operator or unitary is a square 2-D array.

Subsystem ordering convention: in every tensor product the *leftmost*
factor is the most significant index, i.e. ``tensor_product(a, b)`` is
``np.kron(a, b)`` and ``|0> (x) |1>`` is the basis vector ``e_1`` of
dimension 4.  Composite registers in the emulator are always laid out
``system (x) ancilla_1 (x) ... (x) ancilla_T``.
"""

from __future__ import annotations

from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError

ATOL = 1e-10

SQRT1_2 = 1.0 / np.sqrt(2.0)
HADAMARD = SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
KET_PLUS = SQRT1_2 * np.array([1, 1], dtype=complex)
KET_MINUS = SQRT1_2 * np.array([1, -1], dtype=complex)


def basis(dim: int, index: int) -> np.ndarray:
    """Computational basis ket ``|index>`` of dimension ``dim``."""
    if dim < 1 or not 0 <= index < dim:
        raise DomainError(f"basis index {index} invalid for dimension {dim}")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    """Rank-one operator ``|psi><psi|``."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=atol, rtol=0)


def as_ket(psi, atol: float = ATOL) -> np.ndarray:
    """Validate and return ``psi`` as a normalized complex vector."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise DimensionError(f"a ket must be a non-empty 1-D array, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise DomainError(f"ket is not normalized (norm={norm!r})")
    return psi


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise DomainError("cannot normalize the zero vector")
    return psi / norm


def as_density(rho, atol: float = ATOL) -> np.ndarray:
    """Validate a density operator; kets are promoted to ``|psi><psi|``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        return projector(as_ket(rho, atol))
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density operator must be square, got shape {rho.shape}")
    if not is_hermitian(rho, atol):
        raise DomainError("density operator is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > atol:
        raise DomainError(f"density operator has trace {np.trace(rho).real!r}")
    if np.linalg.eigvalsh(rho)[0] < -atol:
        raise DomainError("density operator is not positive semidefinite")
    return rho


def check_unitary(u, atol: float = ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > atol:
        raise DomainError(f"matrix is not unitary (max |U^dag U - I| = {err:.3e})")
    return u


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product of kets or operators, leftmost factor most significant."""
    if not factors:
        raise DimensionError("tensor_product needs at least one factor")
    arrays = [np.asarray(f, dtype=complex) for f in factors]
    if any(a.size == 0 for a in arrays):
        raise DimensionError("tensor factors must have positive dimension")
    return reduce(np.kron, arrays)


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced operator on the subsystems listed in ``keep``.

    ``rho`` may be a density operator or a ket.  Kept subsystems appear in
    the order of ``dims`` regardless of the order given in ``keep``.
    """
    dims = [int(x) for x in dims]
    keep = sorted(set(int(k) for k in keep))
    total = int(np.prod(dims))
    rho = np.asarray(rho, dtype=complex)
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    if rho.ndim == 1:
        if rho.size != total:
            raise DimensionError(f"dims {dims} do not match ket of length {rho.size}")
        psi = rho.reshape(dims)
        traced = [i for i in range(n) if i not in keep]
        mat = np.moveaxis(psi, keep + traced, range(n)).reshape(
            int(np.prod([dims[k] for k in keep])), -1
        )
        return mat @ mat.conj().T
    if rho.shape != (total, total):
        raise DimensionError(f"dims {dims} do not match operator of shape {rho.shape}")
    t = rho.reshape(dims + dims)
    # einsum letters: row index i_k, column index j_k; traced subsystems share a letter
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems for partial_trace")
    rows = list(letters[:n])
    cols = [rows[i] if i not in keep else letters[n + i] for i in range(n)]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    red = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return red.reshape(d_keep, d_keep)


def hermitian_spectrum(m, atol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and matching orthonormal eigenvector columns."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, atol):
        raise DomainError("hermitian_spectrum requires a Hermitian matrix")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def psd_sqrt(m) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def _check_psd(m, name: str, atol: float) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        return projector(m)
    if not is_hermitian(m, atol):
        raise DomainError(f"{name} is not Hermitian")
    if np.linalg.eigvalsh(m)[0] < -atol:
        raise DomainError(f"{name} is not positive semidefinite")
    return m


def _rank_one_factor(m: np.ndarray, rank_tol: float):
    w, v = np.linalg.eigh(m)
    if w[-2:-1].size and abs(w[-2]) > rank_tol:
        return None
    if w.size > 1 and w[0] < -rank_tol:
        return None
    return np.sqrt(max(w[-1], 0.0)) * v[:, -1]


def uhlmann_fidelity(s1, s2, atol: float = ATOL) -> float:
    """Uhlmann fidelity ``||sqrt(s1) sqrt(s2)||_1`` (not squared).

    Kets are accepted and promoted to projectors.  When either argument is
    rank one (eigenvalue tolerance 1e-10) the pure-state formula
    ``sqrt(<v|s_other|v>)`` is used.
    """
    s1 = _check_psd(s1, "first argument", atol)
    s2 = _check_psd(s2, "second argument", atol)
    if s1.shape != s2.shape:
        raise DimensionError(f"shape mismatch {s1.shape} vs {s2.shape}")
    for a, b in ((s1, s2), (s2, s1)):
        v = _rank_one_factor(a, 1e-10)
        if v is not None:
            return float(min(np.sqrt(max((v.conj() @ b @ v).real, 0.0)), 1.0))
    r = psd_sqrt(s1)
    inner = r @ s2 @ r
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(min(np.sum(np.sqrt(np.clip(w, 0, None))), 1.0))


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = np.asarray(m, dtype=complex)
    if is_hermitian(m, 1e-12):
        return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def trace_norm_distance(s1, s2) -> float:
    """Unhalved trace distance ``||s1 - s2||_1`` (range [0, 2] for states)."""
    a = np.asarray(s1, dtype=complex)
    b = np.asarray(s2, dtype=complex)
    if a.ndim == 1:
        a = projector(a)
    if b.ndim == 1:
        b = projector(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return trace_norm(a - b)


def orthonormal_span(vectors, rtol: float = 1e-8) -> np.ndarray:
    """Isometry (columns) spanning the given vectors (rows of ``vectors``).

    Rank is decided by singular values above ``rtol`` times the largest.
    """
    a = np.atleast_2d(np.asarray(vectors, dtype=complex)).T
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


def unitary_exp(h, t: float = 1.0) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h`` via its spectrum."""
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def controlled(op, control: str = "first") -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) op`` with the control qubit first or last."""
    op = np.asarray(op, dtype=complex)
    eye = np.eye(op.shape[0], dtype=complex)
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    if control == "first":
        return np.kron(p0, eye) + np.kron(p1, op)
    if control == "last":
        return np.kron(eye, p0) + np.kron(op, p1)
    raise ValueError(f"control must be 'first' or 'last', got {control!r}")


def apply_to_subsystems(psi, op, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the ``targets`` subsystems of a (batched) ket.

    ``psi`` has shape ``(..., prod(dims))``; leading axes are treated as a batch.
    """
    dims = list(dims)
    targets = list(targets)
    psi = np.asarray(psi, dtype=complex)
    batch = psi.shape[:-1]
    n = len(dims)
    t = psi.reshape(batch + tuple(dims))
    nb = len(batch)
    axes = [nb + k for k in targets]
    t = np.moveaxis(t, axes, range(nb, nb + len(targets)))
    shp = t.shape
    dt = int(np.prod([dims[k] for k in targets]))
    t = t.reshape(batch + (dt, -1))
    t = np.einsum("ij,...jk->...ik", op, t)
    t = t.reshape(shp)
    t = np.moveaxis(t, range(nb, nb + len(targets)), axes)
    return t.reshape(batch + (int(np.prod(dims)),))


def superoperator(fn: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Matrix ``L`` of a linear map on ``dim x dim`` operators.

    Row-major vectorization: ``vec(fn(X)) = L @ X.reshape(-1)``.
    """
    cols = []
    for idx in range(dim * dim):
        e = np.zeros(dim * dim, dtype=complex)
        e[idx] = 1.0
        cols.append(np.asarray(fn(e.reshape(dim, dim)), dtype=complex).reshape(-1))
    return np.stack(cols, axis=1)


def unitary_superoperator(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return np.kron(u, u.conj())


def apply_superoperator(L, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return (L @ rho.reshape(-1)).reshape(rho.shape)


def apply_superoperator_subsystems(rho, L, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Apply the superoperator ``L`` (acting on ``targets``) to a joint density operator."""
    dims = list(dims)
    targets = list(targets)
    n = len(dims)
    total = int(np.prod(dims))
    t = np.asarray(rho, dtype=complex).reshape(dims + dims)
    axes = targets + [n + k for k in targets]
    t = np.moveaxis(t, axes, range(2 * len(targets)))
    shp = t.shape
    dt = int(np.prod([dims[k] for k in targets]))
    t = (L @ t.reshape(dt * dt, -1)).reshape(shp)
    t = np.moveaxis(t, range(2 * len(targets)), axes)
    return t.reshape(total, total)


def choi_state(L, dim: int) -> np.ndarray:
    """Normalized Choi state ``(id (x) Phi)(|Gamma><Gamma|)``, reference system first."""
    J = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            out = L[:, i * dim + j].reshape(dim, dim)
            J += np.kron(np.outer(basis(dim, i), basis(dim, j)), out)
    return J / dim


def choi_distance(L1, L2, dim: int) -> float:
    """Trace-norm distance between the normalized Choi states of two channels."""
    return trace_norm(choi_state(L1, dim) - choi_state(L2, dim))
