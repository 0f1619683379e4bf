"""Dense linear-algebra kernel shared by every other module.

Vectorization convention: ``vec`` stacks a square matrix row by row, so that
``vec(A).conj() @ vec(B) == Tr(A^dagger B)``.  For operators on a tensor
product of subsystems, :func:`vec_multi` interleaves the row and column index
of each subsystem, which makes ``vec_multi(A (x) B) == kron(vec(A), vec(B))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

HERM_TOL = 1e-10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ContractError(ValueError):
    """An input violates a documented precondition."""


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ContractError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix has non-finite entries")
    return a


def is_hermitian(a, tol: float = HERM_TOL) -> bool:
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def check_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        raise ContractError("matrix is not Hermitian")
    return a


def kron(*mats) -> np.ndarray:
    """Kronecker product of any number of matrices (or vectors)."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, mats)


def herm_expm(h, scale: float) -> np.ndarray:
    """Return ``exp(1j * scale * h)`` for Hermitian ``h`` via eigendecomposition."""
    h = check_hermitian(h)
    evals, evecs = np.linalg.eigh((h + h.conj().T) / 2)
    return (evecs * np.exp(1j * scale * evals)) @ evecs.conj().T


def vec(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError("vec expects a square matrix")
    return a.reshape(-1).copy()


def unvec(v, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    n = v.size
    if d is None:
        d = int(round(np.sqrt(n)))
    if d * d != n:
        raise ContractError(f"length {n} is not a perfect square")
    return v.reshape(d, d).copy()


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``<<a|b>> = Tr(a^dagger b)``."""
    return complex(vec(a).conj() @ vec(b))


def _interleave_perm(k: int) -> list[int]:
    # axes (r_1..r_k, c_1..c_k) -> (r_1, c_1, ..., r_k, c_k)
    return [ax for i in range(k) for ax in (i, k + i)]


def vec_multi(a, dims: Sequence[int]) -> np.ndarray:
    """Vectorize an operator on ``prod(dims)`` so that product operators map to
    Kronecker products of per-subsystem ``vec``."""
    dims = list(dims)
    k = len(dims)
    t = np.asarray(a).reshape(dims + dims)
    return t.transpose(_interleave_perm(k)).reshape(-1).copy()


def unvec_multi(v, dims: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    k = len(dims)
    D = int(np.prod(dims))
    t = np.asarray(v).reshape([x for d in dims for x in (d, d)])
    inv = np.argsort(_interleave_perm(k))
    return t.transpose(inv).reshape(D, D).copy()


def apply_local(vec_t, mats: Sequence[np.ndarray | None],
                shape: Sequence[int] | None = None) -> np.ndarray:
    """Apply ``mats[i]`` along axis ``i`` of a tensor (``None`` skips the axis).

    ``vec_t`` may be flat; it is reshaped to ``shape``, which defaults to
    ``[m.shape[1] for m in mats]`` and must be given when any entry is ``None``.
    Equivalent to ``kron(*mats) @ vec_t`` without forming the Kronecker product.
    """
    if shape is None:
        if any(m is None for m in mats):
            raise ContractError("shape is required when some axes are skipped")
        shape = [m.shape[1] for m in mats]
    t = np.asarray(vec_t).reshape(shape)
    for ax, m in enumerate(mats):
        if m is None:
            continue
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def spectral_norm_herm(a) -> float:
    a = check_hermitian(a)
    evals = np.linalg.eigvalsh((a + a.conj().T) / 2)
    return float(np.max(np.abs(evals)))


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the subsystems listed in ``keep``."""
    dims = list(dims)
    k = len(dims)
    keep = sorted(keep)
    t = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * k > 26:
        raise ContractError("partial_trace supports at most 13 subsystems")
    rows = list(letters[:k])
    cols = list(letters[k:2 * k])
    for i in traced:
        cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum("".join(rows) + "".join(cols) + "->" + out, t).reshape(d_keep, d_keep)


def reduced_from_pure(psi, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state without forming the full projector."""
    dims = list(dims)
    keep = sorted(keep)
    rest = [i for i in range(len(dims)) if i not in keep]
    t = np.asarray(psi).reshape(dims).transpose(keep + rest)
    d_keep = int(np.prod([dims[i] for i in keep]))
    m = t.reshape(d_keep, -1)
    return m @ m.conj().T


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if amp.size != int(np.prod(dims)):
            raise ContractError(f"{amp.size} amplitudes do not match dims {dims}")
        if abs(np.linalg.norm(amp) - 1) > 1e-12:
            raise ContractError("state is not normalized")
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, amplitudes, dims) -> "PureState":
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amp / np.linalg.norm(amp), dims)

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        D = int(np.prod(dims))
        if m.shape != (D, D):
            raise ContractError(f"matrix shape {m.shape} does not match dims {dims}")
        if not is_hermitian(m, 1e-12):
            raise ContractError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > 1e-10:
            raise ContractError("density matrix does not have unit trace")
        if np.linalg.eigvalsh((m + m.conj().T) / 2)[0] < -1e-10:
            raise ContractError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    def dm(self) -> "DensityMatrix":
        return self

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


def to_density(state) -> DensityMatrix:
    if isinstance(state, (PureState, DensityMatrix)):
        return state.dm()
    raise ContractError(f"not a state: {type(state).__name__}")


def haar_pure(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    dims = tuple(dims)
    if not dims:
        raise ContractError("dims must be non-empty")
    D = int(np.prod(dims))
    z = rng.standard_normal(D) + 1j * rng.standard_normal(D)
    return PureState.normalized(z, dims)


def random_density(dims: Sequence[int], rng: np.random.Generator) -> DensityMatrix:
    """Hilbert-Schmidt random mixed state ``G G^dagger / Tr(G G^dagger)``."""
    dims = tuple(dims)
    if not dims:
        raise ContractError("dims must be non-empty")
    D = int(np.prod(dims))
    g = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real, dims)


def random_hermitian(D: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    return (g + g.conj().T) / 2


def psd_sqrt(a) -> np.ndarray:
    """Principal square root of a PSD matrix (negative round-off clipped)."""
    a = check_hermitian(a, 1e-8)
    evals, evecs = np.linalg.eigh((a + a.conj().T) / 2)
    return (evecs * np.sqrt(np.clip(evals, 0, None))) @ evecs.conj().T


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian operator basis (``Tr(b_i b_j) = delta_ij``).

    Identity first, then the generalized Gell-Mann matrices scaled by
    ``1/sqrt(2)``; for ``d = 2`` this is ``{I, X, Y, Z} / sqrt(2)``.
    """
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    if d == 2:
        return np.array([PAULI[k] / np.sqrt(2) for k in "IXYZ"])
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1
            mats.append(m / np.sqrt(2))
            m = np.zeros((d, d), dtype=complex)
            m[j, k], m[k, j] = -1j, 1j
            mats.append(m / np.sqrt(2))
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.diag(diag).astype(complex) / np.sqrt(l * (l + 1)))
    return np.array(mats)
