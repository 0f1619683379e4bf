"""Classical shadows with random single-qubit Pauli measurements, used as a baseline.

Bases are coded ``0, 1, 2`` for ``X, Y, Z`` and outcomes ``0, 1`` for the ``+1``
and ``-1`` eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qrpe import qla
from qrpe.sampling import CHUNK, DENSITY_CEILING, DimensionError, _chunk_rng
from qrpe.training import pauli_decompose

_S = np.array([[1, 0], [0, 1j]])
_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
# rotations taking each basis to the computational basis
BASIS_ROTATIONS = np.array([_H, _H @ _S.conj().T, np.eye(2)], dtype=complex)
# eigenvector projectors, indexed [basis, outcome]
EIGEN_PROJECTORS = np.array(
    [[np.outer(U.conj()[k], U[k]) for k in range(2)] for U in BASIS_ROTATIONS]
)
_LETTER = {"X": 0, "Y": 1, "Z": 2}


@dataclass
class PauliShadows:
    bases: np.ndarray
    outcomes: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.bases = np.atleast_2d(np.asarray(self.bases, dtype=np.uint8))
        self.outcomes = np.atleast_2d(np.asarray(self.outcomes, dtype=np.uint8))
        if self.bases.shape != self.outcomes.shape:
            raise qla.ContractError("bases and outcomes must have the same shape")

    def __len__(self) -> int:
        return self.bases.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.bases.shape[1]


def _qubits(state) -> int:
    if any(d != 2 for d in state.dims):
        raise qla.ContractError("Pauli shadows are defined for qubits only")
    return len(state.dims)


def _sample_exact(rho: np.ndarray, n: int, bases: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.empty(bases.shape, dtype=np.uint8)
    codes = np.ravel_multi_index(bases.T.astype(np.int64), (3,) * n)
    for code in np.unique(codes):
        rows = np.nonzero(codes == code)[0]
        b = bases[rows[0]]
        U = qla.kron(*[BASIS_ROTATIONS[k] for k in b])
        p = np.clip(np.real(np.einsum("ij,jk,ik->i", U, rho, U.conj())), 0, None)
        cdf = np.cumsum(p)
        idx = np.minimum(np.searchsorted(cdf, u[rows] * cdf[-1], side="right"), p.size - 1)
        out[rows] = np.stack(np.unravel_index(idx, (2,) * n), axis=1)
    return out


def _sample_sequential(psi: np.ndarray, n: int, bases: np.ndarray, u: np.ndarray) -> np.ndarray:
    B = bases.shape[0]
    out = np.empty((B, n), dtype=np.uint8)
    S = np.broadcast_to(psi, (B, psi.size)).copy()
    for i in range(n):
        S4 = S.reshape(B, 2 ** i, 2, 2 ** (n - 1 - i))
        proj = EIGEN_PROJECTORS[bases[:, i]]  # (B, 2, 2, 2)
        phi = np.einsum("nkab,nlbr->nklar", proj, S4)
        probs = np.einsum("nklar,nklar->nk", phi, phi.conj()).real
        choice = (u[:, i] * probs.sum(axis=1) > probs[:, 0]).astype(np.uint8)
        out[:, i] = choice
        sel = phi[np.arange(B), choice].reshape(B, -1)
        S = sel / np.sqrt(probs[np.arange(B), choice])[:, None]
    return out


def sample_pauli_shadows(state, n_samples: int, seed: int, method: str = "auto",
                         ceiling: int = DENSITY_CEILING) -> PauliShadows:
    """Random-Pauli snapshots with the same chunked seeding as reservoir sampling."""
    n = _qubits(state)
    D = 2 ** n
    pure = isinstance(state, qla.PureState)
    if method == "auto":
        method = "sequential" if pure else "exact"
    if method == "exact" and D > ceiling:
        raise DimensionError(f"total dimension {D} exceeds ceiling {ceiling}")
    if method == "sequential" and not pure:
        raise qla.ContractError("sequential collapse needs a pure state")
    rho = state.dm().matrix if method == "exact" else None
    bases, outs = [], []
    for c in range(-(-n_samples // CHUNK)):
        size = min(CHUNK, n_samples - c * CHUNK)
        rng = _chunk_rng(seed, c)
        b = rng.integers(0, 3, size=(size, n)).astype(np.uint8)
        if method == "exact":
            o = _sample_exact(rho, n, b, rng.random(size))
        else:
            o = _sample_sequential(state.amplitudes, n, b, rng.random((size, n)))
        bases.append(b)
        outs.append(o)
    return PauliShadows(np.concatenate(bases), np.concatenate(outs), seed)


def _as_terms(obs):
    if isinstance(obs, list):
        return obs
    return pauli_decompose(qla.check_hermitian(obs, 1e-9))


def shadow_values(obs, shadows: PauliShadows) -> np.ndarray:
    """Single-snapshot estimates ``Tr(O rho_hat)``."""
    vals = np.zeros(len(shadows))
    signs = 1.0 - 2.0 * shadows.outcomes
    for coef, label in _as_terms(obs):
        v = np.full(len(shadows), float(np.real(coef)))
        for q, ch in enumerate(label):
            if ch == "I":
                continue
            v = v * 3 * signs[:, q] * (shadows.bases[:, q] == _LETTER[ch])
        vals += v
    return vals


def shadow_estimate(obs, shadows: PauliShadows) -> float:
    return float(np.mean(shadow_values(obs, shadows)))


def _local_inverted_projectors() -> np.ndarray:
    # 3|e><e| - I for the six (basis, outcome) pairs
    return (3 * EIGEN_PROJECTORS - np.eye(2)).reshape(6, 2, 2)


def shadow_worst_case_bound(obs, traceless: bool = True, max_qubits: int = 6) -> float:
    """``max_sigma`` of the single-snapshot second moment, i.e. the squared shadow norm.

    Computes ``B = 3^-n sum_e v(e)^2 (x)_q |e_q><e_q|`` with
    ``v(e) = Tr(O (x)_q (3|e_q><e_q| - I))`` over all ``6^n`` local eigenvectors.
    """
    O = qla.check_hermitian(obs, 1e-9)
    D = O.shape[0]
    n = int(round(np.log2(D)))
    if 2 ** n != D:
        raise qla.ContractError("observable must act on qubits")
    if n > max_qubits:
        raise DimensionError(f"{n} qubits exceeds the limit of {max_qubits}")
    if traceless:
        O = O - np.trace(O) / D * np.eye(D)
    L = _local_inverted_projectors()
    t = O.reshape((2,) * (2 * n))
    # contract qubit by qubit: Tr(O (x) L) = sum O[r, c] L[c, r]
    for q in range(n):
        t = np.tensordot(L, t, axes=([2, 1], [0, n - q]))
        t = np.moveaxis(t, 0, -1)
    v2 = np.abs(t) ** 2 / 3 ** n
    P = EIGEN_PROJECTORS.reshape(6, 2, 2)
    b = v2
    for _ in range(n):
        b = np.tensordot(b, P, axes=([0], [0]))
    b = b.transpose([2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]).reshape(D, D)
    return qla.spectral_norm_herm((b + b.conj().T) / 2)


def shadow_exact_variance(obs, rho) -> float:
    """Exact variance of the single-snapshot estimator for state ``rho``."""
    O = qla.check_hermitian(obs, 1e-9)
    rho = np.asarray(getattr(rho, "matrix", rho))
    D = O.shape[0]
    n = int(round(np.log2(D)))
    second = 0.0
    for b in np.ndindex(*(3,) * n):
        for s in np.ndindex(*(2,) * n):
            E = qla.kron(*[EIGEN_PROJECTORS[b[q], s[q]] for q in range(n)])
            L = qla.kron(*[3 * EIGEN_PROJECTORS[b[q], s[q]] - np.eye(2) for q in range(n)])
            p = np.real(np.trace(E @ rho))
            second += p * np.real(np.trace(O @ L)) ** 2 / 3 ** n
    mean = np.real(np.trace(O @ rho))
    return float(second - mean ** 2)


def expected_distinct_settings(n_qubits: int, n_samples: int) -> float:
    """Expected number of distinct Pauli settings among ``n_samples`` uniform draws."""
    S = 3 ** n_qubits
    return float(S * (1 - (1 - 1 / S) ** n_samples))
