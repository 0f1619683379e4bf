"""Training states, training data, and weight synthesis for observables."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qrpe import qla
from qrpe.reservoir import PairDynamics

IMAG_TOL = 1e-9


class NumericalHealthError(ArithmeticError):
    """Weights that should be real came out with a significant imaginary part."""


def training_states(d: int) -> list[qla.PureState]:
    """``d**2`` informationally complete training states for one subsystem.

    For qubits: ``|0>, |1>, (|0>+|1>)/sqrt2, (|0>+i|1>)/sqrt2``.  For larger ``d``
    the basis states are followed by the pairwise superpositions
    ``(|j>+|k>)/sqrt2`` and then ``(|j>+i|k>)/sqrt2`` for ``j < k``.
    """
    if d < 2:
        raise qla.ContractError("local dimension must be at least 2")
    eye = np.eye(d, dtype=complex)
    states = [eye[j] for j in range(d)]
    pairs = list(itertools.combinations(range(d), 2))
    states += [(eye[j] + eye[k]) / np.sqrt(2) for j, k in pairs]
    states += [(eye[j] + 1j * eye[k]) / np.sqrt(2) for j, k in pairs]
    return [qla.PureState(s, (d,)) for s in states]


def state_matrix(states: Sequence[qla.PureState]) -> np.ndarray:
    """Columns ``vec(|phi_k><phi_k|)``."""
    return np.column_stack([qla.vec(s.projector()) for s in states])


@dataclass(frozen=True)
class TrainingData:
    d: int
    Xp: np.ndarray
    Mp: np.ndarray
    mode: str = "exact"
    shots: int | None = None
    provenance: dict = field(default_factory=dict)


def simulate_training(pd: PairDynamics, states: Sequence[qla.PureState] | None = None,
                      mode: str = "exact", shots: int | None = None,
                      rng: np.random.Generator | None = None) -> TrainingData:
    """Readout distributions of the training states, exact or from ``shots`` draws each."""
    if states is None:
        states = training_states(pd.d)
    Mp = state_matrix(states)
    if np.linalg.matrix_rank(Mp) < pd.d ** 2:
        raise qla.ContractError("training states are not informationally complete")
    X = np.real(pd.tmat @ Mp)
    X = np.clip(X, 0, None)
    X /= X.sum(axis=0, keepdims=True)
    if mode == "exact":
        return TrainingData(pd.d, X, Mp, "exact", None, dict(pd.provenance))
    if mode != "sampled":
        raise qla.ContractError(f"unknown training mode {mode!r}")
    if not shots or shots < 1:
        raise qla.ContractError("sampled mode needs a positive shot count")
    rng = rng if rng is not None else np.random.default_rng()
    counts = np.column_stack([rng.multinomial(shots, X[:, k]) for k in range(X.shape[1])])
    return TrainingData(pd.d, counts / shots, Mp, "sampled", shots, dict(pd.provenance))


def recover_tp(td: TrainingData) -> np.ndarray:
    """Dynamics matrix ``Xp Mp^-1`` from training data."""
    if np.linalg.cond(td.Mp) > 1e12:
        raise np.linalg.LinAlgError("training state matrix is singular")
    return td.Xp @ np.linalg.inv(td.Mp)


def _inverse(tp) -> np.ndarray:
    if isinstance(tp, PairDynamics):
        return tp.require_inverse()
    tp = np.asarray(tp)
    if np.linalg.cond(tp) > 1e13:
        raise np.linalg.LinAlgError("dynamics matrix is singular")
    return np.linalg.inv(tp)


def _local_dim(tp) -> int:
    if isinstance(tp, PairDynamics):
        return tp.d
    return int(round(np.sqrt(np.asarray(tp).shape[0])))


def _check_real(w: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(w.real), initial=0.0)))
    if np.max(np.abs(w.imag), initial=0.0) > IMAG_TOL * scale:
        raise NumericalHealthError(
            f"weights have imaginary part {np.max(np.abs(w.imag)):.3g}"
        )
    return np.ascontiguousarray(w.real)


@dataclass
class WeightVector:
    """Readout weights for one observable.

    ``slot_dims`` lists the local dimension of every measured subsystem; for an
    ``m``-copy observable the subsystems of copy 1 come first, then copy 2, and
    so on.  ``dense`` holds one weight per joint outcome (row-major over slots);
    ``terms`` holds ``(coefficient, rows)`` pairs with one weight row of length
    ``d**2`` per slot (``None`` meaning the all-ones identity row).
    """

    slot_dims: tuple[int, ...]
    dense: np.ndarray | None = None
    terms: list[tuple[float, list[np.ndarray | None]]] | None = None
    copies: int = 1

    @property
    def n_slots(self) -> int:
        return len(self.slot_dims)

    @property
    def outcome_shape(self) -> tuple[int, ...]:
        return tuple(d * d for d in self.slot_dims)

    def evaluate(self, outcomes) -> np.ndarray:
        """Single-snapshot estimates for an ``(N, n_slots)`` outcome array."""
        x = np.atleast_2d(np.asarray(outcomes, dtype=np.int64))
        if x.shape[1] != self.n_slots:
            raise qla.ContractError(
                f"snapshot has {x.shape[1]} entries, weights expect {self.n_slots}"
            )
        if self.dense is not None:
            return self.dense[np.ravel_multi_index(x.T, self.outcome_shape)]
        total = np.zeros(x.shape[0])
        for coef, rows in self.terms:
            val = np.full(x.shape[0], float(coef))
            for j, row in enumerate(rows):
                if row is not None:
                    val = val * row[x[:, j]]
            total += val
        return total

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        out = np.zeros(self.outcome_shape)
        for coef, rows in self.terms:
            full = [r if r is not None else np.ones(n) for r, n in zip(rows, self.outcome_shape)]
            t = np.asarray(coef, dtype=float)
            for r in full:
                t = np.multiply.outer(t, r)
            out += t
        return out.reshape(-1)


def weights_dense(obs, tp_list: Sequence, copies: int = 1) -> WeightVector:
    """Dense ``W = <<obs| (T_1 (x) ... (x) T_k)^-1`` over ``copies`` copies."""
    slots = list(tp_list) * copies
    dims = [_local_dim(tp) for tp in slots]
    D = int(np.prod(dims))
    obs = qla.as_matrix(obs)
    if obs.shape != (D, D):
        raise qla.ContractError(f"observable shape {obs.shape} does not match dims {dims}")
    v = qla.vec_multi(obs, dims).conj()
    w = qla.apply_local(v, [_inverse(tp).T for tp in slots])
    return WeightVector(tuple(dims), dense=_check_real(w), copies=copies)


def weight_row(factor, tp) -> np.ndarray:
    """Per-subsystem weights ``<<factor| T^-1``."""
    factor = qla.as_matrix(factor)
    d = _local_dim(tp)
    if factor.shape != (d, d):
        raise qla.ContractError(f"factor shape {factor.shape} does not match d={d}")
    return _check_real(qla.vec(factor).conj() @ _inverse(tp))


def weights_factored(terms: Sequence, tp_list: Sequence, copies: int = 1) -> WeightVector:
    """Sum-of-products weights.

    ``terms`` is a sequence of ``(coefficient, factors)`` where ``factors`` has
    one ``d x d`` matrix per slot (``len(tp_list) * copies`` of them); ``None``
    stands for the identity.  Coefficients must be real.
    """
    slots = list(tp_list) * copies
    dims = tuple(_local_dim(tp) for tp in slots)
    cache: dict[tuple[int, int], np.ndarray] = {}
    out = []
    for coef, factors in terms:
        if len(factors) != len(slots):
            raise qla.ContractError(
                f"term has {len(factors)} factors, expected {len(slots)}"
            )
        if abs(np.imag(coef)) > IMAG_TOL:
            raise NumericalHealthError("factored terms need real coefficients")
        rows = []
        for f, tp in zip(factors, slots):
            if f is None:
                rows.append(None)
                continue
            key = (id(f), id(tp))
            if key not in cache:
                cache[key] = weight_row(f, tp)
            rows.append(cache[key])
        out.append((float(np.real(coef)), rows))
    return WeightVector(dims, terms=out, copies=copies)


def pauli_decompose(obs, tol: float = 1e-14) -> list[tuple[float, str]]:
    """Expand a Hermitian operator on qubits as ``sum_Q alpha_Q Q``."""
    obs = qla.as_matrix(obs)
    D = obs.shape[0]
    n = int(round(np.log2(D)))
    if 2 ** n != D or obs.shape != (D, D):
        raise qla.ContractError("pauli_decompose needs an operator on qubits")
    # remaining axes: rows of qubits q.., cols of qubits q.., labels of qubits <q
    t = obs.reshape([2] * (2 * n))
    basis = np.array([qla.PAULI[k] for k in "IXYZ"])
    for q in range(n):
        t = np.tensordot(basis, t, axes=([2, 1], [0, n - q]))
        t = np.moveaxis(t, 0, -1)
    coeffs = t.reshape(-1) / D
    out = []
    for idx, c in enumerate(coeffs):
        if abs(c) > tol:
            label = "".join("IXYZ"[int(ch)] for ch in np.base_repr(idx, 4).zfill(n))
            out.append((float(np.real(c)), label))
    return out


def pauli_matrix(label: str) -> np.ndarray:
    return qla.kron(*[qla.PAULI[ch] for ch in label])


def pauli_terms(decomposition: Sequence[tuple[float, str]]) -> list:
    """Turn a Pauli decomposition into ``weights_factored`` terms."""
    return [
        (c, [None if ch == "I" else qla.PAULI[ch] for ch in label])
        for c, label in decomposition
    ]
