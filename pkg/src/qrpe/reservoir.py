"""Pair Hamiltonians, their evolution, and the input-side POVM of one node pair.

The input subsystem is swapped onto the first node of a pair (the node driven
by ``P1``/``E1``); the second node is the ancilla and starts in ``|0>``.  After
evolving for time ``t`` both nodes are measured in the occupation basis.  The
outcome ``(m1, m2)`` is labelled ``m = d * m1 + m2`` and is equivalent to the
effect ``<0|_anc U (|m1><m1| (x) |m2><m2|) U^dagger |0>_anc`` acting on the
input, with ``U = exp(-i t H / hbar)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict, replace
from typing import Literal

import numpy as np

from qrpe import qla

HBAR_NATURAL = 1.0
HBAR_MEV_PS = 0.6582119569
COND_CEILING = 1e8


@dataclass(frozen=True)
class ReservoirParams:
    """Parameters of one node pair; energies in meV, time in ps."""

    J: float = 0.0
    P1: float = 0.0
    P2: float = 0.0
    E1: float = 0.0
    E2: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    t: float = 1.0
    hbar: float = HBAR_NATURAL

    def __post_init__(self):
        if self.t < 0:
            raise qla.ContractError("evolution time must be nonnegative")
        if self.hbar <= 0:
            raise qla.ContractError("hbar must be positive")

    def with_(self, **kw) -> "ReservoirParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


# Qubit reservoir used for every qubit experiment.
# Reference settings: energies in meV and times in ps, hence hbar in meV*ps.
QUBIT_SETTING = ReservoirParams(J=-0.41, P1=4.0, P2=1.3, E1=0.71, E2=0.46, t=1.0,
                                hbar=HBAR_MEV_PS)
# Bosonic qudit reservoir used for qutrit and hybrid experiments.
QUTRIT_SETTING = ReservoirParams(
    J=0.9, P1=2.1, P2=1.1, E1=1.1, E2=0.4, alpha1=0.6, alpha2=0.7, t=1.0,
    hbar=HBAR_MEV_PS,
)


def build_pair_hamiltonian_qubit(p: ReservoirParams) -> np.ndarray:
    X, Y, Z, I = (qla.PAULI[k] for k in "XYZI")
    return (
        p.J * (np.kron(X, X) + np.kron(Y, Y))
        + p.P1 * np.kron(X, I)
        + p.E1 * np.kron(Z, I)
        + p.P2 * np.kron(I, X)
        + p.E2 * np.kron(I, Z)
    )


def lowering(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), k=1).astype(complex)


def build_pair_hamiltonian_bosonic(p: ReservoirParams, d: int) -> np.ndarray:
    if d < 2:
        raise qla.ContractError("local dimension must be at least 2")
    a = lowering(d)
    ad = a.conj().T
    I = np.eye(d)
    a1, a2 = np.kron(a, I), np.kron(I, a)
    a1d, a2d = a1.conj().T, a2.conj().T
    H = (
        p.J * (a1d @ a2 + a2d @ a1)
        + p.P1 * (a1d + a1)
        + p.P2 * (a2d + a2)
        + p.E1 * a1d @ a1
        + p.E2 * a2d @ a2
        + p.alpha1 * a1d @ a1d @ a1 @ a1
        + p.alpha2 * a2d @ a2d @ a2 @ a2
    )
    return (H + H.conj().T) / 2


@dataclass(frozen=True)
class PairDynamics:
    """Input-side effects of one node pair and the dynamics matrix they define.

    Row ``m`` of ``tmat`` is ``vec(effects[m]).conj()`` so that
    ``tmat @ vec(sigma)`` is the readout distribution of ``sigma``.
    ``tmat_inv`` is ``None`` when the effects are not informationally complete.
    """

    d: int
    effects: np.ndarray
    tmat: np.ndarray
    tmat_inv: np.ndarray | None
    cond: float
    params: ReservoirParams | None = None
    kind: str = "qubit"
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_effects(cls, effects, params=None, kind="custom", provenance=None) -> "PairDynamics":
        effects = np.asarray(effects, dtype=complex)
        n_out, d, _ = effects.shape
        if n_out != d * d:
            raise qla.ContractError(f"need {d * d} effects, got {n_out}")
        tmat = effects.reshape(n_out, d * d).conj()
        cond = float(np.linalg.cond(tmat))
        tmat_inv = None
        if np.isfinite(cond) and cond < 1e13:
            tmat_inv = np.linalg.inv(tmat)
        return cls(d, effects, tmat, tmat_inv, cond, params, kind, dict(provenance or {}))

    @property
    def n_outcomes(self) -> int:
        return self.d * self.d

    def require_inverse(self) -> np.ndarray:
        if self.tmat_inv is None:
            raise np.linalg.LinAlgError(
                f"dynamics matrix is singular (condition number {self.cond:.3g})"
            )
        return self.tmat_inv

    def kraus(self) -> np.ndarray:
        """Principal square roots of the effects, one per outcome."""
        return np.array([qla.psd_sqrt(e) for e in self.effects])


def evolution_operator(p: ReservoirParams, d: int = 2,
                       kind: Literal["qubit", "bosonic"] = "qubit",
                       reverse: bool = False) -> np.ndarray:
    if kind == "qubit":
        if d != 2:
            raise qla.ContractError("qubit reservoirs have local dimension 2")
        H = build_pair_hamiltonian_qubit(p)
    elif kind == "bosonic":
        H = build_pair_hamiltonian_bosonic(p, d)
    else:
        raise qla.ContractError(f"unknown reservoir kind {kind!r}")
    sign = 1.0 if reverse else -1.0
    return qla.herm_expm(H, sign * p.t / p.hbar)


def pair_effects(p: ReservoirParams, d: int = 2,
                 kind: Literal["qubit", "bosonic"] = "qubit",
                 reverse: bool = False) -> PairDynamics:
    """Effects ``<0|_anc U Pi_m U^dagger |0>_anc`` for all ``d**2`` pair outcomes.

    ``reverse`` flips the sign in the exponent of ``U`` (equivalent to ``t -> -t``).
    """
    U = evolution_operator(p, d, kind, reverse)
    # U Pi_m U^dag = |u_m><u_m| with u_m the m-th column; project ancilla onto |0>
    cols = U.reshape(d, d, d * d)[:, 0, :]
    effects = np.einsum("im,jm->mij", cols, cols.conj())
    return PairDynamics.from_effects(
        effects, params=p, kind=kind,
        provenance={"params": p.to_dict(), "d": d, "kind": kind, "reverse": reverse},
    )


def completeness_report(pd: PairDynamics, ceiling: float = COND_CEILING) -> dict:
    return {"invertible": bool(np.isfinite(pd.cond) and pd.cond < ceiling), "cond": pd.cond}


def dynamics_for_dims(dims, qubit_params: ReservoirParams = QUBIT_SETTING,
                      qudit_params: ReservoirParams = QUTRIT_SETTING,
                      hybrid_bosonic: bool = False) -> list[PairDynamics]:
    """One :class:`PairDynamics` per subsystem, reusing objects for equal dims.

    Qubits use the qubit Hamiltonian with ``qubit_params`` unless
    ``hybrid_bosonic`` is set, in which case every subsystem (qubits included)
    uses the bosonic Hamiltonian with ``qudit_params``.
    """
    cache: dict[int, PairDynamics] = {}
    out = []
    for d in dims:
        if d not in cache:
            if d == 2 and not hybrid_bosonic:
                cache[d] = pair_effects(qubit_params, 2, "qubit")
            else:
                cache[d] = pair_effects(qudit_params, d, "bosonic")
        out.append(cache[d])
    return out
