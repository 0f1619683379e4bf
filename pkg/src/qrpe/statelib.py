"""States, channels, observables and circuits used by the experiments."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qrpe import qla
from qrpe.estimators import swap_terms, swap_matrix


@dataclass
class ObservableSpec:
    name: str
    matrix: np.ndarray
    factors: list | None = None
    normalized: bool = False

    def __post_init__(self):
        self.matrix = qla.check_hermitian(self.matrix, 1e-9)
        if self.normalized and abs(qla.spectral_norm_herm(self.matrix) - 1) > 1e-10:
            raise qla.ContractError(f"{self.name} is flagged normalized but is not")


def _dm(matrix, dims) -> qla.DensityMatrix:
    m = np.asarray(matrix, dtype=complex)
    return qla.DensityMatrix((m + m.conj().T) / 2, dims)


def basis_state(index: int, dims: Sequence[int]) -> qla.PureState:
    amp = np.zeros(int(np.prod(dims)), dtype=complex)
    amp[index] = 1
    return qla.PureState(amp, tuple(dims))


def ghz(n: int) -> qla.PureState:
    if n < 2:
        raise qla.ContractError("GHZ states need at least two qubits")
    amp = np.zeros(2 ** n, dtype=complex)
    amp[0] = amp[-1] = 1 / np.sqrt(2)
    return qla.PureState(amp, (2,) * n)


def ghz_minus(n: int) -> qla.PureState:
    amp = np.zeros(2 ** n, dtype=complex)
    amp[0], amp[-1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    return qla.PureState(amp, (2,) * n)


def ghz_type(q: float, n: int = 3) -> qla.DensityMatrix:
    """``(1-q)/2**n * I + q * |GHZ><GHZ|``."""
    if not 0 <= q <= 1:
        raise qla.ContractError("q must lie in [0, 1]")
    D = 2 ** n
    return _dm((1 - q) / D * np.eye(D) + q * ghz(n).projector(), (2,) * n)


def dephasing_kraus(kappa_t: float) -> list[np.ndarray]:
    if kappa_t < 0:
        raise qla.ContractError("kappa_t must be nonnegative")
    p = 1 - math.exp(-kappa_t)
    Z = qla.PAULI["Z"]
    I = np.eye(2)
    return [math.sqrt(1 - p) * I, math.sqrt(p) / 2 * (I + Z), math.sqrt(p) / 2 * (I - Z)]


def dephase(rho, kappa_t: float) -> qla.DensityMatrix:
    """Independent dephasing of every qubit: coherences shrink by ``exp(-kappa_t)``
    per qubit whose row and column bits differ."""
    if kappa_t < 0:
        raise qla.ContractError("kappa_t must be nonnegative")
    state = rho if isinstance(rho, qla.DensityMatrix) else None
    m = np.asarray(getattr(rho, "matrix", rho))
    dims = state.dims if state is not None else (2,) * int(round(math.log2(m.shape[0])))
    if any(d != 2 for d in dims):
        raise qla.ContractError("dephasing is defined per qubit")
    idx = np.arange(m.shape[0])
    flips = np.vectorize(lambda v: bin(v).count("1"))(idx[:, None] ^ idx[None, :])
    return _dm(m * np.exp(-kappa_t * flips), dims)


def witnesses_ghz3(normalize: bool = True) -> tuple[ObservableSpec, ObservableSpec]:
    """Fidelity-based witnesses for genuine and for any multipartite entanglement."""
    rg = ghz(3).projector()
    rgm = ghz_minus(3).projector()
    I = np.eye(8)
    w_gme = I - 2 * rg
    w_me = I - 4 * rg + 2 * rgm
    if normalize:
        w_gme = w_gme / qla.spectral_norm_herm(w_gme)
        w_me = w_me / qla.spectral_norm_herm(w_me)
    return (ObservableSpec("W_GME", w_gme, normalized=normalize),
            ObservableSpec("W_ME", w_me, normalized=normalize))


def noisy_state(psi: qla.PureState, eps: float) -> qla.DensityMatrix:
    """``(1-eps)|psi><psi| + eps * I/d``."""
    if not 0 <= eps <= 1:
        raise qla.ContractError("eps must lie in [0, 1]")
    D = psi.amplitudes.size
    return _dm((1 - eps) * psi.projector() + eps * np.eye(D) / D, psi.dims)


def max_entangled() -> tuple[qla.PureState, qla.PureState]:
    """Qubit-qutrit and two-qutrit maximally entangled test states."""
    a = np.zeros(6, dtype=complex)
    a[1 * 3 + 0] = a[1 * 3 + 2] = 0.5
    a[0 * 3 + 1] = 1 / np.sqrt(2)
    b = np.zeros(9, dtype=complex)
    b[0] = b[4] = b[8] = 1 / np.sqrt(3)
    return qla.PureState(a, (2, 3)), qla.PureState(b, (3, 3))


def _apply_1q(psi: np.ndarray, n: int, q: int, U: np.ndarray) -> np.ndarray:
    t = psi.reshape((2,) * n)
    t = np.moveaxis(np.tensordot(U, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def cz_ring_phases(n: int) -> np.ndarray:
    """Diagonal of the product of controlled-Z gates on the ring ``(i, i+1 mod n)``."""
    bits = (np.arange(2 ** n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    parity = np.zeros(2 ** n, dtype=int)
    for i in range(n):
        parity += bits[:, i] & bits[:, (i + 1) % n]
    return np.where(parity % 2 == 0, 1.0, -1.0)


def wbp_circuit(n: int, depth: int, seed: int,
                theta_max: float = math.pi / 20) -> qla.PureState:
    """Layers of small random Pauli rotations followed by a periodic CZ ring,
    applied to ``|0...0>``."""
    if n < 3:
        raise qla.ContractError("the CZ ring needs at least three qubits")
    rng = np.random.default_rng(seed)
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1
    phases = cz_ring_phases(n)
    paulis = [qla.PAULI[k] for k in "XYZ"]
    for _ in range(depth):
        axes = rng.integers(0, 3, size=n)
        thetas = rng.uniform(-theta_max, theta_max, size=n)
        for q in range(n):
            # exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P
            U = math.cos(thetas[q] / 2) * np.eye(2) - 1j * math.sin(thetas[q] / 2) * paulis[axes[q]]
            psi = _apply_1q(psi, n, q, U)
        psi = psi * phases
    return qla.PureState.normalized(psi, (2,) * n)


def page_renyi2(d_a: int, d_b: int) -> float:
    """Haar-average purity of a ``d_a``-dimensional subsystem, as an entropy."""
    return -math.log((d_a + d_b) / (d_a * d_b + 1))


def renyi2_exact(psi: qla.PureState, region: Sequence[int]) -> float:
    rho_a = qla.reduced_from_pure(psi.amplitudes, psi.dims, region)
    return float(-np.log(np.real(np.vdot(rho_a, rho_a)))) + 0.0


def swap_operator(dims: Sequence[int]) -> ObservableSpec:
    return ObservableSpec("SWAP", swap_matrix(dims), factors=swap_terms(dims))


def pauli_klocal_set(n: int, k: int) -> list[ObservableSpec]:
    """Every Pauli string acting nontrivially on exactly ``k`` of ``n`` qubits."""
    if not 0 < k <= n:
        raise qla.ContractError("need 0 < k <= n")
    out = []
    for support in itertools.combinations(range(n), k):
        for letters in itertools.product("XYZ", repeat=k):
            label = ["I"] * n
            for q, ch in zip(support, letters):
                label[q] = ch
            label = "".join(label)
            factors = [None if ch == "I" else qla.PAULI[ch] for ch in label]
            out.append(ObservableSpec(label, qla.kron(*[qla.PAULI[ch] for ch in label]),
                                      factors=[(1.0, factors)], normalized=True))
    return out


def ghz_projector_terms(n: int) -> list:
    """``|GHZ><GHZ|`` as four product terms ``1/2 (|0><0|^n + |1><1|^n + |0><1|^n + |1><0|^n)``.

    The cross terms are combined into Hermitian products via
    ``|0><1|^n + |1><0|^n = 2^{1-n} sum`` over Pauli strings of ``X``/``Y`` with an
    even number of ``Y``; the diagonal part uses projector products.
    """
    P0 = np.diag([1, 0]).astype(complex)
    P1 = np.diag([0, 1]).astype(complex)
    terms = [(0.5, [P0] * n), (0.5, [P1] * n)]
    X, Y = qla.PAULI["X"], qla.PAULI["Y"]
    for ys in itertools.product([0, 1], repeat=n):
        k = sum(ys)
        if k % 2:
            continue
        coef = 0.5 * 2 ** (1 - n) * (-1) ** (k // 2)
        terms.append((coef, [Y if y else X for y in ys]))
    return terms
