"""Estimates from snapshots: sample mean, median of means, order-2 U-statistics,
second Renyi entropy and virtual distillation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qrpe import qla
from qrpe.sampling import SnapshotSet
from qrpe.training import WeightVector, weights_dense, weights_factored


class EstimationError(ArithmeticError):
    """An estimate cannot be formed from the available data."""


class NonPositivePurityError(EstimationError):
    def __init__(self, value: float):
        super().__init__(f"purity estimate {value:.4g} is not positive")
        self.value = value


class UnstableRatioError(EstimationError):
    def __init__(self, denominator: float, floor: float):
        super().__init__(f"denominator estimate {denominator:.4g} is below the floor {floor:g}")
        self.denominator = denominator


def _outcomes(ss) -> np.ndarray:
    return ss.outcomes if isinstance(ss, SnapshotSet) else np.atleast_2d(ss)


def single_estimate(w: WeightVector, snapshot) -> float:
    return float(w.evaluate(np.asarray(snapshot).reshape(1, -1))[0])


def snapshot_values(w: WeightVector, ss) -> np.ndarray:
    return w.evaluate(_outcomes(ss))


def sample_mean(w: WeightVector, ss) -> float:
    return float(np.mean(snapshot_values(w, ss)))


def median_of_means(values, k_batches: int) -> float:
    """Median of ``k_batches`` equal-size batch means; leftover values are dropped."""
    values = np.asarray(values, dtype=float)
    if k_batches < 1 or k_batches % 2 == 0:
        raise qla.ContractError("number of batches must be a positive odd integer")
    size = values.size // k_batches
    if size == 0:
        raise EstimationError(f"{values.size} values cannot fill {k_batches} batches")
    means = values[: size * k_batches].reshape(k_batches, size).mean(axis=1)
    return float(np.median(means))


def mom_estimate(w: WeightVector, ss, k_batches: int) -> float:
    return median_of_means(snapshot_values(w, ss), k_batches)


def _split_copies(w2: WeightVector):
    if w2.copies != 2:
        raise qla.ContractError("a two-copy weight vector is required")
    n = w2.n_slots // 2
    return n


def _factored_sums(w2: WeightVector, x: np.ndarray):
    """Per-term copy-1 values ``a`` and copy-2 values ``b`` for every snapshot."""
    n = _split_copies(w2)
    for coef, rows in w2.terms:
        a = np.full(x.shape[0], coef)
        b = np.ones(x.shape[0])
        for j in range(n):
            if rows[j] is not None:
                a = a * rows[j][x[:, j]]
            if rows[n + j] is not None:
                b = b * rows[n + j][x[:, j]]
        yield a, b


def _dense_pair_matrix(w2: WeightVector) -> np.ndarray:
    n = _split_copies(w2)
    R = int(np.prod(w2.outcome_shape[:n]))
    return w2.to_dense().reshape(R, R)


def ustat2_estimate(w2: WeightVector, ss, method: str = "auto") -> float:
    """``1/(N(N-1)) sum_{i != j} W . (X_i (x) X_j)``.

    Factored weights use ``(sum a)(sum b) - sum a*b`` per product term; dense
    weights use outcome counts.  ``method="pairwise"`` forces the explicit
    ``O(N**2)`` double loop over snapshot pairs.
    """
    x = _outcomes(ss).astype(np.int64)
    N = x.shape[0]
    if N < 2:
        raise EstimationError("a U-statistic of order 2 needs at least two snapshots")
    # canonical order makes the floating-point sums independent of snapshot order
    x = x[np.lexsort(x.T[::-1])]
    n = _split_copies(w2)
    if x.shape[1] != n:
        raise qla.ContractError("snapshot shape does not match the weights")
    if method == "pairwise":
        G = _dense_pair_matrix(w2)
        j = np.ravel_multi_index(x.T, w2.outcome_shape[:n])
        sub = G[np.ix_(j, j)]
        return float((sub.sum() - np.trace(sub)) / (N * (N - 1)))
    if w2.terms is not None and method in ("auto", "factored"):
        total = 0.0
        for a, b in _factored_sums(w2, x):
            total += a.sum() * b.sum() - np.dot(a, b)
        return float(total / (N * (N - 1)))
    G = _dense_pair_matrix(w2)
    j = np.ravel_multi_index(x.T, w2.outcome_shape[:n])
    c = np.bincount(j, minlength=G.shape[0]).astype(float)
    total = c @ G @ c - np.dot(c, np.diag(G))
    return float(total / (N * (N - 1)))


def ustat2_leave_one_out(w2: WeightVector, ss) -> np.ndarray:
    """U-statistic recomputed with each snapshot removed (length ``N``)."""
    x = _outcomes(ss).astype(np.int64)
    N = x.shape[0]
    if N < 3:
        raise EstimationError("leave-one-out needs at least three snapshots")
    n = _split_copies(w2)
    if w2.terms is not None:
        loo = np.zeros(N)
        for a, b in _factored_sums(w2, x):
            A, B, C = a.sum(), b.sum(), np.dot(a, b)
            loo += (A - a) * (B - b) - (C - a * b)
        return loo / ((N - 1) * (N - 2))
    G = _dense_pair_matrix(w2)
    j = np.ravel_multi_index(x.T, w2.outcome_shape[:n])
    c = np.bincount(j, minlength=G.shape[0]).astype(float)
    diag = np.diag(G)
    total = c @ G @ c - np.dot(c, diag)
    per_outcome = total - G @ c - G.T @ c + 2 * diag
    return per_outcome[j] / ((N - 1) * (N - 2))


def jackknife_se(loo: np.ndarray) -> float:
    N = loo.size
    return float(np.sqrt((N - 1) / N * np.sum((loo - loo.mean()) ** 2)))


def ustat_m_estimate(wm: WeightVector, ss, max_snapshots: int = 60) -> float:
    """Order-``m`` U-statistic by explicit summation over distinct ``m``-tuples."""
    m = wm.copies
    x = _outcomes(ss).astype(np.int64)
    N = x.shape[0]
    if N < m:
        raise EstimationError(f"need at least {m} snapshots")
    if N > max_snapshots:
        raise EstimationError(
            f"explicit order-{m} sum limited to {max_snapshots} snapshots, got {N}"
        )
    n = wm.n_slots // m
    R = int(np.prod(wm.outcome_shape[:n]))
    Wt = wm.to_dense().reshape((R,) * m)
    j = np.ravel_multi_index(x.T, wm.outcome_shape[:n])
    tuples = np.array(list(itertools.permutations(range(N), m)))
    vals = Wt[tuple(j[tuples[:, k]] for k in range(m))]
    return float(vals.sum() / len(tuples))


# -- two-copy observables -------------------------------------------------------

def swap_terms(dims: Sequence[int], region: Sequence[int] | None = None) -> list:
    """Factored terms of the swap operator between two copies on ``region``.

    Uses ``S = sum_a b_a (x) b_a`` per subsystem with an orthonormal Hermitian
    basis ``b_a``; subsystems outside ``region`` get the identity.
    """
    dims = list(dims)
    n = len(dims)
    region = list(range(n)) if region is None else sorted(region)
    bases = {i: qla.hermitian_basis(dims[i]) for i in region}
    terms = []
    for combo in itertools.product(*[range(len(bases[i])) for i in region]):
        f = [None] * n
        for i, a in zip(region, combo):
            f[i] = bases[i][a]
        terms.append((1.0, f + f))
    return terms


def swap_matrix(dims: Sequence[int]) -> np.ndarray:
    """Dense swap of two copies of a system with local ``dims``."""
    D = int(np.prod(dims))
    S = np.zeros((D * D, D * D))
    for i in range(D):
        for j in range(D):
            S[j * D + i, i * D + j] = 1
    return S


def cyclic_shift(D: int, m: int) -> np.ndarray:
    """Permutation ``|i_1 ... i_m> -> |i_m i_1 ... i_{m-1}>`` on ``m`` copies."""
    size = D ** m
    idx = np.arange(size).reshape((D,) * m)
    P = np.zeros((size, size))
    target = np.moveaxis(idx, -1, 0).reshape(-1)
    P[np.arange(size), target] = 1
    return P


def moment_observable(obs, m: int) -> np.ndarray:
    """Hermitian ``H`` with ``Tr(H rho^{(x)m}) = Tr(rho^m obs)``."""
    obs = qla.as_matrix(obs)
    D = obs.shape[0]
    C = cyclic_shift(D, m)
    A = C @ np.kron(obs, np.eye(D ** (m - 1)))
    return (A + A.conj().T) / 2


def purity_ustat(ss, tp_list, region: Sequence[int] | None = None) -> tuple[float, WeightVector]:
    dims = [int(round(np.sqrt(np.asarray(getattr(tp, "tmat", tp)).shape[0]))) for tp in tp_list]
    w2 = weights_factored(swap_terms(dims, region), tp_list, copies=2)
    return ustat2_estimate(w2, ss), w2


def renyi2(ss, region: Sequence[int], tp_list, max_region: int = 4) -> float:
    """Second Renyi entropy ``-ln Tr(rho_A^2)`` of ``region`` from snapshots."""
    if len(region) > max_region:
        raise qla.ContractError(f"region larger than {max_region} subsystems")
    purity, _ = purity_ustat(ss, tp_list, region)
    if purity <= 0:
        raise NonPositivePurityError(purity)
    return float(-np.log(purity))


@dataclass
class VDResult:
    value: float
    numerator: float
    denominator: float
    se: float | None = None


def vd_estimate(ss, target, tp_list, m: int = 2, floor: float = 1e-3,
                with_se: bool = False, max_snapshots: int = 60):
    """Virtually distilled fidelity ``Tr(rho^m P) / Tr(rho^m)`` with ``P`` the target projector.

    For ``m = 2`` both traces are order-2 U-statistics over all snapshots; for
    ``m >= 3`` the explicit distinct-tuple sum is used and capped at
    ``max_snapshots``.  Returns a float, or a :class:`VDResult` with a
    jackknife standard error when ``with_se`` is set (``m = 2`` only).
    """
    P = target.projector() if isinstance(target, qla.PureState) else qla.as_matrix(target)
    D = P.shape[0]
    num_obs = moment_observable(P, m)
    den_obs = moment_observable(np.eye(D), m)
    wn = weights_dense(num_obs, tp_list, copies=m)
    wd = weights_dense(den_obs, tp_list, copies=m)
    if m == 2:
        num = ustat2_estimate(wn, ss)
        den = ustat2_estimate(wd, ss)
    else:
        num = ustat_m_estimate(wn, ss, max_snapshots)
        den = ustat_m_estimate(wd, ss, max_snapshots)
    if den < floor:
        raise UnstableRatioError(den, floor)
    value = num / den
    if not with_se:
        return float(value)
    se = None
    if m == 2:
        loo = ustat2_leave_one_out(wn, ss) / ustat2_leave_one_out(wd, ss)
        se = jackknife_se(loo)
    return VDResult(float(value), float(num), float(den), se)


def exact_vd_fidelity(rho, target, m: int = 2) -> float:
    """``Tr(rho^m P) / Tr(rho^m)`` by direct matrix powers."""
    rho = np.asarray(getattr(rho, "matrix", rho))
    P = target.projector() if isinstance(target, qla.PureState) else np.asarray(target)
    rm = np.linalg.matrix_power(rho, m)
    return float(np.real(np.trace(rm @ P)) / np.real(np.trace(rm)))
