"""Variance bounds, sample-size planning and time multiplexing.

The single-snapshot variance bound of an observable is the largest eigenvalue
of ``B = sum_m w_m**2 T_m``: the operator whose readout weights are the squared
weights of the observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qrpe import qla
from qrpe.reservoir import PairDynamics, ReservoirParams, pair_effects, completeness_report
from qrpe.training import (TrainingData, WeightVector, recover_tp, weights_dense,
                           weight_row, _inverse, _local_dim)

LINEAR_CONSTANT = 68.0
QUADRATIC_CONSTANT = 544.0


def _tmat(tp) -> np.ndarray:
    return tp.tmat if isinstance(tp, PairDynamics) else np.asarray(tp)


def traceless_part(obs) -> np.ndarray:
    obs = qla.as_matrix(obs)
    D = obs.shape[0]
    return obs - np.trace(obs) / D * np.eye(D)


@dataclass
class VarianceBound:
    f_res: float
    b_operator: np.ndarray
    traceless_mode: bool = True


def b_operator(w: WeightVector, tp_list: Sequence) -> np.ndarray:
    """Dense ``B`` with ``<<B| T^-1 = W (.) W``."""
    slots = list(tp_list) * w.copies
    dims = [_local_dim(tp) for tp in slots]
    w2 = w.to_dense() ** 2
    vb = qla.apply_local(w2.astype(complex), [_tmat(tp).conj().T for tp in slots])
    B = qla.unvec_multi(vb, dims)
    return (B + B.conj().T) / 2


def b_operator_factored(w: WeightVector, tp_list: Sequence) -> np.ndarray:
    """``B`` assembled from per-subsystem pieces of a sum-of-products weight vector.

    ``W (.) W = sum_{i,i'} (x)_j (W_ij (.) W_i'j)`` so ``B`` is a sum of product
    operators ``(x)_j sum_m W_ij[m] W_i'j[m] T_m``.
    """
    if w.terms is None:
        raise qla.ContractError("factored weights required")
    slots = list(tp_list) * w.copies
    local = []
    for tp in slots:
        T = _tmat(tp)
        d = _local_dim(tp)
        local.append(T.conj().reshape(d * d, d, d))  # effect m = unvec(conj(row m))
    D = int(np.prod([_local_dim(tp) for tp in slots]))
    B = np.zeros((D, D), dtype=complex)
    for c1, rows1 in w.terms:
        for c2, rows2 in w.terms:
            ops = []
            for r1, r2, eff in zip(rows1, rows2, local):
                n = eff.shape[0]
                a = r1 if r1 is not None else np.ones(n)
                b = r2 if r2 is not None else np.ones(n)
                ops.append(np.tensordot(a * b, eff, axes=(0, 0)))
            B += c1 * c2 * qla.kron(*ops)
    return (B + B.conj().T) / 2


def _norm(B: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(B))))


def f_res(obs, tp_list: Sequence, traceless: bool = True) -> VarianceBound:
    """Worst-case single-snapshot variance bound of ``obs``."""
    obs = traceless_part(obs) if traceless else qla.check_hermitian(obs, 1e-9)
    w = weights_dense(obs, tp_list)
    B = b_operator(w, tp_list)
    return VarianceBound(_norm(B), B, traceless)


def f_res_weights(w: WeightVector, tp_list: Sequence) -> float:
    B = b_operator_factored(w, tp_list) if w.terms is not None else b_operator(w, tp_list)
    return _norm(B)


def local_b(factor, tp) -> np.ndarray:
    row = weight_row(factor, tp)
    d = _local_dim(tp)
    eff = _tmat(tp).conj().reshape(d * d, d, d)
    B = np.tensordot(row ** 2, eff, axes=(0, 0))
    return (B + B.conj().T) / 2


def f_res_klocal(local_obs: Sequence, tp_list: Sequence) -> float:
    """Product of per-subsystem bounds for a product observable (``None`` = identity)."""
    out = 1.0
    for f, tp in zip(local_obs, tp_list):
        if f is None:
            continue
        out *= _norm(local_b(f, tp))
    return out


def fres_batch_single(obs_stack: np.ndarray, tp) -> np.ndarray:
    """Bounds for a stack of one-subsystem observables ``(K, d, d)`` at once."""
    obs_stack = np.asarray(obs_stack, dtype=complex)
    K, d, _ = obs_stack.shape
    Tinv = _inverse(tp)
    W = obs_stack.reshape(K, d * d).conj() @ Tinv
    if np.max(np.abs(W.imag), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(W.real))):
        raise ArithmeticError("complex weights for a Hermitian observable")
    eff = _tmat(tp).conj().reshape(d * d, d, d)
    B = np.einsum("km,mij->kij", W.real ** 2, eff)
    B = (B + np.conj(np.swapaxes(B, 1, 2))) / 2
    return np.max(np.abs(np.linalg.eigvalsh(B)), axis=1)


def fidelity_observables(states: Sequence[qla.PureState], traceless: bool = True) -> np.ndarray:
    P = np.array([s.projector() for s in states])
    if traceless:
        D = P.shape[1]
        P = P - np.eye(D)[None] / D
    return P


def exact_variance(w: WeightVector, xbar: np.ndarray) -> float:
    v = w.to_dense()
    return float(np.dot(v * v, xbar) - np.dot(v, xbar) ** 2)


# -- quadratic estimators ---------------------------------------------------------

def a2_bound(obs2, tp_list: Sequence, xbar: np.ndarray) -> dict:
    """Upper bounds on the three variance pieces of an order-2 U-statistic.

    ``parts = [W(.)W . (X (x) X), X^T (W12 X)^2, (X^T W12)^2 X]`` evaluated at the
    single-copy readout distribution ``xbar``; ``a2 = max(parts[1], parts[2],
    sqrt(parts[0]))``.  ``obs2`` may be a two-copy observable or its weights.
    """
    w2 = obs2 if isinstance(obs2, WeightVector) else weights_dense(obs2, tp_list, copies=2)
    if w2.copies != 2:
        raise qla.ContractError("two-copy weights required")
    xbar = np.asarray(xbar, dtype=float)
    R = xbar.size
    W12 = w2.to_dense()
    if W12.size != R * R:
        raise qla.ContractError("readout distribution does not match the weights")
    W12 = W12.reshape(R, R)
    p0 = float(xbar @ (W12 ** 2) @ xbar)
    g1 = W12 @ xbar
    g2 = xbar @ W12
    p1 = float(xbar @ g1 ** 2)
    p2 = float(xbar @ g2 ** 2)
    return {"a2": max(p1, p2, math.sqrt(max(p0, 0.0))), "parts": (p0, p1, p2)}


def a2_exact(obs2, tp_list: Sequence, xbar: np.ndarray) -> dict:
    """The same three pieces as :func:`a2_bound`, but as exact variances."""
    w2 = obs2 if isinstance(obs2, WeightVector) else weights_dense(obs2, tp_list, copies=2)
    xbar = np.asarray(xbar, dtype=float)
    R = xbar.size
    W12 = w2.to_dense().reshape(R, R)
    mean = float(xbar @ W12 @ xbar)
    v0 = float(xbar @ (W12 ** 2) @ xbar) - mean ** 2
    g1, g2 = W12 @ xbar, xbar @ W12
    v1 = float(xbar @ g1 ** 2) - mean ** 2
    v2 = float(xbar @ g2 ** 2) - mean ** 2
    return {"a2": max(v1, v2, math.sqrt(max(v0, 0.0))), "parts": (v0, v1, v2)}


def a2_bound_worst_case(obs2, tp_list: Sequence) -> float:
    """State-independent (conservative) bound: every piece is at most ``max W**2``."""
    w2 = obs2 if isinstance(obs2, WeightVector) else weights_dense(obs2, tp_list, copies=2)
    m = float(np.max(w2.to_dense() ** 2))
    return max(m, math.sqrt(m))


# -- planning ----------------------------------------------------------------------

@dataclass(frozen=True)
class EstimationPlan:
    """Sample plan.  ``n_sample`` is the formula value; batches of ``batch_size``
    snapshots (``k_batches`` of them, ``n_total`` overall) cover it."""

    epsilon: float
    delta: float
    m_obs: int
    f_max: float
    n_sample: int
    k_batches: int
    batch_size: int

    @property
    def n_total(self) -> int:
        return self.k_batches * self.batch_size


def _check_plan_inputs(epsilon, delta, m_obs, f_max):
    if not (0 < epsilon < 1) or not (0 < delta < 1):
        raise qla.ContractError("epsilon and delta must lie in (0, 1)")
    if m_obs < 1:
        raise qla.ContractError("need at least one observable")
    if not f_max > 0:
        raise qla.ContractError("variance bound must be positive")


def n_batches(delta: float, m_obs: int) -> int:
    k = math.ceil(2 * math.log(2 * m_obs / delta))
    return k if k % 2 == 1 else k + 1


def _plan(constant, epsilon, delta, m_obs, f_max) -> EstimationPlan:
    _check_plan_inputs(epsilon, delta, m_obs, f_max)
    raw = constant / epsilon ** 2 * math.log(2 * m_obs / delta) * f_max
    n = math.ceil(raw - 1e-9 * raw)
    k = n_batches(delta, m_obs)
    return EstimationPlan(epsilon, delta, m_obs, f_max, n, k, -(-n // k))


def plan_linear(epsilon: float, delta: float, m_obs: int, f_max: float) -> EstimationPlan:
    """Median-of-means plan: ``N = 68 / eps**2 * ln(2M/delta) * f_max``."""
    return _plan(LINEAR_CONSTANT, epsilon, delta, m_obs, f_max)


def plan_quadratic(epsilon: float, delta: float, m_obs: int, a2_max: float) -> EstimationPlan:
    """Median of U-statistics plan: ``N = 544 / eps**2 * ln(2M/delta) * A2_max``."""
    return _plan(QUADRATIC_CONSTANT, epsilon, delta, m_obs, a2_max)


def raw_sample_size(constant, epsilon, delta, m_obs, f_max) -> float:
    return constant / epsilon ** 2 * math.log(2 * m_obs / delta) * f_max


# -- probabilistic time multiplexing -----------------------------------------------

@dataclass
class PTMDistribution:
    time_points: list
    probabilities: np.ndarray
    value: float = float("nan")
    vertex_values: list = field(default_factory=list)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise qla.ContractError("probabilities must be nonnegative and sum to 1")
        self.probabilities = p


def mix_training(td_list: Sequence[TrainingData], probs) -> TrainingData:
    X = sum(p * td.Xp for p, td in zip(probs, td_list))
    return TrainingData(td_list[0].d, X, td_list[0].Mp, "ptm")


def mix_dynamics(pds: Sequence[PairDynamics], probs) -> PairDynamics:
    """The POVM realised by picking evolution ``k`` with probability ``probs[k]``."""
    eff = sum(p * pd.effects for p, pd in zip(probs, pds))
    return PairDynamics.from_effects(eff, kind="ptm",
                                     provenance={"probabilities": list(map(float, probs))})


def _ptm_objective(td_list, probs, obs_stack, aggregate) -> float:
    T = recover_tp(mix_training(td_list, probs))
    vals = fres_batch_single(obs_stack, T)
    return float(np.max(vals) if aggregate == "max" else np.mean(vals))


def ptm_optimize(td_list: Sequence[TrainingData], obs_list, j_max: int, seed: int,
                 aggregate: str = "max", times: Sequence[float] | None = None) -> PTMDistribution:
    """Random search over time distributions for the smallest variance bound.

    Candidates are ``j_max`` uniform draws from the simplex plus every
    single-time vertex.  ``aggregate`` combines the bounds of ``obs_list``
    (single-subsystem observables) by ``"max"`` or ``"mean"``.
    """
    if len(td_list) < 2:
        raise qla.ContractError("time multiplexing needs at least two time points")
    if j_max < 1:
        raise qla.ContractError("j_max must be positive")
    obs_stack = np.asarray(obs_list, dtype=complex)
    if obs_stack.ndim == 2:
        obs_stack = obs_stack[None]
    k = len(td_list)
    rng = np.random.default_rng(seed)
    vertices = list(np.eye(k))
    candidates = vertices + list(rng.dirichlet(np.ones(k), size=j_max))
    best_p, best_v = None, math.inf
    vertex_values = []
    for idx, p in enumerate(candidates):
        try:
            v = _ptm_objective(td_list, p, obs_stack, aggregate)
        except np.linalg.LinAlgError:
            v = math.inf
        if idx < k:
            vertex_values.append(v)
        if v < best_v:
            best_p, best_v = p, v
    if best_p is None:
        raise np.linalg.LinAlgError("every candidate time distribution is singular")
    times = list(times) if times is not None else [
        td.provenance.get("params", {}).get("t", float("nan")) for td in td_list]
    return PTMDistribution(times, best_p / best_p.sum(), best_v, vertex_values)


def variance_time_scan(params: ReservoirParams, t_grid: Sequence[float], ensemble_size: int,
                       seed: int, kind: str = "qubit", d: int = 2,
                       cond_ceiling: float = 1e8) -> list[dict]:
    """Average traceless fidelity bound of Haar-random targets at every time in ``t_grid``.

    Points where the pair is not informationally complete are flagged and get
    ``nan`` instead of a value.
    """
    if len(t_grid) == 0:
        raise qla.ContractError("empty time grid")
    rng = np.random.default_rng(seed)
    targets = [qla.haar_pure((d,), rng) for _ in range(ensemble_size)]
    obs = fidelity_observables(targets)
    rows = []
    for t in t_grid:
        pd = pair_effects(params.with_(t=float(t)), d, kind)
        rep = completeness_report(pd, cond_ceiling)
        if not rep["invertible"]:
            rows.append({"t": float(t), "mean_fres": float("nan"), "flagged": True,
                         "cond": rep["cond"]})
            continue
        vals = fres_batch_single(obs, pd)
        rows.append({"t": float(t), "mean_fres": float(np.mean(vals)), "flagged": False,
                     "cond": rep["cond"]})
    return rows


def local_minima(values: Sequence[float]) -> list[int]:
    v = np.asarray(values, dtype=float)
    return [i for i in range(1, v.size - 1)
            if np.isfinite(v[i - 1:i + 2]).all() and v[i] < v[i - 1] and v[i] < v[i + 1]]
