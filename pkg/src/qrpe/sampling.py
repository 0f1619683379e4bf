"""Measurement snapshots: exact readout distributions and Born-rule sampling.

Every snapshot records one outcome index ``0 .. d_i**2 - 1`` per subsystem.
Random numbers come from fixed-size chunks of snapshots, each chunk seeded by
``SeedSequence(seed, spawn_key=(chunk,))``, so results do not depend on how
many worker threads process the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qrpe import qla
from qrpe.reservoir import PairDynamics

DENSITY_CEILING = 2 ** 12
CHUNK = 4096


class DimensionError(qla.ContractError):
    """Requested simulation exceeds the configured size ceiling."""


@dataclass
class SnapshotSet:
    outcomes: np.ndarray
    dims: tuple[int, ...]
    seed: int | None = None
    source: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.outcomes = np.atleast_2d(np.asarray(self.outcomes, dtype=np.uint16))
        self.dims = tuple(int(d) for d in self.dims)
        if self.outcomes.shape[1] != len(self.dims):
            raise qla.ContractError("every snapshot needs one outcome per subsystem")

    def __len__(self) -> int:
        return self.outcomes.shape[0]

    @property
    def outcome_shape(self) -> tuple[int, ...]:
        return tuple(d * d for d in self.dims)

    def joint_indices(self) -> np.ndarray:
        return np.ravel_multi_index(self.outcomes.T.astype(np.int64), self.outcome_shape)

    def subset(self, idx) -> "SnapshotSet":
        return SnapshotSet(self.outcomes[idx], self.dims, self.seed, self.source, dict(self.meta))


def _dims_of(state) -> tuple[int, ...]:
    return tuple(state.dims)


def exact_distribution(state, pds: Sequence[PairDynamics],
                       ceiling: int = DENSITY_CEILING) -> np.ndarray:
    """Joint readout probabilities ``Tr[(T_{m_1} (x) ... (x) T_{m_n}) sigma]``.

    Returned flat, row-major over ``(m_1, ..., m_n)``.
    """
    dims = _dims_of(state)
    if len(pds) != len(dims) or any(pd.d != d for pd, d in zip(pds, dims)):
        raise qla.ContractError("one PairDynamics per subsystem with matching dimension")
    D = int(np.prod(dims))
    if D > ceiling:
        raise DimensionError(f"total dimension {D} exceeds ceiling {ceiling}")
    rho = state.dm().matrix
    p = np.real(qla.apply_local(qla.vec_multi(rho, dims), [pd.tmat for pd in pds]))
    p = np.clip(p, 0, None)
    return p / p.sum()


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _categorical(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, cdf.size - 1)


def _sequential_chunk(psi: np.ndarray, dims, kraus, u: np.ndarray) -> np.ndarray:
    """Collapse ``len(u)`` copies of ``psi`` subsystem by subsystem."""
    B = u.shape[0]
    n = len(dims)
    out = np.empty((B, n), dtype=np.uint16)
    S = np.broadcast_to(psi, (B, psi.size)).copy()
    for i, d in enumerate(dims):
        L = int(np.prod(dims[:i]))
        R = int(np.prod(dims[i + 1:]))
        S4 = S.reshape(B, L, d, R)
        phi = np.einsum("kab,nlbr->nklar", kraus[i], S4)
        probs = np.einsum("nklar,nklar->nk", phi, phi.conj()).real
        cdf = np.cumsum(probs, axis=1)
        choice = (cdf < (u[:, i] * cdf[:, -1])[:, None]).sum(axis=1)
        choice = np.minimum(choice, probs.shape[1] - 1)
        out[:, i] = choice
        sel = phi[np.arange(B), choice].reshape(B, -1)
        S = sel / np.sqrt(probs[np.arange(B), choice])[:, None]
    return out


def sample_snapshots(state, pds: Sequence[PairDynamics], n_samples: int, seed: int,
                     method: str = "auto", threads: int = 1,
                     ceiling: int = DENSITY_CEILING) -> SnapshotSet:
    """Draw ``n_samples`` snapshots of ``state`` measured through ``pds``.

    ``method`` is ``"exact"`` (categorical draws from :func:`exact_distribution`),
    ``"sequential"`` (pure states only; per-subsystem collapse with the principal
    square roots of the effects) or ``"auto"`` (exact when the density matrix
    fits under ``ceiling``, sequential otherwise).
    """
    dims = _dims_of(state)
    if len(pds) != len(dims):
        raise qla.ContractError("one PairDynamics per subsystem")
    D = int(np.prod(dims))
    pure = isinstance(state, qla.PureState)
    if method == "auto":
        method = "exact" if D <= ceiling else "sequential"
    if method == "sequential" and not pure:
        raise qla.ContractError("sequential collapse needs a pure state")
    if method == "sequential" and D > 2 ** 24:
        raise DimensionError(f"state dimension {D} too large to hold in memory")

    n_chunks = -(-n_samples // CHUNK)
    if method == "exact":
        cdf = np.cumsum(exact_distribution(state, pds, ceiling))
        shape = tuple(d * d for d in dims)

        def work(c):
            size = min(CHUNK, n_samples - c * CHUNK)
            u = _chunk_rng(seed, c).random(size)
            return np.stack(np.unravel_index(_categorical(cdf, u), shape), axis=1)
    elif method == "sequential":
        kraus = [pd.kraus() for pd in pds]
        psi = state.amplitudes
        sub = max(1, min(CHUNK, 2 ** 20 // (D * max(pd.n_outcomes for pd in pds))))

        def work(c):
            size = min(CHUNK, n_samples - c * CHUNK)
            u = _chunk_rng(seed, c).random((size, len(dims)))
            parts = [_sequential_chunk(psi, dims, kraus, u[a:a + sub])
                     for a in range(0, size, sub)]
            return np.concatenate(parts, axis=0)
    else:
        raise qla.ContractError(f"unknown sampling method {method!r}")

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]
    outcomes = (np.concatenate(parts, axis=0) if parts
                else np.zeros((0, len(dims)), dtype=np.uint16))
    return SnapshotSet(outcomes, dims, seed, f"{type(state).__name__}/{method}")
