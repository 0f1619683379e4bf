"""File formats for pipeline artifacts and result tables.

Pair dynamics, training data and weights are ``.npz`` archives holding plain
arrays plus a ``meta`` entry with a JSON document (``format``, ``version`` and
provenance).  Snapshot files use the binary layout below, all integers
little-endian::

    offset  size  content
    0       4     magic b"QRPS"
    4       2     uint16 format version (currently 1)
    6       4     uint32 header length H in bytes
    10      H     UTF-8 JSON header: dims, seed, source, count, bits, meta
    10+H    ...   packed outcomes

Each snapshot stores outcome ``m_i`` of subsystem ``i`` in
``bits[i] = ceil(log2(d_i**2))`` bits, most significant bit first.  Snapshot
records follow each other with no padding; the final byte is zero-padded.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qrpe import __version__, qla
from qrpe.reservoir import PairDynamics, ReservoirParams
from qrpe.sampling import SnapshotSet
from qrpe.training import TrainingData, WeightVector

SNAPSHOT_MAGIC = b"QRPS"
SNAPSHOT_VERSION = 1
NPZ_VERSION = 1


class FormatError(ValueError):
    """A file does not match the expected format or version."""


def _meta_array(meta: dict) -> np.ndarray:
    return np.array(json.dumps(meta, sort_keys=True))


def _read_meta(data, expected: str) -> dict:
    if "meta" not in data:
        raise FormatError("archive has no meta entry")
    meta = json.loads(str(data["meta"]))
    if meta.get("format") != expected:
        raise FormatError(f"expected a {expected} file, found {meta.get('format')!r}")
    if meta.get("version") != NPZ_VERSION:
        raise FormatError(f"unsupported {expected} version {meta.get('version')}")
    return meta


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# -- pair dynamics and training data --------------------------------------------

def save_dynamics(path, pd: PairDynamics) -> None:
    meta = {
        "format": "pair_dynamics", "version": NPZ_VERSION, "d": pd.d, "kind": pd.kind,
        "cond": pd.cond, "params": pd.params.to_dict() if pd.params else None,
        "provenance": _jsonable(pd.provenance), "toolkit": __version__,
    }
    with open(path, "wb") as fh:
        np.savez(fh, effects=pd.effects, tmat=pd.tmat, meta=_meta_array(meta))


def load_dynamics(path) -> PairDynamics:
    with np.load(path, allow_pickle=False) as data:
        meta = _read_meta(data, "pair_dynamics")
        effects = data["effects"]
    params = ReservoirParams(**meta["params"]) if meta["params"] else None
    return PairDynamics.from_effects(effects, params, meta["kind"], meta["provenance"])


def save_training(path, td: TrainingData) -> None:
    meta = {"format": "training_data", "version": NPZ_VERSION, "d": td.d, "mode": td.mode,
            "shots": td.shots, "provenance": _jsonable(td.provenance), "toolkit": __version__}
    with open(path, "wb") as fh:
        np.savez(fh, Xp=td.Xp, Mp=td.Mp, meta=_meta_array(meta))


def load_training(path) -> TrainingData:
    with np.load(path, allow_pickle=False) as data:
        meta = _read_meta(data, "training_data")
        return TrainingData(meta["d"], data["Xp"], data["Mp"], meta["mode"], meta["shots"],
                            meta["provenance"])


# -- weights --------------------------------------------------------------------

def save_weights(path, w: WeightVector, provenance: dict | None = None) -> None:
    meta = {"format": "weights", "version": NPZ_VERSION, "slot_dims": list(w.slot_dims),
            "copies": w.copies, "factored": w.terms is not None,
            "provenance": _jsonable(provenance or {}), "toolkit": __version__}
    arrays = {"meta": _meta_array(meta)}
    if w.terms is None:
        arrays["dense"] = w.dense
    else:
        arrays["coef"] = np.array([c for c, _ in w.terms], dtype=float)
        for j, d in enumerate(w.slot_dims):
            rows = np.ones((len(w.terms), d * d))
            mask = np.zeros(len(w.terms), dtype=bool)
            for k, (_, r) in enumerate(w.terms):
                if r[j] is not None:
                    rows[k] = r[j]
                    mask[k] = True
            arrays[f"rows_{j}"] = rows
            arrays[f"mask_{j}"] = mask
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_weights(path) -> WeightVector:
    with np.load(path, allow_pickle=False) as data:
        meta = _read_meta(data, "weights")
        dims = tuple(meta["slot_dims"])
        if not meta["factored"]:
            return WeightVector(dims, dense=data["dense"], copies=meta["copies"])
        coef = data["coef"]
        terms = []
        for k in range(coef.size):
            rows = [data[f"rows_{j}"][k] if data[f"mask_{j}"][k] else None
                    for j in range(len(dims))]
            terms.append((float(coef[k]), rows))
    return WeightVector(dims, terms=terms, copies=meta["copies"])


# -- snapshots ------------------------------------------------------------------

def _bits(dims) -> list[int]:
    return [max(1, int(np.ceil(np.log2(d * d)))) for d in dims]


def snapshots_to_bytes(ss: SnapshotSet) -> bytes:
    bits = _bits(ss.dims)
    header = json.dumps({
        "dims": list(ss.dims), "seed": ss.seed, "source": ss.source, "count": len(ss),
        "bits": bits, "meta": _jsonable(ss.meta),
    }, sort_keys=True).encode()
    x = ss.outcomes.astype(np.uint16)
    planes = []
    for j, b in enumerate(bits):
        shifts = np.arange(b - 1, -1, -1, dtype=np.uint16)
        planes.append(((x[:, j:j + 1] >> shifts) & 1).astype(np.uint8))
    stream = np.concatenate(planes, axis=1).reshape(-1) if planes else np.zeros(0, np.uint8)
    payload = np.packbits(stream, bitorder="big").tobytes()
    return (SNAPSHOT_MAGIC + struct.pack("<HI", SNAPSHOT_VERSION, len(header))
            + header + payload)


def snapshots_from_bytes(blob: bytes) -> SnapshotSet:
    if blob[:4] != SNAPSHOT_MAGIC:
        raise FormatError("not a snapshot file")
    version, hlen = struct.unpack("<HI", blob[4:10])
    if version != SNAPSHOT_VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    header = json.loads(blob[10:10 + hlen].decode())
    dims, bits, count = header["dims"], header["bits"], header["count"]
    if bits != _bits(dims):
        raise FormatError("bit widths do not match dims")
    width = sum(bits)
    raw = np.frombuffer(blob[10 + hlen:], dtype=np.uint8)
    stream = np.unpackbits(raw, bitorder="big")
    if stream.size < count * width:
        raise FormatError("payload is truncated")
    grid = stream[: count * width].reshape(count, width).astype(np.uint16)
    out = np.zeros((count, len(dims)), dtype=np.uint16)
    col = 0
    for j, b in enumerate(bits):
        for k in range(b):
            out[:, j] = (out[:, j] << 1) | grid[:, col + k]
        col += b
    if count and np.any(out >= np.array([d * d for d in dims])):
        raise FormatError("outcome index out of range")
    return SnapshotSet(out, tuple(dims), header["seed"], header["source"], header["meta"])


def save_snapshots(path, ss: SnapshotSet) -> None:
    Path(path).write_bytes(snapshots_to_bytes(ss))


def load_snapshots(path) -> SnapshotSet:
    return snapshots_from_bytes(Path(path).read_bytes())


# -- result tables --------------------------------------------------------------

def config_hash(config: dict) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ResultTable:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise qla.ContractError(f"{self.name}: expected {len(self.columns)} values")
        self.rows.append(list(values))

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def to_csv(self) -> str:
        buf = _io.StringIO()
        for k in sorted(self.provenance):
            buf.write(f"# {k}: {self.provenance[k]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return str(v)


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    prov, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            prov[key] = val
        else:
            lines.append(line)
    rows = list(csv.reader(lines))
    return prov, rows[0], rows[1:]
