import json
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qrpe import io, qla
from qrpe.estimators import swap_terms
from qrpe.reservoir import QUTRIT_SETTING, pair_effects
from qrpe.sampling import SnapshotSet, sample_snapshots
from qrpe.training import simulate_training, weights_dense, weights_factored


def test_dynamics_roundtrip(tmp_path, qubit_pd):
    io.save_dynamics(tmp_path / "d.npz", qubit_pd)
    back = io.load_dynamics(tmp_path / "d.npz")
    np.testing.assert_array_equal(back.effects, qubit_pd.effects)
    np.testing.assert_array_equal(back.tmat, qubit_pd.tmat)
    assert back.params == qubit_pd.params and back.kind == qubit_pd.kind


def test_training_roundtrip(tmp_path, qutrit_pd):
    td = simulate_training(qutrit_pd, mode="sampled", shots=100, rng=np.random.default_rng(0))
    io.save_training(tmp_path / "t.npz", td)
    back = io.load_training(tmp_path / "t.npz")
    np.testing.assert_array_equal(back.Xp, td.Xp)
    np.testing.assert_array_equal(back.Mp, td.Mp)
    assert back.mode == "sampled" and back.shots == 100


def test_weights_roundtrip(tmp_path, qubit_pd):
    dense = weights_dense(np.diag([1.0, -1, 0, 2]), [qubit_pd] * 2)
    fact = weights_factored(swap_terms([2]), [qubit_pd], copies=2)
    for w in (dense, fact):
        io.save_weights(tmp_path / "w.npz", w)
        back = io.load_weights(tmp_path / "w.npz")
        assert back.slot_dims == w.slot_dims and back.copies == w.copies
        np.testing.assert_array_equal(back.to_dense(), w.to_dense())


def test_wrong_archive_kind(tmp_path, qubit_pd):
    io.save_dynamics(tmp_path / "d.npz", qubit_pd)
    with pytest.raises(io.FormatError):
        io.load_weights(tmp_path / "d.npz")


def _snapshots(draw_dims, n, seed):
    rng = np.random.default_rng(seed)
    out = np.column_stack([rng.integers(0, d * d, n) for d in draw_dims]) if n else \
        np.zeros((0, len(draw_dims)))
    return SnapshotSet(out, tuple(draw_dims), seed=seed, source="test", meta={"k": 1})


@given(dims=st.lists(st.integers(2, 5), min_size=1, max_size=5), n=st.integers(0, 300),
       seed=st.integers(0, 2 ** 31))
def test_snapshot_bytes_roundtrip(dims, n, seed):
    ss = _snapshots(dims, n, seed)
    back = io.snapshots_from_bytes(io.snapshots_to_bytes(ss))
    np.testing.assert_array_equal(back.outcomes, ss.outcomes)
    assert back.dims == ss.dims and back.seed == seed and back.meta == {"k": 1}


def test_snapshot_layout_qubits():
    ss = SnapshotSet(np.array([[3, 1], [0, 2]]), (2, 2), seed=7)
    blob = io.snapshots_to_bytes(ss)
    assert blob[:4] == b"QRPS"
    version, hlen = struct.unpack("<HI", blob[4:10])
    assert version == 1
    header = json.loads(blob[10:10 + hlen])
    assert header["bits"] == [2, 2] and header["count"] == 2
    # 11 01 | 00 10 -> 0b11010010
    assert blob[10 + hlen:] == bytes([0b11010010])


def test_snapshot_layout_qutrit_padding():
    ss = SnapshotSet(np.array([[8]]), (3,))
    blob = io.snapshots_to_bytes(ss)
    hlen = struct.unpack("<HI", blob[4:10])[1]
    # 4 bits per qutrit outcome, zero padded to a byte: 1000 0000
    assert blob[10 + hlen:] == bytes([0b10000000])


def test_snapshot_format_errors():
    ss = SnapshotSet(np.array([[3, 1]]), (2, 2))
    blob = io.snapshots_to_bytes(ss)
    with pytest.raises(io.FormatError):
        io.snapshots_from_bytes(b"XXXX" + blob[4:])
    with pytest.raises(io.FormatError):
        io.snapshots_from_bytes(blob[:4] + struct.pack("<H", 9) + blob[6:])
    with pytest.raises(io.FormatError):
        io.snapshots_from_bytes(blob[:-1])
    bad = SnapshotSet(np.array([[15]]), (3,))
    with pytest.raises(io.FormatError):
        io.snapshots_from_bytes(io.snapshots_to_bytes(bad))


def test_snapshot_file_roundtrip(tmp_path, qubit_pd):
    ss = sample_snapshots(qla.haar_pure((2, 2), np.random.default_rng(0)), [qubit_pd] * 2,
                          1000, seed=3)
    io.save_snapshots(tmp_path / "s.qrs", ss)
    back = io.load_snapshots(tmp_path / "s.qrs")
    np.testing.assert_array_equal(back.outcomes, ss.outcomes)
    assert (tmp_path / "s.qrs").stat().st_size < 1000 * 2 * 2 // 8 + 400


def test_result_table_csv(tmp_path):
    t = io.ResultTable("demo", ["a", "b", "flag"], provenance={"z": 1, "seed": 5})
    t.add(1, 0.1, True)
    t.add(2, 1 / 3, False)
    with pytest.raises(qla.ContractError):
        t.add(1, 2)
    text = t.to_csv()
    lines = text.splitlines()
    assert lines[0] == "# seed: 5" and lines[1] == "# z: 1" and lines[2] == "a,b,flag"
    assert lines[4] == f"2,{1 / 3!r},0"
    path = t.write(tmp_path / "sub" / "demo.csv")
    prov, header, rows = io.read_csv(path)
    assert prov == {"seed": "5", "z": "1"} and header == ["a", "b", "flag"]
    assert float(rows[1][1]) == 1 / 3
    np.testing.assert_array_equal(t.column("a"), [1, 2])


def test_config_hash_is_canonical():
    a = io.config_hash({"x": 1, "y": [1, 2], "z": {"b": 1, "a": np.float64(2)}})
    b = io.config_hash({"z": {"a": 2.0, "b": 1}, "y": [1, 2], "x": 1})
    assert a == b and len(a) == 16
    assert a != io.config_hash({"x": 2})


def test_bosonic_dynamics_roundtrip(tmp_path):
    pd = pair_effects(QUTRIT_SETTING, d=3, kind="bosonic")
    io.save_dynamics(tmp_path / "q.npz", pd)
    back = io.load_dynamics(tmp_path / "q.npz")
    assert back.d == 3 and back.kind == "bosonic"
    np.testing.assert_array_equal(back.tmat_inv, pd.tmat_inv)
