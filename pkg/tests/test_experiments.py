import math

import numpy as np
import pytest

from qrpe import experiments as ex

SMALL = {
    "rand-fidelity": {"rand_fidelity": {"n_values": [1, 2], "n_states": 20,
                                        "epsilons": [0.2, 0.05]}},
    "esd": {"esd": {"q_points": 3, "kappa_t_points": 3, "n_snapshots": 300}},
    "pauli-local": {"pauli_local": {"n": 3, "k_values": [1, 2], "sample_sizes": [100, 400],
                                    "repeats": 3}},
    "ghz-fidelity": {"ghz_fidelity": {"k_values": [3], "sample_sizes": [200, 800],
                                      "repeats": 3}},
    "purity": {"purity": {"n_states": 30}},
    "wbp": {"wbp": {"n": 4, "depths": [0, 3], "n_snapshots": 300, "circuit_seeds": 2}},
    "vd": {"vd": {"eps": [0.2, 0.8], "n_snapshots": 400, "repeats": 2}},
    "time-scan": {"time_scan": {"t_points": 12, "n_states": 30}},
    "ptm": {"ptm": {"n_settings": 2, "n_states": 20, "j_max": 10}},
}

TABLES = {
    "rand-fidelity": ["rand-fidelity", "rand-fidelity-settings"],
    "esd": ["esd", "esd-crossings"],
    "pauli-local": ["pauli-local", "pauli-local-fit"],
    "ghz-fidelity": ["ghz-fidelity", "ghz-fidelity-fit"],
    "purity": ["purity"], "wbp": ["wbp"], "vd": ["vd"], "time-scan": ["time-scan"],
    "ptm": ["ptm"],
}


def _cfg(name):
    return {"experiment": name, **SMALL[name]}


@pytest.mark.parametrize("name", ex.EXPERIMENTS)
def test_runner_produces_tables(name):
    tables = ex.run_tables(_cfg(name), seed=5)
    assert [t.name for t in tables] == TABLES[name]
    for t in tables:
        assert t.rows
        assert t.provenance["experiment"] == name and t.provenance["seed"] == 5
        assert len(t.provenance["config_hash"]) == 16


@pytest.mark.parametrize("name", ["esd", "wbp", "ghz-fidelity"])
def test_csv_identical_across_threads(name, tmp_path):
    texts = []
    for threads in (1, 4):
        paths = ex.run(_cfg(name), seed=9, threads=threads, out=tmp_path / str(threads))
        texts.append([p.read_text() for p in paths])
    assert texts[0] == texts[1]


def test_seed_changes_results():
    a = ex.run_tables(_cfg("purity"), seed=1)[0].to_csv()
    b = ex.run_tables(_cfg("purity"), seed=2)[0].to_csv()
    assert a != b


def test_config_errors():
    with pytest.raises(ex.ConfigError):
        ex.resolve_config({"nonsense": 1})
    with pytest.raises(ex.ConfigError):
        ex.resolve_config({"esd": {"q_points": 1}})
    with pytest.raises(ex.ConfigError):
        ex.resolve_config({"reservoir": {"qubit": {"J": 1, "foo": 2}}})
    with pytest.raises(ex.ConfigError):
        ex.resolve_config({"experiment": "nope"})
    with pytest.raises(ex.ConfigError):
        ex.resolve_config({"esd": 3})


def test_hbar_override_reaches_both_reservoirs():
    cfg = ex.resolve_config({}, hbar=0.5)
    assert cfg["reservoir"]["qubit"]["hbar"] == 0.5
    assert cfg["reservoir"]["qudit"]["hbar"] == 0.5


def test_infeasible_requests_refused():
    with pytest.raises(ex.InfeasibleError):
        ex.run_tables({"experiment": "wbp", "wbp": {"n": 12}})
    with pytest.raises(ex.InfeasibleError):
        ex.run_tables({"experiment": "rand-fidelity", "max_memory_gb": 1e-6})


def test_first_crossing():
    x = np.linspace(0, 1, 5)
    assert ex.first_crossing(x, [-1, -0.5, 0.5, 1, 1]) == pytest.approx(0.375)
    assert ex.first_crossing(x, [0.1, 0.2, 0.3, 0.4, 0.5]) == 0.0
    assert ex.first_crossing(x, [-1, -1, -1, -1, -1]) == math.inf
    # a noisy dip is pooled by the increasing fit: (0.2 - 0.1) / 2 = 0.05 at x=0.5, 0.75
    assert ex.first_crossing(x, [-1, -0.5, 0.2, -0.1, 1]) == pytest.approx(0.25 + 0.25 * 0.5 / 0.55)


def test_fits():
    n = np.array([100, 400, 1600])
    slope, r2 = ex.power_law_fit(n, 3 / np.sqrt(n))
    assert slope == pytest.approx(-0.5) and r2 == pytest.approx(1)
    slope, r2 = ex.loglinear_fit([1, 2, 3], np.exp([0.2, 0.4, 0.6]))
    assert slope == pytest.approx(0.2) and r2 == pytest.approx(1)


def test_subseed_stable():
    assert ex.subseed(1, 2, 3) == ex.subseed(1, 2, 3)
    assert ex.subseed(1, 2, 3) != ex.subseed(1, 3, 2)


def test_time_scan_has_several_minima():
    t = ex.run_tables({"experiment": "time-scan", "time_scan": {"n_states": 200}}, seed=3)[0]
    f = np.asarray(t.column("mean_fres"), float)
    interior = (f[1:-1] < f[:-2]) & (f[1:-1] < f[2:])
    assert interior.sum() >= 2


def test_esd_crossings_table_shape():
    tables = ex.run_tables(_cfg("esd"), seed=1)
    cross = tables[1]
    assert cross.columns == ["q", "est_cross_wgme", "est_cross_wme", "exact_cross_wgme",
                             "exact_cross_wme"]
    assert len(cross.rows) == 3
