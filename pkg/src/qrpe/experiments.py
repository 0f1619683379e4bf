"""Configurable numerical experiments that emit CSV result tables.

A configuration is a nested dict (usually loaded from YAML) with top-level
keys ``experiment``, ``seed``, ``out``, ``threads``, ``max_memory_gb``,
``reservoir`` and one section per experiment.  Missing keys fall back to
:data:`DEFAULTS`; unknown keys are rejected.
"""

from __future__ import annotations

import copy
import math
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import isotonic_regression

from qrpe import __version__, analysis as an, estimators as es, qla, sampling as sp
from qrpe import shadows as sh, statelib as sl, training as tr
from qrpe.io import ResultTable, config_hash
from qrpe.reservoir import (HBAR_MEV_PS, QUBIT_SETTING, QUTRIT_SETTING, ReservoirParams,
                            dynamics_for_dims, pair_effects)

EXPERIMENTS = ("rand-fidelity", "esd", "pauli-local", "ghz-fidelity", "purity", "wbp",
               "vd", "time-scan", "ptm")


def _params_dict(p: ReservoirParams) -> dict:
    return {k: v for k, v in p.to_dict().items()}


DEFAULTS = {
    "experiment": "rand-fidelity",
    "seed": 2024,
    "out": "results",
    "threads": 1,
    "max_memory_gb": 4.0,
    "reservoir": {"qubit": _params_dict(QUBIT_SETTING), "qudit": _params_dict(QUTRIT_SETTING),
                  "hybrid_bosonic": False},
    "rand_fidelity": {"n_values": [1, 2, 3, 4], "n_states": 1000,
                      "epsilons": [0.2, 0.1, 0.05, 0.02, 0.01], "delta": 0.1},
    "esd": {"q_points": 21, "kappa_t_max": 2.0, "kappa_t_points": 21, "n_snapshots": 6000},
    "pauli_local": {"n": 4, "k_values": [1, 2, 3, 4],
                    "sample_sizes": [250, 500, 1000, 2000, 4000, 8000, 16000],
                    "repeats": 30},
    "ghz_fidelity": {"k_values": [3, 6],
                     "sample_sizes": [500, 1000, 2000, 4000, 8000, 16000, 32000],
                     "repeats": 50},
    "purity": {"n_states": 10000, "hbar_values": [1.0, HBAR_MEV_PS]},
    "wbp": {"n": 8, "region": [0, 1], "depths": [0, 1, 2, 4, 6, 8, 10, 15, 20, 30, 40, 50, 60],
            "n_snapshots": 2000, "circuit_seeds": 5, "theta_max": math.pi, "max_qubits": 10},
    "vd": {"eps": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], "n_snapshots": 10000,
           "repeats": 10, "m": 2},
    "time_scan": {"t_max": 5.5, "t_points": 110, "n_states": 1000},
    "ptm": {"n_settings": 50, "times": [1.0, 10.0], "n_states": 300, "j_max": 100,
            "param_low": 0.0, "param_high": 5.0, "aggregate": "mean"},
}


class ConfigError(qla.ContractError):
    """The configuration is incomplete, has unknown keys or out-of-range values."""


class InfeasibleError(MemoryError):
    """A requested simulation would exceed the memory budget."""


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and k != "qubit" and k != "qudit":
            if not isinstance(v, dict):
                raise ConfigError(f"{path + k} must be a section")
            out[k] = _merge(base[k], v, path + k + ".")
        elif k in ("qubit", "qudit"):
            unknown = set(v) - set(base[k])
            if unknown:
                raise ConfigError(f"unknown reservoir parameters {sorted(unknown)}")
            out[k] = {**base[k], **v}
        else:
            out[k] = v
    return out


def resolve_config(config: dict | None = None, **overrides) -> dict:
    """Defaults merged with ``config`` and keyword overrides (``seed``, ``out``,
    ``threads``, ``hbar``), then validated."""
    cfg = _merge(DEFAULTS, config or {})
    for key in ("seed", "out", "threads"):
        if overrides.get(key) is not None:
            cfg[key] = overrides[key]
    if overrides.get("hbar") is not None:
        cfg["reservoir"]["qubit"]["hbar"] = float(overrides["hbar"])
        cfg["reservoir"]["qudit"]["hbar"] = float(overrides["hbar"])
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    if cfg["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg['experiment']!r}; choose from {EXPERIMENTS}")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a nonnegative integer")
    if int(cfg["threads"]) < 1:
        raise ConfigError("threads must be positive")
    for kind in ("qubit", "qudit"):
        try:
            ReservoirParams(**cfg["reservoir"][kind])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"reservoir.{kind}: {exc}") from exc
    checks = {
        "esd.n_snapshots": cfg["esd"]["n_snapshots"] >= 1,
        "esd.q_points": cfg["esd"]["q_points"] >= 2,
        "esd.kappa_t_points": cfg["esd"]["kappa_t_points"] >= 2,
        "esd.kappa_t_max": cfg["esd"]["kappa_t_max"] > 0,
        "rand_fidelity.n_values": all(1 <= n <= 6 for n in cfg["rand_fidelity"]["n_values"]),
        "rand_fidelity.epsilons": all(0 < e < 1 for e in cfg["rand_fidelity"]["epsilons"]),
        "rand_fidelity.delta": 0 < cfg["rand_fidelity"]["delta"] < 1,
        "pauli_local.k_values": all(1 <= k <= cfg["pauli_local"]["n"]
                                    for k in cfg["pauli_local"]["k_values"]),
        "ghz_fidelity.k_values": all(k >= 2 for k in cfg["ghz_fidelity"]["k_values"]),
        "wbp.n": cfg["wbp"]["n"] >= 3,
        "wbp.region": all(0 <= i < cfg["wbp"]["n"] for i in cfg["wbp"]["region"]),
        "wbp.depths": all(d >= 0 for d in cfg["wbp"]["depths"]),
        "vd.eps": all(0 <= e <= 1 for e in cfg["vd"]["eps"]),
        "vd.m": cfg["vd"]["m"] >= 2,
        "time_scan.t_max": cfg["time_scan"]["t_max"] > 0,
        "ptm.times": len(cfg["ptm"]["times"]) >= 2,
        "ptm.aggregate": cfg["ptm"]["aggregate"] in ("max", "mean"),
    }
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        raise ConfigError(f"out-of-range config values: {', '.join(bad)}")


# -- memory estimates ---------------------------------------------------------------

def state_memory_bytes(dims, exact: bool | None = None, dense_weights: bool = True) -> int:
    """Rough peak memory of sampling ``dims`` and evaluating dense weights.

    ``exact=None`` follows the automatic choice of :func:`sampling.sample_snapshots`.
    """
    D = int(np.prod(dims))
    R = int(np.prod([d * d for d in dims]))
    if exact is None:
        exact = D <= sp.DENSITY_CEILING
    total = 16 * D * D if exact else 16 * (D + 2 ** 22)
    total += 16 * R if exact else 0
    if dense_weights:
        total += 8 * R * 2
    return total


def memory_estimate(cfg: dict) -> int:
    name = cfg["experiment"]
    if name == "esd":
        return state_memory_bytes((2, 2, 2))
    if name == "pauli-local":
        return state_memory_bytes((2,) * cfg["pauli_local"]["n"], dense_weights=False)
    if name == "ghz-fidelity":
        return max(state_memory_bytes((2,) * k, dense_weights=False)
                   for k in cfg["ghz_fidelity"]["k_values"])
    if name == "wbp":
        return state_memory_bytes((2,) * cfg["wbp"]["n"], dense_weights=False)
    if name == "rand-fidelity":
        n = max(cfg["rand_fidelity"]["n_values"])
        return 16 * 16 ** n + 16 * 6 ** n * 4
    if name == "vd":
        return state_memory_bytes((3, 3, 3, 3))
    return 1 << 20


def check_feasible(cfg: dict) -> int:
    need = memory_estimate(cfg)
    limit = float(cfg["max_memory_gb"]) * 2 ** 30
    if need > limit:
        raise InfeasibleError(
            f"{cfg['experiment']} needs about {need / 2 ** 30:.2f} GiB, "
            f"over the {cfg['max_memory_gb']} GiB budget"
        )
    if cfg["experiment"] == "wbp" and cfg["wbp"]["n"] > cfg["wbp"]["max_qubits"]:
        raise InfeasibleError(
            f"wbp with n={cfg['wbp']['n']} exceeds the configured cap of "
            f"{cfg['wbp']['max_qubits']} qubits (about "
            f"{state_memory_bytes((2,) * cfg['wbp']['n'], dense_weights=False) / 2 ** 30:.2f} GiB)"
        )
    return need


# -- helpers ---------------------------------------------------------------------

def subseed(seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _qubit_params(cfg) -> ReservoirParams:
    return ReservoirParams(**cfg["reservoir"]["qubit"])


def _qudit_params(cfg) -> ReservoirParams:
    return ReservoirParams(**cfg["reservoir"]["qudit"])


def _provenance(cfg: dict, extra: dict | None = None) -> dict:
    run_only = ("out", "threads")
    p = {"experiment": cfg["experiment"],
         "config_hash": config_hash({k: v for k, v in cfg.items() if k not in run_only}),
         "seed": cfg["seed"], "toolkit": f"qrpe {__version__}",
         "hbar_qubit": cfg["reservoir"]["qubit"]["hbar"],
         "hbar_qudit": cfg["reservoir"]["qudit"]["hbar"]}
    p.update(extra or {})
    return p


def first_crossing(x, y) -> float:
    """Smallest ``x`` where the increasing (isotonic) fit of ``y`` reaches zero.

    Returns ``0.0`` if the fit starts nonnegative and ``inf`` if it never
    reaches zero.
    """
    x = np.asarray(x, dtype=float)
    fit = isotonic_regression(np.asarray(y, dtype=float), increasing=True).x
    if fit[0] >= 0:
        return 0.0
    idx = np.nonzero(fit >= 0)[0]
    if idx.size == 0:
        return math.inf
    i = idx[0]
    x0, x1, y0, y1 = x[i - 1], x[i], fit[i - 1], fit[i]
    return float(x0 + (x1 - x0) * (-y0) / (y1 - y0))


def loglinear_fit(x, y) -> tuple[float, float]:
    """Slope and ``R**2`` of ``log(y)`` against ``x``."""
    lx, ly = np.asarray(x, float), np.log(np.asarray(y, float))
    slope, icept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icept)
    r2 = 1 - resid.var() / ly.var() if ly.var() > 0 else 1.0
    return float(slope), float(r2)


def power_law_fit(n, err) -> tuple[float, float]:
    """Slope and ``R**2`` of ``log(err)`` against ``log(n)``."""
    return loglinear_fit(np.log(np.asarray(n, float)), err)


# -- experiments -------------------------------------------------------------------

def exp_rand_fidelity(cfg) -> list[ResultTable]:
    c = cfg["rand_fidelity"]
    pd = pair_effects(_qubit_params(cfg))
    rng = np.random.default_rng(subseed(cfg["seed"], 0))
    main = ResultTable("rand-fidelity",
                       ["n", "n_states", "mean_fres", "mean_shadow_bound", "ratio"])
    settings = ResultTable("rand-fidelity-settings",
                           ["n", "epsilon", "shadow_samples", "shadow_settings",
                            "shadow_distinct_settings", "qrpe_settings"])
    ratios = []
    for n in c["n_values"]:
        q, s = [], []
        for _ in range(c["n_states"]):
            O = qla.haar_pure((2,) * n, rng).projector()
            q.append(an.f_res(O, [pd] * n).f_res)
            s.append(sh.shadow_worst_case_bound(O))
        mq, ms = float(np.mean(q)), float(np.mean(s))
        ratios.append(mq / ms)
        main.add(n, c["n_states"], mq, ms, mq / ms)
        for eps in c["epsilons"]:
            # per-snapshot shadow variance taken as a tenth of the shadow norm
            plan = an.plan_linear(eps, c["delta"], 1, ms / 10)
            # every randomized Pauli snapshot invokes a freshly drawn setting
            settings.add(n, eps, plan.n_total, plan.n_total,
                         sh.expected_distinct_settings(n, plan.n_total), 1)
    spread = max(ratios) / min(ratios) - 1
    main.provenance = _provenance(cfg, {"ratio_spread": spread})
    settings.provenance = _provenance(cfg, {"variance_assumption": "shadow_norm/10",
                                            "settings": "one random setting per snapshot",
                                            "confidence": 1 - c["delta"]})
    return [main, settings]


def exp_esd(cfg) -> list[ResultTable]:
    c = cfg["esd"]
    pds = [pair_effects(_qubit_params(cfg))] * 3
    wg, wm = sl.witnesses_ghz3()
    Wg = tr.weights_dense(wg.matrix, pds)
    Wm = tr.weights_dense(wm.matrix, pds)
    qs = np.linspace(0, 1, c["q_points"])
    kts = np.linspace(0, c["kappa_t_max"], c["kappa_t_points"])
    table = ResultTable("esd", ["q", "kappa_t", "est_wgme", "est_wme", "exact_wgme",
                                "exact_wme", "n_snapshots"])
    for i, q in enumerate(qs):
        for j, kt in enumerate(kts):
            rho = sl.dephase(sl.ghz_type(float(q)), float(kt))
            ss = sp.sample_snapshots(rho, pds, c["n_snapshots"], subseed(cfg["seed"], 1, i, j),
                                     threads=int(cfg["threads"]))
            table.add(float(q), float(kt),
                      es.sample_mean(Wg, ss), es.sample_mean(Wm, ss),
                      float(np.real(np.trace(wg.matrix @ rho.matrix))),
                      float(np.real(np.trace(wm.matrix @ rho.matrix))), c["n_snapshots"])
    err = np.abs(np.c_[table.column("est_wgme") - table.column("exact_wgme"),
                       table.column("est_wme") - table.column("exact_wme")])
    table.provenance = _provenance(cfg, {"estimator": "sample mean",
                                         "max_error_wgme": float(err[:, 0].max()),
                                         "max_error_wme": float(err[:, 1].max())})
    cross = ResultTable("esd-crossings", ["q", "est_cross_wgme", "est_cross_wme",
                                          "exact_cross_wgme", "exact_cross_wme"])
    for q in qs:
        rows = [r for r in table.rows if r[0] == float(q)]
        kt = [r[1] for r in rows]
        cross.add(float(q), first_crossing(kt, [r[2] for r in rows]),
                  first_crossing(kt, [r[3] for r in rows]),
                  first_crossing(kt, [r[4] for r in rows]),
                  first_crossing(kt, [r[5] for r in rows]))
    cross.provenance = _provenance(cfg, {"crossing": "isotonic fit reaches zero"})
    return [table, cross]


def _pauli_rows(pd) -> dict:
    return {ch: tr.weight_row(qla.PAULI[ch], pd) for ch in "XYZ"}


def exp_pauli_local(cfg) -> list[ResultTable]:
    c = cfg["pauli_local"]
    n = c["n"]
    pd = pair_effects(_qubit_params(cfg))
    rows = _pauli_rows(pd)
    rng = np.random.default_rng(subseed(cfg["seed"], 2))
    sizes = sorted(c["sample_sizes"])
    labels = {k: [o.name for o in sl.pauli_klocal_set(n, k)] for k in c["k_values"]}
    err = {(k, N): [] for k in c["k_values"] for N in sizes}
    for r in range(c["repeats"]):
        psi = qla.haar_pure((2,) * n, rng)
        rho = psi.projector()
        ss = sp.sample_snapshots(psi, [pd] * n, sizes[-1], subseed(cfg["seed"], 2, r),
                                 threads=int(cfg["threads"]))
        x = ss.outcomes.astype(np.int64)
        site = {ch: np.stack([rows[ch][x[:, q]] for q in range(n)]) for ch in "XYZ"}
        for k, labs in labels.items():
            for lab in labs:
                v = np.ones(x.shape[0])
                for q, ch in enumerate(lab):
                    if ch != "I":
                        v = v * site[ch][q]
                exact = float(np.real(np.trace(qla.kron(*[qla.PAULI[ch] for ch in lab]) @ rho)))
                csum = np.cumsum(v)
                for N in sizes:
                    err[(k, N)].append(abs(csum[N - 1] / N - exact))
    fres = {}
    for k, labs in labels.items():
        fres[k] = float(np.mean([an.f_res_klocal(
            [qla.PAULI[ch] if ch != "I" else None for ch in lab], [pd] * n) for lab in labs]))
    table = ResultTable("pauli-local", ["k", "n_snapshots", "mean_error", "mean_fres"])
    for k in c["k_values"]:
        for N in sizes:
            table.add(k, N, float(np.mean(err[(k, N)])), fres[k])
    fit = ResultTable("pauli-local-fit", ["k", "error_slope", "error_r2", "mean_fres"])
    for k in c["k_values"]:
        slope, r2 = power_law_fit(sizes, [np.mean(err[(k, N)]) for N in sizes])
        fit.add(k, slope, r2, fres[k])
    ks = list(c["k_values"])
    gslope, gr2 = loglinear_fit(ks, [fres[k] for k in ks]) if len(ks) > 1 else (0.0, 1.0)
    meta = {"n_qubits": n, "repeats": c["repeats"], "fres_growth_per_k": math.exp(gslope),
            "fres_loglinear_r2": gr2}
    table.provenance = _provenance(cfg, meta)
    fit.provenance = _provenance(cfg, meta)
    return [table, fit]


def exp_ghz_fidelity(cfg) -> list[ResultTable]:
    c = cfg["ghz_fidelity"]
    pd = pair_effects(_qubit_params(cfg))
    sizes = sorted(c["sample_sizes"])
    table = ResultTable("ghz-fidelity", ["k", "n_snapshots", "mean_error", "fres_product",
                                         "fres_dense"])
    fits = ResultTable("ghz-fidelity-fit", ["k", "error_slope", "error_r2"])
    for k in c["k_values"]:
        psi = sl.ghz(k)
        w = tr.weights_factored(sl.ghz_projector_terms(k), [pd] * k)
        fp = an.f_res_weights(w, [pd] * k)
        fd = an.f_res(psi.projector(), [pd] * k, traceless=False).f_res if k <= 6 else float("nan")
        errs = np.zeros((c["repeats"], len(sizes)))
        for r in range(c["repeats"]):
            ss = sp.sample_snapshots(psi, [pd] * k, sizes[-1], subseed(cfg["seed"], 3, k, r),
                                     threads=int(cfg["threads"]))
            csum = np.cumsum(w.evaluate(ss.outcomes))
            errs[r] = [abs(csum[N - 1] / N - 1.0) for N in sizes]
        mean = errs.mean(axis=0)
        for N, e in zip(sizes, mean):
            table.add(k, N, float(e), fp, fd)
        fits.add(k, *power_law_fit(sizes, mean))
    table.provenance = _provenance(cfg, {"repeats": c["repeats"], "fres_mode": "raw"})
    fits.provenance = table.provenance
    return [table, fits]


def exp_purity(cfg) -> list[ResultTable]:
    c = cfg["purity"]
    table = ResultTable("purity", ["hbar", "n_states", "mean_a2_bound", "mean_a2_exact", "cond"])
    S = sl.swap_operator([2]).matrix
    for h in c["hbar_values"]:
        pd = pair_effects(_qubit_params(cfg).with_(hbar=float(h)))
        w2 = tr.weights_dense(S, [pd], copies=2)
        rng = np.random.default_rng(subseed(cfg["seed"], 4))
        b, e = [], []
        for _ in range(c["n_states"]):
            psi = qla.haar_pure((2,), rng)
            xbar = sp.exact_distribution(psi, [pd])
            b.append(an.a2_bound(w2, [pd], xbar)["a2"])
            e.append(an.a2_exact(w2, [pd], xbar)["a2"])
        table.add(float(h), c["n_states"], float(np.mean(b)), float(np.mean(e)), pd.cond)
    table.provenance = _provenance(cfg, {"observable": "SWAP on one qubit",
                                         "ensemble": "Haar pure"})
    return [table]


def exp_wbp(cfg) -> list[ResultTable]:
    c = cfg["wbp"]
    n, region = c["n"], list(c["region"])
    pd = pair_effects(_qubit_params(cfg))
    dA = 2 ** len(region)
    page = sl.page_renyi2(dA, 2 ** n // dA)
    w2 = tr.weights_factored(es.swap_terms([2] * n, region), [pd] * n, copies=2)
    table = ResultTable("wbp", ["depth", "circuit_seed", "est_s2", "se_s2", "exact_s2", "page"])
    for depth in c["depths"]:
        for s in range(c["circuit_seeds"]):
            psi = sl.wbp_circuit(n, depth, subseed(cfg["seed"], 5, s), theta_max=c["theta_max"])
            ss = sp.sample_snapshots(psi, [pd] * n, c["n_snapshots"],
                                     subseed(cfg["seed"], 5, s, depth),
                                     threads=int(cfg["threads"]))
            pur = es.ustat2_estimate(w2, ss)
            se = es.jackknife_se(es.ustat2_leave_one_out(w2, ss))
            est = -math.log(pur) if pur > 0 else float("nan")
            table.add(depth, s, est, se / pur if pur > 0 else float("nan"),
                      sl.renyi2_exact(psi, region), page)
    table.provenance = _provenance(cfg, {"n_qubits": n, "qubit_cap": c["max_qubits"],
                                         "region": " ".join(map(str, region)),
                                         "theta_max": c["theta_max"]})
    return [table]


def exp_vd(cfg) -> list[ResultTable]:
    c = cfg["vd"]
    qp, dp = _qubit_params(cfg), _qudit_params(cfg)
    table = ResultTable("vd", ["state", "eps", "repeat", "est", "se", "exact"])
    for si, psi in enumerate(sl.max_entangled()):
        pds = dynamics_for_dims(psi.dims, qp, dp, cfg["reservoir"]["hybrid_bosonic"])
        name = "x".join(map(str, psi.dims))
        for ei, eps in enumerate(c["eps"]):
            rho = sl.noisy_state(psi, float(eps))
            exact = es.exact_vd_fidelity(rho, psi, c["m"])
            for r in range(c["repeats"]):
                ss = sp.sample_snapshots(rho, pds, c["n_snapshots"],
                                         subseed(cfg["seed"], 6, si, ei, r),
                                         threads=int(cfg["threads"]))
                try:
                    if c["m"] == 2:
                        res = es.vd_estimate(ss, psi, pds, 2, with_se=True)
                        est, se = res.value, res.se
                    else:
                        est, se = es.vd_estimate(ss, psi, pds, c["m"]), float("nan")
                except es.UnstableRatioError:
                    est, se = float("nan"), float("nan")
                table.add(name, float(eps), r, est, se, exact)
    table.provenance = _provenance(cfg, {"m": c["m"], "noise": "eps * I/d"})
    return [table]


def exp_time_scan(cfg) -> list[ResultTable]:
    c = cfg["time_scan"]
    t = np.linspace(c["t_max"] / c["t_points"], c["t_max"], c["t_points"])
    rows = an.variance_time_scan(_qubit_params(cfg), t, c["n_states"], subseed(cfg["seed"], 7))
    table = ResultTable("time-scan", ["t", "mean_fres", "flagged", "cond"])
    for r in rows:
        table.add(r["t"], r["mean_fres"], bool(r["flagged"]), r["cond"])
    minima = an.local_minima([r["mean_fres"] for r in rows])
    table.provenance = _provenance(cfg, {"local_minima": len(minima),
                                         "minima_t": " ".join(f"{t[i]:.3f}" for i in minima)})
    return [table]


def exp_ptm(cfg) -> list[ResultTable]:
    c = cfg["ptm"]
    hbar = cfg["reservoir"]["qubit"]["hbar"]
    rng = np.random.default_rng(subseed(cfg["seed"], 8))
    obs = an.fidelity_observables([qla.haar_pure((2,), rng) for _ in range(c["n_states"])])
    times = list(c["times"])
    cols = (["setting", "J", "P1", "P2", "E1", "E2"] + [f"fres_t{k}" for k in range(len(times))]
            + ["fres_ptm"] + [f"p_t{k}" for k in range(len(times))])
    table = ResultTable("ptm", cols)
    for i in range(c["n_settings"]):
        vals = rng.uniform(c["param_low"], c["param_high"], 5)
        p = ReservoirParams(*vals, hbar=hbar)
        tds = [tr.simulate_training(pair_effects(p.with_(t=float(t)))) for t in times]
        res = an.ptm_optimize(tds, obs, c["j_max"], subseed(cfg["seed"], 8, i),
                              aggregate=c["aggregate"], times=times)
        table.add(i, *map(float, vals), *res.vertex_values, res.value,
                  *map(float, res.probabilities))
    table.provenance = _provenance(cfg, {"times": " ".join(map(str, times)),
                                         "aggregate": c["aggregate"]})
    return [table]


RUNNERS: dict[str, Callable[[dict], list[ResultTable]]] = {
    "rand-fidelity": exp_rand_fidelity, "esd": exp_esd, "pauli-local": exp_pauli_local,
    "ghz-fidelity": exp_ghz_fidelity, "purity": exp_purity, "wbp": exp_wbp, "vd": exp_vd,
    "time-scan": exp_time_scan, "ptm": exp_ptm,
}


def run_tables(config: dict | None = None, **overrides) -> list[ResultTable]:
    """Run one experiment and return its tables without writing files."""
    cfg = resolve_config(config, **overrides)
    check_feasible(cfg)
    return RUNNERS[cfg["experiment"]](cfg)


def run(config: dict | None = None, **overrides) -> list[Path]:
    """Run one experiment and write one CSV per result table into ``out``."""
    cfg = resolve_config(config, **overrides)
    check_feasible(cfg)
    tables = RUNNERS[cfg["experiment"]](cfg)
    out = Path(cfg["out"])
    paths = []
    for t in tables:
        paths.append(t.write(out / f"{t.name}.csv"))
    return paths
