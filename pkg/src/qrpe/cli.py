"""Command-line entry point: ``qrpe <subcommand>`` or ``python -m qrpe``.

Subcommands compose the pipeline on serialized artifacts::

    qrpe train     --out dyn.npz                      # pair dynamics (+ training data)
    qrpe fres      --dynamics dyn.npz --observable ZZ # variance bound
    qrpe weights   --dynamics dyn.npz --observable ZZ --out w.npz
    qrpe sample    --dynamics dyn.npz --state ghz:3 --n-samples 6000 --out s.qrs
    qrpe estimate  --weights w.npz --snapshots s.qrs  # post-measurement estimate
    qrpe plan      --epsilon 0.2 --delta 0.1 --m 1 --f 1
    qrpe ptm       --training a.npz b.npz
    qrpe run       --config experiment.yaml
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from qrpe import __version__, analysis as an, estimators as es, qla, sampling as sp
from qrpe import experiments as ex, io, statelib as sl, training as tr
from qrpe.reservoir import QUBIT_SETTING, QUTRIT_SETTING, ReservoirParams, pair_effects


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _parse_params(items, base: ReservoirParams) -> ReservoirParams:
    kw = {}
    for item in items or []:
        key, _, val = item.partition("=")
        if key not in base.to_dict():
            raise SystemExit(f"unknown reservoir parameter {key!r}")
        kw[key] = float(val)
    return base.with_(**kw)


def parse_observable(spec: str, dims) -> tuple[np.ndarray | None, list | None]:
    """Return ``(matrix, pauli_terms)``.

    ``spec`` is a Pauli label such as ``"XZ"`` or ``"II"``, ``"swap"`` for the
    swap of the two halves, or a path to a ``.npy`` Hermitian matrix.
    """
    if set(spec) <= set("IXYZ") and spec:
        if len(spec) != len(dims) or any(d != 2 for d in dims):
            raise SystemExit(f"Pauli label {spec!r} needs {len(spec)} qubit subsystems")
        return tr.pauli_matrix(spec), [(1.0, spec)]
    if spec == "swap":
        half = len(dims) // 2
        if 2 * half != len(dims):
            raise SystemExit("swap needs an even number of subsystems")
        return es.swap_matrix(dims[:half]), None
    path = Path(spec)
    if not path.exists():
        raise SystemExit(f"observable {spec!r} is neither a Pauli label nor a file")
    return qla.check_hermitian(np.load(path), 1e-9), None


def _weights_for(obs, terms, pds):
    dims = [pd.d for pd in pds]
    if terms is None and all(d == 2 for d in dims):
        terms = tr.pauli_decompose(obs)
    if terms is not None:
        return tr.weights_factored(tr.pauli_terms(terms), pds)
    return tr.weights_dense(obs, pds)


def _dynamics(args) -> list:
    pds = [io.load_dynamics(p) for p in args.dynamics]
    if args.sites and len(pds) == 1:
        pds = pds * args.sites
    return pds


def _infer_dims(size: int, d: int) -> tuple[int, ...]:
    n = int(round(np.log(size) / np.log(d)))
    if d ** n != size:
        raise SystemExit(f"a state of size {size} is not a product of {d}-level systems")
    return (d,) * n


def parse_state(spec: str, seed: int, dims=None, local_d: int = 2):
    kind, _, arg = spec.partition(":")
    if kind == "ghz":
        return sl.ghz(int(arg))
    if kind == "ghz-type":
        return sl.ghz_type(float(arg))
    if kind == "zero":
        return sl.basis_state(0, (2,) * int(arg))
    if kind == "haar":
        return qla.haar_pure((2,) * int(arg), np.random.default_rng(seed))
    if kind == "wbp":
        n, depth = map(int, arg.split(","))
        return sl.wbp_circuit(n, depth, seed, theta_max=np.pi)
    path = Path(spec)
    if path.suffix == ".npy" and path.exists():
        a = np.load(path)
        if a.ndim == 1:
            dims = dims or _infer_dims(a.size, local_d)
            return qla.PureState.normalized(a, dims)
        dims = dims or _infer_dims(a.shape[0], local_d)
        return qla.DensityMatrix(a, dims)
    raise SystemExit(f"cannot interpret state {spec!r}")


# -- subcommands ------------------------------------------------------------------

def cmd_train(args) -> int:
    base = QUBIT_SETTING if args.kind == "qubit" else QUTRIT_SETTING
    p = _parse_params(args.param, base)
    if args.t is not None:
        p = p.with_(t=args.t)
    if args.hbar is not None:
        p = p.with_(hbar=args.hbar)
    pd = pair_effects(p, args.d, args.kind)
    out = Path(args.out or "dynamics.npz")
    io.save_dynamics(out, pd)
    info = {"dynamics": str(out), "cond": pd.cond, "d": pd.d, "params": p.to_dict()}
    if args.training_out:
        rng = np.random.default_rng(args.seed)
        td = tr.simulate_training(pd, mode=args.mode, shots=args.shots, rng=rng)
        io.save_training(args.training_out, td)
        info["training"] = args.training_out
    _emit(info)
    return 0


def cmd_fres(args) -> int:
    pds = _dynamics(args)
    obs, _ = parse_observable(args.observable, [pd.d for pd in pds])
    bound = an.f_res(obs, pds, traceless=not args.raw)
    _emit({"observable": args.observable, "f_res": bound.f_res, "traceless": not args.raw})
    return 0


def cmd_weights(args) -> int:
    pds = _dynamics(args)
    obs, terms = parse_observable(args.observable, [pd.d for pd in pds])
    w = _weights_for(obs, terms, pds)
    out = args.out or "weights.npz"
    io.save_weights(out, w, {"observable": args.observable})
    _emit({"weights": out, "slots": list(w.slot_dims), "factored": w.terms is not None})
    return 0


def cmd_sample(args) -> int:
    pds = _dynamics(args)
    dims = tuple(pd.d for pd in pds) if len(pds) > 1 else None
    state = parse_state(args.state, args.seed, dims, local_d=pds[0].d)
    if len(pds) == 1 and len(state.dims) > 1:
        pds = pds * len(state.dims)
    ss = sp.sample_snapshots(state, pds, args.n_samples, args.seed, method=args.method,
                             threads=args.threads)
    ss.meta = {"state": args.state}
    out = args.out or "snapshots.qrs"
    io.save_snapshots(out, ss)
    _emit({"snapshots": out, "count": len(ss), "dims": list(ss.dims)})
    return 0


def cmd_estimate(args) -> int:
    w = io.load_weights(args.weights)
    ss = io.load_snapshots(args.snapshots)
    if tuple(w.slot_dims) != tuple(ss.dims):
        raise SystemExit(f"weights for {w.slot_dims} do not match snapshots of {ss.dims}")
    vals = es.snapshot_values(w, ss)
    out = {"estimate": float(np.mean(vals)), "n_snapshots": len(ss),
           "std_error": float(np.std(vals, ddof=1) / np.sqrt(len(ss))) if len(ss) > 1 else None}
    if args.mom:
        out["median_of_means"] = es.median_of_means(vals, args.mom)
    _emit(out)
    return 0


def cmd_plan(args) -> int:
    fn = an.plan_quadratic if args.quadratic else an.plan_linear
    plan = fn(args.epsilon, args.delta, args.m, args.f)
    _emit({"n_sample": plan.n_sample, "k_batches": plan.k_batches,
           "batch_size": plan.batch_size, "n_total": plan.n_total})
    return 0


def cmd_ptm(args) -> int:
    tds = [io.load_training(p) for p in args.training]
    rng = np.random.default_rng(args.seed)
    obs = an.fidelity_observables([qla.haar_pure((tds[0].d,), rng) for _ in range(args.n_states)])
    res = an.ptm_optimize(tds, obs, args.j_max, args.seed, aggregate=args.aggregate)
    _emit({"probabilities": [float(p) for p in res.probabilities], "value": res.value,
           "vertex_values": [float(v) for v in res.vertex_values]})
    return 0


def cmd_run(args) -> int:
    config = {}
    if args.config:
        config = yaml.safe_load(Path(args.config).read_text()) or {}
    if args.experiment:
        config["experiment"] = args.experiment
    try:
        paths = ex.run(config, seed=args.seed, out=args.out, threads=args.threads,
                       hbar=args.hbar)
    except ex.InfeasibleError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _emit({"written": [str(p) for p in paths]})
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment configuration")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--hbar", type=float, default=None,
                        help="reduced Planck constant in the units of the parameters")

    parser = argparse.ArgumentParser(prog="qrpe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qrpe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="simulate one reservoir pair")
    p.add_argument("--kind", choices=["qubit", "bosonic"], default="qubit")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--training-out")
    p.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    p.add_argument("--shots", type=int, default=None)
    p.set_defaults(func=cmd_train)

    for name, func, hlp in (("fres", cmd_fres, "worst-case variance bound"),
                            ("weights", cmd_weights, "readout weights for an observable")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--dynamics", nargs="+", required=True)
        p.add_argument("--sites", type=int, default=None,
                       help="repeat a single dynamics file for this many subsystems")
        p.add_argument("--observable", required=True)
        if name == "fres":
            p.add_argument("--raw", action="store_true", help="skip the traceless shift")
        p.set_defaults(func=func)

    p = sub.add_parser("sample", parents=[common], help="simulate measurement snapshots")
    p.add_argument("--dynamics", nargs="+", required=True)
    p.add_argument("--sites", type=int, default=None)
    p.add_argument("--state", required=True,
                   help="ghz:N, ghz-type:Q, zero:N, haar:N, wbp:N,DEPTH or a .npy file")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--method", choices=["auto", "exact", "sequential"], default="auto")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", parents=[common], help="estimate from weights and snapshots")
    p.add_argument("--weights", required=True)
    p.add_argument("--snapshots", required=True)
    p.add_argument("--mom", type=int, default=None, help="odd number of median-of-means batches")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("plan", parents=[common], help="sample size for a target accuracy")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--f", type=float, required=True, help="largest variance bound")
    p.add_argument("--quadratic", action="store_true")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("ptm", parents=[common], help="optimize a time-multiplexing distribution")
    p.add_argument("--training", nargs="+", required=True)
    p.add_argument("--n-states", type=int, default=300)
    p.add_argument("--j-max", type=int, default=100)
    p.add_argument("--aggregate", choices=["max", "mean"], default="mean")
    p.set_defaults(func=cmd_ptm)

    p = sub.add_parser("run", parents=[common], help="run a configured experiment")
    p.add_argument("--experiment", choices=ex.EXPERIMENTS)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None and args.command != "run":
        args.seed = 0
    try:
        return args.func(args)
    except (qla.ContractError, io.FormatError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
