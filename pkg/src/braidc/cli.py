"""Command-line frontend: training, compilation, and benchmark sweeps.

Subcommands:
    train     run value iteration from a key=value config file
    compile   compile one single-qubit target to a braid word (JSON report)
    bench     scaling / compare / grid sweeps writing CSV + sample JSONs
    compile2  compile one two-qubit target via KAK plus fixtures

Exit codes: 0 on success (including depth-capped searches, which still
produce a report), 2 on bad configuration, unreadable inputs, or malformed
targets.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import bench
from .errors import BraidcError
from .gateset import default_gateset
from .mlp import NetworkSpec, desk_spec, load_checkpoint, paper_spec
from .search import SearchConfig, search
from .su2 import named_gate, random_su2, unitary_from_json
from .training import TrainingConfig, train
from .twoqubit import (CNOT01, CNOT10, IDEAL_CIX, SWAP, CixFixture, Unitary4,
                       compile_two_qubit, default_fixture, kak_decompose,
                       random_su4, spectral_distance_up_to_phase,
                       substitute_cnots)

_INT_KEYS = {"M_init", "D_bf_data", "batch_size", "epochs", "seed",
             "refresh_epochs", "M_cap", "checkpoint_every", "hidden1",
             "hidden2", "n_res_blocks", "res_width"}
_FLOAT_KEYS = {"delta", "lr", "identity_eps", "leaky_slope"}
_STR_KEYS = {"net", "log_path", "checkpoint_path", "resume_checkpoint",
             "resume_log"}


def _parse_config_file(path: str) -> dict:
    """Read a key = value config file; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return values


def _net_spec_from_config(values: dict) -> NetworkSpec:
    name = values.get("net", "desk")
    if name == "desk":
        spec = desk_spec()
    elif name == "paper":
        spec = paper_spec()
    else:
        raise ValueError(f"unknown net preset {name!r}; use desk or paper")
    overrides = {k: values[k] for k in ("hidden1", "hidden2", "n_res_blocks",
                                        "res_width", "leaky_slope")
                 if k in values}
    if overrides:
        base = {"input_dim": spec.input_dim, "hidden1": spec.hidden1,
                "hidden2": spec.hidden2, "n_res_blocks": spec.n_res_blocks,
                "res_width": spec.res_width, "leaky_slope": spec.leaky_slope,
                "use_batchnorm": spec.use_batchnorm}
        base.update(overrides)
        spec = NetworkSpec(**base)
    return spec


def _last_logged_m(log_path: str) -> int:
    last = None
    with open(log_path) as fh:
        header = fh.readline().strip().split(",")
        m_col = header.index("M")
        for line in fh:
            if line.strip():
                last = line.strip().split(",")
    if last is None:
        raise ValueError(f"{log_path}: no rows to resume from")
    return int(last[m_col])


def cmd_train(args) -> int:
    values = _parse_config_file(args.config)
    spec = _net_spec_from_config(values)
    resume_checkpoint = values.pop("resume_checkpoint", None)
    resume_log = values.pop("resume_log", None)
    cfg_kwargs = {k: v for k, v in values.items()
                  if k not in ("net", "hidden1", "hidden2", "n_res_blocks",
                               "res_width", "leaky_slope")}
    cfg = TrainingConfig(net_spec=spec, **cfg_kwargs)
    resume_m = _last_logged_m(resume_log) if resume_log else None
    _, log_rows = train(cfg, resume_checkpoint=resume_checkpoint,
                        resume_M=resume_m)
    print(json.dumps({"epochs_run": len(log_rows),
                      "final_M": log_rows[-1]["M"] if log_rows else None,
                      "checkpoint": cfg.checkpoint_path,
                      "log": cfg.log_path}))
    return 0


def _parse_target2(spec: str, seed: int):
    try:
        return named_gate(spec)
    except KeyError:
        pass
    if spec == "random":
        return random_su2(seed)
    with open(spec) as fh:
        return unitary_from_json(json.load(fh))


def _search_config(args) -> SearchConfig:
    return SearchConfig(lam=args.lam, gamma=args.gamma, D_max=args.dmax,
                        D_bf=args.dbf, N=args.beam, epsilon_T=args.eps_t)


def cmd_compile(args) -> int:
    net = load_checkpoint(args.checkpoint)
    target = _parse_target2(args.target, args.seed)
    rep = search(target, net, default_gateset(), _search_config(args))
    print(json.dumps(rep.to_json(), indent=1))
    return 0


def _split_floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _split_ints(text: str):
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_bench(args) -> int:
    net = load_checkpoint(args.checkpoint)
    eps_list = _split_floats(args.eps_t)
    if args.mode == "scaling":
        csv_path, _ = bench.run_scaling(
            net, args.out, eps_list, n=args.n, seed=args.seed, lam=args.lam,
            gamma=args.gamma, d_bf=args.dbf, d_max=args.dmax)
    elif args.mode == "compare":
        csv_path, _ = bench.run_compare(
            net, args.out, eps_list, n=args.n, seed=args.seed,
            d_max=args.dmax, bf_depth=args.bf_depth,
            sk_level_cap=args.sk_levels, sk_base_depth=args.sk_base_depth,
            lam=args.lam, gamma=args.gamma, d_bf=args.dbf)
    else:
        csv_path, _ = bench.run_grid(
            net, args.out, _split_floats(args.lambdas),
            _split_floats(args.gammas), _split_ints(args.dmaxes),
            eps_list[0], n=args.n, seed=args.seed, d_bf=args.dbf)
    print(csv_path)
    return 0


_NAMED_TARGETS_4 = {"CNOT": CNOT01, "CNOT01": CNOT01, "CNOT10": CNOT10,
                    "SWAP": SWAP, "CIX": IDEAL_CIX}


def _parse_target4(spec: str, seed: int) -> Unitary4:
    if spec in _NAMED_TARGETS_4:
        return Unitary4(_NAMED_TARGETS_4[spec])
    if spec == "random":
        return random_su4(seed)
    with open(spec) as fh:
        doc = json.load(fh)
    m = np.array([[complex(re, im) for re, im in row]
                  for row in doc["matrix"]])
    return Unitary4(m)


def cmd_compile2(args) -> int:
    target = _parse_target4(args.target, args.seed)
    if args.no_fixture:
        fixture = None
    elif args.fixture == "ideal":
        fixture = default_fixture()
    else:
        fixture = CixFixture.load(args.fixture)
    if args.exact_slots:
        t0 = time.perf_counter()
        hybrid = substitute_cnots(kak_decompose(target), fixture)
        err = spectral_distance_up_to_phase(target.matrix,
                                            hybrid.recompose().matrix)
        fixture_length = fixture.length if fixture is not None else 0
        doc = {"slots": [], "error": err,
               "total_length": 3 * fixture_length,
               "fixture_length": fixture_length,
               "ideal_cnot_mode": hybrid.ideal_cnot_mode,
               "wall_time_s": time.perf_counter() - t0,
               "exact_slots": True}
    else:
        if not args.checkpoint:
            raise ValueError("--checkpoint is required unless --exact-slots")
        net = load_checkpoint(args.checkpoint)
        rep = compile_two_qubit(target, net, default_gateset(),
                                _search_config(args), fixture=fixture)
        doc = rep.to_json()
        doc["exact_slots"] = False
    print(json.dumps(doc, indent=1))
    return 0


def _add_search_flags(p, eps_default=None, dmax_default=100):
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="path-cost weight in f = lambda G + J")
    p.add_argument("--gamma", type=float, default=400.0,
                   help="decimal-penalty weight")
    p.add_argument("--dmax", type=int, default=dmax_default,
                   help="iteration cap for the search")
    p.add_argument("--dbf", type=int, default=5,
                   help="brute-force initialization depth")
    p.add_argument("--n", dest="beam", type=int, default=100,
                   help="nodes expanded per iteration")
    p.add_argument("--eps-t", dest="eps_t",
                   default=eps_default, help="target accuracy")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="braidc",
        description="Braid-sequence compiler for single- and two-qubit "
                    "unitaries with trained-heuristic search.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run value-iteration training")
    p.add_argument("--config", required=True,
                   help="key = value config file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compile", help="compile a single-qubit target")
    p.add_argument("--target", required=True,
                   help="I|X|Y|Z|H|T, 'random', or a JSON matrix file")
    p.add_argument("--checkpoint", required=True)
    _add_search_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("bench", help="benchmark sweeps (CSV + sample JSONs)")
    p.add_argument("mode", choices=("scaling", "compare", "grid"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--eps-t", dest="eps_t", default="1e-1,3e-2,1e-2",
                   help="comma-separated accuracy sweep (grid uses the first)")
    p.add_argument("--n", type=int, default=100, help="targets per bucket")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=400.0)
    p.add_argument("--dbf", type=int, default=5)
    p.add_argument("--dmax", type=int, default=100,
                   help="iteration cap (compare mode; scaling uses 1000)")
    p.add_argument("--bf-depth", dest="bf_depth", type=int, default=8)
    p.add_argument("--sk-levels", dest="sk_levels", type=int, default=2)
    p.add_argument("--sk-base-depth", dest="sk_base_depth", type=int,
                   default=8)
    p.add_argument("--lambdas", default="0.5,1.0", help="grid mode")
    p.add_argument("--gammas", default="0.0,400.0", help="grid mode")
    p.add_argument("--dmaxes", default="10,30,100", help="grid mode")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compile2", help="compile a two-qubit target")
    p.add_argument("--target", required=True,
                   help="CNOT|CNOT01|CNOT10|SWAP|CIX, 'random', or a JSON "
                        "matrix file")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--fixture", default="ideal",
                   help="fixture JSON path, or 'ideal' for the built-in")
    p.add_argument("--no-fixture", dest="no_fixture", action="store_true",
                   help="substitute ideal CNOTs directly (flagged in report)")
    p.add_argument("--exact-slots", dest="exact_slots", action="store_true",
                   help="skip braid search; score the decomposition itself")
    _add_search_flags(p, eps_default="1e-2", dmax_default=30)
    p.set_defaults(func=cmd_compile2)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if (args.command in ("compile", "compile2")
                and args.eps_t is not None):
            args.eps_t = float(args.eps_t)
        return args.func(args)
    except (BraidcError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        print(f"braidc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
