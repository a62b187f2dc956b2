"""Command-line front end.

Every output carries a run manifest (subcommand, resolved options, seed,
input digests, version) so a run can be repeated exactly.

Exit codes: 0 success, 2 validation error, 3 budget refusal, 4 no feasible point.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channels import MacSpec, PtpSeSpec, SdRcDecision, SdRcSpec, example_channel, load_channel
from .errors import BinfwdError, BudgetExceededError, InfeasibleError
from .fme import PRESETS, FmeParseError, format_system, load_preset, load_system, project
from .optimize import OptOptions, maximize, trace_region
from .rates import closed_form_example, mac_objective, ptp_se_objective, sdrc_objective
from .sim import SchemeRates, covering_experiment, simulate_sdrc

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_INFEASIBLE = 0, 2, 3, 4
CAPACITY_MODELS = ("sdrc", "sdrc-causal", "mac", "mac-causal", "ptp-se")


@dataclass
class RunManifest:
    subcommand: str
    options: dict
    seed: int
    inputs: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self):
        return asdict(self)


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _clean(obj):
    """JSON-safe copy: numpy to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(doc: dict, out):
    _emit(json.dumps(_clean(doc), indent=2) + "\n", out)


def _resolve_seed(seed):
    if seed is not None:
        return int(seed)
    env = os.environ.get("BINFWD_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise BinfwdValidation(f"BINFWD_SEED must be an integer, got {env!r}") from None


class BinfwdValidation(BinfwdError, ValueError):
    pass


def _manifest(args, seed, inputs=()) -> RunManifest:
    skip = {"func", "out", "cmd"}
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    opts["seed"] = seed
    return RunManifest(args.cmd, opts, seed, {str(p): _digest(p) for p in inputs})


def _floats(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise BinfwdValidation(f"expected a comma-separated list of numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_table1(args) -> int:
    seed = _resolve_seed(args.seed)
    man = _manifest(args, seed)
    rows = []
    for a in _floats(args.alphas):
        cf = closed_form_example(a, args.p)
        row = {"alpha": a, "C_nocsi": cf["c_nocsi"], "C_c": cf["c_c"], "C_nc": cf["c_nc"]}
        if args.optimizer:
            rep = maximize(ptp_se_objective(example_channel(a, args.p), 3),
                           OptOptions(restarts=args.restarts, seed=seed, threads=args.threads))
            row["C_nc_optimizer"] = rep.best_value
        rows.append(row)
    if args.format == "json":
        _emit_json({"manifest": man.to_dict(), "p": args.p, "rows": rows}, args.out)
        return EXIT_OK
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(_clean(man.to_dict()), sort_keys=True) + "\n")
    cols = ["alpha", "C_nocsi", "C_c", "C_nc"] + (["C_nc_optimizer"] if args.optimizer else [])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(float(r[c])) for c in cols])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _capacity_objective(model: str, spec, u_size):
    if model in ("sdrc", "sdrc-causal"):
        if not isinstance(spec, SdRcSpec):
            raise BinfwdValidation(f"model {model} needs an 'sdrc' channel file")
        if model == "sdrc":
            return sdrc_objective(spec, u_size or spec.u_cap, "noncausal")
        return sdrc_objective(spec, 1, "causal")
    if model in ("mac", "mac-causal"):
        if not isinstance(spec, MacSpec):
            raise BinfwdValidation(f"model {model} needs a 'mac' channel file")
        crib = "strictly_causal" if model == "mac" else "causal"
        return mac_objective(spec, u_size or 2, crib)
    if not isinstance(spec, PtpSeSpec):
        raise BinfwdValidation("model ptp-se needs a 'ptp_se' channel file")
    return ptp_se_objective(spec, u_size or 3)


def cmd_capacity(args) -> int:
    seed = _resolve_seed(args.seed)
    man = _manifest(args, seed, [args.channel])
    spec = load_channel(args.channel)
    obj = _capacity_objective(args.model, spec, args.u_size)
    rep = maximize(obj, OptOptions(restarts=args.restarts, grid_levels=args.grid_levels,
                                   seed=seed, threads=args.threads))
    if not rep.feasible:
        raise InfeasibleError("no restart reached a feasible point")
    doc = rep.to_dict()
    if not args.trajectories:
        doc.pop("trajectories")
    _emit_json({"manifest": man.to_dict(), "model": args.model, "report": doc}, args.out)
    return EXIT_OK


def _weights(args) -> list:
    if args.weights:
        out = []
        for item in args.weights.split(","):
            try:
                a, b = item.split(":")
                out.append((float(a), float(b)))
            except ValueError:
                raise BinfwdValidation(f"weights must look like 'w1:w2,...', got {item!r}") from None
        return out
    k = args.grid
    if k < 2:
        raise BinfwdValidation("--grid needs at least 2 points")
    return [(1.0 - i / (k - 1), i / (k - 1)) for i in range(k)]


def cmd_region(args) -> int:
    seed = _resolve_seed(args.seed)
    man = _manifest(args, seed, [args.channel])
    spec = load_channel(args.channel)
    if not isinstance(spec, MacSpec):
        raise BinfwdValidation("region needs a 'mac' channel file")
    crib = "strictly_causal" if args.cribbing == "strictly-causal" else "causal"
    pts = trace_region(spec, _weights(args), args.u_size, crib,
                       OptOptions(restarts=args.restarts, seed=seed, threads=args.threads))
    if not pts:
        raise InfeasibleError("no weight produced a feasible point")
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(_clean(man.to_dict()), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["w1", "w2", "R1", "R2", "value"])
    for p, (w1, w2), v in pts:
        w.writerow([repr(float(w1)), repr(float(w2)), repr(float(p.r1)), repr(float(p.r2)), repr(float(v))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_fme(args) -> int:
    seed = _resolve_seed(args.seed)
    if bool(args.system) == bool(args.preset):
        raise BinfwdValidation("give exactly one of --system FILE or --preset NAME")
    man = _manifest(args, seed, [args.system] if args.system else [])
    sys_ = load_system(args.system) if args.system else load_preset(args.preset)
    keep = [v.strip().replace("'", "p") for v in args.keep.split(",") if v.strip()] if args.keep \
        else list(sys_.keep or sys_.variables)
    if not keep:
        raise BinfwdValidation("no variables to keep: pass --keep or declare 'vars' in the system")
    out = project(sys_, keep)
    header = "manifest: " + json.dumps(_clean(man.to_dict()), sort_keys=True)
    _emit(format_system(out, header), args.out)
    return EXIT_OK


def _load_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise BinfwdValidation(f"{what} {path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None


def cmd_sim(args) -> int:
    cfg_path = Path(args.config)
    cfg = _load_json(cfg_path, "config")
    need = ("n", "B", "rates", "trials", "channel_file", "decision_file")
    missing = [k for k in need if k not in cfg]
    if missing:
        raise BinfwdValidation(f"config is missing fields {missing}")
    if cfg.get("model", "sdrc") != "sdrc":
        raise BinfwdValidation("only the 'sdrc' scheme can be simulated")
    seed = _resolve_seed(args.seed if args.seed is not None else cfg.get("seed"))
    ch = cfg_path.parent / cfg["channel_file"]
    dec = cfg_path.parent / cfg["decision_file"]
    man = _manifest(args, seed, [cfg_path, ch, dec])
    spec = load_channel(ch)
    if not isinstance(spec, SdRcSpec):
        raise BinfwdValidation("the simulation needs an 'sdrc' channel file")
    try:
        d = SdRcDecision.from_dict(_load_json(dec, "decision"))
        rates = SchemeRates.from_dict(cfg["rates"])
    except (KeyError, TypeError) as exc:
        raise BinfwdValidation(f"bad decision or rates: {exc}") from None
    rep = simulate_sdrc(spec, d, int(cfg["n"]), int(cfg["B"]), rates, float(cfg.get("eps", 0.2)),
                        int(cfg["trials"]), seed, args.threads)
    _emit_json({"manifest": man.to_dict(), "report": rep.to_dict()}, args.out)
    return EXIT_OK


def cmd_covering(args) -> int:
    seed = _resolve_seed(args.seed)
    man = _manifest(args, seed, [args.kernel_file])
    doc = _load_json(args.kernel_file, "kernel file")
    if not isinstance(doc, dict) or "p_z_v" not in doc or "p_v" not in doc:
        raise BinfwdValidation("kernel file needs fields 'p_v' and 'p_z_v'")
    rep = covering_experiment(doc["p_z_v"], doc["p_v"], args.n, args.r, args.rb, args.delta,
                              args.trials, seed, args.threads)
    _emit_json({"manifest": man.to_dict(), "report": rep.to_dict()}, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed (default: $BINFWD_SEED or 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    p = argparse.ArgumentParser(prog="binfwd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"binfwd {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("table1", parents=[common], help="capacities of the three-state example")
    t.add_argument("--p", type=float, default=0.2)
    t.add_argument("--alphas", default="0,0.5,1")
    t.add_argument("--format", choices=("csv", "json"), default="csv")
    t.add_argument("--optimizer", action="store_true", help="add a numerically optimized column")
    t.add_argument("--restarts", type=int, default=64)
    t.set_defaults(func=cmd_table1)

    c = sub.add_parser("capacity", parents=[common], help="maximize a capacity expression")
    c.add_argument("--model", choices=CAPACITY_MODELS, required=True)
    c.add_argument("--channel", required=True)
    c.add_argument("--u-size", type=int, default=None)
    c.add_argument("--restarts", type=int, default=64)
    c.add_argument("--grid-levels", type=int, default=0)
    c.add_argument("--trajectories", action="store_true", help="include per-restart traces")
    c.set_defaults(func=cmd_capacity)

    r = sub.add_parser("region", parents=[common], help="supporting points of a cribbing MAC region")
    r.add_argument("--channel", required=True)
    g = r.add_mutually_exclusive_group()
    g.add_argument("--weights", default=None, help="w1:w2 pairs, comma separated")
    g.add_argument("--grid", type=int, default=11, help="number of evenly spaced weight pairs")
    r.add_argument("--cribbing", choices=("strictly-causal", "causal"), default="strictly-causal")
    r.add_argument("--u-size", type=int, default=2)
    r.add_argument("--restarts", type=int, default=16)
    r.set_defaults(func=cmd_region)

    f = sub.add_parser("fme", parents=[common], help="Fourier-Motzkin projection of a rate system")
    f.add_argument("--system", default=None)
    f.add_argument("--preset", choices=sorted(PRESETS), default=None)
    f.add_argument("--keep", default=None, help="comma-separated variables to keep")
    f.set_defaults(func=cmd_fme)

    s = sub.add_parser("sim", parents=[common], help="simulate the bin-forward relay scheme")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_sim)

    v = sub.add_parser("covering", parents=[common], help="indirect covering experiment")
    v.add_argument("--kernel-file", required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--r", type=float, required=True)
    v.add_argument("--rb", type=float, required=True)
    v.add_argument("--delta", type=float, default=0.1)
    v.add_argument("--trials", type=int, default=200)
    v.set_defaults(func=cmd_covering)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"binfwd: budget refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InfeasibleError as exc:
        print(f"binfwd: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (BinfwdError, FmeParseError, ValueError, OSError) as exc:
        print(f"binfwd: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
