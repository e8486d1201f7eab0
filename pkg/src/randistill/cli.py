"""Command-line front end.

Single runs print one JSON record; ``sweep`` prints CSV. Exit codes: 0 ok,
2 parameter error, 3 verification failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from . import __version__
from .acceptance import DEFAULT_SEED, run_all
from .analysis import (
    WClassParams,
    assisted_entropy_mincut,
    e_sp_asymptotic,
    ghz_example_analysis,
    lemma2_check,
    q_rnd_lower_bound,
    w_class_concurrences,
    w_class_entropy_lambda,
)
from .config import Tolerances, load_tolerances
from .errors import ParameterError, RandistillError
from .measures import f_of_q, three_tangle
from .protocols import (
    Status,
    WProtocolConfig,
    dicke_reachable,
    execute_dicke_moves,
    finite_round_schedule,
    random_distill_w_class,
    run_w_protocol_tree,
    symmetric_expected_concurrence,
    two_copy_quantities,
    two_copy_round,
    two_copy_w_state,
)
from .state import dicke_state, ghz_example_state, ghz_state, overlap, random_state, w_state

EXIT_OK, EXIT_PARAM, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4
MAX_GRID = 10**6
SIG_DIGITS = 12


def round_sig(value: Any) -> Any:
    """Recursively round floats to 12 significant digits so output re-parses losslessly."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise ParameterError(f"non-finite result {v}")
        return float(f"{v:.{SIG_DIGITS}g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): round_sig(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_sig(v) for v in value]
    if isinstance(value, np.ndarray):
        return [round_sig(v) for v in value.tolist()]
    if isinstance(value, Status):
        return value.value
    return value


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output_path: str | None = None
    wall_time: bool = True


@dataclass
class ResultRecord:
    command: str
    params: dict
    seed: int
    version: str
    wall_ms: float | None
    results: dict
    truncated_mass: float | None = None

    def to_json(self) -> str:
        d = asdict(self)
        if d["truncated_mass"] is None:
            del d["truncated_mass"]
        return json.dumps(round_sig(d), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        d = json.loads(text)
        return cls(**{"truncated_mass": None, **d})


# ---------------------------------------------------------------------------
# commands

def _three_party_state(name: str, p: dict, seed: int):
    if name == "w":
        return w_state(3)
    if name == "ghz":
        return ghz_state(3)
    if name == "ghz-example":
        return ghz_example_state(math.sqrt(p["alpha2"]))
    if name == "random":
        return random_state((2, 2, 2), np.random.default_rng(seed))
    raise ParameterError(f"unknown state {name!r}")


def cmd_w_protocol(p: dict, seed: int):
    state = _three_party_state(p["state"], p, seed)
    cfg = WProtocolConfig(p["epsilon"], p["max_rounds"], p["prune"])
    _, rep = run_w_protocol_tree(state, cfg)
    return rep.as_dict(), rep.truncated_mass


def _w_class_params(p: dict) -> WClassParams:
    if p["gamma"] == "auto":
        return WClassParams.with_auto_gamma(p["alpha"], p["beta"], p["delta"])
    return WClassParams(p["alpha"], p["beta"], float(p["gamma"]), p["delta"])


def cmd_w_class(p: dict, seed: int):
    params = _w_class_params(p)
    q_a, q_b, q_c = w_class_concurrences(params)
    lam, s_a = w_class_entropy_lambda(params)
    q_rnd = q_rnd_lower_bound(params)
    lemma = lemma2_check(params)
    out = {
        "alpha": params.alpha, "beta": params.beta, "gamma": params.gamma, "delta": params.delta,
        "lambda": lam, "S_A": s_a, "q_A": q_a, "q_B": q_b, "q_C": q_c,
        "E_sp": f_of_q(q_b), "q_rnd_closed": q_rnd, "f_q_rnd": f_of_q(min(q_rnd, 1.0)),
        "gap_decomposition": lemma._asdict(), "advantage": q_rnd > q_b,
    }
    truncated = None
    if p["epsilon"] is not None:
        _, rep = random_distill_w_class(params, WProtocolConfig(p["epsilon"], p["max_rounds"], p["prune"]))
        out["engine"] = rep.as_dict()
        out["engine_total_q"] = rep.total_expected_q
        out["engine_gap"] = q_rnd - rep.total_expected_q
        truncated = rep.truncated_mass
    return out, truncated


def cmd_ghz_example(p: dict, seed: int):
    if p["alpha2"] is None:
        raise ParameterError("--alpha2 is required")
    r = ghz_example_analysis(math.sqrt(p["alpha2"]))
    state = ghz_example_state(math.sqrt(p["alpha2"]))
    return {
        "alpha2": r.alpha2, "epsilon": r.epsilon, "q_rnd": r.q_rnd,
        "q_threshold": r.q_threshold, "E_sp": r.e_sp, "advantage": r.advantage,
        "three_tangle": three_tangle(state), "symmetric_yield": symmetric_expected_concurrence(state),
    }, None


def cmd_dicke(p: dict, seed: int):
    reach = dicke_reachable(p["m"], p["n"], p["m2"], p["n2"])
    out = {"reachable": reach.reachable, "moves": list(reach.moves),
           "printed_condition": reach.printed_condition}
    if reach.reachable:
        final = execute_dicke_moves(p["m"], p["n"], reach.moves, p["epsilon"])
        target = dicke_state(p["m2"], p["n2"], final.parties)
        out["witness_overlap"] = abs(overlap(target, final))
    return out, None


def cmd_two_copy(p: dict, seed: int):
    tc = two_copy_quantities()
    out = {"zeta": tc.zeta, "e_rnd_bound": tc.e_rnd_bound, "e_sp_asym": tc.e_sp_asym,
           "advantage": tc.advantage, "printed_form": tc.printed_form}
    if p["epsilon"] is not None:
        leaves = two_copy_round(two_copy_w_state(), p["epsilon"])
        out["round"] = [{"flagged": list(b.flagged), "status": b.status.value,
                         "probability": b.probability} for b in leaves]
    return out, None


def cmd_mincut(p: dict, seed: int):
    name = p["state"]
    if name == "w":
        state = w_state(p["m"])
    elif name == "ghz":
        state = ghz_state(p["m"])
    elif name == "dicke":
        state = dicke_state(p["m"], p["n"])
    elif name == "w-class":
        state = _w_class_params(p).state()
    else:
        raise ParameterError(f"unknown state {name!r}")
    if state.n_parties > 8:
        raise ParameterError("min-cut enumeration is limited to 8 parties")
    rates = {}
    for i, a in enumerate(state.parties):
        for b in state.parties[i + 1:]:
            rates[f"{a}-{b}"] = assisted_entropy_mincut(state, a, b)
    pair, rate = e_sp_asymptotic(state)
    return {"rates": rates, "best_pair": "-".join(pair), "best_rate": rate}, None


def cmd_verify(p: dict, seed: int, tolerances: dict):
    tol = load_tolerances(tolerances)
    results = run_all(tol, seed, echo=lambda line: print(line, file=sys.stderr))
    out = {
        str(r.number): {"name": r.name, "measured": r.measured, "target": r.target,
                        "tolerance": r.tolerance, "pass": r.passed, "seconds": r.seconds}
        for r in results
    }
    out["all_pass"] = all(r.passed for r in results)
    return out, None


COMMANDS = {
    "w-protocol": cmd_w_protocol,
    "w-class": cmd_w_class,
    "ghz-example": cmd_ghz_example,
    "dicke": cmd_dicke,
    "two-copy": cmd_two_copy,
    "mincut": cmd_mincut,
}


def run(cfg: RunConfig) -> tuple[ResultRecord, int]:
    t0 = time.perf_counter()
    if cfg.command == "verify":
        results, truncated = cmd_verify(cfg.params, cfg.seed, cfg.tolerances)
        code = EXIT_OK if results["all_pass"] else EXIT_VERIFY
    else:
        results, truncated = COMMANDS[cfg.command](cfg.params, cfg.seed)
        code = EXIT_OK
    wall = (time.perf_counter() - t0) * 1e3 if cfg.wall_time else None
    rec = ResultRecord(cfg.command, dict(cfg.params), cfg.seed, __version__, wall, results, truncated)
    return rec, code


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = {
    "ghz-example": ["alpha2", "q_rnd", "q_threshold", "advantage"],
    "w-protocol": ["epsilon", "total_expected_q", "exhausted_mass", "truncated_mass"],
    "finite-round": ["R", "success", "target"],
    "w-class": ["alpha", "beta", "gamma", "q_B", "q_rnd", "gap"],
}


def _grid(lo: float, hi: float, steps: int, values: list[float] | None) -> list[float]:
    if values:
        return list(values)
    if steps < 1:
        raise ParameterError("steps must be positive")
    if steps > MAX_GRID:
        raise ParameterError(f"grid of {steps} points exceeds {MAX_GRID}")
    return list(np.linspace(lo, hi, steps)) if steps > 1 else [lo]


def sweep_rows(target: str, p: dict):
    """Yield one row (list of values) per grid point for the ``target`` experiment."""
    grid = _grid(p["lo"], p["hi"], p["steps"], p["values"])
    if target == "ghz-example":
        for a2 in grid:
            r = ghz_example_analysis(math.sqrt(a2))
            yield [a2, r.q_rnd, r.q_threshold, r.advantage]
    elif target == "w-protocol":
        for eps in grid:
            cfg = WProtocolConfig(eps, p["max_rounds"] or math.ceil(12 / eps**2), p["prune"])
            _, rep = run_w_protocol_tree(w_state(3), cfg)
            yield [eps, rep.total_expected_q, rep.exhausted_mass, rep.truncated_mass]
    elif target == "finite-round":
        for r in grid:
            r = int(round(r))
            yield [r, finite_round_schedule(r).success_probability, r / (r + 1)]
    elif target == "w-class":
        # alpha grid at fixed beta/delta, gamma from normalization
        for a in grid:
            params = WClassParams.with_auto_gamma(a, p["beta"], p["delta"])
            q_b = w_class_concurrences(params)[1]
            q_rnd = q_rnd_lower_bound(params)
            yield [a, params.beta, params.gamma, q_b, q_rnd, q_rnd - q_b]
    else:
        raise ParameterError(f"unknown sweep target {target!r}")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.{SIG_DIGITS}g}"


def sweep(target: str, p: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS[target] if target in SWEEP_COLUMNS else [])
    for row in sweep_rows(target, p):
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument parsing

def _parse_tol(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ParameterError(f"tolerance override must be key=value, got {item!r}")
        if key == "all":
            out.update({f.name: float(val) for f in fields(Tolerances)})
        else:
            out[key] = float(val)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randistill", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default 0; {DEFAULT_SEED} for verify)")
    common.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                        help="tolerance override, repeatable; all=VALUE sets every key")
    common.add_argument("--output", "-o", default=None, help="write here instead of stdout")
    common.add_argument("--no-wall-time", action="store_true",
                        help="emit wall_ms as null for byte-identical reruns")
    sub = parser.add_subparsers(dest="command", required=True)

    def proto(p):
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--max-rounds", type=int, default=2000)
        p.add_argument("--prune", type=float, default=1e-14)

    p = sub.add_parser("w-protocol", parents=[common])
    p.add_argument("--state", choices=["w", "ghz", "ghz-example", "random"], default="w")
    p.add_argument("--alpha2", type=float, default=1 / 3)
    proto(p)
    p.set_defaults(epsilon=0.05)

    p = sub.add_parser("w-class", parents=[common])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", default="auto")
    p.add_argument("--delta", type=float, default=0.0)
    proto(p)

    p = sub.add_parser("ghz-example", parents=[common])
    p.add_argument("--alpha2", type=float, default=None)

    p = sub.add_parser("dicke", parents=[common])
    for name in ("m", "n", "m2", "n2"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.05)

    p = sub.add_parser("two-copy", parents=[common])
    p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("mincut", parents=[common])
    p.add_argument("--state", choices=["w", "ghz", "dicke", "w-class"], default="w")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--gamma", default="auto")
    p.add_argument("--delta", type=float, default=0.0)

    sub.add_parser("verify", parents=[common])

    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--target", choices=sorted(SWEEP_COLUMNS), required=True)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--values", type=float, nargs="+", default=None)
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--prune", type=float, default=1e-14)
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--delta", type=float, default=0.0)
    return parser


_COMMON = {"seed", "tol", "output", "no_wall_time", "command"}


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAM if exc.code else EXIT_OK
    params = {k: v for k, v in vars(args).items() if k not in _COMMON}
    if args.seed is None:
        args.seed = DEFAULT_SEED if args.command == "verify" else 0
    if args.seed < 0 or args.seed >= 2**64:
        print("error: seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_PARAM
    try:
        tolerances = _parse_tol(args.tol)
        load_tolerances(tolerances)
        if args.command == "sweep":
            text = sweep(params.pop("target"), params)
            code = EXIT_OK
        else:
            cfg = RunConfig(args.command, params, args.seed, tolerances, args.output,
                            not args.no_wall_time)
            rec, code = run(cfg)
            text = rec.to_json()
    except (RandistillError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        _emit(text, args.output)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
