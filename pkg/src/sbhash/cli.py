"""Command-line entry point: ``sbhash {keylen,sweep,extract,bench,limit}``.

Configuration is a flat JSON object whose keys mirror the parameter names;
every key can also be set by a ``--key-name`` flag, and flags win over the
file.  Exit statuses: 0 ok, 2 bad arguments or configuration, 3 no positive
key, 4 oversize sub-block abort, 5 test statistics abort, 6 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

from . import bbm92, pipeline
from .bbm92 import Bbm92Params, Scenario, ScenarioKind
from .bitstring import BitString
from .errors import InfeasibleError
from .sampling import SamplingPlan, assign_subblocks, block_limit, sift_partition
from .stream import normalize_seed, random_bits
from .toeplitz import BlockingParams

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_OVERSIZE, EXIT_STATISTICS, EXIT_IO = 0, 2, 3, 4, 5, 6

_PARAM_FIELDS = {f.name: f.default for f in dataclasses.fields(Bbm92Params)}
DEFAULTS = {
    **_PARAM_FIELDS,
    "n_subblocks": 1,
    "block_limit": None,
    "m_prime": BlockingParams().m_prime,
    "n_prime": BlockingParams().n_prime,
    "scenario": ScenarioKind.FULL.value,
    "optimize_px": False,
    "seed": "0",
}
# Value types for keys whose default is None.
_OPTIONAL_TYPES = {"q_tol": float, "eta_tol": float, "p_omega": float, "block_limit": int}


class ConfigError(ValueError):
    pass


def _kind(key):
    if key in _OPTIONAL_TYPES:
        return _OPTIONAL_TYPES[key]
    return type(DEFAULTS[key])


def _coerce(key, value):
    """Convert a file or flag value to the type of the key's default."""
    if value is None:
        return None
    kind = _kind(key)
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind is int:
            if isinstance(value, bool):
                raise ValueError(value)
            if isinstance(value, int):
                return value
            as_float = float(value)
            if not as_float.is_integer():
                raise ValueError(value)
            return int(as_float)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read {value!r} as {kind.__name__}") from None


def load_config(path=None, overrides=None) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update({k: _coerce(k, v) for k, v in data.items()})
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = _coerce(k, v)
    return cfg


def params_from(cfg) -> Bbm92Params:
    try:
        return Bbm92Params(**{k: cfg[k] for k in _PARAM_FIELDS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def scenario_from(cfg) -> Scenario:
    try:
        kind = ScenarioKind(cfg["scenario"])
        return Scenario(kind, 1 if kind is ScenarioKind.FULL else cfg["n_subblocks"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def plan_from(cfg) -> SamplingPlan:
    try:
        return SamplingPlan(cfg["n_subblocks"], cfg["eps_abort"], cfg["block_limit"],
                            normalize_seed(cfg["seed"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def blocking_from(cfg) -> BlockingParams:
    try:
        return BlockingParams(cfg["m_prime"], cfg["n_prime"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_ns_range(text: str) -> range:
    """``A..B`` inclusive; ``B < A`` gives an empty range."""
    try:
        a, b = text.split("..")
        return range(int(a), int(b) + 1)
    except ValueError:
        raise ConfigError(f"--ns-range wants A..B, got {text!r}") from None


def config_header(cfg) -> str:
    return "# config " + json.dumps(cfg, sort_keys=True)


def _log(msg):
    print(msg, file=sys.stderr)


# -- commands ------------------------------------------------------------------

def cmd_keylen(cfg, out) -> int:
    params = params_from(cfg)
    scenario = scenario_from(cfg)
    if cfg["optimize_px"]:
        try:
            params = dataclasses.replace(params, p_x=bbm92.optimize_px(params, scenario))
        except InfeasibleError:
            pass
    res = bbm92.solve_key_length(params, scenario)
    lines = [
        config_header(cfg),
        f"scenario: {scenario.kind.value}",
        f"n_subblocks: {scenario.n_subblocks}",
        f"bound_form: {params.bound_form}",
        f"p_x: {params.p_x!r}",
        f"l: {res.length}",
        f"l_per_signal: {res.length / params.n_rounds!r}",
        f"l_per_block: {res.per_block}",
        f"alpha: {res.alpha!r}",
        f"e_tangent: {res.e_tangent!r}",
        f"eps_smooth: {res.eps_smooth!r}",
        f"eps_pa: {res.eps_pa!r}",
    ]
    if not res.feasible:
        lines.append("note: infeasible, no positive key at these parameters")
    out.write("\n".join(lines) + "\n")
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_sweep(cfg, ns_range, out, jobs=1) -> int:
    params = params_from(cfg)
    blocking = blocking_from(cfg)
    _log(config_header(cfg))
    rows = pipeline.scenario_compare(params, ns_range, cfg["optimize_px"], blocking, jobs=jobs)
    pipeline.write_results_csv(out, rows)
    return EXIT_OK


def cmd_extract(cfg, out_path, input_path=None, input_bits=None) -> int:
    params = params_from(cfg)
    plan = plan_from(cfg)
    blocking = blocking_from(cfg)
    _log(config_header(cfg))
    if input_path is None:
        rounds = pipeline.simulate_rounds(params, plan.master_seed)
        report = pipeline.run_extraction(rounds, plan, params, blocking)
    else:
        data = BitString.read(input_path, input_bits)
        report = pipeline.extract_sifted(data, plan, params, blocking)
    print(json.dumps(report.summary(), sort_keys=True))
    if report.aborted:
        return {pipeline.ABORT_OVERSIZE: EXIT_OVERSIZE,
                pipeline.ABORT_STATISTICS: EXIT_STATISTICS}.get(report.reason, EXIT_INFEASIBLE)
    report.key.write(out_path)
    return EXIT_OK


def bench_point(n_bits: int, n_subblocks: int, out_fraction: float, seed,
                blocking: BlockingParams = BlockingParams(), eps_abort: float = 1e-8) -> dict:
    """Wall time of Full against Splitting hashing on ``n_bits`` random bits."""
    out_bits = max(1, round(n_bits * out_fraction))
    data = random_bits(seed, "bench/input", n_bits)
    t0 = time.perf_counter()
    pipeline.hash_subblocks([data], out_bits, seed, blocking)
    full_s = time.perf_counter() - t0
    bits = data.to_bits()
    parts = sift_partition(bits >= 0, assign_subblocks(n_bits, n_subblocks, seed))
    blocks = [BitString.from_bits(bits[ix]) for ix in parts]
    t0 = time.perf_counter()
    pipeline.hash_subblocks(blocks, out_bits // n_subblocks, seed, blocking)
    split_s = time.perf_counter() - t0
    full_c = pipeline.timing_model(n_bits, out_bits, Scenario.full(), blocking)
    split_c = pipeline.timing_model(n_bits, out_bits, Scenario.splitting(n_subblocks), blocking,
                                    eps_abort=eps_abort)
    return {"input_bits": n_bits, "N_S": n_subblocks, "output_bits": out_bits,
            "full_s": full_s, "split_s": split_s, "measured_ratio": full_s / split_s,
            "modeled_ratio": full_c / split_c}


def cmd_bench(cfg, sizes, n_subblocks, out_fraction, out) -> int:
    blocking = blocking_from(cfg)
    seed = normalize_seed(cfg["seed"])
    _log(config_header(cfg))
    cols = ("input_bits", "N_S", "output_bits", "full_s", "split_s", "measured_ratio",
            "modeled_ratio")
    out.write(",".join(cols) + "\n")
    for n in sizes:
        row = bench_point(n, n_subblocks, out_fraction, seed, blocking, cfg["eps_abort"])
        out.write(",".join(f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c])
                           for c in cols) + "\n")
    return EXIT_OK


def cmd_limit(cfg, p_sift, m_blocks, out) -> int:
    p = params_from(cfg).p_sift if p_sift is None else p_sift
    m = cfg["n_subblocks"] if m_blocks is None else m_blocks
    try:
        limit = block_limit(cfg["n_rounds"], p, cfg["eps_abort"], m)
    except InfeasibleError as exc:
        _log(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.write(f"{limit}\n")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------

def _add_shared(p):
    p.add_argument("--config", help="JSON file of flat parameter keys")
    p.add_argument("--seed", help="master seed, up to 64 hex digits")
    p.add_argument("--out", help="output path (stdout when omitted, where allowed)")
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    p.add_argument("--ns", type=int, help="number of sub-blocks N_S")
    p.add_argument("--ns-range", help="inclusive N_S range A..B for sweeps")
    p.add_argument("--optimize-px", action="store_const", const=True, default=None,
                   help="optimise p_X for each point")
    shared = {"seed", "scenario", "optimize_px", "n_subblocks"}
    for key in DEFAULTS:
        if key in shared:
            continue
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, metavar="V",
                       help=f"override {key} (default {DEFAULTS[key]!r})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbhash", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("keylen", help="key length for one scenario")
    _add_shared(p)
    p = sub.add_parser("sweep", help="CSV over scenarios and N_S")
    _add_shared(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p = sub.add_parser("extract", help="simulate or read sifted bits and extract a key")
    _add_shared(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--simulate", action="store_true", help="simulate n_rounds honest rounds")
    src.add_argument("--input", help="raw-bit file holding the sifted string")
    p.add_argument("--input-bits", type=int, help="bit length of --input (default 8 x size)")
    p = sub.add_parser("bench", help="software hashing time, Full against Splitting")
    _add_shared(p)
    p.add_argument("--sizes", default="1000000", help="comma separated input sizes in bits")
    p.add_argument("--output-fraction", type=float, default=6.054 / 96.04,
                   help="output bits per input bit")
    p = sub.add_parser("limit", help="sub-block length cap L_S^UB")
    _add_shared(p)
    p.add_argument("--p-sift", type=float, help="per-round inclusion probability")
    p.add_argument("--m", type=int, help="number of blocks in the union bound")
    return parser


def _overrides(args) -> dict:
    keys = set(DEFAULTS) - {"n_subblocks"}
    ov = {k: getattr(args, k, None) for k in keys}
    ov["n_subblocks"] = args.ns
    return ov


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "keylen":
            return _with_out(args.out, lambda fh: cmd_keylen(cfg, fh))
        if args.command == "sweep":
            if args.ns_range is not None:
                ns_range = parse_ns_range(args.ns_range)
            elif args.ns is not None:
                ns_range = range(args.ns, args.ns + 1)
            else:
                ns_range = range(1, 31)
            return _with_out(args.out, lambda fh: cmd_sweep(cfg, ns_range, fh, args.jobs))
        if args.command == "extract":
            if args.out is None:
                raise ConfigError("extract needs --out for the key file")
            return cmd_extract(cfg, args.out, args.input, args.input_bits)
        if args.command == "bench":
            try:
                sizes = [int(float(s)) for s in args.sizes.split(",") if s.strip()]
            except ValueError:
                raise ConfigError(f"--sizes wants integers, got {args.sizes!r}") from None
            if not sizes or min(sizes) < 1:
                raise ConfigError("--sizes must be positive")
            ns = args.ns if args.ns is not None else 20
            return _with_out(args.out, lambda fh: cmd_bench(cfg, sizes, ns,
                                                            args.output_fraction, fh))
        return _with_out(args.out, lambda fh: cmd_limit(cfg, args.p_sift, args.m, fh))
    except ConfigError as exc:
        _log(f"error: {exc}")
        return EXIT_PARSE
    except OSError as exc:
        _log(f"I/O error: {exc}")
        return EXIT_IO


def _with_out(path, fn) -> int:
    if path is None:
        return fn(sys.stdout)
    with open(path, "w", newline="") as fh:
        return fn(fh)


if __name__ == "__main__":
    sys.exit(main())
