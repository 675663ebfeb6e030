"""Command-line front end.

    convex-closure <command> (--config FILE | --fixture NAME) [--out DIR]
                   [--seed N] [--tol-env X] [--resolution N]

Every command writes ``<command>.csv`` (per-point data) and
``<command>.json`` (summary with verdict, tolerances, grid and slope
parameters, seed and version) into ``--out``. Exit status: 0 when the
check passes, 2 when a mathematical check fails, 1 on input or solver
errors.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from . import fixtures as fx
from .envelopes import (TOL_ENV, GridFunction, SlopeGrid, biconjugate, convex_hull_fn,
                        default_slope_grid, envelope_via_measures, fenchel_conjugate,
                        function_from_dict, lipschitz_estimate, tol_equiv)
from .geometry import CompactSubset, GeometryError, domain_from_dict, domain_to_dict
from .lp import LPError
from .measures import (MeasureError, MeasureFamily, measure_from_dict, tightness_check)
from .sequences import (CONV_TOL, FunctionSequence, ProofTraceScenario, SequenceError,
                        pasch_hausdorff, proof_trace_check, run_convergence_harness,
                        run_decreasing_harness)
from .envelopes import EnvelopeError

COMMANDS = ("conjugate", "envelope", "hull", "converge", "decrease", "trace",
            "tightness", "regularize")

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- output


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (float, int, np.floating, np.integer, np.bool_, bool)):
        return _num(obj)
    return obj


def _cell(v):
    v = _num(v) if not isinstance(v, str) else v
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    _atomic_write(path, buf.getvalue())


def write_json(path, obj):
    _atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _coords(dim):
    return [f"x{i}" for i in range(dim)]


# ---------------------------------------------------------------- inputs


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from None


def _require(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigError(f"{where}: missing field {key!r}")
    return cfg[key]


def _domain(cfg, resolution=None):
    spec = dict(_require(cfg, "domain"))
    if resolution is not None:
        spec["resolution"] = resolution
    return domain_from_dict(spec)


def _values(raw):
    return [np.inf if v in ("inf", "+inf", "Infinity") else float(v) for v in raw]


def _function(cfg, resolution=None):
    dom = _domain(cfg, resolution)
    return function_from_dict(dom, _require(cfg, "function"))


def _sequence(cfg, direction):
    dom = _domain(cfg)
    tag = cfg.get("class_tag", "continuous_bounded")
    terms = tuple(GridFunction(dom, _values(t), tag) for t in _require(cfg, "terms"))
    limit = GridFunction(dom, _values(_require(cfg, "limit")), tag)
    return FunctionSequence(terms, limit, cfg.get("direction", direction))


def _family(dom, cfg):
    return MeasureFamily(tuple(measure_from_dict(dom, m) for m in _require(cfg, "measures")))


def _scenario(cfg):
    dom = _domain(cfg)
    comp = tuple(CompactSubset(dom, tuple(c)) for c in _require(cfg, "compacts"))
    return ProofTraceScenario(dom, _family(dom, cfg), float(_require(cfg, "eps")),
                              float(_require(cfg, "delta")), comp,
                              np.asarray(_require(cfg, "x0"), float), cfg.get("N_terms"))


FUNCTION_FIXTURES = {
    "w_shape": lambda res, rng: fx.w_shape(fx.interval(res or 64)),
    "concave_chord": lambda res, rng: fx.concave_chord(fx.interval(res or 64)),
    "random_pl_1d": lambda res, rng: fx.random_piecewise_linear(fx.interval(res or 64), rng),
    "random_pl_2d": lambda res, rng: fx.random_piecewise_linear(fx.square(res or 24), rng),
    "indicator_2d": lambda res, rng: fx.indicator_like(fx.square(res or 12), rng),
    "convex_lsc": lambda res, rng: fx.random_convex(fx.interval(res or 32), rng),
}

SEQUENCE_FIXTURES = {
    "constant_sequence": lambda res, rng: fx.constant_sequence(fx.interval(res or 16)),
    "cutoff_square": lambda res, rng: fx.cutoff_square_sequence(res or 8),
    "pasch_ladder": lambda res, rng: fx.pasch_ladder(fx.w_shape(fx.interval(res or 32))),
    "shifted": lambda res, rng: fx.shifted(fx.w_shape(fx.interval(res or 32))),
    "indicator_sequence": lambda res, rng: fx.growing_indicator_sequence(
        fx.indicator_like(fx.square(res or 10), rng)),
    "decreasing_shift": lambda res, rng: fx.shifted(fx.w_shape(fx.interval(res or 32)),
                                                    "decreasing"),
    "moving_kink": lambda res, rng: fx.moving_kink_sequence(fx.w_shape(fx.interval(res or 32))),
    "falling_floor": lambda res, rng: fx.falling_floor_sequence(
        fx.concave_chord(fx.interval(res or 32)), top=3.0),
}

TRACE_FIXTURES = {
    "proof_trace": lambda: fx.proof_trace_scenarios(),
    "dirac_escape": lambda: {"dirac_escape": fx.dirac_escape_scenario()},
    "mixture_escape": lambda: {"mixture_escape": fx.mixture_escape_scenario()},
}


def _tightness_fixture(name, seed):
    if name == "basis_family":
        dom, fam, K = fx.basis_family()
        return dom, fam, K, 0.1, 0.5, ()
    if name == "tight_family":
        fam, K = fx.tight_family(seed=seed)
        return fam.domain, fam, K, 0.1, 0.05, ()
    raise ConfigError(f"unknown tightness fixture {name!r}")


DEFAULT_FIXTURE = {
    "conjugate": "w_shape", "envelope": "w_shape", "hull": "w_shape",
    "converge": "constant_sequence", "decrease": "decreasing_shift",
    "trace": "proof_trace", "tightness": "basis_family", "regularize": "convex_lsc",
}


# ---------------------------------------------------------------- commands


def _meta(args, dom=None, S=None, **extra):
    m = {
        "version": __version__,
        "seed": args.seed,
        "tolerances": {"tol_env": args.tol_env, "conv_tol": args.conv_tol, "tol_geom": 1e-9},
        "input": args.config if args.config else {"fixture": args.fixture},
    }
    if dom is not None:
        m["grid"] = {"h": dom.h, "n_points": len(dom.grid), "dimension": dom.dimension,
                     "domain": domain_to_dict(dom)}
    if S is not None:
        m["slopes"] = {"count": len(S), "step": S.step, "s_max": S.s_max}
    else:
        # no single slope grid: either none is used or one is built per function
        m["slopes"] = {"rule": "per function", "s_max": "4 * L_est", "step": "L_est * h"}
    m.update(extra)
    return m


def _get_function(args, rng):
    if args.config:
        cfg = load_config(args.config)
        return _function(cfg, args.resolution), cfg
    name = args.fixture or DEFAULT_FIXTURE[args.command]
    if name not in FUNCTION_FIXTURES:
        raise ConfigError(f"{args.command}: unknown fixture {name!r}; "
                          f"choose from {sorted(FUNCTION_FIXTURES)}")
    return FUNCTION_FIXTURES[name](args.resolution, rng), {}


def cmd_conjugate(args, rng):
    f, cfg = _get_function(args, rng)
    S = SlopeGrid(cfg["slopes"]) if "slopes" in cfg else default_slope_grid(f)
    conj = fenchel_conjugate(f, S)
    d = f.domain.dimension
    rows = [list(s) + [v] for s, v in zip(S.slopes, conj)]
    write_csv(os.path.join(args.out, "conjugate.csv"), [f"s{i}" for i in range(d)] + ["conj"], rows)
    write_json(os.path.join(args.out, "conjugate.json"),
               _meta(args, f.domain, S, command="conjugate", verdict="pass"))
    return EXIT_PASS


def cmd_envelope(args, rng, hull_only=False):
    f, cfg = _get_function(args, rng)
    dom = f.domain
    probes = np.asarray(cfg["probes"], float) if "probes" in cfg else dom.grid
    S = None
    if not hull_only:
        S = SlopeGrid(cfg["slopes"]) if "slopes" in cfg else default_slope_grid(f)
        cl = biconjugate(f, S)
    rows, worst = [], 0.0
    for x in probes:
        fx_ = f(x)
        if hull_only:
            co = convex_hull_fn(f, x)
            rows.append(list(x) + [fx_, co, fx_ - co if np.isfinite(co) else 0.0])
            continue
        lp = envelope_via_measures(f, x).value
        co = convex_hull_fn(f, x)
        c = cl(x)
        gap = lp - c if np.isfinite(lp) and np.isfinite(c) else 0.0
        worst = max(worst, abs(gap))
        rows.append(list(x) + [fx_, co, c, gap])
    name = "hull" if hull_only else "envelope"
    if hull_only:
        header = _coords(dom.dimension) + ["f", "co_f", "f_minus_co_f"]
        summary = _meta(args, dom, command=name, verdict="pass")
        status = EXIT_PASS
    else:
        header = _coords(dom.dimension) + ["f", "co_f", "closure_f", "gap"]
        L = lipschitz_estimate(f)
        teq = tol_equiv(dom.h, L, S.step, dom.diameter(1))
        ok = worst <= teq + args.tol_env
        summary = _meta(args, dom, S, command=name, max_route_gap=worst, tol_equiv=teq,
                        lipschitz_estimate=L, verdict="pass" if ok else "fail")
        status = EXIT_PASS if ok else EXIT_FAIL
    write_csv(os.path.join(args.out, f"{name}.csv"), header, rows)
    write_json(os.path.join(args.out, f"{name}.json"), summary)
    return status


def _harness_cmd(args, rng, direction):
    kind, probes = "closure", None
    if args.config:
        cfg = load_config(args.config)
        seq = _sequence(cfg, direction)
        kind = cfg.get("envelope_kind", "closure")
        probes = np.asarray(cfg["probes"], float) if "probes" in cfg else None
    else:
        name = args.fixture or DEFAULT_FIXTURE[args.command]
        if name not in SEQUENCE_FIXTURES:
            raise ConfigError(f"{args.command}: unknown fixture {name!r}; "
                              f"choose from {sorted(SEQUENCE_FIXTURES)}")
        seq = SEQUENCE_FIXTURES[name](args.resolution, rng)
    if seq.direction != direction:
        raise ConfigError(f"{args.command} expects a {direction} sequence")
    run = run_convergence_harness if direction == "increasing" else run_decreasing_harness
    rep = run(seq, kind, probes, conv_tol=args.conv_tol)
    dom = seq.domain
    rows = []
    for n in range(rep.gaps.shape[0]):
        for j, x in enumerate(rep.probes):
            rows.append([n + 1, j] + list(x)
                        + [rep.term_envelopes[n, j], rep.limit_envelope[j], rep.gaps[n, j]])
    header = ["n", "probe"] + _coords(dom.dimension) + ["env_term", "env_limit", "gap"]
    write_csv(os.path.join(args.out, f"{args.command}.csv"), header, rows)
    summary = _meta(args, dom, command=args.command, tail_gap=seq.tail_gap, **rep.summary())
    ok = rep.converged and rep.monotonicity_violations == 0
    summary["verdict"] = rep.verdict
    write_json(os.path.join(args.out, f"{args.command}.json"), summary)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_trace(args, rng):
    if args.config:
        scenarios = {"config": _scenario(load_config(args.config))}
    else:
        name = args.fixture or DEFAULT_FIXTURE["trace"]
        if name not in TRACE_FIXTURES:
            raise ConfigError(f"trace: unknown fixture {name!r}; choose from {sorted(TRACE_FIXTURES)}")
        scenarios = TRACE_FIXTURES[name]()
    rows, summaries, ok = [], {}, True
    for label, sc in scenarios.items():
        rep = proof_trace_check(sc)
        for r in rep.rows:
            rows.append([label, r.n, r.k, r.vicinity_mass, r.closure, r.hull, r.integral,
                         r.threshold, r.margin, r.barycenter_distance, r.chain_holds])
        summaries[label] = {
            "passed": rep.passed, "min_margin": rep.min_margin, "margin_min": rep.margin_min,
            "cutoff_inside_ok": rep.cutoff_inside_ok, "cutoff_outside_ok": rep.cutoff_outside_ok,
            "eps": sc.eps, "delta": sc.delta, "n_terms": len(rep.rows), "h": sc.domain.h,
        }
        ok &= rep.passed
    header = ["scenario", "n", "k", "vicinity_mass", "closure", "hull", "integral",
              "threshold", "margin", "barycenter_distance", "chain_holds"]
    write_csv(os.path.join(args.out, "trace.csv"), header, rows)
    write_json(os.path.join(args.out, "trace.json"),
               _meta(args, next(iter(scenarios.values())).domain, command="trace",
                     scenarios=summaries,
                     verdict="pass" if ok else "fail"))
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_tightness(args, rng):
    if args.config:
        cfg = load_config(args.config)
        dom = _domain(cfg)
        fam = _family(dom, cfg)
        K = CompactSubset(dom, tuple(_require(cfg, "compact")))
        eps, delta = float(_require(cfg, "eps")), float(_require(cfg, "delta"))
        exempt = tuple(cfg.get("exempt", ()))
    else:
        dom, fam, K, eps, delta, exempt = _tightness_fixture(
            args.fixture or DEFAULT_FIXTURE["tightness"], args.seed)
    rep = tightness_check(fam, eps, delta, K, exempt)
    rows = [[i, m, i in rep.offenders, i in rep.exempt] for i, m in enumerate(rep.masses)]
    write_csv(os.path.join(args.out, "tightness.csv"),
              ["measure", "vicinity_mass", "offending", "exempt"], rows)
    write_json(os.path.join(args.out, "tightness.json"),
               _meta(args, dom, command="tightness", eps=eps, delta=delta,
                     compact=list(K.indices), offenders=list(rep.offenders),
                     exempt=list(rep.exempt), verdict="pass" if rep.passed else "fail"))
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_regularize(args, rng):
    f, cfg = _get_function(args, rng)
    ns = [float(n) for n in cfg.get("n", [1, 2, 4, 8, 16, 32])]
    regs = [pasch_hausdorff(f, n) for n in ns]
    dom = f.domain
    rows = []
    for i, x in enumerate(dom.grid):
        rows.append(list(x) + [f.values[i]] + [g.values[i] for g in regs])
    header = _coords(dom.dimension) + ["f"] + [f"reg_n{n:g}" for n in ns]
    below = all(np.all(g.values <= f.values + args.tol_env) for g in regs)
    rising = all(np.all(a.values <= b.values + 1e-12) for a, b in zip(regs, regs[1:]))
    ok = below and rising
    write_csv(os.path.join(args.out, "regularize.csv"), header, rows)
    write_json(os.path.join(args.out, "regularize.json"),
               _meta(args, dom, command="regularize", n=ns, below_f=below, increasing=rising,
                     verdict="pass" if ok else "fail"))
    return EXIT_PASS if ok else EXIT_FAIL


HANDLERS = {
    "conjugate": cmd_conjugate,
    "envelope": cmd_envelope,
    "hull": lambda a, r: cmd_envelope(a, r, hull_only=True),
    "converge": lambda a, r: _harness_cmd(a, r, "increasing"),
    "decrease": lambda a, r: _harness_cmd(a, r, "decreasing"),
    "trace": cmd_trace,
    "tightness": cmd_tightness,
    "regularize": cmd_regularize,
}


def build_parser():
    p = argparse.ArgumentParser(prog="convex-closure", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON input file")
    src.add_argument("--fixture", help="built-in input by name")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-env", type=float, default=TOL_ENV)
    p.add_argument("--conv-tol", type=float, default=CONV_TOL)
    p.add_argument("--resolution", type=int)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    rng = np.random.default_rng(args.seed)
    try:
        return HANDLERS[args.command](args, rng)
    except (ConfigError, GeometryError, MeasureError, EnvelopeError, SequenceError,
            LPError, TypeError, KeyError) as exc:
        print(f"convex-closure {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
