"""Command-line entry point ``ldbuffer``.

Scalars and reports go to standard output as JSON (sorted keys); traces and
paths go to CSV files named by ``--out``.  Domain errors exit with status 1
and a JSON object ``{"kind": ..., "message": ...}`` on standard error; usage
errors exit with status 2.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .errors import LdBufferError

SCHEMAS = {
    "model validate": 'stdout JSON: {"valid": bool, "failures": [str], "K": int, "J": int, "name": str}. '
                      "Exit 1 with a ModelError when the model is invalid.",
    "model show": "stdout JSON: the model in canonical form "
                  '{"K", "transitions": [{"e", "rate": {"c", "m"}}], "a", "C"}.',
    "rate eval": 'stdout JSON: {"value", "theta_star": [..], "grad_norm", "iterations"} '
                 "for the local cost l(x, y).",
    "solve": 'stdout JSON: {"T", "cost", "B_level", "buffer_terminal", "active", "starts", '
             '"spread", "multiplier", "x0", "frozen_at", "concavity_gap", "min_phi_minus_C"}. '
             "--out CSV: t,x1..xK node table of the optimal path.",
    "rescale-study": 'stdout JSON: {"reference": {...solve summary}, "x_star": [..], "rows": int}. '
                     "--out CSV: B,T_B,T_B_over_sqrtB,T_error,sup_distance,cost,cost_over_sqrtB,"
                     "entry_x1..entry_xK.",
    "fluid": 'stdout JSON: {"times": [..], "states": [[..]], "step"} or, with '
             '--attracting-point, {"q", "eigenvalues_real", "eigenvalues_imag", "stable", '
             '"residual", "C_minus_q_dot_a"}. --out CSV: t,z1..zK.',
    "upcross": 'stdout JSON: {"x_star", "beta", "entropy", "steady_form", "pi", '
               '"hessian_min_eig", "stationarity_residual", "drift": {...}}.',
    "simulate": 'stdout JSON: {"seed", "trial", "n", "events", "overflow_time", "dead_time", '
                '"cap_hits", "final_z", "final_b"}. --out CSV: t,jump,z1..zK,b per event '
                "(jump = -1 for the initial and closing rows).",
    "overflow": 'stdout JSON: {"n", "B", "trials", "hits", "p_hat", "log_rate", "ci95", '
                '"log_rate_ci95", "cap_hits", "dead_runs", "seed", "horizon"}; '
                'infinite rates are written as "inf".',
    "conditional": 'stdout JSON: {"hits", "used", "trials", "width", "peak_width", "mean_overflow_time"}; '
                   "width is the time-averaged envelope norm, peak_width its maximum. "
                   "--out CSV: t,mean_z1..mean_zK,env_z1..env_zK on the aligned window.",
    "bd-rate": 'stdout JSON: {"b", "c", "decay_rate", "mean_rate", "peak_rate"}; '
               'decay_rate is "inf" when the peak rate does not exceed c.',
}


def _vec(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _floats(text):
    return [float(v) for v in _vec(text)]


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _posint(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _clean(obj):
    """Make a result JSON-safe: arrays to lists, infinities to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(obj):
    sys.stdout.write(json.dumps(_clean(obj), sort_keys=True) + "\n")


def _write(path, writer):
    with open(path, "w", newline="") as fh:
        writer(fh)


class _Usage(Exception):
    pass


# -- subcommand handlers ---------------------------------------------------

def _model(args):
    from .model import load_model, model_to_dict, validate
    from .errors import ModelError
    model = load_model(args.model)
    if args.action == "show":
        _emit(model_to_dict(model))
        return 0
    rep = validate(model)
    out = rep.to_dict()
    out.update({"K": model.K, "J": model.J, "name": model.name})
    _emit(out)
    if not rep.valid:
        raise ModelError("; ".join(rep.failures))
    return 0


def _rate(args):
    from .model import load_model
    from .ratefn import local_cost
    model = load_model(args.model)
    _emit(local_cost(model, args.x, args.y, tol=args.tol).to_dict())
    return 0


def _start_point(model, x0, steady_form):
    if x0 is not None:
        return x0
    from .equilibrium import upcrossing_point
    return upcrossing_point(model, steady_form).x_star


def _solve(args):
    from .model import FrozenModel, load_model
    from .pathspace import write_path_csv
    from .varsolver import path_diagnostics, solve_problem_A
    model = load_model(args.model)
    x0 = _start_point(model, args.x0, args.steady_form)
    cost_model = FrozenModel(model, args.frozen_at) if args.frozen_at is not None else model
    sol = solve_problem_A(cost_model, x0, args.B, N=args.grid, starts=args.starts,
                          seed=args.seed, T_max=args.T_max)
    out = sol.summary()
    out.update(path_diagnostics(sol, model))
    out["x0"] = np.asarray(x0).tolist()
    out["frozen_at"] = None if args.frozen_at is None else args.frozen_at.tolist()
    _emit(out)
    if args.out:
        _write(args.out, lambda fh: write_path_csv(sol.path, fh))
    return 0


def _rescale_study(args):
    from .model import load_model
    from .varsolver import small_buffer_study
    model = load_model(args.model)
    x_star = _start_point(model, args.x_star, args.steady_form)
    table = small_buffer_study(model, x_star, args.B, N=args.grid,
                               starts=args.starts, seed=args.seed)
    _emit({"reference": table.reference.summary(), "x_star": np.asarray(x_star).tolist(),
           "rows": len(table.rows)})
    if args.out:
        _write(args.out, table.write_csv)
    return 0


def _fluid(args):
    from .equilibrium import attracting_point, fluid_trajectory
    from .model import load_model
    model = load_model(args.model)
    if args.attracting_point:
        _emit(attracting_point(model, x0=args.x0).to_dict())
        return 0
    if args.x0 is None:
        raise _Usage("--x0 is required unless --attracting-point is given")
    traj = fluid_trajectory(model, args.x0, args.horizon, step=args.step, tol=args.tol)
    _emit(traj.to_dict())
    if args.out:
        import csv

        def w(fh):
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t"] + [f"z{k + 1}" for k in range(model.K)])
            for t, z in zip(traj.times, traj.states):
                wr.writerow([repr(float(t))] + [repr(float(v)) for v in z])
        _write(args.out, w)
    return 0


def _upcross(args):
    from .equilibrium import drift_report, upcrossing_point
    from .model import load_model
    model = load_model(args.model)
    res = upcrossing_point(model, args.steady_form, pi=args.pi, N=args.N)
    out = res.to_dict()
    out["drift"] = drift_report(model, res.x_star)
    _emit(out)
    return 0


def _simulate(args):
    from .model import load_model
    from .simulate import ssa_simulate
    model = load_model(args.model)
    run = ssa_simulate(model, args.n, args.x0, args.horizon, B_stop=args.B_stop,
                       seed=args.seed, trial=args.trial, burn_in=args.burn_in,
                       state_cap=args.state_cap)
    _emit(run.summary())
    if args.out:
        _write(args.out, run.write_csv)
    return 0


def _overflow(args):
    from .model import load_model
    from .simulate import overflow_probability
    model = load_model(args.model)
    est = overflow_probability(model, args.n, args.x0, args.B, args.horizon,
                               args.trials, seed=args.seed, burn_in=args.burn_in,
                               state_cap=args.state_cap)
    _emit(est.to_dict())
    return 0


def _conditional(args):
    from .model import load_model
    from .simulate import conditional_paths
    model = load_model(args.model)
    res = conditional_paths(model, args.n, args.x0, args.B, args.trials,
                            seed=args.seed, window=args.window, horizon=args.horizon,
                            mesh=args.mesh, max_hits=args.max_hits,
                            burn_in=args.burn_in, state_cap=args.state_cap)
    _emit({"hits": res.hits, "used": res.used, "trials": res.trials,
           "width": res.width, "peak_width": res.peak_width, "mean_overflow_time": float(np.mean(res.overflow_times))})
    if args.out:
        _write(args.out, res.write_csv)
    return 0


def _bd_rate(args):
    from .crosscheck import bd_decay_rate, load_source, source_from_closed_model
    from .model import load_model
    if args.source:
        src = load_source(args.source)
    else:
        src = source_from_closed_model(load_model(args.model))
    c = args.c if args.c is not None else load_model(args.model).C
    rate = bd_decay_rate(src, args.b, c)
    _emit({"b": args.b, "c": c, "decay_rate": rate, "mean_rate": src.mean_rate,
           "peak_rate": float(src.rates.max())})
    return 0


# -- parser ------------------------------------------------------------------

def _sub(subs, name, handler, help_text, schema_key=None):
    p = subs.add_parser(name, help=help_text,
                        description=f"{help_text}\n\nOutput: {SCHEMAS[schema_key or name]}",
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.set_defaults(handler=handler)
    return p


def _sim_flags(p, need_B=True):
    p.add_argument("--model", required=True, help="model JSON path or bundled name")
    p.add_argument("--n", type=_posint, required=True, help="scale parameter")
    p.add_argument("--x0", type=_vec, required=True,
                   help="start state, comma-separated, on the lattice (1/n)Z^K")
    p.add_argument("--horizon", type=_positive, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=_nonneg, default=0.0,
                   help="unrecorded warm-up time before the measurement starts")
    p.add_argument("--state-cap", type=_vec, default=None,
                   help="per-coordinate cap on z (default: 10x fluid equilibrium)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ldbuffer",
        description="Most-likely buffer-overflow paths, decay rates and Monte Carlo checks "
                    "for Markov jump-process traffic models.")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs.required = True

    p = subs.add_parser("model", help="validate or print a model",
                        description="Validate or print a model.\n\nOutput:\n  validate: "
                        + SCHEMAS["model validate"] + "\n  show: " + SCHEMAS["model show"],
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("action", choices=["validate", "show"])
    p.add_argument("--model", required=True)
    p.set_defaults(handler=_model)

    p = subs.add_parser("rate", help="evaluate the local cost l(x, y)",
                        description="Evaluate the local cost l(x, y).\n\nOutput: "
                        + SCHEMAS["rate eval"],
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("action", choices=["eval"])
    p.add_argument("--model", required=True)
    p.add_argument("--x", type=_vec, required=True)
    p.add_argument("--y", type=_vec, required=True)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.set_defaults(handler=_rate)

    p = _sub(subs, "solve", _solve, "solve the free-time overflow problem from x0")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", type=_vec, default=None,
                   help="start on or above the hyperplane (default: upcrossing point)")
    p.add_argument("--B", type=_positive, required=True, help="buffer level")
    p.add_argument("--frozen-at", type=_vec, default=None,
                   help="freeze the rates at this state")
    p.add_argument("--grid", type=_posint, default=256)
    p.add_argument("--starts", type=_posint, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--T-max", type=_positive, default=None, help="cap on the horizon search")
    p.add_argument("--steady-form", choices=["poisson", "multinomial"], default="poisson")
    p.add_argument("--out")

    p = _sub(subs, "rescale-study", _rescale_study,
             "compare zoomed small-buffer optima with the frozen unit-buffer optimum")
    p.add_argument("--model", required=True)
    p.add_argument("--B", type=_floats, required=True, help="levels, e.g. 0.5,0.1,0.02")
    p.add_argument("--x-star", type=_vec, default=None)
    p.add_argument("--grid", type=_posint, default=256)
    p.add_argument("--starts", type=_posint, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steady-form", choices=["poisson", "multinomial"], default="poisson")
    p.add_argument("--out")

    p = _sub(subs, "fluid", _fluid, "integrate the fluid limit or locate its attracting point")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", type=_vec, default=None)
    p.add_argument("--horizon", type=_positive, default=1.0)
    p.add_argument("--step", type=_positive, default=None)
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--attracting-point", action="store_true")
    p.add_argument("--out")

    p = _sub(subs, "upcross", _upcross, "minimum-entropy point on the buffer hyperplane")
    p.add_argument("--model", required=True)
    p.add_argument("--steady-form", choices=["poisson", "multinomial"], default="poisson")
    p.add_argument("--pi", type=_vec, default=None,
                   help="stationary means (default: the attracting point)")
    p.add_argument("--N", type=_positive, default=None, help="population (multinomial)")

    p = _sub(subs, "simulate", _simulate, "simulate one trajectory of (z_n, b_n)")
    _sim_flags(p)
    p.add_argument("--B-stop", type=float, default=math.inf)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--out")

    p = _sub(subs, "overflow", _overflow, "Monte Carlo overflow probability")
    _sim_flags(p)
    p.add_argument("--B", type=_nonneg, required=True)
    p.add_argument("--trials", type=_posint, required=True)

    p = _sub(subs, "conditional", _conditional, "mean path conditioned on overflow")
    _sim_flags(p)
    p.add_argument("--B", type=_positive, required=True)
    p.add_argument("--trials", type=_posint, required=True)
    p.add_argument("--window", type=_positive, default=None)
    p.add_argument("--mesh", type=_posint, default=200)
    p.add_argument("--max-hits", type=_posint, default=None)
    p.add_argument("--out")

    p = _sub(subs, "bd-rate", _bd_rate, "decay rate for superposed finite-state sources")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--source", help='source JSON {"Q": [[..]], "rates": [..]}')
    g.add_argument("--model", help="closed per-source switching model")
    p.add_argument("--b", type=_positive, required=True)
    p.add_argument("--c", type=_positive, default=None,
                   help="drain per source (default: the model's C)")
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _Usage as exc:
        parser.error(str(exc))
    except LdBufferError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return 1
    except (ValueError, OverflowError, OSError) as exc:
        sys.stderr.write(json.dumps({"kind": type(exc).__name__, "message": str(exc)},
                                    sort_keys=True) + "\n")
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
