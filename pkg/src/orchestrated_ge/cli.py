"""Command-line entry point: ``orchestrated-ge <command> --scenario <file|builtin> [flags]``.

Exit codes: 0 success, 1 validation or usage error, 2 non-convergence (solve only;
the report is still written). Numeric artifacts are CSV files in ``--out``
(default: ``$OGE_OUT_DIR`` or the current directory).
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import analysis, dsge
from .equilibrium import (
    read_state_csv,
    solve,
    verify_equilibrium,
    write_state_csv,
    write_trace_csv,
)
from .errors import OrchestratedGEError, ScenarioError
from .production import check_axioms
from .scenario import BUILTIN, load_scenario

log = logging.getLogger("orchestrated_ge")

COMMANDS = ("solve", "verify", "pareto", "contraction", "sweep", "dsge", "policy", "axioms")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help=f"scenario file, or one of the built-ins: {', '.join(BUILTIN)}")
    common.add_argument("--out", default=None, help="output directory for CSV artifacts")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--mode", choices=("raw", "saturated"), default=None, help="demand mode")
    common.add_argument("--mechanism", choices=("A", "B"), default=None, help="price mechanism")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="orchestrated-ge", description="Orchestrated general equilibrium solver")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="command")
    sub.required = True
    sub.add_parser("solve", parents=[common], help="run tatonnement to equilibrium")
    v = sub.add_parser("verify", parents=[common], help="E1-E3 and Walras residuals of a state")
    v.add_argument("--state", default=None, help="state CSV (block,agent,index,value); default: solve first")
    pa = sub.add_parser("pareto", parents=[common], help="grid search for a dominating allocation")
    pa.add_argument("--grid-step", type=float, default=None)
    sub.add_parser("contraction", parents=[common], help="contraction bound and Jacobian estimate")
    sw = sub.add_parser("sweep", parents=[common], help="nested-K Cauchy sweep")
    sw.add_argument("--k-list", default=None, help="comma-separated increasing K values")
    sub.add_parser("dsge", parents=[common], help="linearization, shock and impulse traces")
    sub.add_parser("policy", parents=[common], help="Taylor-rule closed loop")
    sub.add_parser("axioms", parents=[common], help="spot-check production-set axioms")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("OGE_OUT_DIR", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(key: str, value) -> None:
    if isinstance(value, float):
        value = repr(value)
    print(f"{key}={value}")


def _setup(args):
    sc = load_scenario(args.scenario)
    econ = sc.economy(mechanism=args.mechanism)
    config = sc.config(seed=args.seed, demand_mode=args.mode)
    return sc, econ, config, sc.initial_state(econ)


def _solved(econ, config, init):
    rep = solve(econ, config, init, record_trace=False, n_samples=10)
    if not rep.converged:
        log.warning("solve did not converge in %d iterations", rep.iterations)
    return rep


def cmd_solve(args) -> int:
    sc, econ, config, init = _setup(args)
    out = _out_dir(args)
    rep = solve(econ, config, init)
    write_trace_csv(rep, out / "trace.csv")
    write_state_csv(rep.state, out / "state.csv")
    r = rep.residuals
    _say("scenario", sc.name)
    _say("converged", rep.converged)
    _say("iterations", rep.iterations)
    for k in ("e1", "e2", "e3", "walras", "budget", "welfare"):
        _say(k, getattr(r, k))
    return 0 if rep.converged else 2


def cmd_verify(args) -> int:
    sc, econ, config, init = _setup(args)
    out = _out_dir(args)
    if args.state:
        state = read_state_csv(args.state, econ.A, econ.K, econ.n_paths)
    else:
        state = _solved(econ, config, init).state
    r = verify_equilibrium(state, econ, config, seed=config.seed)
    cols = ("e1", "e2", "e3", "walras", "budget", "welfare")
    with open(out / "verify.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerow([repr(float(getattr(r, c))) for c in cols])
    for c in cols:
        _say(c, float(getattr(r, c)))
    return 0


def cmd_pareto(args) -> int:
    sc, econ, config, init = _setup(args)
    out = _out_dir(args)
    step = args.grid_step if args.grid_step is not None else float(sc.section("pareto").get("grid_step", 0.05))
    rep = _solved(econ, config, init)
    pr = analysis.pareto_check(rep.state, econ, step)
    analysis.write_pareto_csv(pr, out / "pareto.csv")
    _say("dominated", pr.dominated)
    _say("points_scanned", pr.points_scanned)
    _say("feasible_points", pr.feasible_points)
    if pr.witness_policy is not None:
        _say("witness_policy", " ".join(repr(float(v)) for v in pr.witness_policy))
    return 0


def cmd_contraction(args) -> int:
    sc, econ, config, init = _setup(args)
    rep = _solved(econ, config, init)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cr = analysis.estimate_contraction(econ, config, rep.state)
    for w in caught:
        log.warning("%s", w.message)
    print(cr.summary())
    _say("depth_P", econ.paths.depth)
    for lam_name, lam in (("bound", cr.lambda_bound), ("est", cr.lambda_est)):
        for conv in ("plain", "banach"):
            try:
                n = analysis.iterations_to_accuracy(lam, 0.01, conv)
            except OrchestratedGEError:
                n = "none"
            _say(f"iterations_99pct_{lam_name}_{conv}", n)
    return 0


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    out = _out_dir(args)
    if args.k_list:
        try:
            ks = [int(x) for x in args.k_list.split(",") if x.strip()]
        except ValueError:
            raise ScenarioError([("--k-list", f"expected comma-separated integers, got {args.k_list!r}")]) from None
    else:
        ks = sc.k_list()
    bad = [k for k in ks if k <= 0 or k % sc.channels]
    if bad or not ks:
        raise ScenarioError([("--k-list", f"every K must be a positive multiple of {sc.channels} channels")])
    rep = analysis.bewley_sweep(sc.sweep_factory(args.seed, args.mode, args.mechanism), ks)
    analysis.write_sweep_csv(rep, out / "sweep.csv")
    _say("k_list", ",".join(map(str, rep.K_list)))
    _say("converged", ",".join(str(c) for c in rep.converged))
    _say("gaps", ",".join(repr(g) for g in rep.gaps))
    _say("last_le_first", rep.last_le_first)
    _say("tail_monotone", rep.tail_monotone)
    return 0


def _obs_row(t, dev, econ, state_pi):
    s = econ.welfare.slo
    from .consumer import welfare

    return (t, dev, s.lambda1, s.lambda2, float(state_pi @ s.lat), float(state_pi @ s.qual),
            welfare(state_pi, econ.welfare))


def cmd_dsge(args) -> int:
    sc, econ, config, init = _setup(args)
    out = _out_dir(args)
    rep = _solved(econ, config, init)
    star = rep.state
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lin = dsge.linearize(econ, config, star)
    spec = sc.shocks()
    if args.seed is not None:
        spec = dsge.ShockSpec(spec.sigma, spec.distribution, args.seed, spec.horizon)
    tr = dsge.simulate_shocks(econ, config, spec, init=star, reference=star)
    n = econ.A * econ.K
    rows = [_obs_row(t, tr.deviations[t], econ, tr.states[t, 2 * n:]) for t in range(len(tr.states))]
    dsge.write_dsge_csv(rows, out / "dsge_shocks.csv")

    imp = sc.section("impulse")
    v = lin.dominant_vector[:n]
    direction = v / np.linalg.norm(v) if np.linalg.norm(v) > 0 else np.eye(n)[0]
    ir = dsge.impulse_response(econ, config, star, float(imp.get("scale", 1e-2)) * direction,
                               int(imp.get("horizon", 60)))
    rows = [_obs_row(t, ir.deviations[t], econ, ir.states[t, 2 * n:]) for t in range(len(ir.deviations))]
    dsge.write_dsge_csv(rows, out / "dsge_impulse.csv")
    _say("spectral_radius", lin.spectral_radius)
    _say("norm_estimate", lin.norm_estimate)
    _say("stable", lin.stable)
    _say("impulse_decay_rate", ir.decay_rate)
    _say("shock_max_deviation", tr.max_deviation)
    return 0


def cmd_policy(args) -> int:
    sc, econ, config, init = _setup(args)
    out = _out_dir(args)
    if not sc.section("taylor"):
        raise ScenarioError([("taylor", "the policy command needs a taylor section")])
    rule, steps = sc.taylor()
    tr = dsge.policy_experiment(econ, config, rule, steps, init)
    rows = [(s.step, s.deviation, s.lambda1, s.lambda2, s.mean_lat, s.mean_qual, s.welfare) for s in tr.steps]
    dsge.write_dsge_csv(rows, out / "policy.csv")
    _say("steps", len(tr.steps))
    _say("all_converged", tr.all_converged)
    _say("latency_trend_ok", tr.latency_trend_ok)
    _say("final_lambda1", tr.steps[-1].lambda1)
    _say("final_lambda2", tr.steps[-1].lambda2)
    return 0


def cmd_axioms(args) -> int:
    sc, econ, config, _ = _setup(args)
    out = _out_dir(args)
    names = sc.agent_names
    cols = ("agent", "kind", "contains_zero", "bounded", "convex", "enclosing_radius", "max_midpoint_residual")
    all_ok = True
    with open(out / "axioms.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for a, s in enumerate(econ.sets):
            r = check_axioms(s, seed=config.seed + a)
            all_ok &= r.ok
            w.writerow((names[a], type(s).__name__.lower(), int(r.contains_zero), int(r.bounded), int(r.convex),
                        repr(float(r.enclosing_radius)), repr(float(r.max_midpoint_residual))))
            _say(f"{names[a]}.ok", r.ok)
            for v in r.violations:
                log.warning("agent %s: %s", names[a], v)
    _say("all_ok", all_ok)
    return 0


HANDLERS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "pareto": cmd_pareto,
    "contraction": cmd_contraction,
    "sweep": cmd_sweep,
    "dsge": cmd_dsge,
    "policy": cmd_policy,
    "axioms": cmd_axioms,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return HANDLERS[args.command](args)
    except ScenarioError as exc:
        for path, msg in exc.issues:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return 1
    except OrchestratedGEError as exc:
        print(f"error: [{exc.code}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
