"""Command-line front end.

Subcommands: plan, simulate, leakage, modes, fit, validate.  Inputs and
outputs are JSON (CSV for tables); identical inputs produce byte-identical
outputs.  Floats are written with Python's shortest round-trip repr (at most
17 significant digits) and every JSON document embeds the fully resolved
parameter set plus the library version, so no default is hidden.

Exit codes: 0 success, 2 invalid input, 3 numerical or solver failure.
The environment variable ILE_MAX_TERMS caps the multimode term count
(default 2^20).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__, chain, inverse, multimode, protocol
from .errors import SolverError
from .fock import FockVector
from .protocol import Cycle, PhysicalParams, ProtocolPlan

_EXIT_BAD_INPUT = 2
_EXIT_SOLVER = 3


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _pairs(seq) -> list[list[float]]:
    return [_pair(complex(z)) for z in seq]


def _complex_from_pair(obj, name: str) -> complex:
    try:
        re, im = obj
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name} must be a [re, im] pair") from exc


def _parse_complex_arg(text: str, name: str) -> complex:
    """CLI complex syntax: 'RE' or 'RE,IM'."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ValueError(f"{name} must look like 'RE' or 'RE,IM', got {text!r}")


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json_text(document: dict) -> str:
    return json.dumps(document, indent=2) + "\n"


def _max_terms() -> int:
    raw = os.environ.get("ILE_MAX_TERMS", "")
    if not raw:
        return multimode.DEFAULT_MAX_TERMS
    try:
        val = int(raw)
        if val < 1:
            raise ValueError
        return val
    except ValueError as exc:
        raise ValueError(f"ILE_MAX_TERMS must be a positive integer, got {raw!r}") from exc


def _plan_from_json(doc) -> ProtocolPlan:
    if not isinstance(doc, dict):
        raise ValueError("plan must be a JSON object")
    for key in ("eta", "omega", "delta", "n_ions", "alpha", "cycles"):
        if key not in doc:
            raise ValueError(f"plan is missing {key!r}")
    params = PhysicalParams(
        eta=float(doc["eta"]),
        omega=float(doc["omega"]),
        delta=float(doc["delta"]),
        n_ions=int(doc["n_ions"]),
    )
    cycles = []
    if not isinstance(doc["cycles"], list) or not doc["cycles"]:
        raise ValueError("plan needs a non-empty cycle list")
    for k, cyc in enumerate(doc["cycles"]):
        if not isinstance(cyc, dict) or "t" not in cyc or "p" not in cyc:
            raise ValueError(f"cycle {k} must be an object with 't' and 'p'")
        weights = [_complex_from_pair(p, f"cycle {k} weight") for p in cyc["p"]]
        cycles.append(Cycle(duration=float(cyc["t"]), weights=weights))
    return ProtocolPlan(
        params=params,
        alpha=_complex_from_pair(doc["alpha"], "alpha"),
        cycles=tuple(cycles),
    )


def _plan_params_doc(plan: ProtocolPlan) -> dict:
    return {
        "eta": plan.params.eta,
        "omega": plan.params.omega,
        "delta": plan.params.delta,
        "n_ions": plan.params.n_ions,
        "alpha": _pair(plan.alpha),
        "cycles": [
            {"t": c.duration, "p": _pairs(c.weights)} for c in plan.cycles
        ],
    }


def _solution_doc(sol: inverse.WeightSolution) -> dict:
    return {
        "weights": _pairs(sol.weights),
        "branch": list(sol.branch_id),
        "p_nominal": sol.p_nominal,
        "residual": sol.residual,
    }


def cmd_plan(args) -> int:
    doc = _load_json(args.input)
    if not isinstance(doc, dict) or "coeffs" not in doc:
        raise ValueError("target must be a JSON object with a 'coeffs' list")
    coeffs = [_complex_from_pair(c, "coefficient") for c in doc["coeffs"]]
    target = inverse.TargetCoefficients(np.array(coeffs))
    opts = inverse.SolveOptions(
        max_branches=args.max_branches,
        root_tolerance=args.tolerance,
        enumerate_all=args.all,
    )
    solutions = inverse.solve_weights(target, opts)
    best = inverse.best_realization(solutions)
    out = {
        "version": __version__,
        "params": {
            "coeffs": _pairs(coeffs),
            "max_branches": opts.max_branches,
            "tolerance": opts.root_tolerance,
            "enumerate_all": opts.enumerate_all,
        },
    }
    out.update(_solution_doc(best))
    if args.all:
        out["solutions"] = [_solution_doc(s) for s in solutions]
    _emit(_json_text(out), args.output)
    return 0


def cmd_simulate(args) -> int:
    plan = _plan_from_json(_load_json(args.input))
    result = protocol.run_ideal(plan)
    out = {
        "version": __version__,
        "params": _plan_params_doc(plan),
        "beta": _pair(result.state.beta),
        "coeffs": _pairs(result.state.coeffs),
        "p_nominal": result.p_nominal,
        "p_exact": result.p_exact,
        "per_cycle": [float(p) for p in result.per_cycle_p_exact],
    }
    if args.fock is not None:
        out["fock"] = protocol.to_fock(result.state, args.fock).to_json()
    _emit(_json_text(out), args.output)
    return 0


def _parse_sweep(spec: str) -> tuple[str, np.ndarray]:
    try:
        name, rng = spec.split("=", 1)
        start, stop, count = rng.split(":")
        name = name.strip()
        start, stop, count = float(start), float(stop), int(count)
    except ValueError as exc:
        raise ValueError(
            f"sweep must look like NAME=START:STOP:COUNT, got {spec!r}"
        ) from exc
    if name not in ("delta", "t"):
        raise ValueError(f"sweep parameter must be 'delta' or 't', got {name!r}")
    if count < 2:
        raise ValueError("sweep count must be at least 2")
    return name, np.linspace(start, stop, count)


def _plan_with(plan: ProtocolPlan, name: str, value: float) -> ProtocolPlan:
    if name == "delta":
        params = PhysicalParams(
            eta=plan.params.eta,
            omega=plan.params.omega,
            delta=value,
            n_ions=plan.params.n_ions,
        )
        return ProtocolPlan(params=params, alpha=plan.alpha, cycles=plan.cycles)
    cycles = tuple(Cycle(duration=value, weights=c.weights) for c in plan.cycles)
    return ProtocolPlan(params=plan.params, alpha=plan.alpha, cycles=cycles)


def cmd_leakage(args) -> int:
    plan = _plan_from_json(_load_json(args.input))
    modes = chain.normal_modes(chain.equilibrium_positions(plan.params.n_ions))
    integrated = not args.paper_beta
    variant = "integrated" if integrated else "paper"
    max_terms = _max_terms()

    if args.format == "json":
        if args.sweep is not None:
            raise ValueError("JSON output is for single points; sweeps emit CSV")
        report, p_exact = multimode.analyze_plan(plan, modes, integrated, max_terms=max_terms)
        out = {
            "version": __version__,
            "params": {**_plan_params_doc(plan), "variant": variant},
            "mean_phonon": [float(m) for m in report.per_mode_mean_phonon],
            "com_fidelity": report.com_fidelity_vs_ideal,
            "com_purity": report.com_purity,
            "factorization_gap": report.factorization_gap,
            "p_exact": p_exact,
        }
        _emit(_json_text(out), args.output)
        return 0

    if args.sweep is not None:
        name, values = _parse_sweep(args.sweep)
        points = [(name, float(v)) for v in values]
    else:
        points = [(None, None)]

    n = plan.params.n_ions
    header = (
        ["delta", "t", "eta", "omega", "n_ions", "alpha_re", "alpha_im", "variant", "complete"]
        + ["p_exact", "com_fidelity", "com_purity", "gap"]
        + [f"mean_phonon_{l + 1}" for l in range(n)]
    )
    rows = []
    for name, value in points:
        point_plan = plan if name is None else _plan_with(plan, name, value)
        base = [
            repr(point_plan.params.delta),
            repr(point_plan.cycles[0].duration),
            repr(point_plan.params.eta),
            repr(point_plan.params.omega),
            repr(point_plan.params.n_ions),
            repr(point_plan.alpha.real),
            repr(point_plan.alpha.imag),
            variant,
        ]
        try:
            report, p_exact = multimode.analyze_plan(
                point_plan, modes, integrated, max_terms=max_terms
            )
        except SolverError:
            rows.append(base + ["false"] + [""] * (4 + n))
            continue
        rows.append(
            base
            + ["true"]
            + [
                repr(p_exact),
                repr(report.com_fidelity_vs_ideal),
                repr(report.com_purity),
                repr(report.factorization_gap),
            ]
            + [repr(float(m)) for m in report.per_mode_mean_phonon]
        )

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_modes(args) -> int:
    geometry = chain.equilibrium_positions(args.n_ions)
    table = chain.normal_modes(geometry)
    if args.format == "json":
        out = {
            "version": __version__,
            "params": {"n_ions": args.n_ions},
            "mu": [float(m) for m in table.frequencies],
            "b": [[float(x) for x in table.vectors[:, l]] for l in range(table.n_ions)],
            "positions": [float(u) for u in geometry.positions],
        }
        _emit(_json_text(out), args.output)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(
            ["n_ions", "mode", "mu"] + [f"b_{i + 1}" for i in range(table.n_ions)]
        )
        for l in range(table.n_ions):
            writer.writerow(
                [repr(args.n_ions), repr(l + 1), repr(float(table.frequencies[l]))]
                + [repr(float(x)) for x in table.vectors[:, l]]
            )
        _emit(buf.getvalue(), args.output)
    return 0


def cmd_fit(args) -> int:
    doc = _load_json(args.input)
    pairs = doc["amplitudes"] if isinstance(doc, dict) and "amplitudes" in doc else doc
    if not isinstance(pairs, list):
        raise ValueError("fit target must be a JSON list of [re, im] pairs")
    target = FockVector.from_json(pairs)
    alpha = _parse_complex_arg(args.alpha, "--alpha")
    beta = _parse_complex_arg(args.beta, "--beta")
    coeffs, fidelity = inverse.fit_target(target, args.n, alpha, beta)
    out = {
        "version": __version__,
        "params": {
            "n": args.n,
            "alpha": _pair(alpha),
            "beta": _pair(beta),
            "cutoff": target.cutoff,
        },
        "coeffs": _pairs(coeffs.coeffs),
        "fidelity": fidelity,
    }
    _emit(_json_text(out), args.output)
    return 0


def cmd_validate(args) -> int:
    params = PhysicalParams(
        eta=args.eta, omega=args.omega, delta=args.delta, n_ions=args.n_ions
    )
    modes = chain.normal_modes(chain.equilibrium_positions(args.n_ions))
    cfg = multimode.TrotterConfig(
        cutoff=args.cutoff, steps=args.steps, include_fast_terms=args.full_terms
    )
    weights = None
    if args.weights is not None:
        weights = [_parse_complex_arg(w, "--weights") for w in args.weights.split(";")]
    report = multimode.trotter_validate(params, modes, args.t, cfg, weights=weights)
    out = {
        "version": __version__,
        "params": {
            "eta": args.eta,
            "omega": args.omega,
            "delta": args.delta,
            "n_ions": args.n_ions,
            "t": args.t,
            "cutoff": args.cutoff,
            "steps": args.steps,
            "full_terms": args.full_terms,
            "weights": _pairs(weights) if weights is not None else _pairs([0j] * args.n_ions),
        },
        "fidelity_integrated": report.fidelity_integrated,
        "fidelity_endpoint": report.fidelity_endpoint,
        "step_halving_ratio": report.step_halving_ratio,
        "fast_terms_effect": report.fast_terms_effect,
        "conditional_weight": report.conditional_weight,
    }
    _emit(_json_text(out), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ile",
        description="Plan and simulate line superpositions of coherent states "
        "on the COM mode of a trapped-ion string.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve a coefficient target for internal-state weights")
    p.add_argument("--input", required=True, help="target JSON with a 'coeffs' list")
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.add_argument("--all", action="store_true", help="emit every branch, not just the best")
    p.add_argument("--max-branches", type=int, default=64)
    p.add_argument("--tolerance", type=float, default=1e-12, help="root polish tolerance")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run a plan on the COM mode alone")
    p.add_argument("--input", required=True, help="plan JSON")
    p.add_argument("--output", default=None)
    p.add_argument("--fock", type=int, default=None, metavar="CUTOFF",
                   help="also dump the state on the number basis at this cutoff")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("leakage", help="spectator-mode leakage report (CSV)")
    p.add_argument("--input", required=True, help="plan JSON")
    p.add_argument("--output", default=None)
    p.add_argument("--sweep", default=None, metavar="NAME=START:STOP:COUNT",
                   help="sweep 'delta' or 't' over a linear grid")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="json is available for single points only")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--integrated", action="store_true", default=True,
                       help="bounded time-integrated displacement amplitudes (default)")
    group.add_argument("--paper-beta", action="store_true", default=False,
                       help="endpoint-form displacement amplitudes, beta ~ t e^{i(mu-delta)t}")
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("modes", help="chain normal-mode table")
    p.add_argument("n_ions", type=int)
    p.add_argument("--output", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("fit", help="fit a number-basis target by a line superposition")
    p.add_argument("--input", required=True,
                   help="target JSON: list of [re, im] amplitude pairs")
    p.add_argument("--output", default=None)
    p.add_argument("--n", type=int, required=True, help="component count minus one")
    p.add_argument("--alpha", default="0", help="grid centre, 'RE' or 'RE,IM'")
    p.add_argument("--beta", required=True, help="grid half-step, 'RE' or 'RE,IM'")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="integrator referee for the displacement formulas")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n-ions", type=int, default=1)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--cutoff", type=int, default=16)
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--full-terms", action="store_true",
                   help="also measure the effect of the fast terms dropped by the RWA")
    p.add_argument("--weights", default=None,
                   help="semicolon-separated internal weights, each 'RE' or 'RE,IM'")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_BAD_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return _EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
