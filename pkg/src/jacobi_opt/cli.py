"""Command-line harness: ``jacobi-opt solve | verify | gen``.

``jacobi-opt --example-7-1 --solver jacobi-mc`` is shorthand for the ``solve``
subcommand.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .generators import DiagonalPattern, GeneratorKind, GeneratorSpec, gen_instance
from .objectives import Dagger, Family, ProblemSpec, load_problem, save_problem
from .solvers import SOLVERS, SolverConfig, write_log
from .tensor import diag_vector, example_7_1_tensor, frobenius_norm_sq
from .verify import SUITES

COMMANDS = ("solve", "verify", "gen")


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.replace("x", ",").split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _add_instance_args(ap: argparse.ArgumentParser, generator_required: bool = False) -> None:
    src = ap.add_mutually_exclusive_group(required=generator_required)
    if not generator_required:
        src.add_argument("--problem", type=Path, help="problem JSON written by `gen` or save_problem")
        src.add_argument("--example-7-1", action="store_true", help="builtin 3x3x3 diagonalization example")
    src.add_argument("--generator", choices=[k.value for k in GeneratorKind])
    ap.add_argument("--dims", type=_int_list, default=(7, 7, 8, 8))
    ap.add_argument("--ranks", type=_int_list, default=None)
    ap.add_argument("--L", type=int, default=1, help="number of tensors")
    ap.add_argument("--seed", type=int, default=0, help="generator seed")
    ap.add_argument("--noise", type=float, default=1.0, help="Frobenius norm of the additive noise")
    ap.add_argument("--real", action="store_true")
    ap.add_argument("--shared", action="store_true", help="one rotation on every mode, symmetric noise")
    ap.add_argument("--diagonal", choices=[d.value for d in DiagonalPattern], default=None)
    ap.add_argument("--family", choices=[f.value for f in Family], default=None)
    ap.add_argument("--dagger", choices=[d.value for d in Dagger], default="H")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jacobi-opt", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run one solver and write log.csv and summary.json")
    _add_instance_args(sp)
    sp.add_argument("--solver", choices=sorted(SOLVERS), default="jacobi-mg")
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--epsilon", type=float, default=None, help="proximal weight (default 1e-3 for -gp/-mgp)")
    sp.add_argument("--grad-tol", type=float, default=1e-5)
    sp.add_argument("--max-iter", type=int, default=1000, help="rotations (line-search steps for the baseline)")
    sp.add_argument("--start-seed", type=int, default=None, help="random unitary start (default identity)")
    sp.add_argument("--out", type=Path, default=Path("run"))

    vp = sub.add_parser("verify", help="run a seeded property suite")
    vp.add_argument("suite", choices=sorted(SUITES) + ["all"])
    vp.add_argument("--samples", type=int, default=None)
    vp.add_argument("--seed", type=int, default=0)

    gp = sub.add_parser("gen", help="write a synthetic instance to disk")
    _add_instance_args(gp, generator_required=True)
    gp.add_argument("--out", type=Path, default=Path("instance"))
    return ap


def _generator_spec(args) -> GeneratorSpec:
    return GeneratorSpec(
        kind=GeneratorKind(args.generator),
        dims=args.dims,
        ranks=args.ranks,
        L=args.L,
        seed=args.seed,
        noise=args.noise,
        real=args.real,
        shared=args.shared,
        diagonal=DiagonalPattern(args.diagonal) if args.diagonal else None,
        family=Family(args.family) if args.family else None,
        dagger=Dagger(args.dagger),
    )


def load_instance(args) -> ProblemSpec:
    if getattr(args, "example_7_1", False):
        return ProblemSpec(Family.JATD, (example_7_1_tensor(),), (3,))
    if getattr(args, "problem", None) is not None:
        return load_problem(args.problem)
    if args.generator is None:
        raise ValueError("give one of --problem, --generator or --example-7-1")
    return gen_instance(_generator_spec(args))


def diagonal_ratio(spec: ProblemSpec, Ws) -> float | None:
    """Weighted diagonal energy over total energy of the transformed tensors."""
    if spec.family not in (Family.JATD, Family.JATD_S):
        return None
    num = sum(a * frobenius_norm_sq(diag_vector(W)) for a, W in zip(spec.weights, Ws))
    den = sum(a * frobenius_norm_sq(W) for a, W in zip(spec.weights, Ws))
    return float(num / den) if den > 0 else None


def summarize(spec: ProblemSpec, solver: str, res) -> dict:
    total = spec.total_norm_sq()
    residual = None if spec.family is Family.TRACE_MAX else float(total - res.value)
    return {
        "solver": solver,
        "family": spec.family.value,
        "status": res.status.value,
        "f": float(res.value),
        "initial_f": float(res.initial_value),
        "residual": residual,
        "per": diagonal_ratio(spec, res.W),
        "initial_per": diagonal_ratio(spec, spec.tensors),
        "grad_norm": float(res.grad_norm),
        "iterations": int(res.iterations),
        "sweeps": float(res.sweeps),
        "time": float(res.elapsed),
    }


def cmd_solve(args) -> int:
    spec = load_instance(args)
    config = SolverConfig(
        delta=args.delta,
        grad_tol=args.grad_tol,
        max_iter=args.max_iter,
        seed=args.start_seed,
    )
    if args.epsilon is not None:
        config = replace(config, epsilon=args.epsilon)
    elif args.solver in ("jacobi-gp", "jacobi-mgp"):
        config = replace(config, epsilon=1e-3)
    res = SOLVERS[args.solver](spec, config)
    args.out.mkdir(parents=True, exist_ok=True)
    write_log(args.out / "log.csv", res.records)
    summary = summarize(spec, args.solver, res)
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        kw = {"seed": args.seed}
        if args.samples is not None:
            kw["samples"] = args.samples
        rep = SUITES[name](**kw)
        print(rep.summary())
        ok &= rep.ok
    return 0 if ok else 1


def cmd_gen(args) -> int:
    spec = gen_instance(_generator_spec(args))
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "problem.json"
    save_problem(path, spec)
    init = diagonal_ratio(spec, spec.tensors)
    print(f"wrote {path} ({spec.family.value}, dims {spec.tensors[0].shape}, initial Per {init})")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in COMMANDS and argv[0] not in ("-h", "--help"):
        argv.insert(0, "solve")
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "verify": cmd_verify, "gen": cmd_gen}[args.command]
    try:
        return handler(args)
    except (ValueError, NotImplementedError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"jacobi-opt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
