"""Batch command-line front end.

Every subcommand prints one JSON document to stdout (sorted keys, so the
bytes are reproducible) and a short human summary to stderr. Exit codes:
0 success, 1 domain error (``{"error": {"code", "message"}}`` on stderr),
2 usage error.

All randomness flows from ``--seed`` (default 42, or ``QLP_SEED`` when the
flag is absent). Each subcommand draws its sub-seed as
``derive_seed(seed, STREAMS[subcommand])``.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import os
import sys

import numpy as np

from qlp import __version__
from qlp.annealing import (
    AnnealSchedule,
    Qubo,
    anneal_evolve,
    brute_force_ground,
    ground_mask,
    load_problem,
    qubo_to_ising,
)
from qlp.encoding import SCHEMES, FeatureMap, preprocess
from qlp.errors import DomainError
from qlp.grover import GroverOracle, grover_search, optimal_iterations
from qlp.kernel import KernelMode, build_kernel_matrix
from qlp.learnpath import (
    ScheduleProblem,
    SequenceSpace,
    build_schedule_qubo,
    feature_rows,
    load_json,
    load_students,
    optimize_schedule,
    oracle_from_dict,
    predict_records,
    search_sequence,
    train_study_classifier,
)
from qlp.qsvm import DEFAULT_C, DEFAULT_TOL, SvmModel
from qlp.seeding import SEED_MASK, derive_seed

DEFAULT_SEED = 42
DEFAULT_T = 100.0
DEFAULT_STEPS = 2000
DEFAULT_SHOTS = 1024

# fixed stream keys: changing one changes that subcommand's random draws
STREAMS = {
    "encode": 1,
    "kernel": 2,
    "qsvm-train": 3,
    "qsvm-predict": 4,
    "anneal": 5,
    "grover": 6,
    "schedule": 7,
    "sequence": 8,
    "classify": 9,
}


class UsageError(Exception):
    pass


def load_schema(name: str) -> dict:
    """Published JSON schema for a subcommand's output (or ``"error"``)."""
    text = importlib.resources.files("qlp").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- shared argument groups --------------------------------------------------

def _seed_type(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= SEED_MASK:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _common(p):
    p.add_argument("--seed", type=_seed_type, default=None,
                   help=f"global seed (default {DEFAULT_SEED}, or $QLP_SEED when unset)")
    p.add_argument("--out", default=None, help="also write the JSON report to this path")


def _figure(p):
    p.add_argument("--figure", default=None, help="render a figure to this path (png, pdf, svg)")


def _kernel_opts(p):
    p.add_argument("--scheme", choices=SCHEMES, default="rotation", help="feature map (default rotation)")
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact",
                   help="kernel estimation mode (default exact)")
    p.add_argument("--shots", type=_positive_int, default=DEFAULT_SHOTS,
                   help=f"SWAP-test shots per entry in sampled mode (default {DEFAULT_SHOTS})")


def _svm_opts(p):
    _kernel_opts(p)
    p.add_argument("--C", type=_positive_float, default=DEFAULT_C, help=f"box bound (default {DEFAULT_C})")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL,
                   help=f"KKT tolerance (default {DEFAULT_TOL})")
    p.add_argument("--max-passes", type=_positive_int, default=None,
                   help="sweep budget; pair updates capped at max_passes * m (default 10 * m)")


def _anneal_opts(p):
    p.add_argument("--T", type=_positive_float, default=DEFAULT_T, help=f"total anneal time (default {DEFAULT_T})")
    p.add_argument("--steps", type=_positive_int, default=DEFAULT_STEPS,
                   help=f"Trotter slices (default {DEFAULT_STEPS})")
    p.add_argument("--gap-samples", type=int, default=0,
                   help="record the spectral gap at this many times (<= 8 spins; default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlp", description="Quantum-inspired learning-path toolkit (state-vector simulation)."
    )
    parser.add_argument("--version", action="version", version=f"qlp {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    sub.required = True

    p = sub.add_parser("encode", help="encode feature rows as quantum states")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="student CSV (preprocessed before encoding)")
    src.add_argument("--vector", help="single raw vector, comma separated, encoded as given")
    p.add_argument("--scheme", choices=SCHEMES, default="rotation", help="feature map (default rotation)")
    _common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("kernel", help="quantum kernel matrix of a CSV dataset")
    p.add_argument("--input", required=True, help="student CSV")
    _kernel_opts(p)
    _common(p)
    _figure(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("qsvm-train", help="train a kernel SVM on a labelled CSV")
    p.add_argument("--input", required=True, help="labelled student CSV")
    _svm_opts(p)
    _common(p)
    p.set_defaults(func=cmd_qsvm_train)

    p = sub.add_parser("qsvm-predict", help="apply a trained model to a CSV")
    p.add_argument("--model", required=True, help="model JSON (or a qsvm-train report)")
    p.add_argument("--input", required=True, help="student CSV; a label column enables accuracy")
    _common(p)
    _figure(p)
    p.set_defaults(func=cmd_qsvm_predict)

    p = sub.add_parser("classify", help="train on one CSV and label the students of another")
    p.add_argument("--train", required=True, help="labelled student CSV")
    p.add_argument("--input", required=True, help="student CSV to classify")
    _svm_opts(p)
    _common(p)
    _figure(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("anneal", help="simulated quantum annealing of an Ising or QUBO problem")
    p.add_argument("--problem", required=True, help="problem JSON {n, linear, quadratic, type}")
    _anneal_opts(p)
    _common(p)
    _figure(p)
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("grover", help="Grover search over a marked set")
    p.add_argument("--n", type=_positive_int, help="number of qubits")
    p.add_argument("--marked", type=int, nargs="+", help="marked basis indices")
    p.add_argument("--oracle", help="oracle JSON {n, marked} or {n, predicate, params}")
    p.add_argument("--k", type=int, default=None, help="iterations (default floor(pi/4 sqrt(N/M)))")
    p.add_argument("--shots", type=_positive_int, default=1, help="measurements (default 1)")
    _common(p)
    _figure(p)
    p.set_defaults(func=cmd_grover)

    p = sub.add_parser("schedule", help="plan study activities by annealing a one-hot QUBO")
    p.add_argument("--problem", required=True, help="schedule JSON {activities, horizon, precedence}")
    _anneal_opts(p)
    _common(p)
    _figure(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("sequence", help="Grover search for a study sequence above a quality threshold")
    p.add_argument("--problem", required=True, help="sequence JSON {steps, affinities, threshold}")
    p.add_argument("--threshold", type=float, default=None, help="override the file's threshold")
    p.add_argument("--shots", type=_positive_int, default=1, help="measurements (default 1)")
    _common(p)
    p.set_defaults(func=cmd_sequence)
    return parser


def resolve_seed(flag):
    """``(seed, source)``: the flag wins, then ``QLP_SEED``, then the default."""
    if flag is not None:
        return flag, "flag"
    env = os.environ.get("QLP_SEED")
    if env is not None and env.strip():
        try:
            return _seed_type(env.strip()), "env"
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"QLP_SEED: {exc}") from None
    return DEFAULT_SEED, "default"


def _kernel_mode(args, seed: int) -> KernelMode:
    if args.mode == "exact":
        return KernelMode.exact()
    return KernelMode.sampled(args.shots, seed)


# -- subcommands -------------------------------------------------------------
# each returns (report, summary line)

def cmd_encode(args, seed):
    if args.vector is not None:
        try:
            x = np.array([float(v) for v in args.vector.split(",")])
        except ValueError:
            raise DomainError("encoding.non_numeric", f"--vector {args.vector!r} is not numeric") from None
        fmap = FeatureMap(args.scheme, x.size)
        ids, rows, stats = ["vector"], x[None, :], None
    else:
        data, records, _ = load_students(args.input)
        clean, stats = preprocess(data)
        fmap = FeatureMap(args.scheme, clean.n_features)
        ids, rows = [r.id for r in records], feature_rows(clean.rows, args.scheme)
    states = []
    for rid, row in zip(ids, rows):
        sv = fmap.encode(row)
        states.append({"id": rid, "amplitudes": json.loads(sv.to_json()),
                       "norm": sv.norm()})
    report = {
        "feature_map": fmap.to_dict(),
        "preprocessing": None if stats is None else stats.to_dict(),
        "states": states,
    }
    return report, f"encoded {len(states)} row(s) on {fmap.n_qubits} qubit(s) with {args.scheme} encoding"


def cmd_kernel(args, seed):
    data, records, _ = load_students(args.input)
    clean, _ = preprocess(data)
    fmap = FeatureMap(args.scheme, clean.n_features)
    km = build_kernel_matrix(feature_rows(clean.rows, args.scheme), fmap, _kernel_mode(args, seed))
    report = {
        "ids": [r.id for r in records],
        "feature_map": fmap.to_dict(),
        "kernel": km.to_dict(),
        "min_eigenvalue": km.min_eigenvalue(),
    }
    if args.figure:
        from qlp import plotting

        report["figure"] = plotting.kernel_heatmap(km.entries, args.figure)
    return report, f"{km.size}x{km.size} {km.mode.kind} kernel, min eigenvalue {report['min_eigenvalue']:.3g}"


def _train(path, args, seed):
    data, records, schema = load_students(path)
    model, report = train_study_classifier(
        data, args.scheme, args.C, _kernel_mode(args, seed), args.tol, args.max_passes
    )
    _, train_labels = predict_records(model, data.rows, salt=0)
    accuracy = float(np.mean(train_labels == data.labels))
    return model, report, accuracy, schema


def cmd_qsvm_train(args, seed):
    model, report, accuracy, schema = _train(args.input, args, seed)
    out = {
        "model": model.to_dict(),
        "training": report.to_dict(),
        "training_accuracy": accuracy,
        "n_support": int(model.support_indices.size),
        "n_records": schema["n_records"],
        "n_missing": schema["n_missing"],
    }
    return out, (f"trained on {schema['n_records']} records: {out['n_support']} support vectors, "
                 f"training accuracy {accuracy:.3f}")


def _predictions(model, path, salt, figure):
    data, records, _ = load_students(path)
    f, labels = predict_records(model, data.rows, salt=salt)
    rows = [{"id": r.id, "decision": float(v), "label": int(lab)}
            for r, v, lab in zip(records, f, labels)]
    out = {"predictions": rows}
    if data.labels is not None:
        out["accuracy"] = float(np.mean(labels == data.labels))
    if figure:
        from qlp import plotting

        out["figure"] = plotting.decision_bars([r.id for r in records], f, labels, figure)
    return out


def cmd_qsvm_predict(args, seed):
    d = load_json(args.model, "qsvm.model_format")
    try:
        model = SvmModel.from_dict(d.get("model", d))
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError("qsvm.model_format", f"{args.model}: {exc}") from exc
    if not model.kernel_mode.is_exact:
        # prediction-time shots draw on this run's seed
        model.kernel_mode = KernelMode.sampled(model.kernel_mode.shots, seed)
    out = _predictions(model, args.input, 1, args.figure)
    summary = f"labelled {len(out['predictions'])} record(s)"
    if "accuracy" in out:
        summary += f", accuracy {out['accuracy']:.3f}"
    return out, summary


def cmd_classify(args, seed):
    model, report, accuracy, schema = _train(args.train, args, seed)
    out = _predictions(model, args.input, 1, args.figure)
    out["training"] = report.to_dict()
    out["training_accuracy"] = accuracy
    out["n_support"] = int(model.support_indices.size)
    groups = {"+1": [p["id"] for p in out["predictions"] if p["label"] > 0],
              "-1": [p["id"] for p in out["predictions"] if p["label"] < 0]}
    out["groups"] = groups
    return out, f"{len(groups['+1'])} student(s) labelled +1, {len(groups['-1'])} labelled -1"


def _anneal_figure(result, model, path, labels=None):
    from qlp import plotting

    probs = np.abs(result.state.amplitudes) ** 2
    return plotting.anneal_report(probs, ground_mask(model.energies()), path, result.gap_trace, labels)


def cmd_anneal(args, seed):
    problem = load_problem(args.problem)
    offset = 0.0
    if isinstance(problem, Qubo):
        model, offset = qubo_to_ising(problem)
    else:
        model = problem
    schedule = AnnealSchedule(args.T, args.steps)
    result = anneal_evolve(model, schedule, seed=seed, gap_samples=args.gap_samples)
    ground_cfg, ground_energy, degeneracy = brute_force_ground(model)
    out = {
        "problem_type": "qubo" if isinstance(problem, Qubo) else "ising",
        "result": result.to_dict(),
        "ground": {"config": ground_cfg, "energy": ground_energy, "degeneracy": degeneracy},
        "matches_ground": abs(result.energy - ground_energy) <= 1e-9 * max(1.0, abs(ground_energy)),
    }
    if isinstance(problem, Qubo):
        out["bits"] = [(result.index >> v) & 1 for v in range(model.n_spins)]
        out["qubo_value"] = result.energy + offset
        out["optimal_qubo_value"] = ground_energy + offset
    if args.figure:
        out["figure"] = _anneal_figure(result, model, args.figure)
    return out, (f"ground probability {result.ground_probability:.4f}; sampled energy {result.energy:.6g} "
                 f"vs optimum {ground_energy:.6g}")


def _oracle(args) -> GroverOracle:
    if args.oracle is not None:
        if args.n is not None or args.marked is not None:
            raise UsageError("--oracle cannot be combined with --n/--marked")
        return oracle_from_dict(load_json(args.oracle, "grover.oracle_format"))
    if args.n is None or args.marked is None:
        raise UsageError("grover needs --oracle, or both --n and --marked")
    return GroverOracle(args.n, frozenset(args.marked))


def cmd_grover(args, seed):
    oracle = _oracle(args)
    result = grover_search(oracle, k=args.k, shots=args.shots, seed=seed)
    out = result.to_dict()
    out["n"] = oracle.n_qubits
    out["marked"] = sorted(oracle.marked)
    out["optimal_k"] = optimal_iterations(oracle.size, len(oracle.marked))
    if args.figure:
        from qlp import plotting

        N, M = oracle.size, len(oracle.marked)
        ks = list(range(0, max(2 * out["optimal_k"], result.iterations) + 1))
        sim = [grover_search(oracle, k=k, shots=1, seed=seed).exact_probability for k in ks]
        theta = math.asin(math.sqrt(M / N))
        out["figure"] = plotting.grover_curve(ks, sim, theta, args.figure, chosen_k=result.iterations)
    return out, (f"k={result.iterations}: measured {result.measured} "
                 f"({'marked' if result.success else 'unmarked'}), P(marked)={result.exact_probability:.6f}")


def cmd_schedule(args, seed):
    problem = ScheduleProblem.from_dict(load_json(args.problem, "learnpath.schedule_format"))
    schedule = AnnealSchedule(args.T, args.steps)
    report, result = optimize_schedule(problem, schedule, seed=seed, gap_samples=args.gap_samples)
    report["problem"] = problem.to_dict()
    report["anneal"] = result.to_dict()
    if args.figure:
        model, _ = qubo_to_ising(build_schedule_qubo(problem))
        report["figure"] = _anneal_figure(result, model, args.figure)
    plan = report["plan"]
    summary = ("plan " + " -> ".join(plan["order"]) if plan["feasible"]
               else "infeasible plan: " + "; ".join(plan["violations"]))
    return report, summary + f" (optimal: {report['matches_optimum']})"


def cmd_sequence(args, seed):
    space = SequenceSpace.from_dict(load_json(args.problem, "learnpath.sequence_format"))
    report, result = search_sequence(space, args.threshold, seed=seed, shots=args.shots)
    report["grover"] = result.to_dict()
    summary = ("sequence " + " -> ".join(report["sequence"]) if "sequence" in report
               else "measured a padding state")
    return report, summary + f" (success: {report['success']})"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        seed, source = resolve_seed(args.seed)
        sub_seed = derive_seed(seed, STREAMS[args.subcommand])
        report, summary = args.func(args, sub_seed)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _say(f"qlp {args.subcommand}: error: {exc}")
        return 2
    except DomainError as exc:
        sys.stderr.write(json.dumps({"error": exc.to_dict()}, sort_keys=True) + "\n")
        return 1
    except OSError as exc:
        err = {"code": "cli.input", "message": f"{exc.filename}: {exc.strerror}"}
        sys.stderr.write(json.dumps({"error": err}, sort_keys=True) + "\n")
        return 1

    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg.update(seed=seed, seed_source=source, sub_seed=sub_seed)
    # report fields sit at top level next to the run's provenance
    doc = {**report, "subcommand": args.subcommand, "version": __version__, "config": cfg}
    text = dumps(doc)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            err = {"code": "cli.output", "message": f"{exc.filename}: {exc.strerror}"}
            sys.stderr.write(json.dumps({"error": err}, sort_keys=True) + "\n")
            return 1
    sys.stdout.write(text)
    _say(f"qlp {args.subcommand}: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
