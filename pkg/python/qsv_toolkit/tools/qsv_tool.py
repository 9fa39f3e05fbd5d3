"""Command-line tool for building, checking and simulating verification strategies.

Machine-readable results (JSON, CSV) go to stdout or --out; progress and
reports go to stderr when --verbose is given.

Exit codes:
  0 - Success
  1 - Strategy checks ran and at least one failed
  2 - Usage error or invalid parameter
  3 - Missing or malformed input file
  4 - Numerical integrity failure
"""

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from qsv_toolkit import stats
from qsv_toolkit.adversarial import (
    AdversarialPlan,
    adversarial_samples_general,
    adversarial_samples_homogeneous,
    homogeneous_prefactor,
    optimize_trivial_mix,
    trivial_mix,
)
from qsv_toolkit.compression import COMPRESSION_SCHEMES, ZstdCompressor
from qsv_toolkit.entanglement import entanglement_confidence, separable_pass_bound
from qsv_toolkit.errors import CannotRejectError, NumericalIntegrityError, SchemaError
from qsv_toolkit.experiment_config import ExperimentConfig
from qsv_toolkit.families import (
    COMPARE_COLUMNS,
    COMPARE_QUBIT,
    FAMILIES,
    FamilyParams,
    build_strategy,
    compare_qubit_rows,
    get_family,
    parse_int_range,
    parse_theta_grid,
    sweep_rows,
)
from qsv_toolkit.parallel import DEFAULT_CHUNK_ROUNDS, get_worker_count
from qsv_toolkit.protocol_sim import evaluate_transcript, parse_source_spec, run_protocol
from qsv_toolkit.qmath import Operator
from qsv_toolkit.qpv import (
    choi_of_unitary,
    convert_one_way_to_pm,
    gate_strategy,
    plan_is_valid_for_gate,
)
from qsv_toolkit.serialization import (
    ARCHIVE_SUFFIX,
    load_operator,
    load_strategy,
    load_transcript,
    pm_strategy_to_dict,
    save_strategy,
    state_to_dict,
    strategy_to_dict,
    transcript_to_dict,
    write_csv,
    write_json,
    write_transcript_csv,
)
from qsv_toolkit.states import parse_state_spec
from qsv_toolkit.strategy import Strategy, conjugate_strategy
from qsv_toolkit.strategy_checks import check_strategy, format_summary


def _log(args, message: str = "") -> None:
    if args.verbose:
        print(message, file=sys.stderr)


def _banner(args, title: str) -> None:
    _log(args, "=" * 70)
    _log(args, title)
    _log(args, "=" * 70)


def _emit_json(data, out: Path | None) -> None:
    write_json(data, out, sys.stdout)


def _parse_schmidt(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"Invalid Schmidt coefficients '{text}' (expected comma-separated numbers)"
        ) from None


def _add_family_arguments(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    """Flags selecting a strategy family and its parameters."""
    parser.add_argument(
        "--family",
        help=f"Strategy family ({', '.join(FAMILIES)})",
    )
    if sweep:
        parser.add_argument("--theta", help="Angle grid start:stop:count")
        parser.add_argument("--n", help="Qubit-count range a:b")
        parser.add_argument("--d", help="Local-dimension range a:b")
    else:
        parser.add_argument("--theta", type=float, help="Two-qubit angle in [0, pi/4]")
        parser.add_argument("--n", type=int, help="Number of qubits")
        parser.add_argument("--d", type=int, help="Local dimension")
    parser.add_argument("--k", type=int, help="Dicke excitation count")
    parser.add_argument(
        "--schmidt", type=_parse_schmidt, help="Schmidt coefficients l1,l2,..."
    )
    parser.add_argument("--graph", type=Path, help="Graph file ('n' then 'i j' lines)")
    parser.add_argument("--coloring", type=Path, help="Coloring file ('vertex color' lines)")
    parser.add_argument("--target", help="Target state spec (e.g. bell, ghz:3, mes:3)")
    parser.add_argument(
        "--lambda", dest="lam", type=float, help="Homogeneous eigenvalue lambda"
    )


def _family_params(args, sweep: bool = False) -> FamilyParams:
    params = FamilyParams(
        k=args.k,
        schmidt=args.schmidt,
        graph=args.graph,
        coloring=args.coloring,
        target=args.target,
        lam=args.lam,
    )
    if not sweep:
        params.theta, params.n, params.d = args.theta, args.n, args.d
    return params


def _strategy_from_args(args) -> Strategy:
    """--strategy FILE, or --family NAME with its parameters."""
    if getattr(args, "strategy", None) is not None:
        if args.family is not None:
            raise ValueError("Use either --strategy or --family, not both")
        return load_strategy(args.strategy)
    if args.family is None:
        raise ValueError("Provide --strategy FILE or --family NAME")
    return build_strategy(args.family, _family_params(args))


def cmd_state_build(args):
    """Write the amplitudes of a named target state."""
    state = parse_state_spec(args.spec)
    _log(args, f"State {args.spec}: dims {state.dims}")
    _emit_json(state_to_dict(state), args.out)
    return 0


def cmd_strategy_build(args):
    """Build a family's strategy and save it as JSON or .qsva."""
    s = _strategy_from_args(args)
    _banner(args, "STRATEGY BUILD")
    _log(args, f"  Family:        {s.label}")
    _log(args, f"  Tests:         {len(s.tests)}")
    _log(args, f"  Target dims:   {s.target.dims}")
    if args.out is None:
        _emit_json(strategy_to_dict(s), None)
        return 0
    start_time = time.time()
    if args.out.suffix == ARCHIVE_SUFFIX:
        save_strategy(s, args.out, compression=args.compression)
    else:
        save_strategy(s, args.out)
    _log(args, f"  Output:        {args.out}")
    _log(args, f"  Size:          {args.out.stat().st_size:,} bytes")
    _log(args, f"  Write time:    {time.time() - start_time:.2f}s")
    return 0


def cmd_strategy_gap(args):
    """Spectral gap of a strategy next to its closed-form prediction."""
    s = _strategy_from_args(args)
    gap = s.gap()
    _log(args, f"{s.label}: gap {gap!r}, predicted {s.predicted_gap!r}")
    _emit_json({"label": s.label, "gap": gap, "predicted": s.predicted_gap}, args.out)
    return 0


def cmd_strategy_check(args):
    """Run the strategy invariant checks."""
    s = _strategy_from_args(args)
    results = check_strategy(s)
    if args.verbose:
        for line in format_summary(results, verbose=True):
            print(line, file=sys.stderr)
    passed = all(r.passed for r in results)
    _emit_json(
        {
            "label": s.label,
            "passed": passed,
            "checks": [r.to_dict() for r in results],
        },
        args.out,
    )
    return 0 if passed else 1


def cmd_plan(args):
    """Rounds needed to verify a target to infidelity eps at significance delta."""
    plan = stats.plan_verification(args.eps, args.delta, args.nu)
    _log(args, f"Required rounds: {plan.samples} (asymptotic {plan.asymptotic:.1f})")
    _emit_json(plan.to_dict(), args.out)
    return 0


def _simulation_inputs(args):
    """Strategy, source spec, rounds, seed, workers, chunk size and decision params."""
    if args.config is not None:
        if args.strategy is not None or args.family is not None:
            raise ValueError("--config already names the strategy")
        config = ExperimentConfig.from_json(args.config)
        if config.strategy.file is not None:
            s = load_strategy(config.strategy.file)
        else:
            s = build_strategy(config.strategy.family, config.strategy.params)
        decision = config.decision
        eps_nu = (decision.eps, decision.nu) if decision is not None else None
        return (
            s,
            config.source,
            config.rounds,
            config.seed,
            config.workers,
            config.chunk_rounds,
            eps_nu,
        )

    missing = [
        flag
        for flag, value in (("--source", args.source), ("--rounds", args.rounds), ("--seed", args.seed))
        if value is None
    ]
    if missing:
        raise ValueError(f"simulate needs {', '.join(missing)} (or --config FILE)")
    if (args.eps is None) != (args.nu is None):
        raise ValueError("--eps and --nu must be given together")
    eps_nu = (args.eps, args.nu) if args.eps is not None else None
    return (
        _strategy_from_args(args),
        args.source,
        args.rounds,
        args.seed,
        args.workers,
        args.chunk_rounds,
        eps_nu,
    )


def cmd_simulate(args):
    """Simulate a verification experiment and write its transcript."""
    s, source_spec, rounds, seed, workers, chunk_rounds, eps_nu = _simulation_inputs(args)
    src = parse_source_spec(source_spec, s)
    max_workers = get_worker_count(workers)

    _banner(args, "PROTOCOL SIMULATION")
    _log(args, f"  Strategy:        {s.label} ({len(s.tests)} tests)")
    _log(args, f"  Source:          {src.describe()}")
    _log(args, f"  Rounds:          {rounds}")
    _log(args, f"  Seed:            {seed}")
    _log(args, f"  Worker threads:  {max_workers}")
    _log(args)

    start_time = time.time()
    if max_workers == 1:
        transcript = run_protocol(s, src, rounds, seed, chunk_rounds=chunk_rounds)
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            transcript = run_protocol(
                s, src, rounds, seed, executor=executor, chunk_rounds=chunk_rounds
            )
    _log(args, f"  Passes:          {transcript.passes} ({transcript.frequency:.6f})")
    _log(args, f"  Simulation time: {time.time() - start_time:.2f}s")

    if args.out is not None:
        if args.out.suffix == ".csv":
            with open(args.out, "w", newline="") as f:
                write_transcript_csv(transcript, f)
        else:
            write_json(transcript_to_dict(transcript), args.out)
        _log(args, f"  Transcript:      {args.out}")

    summary = {
        "seed": transcript.seed,
        "label": transcript.label,
        "source": transcript.source,
        "rounds": transcript.rounds,
        "passes": transcript.passes,
        "frequency": transcript.frequency,
        "fidelity": src.fidelity(s.target),
    }
    if eps_nu is not None:
        summary["result"] = evaluate_transcript(transcript, *eps_nu).to_dict()
    _emit_json(summary, None)
    return 0


def cmd_decide(args):
    """Fidelity decision from a pass count (or a transcript file)."""
    if args.transcript is not None:
        transcript = load_transcript(args.transcript)
        passes, rounds = transcript.passes, transcript.rounds
    else:
        if args.passes is None or args.rounds is None:
            raise ValueError("decide needs --passes and --rounds (or --transcript FILE)")
        passes, rounds = args.passes, args.rounds
    result = stats.decide(passes, rounds, args.eps, args.nu)
    _log(args, f"Decision: {result.decision} (delta <= {result.delta!r})")
    _emit_json({"eps": args.eps, "nu": args.nu, **result.to_dict()}, args.out)
    return 0


def cmd_adversarial_plan(args):
    """Asymptotic sample plan for a possibly correlated source."""
    has_strategy = args.strategy is not None or args.family is not None
    if has_strategy:
        s = _strategy_from_args(args)
        omega = s.operator()
        if args.trivial_mix is None:
            plan = adversarial_samples_general(args.eps, args.delta, omega, s.target)
        elif args.trivial_mix == "auto":
            plan = optimize_trivial_mix(args.eps, args.delta, omega, s.target)
        else:
            q = float(args.trivial_mix)
            plan = adversarial_samples_general(
                args.eps, args.delta, trivial_mix(omega, q), s.target
            )
            plan.trivial_mix = q
    elif args.lam is not None:
        if args.trivial_mix is not None:
            raise ValueError("--trivial-mix needs --strategy or --family")
        plan = AdversarialPlan(
            eps=args.eps,
            delta=args.delta,
            lam=args.lam,
            tau=args.lam,
            overhead=homogeneous_prefactor(args.lam),
            samples=adversarial_samples_homogeneous(args.eps, args.delta, args.lam),
        )
    else:
        raise ValueError("Provide --lambda, --strategy FILE or --family NAME")
    _log(args, f"Adversarial plan: N = {plan.samples} (overhead {plan.overhead:.4f}, asymptotic)")
    _emit_json(plan.to_dict(), args.out)
    return 0


def _trivial_mix_value(text: str) -> str:
    if text == "auto":
        return text
    try:
        float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--trivial-mix takes a weight in [0, 1) or 'auto', got '{text}'"
        ) from None
    return text


def cmd_qpv_convert(args):
    """Convert a one-way strategy for a gate's Choi state into a prepare-and-measure plan."""
    gate = load_operator(args.gate)
    if len(gate.dims) != 1:
        gate = Operator((gate.dim,), gate.matrix)
    _, choi_state = choi_of_unitary(gate)
    if args.strategy is None and args.family is None:
        s = gate_strategy(gate)
    else:
        s = _strategy_from_args(args)
        if s.target.fidelity(choi_state) < 1 - 1e-9:
            # Strategies for the identity's Choi state are rotated onto the gate.
            s = conjugate_strategy(s, Operator.identity((gate.dim,)), gate)
        if s.target.fidelity(choi_state) < 1 - 1e-9:
            raise ValueError(
                f"Strategy '{s.label}' does not verify the Choi state of the gate"
            )
    xi = convert_one_way_to_pm(s, refine=not args.no_refine)
    valid = plan_is_valid_for_gate(xi, gate)
    if not valid:
        raise NumericalIntegrityError("Converted plan rejects the target gate")
    _banner(args, "QPV CONVERSION")
    _log(args, f"  Source strategy:  {s.label}")
    _log(args, f"  PM tests:         {len(xi.tests)}")
    _log(args, f"  Gate dimension:   {gate.dim}")
    _emit_json(pm_strategy_to_dict(xi), args.out)
    return 0


def cmd_witness_confidence(args):
    """Confidence that the tested states were entangled."""
    if args.rounds < 1:
        raise ValueError(f"--rounds must be at least 1, got {args.rounds}")
    if not 0 <= args.passes <= args.rounds:
        raise ValueError(f"--passes={args.passes} outside 0..{args.rounds}")
    q_s = separable_pass_bound(args.d)
    f = args.passes / args.rounds
    result = {
        "d": args.d,
        "passes": args.passes,
        "rounds": args.rounds,
        "frequency": f,
        "separable_bound": q_s,
    }
    try:
        delta = entanglement_confidence(f, q_s, args.rounds)
        result.update(entangled=True, delta=delta, confidence=1.0 - delta)
    except CannotRejectError:
        result.update(entangled=False, delta=None, confidence=None)
    _log(args, f"Entangled: {result['entangled']}")
    _emit_json(result, args.out)
    return 0


def cmd_sweep(args):
    """Gap tables over a theta or n grid as CSV."""
    if args.family == COMPARE_QUBIT:
        if args.theta is None:
            raise ValueError("compare-qubit sweeps need --theta start:stop:count")
        header = ["theta", *COMPARE_COLUMNS]
        rows = compare_qubit_rows(parse_theta_grid(args.theta))
    else:
        if args.family is None:
            raise ValueError("sweep needs --family")
        family = get_family(args.family)
        if family.axis is None:
            raise ValueError(f"Family '{args.family}' has no sweep axis")
        grid_text = getattr(args, family.axis)
        if grid_text is None:
            raise ValueError(f"Family '{args.family}' sweeps need --{family.axis}")
        if family.axis == "theta":
            values = parse_theta_grid(grid_text)
        else:
            values = parse_int_range(grid_text)
        header = [family.axis, "gap", "predicted"]
        rows = sweep_rows(args.family, values, _family_params(args, sweep=True))
    _log(args, f"Sweep: {len(rows)} rows")
    if args.out is None:
        write_csv(rows, header, sys.stdout)
    else:
        with open(args.out, "w", newline="") as f:
            write_csv(rows, header, f)
    return 0


def _add_common(parser: argparse.ArgumentParser, out_help: str = "Output file (default: stdout)"):
    parser.add_argument("--out", type=Path, default=None, help=out_help)
    parser.add_argument("--verbose", action="store_true", help="Enable verbose output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsv-tool",
        description="Build, check and simulate quantum state verification strategies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Gap of the Bell strategy
  qsv-tool strategy gap --family bell

  # Rounds needed for eps=0.1, delta=0.05 with gap 2/3
  qsv-tool plan --eps 0.1 --delta 0.05 --nu 0.6667

  # One-way gap over a theta grid
  qsv-tool sweep --family oneway-qubit --theta 0:0.7854:64

  # Simulate 100000 rounds against the worst-case source
  qsv-tool simulate --family bell --source worst:0.3 --rounds 100000 --seed 7
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # state
    state_parser = subparsers.add_parser("state", help="Target states")
    state_sub = state_parser.add_subparsers(dest="action", required=True)
    p = state_sub.add_parser("build", help="Write a named target state as JSON")
    p.add_argument("--spec", required=True, help="bell, mes:d, ghz:n, w:n, dicke:n:k, ...")
    _add_common(p)
    p.set_defaults(func=cmd_state_build)

    # strategy
    strategy_parser = subparsers.add_parser("strategy", help="Verification strategies")
    strategy_sub = strategy_parser.add_subparsers(dest="action", required=True)
    p = strategy_sub.add_parser("build", help="Build a strategy family")
    _add_family_arguments(p)
    p.add_argument(
        "--compression",
        choices=sorted(COMPRESSION_SCHEMES),
        default=ZstdCompressor.SCHEME_NAME,
        help=f"Effect compression for {ARCHIVE_SUFFIX} outputs",
    )
    _add_common(p, f"Output .json or {ARCHIVE_SUFFIX} file (default: JSON on stdout)")
    p.set_defaults(func=cmd_strategy_build)
    for action, func, text in (
        ("gap", cmd_strategy_gap, "Spectral gap and closed-form prediction"),
        ("check", cmd_strategy_check, "Check strategy invariants"),
    ):
        p = strategy_sub.add_parser(action, help=text)
        p.add_argument("--strategy", type=Path, help="Strategy file (.json or .qsva)")
        _add_family_arguments(p)
        _add_common(p)
        p.set_defaults(func=func)

    # plan
    p = subparsers.add_parser("plan", help="Rounds required for verification")
    p.add_argument("--eps", type=float, required=True, help="Infidelity threshold")
    p.add_argument("--delta", type=float, required=True, help="Significance level")
    p.add_argument("--nu", type=float, required=True, help="Spectral gap")
    _add_common(p)
    p.set_defaults(func=cmd_plan)

    # simulate
    p = subparsers.add_parser("simulate", help="Simulate a verification experiment")
    p.add_argument("--config", type=Path, help="Experiment configuration JSON")
    p.add_argument("--strategy", type=Path, help="Strategy file (.json or .qsva)")
    _add_family_arguments(p)
    p.add_argument("--source", help="exact, worst:EPS, depolarized:P or custom:FILE")
    p.add_argument("--rounds", type=int, help="Number of rounds")
    p.add_argument("--seed", type=int, help="Master seed (required; no default)")
    p.add_argument("--workers", type=int, default=None, help="Worker threads (default: CPU count)")
    p.add_argument(
        "--chunk-rounds",
        type=int,
        default=DEFAULT_CHUNK_ROUNDS,
        help=f"Rounds per parallel chunk (default: {DEFAULT_CHUNK_ROUNDS})",
    )
    p.add_argument("--eps", type=float, help="Decide against infidelity eps")
    p.add_argument("--nu", type=float, help="Spectral gap for the decision")
    _add_common(p, "Transcript file (.json or .csv)")
    p.set_defaults(func=cmd_simulate)

    # decide
    p = subparsers.add_parser("decide", help="Fidelity decision from pass counts")
    p.add_argument("--passes", type=int, help="Number of passing rounds t")
    p.add_argument("--rounds", type=int, help="Number of rounds N")
    p.add_argument("--transcript", type=Path, help="Transcript JSON instead of counts")
    p.add_argument("--eps", type=float, required=True, help="Infidelity threshold")
    p.add_argument("--nu", type=float, required=True, help="Spectral gap")
    _add_common(p)
    p.set_defaults(func=cmd_decide)

    # adversarial
    adversarial_parser = subparsers.add_parser("adversarial", help="Adversarial planning")
    adversarial_sub = adversarial_parser.add_subparsers(dest="action", required=True)
    p = adversarial_sub.add_parser("plan", help="Asymptotic adversarial sample plan")
    p.add_argument("--eps", type=float, required=True, help="Infidelity threshold")
    p.add_argument("--delta", type=float, required=True, help="Significance level")
    p.add_argument("--strategy", type=Path, help="Strategy file (.json or .qsva)")
    _add_family_arguments(p)
    p.add_argument(
        "--trivial-mix",
        nargs="?",
        const="auto",
        type=_trivial_mix_value,
        help="Add the trivial test with weight Q, or search for the best Q",
    )
    _add_common(p)
    p.set_defaults(func=cmd_adversarial_plan)

    # qpv
    qpv_parser = subparsers.add_parser("qpv", help="Quantum process verification")
    qpv_sub = qpv_parser.add_subparsers(dest="action", required=True)
    p = qpv_sub.add_parser("convert", help="One-way strategy to prepare-and-measure plan")
    p.add_argument("--gate", type=Path, required=True, help="Gate unitary (operator JSON)")
    p.add_argument("--strategy", type=Path, help="One-way strategy file (default: gate strategy)")
    _add_family_arguments(p)
    p.add_argument(
        "--no-refine",
        action="store_true",
        help="Keep Alice effects as given instead of splitting them into rank-one parts",
    )
    _add_common(p)
    p.set_defaults(func=cmd_qpv_convert)

    # witness
    witness_parser = subparsers.add_parser("witness", help="Entanglement verification")
    witness_sub = witness_parser.add_subparsers(dest="action", required=True)
    p = witness_sub.add_parser("confidence", help="Confidence that the states were entangled")
    p.add_argument("--d", type=int, required=True, help="Local dimension")
    p.add_argument("--passes", type=int, required=True, help="Number of passing rounds t")
    p.add_argument("--rounds", type=int, required=True, help="Number of rounds N")
    _add_common(p)
    p.set_defaults(func=cmd_witness_confidence)

    # sweep
    p = subparsers.add_parser("sweep", help="Gap tables as CSV")
    _add_family_arguments(p, sweep=True)
    _add_common(p, "CSV file (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalIntegrityError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 4
    except (SchemaError, FileNotFoundError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
