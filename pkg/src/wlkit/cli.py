"""Command-line front end.

Every subcommand reads the documented text formats, writes CSV (RFC 4180)
or JSON artifacts when an output path is given, and drops a provenance
sidecar `<out>.prov.json` next to each artifact (config echo, seed, package
version, timestamp).  Timestamps live only in sidecars, so artifacts are
byte-identical across runs of one configuration.

Exit codes: 0 success, 2 usage error, 3 budget refusal, 4 I/O or parse
error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, algebra, binarize, core, games, generators, xorcsp
from .errors import BudgetExceededError, FormatError

LOG_BASE = 2  # base used inside the round-bound check, echoed in artifacts


def _sidecar(out: str, command: str, params: dict) -> None:
    payload = {
        "command": command,
        "params": params,
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    Path(out + ".prov.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"
    )


def _write_csv(out: str | None, command: str, params: dict, header: list[str], rows: list[list]) -> None:
    if out is None:
        return
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    Path(out).write_text(buf.getvalue())
    _sidecar(out, command, params)


def _write_json(out: str | None, command: str, params: dict, payload) -> None:
    if out is None:
        return
    Path(out).write_text(json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n")
    _sidecar(out, command, params)


def _write_text(out: str | None, command: str, params: dict, text: str) -> None:
    if out is None:
        return
    Path(out).write_text(text)
    _sidecar(out, command, params)


def _read_structure(path: str) -> core.RelationalStructure:
    return core.structure_from_text(Path(path).read_text())[1]


def _read_system(path: str) -> xorcsp.XorSystem:
    return xorcsp.system_from_text(Path(path).read_text())


def _parse_assignment(system: xorcsp.XorSystem, text: str | None) -> dict[int, int]:
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        if value not in ("0", "1"):
            raise ValueError(f"assignment {part!r} must set a variable to 0 or 1")
        out[system.index(name.strip())] = int(value)
    return out


def _fraction(text: str) -> Fraction:
    return Fraction(text)


# ---------------------------------------------------------------------------
# wl


def _cmd_wl_stabilize(args) -> int:
    structure = _read_structure(args.input)
    trace = core.stabilize(structure, args.k, args.max_rounds)
    n, k = structure.universe_size, args.k
    bound = core.refinement_round_bound(n, k) if k >= 2 else None
    header = [
        "n", "k", "stabilized", "r_infinity", "classes_initial", "classes_final",
        "trivial_bound", "round_bound", "log_base",
    ]
    row = [
        n, k, trace.stabilized, trace.r_infinity, trace.class_counts[0],
        trace.class_counts[-1], max(n**k - 1, 0), bound, LOG_BASE,
    ]
    _write_csv(args.out, "wl stabilize", vars(args), header, [row])
    print(f"r_infinity={trace.r_infinity} classes={trace.class_counts}")
    return 0


def _cmd_wl_distinguish(args) -> int:
    a = _read_structure(args.a)
    b = _read_structure(args.b)
    result = core.joint_distinguish(a, b, args.k, args.max_rounds)
    header = ["k", "distinguished", "round", "rounds_run", "complete"]
    row = [args.k, result.distinguished, result.round, result.rounds_run, result.complete]
    _write_csv(args.out, "wl distinguish", vars(args), header, [row])
    print(f"distinguished={result.distinguished} round={result.round}")
    return 0


# ---------------------------------------------------------------------------
# xor


def _cmd_xor_translate(args) -> int:
    system = _read_system(args.input)
    a, b = xorcsp.to_structures(system)
    _write_text(args.out_a, "xor translate", vars(args), core.structure_to_text(a, "even"))
    _write_text(args.out_b, "xor translate", vars(args), core.structure_to_text(b, "charged"))
    print(f"universe={a.universe_size} relations={len(a.vocabulary.relations)}")
    return 0


def _cmd_xor_closure(args) -> int:
    system = _read_system(args.input)
    if args.rounds is None:
        closed, steps = xorcsp.closure(system, args.k)
    else:
        closed = xorcsp.closure_bounded(system, args.k, args.rounds)
        steps = args.rounds
    _write_text(args.out, "xor closure", vars(args), xorcsp.system_to_text(closed))
    print(f"constraints={len(closed.constraints)} steps={steps}")
    return 0


def _cmd_xor_sat(args) -> int:
    system = _read_system(args.input)
    assignment = xorcsp.gauss_satisfiable(system)
    payload = {
        "satisfiable": assignment is not None,
        "assignment": None
        if assignment is None
        else {system.variables[i]: b for i, b in sorted(assignment.items())},
    }
    _write_json(args.out, "xor sat", vars(args), payload)
    print("SAT" if assignment is not None else "UNSAT")
    return 0


# ---------------------------------------------------------------------------
# game


def _cmd_game_solve(args) -> int:
    system = _read_system(args.input)
    beta0 = _parse_assignment(system, args.assign)
    analysis = games.analyze_game(system, args.pebbles, max_rounds=args.rounds, budget=args.budget)
    wr = analysis.winning_round(beta0)
    payload = {
        "pebbles": args.pebbles,
        "rounds_cap": args.rounds,
        "falsifier_wins": wr is not None,
        "min_round": wr,
        "saturated": analysis.saturated,
        "positions": games.position_count(system.num_variables, args.pebbles),
    }
    _write_json(args.out, "game solve", vars(args), payload)
    if wr is not None and args.transcript:
        transcript = games.fixpoint_transcript(analysis, system, beta0)
        _write_json(args.transcript, "game solve transcript", vars(args), transcript.to_json(system))
    print(f"falsifier_wins={wr is not None} min_round={wr}")
    return 0


def _cmd_game_certify(args) -> int:
    system = _read_system(args.input)
    beta = _parse_assignment(system, args.assign)
    ok = games.verifier_survival_certificate(system, beta, args.k, args.rounds)
    payload = {"k": args.k, "rounds": args.rounds, "certificate": ok}
    _write_json(args.out, "game certify", vars(args), payload)
    print(f"certificate={ok}")
    return 0


# ---------------------------------------------------------------------------
# gen


def _graph_payload(graph) -> dict:
    if isinstance(graph, generators.LayeredGraph):
        return {
            "kind": "layered",
            "ell": graph.ell,
            "m": graph.m,
            "adjacency": [list(nb) for nb in graph.adjacency],
        }
    return {
        "kind": "bipartite",
        "left_size": graph.left_size,
        "adjacency": [list(nb) for nb in graph.adjacency],
    }


def _cmd_gen_expander(args) -> int:
    graph = generators.random_right_regular(args.n, args.r, args.seed)
    verdict = generators.check_expansion(
        graph, Fraction(3 * args.r, 4), Fraction(1, 20 * args.r) if args.r else Fraction(0),
        mode=args.mode, budget=args.budget, seed=args.seed,
    ) if args.r else None
    payload = _graph_payload(graph)
    payload["expansion"] = verdict.as_dict() if verdict else None
    _write_json(args.out, "gen expander", vars(args), payload)
    print(f"n={args.n} r={args.r} checked={verdict.sets_checked if verdict else 0}")
    return 0


def _cmd_gen_layered(args) -> int:
    base = generators.random_right_regular(args.m, args.r, args.seed)
    graph = generators.build_layered(base, args.ell)
    _write_json(args.out, "gen layered", vars(args), _graph_payload(graph))
    print(f"layers={args.ell} width={args.m} max_degree={graph.max_degree}")
    return 0


def _cmd_gen_hard(args) -> int:
    instance = generators.hard_instance(
        args.d, args.ell, args.m, args.seed,
        alpha=args.alpha, gamma=args.gamma, max_attempts=args.attempts,
        expansion_budget=args.budget,
    )
    if args.out:
        _write_text(args.out + ".xor", "gen hard", vars(args), xorcsp.system_to_text(instance.system))
        _write_json(args.out + ".json", "gen hard", vars(args), instance.provenance)
    else:
        sys.stdout.write(xorcsp.system_to_text(instance.system))
    flag = instance.provenance["flag"]
    print(f"variables={instance.system.num_variables} arity={instance.system.arity} flag={flag}")
    return 0


def _make_family(args) -> generators.SetFamily:
    if args.q is not None:
        return generators.polynomial_set_family(args.q, args.k)
    if args.n is not None:
        return generators.greedy_set_family(args.n, args.k)
    raise ValueError("give either --q (polynomial family) or --n (greedy family)")


def _cmd_gen_family(args) -> int:
    family = _make_family(args)
    payload = {
        "universe": [list(p) if isinstance(p, tuple) else p for p in family.universe],
        "members": sorted(sorted(map(str, s)) for s in family.members),
        "size": len(family.members),
        "max_pairwise_intersection": family.max_pairwise_intersection(),
    }
    _write_json(args.out, "gen family", vars(args), payload)
    print(f"size={len(family.members)} n={family.n}")
    return 0


def _cmd_gen_chain(args) -> int:
    family = _make_family(args)
    chain = generators.stable_chain(family, args.k)
    header = ["t", "classes", "stable", "shufflable", "equality_compatible", "strictly_finer"]
    rows = []
    previous = None
    for t, element in enumerate(chain):
        chi = element.coloring
        strictly = (
            previous is not None
            and core.coloring_refines(chi, previous)
            and not core.coloring_refines(previous, chi)
        )
        rows.append([
            t, chi.num_colors, core.is_k_stable(chi), core.is_shufflable(chi),
            core.is_equality_compatible(chi), strictly,
        ])
        previous = chi
    _write_csv(args.out, "gen chain", vars(args), header, rows)
    print(f"length={len(chain) - 1} final_classes={chain[-1].coloring.num_colors}")
    return 0


# ---------------------------------------------------------------------------
# algebra / bin


def _cmd_algebra_chain(args) -> int:
    structure = _read_structure(args.input)
    rows = algebra.wl_algebra_chain(structure, args.k, budget=args.budget)
    header = ["round", "classes", "dim", "saturated", "strict_increase"]
    table = [[r.round, r.classes, r.dim, r.saturated, r.strict_increase] for r in rows]
    _write_csv(args.out, "algebra chain", vars(args), header, table)
    print(f"rounds={len(rows) - 1} final_dim={rows[-1].dim}")
    return 0


def _cmd_bin_build(args) -> int:
    structure = _read_structure(args.input)
    translated = binarize.bin_structure(structure, args.ell)
    _write_text(args.out, "bin build", vars(args), core.structure_to_text(translated.structure, "bin"))
    print(f"universe={translated.structure.universe_size} relations={len(translated.type_keys)}")
    return 0


def _cmd_bin_tradeoff(args) -> int:
    a = _read_structure(args.a)
    b = _read_structure(args.b)
    report = binarize.tradeoff_report(a, b, args.k)
    payload = {
        "k": report.k,
        "k_used": report.k_used,
        "ell": report.ell,
        "k_round": report.k_round,
        "bin_round": report.bin_round,
        "bin_universe": report.bin_universe,
        "consistent": report.consistent,
    }
    _write_json(args.out, "bin tradeoff", vars(args), payload)
    print(f"k_round={report.k_round} bin_round={report.bin_round} consistent={report.consistent}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wlkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    wl = sub.add_parser("wl", help="refinement runs").add_subparsers(dest="sub", required=True)
    p = wl.add_parser("stabilize", help="refine one structure to its fixpoint")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_wl_stabilize)
    p = wl.add_parser("distinguish", help="least round with differing histograms")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_wl_distinguish)

    xor = sub.add_parser("xor", help="constraint systems").add_subparsers(dest="sub", required=True)
    p = xor.add_parser("translate", help="emit the twin structures")
    p.add_argument("--input", required=True)
    p.add_argument("--out-a")
    p.add_argument("--out-b")
    p.set_defaults(func=_cmd_xor_translate)
    p = xor.add_parser("closure", help="attractor iteration")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_xor_closure)
    p = xor.add_parser("sat", help="GF(2) elimination")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_xor_sat)

    game = sub.add_parser("game", help="pebble game").add_subparsers(dest="sub", required=True)
    p = game.add_parser("solve", help="exact game value")
    p.add_argument("--input", required=True)
    p.add_argument("--pebbles", type=int, required=True)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("--assign", default=None)
    p.add_argument("--transcript")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_game_solve)
    p = game.add_parser("certify", help="closure survival certificate")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--assign", default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_game_certify)

    gen = sub.add_parser("gen", help="instance generators").add_subparsers(dest="sub", required=True)
    p = gen.add_parser("expander", help="random right-regular bipartite graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gen_expander)
    p = gen.add_parser("layered", help="stacked expander")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gen_layered)
    p = gen.add_parser("hard", help="unsatisfiable layered instance")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha", type=_fraction, default=None)
    p.add_argument("--gamma", type=_fraction, default=None)
    p.add_argument("--attempts", type=int, default=20)
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gen_hard)
    p = gen.add_parser("family", help="bounded-intersection set family")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gen_family)
    p = gen.add_parser("chain", help="chain of stable colorings")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gen_chain)

    alg = sub.add_parser("algebra", help="partition algebras").add_subparsers(dest="sub", required=True)
    p = alg.add_parser("chain", help="per-round algebra dimensions")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_algebra_chain)

    bn = sub.add_parser("bin", help="binary translation").add_subparsers(dest="sub", required=True)
    p = bn.add_parser("build", help="emit the binary translation")
    p.add_argument("--input", required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bin_build)
    p = bn.add_parser("tradeoff", help="dimension-vs-round comparison")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bin_tradeoff)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except (FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
