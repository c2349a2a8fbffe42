"""Command-line entry point wiring ingestion, analysis, and simulation.

Exit codes: 0 success (admissible where that is the question), 1 file or
parse errors, 2 dissipative but not admissible, 3 neither, 4 internal
certificate failure (a bug, not a property of the input).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import collapse as collapse_mod
from . import dynamics, gamefile, reduction, stability
from .games import PolymatrixGame, formal_equilibria, interior_equilibria, random_prism_state
from .vertices import enumerate_vertices, vertex_graph, vertex_matrix

EXIT_OK = 0
EXIT_IO = 1
EXIT_NOT_ADMISSIBLE = 2
EXIT_NOT_DISSIPATIVE = 3
EXIT_CERTIFICATE = 4


def _default_seed() -> int:
    try:
        return int(os.environ.get("POLYREP_SEED", "0"))
    except ValueError:
        return 0


def _fmt_matrix(m: np.ndarray) -> list[str]:
    cells = [[gamefile._format_number(v) for v in row] for row in m]
    width = max((len(c) for row in cells for c in row), default=1)
    return ["  ".join(c.rjust(width) for c in row) for row in cells]


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        out = json.dumps(payload, sort_keys=True, indent=2)
    else:
        out = "\n".join(text_lines)
    print(out)


def _load_game(path: str) -> PolymatrixGame:
    try:
        return gamefile.parse_game(path)
    except (OSError, gamefile.GameFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO) from None


def _label(v) -> list[int]:
    return list(v.chosen)


def _classification_exit(game: PolymatrixGame, tol: float) -> tuple[int, dict]:
    """Shared verdict logic: kind, certificate, stable vertices, exit code."""
    found = stability.find_scaling(game, tol=tol)
    vstar = stability.stable_vertices(game, tol=tol)
    if found is None:
        kind = (
            stability.NO_FORMAL_EQUILIBRIUM
            if not formal_equilibria(game).exists
            else "no_certificate_found"
        )
        return EXIT_NOT_DISSIPATIVE, {"kind": kind, "scaling": None, "vstar": [_label(v) for v in vstar]}
    verdict = stability.check_with_scaling(game, found, tol=tol)
    info = {
        "kind": verdict.kind,
        "scaling": list(found.values),
        "vstar": [_label(v) for v in vstar],
    }
    code = EXIT_OK if vstar else EXIT_NOT_ADMISSIBLE
    return code, info


def cmd_check(args) -> int:
    game = _load_game(args.game)
    code, info = _classification_exit(game, args.tol)
    reports = {}
    for v in enumerate_vertices(game.gtype):
        rep = stability.stably_dissipative(vertex_matrix(game, v).entries, tol=args.tol)
        reports[str(v)] = {
            "stable": rep.stable,
            "cycle_ok": rep.cycle_ok,
            "skew_ok": rep.skew_ok,
            "failures": list(rep.failures),
            "scaling": None if rep.scaling is None else [float(x) for x in rep.scaling],
        }
    admissible_flag = code == EXIT_OK
    payload = {
        "kind": info["kind"],
        "admissible": admissible_flag,
        "scaling": info["scaling"],
        "vstar": info["vstar"],
        "vertex_reports": reports,
    }
    lines = [
        f"kind: {info['kind']}",
        f"admissible: {admissible_flag}",
        f"scaling: {info['scaling']}",
        "stable vertices: " + (", ".join(str(tuple(v)) for v in info["vstar"]) or "none"),
    ]
    for name, rep in reports.items():
        status = "stable" if rep["stable"] else "unstable: " + "; ".join(rep["failures"])
        lines.append(f"  vertex {name}: {status}")
    _emit(args, payload, lines)
    return code


def cmd_vertices(args) -> int:
    game = _load_game(args.game)
    payload, lines = {"vertices": []}, []
    for v in enumerate_vertices(game.gtype):
        vm = vertex_matrix(game, v)
        graph = vertex_graph(vm)
        entry = {
            "label": _label(v),
            "index_set": list(vm.index_set),
            "matrix": [[float(x) for x in row] for row in vm.entries],
            "edges": sorted([list(e) for e in graph.edges]),
        }
        payload["vertices"].append(entry)
        lines.append(f"vertex {v}")
        lines.append(f"  index set: {list(vm.index_set)}")
        lines.extend("  " + row for row in _fmt_matrix(vm.entries))
        lines.append("  edges: " + (", ".join(str(tuple(e)) for e in entry["edges"]) or "none"))
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_reduce(args) -> int:
    game = _load_game(args.game)
    code, info = _classification_exit(game, args.tol)
    if code != EXIT_OK:
        print("error: game is not admissible; the reduction rules do not apply", file=sys.stderr)
        return code
    red = reduction.run_to_fixpoint(game, tol=args.tol)
    rows = reduction.collapse_trace(red.final.trace)
    payload = {
        "trace": [
            {
                "step": i + 1,
                "rule": s.rule,
                "vertices": [_label(v) for v in s.vertices],
                "strategies": list(s.strategies),
            }
            for i, s in enumerate(rows)
        ],
        "colors": {str(i): c.value for i, c in enumerate(red.final.colors)},
        "links": sorted([list(l) for l in red.final.links]),
        "verdict": red.verdict,
        "rounds": red.fixpoint_rounds,
    }
    lines = ["step  rule  vertices              strategies"]
    for i, s in enumerate(rows):
        verts = ", ".join(str(v) for v in s.vertices) or "-"
        lines.append(f"{i + 1:<5} {s.rule:<5} {verts:<21} {', '.join(map(str, s.strategies))}")
    lines.append("colors: " + "  ".join(f"{i}:{c.symbol}" for i, c in enumerate(red.final.colors)))
    lines.append("links: " + (", ".join(str(tuple(l)) for l in sorted(red.final.links)) or "none"))
    lines.append(f"verdict: {red.verdict}")
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_collapse(args) -> int:
    game = _load_game(args.game)
    code, info = _classification_exit(game, args.tol)
    if code != EXIT_OK:
        print("error: game is not admissible; nothing to collapse", file=sys.stderr)
        return code
    eq = interior_equilibria(game)
    if not eq.interior_flag:
        print("error: no interior equilibrium; the collapse is undefined", file=sys.stderr)
        return EXIT_NOT_DISSIPATIVE
    q = eq.interior_point
    exact = collapse_mod.rationalize_equilibrium(game, q)
    try:
        result = collapse_mod.hamiltonian_collapse(game, exact if exact is not None else q, tol=args.tol)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    from .games import games_equivalent

    final = result.final_game
    trivial = games_equivalent(
        final, PolymatrixGame(final.gtype, np.zeros((final.n, final.n)))
    )
    payload = {
        "steps": [
            {
                "removed": s.removed_original,
                "group": s.group,
                "q_ell": s.q_ell,
                "scale_factor": s.scale_factor,
                "type_after": list(s.after.sizes),
                "cleanup_group": s.cleanup_group,
            }
            for s in result.steps
        ],
        "final_type": list(result.final_game.gtype.sizes),
        "final_payoff": [[float(x) for x in row] for row in result.final_game.payoff],
        "final_equilibrium": [float(x) for x in result.final_equilibrium],
        "certificate": list(result.certificate.values),
        "equivalent_to_trivial": trivial,
    }
    lines = []
    for s in result.steps:
        note = f", group {s.cleanup_group} folded away" if s.cleanup_group is not None else ""
        lines.append(
            f"removed strategy {s.removed_original} (group {s.group}, q={s.q_ell:g}, "
            f"scale x{s.scale_factor:g}) -> type {s.after}{note}"
        )
    if not result.steps:
        lines.append("already conservative; no reduction needed")
    lines.append(f"final type: {result.final_game.gtype}")
    lines.extend(_fmt_matrix(result.final_game.payoff))
    lines.append(f"conservativity certificate: {list(result.certificate.values)}")
    lines.append("final game is conservative (Hamiltonian limit dynamics)")
    if trivial:
        lines.append("equivalent to the trivial game")
    _emit(args, payload, lines)
    if args.emit_game:
        gamefile.write_game(result.final_game, args.emit_game)
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    game = _load_game(args.game)
    eq = interior_equilibria(game)
    payload = {
        "exists": eq.exists,
        "particular": None if not eq.exists else [float(x) for x in eq.particular],
        "basis": [[float(x) for x in b] for b in eq.basis] if eq.exists else [],
        "dimension": eq.dimension,
        "interior": eq.interior_flag,
        "interior_point": None
        if eq.interior_point is None
        else [float(x) for x in eq.interior_point],
    }
    lines = [f"formal equilibria exist: {eq.exists}"]
    if eq.exists:
        lines.append(f"particular: {eq.particular}")
        lines.append(f"direction space dimension: {eq.dimension}")
        lines.append(f"interior: {eq.interior_flag}")
        if eq.interior_point is not None:
            lines.append(f"interior point: {eq.interior_point}")
    _emit(args, payload, lines)
    return EXIT_OK


def _parse_x0(spec: str, game: PolymatrixGame, seed: int) -> np.ndarray:
    if spec.startswith("random"):
        if ":" in spec:
            seed = int(spec.split(":", 1)[1])
        rng = np.random.default_rng(seed)
        return random_prism_state(game.gtype, rng, min_coord=0.02)
    vals = [float(tok) for tok in spec.replace(",", " ").split()]
    if len(vals) != game.n:
        raise SystemExit(f"error: x0 needs {game.n} coordinates")
    return np.array(vals)


def cmd_simulate(args) -> int:
    game = _load_game(args.game)
    try:
        x0 = _parse_x0(args.x0, game, args.seed)
    except ValueError:
        print("error: cannot parse --x0", file=sys.stderr)
        return EXIT_IO
    traj = dynamics.integrate(game, x0, args.T, args.dt)

    wanted = [m.strip() for m in args.monitors.split(",") if m.strip()]
    names: list[str] = []
    columns: list[np.ndarray] = []
    eq = interior_equilibria(game)
    scaling = stability.find_scaling(game, tol=args.tol)
    vstar = stability.stable_vertices(game, tol=args.tol)
    monitor_vertex = vstar[0] if vstar else enumerate_vertices(game.gtype)[0]
    positive = np.min(traj.states) > 0
    if "h" in wanted:
        if eq.exists and scaling is not None and positive:
            w = eq.particular / scaling.expand(game.gtype)
            names.append("h")
            columns.append(-np.log(traj.states) @ w)
        else:
            print("note: h monitor skipped (needs equilibrium, certificate, interior orbit)", file=sys.stderr)
    if "gb" in wanted:
        if positive:
            for k, g in enumerate(dynamics.first_integrals(game, monitor_vertex)):
                names.append(f"g{k}")
                columns.append(np.log(traj.states) @ g.coefficients)
        else:
            print("note: gb monitors skipped (orbit touches the boundary)", file=sys.stderr)
    if "ratios" in wanted:
        for i in monitor_vertex.support(game.gtype):
            j = monitor_vertex.partner(game.gtype, i)
            names.append(f"r{i}_{j}")
            with np.errstate(divide="ignore", invalid="ignore"):
                columns.append(traj.states[:, i] / traj.states[:, j])

    traj.monitors = dict(zip(names, columns))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{i}" for i in range(game.n)] + names)
            for k in range(len(traj.times)):
                row = [repr(float(traj.times[k]))]
                row += [repr(float(v)) for v in traj.states[k]]
                row += [repr(float(col[k])) for col in columns]
                writer.writerow(row)
    summary = {
        "steps": len(traj.times) - 1,
        "ok": traj.ok,
        "final_state": [float(v) for v in traj.final],
        "max_renorm_drift": float(np.max(traj.renorm_drift)),
        "monitors": {
            name: {"first": float(col[0]), "last": float(col[-1])}
            for name, col in zip(names, columns)
        },
    }
    lines = [
        f"integrated {summary['steps']} steps, ok={traj.ok}",
        f"final state: {traj.final}",
        f"max renormalization drift: {summary['max_renorm_drift']:.3e}",
    ]
    for name, col in zip(names, columns):
        lines.append(f"monitor {name}: first {col[0]:.9g} last {col[-1]:.9g}")
    _emit(args, summary, lines)
    return EXIT_OK


def cmd_lv2rep(args) -> int:
    try:
        a = gamefile.parse_matrix(args.A)
    except (OSError, gamefile.GameFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    r = np.array([float(tok) for tok in args.r.replace(",", " ").split()])
    try:
        lv = dynamics.LVSystem(a, r)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    game = dynamics.lv_to_replicator(lv)
    if args.emit_game:
        gamefile.write_game(game, args.emit_game)
    payload = {
        "type": list(game.gtype.sizes),
        "payoff": [[float(x) for x in row] for row in game.payoff],
    }
    lines = [f"compactified game type: {game.gtype}"] + _fmt_matrix(game.payoff)
    _emit(args, payload, lines)
    return EXIT_OK


def _add_common(sub, game_positional=True):
    if game_positional:
        sub.add_argument("game", help="game file (see README for the format)")
    sub.add_argument("--tol", type=float, default=stability.SEMIDEF_TOL,
                     help="semidefiniteness tolerance (relative)")
    sub.add_argument("--seed", type=int, default=_default_seed(),
                     help="RNG seed (POLYREP_SEED overrides the default)")
    sub.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyrep",
        description="Analyze polymatrix replicator systems: classify, reduce, collapse, simulate.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("check", help="classify the game and list stable vertices")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = subs.add_parser("vertices", help="vertex matrices and their graphs")
    _add_common(p)
    p.set_defaults(func=cmd_vertices)

    p = subs.add_parser("reduce", help="run the information-set reduction")
    _add_common(p)
    p.set_defaults(func=cmd_reduce)

    p = subs.add_parser("collapse", help="collapse to the conservative core")
    _add_common(p)
    p.add_argument("--emit-game", metavar="FILE", help="write the final game here")
    p.set_defaults(func=cmd_collapse)

    p = subs.add_parser("equilibrium", help="formal and interior equilibria")
    _add_common(p)
    p.set_defaults(func=cmd_equilibrium)

    p = subs.add_parser("simulate", help="integrate the flow with monitors")
    _add_common(p, game_positional=False)
    p.add_argument("--game", required=True, help="game file (see README for the format)")
    p.add_argument("--x0", default="random", help="start: comma list or random[:SEED]")
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--monitors", default="h,gb,ratios")
    p.add_argument("--csv", metavar="FILE", help="write t, states, monitors as CSV")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("lv2rep", help="compactify a Lotka-Volterra system")
    _add_common(p, game_positional=False)
    p.add_argument("--A", required=True, help="interaction matrix file")
    p.add_argument("--r", required=True, help="intrinsic rates, comma separated")
    p.add_argument("--emit-game", metavar="FILE", help="write the game file here")
    p.set_defaults(func=cmd_lv2rep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
