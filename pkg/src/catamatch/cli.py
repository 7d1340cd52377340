"""Command line front end: ``catamatch <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .edmonds import ApproxParams, MatrixPencil, matroid_matching_approx, pencil_approx_rank
from .errors import CatamatchError
from .ffield import DEFAULT_PRIME, FieldSpec
from .harness import (
    EDMONDS_VALUE_SET,
    Corpus,
    RunReport,
    TapeConfig,
    _journal,
    full_corpus,
    generate,
    instance_text,
    mixed_spec,
    timed,
    verify_all,
    write_reports,
)
from .matrix import parse_matrix_text
from .mixedrank import MixedMatrix, intersection_block, load_pair, matroid_intersection_size, mixed_max_rank
from .pmsearch import maximum_matching, perfect_matching
from .tape import verify_restored
from .tutte import Graph, gallai_edmonds, matching_size


def _config(args) -> TapeConfig:
    return TapeConfig(
        prime=args.prime,
        s=args.value_set_size,
        blocks=args.blocks,
        seed=args.tape_seed,
        file=args.tape_file,
        paper_params=args.paper_params,
    )


def _finish(args, reports: list[RunReport]) -> int:
    for r in reports:
        print(r.line())
    if args.report:
        side = write_reports(reports, args.report)
        print(f"report: {args.report} (+ {side.name})")
    if args.check_restore and any(r.restored is False for r in reports):
        print("error: tape not restored", file=sys.stderr)
        return 3
    if any(r.agrees is False for r in reports):
        return 1
    return 0


def _graph_cmd(args, algorithm: str) -> list[RunReport]:
    g = Graph.load(args.graph)
    cfg = _config(args)
    tape = cfg.build(g.n, max(1, g.m))
    name = Path(args.graph).name
    if algorithm == "matching-size":
        res, dt = timed(lambda: matching_size(g, tape, audit=args.audit))
        print(f"nu = {res.nu}")
        print(f"deficiency = {sorted(res.deficiency)}")
        return [RunReport(name, algorithm, res.nu, None, None, _journal([res.run]), verify_restored(tape), dt)]
    if algorithm == "trank":
        res, dt = timed(lambda: matching_size(g, tape, audit=args.audit))
        print(f"rank = {2 * res.nu}")
        print("values = " + " ".join(map(str, res.assignment.values)))
        return [RunReport(name, algorithm, 2 * res.nu, None, None, _journal([res.run]), verify_restored(tape), dt)]
    if algorithm == "gallai-edmonds":
        ge, dt = timed(lambda: gallai_edmonds(g, tape, audit=args.audit))
        for label, part in (("D", ge.D), ("A", ge.A), ("C", ge.C)):
            print(f"{label} = {sorted(part)}")
        print("components = " + "; ".join(str(sorted(c)) for c in ge.components))
        return [RunReport(name, algorithm, sorted(ge.D), None, None, None, verify_restored(tape), dt)]
    if algorithm == "pm":
        res, dt = timed(lambda: perfect_matching(g, tape, w_max=args.w_max, audit=args.audit))
        for u, v in res.matching:
            print(f"{u} {v}")
        print(f"w0 = {res.weight}")
        return [RunReport(name, algorithm, len(res.matching), None, None, _journal([res.trank_run, res.run]),
                          verify_restored(tape), dt)]
    res, dt = timed(lambda: maximum_matching(g, tape, w_max=args.w_max, audit=args.audit))
    for u, v in res.matching:
        print(f"{u} {v}")
    print(f"nu = {res.nu}")
    return [RunReport(name, algorithm, len(res.matching), None, None, None, verify_restored(tape), dt)]


def cmd_mixed_rank(args) -> list[RunReport]:
    A = MixedMatrix.load(args.matrix)
    cfg = _config(args)
    spec = mixed_spec(A, cfg)
    tape = cfg.build(max(A.rows, A.cols), max(1, A.m), spec)
    res, dt = timed(lambda: mixed_max_rank(A, tape, audit=args.audit))
    print(f"rank = {res.rank}")
    print("values = " + " ".join(map(str, res.assignment.values)))
    print("deficiency = " + " ".join(res.deficiency))
    return [RunReport(Path(args.matrix).name, "mixed-rank", res.rank, None, None, _journal([res.run]),
                      verify_restored(tape), dt)]


def cmd_matroid_intersect(args) -> list[RunReport]:
    pair = load_pair(args.first, args.second)
    cfg = _config(args)
    block = intersection_block(pair)
    tape = cfg.build(max(block.rows, block.cols), max(1, pair.n))
    got, dt = timed(lambda: matroid_intersection_size(pair, tape, audit=args.audit))
    print(f"intersection size = {got}")
    return [RunReport(Path(args.first).name, "matroid-intersect", got, None, None, None, verify_restored(tape), dt)]


def _approx_params(args) -> ApproxParams:
    return ApproxParams.from_epsilon(Fraction(args.epsilon), ell=args.ell, c=args.c, unsafe=args.unsafe)


def _edmonds_spec(args, n: int, params: ApproxParams) -> tuple[TapeConfig, FieldSpec]:
    cfg = _config(args)
    if args.paper_params:
        return cfg, cfg.spec(n, exponent=params.c)
    return cfg, FieldSpec(args.prime, args.value_set_size or EDMONDS_VALUE_SET)


def cmd_edmonds(args) -> list[RunReport]:
    pen = MatrixPencil.load(args.pencil)
    params = _approx_params(args)
    cfg, spec = _edmonds_spec(args, pen.n, params)
    if pen.p != spec.p:
        spec = FieldSpec(pen.p, spec.s)
    tape = cfg.build(pen.n, pen.m, spec)
    res, dt = timed(lambda: pencil_approx_rank(pen, tape, params, audit=args.audit))
    print(f"rank >= {res.rank}  (epsilon={params.epsilon}, ell={params.ell}, c={params.c})")
    print("values = " + " ".join(map(str, res.assignment)))
    return [RunReport(Path(args.pencil).name, "edmonds-approx", res.rank, None, None, _journal([res.run]),
                      verify_restored(tape), dt, f"max ordinal count {res.max_ordinal_count}")]


def cmd_matroid_matching(args) -> list[RunReport]:
    _, _, p, rep = parse_matrix_text(Path(args.repr).read_text())
    g = Graph.load(args.graph)
    params = _approx_params(args)
    args.prime = p
    cfg, spec = _edmonds_spec(args, len(rep), params)
    tape = cfg.build(len(rep), max(1, g.m), spec)
    got, dt = timed(lambda: matroid_matching_approx(rep, g, tape, params, audit=args.audit))
    print(f"matroid matching >= {got}  (epsilon={params.epsilon})")
    return [RunReport(Path(args.graph).name, "matroid-matching", got, None, None, None, verify_restored(tape), dt)]


def cmd_verify_all(args) -> list[RunReport]:
    corpus = Corpus.from_json(Path(args.corpus).read_text()) if args.corpus else full_corpus()
    if args.kind:
        corpus = Corpus(corpus.name, corpus.of_kind(*args.kind))
    cfg = _config(args)
    return verify_all(corpus, cfg, audit=args.audit, progress=(lambda r: print(r.line())) if args.verbose else None)


def _parse_param(text: str) -> tuple[str, object]:
    key, _, raw = text.partition("=")
    for conv in (int, float):
        try:
            return key, conv(raw)
        except ValueError:
            pass
    return key, raw


def cmd_gen(args) -> int:
    params = dict(_parse_param(t) for t in args.param)
    if args.kind in ("mixed", "matroid-pair", "pencil"):
        params.setdefault("p", args.prime)
    inst = generate(args.kind, args.seed, params)
    text = instance_text(inst)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    tape = common.add_argument_group("tape")
    tape.add_argument("--prime", type=int, default=DEFAULT_PRIME)
    tape.add_argument("--value-set-size", type=int, default=None, help="size s of the value set {0..s-1}")
    tape.add_argument("--blocks", type=int, default=None, help="number N of tape blocks")
    src = tape.add_mutually_exclusive_group()
    src.add_argument("--tape-seed", type=int, default=0)
    src.add_argument("--tape-file", default=None, help="raw bytes used as the initial tape")
    tape.add_argument("--paper-params", action="store_true", help="N = n^3 blocks and s = n^10 values (n^c for the approximation commands)")
    tape.add_argument("--check-restore", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument("--report", default=None, help="write a text report here plus a JSON sidecar")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--audit", action="store_true", help="exhaustively re-check every compression")

    approx = argparse.ArgumentParser(add_help=False)
    approx.add_argument("--epsilon", default="1/2")
    approx.add_argument("--ell", type=int, default=None)
    approx.add_argument("--c", type=int, default=None)
    approx.add_argument("--unsafe", action="store_true", help="allow ell/c overrides")

    parser = argparse.ArgumentParser(prog="catamatch", description="Matching and rank algorithms on a restorable tape.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("matching-size", "maximum matching size"), ("trank", "maximum-rank Tutte evaluation"),
                        ("gallai-edmonds", "Gallai-Edmonds decomposition")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("graph")
    for name, help_ in (("pm", "perfect matching"), ("matching", "maximum matching")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("graph")
        sp.add_argument("--w-max", type=int, default=None, help="largest edge weight, of the form 2^k - 1")
    sp = sub.add_parser("mixed-rank", parents=[common], help="maximum-rank completion ('?' marks a variable)")
    sp.add_argument("matrix")
    sp = sub.add_parser("matroid-intersect", parents=[common], help="linear matroid intersection size")
    sp.add_argument("first")
    sp.add_argument("second", nargs="?", default=None, help="omit when FIRST holds both, separated by '---'")
    sp = sub.add_parser("edmonds-approx", parents=[common, approx], help="approximate pencil rank")
    sp.add_argument("pencil")
    sp = sub.add_parser("matroid-matching", parents=[common, approx], help="approximate matroid matching")
    sp.add_argument("repr")
    sp.add_argument("graph")
    sp = sub.add_parser("verify-all", parents=[common], help="check every corpus instance against its oracle")
    sp.add_argument("--corpus", default=None, help="corpus JSON (default: the built-in corpus)")
    sp.add_argument("--kind", action="append", default=None, help="restrict to one instance kind (repeatable)")
    sp.add_argument("--verbose", "-v", action="store_true")
    sp = sub.add_parser("gen", parents=[common], help="generate an instance file")
    sp.add_argument("kind", choices=["random-graph", "pm-graph", "named", "mixed", "matroid-pair", "pencil"])
    sp.add_argument("param", nargs="*", help="key=value generator parameters")
    sp.add_argument("-o", "--output", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    # key=value generator parameters may follow options such as --seed
    if extra and (args.command != "gen" or not all("=" in t and not t.startswith("-") for t in extra)):
        parser.error("unrecognized arguments: " + " ".join(extra))
    if extra:
        args.param = list(args.param) + extra
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command in ("matching-size", "trank", "gallai-edmonds", "pm", "matching"):
            reports = _graph_cmd(args, args.command)
        else:
            handler = {
                "mixed-rank": cmd_mixed_rank,
                "matroid-intersect": cmd_matroid_intersect,
                "edmonds-approx": cmd_edmonds,
                "matroid-matching": cmd_matroid_matching,
                "verify-all": cmd_verify_all,
            }[args.command]
            reports = handler(args)
            if args.command == "verify-all":
                bad = [r for r in reports if r.agrees is False or r.restored is False]
                if not args.verbose:
                    for r in bad:
                        print(r.line())
                print(json.dumps({"runs": len(reports), "failures": len(bad)}))
                if args.report:
                    write_reports(reports, args.report)
                return 1 if bad else 0
    except CatamatchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return _finish(args, reports)


if __name__ == "__main__":
    sys.exit(main())
