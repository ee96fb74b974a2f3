"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed (or no guarantee applies),
2 usage or input error, 3 internal failure inside a guaranteed region (the
path of a JSON dump is printed).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field

from . import core, embed_arbo, embed_tree, median, oracle, stub
from .errors import EmbeddingFailure, FormatError, NoGuarantee, PreconditionError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

TOURNAMENT_KINDS = ("transitive", "rotational", "paley", "random")
TREE_KINDS = ("tree", "dipath", "antipath", "outstar", "arborescence")
ALGORITHMS = ("arbo", "bi", "few", "many", "stub", "veryfew", "auto")


@dataclass
class RunConfig:
    command: str
    paths: list = field(default_factory=list)
    alg: str = "auto"
    seed: int = 0
    cap: int | None = None
    trials: int | None = None
    output: str | None = None
    as_json: bool = False


class Out:
    """Collects text lines and a JSON record; writes both consistently."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.lines: list[str] = []
        self.record: dict = {"command": cfg.command}

    def line(self, s: str = ""):
        self.lines.append(s)

    def flush(self, payload: str | None = None):
        if self.cfg.as_json:
            text = json.dumps(self.record, sort_keys=True, default=str) + "\n"
        else:
            text = "".join(ln + "\n" for ln in self.lines)
        sys.stdout.write(text)
        if self.cfg.output is not None:
            with open(self.cfg.output, "w") as fh:
                fh.write(payload if payload is not None else text)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _tree(path):
    return core.load_tree(_read(path))


def _tournament(path):
    return core.load_tournament(_read(path))


# -------------------------------------------------------------- commands

def cmd_gen(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    kind, n = args.kind, args.n
    if kind in TOURNAMENT_KINDS:
        params = None
        if kind == "rotational":
            if not args.residues:
                raise PreconditionError("rotational needs --residues")
            params = {int(x) for x in args.residues.split(",")}
        elif kind == "random":
            params = cfg.seed
        obj = core.generate(kind, n, params)
    elif kind == "tree":
        obj = core.random_tree(n, cfg.seed, leaves=args.leaves)
    elif kind == "dipath":
        obj = core.directed_path(n)
    elif kind == "antipath":
        obj = core.antidirected_path(n)
    elif kind == "outstar":
        obj = core.out_star(n)
    else:
        obj = core.random_out_arborescence(n, cfg.seed)
    text = obj.to_text()
    out.lines = text.rstrip("\n").split("\n")
    out.record.update(kind=kind, n=obj.n, text=text)
    out.flush(text)
    return EXIT_OK


def cmd_median(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    t = _tournament(args.tournament)
    if args.check is not None:
        try:
            order = tuple(int(x) for x in args.check.replace(",", " ").split())
        except ValueError:
            raise FormatError("--check expects a list of vertex ids") from None
    else:
        order = median.local_median_order(t)
    bad = median.check_m2(t, order)
    fwd = median.forward_arcs(t, order)
    text = " ".join(map(str, order)) + "\n"
    out.line(text.rstrip("\n"))
    out.line(f"forward_arcs {fwd}")
    if args.check is not None:
        for i, j in bad:
            out.line(f"violation {i} {j}")
    out.line(f"violations {len(bad)}")
    out.record.update(order=list(order), violations=[list(p) for p in bad], forward_arcs=fwd)
    out.flush(text)
    return EXIT_OK if not bad else EXIT_CHECK


def cmd_bound(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    a = _tree(args.tree)
    rep = embed_tree.best_bound(a)
    out.line(f"n {rep.n}")
    out.line(f"k {rep.k}")
    for alg in embed_tree.ALG_PREFERENCE:
        if alg in rep.bounds:
            out.line(f"{alg} {rep.bounds[alg]}")
    out.line(f"public_few {rep.public_few}")
    out.line(f"minimum {rep.minimum} via {rep.chosen}")
    out.line(f"universal {rep.universal}")
    ok = rep.minimum <= rep.universal
    out.record.update(n=rep.n, k=rep.k, bounds=rep.bounds, minimum=rep.minimum, chosen=rep.chosen,
                      public_few=rep.public_few, universal=rep.universal, ok=ok)
    out.flush()
    return EXIT_OK if ok else EXIT_CHECK


def cmd_embed(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    a = _tree(args.tree)
    t = _tournament(args.tournament)
    phi = embed_tree.embed_with(cfg.alg, a, t)
    bad = core.verify_embedding(a, t, phi)
    if bad:
        raise EmbeddingFailure("returned embedding failed verification: " + "; ".join(bad),
                               {"tree": a.to_text(), "tournament": t.to_text()})
    text = core.embedding_to_text(phi)
    out.lines = text.rstrip("\n").split("\n")
    out.record.update(alg=cfg.alg, embedding={str(u): v for u, v in sorted(phi.items())},
                      verified=True)
    out.flush(text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    a = _tree(args.tree)
    t = _tournament(args.tournament)
    phi = core.load_embedding(_read(args.embedding))
    bad = core.verify_embedding(a, t, phi)
    for b in bad:
        out.line(b)
    out.line("ok" if not bad else f"violations {len(bad)}")
    out.record.update(violations=bad, ok=not bad)
    out.flush()
    return EXIT_OK if not bad else EXIT_CHECK


def cmd_reduce(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    a = _tree(args.tree)
    red = stub.reduce_to_stubs(a)
    text = red.to_text()
    out.lines = text.rstrip("\n").split("\n")
    out.record.update(b=red.b, components=len(red.components), forest_nodes=red.size,
                      forks=[{"origin": f.prefix[0], "type": str(f.tau), "case": f.case}
                             for f in red.forks],
                      remainders=[{"kind": r.kind, "type": str(r.type), "nodes": list(r.nodes)}
                                  for r in red.remainders])
    out.flush(text)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    if args.what == "grunbaum":
        rep = oracle.grunbaum_checks()
        for r in rep:
            if r["expected"] == "none":
                status = "not contained" if r["ok"] else "CONTAINED"
            else:
                status = f"{r['got']} (expected {r['expected']})"
            out.line(f"{r['check']}: {status}")
        ok = all(r["ok"] for r in rep)
        out.record.update(checks=rep, ok=ok)
        out.flush()
        return EXIT_OK if ok else EXIT_CHECK
    if args.what == "embed":
        if len(args.files) != 2:
            raise PreconditionError("oracle embed needs a tree and a tournament")
        a, t = _tree(args.files[0]), _tournament(args.files[1])
        phi = oracle.brute_force_embed(a, t)
        if phi is None:
            out.line("none")
            out.record.update(found=False)
            out.flush()
            return EXIT_CHECK
        text = core.embedding_to_text(phi)
        out.lines = text.rstrip("\n").split("\n")
        out.record.update(found=True, embedding={str(u): v for u, v in sorted(phi.items())})
        out.flush(text)
        return EXIT_OK
    if len(args.files) != 1:
        raise PreconditionError("oracle unvd needs a tree")
    a = _tree(args.files[0])
    cap = cfg.cap if cfg.cap is not None else 7
    try:
        val = oracle.unvd_exact(a, cap=cap)
    except oracle.CapExceeded as exc:
        out.line(str(exc))
        out.record.update(unvd=None, cap=cap)
        out.flush()
        return EXIT_CHECK
    out.line(f"unvd {val}")
    out.record.update(unvd=val, cap=cap)
    out.flush()
    return EXIT_OK


# ---------------------------------------------------------------- stress

def _suite_arbo(rng):
    n = rng.randint(1, 30)
    a = core.random_out_arborescence(n, rng.randrange(1 << 30))
    rt = embed_arbo.as_rooted(a, kind="out")
    m = n + embed_arbo.arbo_leaf_count(rt) - 1
    t = core.random_tournament(m, rng.randrange(1 << 30))
    tr = embed_arbo.embed_out_arborescence(rt, t)
    return not core.verify_embedding(a, t, tr.embedding)


def _suite_few(rng):
    n = rng.randint(2, 40)
    a = core.random_tree(n, rng.randrange(1 << 30))
    t = core.random_tournament(embed_tree.few_leaves_bound(a), rng.randrange(1 << 30))
    return not core.verify_embedding(a, t, embed_tree.embed_few_leaves(a, t))


def _suite_many(rng):
    while True:
        n = rng.randint(3, 25)
        a = core.random_tree(n, rng.randrange(1 << 30))
        if any(a.degree(u) > 2 for u in range(n)):
            break
    t = core.random_tournament(embed_tree.many_leaves_bound(a), rng.randrange(1 << 30))
    return not core.verify_embedding(a, t, embed_tree.embed_many_leaves(a, t))


def _suite_median(rng):
    n = rng.randint(1, 120)
    t = core.random_tournament(n, rng.randrange(1 << 30))
    return not median.check_m2(t, median.local_median_order(t))


def _suite_veryfew(rng):
    while True:
        n = rng.randint(5, 20)
        a = core.random_tree(n, rng.randrange(1 << 30), leaves=3)
        if any(a.degree(u) > 2 for u in range(n)):
            break
    t = core.random_tournament(stub.very_few_bound(n, 3), rng.randrange(1 << 30))
    return not core.verify_embedding(a, t, stub.embed_very_few_leaves(a, t))


SUITES = {"median": (_suite_median, 100), "arbo": (_suite_arbo, 200), "few": (_suite_few, 100),
          "many": (_suite_many, 100), "veryfew": (_suite_veryfew, 2)}


def cmd_stress(cfg: RunConfig, args) -> int:
    out = Out(cfg)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = {}
    all_ok = True
    for name in names:
        fn, default = SUITES[name]
        trials = cfg.trials if cfg.trials is not None else default
        rng = random.Random(f"{cfg.seed}:{name}")
        passed = failed = 0
        first_error = None
        for _ in range(trials):
            try:
                ok = fn(rng)
            except EmbeddingFailure as exc:
                ok = False
                if first_error is None:
                    first_error = f"{exc} (dump {exc.write_dump()})"
            if ok:
                passed += 1
            else:
                failed += 1
        all_ok &= failed == 0
        results[name] = {"passed": passed, "failed": failed, "first_error": first_error}
        out.line(f"{name}: {passed} passed, {failed} failed")
        if first_error:
            out.line(f"  first error: {first_error}")
    out.record.update(suites=results, ok=all_ok)
    out.flush()
    return EXIT_OK if all_ok else EXIT_CHECK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-o", "--output", default=None)
    common.add_argument("--json", action="store_true", dest="as_json")
    p = argparse.ArgumentParser(prog="unavoid", description="Embed oriented trees in tournaments.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a tournament or a tree")
    g.add_argument("kind", choices=TOURNAMENT_KINDS + TREE_KINDS)
    g.add_argument("n", type=int)
    g.add_argument("--residues", default=None, help="comma-separated residues for rotational")
    g.add_argument("--leaves", type=int, default=None, help="leaf count for random trees")

    m = sub.add_parser("median", parents=[common], help="local median order of a tournament")
    m.add_argument("tournament")
    m.add_argument("--check", default=None, metavar="ORDERING",
                   help="check a given ordering instead of computing one")

    b = sub.add_parser("bound", parents=[common], help="table of guaranteed orders for a tree")
    b.add_argument("tree")

    e = sub.add_parser("embed", parents=[common], help="embed a tree in a tournament")
    e.add_argument("tree")
    e.add_argument("tournament")
    e.add_argument("--alg", choices=ALGORITHMS, default="auto")

    v = sub.add_parser("verify", parents=[common], help="check an embedding file")
    v.add_argument("tree")
    v.add_argument("tournament")
    v.add_argument("embedding")

    r = sub.add_parser("reduce", parents=[common], help="reduction of a tree to stubs")
    r.add_argument("tree")

    o = sub.add_parser("oracle", parents=[common], help="brute-force checks")
    o.add_argument("what", choices=("embed", "unvd", "grunbaum"))
    o.add_argument("files", nargs="*")
    o.add_argument("--cap", type=int, default=None)

    s = sub.add_parser("stress", parents=[common], help="randomised property campaigns")
    s.add_argument("--suite", choices=tuple(SUITES) + ("all",), default="all")
    s.add_argument("--trials", type=int, default=None)
    return p


COMMANDS = {"gen": cmd_gen, "median": cmd_median, "bound": cmd_bound, "embed": cmd_embed,
            "verify": cmd_verify, "reduce": cmd_reduce, "oracle": cmd_oracle, "stress": cmd_stress}


def run(cfg: RunConfig, args) -> int:
    if cfg.cap is not None and cfg.cap <= 0 or cfg.trials is not None and cfg.trials <= 0:
        raise PreconditionError("caps and trial counts must be positive")
    return COMMANDS[cfg.command](cfg, args)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    cfg = RunConfig(args.command, alg=getattr(args, "alg", "auto"), seed=args.seed,
                    cap=getattr(args, "cap", None), trials=getattr(args, "trials", None),
                    output=args.output, as_json=args.as_json)
    try:
        return run(cfg, args)
    except NoGuarantee as exc:
        print(f"no guarantee: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (FormatError, PreconditionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmbeddingFailure as exc:
        path = exc.write_dump()
        print(f"internal failure: {exc}\ndump written to {path}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
