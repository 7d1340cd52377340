"""How small can the value set get before the matching size goes wrong?

Runs matching_size on the random-graph corpus for several value-set sizes and
counts exact answers and fired events.  Small sets make events frequent but
can leave the greedy short of maximum rank.
"""

from __future__ import annotations

import argparse
from collections import Counter
from dataclasses import dataclass

from catamatch import matching_size
from catamatch.errors import CatamatchError
from catamatch.harness import TapeConfig, graph_corpus, oracle_max_matching
from catamatch.tape import verify_restored


@dataclass
class Sweep:
    sizes: tuple[int, ...] = (2, 3, 4, 6, 8, 12, 16, 1000)
    seeds: int = 200
    audit: bool = False


def main(cfg: Sweep) -> None:
    corpus = graph_corpus(range(1, cfg.seeds + 1))
    graphs = [(e.id, e.build()) for e in corpus.entries if e.kind == "random-graph"]
    print(f"{'s':>6s} {'exact':>7s} {'errors':>7s} {'restored':>9s}  events")
    for s in cfg.sizes:
        exact = errors = restored = 0
        events: Counter = Counter()
        for _, g in graphs:
            tape = TapeConfig(s=s).build(g.n, max(1, g.m))
            try:
                res = matching_size(g, tape, audit=cfg.audit)
            except CatamatchError:
                errors += 1
                continue
            exact += res.nu == oracle_max_matching(g)
            restored += verify_restored(tape)
            if res.run is not None:
                events.update(res.run.summary()["events"])
        print(f"{s:6d} {exact:4d}/{len(graphs):<3d} {errors:7d} {restored:9d}  {dict(sorted(events.items()))}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=None)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--audit", action="store_true")
    a = ap.parse_args()
    base = Sweep()
    main(Sweep(tuple(a.sizes) if a.sizes else base.sizes, a.seeds, a.audit))
