"""Per-record savings under N = n^3 blocks and s = n^10 (n^c for the approximation).

For each record tag, walks n upward until the measured minimum savings meets
its bound and prints every size tried.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from catamatch.harness import MARGIN_FAMILIES, margin_edmonds, smallest_feasible


@dataclass
class MarginSweep:
    tags: tuple[str, ...] = tuple(MARGIN_FAMILIES)
    # (n, number of pencil matrices, epsilon); larger n at eps=1/3 enumerates n^14 tuples per block
    pencils: tuple[tuple[int, int, str], ...] = ((2, 2, "1/2"), (2, 2, "1/3"), (2, 3, "1/3"), (4, 4, "1/2"),
                                                 (4, 16, "1/2"))


def main(cfg: MarginSweep) -> int:
    failed = False
    for tag in cfg.tags:
        n, rows = smallest_feasible(tag)
        for r in rows:
            print(r.line())
        print(f"  smallest feasible n for {tag}: {n}\n")
        failed |= n is None
    for n, m, eps in cfg.pencils:
        print(margin_edmonds(n, m, eps).line())
    return int(failed)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tag", action="append", choices=list(MARGIN_FAMILIES), default=None)
    a = ap.parse_args()
    raise SystemExit(main(MarginSweep(tuple(a.tag)) if a.tag else MarginSweep()))
