"""Run the built-in corpus (or one kind of it) against the oracles and summarise.

    python3 scripts/run_corpus.py --audit --report out/corpus.txt
"""

from __future__ import annotations

import argparse
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from catamatch.harness import TapeConfig, full_corpus, verify_all, write_reports


@dataclass
class CorpusRun:
    kinds: tuple[str, ...] = ()
    audit: bool = False
    value_set: int | None = None
    tape_seed: int = 0
    report: str | None = None


def main(cfg: CorpusRun) -> int:
    corpus = full_corpus()
    entries = corpus.of_kind(*cfg.kinds) if cfg.kinds else corpus.entries
    corpus = type(corpus)(corpus.name, list(entries))
    t0 = time.perf_counter()
    reports = verify_all(corpus, TapeConfig(s=cfg.value_set, seed=cfg.tape_seed), audit=cfg.audit)
    elapsed = time.perf_counter() - t0

    by_alg: dict[str, Counter] = {}
    events: Counter = Counter()
    for r in reports:
        c = by_alg.setdefault(r.algorithm, Counter())
        c["runs"] += 1
        c["ok"] += r.agrees is True
        c["restored"] += r.restored is True
        c["time"] += r.wall_time
        events.update((r.journal or {}).get("events", {}))

    print(f"{'algorithm':22s} {'runs':>5s} {'ok':>5s} {'restored':>9s} {'seconds':>8s}")
    for alg, c in sorted(by_alg.items()):
        print(f"{alg:22s} {c['runs']:5d} {c['ok']:5d} {c['restored']:9d} {c['time']:8.2f}")
    print("events:", dict(sorted(events.items())) or "none")
    print(f"total {len(reports)} runs in {elapsed:.1f}s")
    if cfg.report:
        Path(cfg.report).parent.mkdir(parents=True, exist_ok=True)
        write_reports(reports, cfg.report)
    bad = [r for r in reports if r.agrees is False or r.restored is False]
    for r in bad:
        print(r.line())
    return 1 if bad else 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", action="append", default=[])
    ap.add_argument("--audit", action="store_true")
    ap.add_argument("--value-set-size", type=int, default=None)
    ap.add_argument("--tape-seed", type=int, default=0)
    ap.add_argument("--report", default=None)
    a = ap.parse_args()
    raise SystemExit(main(CorpusRun(tuple(a.kind), a.audit, a.value_set_size, a.tape_seed, a.report)))
