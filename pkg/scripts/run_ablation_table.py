#!/usr/bin/env python3
"""Necessity ablation for the four protocol conditions.

Drops each condition in turn and reports which coherence goals become
underivable after full saturation, plus a control row with nothing dropped.
"""

import argparse
import time

from modcoherence.protocol import ablate, build_system


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--panels", type=int, default=2)
    parser.add_argument("--budget", type=int, default=200_000)
    args = parser.parse_args()

    start = time.perf_counter()
    rows = ablate(build_system(args.panels), budget=args.budget)
    elapsed = time.perf_counter() - start

    header = f"{'dropped condition':<22} {'coherent':<9} unreachable goals"
    print(header)
    print("-" * len(header))
    for dropped, verdict in rows:
        name = dropped.value if dropped else "(none)"
        failing = ", ".join(
            f"panel {g.panel} {g.name}" for g in verdict.goals if not g.established
        ) or "-"
        print(f"{name:<22} {str(verdict.sound_and_distributed):<9} {failing}")
    print(f"\n{len(rows)} rows in {elapsed:.2f}s "
          "(failures are saturation certificates relative to this rule system)")


if __name__ == "__main__":
    main()
