#!/usr/bin/env python3
"""Sweep the device→access-point drop probability and measure how often the
device still ends up authenticated, plus how much frame traffic each run
costs.  A quick robustness read on the protocol under a lossy first hop.

Usage: python3 scripts/lossy_link_sweep.py [--runs N] [--max-time MS]
"""

import argparse
import random

from wgiot.icd import Authenticated
from wgiot.simnet import LinkModel, Scenario, Simulator, StartIcd, SubscriberSpec


def make_scenario(seed: int, drop: float, max_time: int) -> Scenario:
    r = random.Random(seed)
    sub = SubscriberSpec(
        icd_in=1,
        esn=2,
        key=r.randbytes(32),
        sc_auth_k=r.randbytes(16),
        sd=r.randbytes(16),
    )
    return Scenario(
        subscribers=[sub],
        schedule=[StartIcd("icd-1", at=0)],
        links={("icd-1", "map-1"): LinkModel(delay_ms=5, drop_prob=drop)},
        max_time=max_time,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=200, help="seeds per drop rate")
    parser.add_argument("--max-time", type=int, default=10_000)
    args = parser.parse_args()

    print(f"{'drop':>5}  {'auth rate':>9}  {'mean frames':>11}")
    for drop in (0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9):
        ok = 0
        frames = 0
        for seed in range(args.runs):
            sim = Simulator(make_scenario(seed, drop, args.max_time), seed=seed)
            trace = sim.run()
            ok += isinstance(sim.icds["icd-1"].state, Authenticated)
            frames += len(trace.entries)
        print(f"{drop:5.2f}  {ok / args.runs:9.3f}  {frames / args.runs:11.1f}")


if __name__ == "__main__":
    main()
