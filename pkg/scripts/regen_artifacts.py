#!/usr/bin/env python3
"""Regenerate committed artifacts: the golden honest-run trace and the PRF
conformance vector files.  Run from the repository root."""

from pathlib import Path

from wgiot import crypto
from wgiot.scenario import load_scenario
from wgiot.simnet import sim_run

ROOT = Path(__file__).resolve().parent.parent


def main():
    scenario = load_scenario(ROOT / "scenarios" / "honest.scn")
    trace = sim_run(scenario, seed=0)
    golden = ROOT / "scenarios" / "golden" / "honest.trace"
    golden.parent.mkdir(exist_ok=True)
    golden.write_text(trace.serialize())
    print(f"wrote {golden}")

    for name in ("hmac-sha256", "trunc16"):
        path = ROOT / "vectors" / f"{name}.txt"
        path.write_text(crypto.generate_vectors(crypto.get_backend(name)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
