#!/usr/bin/env python3
"""Normalized throughput versus population size for a family of relay
probabilities; writes one CSV per curve under results/."""
import pathlib
import sys

from sagin_uplink import SweepSpec, default_scenario, run_sweep

OUT_DIR = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path("results")
RHOS = (0.0, 0.1, 0.5, 0.9, 1.0)
POPULATIONS = tuple(range(10, 201, 10))


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    scenario = default_scenario()
    for rho in RHOS:
        spec = SweepSpec("n_users", POPULATIONS, {"rho": rho})
        rows = run_sweep(scenario, spec)
        path = OUT_DIR / f"throughput_vs_users_rho{rho:g}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n_users,normalized,s_g2s,s_gas,s_sum\n")
            for r in rows:
                fh.write(f"{r['n_users']},{r['normalized']:.9g},{r['s_g2s']:.9g},"
                         f"{r['s_gas']:.9g},{r['s_sum']:.9g}\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
