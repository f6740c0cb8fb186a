#!/usr/bin/env python3
"""Normalized throughput versus relay probability for several negotiation
window lengths, plus the optimizer's pick for the default window."""
import pathlib
import sys

from sagin_uplink import SweepSpec, alternate, default_scenario, run_sweep, scenario_rates

OUT_DIR = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path("results")
NEGOTIATION_WINDOWS_MS = (5.0, 10.0, 20.0)
RHOS = tuple(round(0.05 * i, 2) for i in range(1, 20))


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    scenario = default_scenario()
    for t_h_ms in NEGOTIATION_WINDOWS_MS:
        spec = SweepSpec("rho", RHOS, {"negotiation_s": t_h_ms * 1e-3})
        rows = run_sweep(scenario, spec)
        path = OUT_DIR / f"throughput_vs_rho_th{t_h_ms:g}ms.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("rho,normalized,s_g2s,s_gas,s_sum\n")
            for r in rows:
                fh.write(f"{r['rho']},{r['normalized']:.9g},{r['s_g2s']:.9g},"
                         f"{r['s_gas']:.9g},{r['s_sum']:.9g}\n")
        print(f"wrote {path}")

    result = alternate(scenario.cfg, scenario.timings, scenario_rates(scenario))
    print(f"optimizer: rho*={result.rho_star:.4f} objective={result.objective:.6g} "
          f"converged={result.converged} iterations={result.iterations}")


if __name__ == "__main__":
    main()
