"""One-way rotation around an annulus and its predicted period.

A stimulus next to a temporary block line sends a single wave around the
ring. Once it settles, each lap sees the tissue it left one period earlier,
so the period P satisfies P = L / c(P - a(P)) with a(P) the APD that
reproduces itself at cycle length P and L the shortest loop (the inner rim).

Run:  python demos/03_ring_rotation.py
"""

from pathlib import Path

import numpy as np

from eikonal_reentry.engine import ACTIVATION
from eikonal_reentry.geometry import annulus_inner_perimeter
from eikonal_reentry.scenario import parse_scenario

scenario = parse_scenario(Path(__file__).resolve().parents[1] / "scenarios" / "ring.json")
table = scenario.tables[0]
series = scenario.simulate(keep=False)
acts = series.events.select(ACTIVATION)

length = annulus_inner_perimeter(2.0, 2.5, 0.05)
period = 400.0
for _ in range(200):
    apd = table.apd_plateau
    for _ in range(200):
        apd = 0.5 * apd + 0.5 * table.apd_of(max(period - apd, table.di_min))
    period = 0.5 * period + 0.5 * length / (table.cv_of(period - apd) / 1000.0)
print(f"loop length {length:.3f} cm, predicted period {period:.1f} ms")

for name, node in scenario.probes.items():
    times = acts.time[acts.node == node]
    print(f"{name:<14} laps: {np.round(np.diff(times), 1)}")
