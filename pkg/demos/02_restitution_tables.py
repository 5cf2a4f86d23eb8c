"""The shipped restitution tables, and how one is regenerated.

Each table pairs APD(DI) from a single Mitchell-Schaeffer cell paced with an
S1-S2 protocol with CV(DI) measured on a 1D cable. DI_min is the shortest
diastolic interval that still produces an action potential.

Regenerating a full table takes about 15 s per tissue; pass --regenerate to
do it for the healthy preset and compare with the shipped copy.

Run:  python demos/02_restitution_tables.py [--regenerate]
"""

import sys

import numpy as np

from eikonal_reentry.restitution.mitchell_schaeffer import HEALTHY, generate_table
from eikonal_reentry.restitution.presets import builtin_table

for name in ("healthy", "border_zone", "atrial"):
    tab = builtin_table(name)
    print(f"{name:<12} DI_min {tab.di_min:6.1f} ms   APD {tab.apd_of(tab.di_min):6.1f} -> "
          f"{tab.apd_plateau:6.1f} ms   CV {tab.cv_of(tab.di_min):5.1f} -> {tab.cv_plateau:5.1f} cm/s   "
          f"ratio {tab.ratio}")

healthy = builtin_table("healthy")
print("\n  DI (ms)   APD (ms)   CV (cm/s)")
for di in (healthy.di_min, 80, 100, 150, 200, 300, 500, 1000):
    print(f"  {di:7.1f}   {healthy.apd_of(di):8.1f}   {healthy.cv_of(di):9.2f}")

if "--regenerate" in sys.argv:
    fresh = generate_table(HEALTHY, 0, 0.46, ratio=healthy.ratio)
    same = np.array_equal(fresh.apd, healthy.apd) and np.array_equal(fresh.cv, healthy.cv)
    print(f"\nregenerated: DI_min {fresh.di_min:.2f} ms, identical to shipped table: {same}")
