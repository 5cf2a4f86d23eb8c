"""Restitution tables shipped with the package.

``healthy`` and ``border_zone`` are generated from the Mitchell-Schaeffer
presets by :func:`build_shipped_tables`; ``atrial`` is a hand-built
AF-remodelled atrial table used by the spiral scenario.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .mitchell_schaeffer import BORDER_ZONE, HEALTHY, generate_table
from .tables import RestitutionTable, load_table, save_table

# name -> (parameters, tissue id, sigma mS/cm, anisotropy ratio)
MS_PRESETS = {
    "healthy": (HEALTHY, 0, 0.46, 0.61),
    "border_zone": (BORDER_ZONE, 1, 0.19, 0.63),
}


def atrial_table(tissue_id: int = 0, ratio: float = 0.5) -> RestitutionTable:
    """Smooth, monotone atrial restitution with DI_min 35 ms.

    APD rises from 100 ms at DI_min to a 150 ms plateau, CV from about
    53 cm/s to 68 cm/s.
    """
    di = np.concatenate([np.arange(35.0, 200.0, 5.0), np.arange(200.0, 1001.0, 50.0)])
    apd = 150.0 - 90.0 * np.exp(-di / 60.0)
    cv = 68.0 * (1.0 - 0.45 * np.exp(-di / 50.0))
    # pin the plateau so long-DI lookups return exactly 150 ms and 68 cm/s
    apd[-1], cv[-1] = 150.0, 68.0
    return RestitutionTable(tissue_id, 35.0, di, apd, di, cv, ratio, "atrial")


def tables_dir() -> Path:
    return Path(str(resources.files("eikonal_reentry") / "data" / "tables"))


def builtin_table(name: str) -> RestitutionTable:
    path = tables_dir() / f"{name}.json"
    if not path.exists():
        known = sorted(p.stem for p in tables_dir().glob("*.json"))
        raise KeyError(f"no builtin table {name!r}; known: {known}")
    return load_table(path)


def build_shipped_tables(out_dir=None) -> dict:
    """Regenerate every shipped table; returns name -> sidecar path."""
    out = Path(out_dir) if out_dir is not None else tables_dir()
    paths = {}
    for name, (params, tid, sigma, ratio) in MS_PRESETS.items():
        paths[name] = save_table(generate_table(params, tid, sigma, ratio), out / name)
    paths["atrial"] = save_table(atrial_table(), out / "atrial")
    return paths
