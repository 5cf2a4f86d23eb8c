"""Per-node field comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComparisonReport:
    linf: float
    l2: float  # unnormalised: sqrt(sum of squared differences)
    diff: np.ndarray  # a - b, NaN where not compared
    compared: int
    excluded: int  # nodes in the mask where either value is non-finite

    def as_dict(self) -> dict:
        return {"linf": self.linf, "l2": self.l2, "compared": self.compared, "excluded": self.excluded}


def compare_fields(a, b, mask=None) -> ComparisonReport:
    """L-infinity and L2 norms of ``a - b`` over ``mask`` (boolean or index array).

    Nodes where either value is infinite are left out and counted in
    ``excluded``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"field lengths differ: {a.shape} vs {b.shape}")
    sel = np.ones(a.shape, dtype=bool)
    if mask is not None:
        mask = np.asarray(mask)
        if mask.dtype == bool:
            if mask.shape != a.shape:
                raise ValueError("boolean mask must match the field length")
            sel = mask.copy()
        else:
            sel = np.zeros(a.shape, dtype=bool)
            sel[mask.astype(np.int64)] = True
    finite = np.isfinite(a) & np.isfinite(b)
    use = sel & finite
    diff = np.full(a.shape, np.nan)
    diff[use] = a[use] - b[use]
    d = diff[use]
    linf = float(np.max(np.abs(d))) if d.size else 0.0
    l2 = float(math.sqrt(np.sum(d * d))) if d.size else 0.0
    return ComparisonReport(linf, l2, diff, int(use.sum()), int((sel & ~finite).sum()))
