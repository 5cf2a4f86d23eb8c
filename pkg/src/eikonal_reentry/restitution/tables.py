"""Restitution tables: DI -> APD and DI -> CV with clamped linear interpolation.

On disk a table is a sidecar JSON (tissue id, DI_min, anisotropy ratio and
the names of its two CSV files) next to ``<stem>_apd.csv`` with header
``di_ms,apd_ms`` and ``<stem>_cv.csv`` with header ``di_ms,cv_cm_per_s``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class TableError(ValueError):
    pass


@dataclass(frozen=True)
class RestitutionTable:
    tissue_id: int
    di_min: float  # ms
    apd_di: np.ndarray  # ms, strictly increasing
    apd: np.ndarray  # ms
    cv_di: np.ndarray  # ms, strictly increasing
    cv: np.ndarray  # cm/s
    ratio: float = 1.0  # cv_t / cv_l
    name: str = ""

    def __post_init__(self):
        for attr in ("apd_di", "apd", "cv_di", "cv"):
            arr = np.array(getattr(self, attr), dtype=np.float64).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        self.validate()

    def validate(self) -> None:
        for label, di, val in (("apd", self.apd_di, self.apd), ("cv", self.cv_di, self.cv)):
            if di.size == 0:
                raise TableError(f"{label} table is empty")
            if di.shape != val.shape:
                raise TableError(f"{label} table: DI and value columns differ in length")
            if not (np.all(np.isfinite(di)) and np.all(np.isfinite(val))):
                raise TableError(f"{label} table has non-finite entries")
            steps = np.diff(di)
            if np.any(steps <= 0):
                row = int(np.argmax(steps <= 0)) + 1
                raise TableError(f"{label} table: DI column not strictly increasing at row {row}")
            if np.any(val < 0):
                raise TableError(f"{label} table has negative values")
            if di[0] < self.di_min - 1e-9:
                raise TableError(
                    f"{label} table starts at DI {di[0]} ms, below DI_min {self.di_min} ms"
                )
        if not math.isfinite(self.di_min) or self.di_min < 0:
            raise TableError(f"DI_min must be finite and non-negative, got {self.di_min}")
        if not 0 < self.ratio <= 1:
            raise TableError(f"anisotropy ratio must be in (0, 1], got {self.ratio}")

    def apd_of(self, di: float) -> float:
        return apd_of(self, di)

    def cv_of(self, di: float) -> float:
        return cv_of(self, di)

    @property
    def cv_plateau(self) -> float:
        return float(self.cv[-1])

    @property
    def apd_plateau(self) -> float:
        return float(self.apd[-1])


def _interp(xp, fp, x):
    x = np.asarray(x, dtype=np.float64)
    # np.interp clamps at both ends; +inf lands on the last knot
    out = np.interp(np.where(np.isposinf(x), xp[-1], x), xp, fp)
    return float(out) if out.ndim == 0 else out


def apd_of(table: RestitutionTable, di):
    """APD (ms) for a diastolic interval (ms); clamped outside the table."""
    return _interp(table.apd_di, table.apd, di)


def cv_of(table: RestitutionTable, di):
    """Longitudinal CV (cm/s) for a diastolic interval (ms); clamped outside the table."""
    return _interp(table.cv_di, table.cv, di)


def flat_table(tissue_id: int, apd: float, cv: float, di_min: float = 0.0, ratio: float = 1.0):
    """Constant restitution: every DI maps to the same APD and CV."""
    return RestitutionTable(tissue_id, di_min, [di_min], [apd], [di_min], [cv], ratio)


def _write_csv(path: Path, header, di, val):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in zip(di, val):
            w.writerow([repr(float(a)), repr(float(b))])


def _read_csv(path: Path, header):
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != list(header):
        raise TableError(f"{path}: expected header {','.join(header)}")
    try:
        data = [(float(r[0]), float(r[1])) for r in rows[1:] if r]
    except (ValueError, IndexError) as exc:
        raise TableError(f"{path}: malformed row ({exc})") from exc
    if not data:
        raise TableError(f"{path}: table is empty")
    di, val = zip(*data)
    return np.array(di), np.array(val)


def _stem(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix == ".json" else path


def save_table(table: RestitutionTable, path) -> Path:
    """Write ``<stem>.json``, ``<stem>_apd.csv`` and ``<stem>_cv.csv``; return the JSON path."""
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    apd_file = stem.parent / f"{stem.name}_apd.csv"
    cv_file = stem.parent / f"{stem.name}_cv.csv"
    _write_csv(apd_file, ("di_ms", "apd_ms"), table.apd_di, table.apd)
    _write_csv(cv_file, ("di_ms", "cv_cm_per_s"), table.cv_di, table.cv)
    sidecar = {
        "tissue_id": int(table.tissue_id),
        "name": table.name,
        "di_min_ms": float(table.di_min),
        "ratio": float(table.ratio),
        "apd_csv": apd_file.name,
        "cv_csv": cv_file.name,
    }
    json_path = stem.with_suffix(".json")
    json_path.write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    return json_path


def load_table(path) -> RestitutionTable:
    json_path = _stem(path).with_suffix(".json")
    try:
        meta = json.loads(json_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TableError(f"{json_path}: invalid JSON ({exc})") from exc
    try:
        apd_di, apd = _read_csv(json_path.parent / meta["apd_csv"], ("di_ms", "apd_ms"))
        cv_di, cv = _read_csv(json_path.parent / meta["cv_csv"], ("di_ms", "cv_cm_per_s"))
        return RestitutionTable(
            tissue_id=int(meta["tissue_id"]),
            di_min=float(meta["di_min_ms"]),
            apd_di=apd_di,
            apd=apd,
            cv_di=cv_di,
            cv=cv,
            ratio=float(meta.get("ratio", 1.0)),
            name=str(meta.get("name", "")),
        )
    except KeyError as exc:
        raise TableError(f"{json_path}: missing key {exc}") from exc
