"""GDP sector panels, the four-feature rows derived from them, and CSV I/O.

A *panel* holds yearly monetary values per (region, sector).  From it we
derive, for every (district, sector) pair, the feature vector

    v1  district average growth        (percent, year over year)
    v2  district average contribution  (percent share of a total)
    v3  province average growth        for the same sector
    v4  province average contribution  for the same sector

Averages are arithmetic means of the yearly series.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from somnb.errors import (
    EmptyInput,
    InvalidSeries,
    MalformedRow,
    MissingSector,
    TooShort,
    YearMismatch,
    ZeroBaseYear,
    ZeroTotal,
    ZeroVariance,
)

SECTORS = (
    "agriculture",
    "mining_and_quarrying",
    "manufacturing",
    "electricity_gas_and_water",
    "building",
    "commerce_hotel_and_restaurant",
    "transport_and_communications",
    "finance_leasing_and_services_agency",
    "services",
)
TOTAL = "total"
REGION_KINDS = ("district", "province")

FEATURE_COLUMNS = ("region_id", "sector", "v1", "v2", "v3", "v4")
LABEL_COLUMNS = ("klassen", "model")
PANEL_COLUMNS = ("region_id", "region_kind", "sector", "year", "amount")


def canonical_sector(name: str) -> str:
    """Map a free-form sector name ("Mining and Quarrying") to its slug.

    Raises InvalidSeries for names outside the nine sectors (plus ``total``).
    """
    slug = re.sub(r"[^a-z0-9]+", "_", name.strip().lower()).strip("_")
    if slug not in SECTORS and slug != TOTAL:
        raise InvalidSeries(f"unknown sector {name!r}")
    return slug


@dataclass(frozen=True)
class SectorSeries:
    """Yearly amounts of one sector (or the ``total``) for one region."""

    region_id: str
    region_kind: str
    sector: str
    values: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if self.region_kind not in REGION_KINDS:
            raise InvalidSeries(f"region_kind must be one of {REGION_KINDS}, got {self.region_kind!r}")
        object.__setattr__(self, "sector", canonical_sector(self.sector))
        pairs = tuple((int(y), float(a)) for y, a in self.values)
        years = [y for y, _ in pairs]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise InvalidSeries(f"{self.region_id}/{self.sector}: years must be strictly increasing")
        for y, a in pairs:
            if not math.isfinite(a) or a < 0:
                raise InvalidSeries(f"{self.region_id}/{self.sector}/{y}: amount must be finite and >= 0")
        object.__setattr__(self, "values", pairs)

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(y for y, _ in self.values)

    @property
    def amounts(self) -> tuple[float, ...]:
        return tuple(a for _, a in self.values)


@dataclass(frozen=True)
class FeatureRow:
    v1: float
    v2: float
    v3: float
    v4: float
    region_id: str = ""
    sector: str = ""
    klassen: int | None = None
    model: int | None = None

    @property
    def values(self) -> tuple[float, float, float, float]:
        return (self.v1, self.v2, self.v3, self.v4)


@dataclass(frozen=True)
class NormalizationParams:
    mean: tuple[float, ...] = field(default=())
    sd: tuple[float, ...] = field(default=())
    enabled: bool = False

    def to_dict(self) -> dict:
        return {"enabled": self.enabled, "mean": list(self.mean), "sd": list(self.sd)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "NormalizationParams":
        return cls(tuple(map(float, d["mean"])), tuple(map(float, d["sd"])), bool(d["enabled"]))


def as_matrix(rows) -> np.ndarray:
    """Stack FeatureRows (or any 2-D array-like) into a float64 matrix."""
    rows = list(rows) if not isinstance(rows, np.ndarray) else rows
    if len(rows) and isinstance(rows[0], FeatureRow):
        return np.array([r.values for r in rows], dtype=np.float64)
    m = np.asarray(rows, dtype=np.float64)
    if m.size == 0:
        return m.reshape(0, m.shape[1] if m.ndim == 2 else 0)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D table of rows, got shape {m.shape}")
    return m


# -- series arithmetic ------------------------------------------------------


def _pairs(s) -> tuple[tuple[int, float], ...]:
    if isinstance(s, SectorSeries):
        return s.values
    return tuple((int(y), float(a)) for y, a in s)


def growth_series(s) -> list[float]:
    """Year-over-year percent change: ``100 * (x[t+1] - x[t]) / x[t]``."""
    pairs = _pairs(s)
    if len(pairs) < 2:
        raise TooShort(f"growth needs at least 2 yearly values, got {len(pairs)}")
    out = []
    for (y0, a0), (_, a1) in zip(pairs, pairs[1:]):
        if a0 == 0:
            raise ZeroBaseYear(f"amount is 0 in base year {y0}")
        out.append(100.0 * (a1 - a0) / a0)
    return out


def contribution_series(s, total) -> list[float]:
    """Percent share of ``s`` in ``total`` for each year; years must coincide."""
    sp, tp = _pairs(s), _pairs(total)
    if [y for y, _ in sp] != [y for y, _ in tp]:
        raise YearMismatch(f"years differ: {[y for y, _ in sp]} vs {[y for y, _ in tp]}")
    out = []
    for (y, a), (_, t) in zip(sp, tp):
        if t <= 0:
            raise ZeroTotal(f"total is {t} in year {y}")
        out.append(100.0 * a / t)
    return out


def sum_series(series: Sequence[SectorSeries]) -> tuple[tuple[int, float], ...]:
    """Per-year sum of several series that share the same years."""
    years = series[0].years
    for s in series[1:]:
        if s.years != years:
            raise YearMismatch(f"{s.region_id}/{s.sector}: years {s.years} differ from {years}")
    return tuple((y, math.fsum(s.values[i][1] for s in series)) for i, y in enumerate(years))


def _by_region(series: Iterable[SectorSeries]) -> dict[str, dict[str, SectorSeries]]:
    out: dict[str, dict[str, SectorSeries]] = {}
    for s in series:
        bucket = out.setdefault(s.region_id, {})
        if s.sector in bucket:
            raise InvalidSeries(f"duplicate series {s.region_id}/{s.sector}")
        bucket[s.sector] = s
    return out


def _region_total(region_id: str, sectors: Mapping[str, SectorSeries]):
    if TOTAL in sectors:
        return sectors[TOTAL].values
    missing = [name for name in SECTORS if name not in sectors]
    if missing:
        raise MissingSector(f"{region_id}: cannot derive total GDP, missing sectors {missing}")
    return sum_series([sectors[name] for name in SECTORS])


def build_feature_rows(
    district: Iterable[SectorSeries],
    province: Iterable[SectorSeries],
    *,
    province_total=None,
    contribution_base: str = "province",
) -> list[FeatureRow]:
    """One FeatureRow per (district, sector), districts in input order.

    Total GDP of a region is its ``total`` series when present, otherwise
    the per-year sum of its nine sectors.  ``province_total`` overrides
    the province's total.

    ``contribution_base`` selects the denominator of the district
    contribution ``v2``: ``"province"`` (default) measures the district
    sector against the province's total GDP, ``"own"`` against the
    district's own total GDP.  ``v4`` always uses the province total.
    """
    if contribution_base not in ("province", "own"):
        raise ValueError(f"contribution_base must be 'province' or 'own', got {contribution_base!r}")
    districts = _by_region(district)
    provinces = _by_region(province)
    if len(provinces) != 1:
        raise InvalidSeries(f"expected exactly one province, got {sorted(provinces)}")
    (prov_id, prov), = provinces.items()
    for s in prov.values():
        if s.region_kind != "province":
            raise InvalidSeries(f"{s.region_id}/{s.sector} is not a province series")
    prov_total = _pairs(province_total) if province_total is not None else _region_total(prov_id, prov)

    rows = []
    for region_id, sectors in districts.items():
        own_total = None
        for name in SECTORS:
            if name not in sectors:
                continue
            s = sectors[name]
            if s.region_kind != "district":
                raise InvalidSeries(f"{region_id}/{name} is not a district series")
            if name not in prov:
                raise MissingSector(f"province {prov_id} has no {name} series")
            if contribution_base == "own":
                if own_total is None:
                    own_total = _region_total(region_id, sectors)
                base = own_total
            else:
                base = prov_total
            rows.append(
                FeatureRow(
                    v1=float(np.mean(growth_series(s))),
                    v2=float(np.mean(contribution_series(s, base))),
                    v3=float(np.mean(growth_series(prov[name]))),
                    v4=float(np.mean(contribution_series(prov[name], prov_total))),
                    region_id=region_id,
                    sector=name,
                )
            )
    return rows


def features_from_panel(series: Iterable[SectorSeries], **kwargs) -> list[FeatureRow]:
    """Split a mixed panel into district and province series, then build rows."""
    series = list(series)
    if not series:
        raise EmptyInput("no rows")
    district = [s for s in series if s.region_kind == "district"]
    province = [s for s in series if s.region_kind == "province"]
    if not province:
        raise InvalidSeries("panel contains no province series")
    return build_feature_rows(district, province, **kwargs)


# -- normalization ----------------------------------------------------------


def fit_normalizer(rows, enabled: bool = True) -> NormalizationParams:
    """Per-feature mean and population standard deviation of ``rows``."""
    x = as_matrix(rows)
    if not enabled:
        d = x.shape[1] if x.ndim == 2 else 0
        return NormalizationParams((0.0,) * d, (1.0,) * d, enabled=False)
    if x.shape[0] < 2:
        raise EmptyInput("normalizer needs at least 2 rows")
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    zero = np.flatnonzero(sd == 0)
    if zero.size:
        raise ZeroVariance(f"features {zero.tolist()} have zero variance")
    return NormalizationParams(tuple(mean.tolist()), tuple(sd.tolist()), enabled=True)


def apply_normalizer(params: NormalizationParams, rows) -> np.ndarray:
    x = as_matrix(rows)
    if not params.enabled:
        return x
    return (x - np.asarray(params.mean)) / np.asarray(params.sd)


# -- CSV --------------------------------------------------------------------


def _fmt(v: float) -> str:
    # repr is the shortest string that round-trips the float exactly
    return repr(float(v))


def save_feature_csv(rows: Sequence[FeatureRow], path) -> None:
    labels = [c for c in LABEL_COLUMNS if any(getattr(r, c) is not None for r in rows)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_COLUMNS + tuple(labels))
        for r in rows:
            cells = [r.region_id, r.sector] + [_fmt(v) for v in r.values]
            cells += ["" if getattr(r, c) is None else str(getattr(r, c)) for c in labels]
            w.writerow(cells)


def _parse_header(header: list[str], required: Sequence[str], optional: Sequence[str] = ()) -> list[str]:
    cols = [c.strip() for c in header]
    n = len(required)
    extra = cols[n:]
    if tuple(cols[:n]) != tuple(required) or extra != [c for c in optional if c in extra]:
        expected = ", ".join(required) + "".join(f"[, {c}]" for c in optional)
        raise MalformedRow(1, f"bad header {cols}; expected {expected}")
    return cols


def load_feature_csv(path) -> list[FeatureRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedRow(1, "missing header")
        cols = _parse_header(header, FEATURE_COLUMNS, LABEL_COLUMNS)
        rows = []
        for line, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(cols):
                raise MalformedRow(line, f"expected {len(cols)} fields, got {len(cells)}")
            try:
                vals = [float(c) for c in cells[2:6]]
            except ValueError as exc:
                raise MalformedRow(line, f"non-numeric feature value ({exc})") from None
            if not all(math.isfinite(v) for v in vals):
                raise MalformedRow(line, "non-finite feature value")
            labels = {}
            for name, cell in zip(cols[6:], cells[6:]):
                cell = cell.strip()
                if not cell:
                    labels[name] = None
                    continue
                try:
                    labels[name] = int(cell)
                except ValueError:
                    raise MalformedRow(line, f"{name} label {cell!r} is not an integer") from None
            rows.append(FeatureRow(*vals, region_id=cells[0].strip(), sector=cells[1].strip(), **labels))
    return rows


def load_panel_csv(path) -> list[SectorSeries]:
    """Read a long-format panel; series come out in order of first appearance."""
    acc: dict[tuple[str, str, str], list[tuple[int, float, int]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInput("no rows")
        _parse_header(header, PANEL_COLUMNS)
        for line, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(PANEL_COLUMNS):
                raise MalformedRow(line, f"expected {len(PANEL_COLUMNS)} fields, got {len(cells)}")
            region_id, kind, sector, year, amount = (c.strip() for c in cells)
            if kind not in REGION_KINDS:
                raise MalformedRow(line, f"region_kind {kind!r} not in {REGION_KINDS}")
            try:
                sector = canonical_sector(sector)
            except InvalidSeries as exc:
                raise MalformedRow(line, str(exc)) from None
            try:
                y, a = int(year), float(amount)
            except ValueError as exc:
                raise MalformedRow(line, f"bad year/amount ({exc})") from None
            if not math.isfinite(a) or a < 0:
                raise MalformedRow(line, f"amount must be finite and >= 0, got {amount}")
            acc.setdefault((region_id, kind, sector), []).append((y, a, line))
    if not acc:
        raise EmptyInput("no rows")
    out = []
    for (region_id, kind, sector), entries in acc.items():
        entries.sort(key=lambda e: e[0])
        for (y0, _, l0), (y1, _, l1) in zip(entries, entries[1:]):
            if y0 == y1:
                raise MalformedRow(l1, f"duplicate year {y1} for {region_id}/{sector} (first at line {l0})")
        out.append(SectorSeries(region_id, kind, sector, tuple((y, a) for y, a, _ in entries)))
    return out


def save_panel_csv(series: Iterable[SectorSeries], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PANEL_COLUMNS)
        for s in series:
            for y, a in s.values:
                w.writerow([s.region_id, s.region_kind, s.sector, y, _fmt(a)])


def fixture_path(name: str) -> Path:
    """Path of a data file shipped inside the package (e.g. ``table2.csv``)."""
    return Path(__file__).parent / "data" / name
