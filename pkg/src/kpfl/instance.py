"""Facility-location instances: origins, sites, and an origin-by-site distance matrix.

Origins and sites are kept sorted by id so every downstream structure (model
columns, enumeration order, tie-breaks) is deterministic.  Distances are meters;
a missing entry (after sparsification) is stored as ``inf``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .metrics import Distribution

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Origin:
    id: str
    population: int
    coords: tuple[float, float] | None = None


@dataclass(frozen=True)
class Site:
    id: str
    existing: bool = False
    capacity: float | None = None
    penalty: float | None = None


class DistanceMatrix:
    """Dense ``(|R|, |S|)`` array with ``inf`` marking an omitted pair."""

    def __init__(self, origin_ids: Sequence[str], site_ids: Sequence[str],
                 values: np.ndarray, d_max: float | None = None):
        values = np.array(values, dtype=float)
        if values.shape != (len(origin_ids), len(site_ids)):
            raise DataError(f"distance matrix shape {values.shape} does not match "
                            f"{len(origin_ids)} origins x {len(site_ids)} sites")
        if np.isnan(values).any():
            raise DataError("distance matrix contains NaN")
        if (values < 0).any():
            raise DataError("negative distance")
        values.setflags(write=False)
        self.origin_ids = tuple(origin_ids)
        self.site_ids = tuple(site_ids)
        self.values = values
        self.d_max = d_max

    @property
    def retained(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def is_dense(self) -> bool:
        return bool(self.retained.all())

    @property
    def entries(self) -> dict[tuple[str, str], float]:
        out = {}
        for i, j in zip(*np.nonzero(self.retained)):
            out[(self.origin_ids[i], self.site_ids[j])] = float(self.values[i, j])
        return out

    def get(self, origin_id: str, site_id: str) -> float | None:
        v = self.values[self.origin_ids.index(origin_id), self.site_ids.index(site_id)]
        return float(v) if math.isfinite(v) else None

    def __len__(self):
        return int(self.retained.sum())


@dataclass(frozen=True)
class Instance:
    origins: tuple[Origin, ...]
    sites: tuple[Site, ...]
    distances: DistanceMatrix
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.sites:
            raise DataError("instance has no sites")
        if not self.origins:
            raise DataError("instance has no origins with positive population")
        _check_unique([o.id for o in self.origins], "origin")
        _check_unique([s.id for s in self.sites], "site")
        if self.distances.origin_ids != tuple(o.id for o in self.origins) or \
                self.distances.site_ids != tuple(s.id for s in self.sites):
            raise DataError("distance matrix ids do not match origins/sites")
        caps = [s.capacity is not None for s in self.sites]
        if any(caps) and not all(caps):
            raise DataError("capacity must be given for every site or for none")
        for s in self.sites:
            if s.capacity is not None and not s.capacity > 0:
                raise DataError(f"site {s.id}: capacity must be positive")
            if s.penalty is not None and s.penalty < 0:
                raise DataError(f"site {s.id}: negative penalty")
        for o in self.origins:
            if o.population < 0:
                raise DataError(f"origin {o.id}: negative population")
        orphan = ~self.distances.retained.any(axis=1)
        if orphan.any():
            raise DataError(f"origin {self.origins[int(np.argmax(orphan))].id} has no distance entry")

    # -- construction ------------------------------------------------------
    @classmethod
    def from_arrays(cls, populations, distances, *, existing=None, capacities=None,
                    penalties=None, origin_ids=None, site_ids=None, d_max=None) -> "Instance":
        """Build from a population vector and an ``(|R|, |S|)`` distance array.

        ``penalties`` may be a full array (NaN = unpenalized) or a mapping from
        site id to penalty.  Ids default to ``r000``/``s000`` style so that
        lexicographic and positional orders agree.
        """
        D = np.asarray(distances, dtype=float)
        n_r, n_s = D.shape
        origin_ids = list(origin_ids) if origin_ids is not None else [f"r{i:03d}" for i in range(n_r)]
        site_ids = list(site_ids) if site_ids is not None else [f"s{j:03d}" for j in range(n_s)]
        existing = [False] * n_s if existing is None else [bool(e) for e in existing]
        if isinstance(penalties, Mapping):
            pen = [penalties.get(sid) for sid in site_ids]
        elif penalties is None:
            pen = [None] * n_s
        else:
            pen = [None if (p is None or np.isnan(p)) else float(p) for p in penalties]
        caps = [None] * n_s if capacities is None else [float(c) for c in capacities]
        origins = [Origin(rid, int(p)) for rid, p in zip(origin_ids, populations)]
        sites = [Site(sid, e, c, p) for sid, e, c, p in zip(site_ids, existing, caps, pen)]
        entries = {(origin_ids[i], site_ids[j]): D[i, j]
                   for i in range(n_r) for j in range(n_s) if np.isfinite(D[i, j])}
        return build_instance(origins, sites, entries, dense=False, d_max=d_max)

    # -- accessors ---------------------------------------------------------
    @property
    def T(self) -> int:
        return sum(o.population for o in self.origins)

    @property
    def origin_ids(self) -> tuple[str, ...]:
        return self.distances.origin_ids

    @property
    def site_ids(self) -> tuple[str, ...]:
        return self.distances.site_ids

    @property
    def populations(self) -> np.ndarray:
        return np.array([o.population for o in self.origins], dtype=float)

    @property
    def D(self) -> np.ndarray:
        return self.distances.values

    @property
    def capacitated(self) -> bool:
        return self.sites[0].capacity is not None

    @property
    def capacities(self) -> np.ndarray | None:
        if not self.capacitated:
            return None
        return np.array([s.capacity for s in self.sites], dtype=float)

    @property
    def existing_mask(self) -> np.ndarray:
        return np.array([s.existing for s in self.sites], dtype=bool)

    @property
    def penalties(self) -> dict[str, float]:
        """Penalized set U with per-site penalties (meters)."""
        return {s.id: s.penalty for s in self.sites if s.penalty is not None}

    def site_index(self, site_id: str) -> int:
        try:
            return self.site_ids.index(site_id)
        except ValueError:
            raise DataError(f"unknown site {site_id!r}") from None

    def origin_index(self, origin_id: str) -> int:
        try:
            return self.origin_ids.index(origin_id)
        except ValueError:
            raise DataError(f"unknown origin {origin_id!r}") from None

    def candidate_ids(self, fix_existing: bool = True) -> tuple[str, ...]:
        """Sites counted against k: non-existing ones, or all when existing sites may move."""
        return tuple(s.id for s in self.sites if not (fix_existing and s.existing))

    def with_sites(self, sites: Iterable[Site]) -> "Instance":
        """A copy with site attributes replaced (ids must be unchanged)."""
        sites = tuple(sites)
        if tuple(s.id for s in sites) != self.site_ids:
            raise DataError("with_sites requires the same site ids in the same order")
        return Instance(self.origins, sites, self.distances, self.warnings)

    def without_sites(self, site_ids: Iterable[str]) -> "Instance":
        drop = set(site_ids)
        keep = [j for j, s in enumerate(self.sites) if s.id not in drop]
        if not keep:
            raise DataError("removing sites leaves none")
        D = self.D[:, keep]
        dm = DistanceMatrix(self.origin_ids, [self.site_ids[j] for j in keep], D, self.distances.d_max)
        return Instance(self.origins, tuple(self.sites[j] for j in keep), dm, self.warnings)

    def canonical(self) -> str:
        """Stable JSON serialization (sorted keys, repr floats)."""
        doc = {
            "origins": [[o.id, o.population, list(o.coords) if o.coords else None] for o in self.origins],
            "sites": [[s.id, int(s.existing), s.capacity, s.penalty] for s in self.sites],
            "distances": [[r, s, d] for (r, s), d in sorted(self.distances.entries.items())],
            "d_max": self.distances.d_max,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _check_unique(ids, what):
    seen = set()
    for i in ids:
        if i in seen:
            raise DataError(f"duplicate {what} id {i!r}")
        seen.add(i)


def build_instance(origins: Iterable[Origin], sites: Iterable[Site],
                   entries: Mapping[tuple[str, str], float], *, dense: bool = True,
                   d_max: float | None = None) -> Instance:
    """Validate raw records and assemble an :class:`Instance`.

    Zero-population origins are dropped with a warning.  With ``dense=True``
    every retained (origin, site) pair must have a distance.
    """
    origins = list(origins)
    sites = sorted(sites, key=lambda s: s.id)
    _check_unique([o.id for o in origins], "origin")
    _check_unique([s.id for s in sites], "site")
    warnings = []
    kept = []
    for o in origins:
        if o.population < 0:
            raise DataError(f"origin {o.id}: negative population")
        if o.population == 0:
            msg = f"origin {o.id} has zero population; dropped"
            log.warning(msg)
            warnings.append(msg)
        else:
            kept.append(o)
    kept.sort(key=lambda o: o.id)
    r_index = {o.id: i for i, o in enumerate(kept)}
    s_index = {s.id: j for j, s in enumerate(sites)}
    all_origins = {o.id for o in origins}
    D = np.full((len(kept), len(sites)), np.inf)
    for (rid, sid), d in entries.items():
        d = float(d)
        if not math.isfinite(d):
            raise DataError(f"non-finite distance for ({rid}, {sid})")
        if d < 0:
            raise DataError(f"negative distance for ({rid}, {sid})")
        if sid not in s_index:
            raise DataError(f"distance references unknown site {sid!r}")
        if rid not in r_index:
            if rid not in all_origins:
                raise DataError(f"distance references unknown origin {rid!r}")
            continue
        D[r_index[rid], s_index[sid]] = d
    if dense and len(kept) and len(sites):
        missing = np.argwhere(~np.isfinite(D))
        if len(missing):
            i, j = missing[0]
            raise DataError(f"missing distance for ({kept[i].id}, {sites[j].id})")
    dm = DistanceMatrix([o.id for o in kept], [s.id for s in sites], D, d_max)
    return Instance(tuple(kept), tuple(sites), dm, tuple(warnings))


# -- CSV ingestion -----------------------------------------------------------

def _read_csv(path, required):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path.name}: missing column(s) {', '.join(missing)}")
        return list(reader)


def _num(value, what, cast=float):
    try:
        v = cast(value)
    except (TypeError, ValueError):
        raise DataError(f"non-numeric {what}: {value!r}") from None
    if isinstance(v, float) and not math.isfinite(v):
        raise DataError(f"non-finite {what}: {value!r}")
    return v


def _optional(value, what):
    value = (value or "").strip()
    return None if value == "" else _num(value, what)


def _population(value, rid):
    v = _num(value, f"population for origin {rid}")
    if v != int(v):
        raise DataError(f"population for origin {rid} is not an integer: {value!r}")
    if v < 0:
        raise DataError(f"negative population for origin {rid}")
    return int(v)


def load_instance(origin_path, site_path, distance_path, *, dense: bool = True) -> Instance:
    """Read ``origins.csv``, ``sites.csv`` and ``distances.csv`` into an :class:`Instance`."""
    origins = []
    for row in _read_csv(origin_path, ["id", "population"]):
        rid = row["id"].strip()
        coords = None
        if (row.get("lat") or "").strip() and (row.get("lon") or "").strip():
            coords = (_num(row["lat"], "lat"), _num(row["lon"], "lon"))
        origins.append(Origin(rid, _population(row["population"], rid), coords))

    sites = []
    for row in _read_csv(site_path, ["id", "existing", "capacity", "penalty"]):
        sid = row["id"].strip()
        flag = (row["existing"] or "").strip()
        if flag not in ("0", "1"):
            raise DataError(f"site {sid}: existing must be 0 or 1, got {flag!r}")
        cap = _optional(row["capacity"], f"capacity for site {sid}")
        pen = _optional(row["penalty"], f"penalty for site {sid}")
        if cap is not None and cap < 0:
            raise DataError(f"negative capacity for site {sid}")
        if pen is not None and pen < 0:
            raise DataError(f"negative penalty for site {sid}")
        sites.append(Site(sid, flag == "1", cap, pen))

    entries = {}
    for row in _read_csv(distance_path, ["origin_id", "site_id", "meters"]):
        key = (row["origin_id"].strip(), row["site_id"].strip())
        d = _num(row["meters"], f"distance for {key}")
        if d < 0:
            raise DataError(f"negative distance for {key}")
        if key in entries:
            raise DataError(f"duplicate distance entry for {key}")
        entries[key] = d
    return build_instance(origins, sites, entries, dense=dense)


def write_instance(instance: Instance, directory) -> tuple[Path, Path, Path]:
    """Write the three CSV files; the inverse of :func:`load_instance`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = directory / "origins.csv", directory / "sites.csv", directory / "distances.csv"

    def fmt(v):
        return "" if v is None else repr(float(v))

    with paths[0].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "population", "lat", "lon"])
        for o in instance.origins:
            lat, lon = o.coords if o.coords else (None, None)
            w.writerow([o.id, o.population, fmt(lat), fmt(lon)])
    with paths[1].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "existing", "capacity", "penalty"])
        for s in instance.sites:
            w.writerow([s.id, int(s.existing), fmt(s.capacity), fmt(s.penalty)])
    with paths[2].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_id", "site_id", "meters"])
        for (r, s), d in instance.distances.entries.items():
            w.writerow([r, s, repr(d)])
    return paths


# -- transformations ---------------------------------------------------------

def sparsify(instance: Instance, d_max: float) -> Instance:
    """Drop distance entries above ``d_max``.

    Every origin keeps its nearest existing site, so fixed-open sites always
    cover it.  Without existing sites an origin left with no entry is an error.
    """
    if not d_max > 0:
        raise DataError("d_max must be positive")
    D = instance.D
    keep = D <= d_max
    existing = instance.existing_mask
    if existing.any():
        Dex = np.where(existing[None, :], D, np.inf)
        nearest = np.argmin(Dex, axis=1)
        has = np.isfinite(Dex.min(axis=1))
        rows = np.nonzero(has)[0]
        keep[rows, nearest[rows]] = True
    orphan = ~keep.any(axis=1)
    if orphan.any():
        rid = instance.origin_ids[int(np.argmax(orphan))]
        raise DataError(f"d_max={d_max} leaves origin {rid} with no site")
    newD = np.where(keep, D, np.inf)
    dm = DistanceMatrix(instance.origin_ids, instance.site_ids, newD, d_max)
    return Instance(instance.origins, instance.sites, dm, instance.warnings)


def nearest_assignment_distribution(instance: Instance, site_filter: str = "all") -> Distribution:
    """Distance from each origin to its closest site in the filter (ties to the smallest id)."""
    if site_filter not in ("all", "existing"):
        raise ValueError("site_filter must be 'all' or 'existing'")
    mask = np.ones(len(instance.sites), bool) if site_filter == "all" else instance.existing_mask
    if not mask.any():
        raise DataError(f"no sites match filter {site_filter!r}")
    Df = np.where(mask[None, :], instance.D, np.inf)
    z = Df.min(axis=1)
    if not np.isfinite(z).all():
        rid = instance.origin_ids[int(np.argmax(~np.isfinite(z)))]
        raise DataError(f"origin {rid} has no distance to any {site_filter} site")
    return Distribution(z, instance.populations)
