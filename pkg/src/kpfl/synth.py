"""Deterministic synthetic cities for tests, demos and the property suites.

Origins sit on a square grid with integer populations in 1..100; sites are
distinct random points of a finer lattice over the same square.  Distances are
planar Euclidean in meters, scaled so the square's diagonal is ``extent``.
The origin ``lat,lon`` columns hold planar ``(y, x)`` meters.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .instance import Instance, Origin, Site, build_instance


def synth_instance(seed: int, n_origins: int = 40, n_sites: int = 12, k: int | None = None, *,
                   n_existing: int = 0, capacities: bool = False, capacity_slack: float = 1.5,
                   n_penalized: int = 0, penalty: float = 1.0, extent: float = 5000.0) -> Instance:
    if n_origins < 1 or n_sites < 1:
        raise ConfigError("need at least one origin and one site")
    if k is not None and not 0 <= k <= n_sites:
        raise ConfigError(f"k={k} is not between 0 and the number of sites {n_sites}")
    if not 0 <= n_existing <= n_sites or not 0 <= n_penalized <= n_sites - n_existing:
        raise ConfigError("existing and penalized sites must fit among the sites")
    if not extent > 0:
        raise ConfigError("extent must be positive")
    rng = np.random.default_rng(seed)
    g = max(2, math.ceil(math.sqrt(n_origins)))
    step = extent / math.sqrt(2.0) / (g - 1)
    cells = np.array([(i // g, i % g) for i in range(n_origins)], float) * step
    pops = rng.integers(1, 101, size=n_origins)

    lattice = 2 * g - 1
    picks = rng.choice(lattice * lattice, size=n_sites, replace=False)
    site_xy = np.column_stack([picks // lattice, picks % lattice]).astype(float) * (step / 2.0)
    D = np.round(np.hypot(*(cells[:, None, :] - site_xy[None, :, :]).transpose(2, 0, 1)), 3)

    width = len(str(n_sites - 1))
    site_ids = [f"s{j:0{width}d}" for j in range(n_sites)]
    order = rng.permutation(n_sites)
    existing = set(order[:n_existing].tolist())
    penalized = set(order[n_existing:n_existing + n_penalized].tolist())
    caps = None
    if capacities:
        kk = max(1, k or n_sites)
        base = capacity_slack * pops.sum() / kk
        caps = rng.integers(math.ceil(0.75 * base), math.ceil(1.25 * base) + 1, size=n_sites)
    sites = [Site(sid, j in existing, None if caps is None else float(caps[j]),
                  penalty if j in penalized else None) for j, sid in enumerate(site_ids)]
    width = len(str(n_origins - 1))
    origins = [Origin(f"r{i:0{width}d}", int(pops[i]), (float(cells[i, 0]), float(cells[i, 1])))
               for i in range(n_origins)]
    entries = {(o.id, s.id): float(D[i, j]) for i, o in enumerate(origins) for j, s in enumerate(sites)}
    return build_instance(origins, sites, entries)
