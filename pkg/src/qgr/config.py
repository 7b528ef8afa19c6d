"""Central tolerance block.

Every numerical decision in the package reads its threshold from ``TOL``.
Overrides can be supplied as a JSON object in the ``QGR_TOL_OVERRIDES``
environment variable, e.g. ``QGR_TOL_OVERRIDES='{"rank": 1e-9}'``.
"""

from __future__ import annotations

import dataclasses
import json
import os


@dataclasses.dataclass(frozen=True)
class Tolerances:
    rank: float = 1e-10  # relative singular-value cutoff
    residual: float = 1e-9  # constraint residual, relative to solution norm
    resonance: float = 1e-9  # |E - 1| and |E - 1/E| classification
    roots: float = 1e-10  # bisection width for threshold crossings
    merge: float = 1e-12  # interval canonicalization, offset units
    pivot: float = 1e-12  # geometry recovery, on normalized observations
    rcond: float = 1e-12  # singular-system detection for dense solves

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_tolerances(env: str = "QGR_TOL_OVERRIDES") -> Tolerances:
    raw = os.environ.get(env)
    if not raw:
        return Tolerances()
    overrides = json.loads(raw)
    unknown = set(overrides) - {f.name for f in dataclasses.fields(Tolerances)}
    if unknown:
        raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
    return dataclasses.replace(Tolerances(), **{k: float(v) for k, v in overrides.items()})


TOL = load_tolerances()
