"""Great-circle distances between facilities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance

EARTH_RADIUS_KM = 6371.0088

LatLon = tuple[float, float]


class CoordinateError(ValueError):
    pass


@dataclass(frozen=True)
class DistanceMatrix:
    from_ids: tuple[str, ...]
    to_ids: tuple[str, ...]
    km: np.ndarray

    def __post_init__(self) -> None:
        km = np.array(self.km, dtype=float)
        if km.shape != (len(self.from_ids), len(self.to_ids)):
            raise ValueError(
                f"matrix shape {km.shape} does not match {len(self.from_ids)}x{len(self.to_ids)} ids"
            )
        if km.size and (not np.all(np.isfinite(km)) or km.min() < 0):
            raise ValueError("distances must be finite and non-negative")
        km.setflags(write=False)
        object.__setattr__(self, "from_ids", tuple(self.from_ids))
        object.__setattr__(self, "to_ids", tuple(self.to_ids))
        object.__setattr__(self, "km", km)

    @property
    def shape(self) -> tuple[int, int]:
        return self.km.shape

    def to_csv(self) -> str:
        lines = [",".join(["id", *self.to_ids])]
        for fid, row in zip(self.from_ids, self.km):
            lines.append(",".join([fid, *(f"{v:.6f}" for v in row)]))
        return "\n".join(lines) + "\n"


def _check(point: LatLon, label: str = "point") -> tuple[float, float]:
    lat, lon = float(point[0]), float(point[1])
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise CoordinateError(f"{label}: coordinates out of range (lat={lat}, lon={lon})")
    return lat, lon


def haversine_km(a: LatLon, b: LatLon) -> float:
    """Great-circle distance in km on a sphere of mean Earth radius."""
    a, b = _check(a, "a"), _check(b, "b")
    # fixed argument order keeps the result bitwise symmetric
    (lat1, lon1), (lat2, lon2) = (a, b) if a <= b else (b, a)
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    # h can exceed 1 by an ulp near the antipode
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def distance_matrix(
    points_a: Sequence[LatLon],
    points_b: Sequence[LatLon],
    ids_a: Iterable[str] | None = None,
    ids_b: Iterable[str] | None = None,
) -> DistanceMatrix:
    if not points_a or not points_b:
        raise ValueError("distance_matrix needs non-empty point lists")
    for label, pts in (("points_a", points_a), ("points_b", points_b)):
        for i, p in enumerate(pts):
            _check(p, f"{label}[{i}]")
    km = np.empty((len(points_a), len(points_b)))
    for i, a in enumerate(points_a):
        for j, b in enumerate(points_b):
            km[i, j] = haversine_km(a, b)
    ids_a = tuple(ids_a) if ids_a is not None else tuple(str(i) for i in range(len(points_a)))
    ids_b = tuple(ids_b) if ids_b is not None else tuple(str(j) for j in range(len(points_b)))
    return DistanceMatrix(ids_a, ids_b, km)


def instance_distances(inst: Instance) -> tuple[DistanceMatrix, DistanceMatrix]:
    """Hospital->site and site->site matrices, honouring ``distance_override``."""
    h_ids = [h.id for h in inst.hospitals]
    s_ids = [s.id for s in inst.sites]
    if inst.distance_override is not None:
        ov = inst.distance_override
        return (
            DistanceMatrix(h_ids, s_ids, np.array(ov.hospital_to_site, dtype=float).reshape(len(h_ids), len(s_ids))),
            DistanceMatrix(s_ids, s_ids, np.array(ov.site_to_site, dtype=float).reshape(len(s_ids), len(s_ids))),
        )
    h_pts = [(h.lat, h.lon) for h in inst.hospitals]
    s_pts = [(s.lat, s.lon) for s in inst.sites]
    return distance_matrix(h_pts, s_pts, h_ids, s_ids), distance_matrix(s_pts, s_pts, s_ids, s_ids)
