"""Problem data for the mask reverse-logistics network.

An :class:`Instance` holds hospitals (mask usage), candidate sites (each one can
host a collection centre, a reprocessing centre, or both), disposal sites and
the global economic/environmental parameters.  Instances are serialized as JSON.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields, replace
from typing import IO, Any, Optional, Union

__all__ = [
    "Hospital",
    "CandidateSite",
    "DisposalSite",
    "GlobalParams",
    "DistanceOverride",
    "Instance",
    "Violation",
    "RangeConfig",
    "SplitMix64",
    "InstanceParseError",
    "InstanceValidationError",
    "load_instance",
    "loads_instance",
    "save_instance",
    "dumps_instance",
    "validate",
    "generate_synthetic",
]


class InstanceParseError(ValueError):
    """The instance document is not well-formed."""


class InstanceValidationError(ValueError):
    """The instance document parsed but breaks one or more invariants."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        lines = "\n".join(f"  {v.path}: {v.message}" for v in violations)
        super().__init__(f"{len(violations)} invalid field(s):\n{lines}")


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class Hospital:
    id: str
    name: str
    lat: float
    lon: float
    usage: float


@dataclass(frozen=True)
class CandidateSite:
    id: str
    lat: float
    lon: float
    fixed_cost_collection: float
    fixed_cost_reprocessing: float
    unit_cost_collection: float
    unit_cost_reprocessing: float
    fixed_emission_collection: float
    fixed_emission_reprocessing: float
    unit_emission_collection: float
    unit_emission_reprocessing: float
    jobs_collection: int
    jobs_reprocessing: int


@dataclass(frozen=True)
class DisposalSite:
    id: str
    unit_cost: float
    unit_emission: float


@dataclass(frozen=True)
class GlobalParams:
    price: float
    production_emission: float
    transport_cost_per_km: float
    truck_emission_per_km: float
    budget: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class DistanceOverride:
    """Externally supplied distances in km, used instead of haversine."""

    hospital_to_site: tuple[tuple[float, ...], ...]
    site_to_site: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class Instance:
    hospitals: tuple[Hospital, ...]
    sites: tuple[CandidateSite, ...]
    disposal_sites: tuple[DisposalSite, ...]
    params: GlobalParams
    distance_override: Optional[DistanceOverride] = None

    def __post_init__(self) -> None:
        # accept lists from callers, store tuples so instances stay hashable/immutable
        object.__setattr__(self, "hospitals", tuple(self.hospitals))
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "disposal_sites", tuple(self.disposal_sites))

    @property
    def total_usage(self) -> float:
        return math.fsum(h.usage for h in self.hospitals)

    def with_params(self, **changes: Any) -> "Instance":
        return replace(self, params=replace(self.params, **changes))


# --------------------------------------------------------------------------
# validation

_SITE_NONNEG = [
    f.name
    for f in fields(CandidateSite)
    if f.name not in ("id", "lat", "lon", "jobs_collection", "jobs_reprocessing")
]


def _is_real(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_coords(out: list[Violation], path: str, lat: Any, lon: Any) -> None:
    if not _is_real(lat) or not -90.0 <= lat <= 90.0:
        out.append(Violation(f"{path}.lat", f"latitude must be in [-90, 90], got {lat!r}"))
    if not _is_real(lon) or not -180.0 <= lon <= 180.0:
        out.append(Violation(f"{path}.lon", f"longitude must be in [-180, 180], got {lon!r}"))


def _check_nonneg(out: list[Violation], path: str, value: Any) -> None:
    if not _is_real(value) or value < 0:
        out.append(Violation(path, f"must be a finite number >= 0, got {value!r}"))


def _check_unique_ids(out: list[Violation], name: str, items: tuple) -> None:
    seen: dict[str, int] = {}
    for idx, item in enumerate(items):
        if item.id in seen:
            first = seen[item.id]
            out.append(
                Violation(f"{name}[{idx}].id", f"duplicate id {item.id!r} (also {name}[{first}].id)")
            )
        else:
            seen[item.id] = idx


def _check_matrix(out: list[Violation], path: str, mat: Any, rows: int, cols: int) -> None:
    if len(mat) != rows:
        out.append(Violation(path, f"expected {rows} rows, got {len(mat)}"))
        return
    for i, row in enumerate(mat):
        if len(row) != cols:
            out.append(Violation(f"{path}[{i}]", f"expected {cols} entries, got {len(row)}"))
            continue
        for j, v in enumerate(row):
            if not _is_real(v) or v < 0:
                out.append(Violation(f"{path}[{i}][{j}]", f"distance must be >= 0, got {v!r}"))


def validate(inst: Instance) -> list[Violation]:
    """Return every broken invariant of ``inst``; an empty list means valid."""
    out: list[Violation] = []
    for i, h in enumerate(inst.hospitals):
        _check_coords(out, f"hospitals[{i}]", h.lat, h.lon)
        _check_nonneg(out, f"hospitals[{i}].usage", h.usage)
    for i, s in enumerate(inst.sites):
        _check_coords(out, f"sites[{i}]", s.lat, s.lon)
        for name in _SITE_NONNEG:
            _check_nonneg(out, f"sites[{i}].{name}", getattr(s, name))
        for name in ("jobs_collection", "jobs_reprocessing"):
            v = getattr(s, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                out.append(Violation(f"sites[{i}].{name}", f"must be a non-negative integer, got {v!r}"))
    for i, d in enumerate(inst.disposal_sites):
        _check_nonneg(out, f"disposal_sites[{i}].unit_cost", d.unit_cost)
        _check_nonneg(out, f"disposal_sites[{i}].unit_emission", d.unit_emission)
    if not inst.disposal_sites:
        out.append(Violation("disposal_sites", "at least one disposal site is required"))

    p = inst.params
    for name in ("alpha", "beta"):
        v = getattr(p, name)
        if not _is_real(v) or not 0.0 <= v <= 1.0:
            out.append(Violation(f"params.{name}", f"must be in [0, 1], got {v!r}"))
    for name in ("price", "production_emission", "transport_cost_per_km", "truck_emission_per_km", "budget"):
        _check_nonneg(out, f"params.{name}", getattr(p, name))

    _check_unique_ids(out, "hospitals", inst.hospitals)
    _check_unique_ids(out, "sites", inst.sites)
    _check_unique_ids(out, "disposal_sites", inst.disposal_sites)

    if inst.distance_override is not None:
        n_h, n_s = len(inst.hospitals), len(inst.sites)
        _check_matrix(out, "distance_override.hospital_to_site", inst.distance_override.hospital_to_site, n_h, n_s)
        _check_matrix(out, "distance_override.site_to_site", inst.distance_override.site_to_site, n_s, n_s)
    return out


# --------------------------------------------------------------------------
# serialization


def _as_dict(inst: Instance) -> dict[str, Any]:
    def obj(x: Any) -> dict[str, Any]:
        return {f.name: getattr(x, f.name) for f in fields(x)}

    doc: dict[str, Any] = {
        "hospitals": [obj(h) for h in inst.hospitals],
        "sites": [obj(s) for s in inst.sites],
        "disposal_sites": [obj(d) for d in inst.disposal_sites],
        "params": obj(inst.params),
    }
    if inst.distance_override is not None:
        doc["distance_override"] = {
            "hospital_to_site": [list(r) for r in inst.distance_override.hospital_to_site],
            "site_to_site": [list(r) for r in inst.distance_override.site_to_site],
        }
    return doc


def _build(cls: type, raw: Any, path: str) -> Any:
    if not isinstance(raw, dict):
        raise InstanceParseError(f"{path}: expected an object, got {type(raw).__name__}")
    names = [f.name for f in fields(cls)]
    missing = [n for n in names if n not in raw]
    unknown = sorted(set(raw) - set(names))
    if missing:
        raise InstanceParseError(f"{path}: missing field(s) {', '.join(missing)}")
    if unknown:
        raise InstanceParseError(f"{path}: unknown field(s) {', '.join(unknown)}")
    return cls(**{n: raw[n] for n in names})


def _from_dict(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceParseError("top level must be an object")
    unknown = sorted(set(doc) - {"hospitals", "sites", "disposal_sites", "params", "distance_override"})
    if unknown:
        raise InstanceParseError(f"unknown top-level key(s) {', '.join(unknown)}")
    for key in ("hospitals", "sites", "disposal_sites"):
        if not isinstance(doc.get(key), list):
            raise InstanceParseError(f"{key}: expected a list")
    override = None
    if doc.get("distance_override") is not None:
        raw = doc["distance_override"]
        if not isinstance(raw, dict) or set(raw) != {"hospital_to_site", "site_to_site"}:
            raise InstanceParseError("distance_override: expected keys hospital_to_site and site_to_site")
        try:
            override = DistanceOverride(
                hospital_to_site=tuple(tuple(r) for r in raw["hospital_to_site"]),
                site_to_site=tuple(tuple(r) for r in raw["site_to_site"]),
            )
        except TypeError as exc:
            raise InstanceParseError(f"distance_override: {exc}") from None
    return Instance(
        hospitals=tuple(_build(Hospital, h, f"hospitals[{i}]") for i, h in enumerate(doc["hospitals"])),
        sites=tuple(_build(CandidateSite, s, f"sites[{i}]") for i, s in enumerate(doc["sites"])),
        disposal_sites=tuple(
            _build(DisposalSite, d, f"disposal_sites[{i}]") for i, d in enumerate(doc["disposal_sites"])
        ),
        params=_build(GlobalParams, doc.get("params"), "params"),
        distance_override=override,
    )


def loads_instance(text: Union[str, bytes]) -> Instance:
    """Parse and validate an instance document."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InstanceParseError(f"malformed instance document: {exc}") from None
    inst = _from_dict(doc)
    problems = validate(inst)
    if problems:
        raise InstanceValidationError(problems)
    return inst


def load_instance(source: Union[str, os.PathLike, IO]) -> Instance:
    """Load an instance from a path or a readable (text or binary) stream."""
    if hasattr(source, "read"):
        return loads_instance(source.read())
    with open(source, "rb") as fh:
        return loads_instance(fh.read())


def dumps_instance(inst: Instance) -> bytes:
    # json writes floats with repr(), which round-trips exactly
    text = json.dumps(_as_dict(inst), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def save_instance(inst: Instance, dest: Union[str, os.PathLike, IO, None] = None) -> bytes:
    """Serialize ``inst``; also write it to ``dest`` when given."""
    data = dumps_instance(inst)
    if dest is None:
        return data
    if hasattr(dest, "write"):
        try:
            dest.write(data)
        except TypeError:
            dest.write(data.decode("utf-8"))
    else:
        with open(dest, "wb") as fh:
            fh.write(data)
    return data


# --------------------------------------------------------------------------
# synthetic instances


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood 2014).

    State advances by the golden-ratio increment 0x9E3779B97F4A7C15 and each
    output is the state passed through the two multiply-xorshift rounds.  Being
    a handful of integer operations it gives bit-identical streams everywhere.
    """

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self._MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self._MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        span = hi - lo + 1
        return lo + (self.next_u64() * span >> 64)


Range = tuple[float, float]


@dataclass(frozen=True)
class RangeConfig:
    """Sampling ranges for :func:`generate_synthetic` (closed intervals).

    Defaults are loosely Canadian-priced N95 figures; only the disposal share of
    the price (20-30 %) and the Vancouver Island box come from the problem
    setting, the rest are editable guesses.
    """

    lat: Range = (48.3, 50.8)
    lon: Range = (-128.5, -123.2)
    usage: tuple[int, int] = (100_000, 600_000)
    price: Range = (1.5, 2.5)
    production_emission: Range = (0.05, 0.08)
    transport_cost_per_km: Range = (1.5, 3.0)
    truck_emission_per_km: Range = (0.2, 0.35)
    budget: Range = (600_000.0, 900_000.0)
    alpha: Range = (0.80, 0.80)
    beta: Range = (0.95, 0.95)
    fixed_cost_collection: Range = (10_000.0, 30_000.0)
    fixed_cost_reprocessing: Range = (40_000.0, 90_000.0)
    unit_cost_collection: Range = (0.05, 0.15)
    unit_cost_reprocessing: Range = (0.30, 0.60)
    fixed_emission_collection: Range = (1_000.0, 5_000.0)
    fixed_emission_reprocessing: Range = (5_000.0, 15_000.0)
    unit_emission_collection: Range = (0.0005, 0.002)
    unit_emission_reprocessing: Range = (0.005, 0.015)
    jobs_collection: tuple[int, int] = (2, 6)
    jobs_reprocessing: tuple[int, int] = (5, 15)
    disposal_cost_fraction: Range = (0.20, 0.30)
    disposal_emission: Range = (0.005, 0.01)

    def check(self) -> None:
        for f in fields(self):
            lo, hi = getattr(self, f.name)
            if lo > hi:
                raise ValueError(f"range {f.name}: min {lo} > max {hi}")
        for name in ("alpha", "beta"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi > 1:
                raise ValueError(f"range {name} must lie within [0, 1]")


def _dec(v: float) -> float:
    return round(v, 6)


def _draw(rng: SplitMix64, r: Range) -> float:
    # rounding may nudge a value just past an endpoint
    lo, hi = r
    return min(max(_dec(rng.uniform(lo, hi)), lo), hi)


def generate_synthetic(
    seed: int,
    n_hospitals: int,
    n_sites: int,
    n_disposal: int = 1,
    ranges: Optional[RangeConfig] = None,
) -> Instance:
    """Build a random instance; a pure function of its arguments.

    Draw order is fixed: global parameters, then hospitals, then sites, then
    disposal sites, each field in declaration order.
    """
    if min(n_hospitals, n_sites, n_disposal) < 1:
        raise ValueError("n_hospitals, n_sites and n_disposal must all be >= 1")
    ranges = ranges or RangeConfig()
    ranges.check()
    rng = SplitMix64(seed)

    params = GlobalParams(
        price=_draw(rng, ranges.price),
        production_emission=_draw(rng, ranges.production_emission),
        transport_cost_per_km=_draw(rng, ranges.transport_cost_per_km),
        truck_emission_per_km=_draw(rng, ranges.truck_emission_per_km),
        budget=_draw(rng, ranges.budget),
        alpha=_draw(rng, ranges.alpha),
        beta=_draw(rng, ranges.beta),
    )
    hospitals = [
        Hospital(
            id=f"H{i + 1:02d}",
            name=f"Hospital {i + 1}",
            lat=_draw(rng, ranges.lat),
            lon=_draw(rng, ranges.lon),
            usage=rng.integer(*ranges.usage),
        )
        for i in range(n_hospitals)
    ]
    sites = [
        CandidateSite(
            id=f"S{j + 1:02d}",
            lat=_draw(rng, ranges.lat),
            lon=_draw(rng, ranges.lon),
            fixed_cost_collection=_draw(rng, ranges.fixed_cost_collection),
            fixed_cost_reprocessing=_draw(rng, ranges.fixed_cost_reprocessing),
            unit_cost_collection=_draw(rng, ranges.unit_cost_collection),
            unit_cost_reprocessing=_draw(rng, ranges.unit_cost_reprocessing),
            fixed_emission_collection=_draw(rng, ranges.fixed_emission_collection),
            fixed_emission_reprocessing=_draw(rng, ranges.fixed_emission_reprocessing),
            unit_emission_collection=_draw(rng, ranges.unit_emission_collection),
            unit_emission_reprocessing=_draw(rng, ranges.unit_emission_reprocessing),
            jobs_collection=rng.integer(*ranges.jobs_collection),
            jobs_reprocessing=rng.integer(*ranges.jobs_reprocessing),
        )
        for j in range(n_sites)
    ]
    lo_frac, hi_frac = ranges.disposal_cost_fraction
    disposal = [
        DisposalSite(
            id=f"D{m + 1:02d}",
            unit_cost=_draw(rng, (lo_frac * params.price, hi_frac * params.price)),
            unit_emission=_draw(rng, ranges.disposal_emission),
        )
        for m in range(n_disposal)
    ]
    return Instance(hospitals=hospitals, sites=sites, disposal_sites=disposal, params=params)
