"""Region registry, great-circle distance, and radius-based neighbor sets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping

EARTH_RADIUS_KM = 6371.0


class GeoError(ValueError):
    """Bad registry data or unknown region lookups."""


@dataclass(frozen=True)
class Region:
    region_id: str
    lat: float
    lon: float
    population: int = 0

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise GeoError(f"region {self.region_id!r}: lat {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise GeoError(f"region {self.region_id!r}: lon {self.lon} out of range")
        if self.population < 0:
            raise GeoError(f"region {self.region_id!r}: negative population")


@dataclass(frozen=True)
class AdjacencyGraph:
    """Symmetric neighbor sets built from centroid distance within a radius."""

    neighbors: Mapping[str, frozenset[str]]
    radius_km: float

    def neighbors_of(self, region_id: str) -> frozenset[str]:
        try:
            return self.neighbors[region_id]
        except KeyError:
            raise GeoError(f"unknown region {region_id!r}") from None


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in km between two lat/lon points."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def load_regions_csv(path: str) -> dict[str, Region]:
    """Read a registry CSV with header region_id,lat,lon,population."""
    regions: dict[str, Region] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rid = (row.get("region_id") or "").strip()
            if not rid:
                raise GeoError(f"{path}: empty region_id")
            if rid in regions:
                raise GeoError(f"{path}: duplicate region_id {rid!r}")
            regions[rid] = Region(
                region_id=rid,
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                population=int(row["population"]),
            )
    return regions


def write_regions_csv(regions: Mapping[str, Region], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id", "lat", "lon", "population"])
        for rid in sorted(regions):
            r = regions[rid]
            writer.writerow([r.region_id, repr(r.lat), repr(r.lon), r.population])


def neighbors_within(
    regions: Mapping[str, Region], center: str, radius_km: float
) -> set[str]:
    """All regions other than ``center`` within ``radius_km`` of its centroid."""
    if center not in regions:
        raise GeoError(f"unknown region {center!r}")
    if radius_km < 0:
        raise GeoError("radius_km must be >= 0")
    c = regions[center]
    out = set()
    for rid, r in regions.items():
        if rid == center:
            continue
        if haversine_km(c.lat, c.lon, r.lat, r.lon) <= radius_km:
            out.add(rid)
    return out


def build_adjacency(regions: Mapping[str, Region], radius_km: float) -> AdjacencyGraph:
    """Brute-force O(n^2) construction; symmetric by construction, no self-loops."""
    if radius_km <= 0:
        raise GeoError("radius_km must be > 0")
    ids = sorted(regions)
    sets: dict[str, set[str]] = {rid: set() for rid in ids}
    for i, a in enumerate(ids):
        ra = regions[a]
        for b in ids[i + 1 :]:
            rb = regions[b]
            if haversine_km(ra.lat, ra.lon, rb.lat, rb.lon) <= radius_km:
                sets[a].add(b)
                sets[b].add(a)
    return AdjacencyGraph(
        neighbors={rid: frozenset(s) for rid, s in sets.items()}, radius_km=radius_km
    )


def write_adjacency_csv(
    graph: AdjacencyGraph, regions: Mapping[str, Region], path: str
) -> None:
    """Debug export: one row per directed neighbor pair with the distance."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id", "neighbor_id", "distance_km"])
        for rid in sorted(graph.neighbors):
            a = regions[rid]
            for nid in sorted(graph.neighbors[rid]):
                b = regions[nid]
                d = haversine_km(a.lat, a.lon, b.lat, b.lon)
                writer.writerow([rid, nid, f"{d:.6f}"])
