"""Named-place resolution with a persistent cache and offline fixtures."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import requests

from .geodesy import GeoPoint

DEFAULT_GEOCODER_URL = "https://nominatim.openstreetmap.org"
USER_AGENT = "fluc-mission-console/0.1 (uav mission geocoding)"

# Coordinates captured once from a live geocoding query and frozen so the
# offline suite has a stable ground truth.
BUILTIN_FIXTURES = {
    "feup": {"lat": 41.1780, "lon": -8.5980, "display_name": "Faculdade de Engenharia da Universidade do Porto"},
}


class NotFound(LookupError):
    pass


class OfflineMiss(LookupError):
    pass


class CacheIo(OSError):
    pass


@dataclass(frozen=True)
class PlaceResult:
    query: str
    point: GeoPoint
    display_name: str
    source: str  # "live" | "cache" | "fixture"


def _normalize(name: str) -> str:
    return " ".join(name.lower().split())


class GeoCache:
    """Disk-backed query cache keyed on the normalized place name."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries = self._load()

    def _load(self) -> dict:
        if not self.path.exists():
            return {}
        try:
            data = json.loads(self.path.read_text(encoding="utf-8"))
            if not isinstance(data, dict):
                raise ValueError("cache root must be an object")
            return data
        except (ValueError, OSError) as e:
            # Corrupt cache: report, then rebuild empty.
            try:
                self.path.write_text("{}", encoding="utf-8")
            except OSError:
                pass
            raise CacheIo(f"corrupt geocache {self.path}: {e}") from e

    def get(self, name: str) -> Optional[PlaceResult]:
        with self._lock:
            entry = self._entries.get(_normalize(name))
        if entry is None:
            return None
        return PlaceResult(query=name,
                           point=GeoPoint(entry["lat"], entry["lon"], 0.0),
                           display_name=entry["display_name"], source="cache")

    def put(self, name: str, result: PlaceResult):
        with self._lock:
            self._entries[_normalize(name)] = {
                "lat": result.point.lat, "lon": result.point.lon,
                "display_name": result.display_name,
            }
            try:
                self.path.write_text(
                    json.dumps(self._entries, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
            except OSError as e:
                raise CacheIo(f"cannot write geocache {self.path}: {e}") from e


class Geocoder:
    """Resolves names via cache, then fixtures, then the live endpoint."""

    def __init__(self, cache: Optional[GeoCache] = None, offline: bool = False,
                 fixtures: Optional[dict] = None,
                 base_url: str = DEFAULT_GEOCODER_URL, session=None):
        self.cache = cache
        self.offline = offline
        self.fixtures = dict(BUILTIN_FIXTURES)
        if fixtures:
            self.fixtures.update({_normalize(k): v for k, v in fixtures.items()})
        self.base_url = base_url
        self._http = session or requests.Session()
        self._inflight = {}
        self._inflight_lock = threading.Lock()

    def resolve_place(self, name: str) -> PlaceResult:
        if not name.strip():
            raise ValueError("place name is empty")
        if self.cache is not None:
            hit = self.cache.get(name)
            if hit is not None:
                return hit
        key = _normalize(name)
        fixture = self.fixtures.get(key)
        if fixture is not None:
            result = PlaceResult(query=name,
                                 point=GeoPoint(fixture["lat"], fixture["lon"], 0.0),
                                 display_name=fixture.get("display_name", name),
                                 source="fixture")
            if self.cache is not None:
                self.cache.put(name, result)
            return result
        if self.offline:
            raise OfflineMiss(f"offline mode and {name!r} is not in the fixtures")
        result = self._query_live(name, key)
        if self.cache is not None:
            self.cache.put(name, result)
        return result

    def _query_live(self, name: str, key: str) -> PlaceResult:
        # Duplicate suppression: one live query per distinct key at a time.
        with self._inflight_lock:
            lock = self._inflight.setdefault(key, threading.Lock())
        with lock:
            if self.cache is not None:
                hit = self.cache.get(name)
                if hit is not None:
                    return hit
            try:
                resp = self._http.get(
                    f"{self.base_url.rstrip('/')}/search",
                    params={"q": name, "format": "json", "limit": 1},
                    headers={"User-Agent": USER_AGENT}, timeout=30.0)
            except requests.RequestException as e:
                raise TransportError(f"geocoder unreachable: {e}") from e
            if resp.status_code != 200:
                raise TransportError(f"geocoder returned HTTP {resp.status_code}")
            results = resp.json()
            if not results:
                raise NotFound(f"no geocoding result for {name!r}")
            first = results[0]
            return PlaceResult(
                query=name,
                point=GeoPoint(float(first["lat"]), float(first["lon"]), 0.0),
                display_name=first.get("display_name", name), source="live")


class TransportError(RuntimeError):
    pass
