from __future__ import annotations

import json
import socket
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator

from ..domains import is_ipv4, normalize_fqdn
from .models import DnsObservation, parse_time

NOERROR = "noerror"
NXDOMAIN = "nxdomain"
TIMEOUT = "timeout"


class ResolverError(RuntimeError):
    def __init__(self, status: str):
        super().__init__(status)
        self.status = status


@dataclass
class ResolveResult:
    observations: list[DnsObservation]
    status: str

    def __iter__(self):
        return iter(self.observations)

    def __len__(self):
        return len(self.observations)


class FixtureResolver:
    """Answers A queries from a zone mapping (fqdn -> [ips] | "NXDOMAIN" | "TIMEOUT")."""

    def __init__(self, zone: dict):
        self.zone = {normalize_fqdn(k): v for k, v in zone.items()}
        self.queries: list[str] = []

    @classmethod
    def from_file(cls, path) -> "FixtureResolver":
        path = Path(path)
        text = path.read_text("utf-8")
        if path.suffix == ".json":
            return cls(json.loads(text))
        return cls(parse_zone_text(text))

    def lookup(self, fqdn: str) -> list[str]:
        self.queries.append(fqdn)
        answer = self.zone.get(fqdn)
        if answer is None or answer == "NXDOMAIN":
            raise ResolverError(NXDOMAIN)
        if answer == "TIMEOUT":
            raise ResolverError(TIMEOUT)
        return list(answer)


class SystemResolver:
    def __init__(self, timeout: float = 5.0):
        self.timeout = timeout

    def lookup(self, fqdn: str) -> list[str]:
        old = socket.getdefaulttimeout()
        socket.setdefaulttimeout(self.timeout)
        try:
            _, _, ips = socket.gethostbyname_ex(fqdn)
        except socket.gaierror as exc:
            raise ResolverError(NXDOMAIN) from exc
        except socket.timeout as exc:
            raise ResolverError(TIMEOUT) from exc
        finally:
            socket.setdefaulttimeout(old)
        return ips


def parse_zone_text(text: str) -> dict:
    """Minimal zone-file reader: ``name [ttl] [IN] A address`` lines only."""
    zone: dict[str, list[str]] = {}
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        upper = [p.upper() for p in parts]
        if "A" not in upper:
            continue
        i = upper.index("A")
        if i + 1 >= len(parts):
            continue
        zone.setdefault(parts[0].rstrip(".").lower(), []).append(parts[i + 1])
    return zone


def resolve_domain(d: str, resolver, t: datetime) -> ResolveResult:
    fqdn = normalize_fqdn(d)
    t = parse_time(t)
    try:
        ips = resolver.lookup(fqdn)
    except ResolverError as exc:
        return ResolveResult([], exc.status)
    seen = []
    for ip in ips:
        if is_ipv4(ip) and ip not in seen:
            seen.append(ip)
    return ResolveResult([DnsObservation(fqdn, ip, t) for ip in seen], NOERROR)


def write_observations(obs: Iterable[DnsObservation], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for o in obs:
            fh.write(json.dumps(o.to_json()) + "\n")


def read_observations(path) -> Iterator[DnsObservation]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield DnsObservation.from_json(json.loads(line))
