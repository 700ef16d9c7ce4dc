"""Domain-name helpers backed by a bundled public suffix list snapshot."""

from __future__ import annotations

import ipaddress
import re
from functools import lru_cache
from importlib import resources
from urllib.parse import urlsplit

_LABEL_RE = re.compile(r"^(?!-)[a-z0-9-]{1,63}(?<!-)$")


class DomainError(ValueError):
    pass


class SuffixList:
    """Public suffix rules (exact, wildcard and exception entries)."""

    def __init__(self, rules, exceptions=(), wildcards=()):
        self.rules = frozenset(rules)
        self.exceptions = frozenset(exceptions)
        self.wildcards = frozenset(wildcards)

    @classmethod
    def parse(cls, text: str, include_private: bool = False) -> "SuffixList":
        rules, exceptions, wildcards = set(), set(), set()
        in_private = False
        for raw in text.splitlines():
            line = raw.strip()
            if "BEGIN PRIVATE DOMAINS" in line:
                in_private = True
            if not line or line.startswith("//"):
                continue
            if in_private and not include_private:
                continue
            line = line.split()[0].lower()
            if line.startswith("!"):
                exceptions.add(line[1:])
            elif line.startswith("*."):
                wildcards.add(line[2:])
            else:
                rules.add(line)
        return cls(rules, exceptions, wildcards)

    def suffix_of(self, fqdn: str) -> str:
        """Longest matching public suffix; unknown TLDs count as suffixes."""
        labels = fqdn.split(".")
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self.exceptions:
                return ".".join(labels[i + 1:])
            if candidate in self.rules:
                return candidate
            parent = ".".join(labels[i + 1:])
            if i + 1 < len(labels) and parent in self.wildcards:
                return candidate
        return labels[-1]

    def is_suffix(self, name: str) -> bool:
        return self.suffix_of(name) == name

    def split(self, fqdn: str) -> tuple[list[str], str]:
        """Return (labels left of the eTLD, eTLD)."""
        fqdn = normalize_fqdn(fqdn)
        suffix = self.suffix_of(fqdn)
        head = fqdn[: -len(suffix)].rstrip(".")
        return (head.split(".") if head else []), suffix

    def registered_domain(self, fqdn: str) -> str:
        labels, suffix = self.split(fqdn)
        if not labels:
            return suffix
        return f"{labels[-1]}.{suffix}"

    def suffix_labels(self) -> frozenset[str]:
        out = set()
        for rule in self.rules | self.wildcards:
            out.update(rule.split("."))
        return frozenset(out)


@lru_cache(maxsize=None)
def default_suffixes() -> SuffixList:
    text = resources.files("tsshunt.data").joinpath("public_suffix_list.dat").read_text("utf-8")
    return SuffixList.parse(text)


def normalize_fqdn(name: str) -> str:
    fqdn = name.strip().lower().rstrip(".")
    if not fqdn or len(fqdn) > 253:
        raise DomainError(f"malformed fqdn: {name!r}")
    for label in fqdn.split("."):
        if not _LABEL_RE.match(label):
            raise DomainError(f"malformed fqdn: {name!r}")
    return fqdn


def is_valid_fqdn(name: str) -> bool:
    try:
        normalize_fqdn(name)
    except DomainError:
        return False
    return True


def host_of(uri: str) -> str:
    """Lowercase host of a URI; bare domains are accepted."""
    if "://" not in uri:
        uri = "http://" + uri
    host = urlsplit(uri).hostname
    if not host:
        raise DomainError(f"no host in uri: {uri!r}")
    return host.lower()


def registered_domain(fqdn: str) -> str:
    return default_suffixes().registered_domain(fqdn)


def tld(fqdn: str) -> str:
    return normalize_fqdn(fqdn).rsplit(".", 1)[-1]


def slash24(ip: str) -> str:
    net = ipaddress.ip_network(f"{ip}/24", strict=False)
    return str(net.network_address)


def slash16(ip: str) -> str:
    net = ipaddress.ip_network(f"{ip}/16", strict=False)
    return str(net.network_address)


def is_ipv4(value: str) -> bool:
    try:
        ipaddress.IPv4Address(value)
    except ValueError:
        return False
    return True
