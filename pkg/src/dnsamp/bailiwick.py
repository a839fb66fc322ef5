"""Glue and bailiwick prevalence statistics over captured NS datasets.

Input is JSON lines, one object per domain::

    {"domain": "example.com", "rcode": "NOERROR",
     "nameservers": [{"name": "ns1.example.com", "glue": ["192.0.2.1"]}]}

An optional ``"cname": true`` marks a domain answered with a CNAME.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .message import Rcode
from .names import BailiwickClass, DomainName, InvalidNameError, classify_bailiwick, name

ZONE_ORIGIN_RULES = ("tld", "parent")


@dataclass(frozen=True)
class NameServer:
    name: DomainName
    glue: tuple[str, ...] = ()


@dataclass(frozen=True)
class DomainObservation:
    domain: DomainName
    rcode: Rcode
    nameservers: tuple[NameServer, ...] = ()
    cname: bool = False

    @property
    def valid(self) -> bool:
        return self.rcode is Rcode.NOERROR and bool(self.nameservers) and not self.cname


@dataclass
class Diagnostic:
    lineno: int
    message: str

    def __str__(self) -> str:
        return f"line {self.lineno}: {self.message}"


@dataclass
class IngestResult:
    observations: list[DomainObservation]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def malformed(self) -> int:
        return len(self.diagnostics)


def parse_observation(obj: dict) -> DomainObservation:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    try:
        domain = name(obj["domain"])
        rcode = Rcode(str(obj["rcode"]).upper())
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]!r}") from None
    except InvalidNameError as exc:
        raise ValueError(str(exc)) from None
    raw_ns = obj.get("nameservers") or []
    if not isinstance(raw_ns, list):
        raise ValueError("nameservers must be a list")
    servers = []
    for entry in raw_ns:
        if not isinstance(entry, dict) or "name" not in entry:
            raise ValueError("nameserver entries need a name")
        glue = entry.get("glue") or []
        if not isinstance(glue, list):
            raise ValueError("glue must be a list of addresses")
        try:
            servers.append(NameServer(name(entry["name"]), tuple(str(g) for g in glue)))
        except InvalidNameError as exc:
            raise ValueError(str(exc)) from None
    if rcode is not Rcode.NOERROR and servers:
        raise ValueError(f"{rcode.value} answer must not list nameservers")
    return DomainObservation(domain, rcode, tuple(servers), bool(obj.get("cname", False)))


def ingest(source: TextIO | Iterable[str]) -> IngestResult:
    """Parse JSON lines; malformed lines are skipped and reported with their line number."""
    result = IngestResult([])
    for lineno, line in enumerate(source, 1):
        if not line.strip():
            continue
        try:
            result.observations.append(parse_observation(json.loads(line)))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            result.diagnostics.append(Diagnostic(lineno, str(exc)))
    return result


def zone_origin(domain: DomainName, rule: str = "tld") -> DomainName:
    if rule == "tld":
        return domain.tld()
    if rule == "parent":
        return domain.parent() if len(domain) else domain
    raise ValueError(f"zone origin rule must be one of {ZONE_ORIGIN_RULES}")


COUNT_FIELDS = (
    "requests",
    "cname_answers",
    "empty_answers",
    "valid_domains",
    "domains_all_glue",
    "domains_all_glueless",
    "total_ns",
    "in_bailiwick_strict",
    "out_of_bailiwick_strict",
    "in_bailiwick_wider",
    "out_of_bailiwick_wider",
    "wider_only",
    "ns_with_glue",
    "ns_without_glue",
    "ns_with_glue_in_bailiwick",
    "ns_without_glue_out_of_bailiwick",
)


@dataclass
class BailiwickStats:
    """Tallies over valid domains.

    ``in_bailiwick_wider`` folds the strict-in names in (so wider in + out is
    the NS total); ``wider_only`` is the disjoint share that only the wider
    definition admits.
    """

    requests: int = 0
    cname_answers: int = 0
    empty_answers: int = 0
    valid_domains: int = 0
    domains_all_glue: int = 0
    domains_all_glueless: int = 0
    total_ns: int = 0
    in_bailiwick_strict: int = 0
    out_of_bailiwick_strict: int = 0
    in_bailiwick_wider: int = 0
    out_of_bailiwick_wider: int = 0
    wider_only: int = 0
    ns_with_glue: int = 0
    ns_without_glue: int = 0
    ns_with_glue_in_bailiwick: int = 0
    ns_without_glue_out_of_bailiwick: int = 0
    malformed_lines: int = 0
    answers: Counter = field(default_factory=Counter)
    ns_count_histogram: Counter = field(default_factory=Counter)
    glueless_per_domain: Counter = field(default_factory=Counter)
    out_of_bailiwick_per_domain: Counter = field(default_factory=Counter)

    @property
    def mean_ns_per_domain(self) -> float:
        return self.total_ns / self.valid_domains if self.valid_domains else 0.0

    def merge(self, other: BailiwickStats) -> BailiwickStats:
        out = BailiwickStats()
        for key in (*COUNT_FIELDS, "malformed_lines"):
            setattr(out, key, getattr(self, key) + getattr(other, key))
        for key in ("answers", "ns_count_histogram", "glueless_per_domain", "out_of_bailiwick_per_domain"):
            setattr(out, key, getattr(self, key) + getattr(other, key))
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BailiwickStats):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        d: dict = {key: getattr(self, key) for key in COUNT_FIELDS}
        d["malformed_lines"] = self.malformed_lines
        d["mean_ns_per_domain"] = self.mean_ns_per_domain
        d["answers"] = {k: self.answers[k] for k in sorted(self.answers)}
        for key in ("ns_count_histogram", "glueless_per_domain", "out_of_bailiwick_per_domain"):
            hist = getattr(self, key)
            d[key] = [[k, hist[k]] for k in sorted(hist)]
            d[f"{key}_cdf"] = cdf(hist)
        return d


def cdf(hist: Counter) -> list[list]:
    total = sum(hist.values())
    out, running = [], 0
    for k in sorted(hist):
        running += hist[k]
        out.append([k, running / total])
    if out:
        out[-1][1] = 1.0
    return out


def analyze(observations: Iterable[DomainObservation], zone_origin_rule: str = "tld") -> BailiwickStats:
    if zone_origin_rule not in ZONE_ORIGIN_RULES:
        raise ValueError(f"zone origin rule must be one of {ZONE_ORIGIN_RULES}")
    st = BailiwickStats()
    for obs in observations:
        st.requests += 1
        st.answers["CNAME" if obs.cname else obs.rcode.value] += 1
        if obs.cname:
            st.cname_answers += 1
            continue
        if obs.rcode is Rcode.NOERROR and not obs.nameservers:
            st.empty_answers += 1
            continue
        if not obs.valid:
            continue
        st.valid_domains += 1
        origin = zone_origin(obs.domain, zone_origin_rule)
        glueless = out_strict = 0
        for ns in obs.nameservers:
            cls = classify_bailiwick(ns.name, obs.domain, origin)
            st.total_ns += 1
            if cls is BailiwickClass.IN_BAILIWICK_STRICT:
                st.in_bailiwick_strict += 1
            else:
                st.out_of_bailiwick_strict += 1
                out_strict += 1
            if cls.in_bailiwick:
                st.in_bailiwick_wider += 1
                if cls is BailiwickClass.IN_BAILIWICK_WIDER:
                    st.wider_only += 1
            else:
                st.out_of_bailiwick_wider += 1
            if ns.glue:
                st.ns_with_glue += 1
                if cls.in_bailiwick:
                    st.ns_with_glue_in_bailiwick += 1
            else:
                st.ns_without_glue += 1
                glueless += 1
                if not cls.in_bailiwick:
                    st.ns_without_glue_out_of_bailiwick += 1
        n = len(obs.nameservers)
        st.ns_count_histogram[n] += 1
        st.glueless_per_domain[glueless] += 1
        st.out_of_bailiwick_per_domain[out_strict] += 1
        if glueless == 0:
            st.domains_all_glue += 1
        elif glueless == n:
            st.domains_all_glueless += 1
    return st


def emit(stats: BailiwickStats, fmt: str = "json") -> str | dict[str, str]:
    """JSON text, or for ``csv`` a mapping of file stem to CSV text."""
    if fmt == "json":
        return json.dumps(stats.to_dict(), indent=2)
    if fmt != "csv":
        raise ValueError("format must be json or csv")
    files = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for key in (*COUNT_FIELDS, "malformed_lines"):
        w.writerow([key, getattr(stats, key)])
    w.writerow(["mean_ns_per_domain", stats.mean_ns_per_domain])
    files["summary"] = buf.getvalue()
    for key in ("ns_count_histogram", "glueless_per_domain", "out_of_bailiwick_per_domain"):
        hist = getattr(stats, key)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bucket", "count"])
        w.writerows([k, hist[k]] for k in sorted(hist))
        files[key] = buf.getvalue()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bucket", "fraction"])
        w.writerows(cdf(hist))
        files[f"{key}_cdf"] = buf.getvalue()
    return files
