"""Simulated authoritative name servers, honest and attacker-controlled."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .message import (
    ADDRESS_TYPES,
    DEFAULT_SIZE_MODEL,
    DnsMessage,
    Rcode,
    RecordType,
    ResourceRecord,
    SizeModel,
    SoaData,
    message_size,
)
from .names import ROOT, DomainName, classify_bailiwick, is_subordinate, name

# extra bytes on signed negative answers (SOA RRSIG plus NSEC3 proofs)
DNSSEC_NEGATIVE_INFLATION = 600
DEFAULT_TTL = 3600
REFERRAL_TTL = 86400


class ZoneFileError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class SequencingError(RuntimeError):
    pass


class Zone:
    """Records served authoritatively for one origin."""

    def __init__(self, origin: DomainName | str, records: Iterable[ResourceRecord] = (), dnssec_like: bool = False):
        self.origin = name(origin)
        self.dnssec_like = dnssec_like
        self.records: list[ResourceRecord] = []
        self._rrsets: dict[tuple[DomainName, RecordType], list[ResourceRecord]] = {}
        self._names: set[DomainName] = {self.origin}
        self._cuts: set[DomainName] = set()
        for rr in records:
            self.add(rr)

    def add(self, rr: ResourceRecord) -> None:
        if not is_subordinate(rr.owner, self.origin):
            raise ValueError(f"{rr.owner} is outside zone {self.origin}")
        rrset = self._rrsets.setdefault((rr.owner, rr.rtype), [])
        if rr in rrset:
            return
        rrset.append(rr)
        self.records.append(rr)
        # owners and their empty non-terminals exist for NXDOMAIN purposes
        for anc in rr.owner.ancestors():
            if anc == self.origin:
                break
            self._names.add(anc)
        if rr.rtype is RecordType.NS and rr.owner != self.origin:
            self._cuts.add(rr.owner)

    def rrset(self, owner: DomainName, rtype: RecordType) -> list[ResourceRecord]:
        return self._rrsets.get((owner, rtype), [])

    def find_cut(self, qname: DomainName) -> DomainName | None:
        """The topmost delegation point at or above qname, below the origin."""
        if not self._cuts:
            return None
        depth = len(self.origin)
        for i in range(depth + 1, len(qname) + 1):
            candidate = DomainName._trusted(qname.labels[-i:])
            if candidate in self._cuts:
                return candidate
        return None

    def exists(self, qname: DomainName) -> bool:
        return qname in self._names

    @property
    def soa(self) -> ResourceRecord:
        found = self.rrset(self.origin, RecordType.SOA)
        if found:
            return found[0]
        if self.origin.is_root():
            data = SoaData(name("a.root-servers.net"), name("nstld.verisign-grs.com"))
        else:
            data = SoaData(self.origin.child("ns"), self.origin.child("hostmaster"))
        self._synth_soa = ResourceRecord(self.origin, RecordType.SOA, DEFAULT_TTL, data)
        self.add(self._synth_soa)
        return self._synth_soa

    def __repr__(self) -> str:
        return f"Zone({self.origin}, {len(self.records)} records)"


@dataclass
class AttackVariantConfig:
    """State of an attacker server's referral generator.

    Counters only move forward, so every NS name handed out is unique for the
    lifetime of the config.
    """

    variant: str
    n: int = 135
    victim_suffix: DomainName = field(default_factory=lambda: name("victim.com"))
    target_tld_pool: list[str] = field(default_factory=lambda: ["com"])
    n1: int = 37
    n2: int = 135
    counter: int = 0
    stage2_counter: int = 0
    n_max: int | None = None
    self_origin: DomainName = field(default_factory=lambda: name("attacker.com"))
    issued_stage1: set = field(default_factory=set)

    def __post_init__(self):
        if self.variant not in ("a", "b", "c"):
            raise ValueError(f"unknown attack variant {self.variant!r}")
        self.victim_suffix = name(self.victim_suffix)
        self.self_origin = name(self.self_origin)
        if not self.target_tld_pool:
            raise ValueError("target_tld_pool must not be empty")


def gen_referral_a(cfg: AttackVariantConfig, query_name: DomainName | None = None) -> list[DomainName]:
    pool = cfg.target_tld_pool
    start = cfg.counter
    out = [DomainName(("ns1", f"fakens{start + i}", pool[(start + i) % len(pool)])) for i in range(cfg.n)]
    cfg.counter += cfg.n
    return out


def gen_referral_b(cfg: AttackVariantConfig, query_name: DomainName | None = None) -> list[DomainName]:
    start = cfg.counter
    suffix = cfg.victim_suffix.labels
    out = [DomainName((f"fakens{start + i}",) + suffix) for i in range(cfg.n)]
    cfg.counter += cfg.n
    return out


def gen_referral_c(cfg: AttackVariantConfig, query_name: DomainName | None, stage: int) -> list[DomainName]:
    if stage == 1:
        start = cfg.counter
        suffix = cfg.self_origin.labels
        out = [DomainName((f"sd{start + i}",) + suffix) for i in range(1, cfg.n1 + 1)]
        cfg.counter += cfg.n1
        cfg.issued_stage1.update(out)
        return out
    if stage == 2:
        if not cfg.issued_stage1:
            raise SequencingError("stage-2 referral requested before any stage-1 referral")
        start = cfg.stage2_counter
        out = [DomainName(("ns", f"fake{start + i}")) for i in range(1, cfg.n2 + 1)]
        cfg.stage2_counter += cfg.n2
        return out
    raise ValueError(f"stage must be 1 or 2, got {stage!r}")


class AuthoritativeServer:
    """An authoritative endpoint serving one or more zones.

    ``behavior`` is ``None`` for an honest server or an AttackVariantConfig for
    an attacker that answers sub-names of its zones with fresh glueless
    referrals. ``udp_limit`` is the largest response the server sends over UDP
    before setting TC.
    """

    def __init__(
        self,
        address: str,
        zones: Iterable[Zone] = (),
        behavior: AttackVariantConfig | None = None,
        udp_limit: int = DEFAULT_SIZE_MODEL.udp_limit,
        addresses: Iterable[str] = (),
    ):
        self.address = address
        self.addresses = [address, *addresses]
        self.zones = list(zones)
        self.behavior = behavior
        self.udp_limit = udp_limit

    @property
    def is_attacker(self) -> bool:
        return self.behavior is not None

    def zone_for(self, qname: DomainName) -> Zone | None:
        best = None
        for zone in self.zones:
            if is_subordinate(qname, zone.origin) and (best is None or len(zone.origin) > len(best.origin)):
                best = zone
        return best

    def __repr__(self) -> str:
        kind = f"attacker-{self.behavior.variant}" if self.behavior else "honest"
        return f"AuthoritativeServer({self.address}, {kind}, {[str(z.origin) for z in self.zones]})"


def _negative(query: DnsMessage, zone: Zone, rcode: Rcode) -> DnsMessage:
    return DnsMessage(
        id=query.id,
        is_response=True,
        question=query.question,
        rcode=rcode,
        authority=(zone.soa,),
        padding=DNSSEC_NEGATIVE_INFLATION if zone.dnssec_like else 0,
        edns=query.edns,
    )


def _referral(query: DnsMessage, cut: DomainName, ns_rrset: list[ResourceRecord], glue: list[ResourceRecord]) -> DnsMessage:
    return DnsMessage(
        id=query.id,
        is_response=True,
        question=query.question,
        authority=tuple(ns_rrset),
        additional=tuple(glue),
        edns=query.edns,
    )


def _honest_answer(server: AuthoritativeServer, query: DnsMessage, zone: Zone) -> DnsMessage:
    qname, qtype = query.question
    cut = zone.find_cut(qname)
    if cut is not None:
        ns_rrset = zone.rrset(cut, RecordType.NS)
        glue = []
        for ns in ns_rrset:
            target = ns.rdata
            if classify_bailiwick(target, cut, zone.origin).in_bailiwick:
                for rtype in ADDRESS_TYPES:
                    glue.extend(zone.rrset(target, rtype))
        return _referral(query, cut, ns_rrset, glue)
    found = zone.rrset(qname, qtype)
    if found:
        return DnsMessage(id=query.id, is_response=True, question=query.question, answer=tuple(found), edns=query.edns)
    if zone.exists(qname):
        return _negative(query, zone, Rcode.NOERROR)
    return _negative(query, zone, Rcode.NXDOMAIN)


def _attack_answer(server: AuthoritativeServer, query: DnsMessage, zone: Zone) -> DnsMessage:
    cfg = server.behavior
    qname = query.question[0]
    if qname == zone.origin or zone.exists(qname):
        return _honest_answer(server, query, zone)
    cut = DomainName._trusted(qname.labels[-(len(zone.origin) + 1):])
    if cfg.variant == "a":
        targets = gen_referral_a(cfg, qname)
    elif cfg.variant == "b":
        targets = gen_referral_b(cfg, qname)
    else:
        stage = 2 if cut in cfg.issued_stage1 else 1
        targets = gen_referral_c(cfg, qname, stage)
    if cfg.n_max is not None:
        targets = targets[: cfg.n_max]
    if not targets:
        return _negative(query, zone, Rcode.NXDOMAIN)
    ns_rrset = [ResourceRecord(cut, RecordType.NS, REFERRAL_TTL, t) for t in targets]
    return _referral(query, cut, ns_rrset, [])


def answer_query(
    server: AuthoritativeServer,
    query: DnsMessage,
    size_model: SizeModel = DEFAULT_SIZE_MODEL,
    udp_limit: int | None = None,
) -> DnsMessage:
    """Answer ``query`` as ``server`` would.

    ``udp_limit`` of ``None`` means the response travels over TCP and is never
    truncated. Questions outside every owned zone get NXDOMAIN flagged
    ``out_of_zone`` (a stand-in for REFUSED).
    """
    if query.question is None or query.is_response:
        raise ValueError("answer_query needs a query with a question")
    qname, qtype = query.question
    zone = server.zone_for(qname)
    if zone is None:
        return DnsMessage(id=query.id, is_response=True, question=query.question,
                          rcode=Rcode.NXDOMAIN, edns=query.edns, out_of_zone=True)
    if server.behavior is not None:
        response = _attack_answer(server, query, zone)
    else:
        response = _honest_answer(server, query, zone)
    if udp_limit is not None and message_size(response, size_model) > udp_limit:
        response = response.truncated()
    return response


# ---------------------------------------------------------------------------
# zone-file-like text format


def _absolute(token: str, origin: DomainName) -> DomainName:
    if token == "@":
        return origin
    if token.endswith("."):
        return name(token)
    return DomainName(tuple(token.split(".")) + origin.labels)


def parse_zone_text(text: str, origin: DomainName | str | None = None) -> tuple[DomainName, list[ResourceRecord]]:
    """Parse ``owner [TTL] [IN] TYPE rdata`` lines with $ORIGIN/$TTL directives.

    Returns the (last) origin in effect and the records in file order.
    """
    current = name(origin) if origin is not None else None
    first_origin = current
    default_ttl = DEFAULT_TTL
    records: list[ResourceRecord] = []
    last_owner: DomainName | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = line.split()
        head = tokens[0].upper()
        if head == "$ORIGIN":
            if len(tokens) != 2:
                raise ZoneFileError(lineno, "$ORIGIN takes one argument")
            current = name(tokens[1]) if tokens[1].endswith(".") else _absolute(tokens[1], current or ROOT)
            first_origin = first_origin or current
            continue
        if head == "$TTL":
            try:
                default_ttl = int(tokens[1])
            except (IndexError, ValueError):
                raise ZoneFileError(lineno, "bad $TTL") from None
            continue
        if current is None:
            raise ZoneFileError(lineno, "record before $ORIGIN")
        if line[0].isspace():
            if last_owner is None:
                raise ZoneFileError(lineno, "continuation line without a previous owner")
            owner = last_owner
        else:
            owner = _absolute(tokens.pop(0), current)
        ttl = default_ttl
        if tokens and tokens[0].isdigit():
            ttl = int(tokens.pop(0))
        if tokens and tokens[0].upper() == "IN":
            tokens.pop(0)
        if len(tokens) < 2:
            raise ZoneFileError(lineno, "expected TYPE and rdata")
        try:
            rtype = RecordType(tokens[0].upper())
        except ValueError:
            raise ZoneFileError(lineno, f"unsupported record type {tokens[0]!r}") from None
        args = tokens[1:]
        rdata: Union[str, DomainName, SoaData]
        try:
            if rtype in ADDRESS_TYPES:
                rdata = args[0]
            elif rtype is RecordType.NS:
                rdata = _absolute(args[0], current)
            else:
                if len(args) < 2:
                    raise ZoneFileError(lineno, "SOA needs mname and rname")
                minimum = int(args[6]) if len(args) >= 7 else 900
                rdata = SoaData(_absolute(args[0], current), _absolute(args[1], current), minimum)
            records.append(ResourceRecord(owner, rtype, ttl, rdata))
        except ZoneFileError:
            raise
        except ValueError as exc:
            raise ZoneFileError(lineno, str(exc)) from None
        last_owner = owner
    if first_origin is None:
        raise ZoneFileError(0, "no $ORIGIN and no origin given")
    return first_origin, records


def load_zone(text: str, origin: DomainName | str | None = None, dnssec_like: bool = False) -> Zone:
    zone_origin, records = parse_zone_text(text, origin)
    return Zone(zone_origin, records, dnssec_like=dnssec_like)
