"""Resource records, DNS messages and the byte-size model used for accounting."""

from __future__ import annotations

import enum
import ipaddress
from dataclasses import dataclass, replace
from typing import Union

from .names import DomainName


class RecordType(enum.Enum):
    A = "A"
    AAAA = "AAAA"
    NS = "NS"
    SOA = "SOA"


ADDRESS_TYPES = (RecordType.A, RecordType.AAAA)


class Rcode(enum.Enum):
    NOERROR = "NOERROR"
    NXDOMAIN = "NXDOMAIN"
    SERVFAIL = "SERVFAIL"


class MalformedMessage(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class SoaData:
    """Minimal SOA marker: only the two names; the five counters are a fixed-size blob."""

    mname: DomainName
    rname: DomainName
    minimum: int = 900


Rdata = Union[str, DomainName, SoaData]


@dataclass(frozen=True, slots=True)
class ResourceRecord:
    owner: DomainName
    rtype: RecordType
    ttl: int
    rdata: Rdata

    def __post_init__(self):
        if self.ttl < 0:
            raise ValueError("negative TTL")
        rt = self.rtype
        if rt is RecordType.A:
            ipaddress.IPv4Address(self.rdata)
        elif rt is RecordType.AAAA:
            ipaddress.IPv6Address(self.rdata)
        elif rt is RecordType.NS:
            if not isinstance(self.rdata, DomainName):
                raise ValueError("NS rdata must be a DomainName")
        elif not isinstance(self.rdata, SoaData):
            raise ValueError("SOA rdata must be SoaData")

    def __str__(self) -> str:
        return f"{self.owner} {self.ttl} {self.rtype.value} {self.rdata}"


Question = tuple[DomainName, RecordType]


@dataclass(frozen=True, slots=True)
class DnsMessage:
    id: int
    is_response: bool
    question: Question | None
    rcode: Rcode = Rcode.NOERROR
    tc: bool = False
    answer: tuple[ResourceRecord, ...] = ()
    authority: tuple[ResourceRecord, ...] = ()
    additional: tuple[ResourceRecord, ...] = ()
    # opaque bytes standing in for RRSIG/NSEC3 material on signed negative answers
    padding: int = 0
    edns: bool = False
    # set on answers to questions outside every zone the server owns
    out_of_zone: bool = False

    def __post_init__(self):
        if self.is_referral:
            owners = {rr.owner for rr in self.authority if rr.rtype is RecordType.NS}
            if len(owners) != 1:
                raise MalformedMessage("referral NS records must share one owner")
            targets = {rr.rdata for rr in self.authority if rr.rtype is RecordType.NS}
            for rr in self.additional:
                if rr.rtype not in ADDRESS_TYPES:
                    raise MalformedMessage("referral additional section carries only A/AAAA glue")
                if rr.owner not in targets:
                    raise MalformedMessage(f"glue for {rr.owner} matches no NS target")

    @property
    def is_referral(self) -> bool:
        return (
            self.is_response
            and self.rcode is Rcode.NOERROR
            and not self.answer
            and any(rr.rtype is RecordType.NS for rr in self.authority)
        )

    @property
    def zone_cut(self) -> DomainName | None:
        if not self.is_referral:
            return None
        return next(rr.owner for rr in self.authority if rr.rtype is RecordType.NS)

    def ns_targets(self) -> list[DomainName]:
        return [rr.rdata for rr in self.authority if rr.rtype is RecordType.NS]

    def truncated(self) -> DnsMessage:
        """The UDP stand-in for an oversize response: header and question only."""
        return replace(self, tc=True, answer=(), authority=(), additional=(), padding=0)


def make_query(msg_id: int, qname: DomainName, qtype: RecordType, edns: bool = False) -> DnsMessage:
    return DnsMessage(id=msg_id, is_response=False, question=(qname, qtype), edns=edns)


@dataclass(frozen=True)
class SizeModel:
    """Coefficients of the linear byte estimate.

    Each name costs its encoded length, or, when ``compress`` is on and one of
    its suffixes already appeared in the question or earlier in the same
    section, the labels before that suffix plus a pointer.
    """

    header: int = 12
    question_fixed: int = 4
    record_fixed: int = 10
    a_rdata: int = 4
    aaaa_rdata: int = 16
    soa_fixed: int = 20
    opt_record: int = 11
    pointer: int = 2
    compress: bool = True
    udp_limit: int = 512
    edns_limit: int = 4096
    tcp_control_packet: int = 60


DEFAULT_SIZE_MODEL = SizeModel()


def _name_cost(n: DomainName, seen: set, model: SizeModel) -> int:
    labels = n.labels
    if not model.compress:
        return n.wire_length
    cost = None
    prefix = 0
    for i in range(len(labels)):
        suffix = labels[i:]
        if suffix in seen:
            cost = prefix + model.pointer
            break
        prefix += len(labels[i]) + 1
        seen.add(suffix)
    return n.wire_length if cost is None else cost


def _rdata_cost(rr: ResourceRecord, seen: set, model: SizeModel) -> int:
    rt = rr.rtype
    if rt is RecordType.A:
        return model.a_rdata
    if rt is RecordType.AAAA:
        return model.aaaa_rdata
    if rt is RecordType.NS:
        return _name_cost(rr.rdata, seen, model)
    soa = rr.rdata
    return _name_cost(soa.mname, seen, model) + _name_cost(soa.rname, seen, model) + model.soa_fixed


def record_size(rr: ResourceRecord, model: SizeModel = DEFAULT_SIZE_MODEL) -> int:
    """Size of one record encoded on its own (no compression context)."""
    seen: set = set()
    return model.record_fixed + _name_cost(rr.owner, seen, model) + _rdata_cost(rr, seen, model)


def message_size(msg: DnsMessage, model: SizeModel = DEFAULT_SIZE_MODEL) -> int:
    size = model.header
    qseen: set = set()
    if msg.question is not None:
        size += _name_cost(msg.question[0], qseen, model) + model.question_fixed
    for section in (msg.answer, msg.authority, msg.additional):
        if not section:
            continue
        seen = set(qseen)
        for rr in section:
            size += model.record_fixed + _name_cost(rr.owner, seen, model) + _rdata_cost(rr, seen, model)
    if msg.edns:
        size += model.opt_record
    return size + msg.padding
