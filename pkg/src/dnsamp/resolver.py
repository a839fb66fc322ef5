"""BIND-style iterative resolver running on the discrete-event engine."""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .engine import Future, Process, Simulator, any_of
from .message import (
    ADDRESS_TYPES,
    DEFAULT_SIZE_MODEL,
    DnsMessage,
    Question,
    Rcode,
    RecordType,
    ResourceRecord,
    SizeModel,
    make_query,
    record_size,
)
from .names import ROOT, DomainName, classify_bailiwick, is_subordinate, name
from .transport import Network

DEFAULT_MAX_RQ = 75
DEFAULT_NEGATIVE_TTL = 900
NEGATIVE_ENTRY_BYTES = 64

KIND_NX = "NX"
KINDS = ("A", "AAAA", "NS", KIND_NX)


# ---------------------------------------------------------------------------
# cache


class CacheEntry:
    __slots__ = ("kind", "records", "expiry")

    def __init__(self, kind: str, records: tuple[ResourceRecord, ...], expiry: float):
        self.kind = kind
        self.records = records
        self.expiry = expiry

    @property
    def negative(self) -> bool:
        return self.kind == KIND_NX


class Cache:
    """(name, type) keyed cache with per-kind counters.

    Times are simulated milliseconds. An expired entry is dropped the first
    time it is looked up. ``byte_budget`` only drives the ``saturated`` flag.
    """

    def __init__(self, byte_budget: int | None = None, size_model: SizeModel = DEFAULT_SIZE_MODEL):
        self._entries: dict[tuple[DomainName, RecordType], CacheEntry] = {}
        self.counts = dict.fromkeys(KINDS, 0)
        self.byte_budget = byte_budget
        self.bytes_used = 0
        self.size_model = size_model

    def _entry_bytes(self, entry: CacheEntry) -> int:
        if entry.negative:
            return NEGATIVE_ENTRY_BYTES
        return sum(record_size(rr, self.size_model) for rr in entry.records)

    def _store(self, key, entry: CacheEntry) -> None:
        old = self._entries.get(key)
        if old is not None:
            self._drop(key, old)
        self._entries[key] = entry
        self.counts[entry.kind] += 1
        if self.byte_budget is not None:
            self.bytes_used += self._entry_bytes(entry)

    def _drop(self, key, entry: CacheEntry) -> None:
        del self._entries[key]
        self.counts[entry.kind] -= 1
        if self.byte_budget is not None:
            self.bytes_used -= self._entry_bytes(entry)

    def put_positive(self, owner: DomainName, rtype: RecordType, records: Iterable[ResourceRecord], now: float) -> None:
        records = tuple(records)
        ttl = min(rr.ttl for rr in records)
        self._store((owner, rtype), CacheEntry(rtype.value, records, now + ttl * 1000.0))

    def put_negative(self, owner: DomainName, rtype: RecordType, now: float, ttl: int = DEFAULT_NEGATIVE_TTL) -> None:
        self._store((owner, rtype), CacheEntry(KIND_NX, (), now + ttl * 1000.0))

    def get(self, owner: DomainName, rtype: RecordType, now: float) -> CacheEntry | None:
        key = (owner, rtype)
        entry = self._entries.get(key)
        if entry is None:
            return None
        if entry.expiry <= now:
            self._drop(key, entry)
            return None
        return entry

    def scan_counts(self) -> dict[str, int]:
        out = dict.fromkeys(KINDS, 0)
        for entry in self._entries.values():
            out[entry.kind] += 1
        return out

    @property
    def saturated(self) -> bool:
        return self.byte_budget is not None and self.bytes_used > self.byte_budget

    def __len__(self) -> int:
        return len(self._entries)


# ---------------------------------------------------------------------------
# delegation state and policies


class NsSet:
    """Resolver-side delegation state for one zone."""

    def __init__(self, zone: DomainName, expiry: float | None = None):
        self.zone = zone
        self.expiry = expiry
        self.servers: dict[DomainName, list[str]] = {}
        self.unresolved: deque[DomainName] = deque()

    def add(self, ns_name: DomainName, addresses: Iterable[str] = ()) -> None:
        addrs = list(addresses)
        known = self.servers.get(ns_name)
        if known is None:
            self.servers[ns_name] = addrs
            if not addrs:
                self.unresolved.append(ns_name)
            return
        for a in addrs:
            self.set_address(ns_name, a)

    def set_address(self, ns_name: DomainName, address: str) -> None:
        addrs = self.servers.get(ns_name)
        if addrs is None or address in addrs:
            return
        addrs.append(address)
        try:
            self.unresolved.remove(ns_name)
        except ValueError:
            pass

    def addressed(self) -> list[str]:
        return [addrs[0] for addrs in self.servers.values() if addrs]

    def __len__(self) -> int:
        return len(self.servers)

    def __repr__(self) -> str:
        return f"NsSet({self.zone}, {len(self.servers)} servers, {len(self.unresolved)} unresolved)"


@dataclass(frozen=True)
class FetchPolicy:
    """``k=None`` fetches every unresolved delegate; otherwise MaxFetch(k)."""

    k: int | None = None

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("MaxFetch needs k >= 1")

    @classmethod
    def fetch_all(cls) -> FetchPolicy:
        return cls(None)

    @classmethod
    def max_fetch(cls, k: int) -> FetchPolicy:
        return cls(k)

    @classmethod
    def parse(cls, text: str) -> FetchPolicy:
        t = text.strip().lower()
        if t in ("fetch-all", "fetchall", "all"):
            return cls.fetch_all()
        for prefix in ("maxfetch:", "max-fetch:", "maxfetch"):
            if t.startswith(prefix):
                return cls.max_fetch(int(t[len(prefix):].strip("()")))
        raise ValueError(f"unknown fetch policy {text!r}")

    def __str__(self) -> str:
        return "fetch-all" if self.k is None else f"maxfetch:{self.k}"


def proactive_fetch_set(nsset: NsSet, policy: FetchPolicy, limit: int | None = None) -> list[tuple[DomainName, RecordType]]:
    """Pop the names to fetch now from ``nsset.unresolved``.

    ``limit`` caps the names taken (MaxFetch uses it for the per-request
    allowance left); each name expands to an A and an AAAA fetch.
    """
    take = len(nsset.unresolved)
    if policy.k is not None:
        take = min(take, policy.k)
    if limit is not None:
        take = min(take, limit)
    out = []
    for _ in range(take):
        ns_name = nsset.unresolved.popleft()
        out.append((ns_name, RecordType.A))
        out.append((ns_name, RecordType.AAAA))
    return out


def apply_max_breadth(ns_names: list, cap: int | None) -> list:
    if cap is None:
        return list(ns_names)
    if cap < 1:
        raise ValueError("breadth cap must be >= 1")
    return list(ns_names[:cap])


def is_budget_exempt(zone: DomainName) -> bool:
    """Queries to the root or a TLD do not count against max_rq."""
    return len(zone) <= 1


@dataclass
class ResolutionTask:
    client_query: Question
    max_rq: int = DEFAULT_MAX_RQ
    budget_used: int = 0
    outcome: Rcode | None = None
    nx_on_ns_fetch: int = 0
    path_exchanges: int = 0
    stalls: int = 0
    fetches_started: int = 0
    id: int = 0
    zone_quota: dict = field(default_factory=dict)

    @property
    def pending(self) -> bool:
        return self.outcome is None


def budget_charge(task: ResolutionTask, target_zone: DomainName) -> bool:
    if is_budget_exempt(target_zone):
        return True
    if task.budget_used >= task.max_rq:
        return False
    task.budget_used += 1
    return True


class NoAddressedServer(LookupError):
    """No delegate of the zone has a known address yet; a fetch must complete first."""


class RoundRobin:
    def __init__(self):
        self._cursor: dict[DomainName, int] = {}

    def select(self, nsset: NsSet, exclude: set = frozenset()) -> str:
        candidates = [a for a in nsset.addressed() if a not in exclude]
        if not candidates:
            raise NoAddressedServer(str(nsset.zone))
        i = self._cursor.get(nsset.zone, 0)
        self._cursor[nsset.zone] = i + 1
        return candidates[i % len(candidates)]

    def update(self, address: str, rtt: float) -> None:
        pass

    def __str__(self) -> str:
        return "round-robin"


class Srtt:
    """Lowest smoothed RTT wins; unmeasured servers count as 0 so they get tried."""

    def __init__(self, decay: float = 0.3):
        if not 0 < decay < 1:
            raise ValueError("decay must be in (0, 1)")
        self.decay = decay
        self.estimates: dict[str, float] = {}

    def select(self, nsset: NsSet, exclude: set = frozenset()) -> str:
        candidates = [a for a in nsset.addressed() if a not in exclude]
        if not candidates:
            raise NoAddressedServer(str(nsset.zone))
        return min(candidates, key=lambda a: self.estimates.get(a, 0.0))

    def update(self, address: str, rtt: float) -> None:
        old = self.estimates.get(address)
        self.estimates[address] = rtt if old is None else self.decay * rtt + (1 - self.decay) * old

    def __str__(self) -> str:
        return f"srtt:{self.decay}"


def parse_selector(text: str) -> RoundRobin | Srtt:
    t = text.strip().lower()
    if t in ("round-robin", "roundrobin", "rr"):
        return RoundRobin()
    if t.startswith("srtt"):
        _, _, decay = t.partition(":")
        return Srtt(float(decay) if decay else 0.3)
    raise ValueError(f"unknown selector {text!r}")


def select_server(nsset: NsSet, selector: RoundRobin | Srtt, exclude: set = frozenset()) -> str:
    return selector.select(nsset, exclude)


def load_root_hints(text: str) -> list[tuple[DomainName, str]]:
    """Parse ``name address`` pairs, one per line; ``#`` and ``;`` start comments."""
    hints = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"root hints line {lineno}: expected 'name address'")
        hints.append((name(parts[0]), parts[1]))
    if not hints:
        raise ValueError("root hints are empty")
    return hints


class Result(NamedTuple):
    rcode: Rcode
    records: tuple[ResourceRecord, ...] = ()


SERVFAIL = Result(Rcode.SERVFAIL)


# ---------------------------------------------------------------------------
# the resolver


class Resolver:
    def __init__(
        self,
        sim: Simulator,
        network: Network,
        address: str,
        root_hints: list[tuple[DomainName, str]],
        policy: FetchPolicy = FetchPolicy(),
        breadth_cap: int | None = None,
        selector: RoundRobin | Srtt | None = None,
        max_rq: int = DEFAULT_MAX_RQ,
        negative_ttl: int = DEFAULT_NEGATIVE_TTL,
        seed: int = 0,
        cache_bytes: int | None = None,
        record_fetches: bool = False,
    ):
        if not root_hints:
            raise ValueError("root hints are empty")
        if breadth_cap is not None and breadth_cap < 1:
            raise ValueError("breadth cap must be >= 1")
        self.sim = sim
        self.network = network
        self.address = address
        self.policy = policy
        self.breadth_cap = breadth_cap
        self.selector = selector or RoundRobin()
        self.max_rq = max_rq
        self.negative_ttl = negative_ttl
        self.cache = Cache(cache_bytes, network.size_model)
        self._rng = random.Random(seed)
        self._task_ids = itertools.count(1)
        self.root = NsSet(ROOT)
        for ns_name, addr in root_hints:
            self.root.add(ns_name, [addr])
        self.nssets: dict[DomainName, NsSet] = {ROOT: self.root}
        self._by_ns_name: dict[DomainName, list[NsSet]] = {}
        self._inflight: dict[tuple[DomainName, RecordType], Process] = {}
        self.record_fetches = record_fetches
        self.fetch_log: list[tuple[DomainName, RecordType, int]] = []
        self.tasks: list[ResolutionTask] = []
        network.register_endpoint(address)

    # -- public entry points -------------------------------------------------

    def new_task(self, qname: DomainName | str, qtype: RecordType = RecordType.A, max_rq: int | None = None) -> ResolutionTask:
        task = ResolutionTask((name(qname), qtype), max_rq=self.max_rq if max_rq is None else max_rq,
                              id=next(self._task_ids))
        return task

    def resolve(self, task: ResolutionTask) -> Process:
        """Start resolving ``task``; the process resolves with a response message."""
        self.tasks.append(task)
        return self.sim.process(self._run_task(task))

    def handle_client(self, client: str, query: DnsMessage, max_rq: int | None = None) -> Future:
        """Serve a client query; accounts the client-facing exchange on completion."""
        qname, qtype = query.question
        task = self.new_task(qname, qtype, max_rq)
        done = Future()

        def finish(response: DnsMessage) -> None:
            reply = DnsMessage(id=query.id, is_response=True, question=query.question, rcode=response.rcode,
                               answer=response.answer, authority=response.authority, edns=query.edns)
            self.network.account(client, self.address, query, reply)
            done.set_result((task, reply))

        self.resolve(task).add_callback(finish)
        return done

    # -- internals -----------------------------------------------------------

    def _run_task(self, task: ResolutionTask):
        qname, qtype = task.client_query
        result = yield from self._iterate(task, qname, qtype, frozenset(), ns_fetch=False, main=True)
        task.outcome = result.rcode
        return DnsMessage(id=0, is_response=True, question=task.client_query, rcode=result.rcode,
                          answer=result.records if result.rcode is Rcode.NOERROR else ())

    def _closest(self, qname: DomainName, now: float) -> NsSet:
        labels = qname.labels
        for i in range(len(labels)):
            zone = DomainName._trusted(labels[i:])
            nsset = self.nssets.get(zone)
            if nsset is None:
                continue
            if nsset.expiry is not None and nsset.expiry <= now:
                del self.nssets[zone]
                continue
            return nsset
        return self.root

    def _pending_for(self, nsset: NsSet, chain: frozenset) -> list[Process]:
        out = []
        inflight = self._inflight
        for ns_name, addrs in nsset.servers.items():
            if addrs:
                continue
            for rtype in ADDRESS_TYPES:
                key = (ns_name, rtype)
                proc = inflight.get(key)
                if proc is not None and key not in chain:
                    out.append(proc)
        return out

    def _spawn_for_zone(self, task: ResolutionTask, nsset: NsSet, chain: frozenset) -> None:
        if not nsset.unresolved:
            return
        limit = None
        if self.policy.k is not None:
            used = task.zone_quota.get(nsset.zone, 0)
            limit = self.policy.k - used
            if limit <= 0:
                return
        fetches = proactive_fetch_set(nsset, self.policy, limit)
        if self.policy.k is not None:
            task.zone_quota[nsset.zone] = task.zone_quota.get(nsset.zone, 0) + len(fetches) // 2
        for ns_name, rtype in fetches:
            self._start_fetch(task, ns_name, rtype, chain)

    def _start_fetch(self, task: ResolutionTask, ns_name: DomainName, rtype: RecordType, chain: frozenset) -> None:
        key = (ns_name, rtype)
        if key in self._inflight:
            return
        task.fetches_started += 1
        if self.record_fetches:
            self.fetch_log.append((ns_name, rtype, task.id))
        self._inflight[key] = self.sim.process(self._fetch(task, ns_name, rtype, chain | {key}))

    def _fetch(self, task: ResolutionTask, ns_name: DomainName, rtype: RecordType, chain: frozenset):
        result = yield from self._iterate(task, ns_name, rtype, chain, ns_fetch=True, main=False)
        del self._inflight[(ns_name, rtype)]
        if result.rcode is Rcode.NOERROR:
            for rr in result.records:
                if rr.rtype is rtype and rr.owner == ns_name:
                    self._learn_address(ns_name, rr.rdata)
        return result

    def _learn_address(self, ns_name: DomainName, address: str) -> None:
        for nsset in self._by_ns_name.get(ns_name, ()):
            nsset.set_address(ns_name, address)

    def _cached_addresses(self, ns_name: DomainName, now: float) -> list[str]:
        out = []
        for rtype in ADDRESS_TYPES:
            entry = self.cache.get(ns_name, rtype, now)
            if entry is not None and not entry.negative:
                out.extend(rr.rdata for rr in entry.records)
        return out

    def _iterate(self, task: ResolutionTask, qname: DomainName, qtype: RecordType, chain: frozenset,
                 ns_fetch: bool, main: bool):
        sim = self.sim
        cache = self.cache
        lame: set[str] = set()
        while True:
            now = sim.now
            hit = cache.get(qname, qtype, now)
            if hit is not None:
                return Result(Rcode.NXDOMAIN) if hit.negative else Result(Rcode.NOERROR, hit.records)
            nsset = self._closest(qname, now)
            zone = nsset.zone
            self._spawn_for_zone(task, nsset, chain)
            try:
                server = self.selector.select(nsset, lame)
            except NoAddressedServer:
                pending = self._pending_for(nsset, chain)
                if not pending:
                    return SERVFAIL
                task.stalls += 1
                yield any_of(pending)
                continue
            if not budget_charge(task, zone):
                return SERVFAIL
            if main:
                task.path_exchanges += 1
            query = make_query(self._rng.getrandbits(16), qname, qtype, edns=True)
            sent_at = now
            response = yield self.network.exchange(self.address, server, query)
            if response is None:
                lame.add(server)
                continue
            self.selector.update(server, sim.now - sent_at)
            if response.out_of_zone:
                lame.add(server)
                continue
            if response.rcode is Rcode.NXDOMAIN:
                cache.put_negative(qname, qtype, sim.now, self.negative_ttl)
                if ns_fetch:
                    task.nx_on_ns_fetch += 1
                return Result(Rcode.NXDOMAIN)
            if response.answer:
                self._cache_answer(response, sim.now)
                matching = tuple(rr for rr in response.answer if rr.owner == qname and rr.rtype is qtype)
                if matching:
                    return Result(Rcode.NOERROR, matching)
                cache.put_negative(qname, qtype, sim.now, self.negative_ttl)
                return Result(Rcode.NOERROR)
            if response.is_referral:
                if not self._accept_referral(response, nsset, qname, sim.now):
                    lame.add(server)
                continue
            # NODATA
            cache.put_negative(qname, qtype, sim.now, self.negative_ttl)
            return Result(Rcode.NOERROR)

    def _cache_answer(self, response: DnsMessage, now: float) -> None:
        groups: dict[tuple[DomainName, RecordType], list[ResourceRecord]] = {}
        for rr in response.answer:
            groups.setdefault((rr.owner, rr.rtype), []).append(rr)
        for (owner, rtype), rrs in groups.items():
            self.cache.put_positive(owner, rtype, rrs, now)
            if rtype in ADDRESS_TYPES:
                for rr in rrs:
                    self._learn_address(owner, rr.rdata)

    def _accept_referral(self, response: DnsMessage, nsset: NsSet, qname: DomainName, now: float) -> bool:
        """Record a referral's delegation; False if it does not move closer to qname."""
        cut = response.zone_cut
        zone = nsset.zone
        if cut == zone or not is_subordinate(cut, zone) or not is_subordinate(qname, cut):
            return False
        ns_records = [rr for rr in response.authority if rr.rtype is RecordType.NS]
        ns_records = apply_max_breadth(ns_records, self.breadth_cap)
        kept = {rr.rdata for rr in ns_records}
        glue: dict[tuple[DomainName, RecordType], list[ResourceRecord]] = {}
        for rr in response.additional:
            if rr.owner not in kept:
                continue
            # out-of-bailiwick glue is dropped (cache poisoning defence)
            if not classify_bailiwick(rr.owner, cut, zone).in_bailiwick:
                continue
            glue.setdefault((rr.owner, rr.rtype), []).append(rr)
        for (owner, rtype), rrs in glue.items():
            self.cache.put_positive(owner, rtype, rrs, now)
        self.cache.put_positive(cut, RecordType.NS, ns_records, now)
        target = self.nssets.get(cut)
        expiry = now + min(rr.ttl for rr in ns_records) * 1000.0
        if target is None or (target.expiry is not None and target.expiry <= now):
            target = NsSet(cut, expiry)
            self.nssets[cut] = target
        for rr in ns_records:
            ns_name = rr.rdata
            if ns_name in target.servers:
                continue
            if self.breadth_cap is not None and len(target) >= self.breadth_cap:
                break
            target.add(ns_name, self._cached_addresses(ns_name, now))
            self._by_ns_name.setdefault(ns_name, []).append(target)
        return True

    @property
    def nx_detector_total(self) -> int:
        return sum(t.nx_on_ns_fetch for t in self.tasks)

    @property
    def inflight_fetches(self) -> int:
        return len(self._inflight)
