from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnsamp.bailiwick import BailiwickStats, analyze, cdf, emit, ingest, zone_origin
from dnsamp.message import Rcode
from dnsamp.names import name
from worlds import check_partitions, random_observations

FIXTURE = [
    {"domain": "example.com", "rcode": "NOERROR", "nameservers": [
        {"name": "ns.child.example.com", "glue": ["192.0.2.1"]},
        {"name": "ns.other.com", "glue": ["192.0.2.2"]},
        {"name": "ns.example.net", "glue": []},
    ]},
    {"domain": "gone.com", "rcode": "NXDOMAIN", "nameservers": []},
    {"domain": "two.org", "rcode": "NOERROR", "nameservers": [
        {"name": "ns1.two.org", "glue": ["192.0.2.3"]},
        {"name": "ns2.hoster.net"},
    ]},
]


def lines(objs):
    return [json.dumps(o) + "\n" for o in objs]


def test_ingest_fixture():
    result = ingest(lines(FIXTURE))
    assert len(result.observations) == 3 and result.malformed == 0
    assert result.observations[1].rcode is Rcode.NXDOMAIN and result.observations[1].nameservers == ()
    two = result.observations[2]
    assert [bool(ns.glue) for ns in two.nameservers] == [True, False]


def test_ingest_malformed_lines_reported():
    src = lines(FIXTURE[:1]) + ["not json\n", '{"domain": "x.com"}\n', "\n",
                                '{"domain": "y.com", "rcode": "SERVFAIL", "nameservers": [{"name": "a.b"}]}\n']
    result = ingest(src)
    assert len(result.observations) == 1
    assert [d.lineno for d in result.diagnostics] == [2, 3, 5]
    assert "line 3" in str(result.diagnostics[1])


def test_analyze_hand_classified():
    st_ = analyze(ingest(lines(FIXTURE[:1])).observations)
    assert st_.total_ns == 3
    assert (st_.in_bailiwick_strict, st_.out_of_bailiwick_strict) == (1, 2)
    assert (st_.in_bailiwick_wider, st_.out_of_bailiwick_wider) == (2, 1)
    assert st_.wider_only == 1
    assert (st_.ns_with_glue, st_.ns_without_glue) == (2, 1)


def test_analyze_full_fixture():
    st_ = analyze(ingest(lines(FIXTURE)).observations)
    assert st_.requests == 3 and st_.valid_domains == 2
    assert st_.answers == {"NOERROR": 2, "NXDOMAIN": 1}
    assert st_.mean_ns_per_domain == 2.5
    assert dict(st_.ns_count_histogram) == {3: 1, 2: 1}
    assert dict(st_.glueless_per_domain) == {1: 2}


def test_all_glueless_third_party():
    objs = [{"domain": f"site{i}.com", "rcode": "NOERROR",
             "nameservers": [{"name": "ns1.cloudflare.com"}, {"name": "ns2.cloudflare.com"}]} for i in range(10)]
    st_ = analyze(ingest(lines(objs)).observations)
    assert st_.domains_all_glueless == st_.valid_domains == 10
    assert st_.in_bailiwick_wider == 20 and st_.in_bailiwick_strict == 0


def test_cname_and_empty_excluded_from_valid():
    objs = [{"domain": "a.com", "rcode": "NOERROR", "cname": True, "nameservers": []},
            {"domain": "b.com", "rcode": "NOERROR", "nameservers": []}]
    st_ = analyze(ingest(lines(objs)).observations)
    assert (st_.cname_answers, st_.empty_answers, st_.valid_domains) == (1, 1, 0)


def test_empty_input():
    assert analyze([]) == BailiwickStats()
    assert analyze([]).mean_ns_per_domain == 0.0


def test_zone_origin_rules():
    assert zone_origin(name("a.b.example.com")) == name("com")
    assert zone_origin(name("a.b.example.com"), "parent") == name("b.example.com")
    with pytest.raises(ValueError):
        zone_origin(name("x.com"), "registrar")


def test_parent_rule_changes_wider_tally():
    objs = [{"domain": "shop.example.com", "rcode": "NOERROR", "nameservers": [{"name": "ns.example.com"}]}]
    obs = ingest(lines(objs)).observations
    assert analyze(obs, "tld").in_bailiwick_wider == 1
    assert analyze(obs, "parent").in_bailiwick_wider == 1
    objs[0]["nameservers"] = [{"name": "ns.sibling.com"}]
    obs = ingest(lines(objs)).observations
    assert analyze(obs, "tld").in_bailiwick_wider == 1
    assert analyze(obs, "parent").in_bailiwick_wider == 0


def test_emit_json_schema():
    data = json.loads(emit(analyze(ingest(lines(FIXTURE)).observations), "json"))
    for key in ("requests", "valid_domains", "domains_all_glue", "domains_all_glueless", "total_ns",
                "in_bailiwick_strict", "out_of_bailiwick_strict", "in_bailiwick_wider", "out_of_bailiwick_wider",
                "ns_with_glue", "ns_without_glue", "ns_count_histogram", "glueless_per_domain_cdf"):
        assert key in data


def test_emit_csv_histogram_rows():
    st_ = BailiwickStats()
    st_.ns_count_histogram.update({2: 5, 3: 1})
    files = emit(st_, "csv")
    assert files["ns_count_histogram"].splitlines() == ["bucket,count", "2,5", "3,1"]
    with pytest.raises(ValueError):
        emit(st_, "xml")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40))
def test_partitions_and_order_insensitivity(seed, count):
    rng = random.Random(seed)
    obs = random_observations(rng, count)
    s = analyze(obs)
    check_partitions(s)
    shuffled = list(obs)
    rng.shuffle(shuffled)
    assert analyze(shuffled) == s
    if s.valid_domains:
        assert s.mean_ns_per_domain == s.total_ns / s.valid_domains
    for key in ("ns_count_histogram", "glueless_per_domain", "out_of_bailiwick_per_domain"):
        fractions = [f for _, f in cdf(getattr(s, key))]
        assert fractions == sorted(fractions)
        if fractions:
            assert fractions[-1] == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_merge_associative_and_commutative(seed):
    rng = random.Random(seed)
    obs = random_observations(rng, 30)
    a, b, c = analyze(obs[:10]), analyze(obs[10:20]), analyze(obs[20:])
    assert a.merge(b).merge(c) == a.merge(b.merge(c)) == analyze(obs)
    assert a.merge(b) == b.merge(a)
