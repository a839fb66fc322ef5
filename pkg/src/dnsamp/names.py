"""Domain names, subordination, and bailiwick classification."""

from __future__ import annotations

import enum
from typing import Iterator

MAX_LABEL = 63
MAX_NAME = 255


class InvalidNameError(ValueError):
    """Raised for malformed presentation-format names."""


class DomainName:
    """An immutable, case-insensitive domain name.

    Labels are stored lowercased and root-last, so ``www.example.com`` is
    ``("www", "example", "com")`` and the root is the empty tuple.
    """

    __slots__ = ("labels", "_hash", "_wire")

    def __init__(self, labels: tuple[str, ...] | list[str] = ()):
        labels = tuple(label.lower() for label in labels)
        wire = 1
        for label in labels:
            if not 1 <= len(label.encode()) <= MAX_LABEL:
                raise InvalidNameError(f"bad label length in {labels!r}")
            wire += len(label.encode()) + 1
        if wire > MAX_NAME:
            raise InvalidNameError(f"name too long ({wire} octets)")
        self.labels = labels
        self._hash = hash(labels)
        self._wire = wire

    @classmethod
    def parse(cls, text: str) -> DomainName:
        text = text.strip()
        if text in ("", "."):
            return ROOT
        if text.endswith("."):
            text = text[:-1]
        parts = text.split(".")
        if any(p == "" for p in parts):
            raise InvalidNameError(f"empty label in {text!r}")
        return cls(parts)

    @classmethod
    def _trusted(cls, labels: tuple[str, ...]) -> DomainName:
        # labels already validated and lowercased (suffix of a valid name)
        obj = object.__new__(cls)
        obj.labels = labels
        obj._hash = hash(labels)
        obj._wire = 1 + sum(len(x) + 1 for x in labels)
        return obj

    @property
    def wire_length(self) -> int:
        """Uncompressed encoded length in octets (labels plus the root byte)."""
        return self._wire

    def is_root(self) -> bool:
        return not self.labels

    def parent(self) -> DomainName:
        if not self.labels:
            raise InvalidNameError("the root has no parent")
        return DomainName._trusted(self.labels[1:])

    def child(self, label: str) -> DomainName:
        return DomainName((label,) + self.labels)

    def ancestors(self) -> Iterator[DomainName]:
        """Yield this name and each enclosing name, ending with the root."""
        for i in range(len(self.labels) + 1):
            yield DomainName._trusted(self.labels[i:])

    def tld(self) -> DomainName:
        return DomainName._trusted(self.labels[-1:]) if self.labels else ROOT

    def is_subordinate(self, parent: DomainName) -> bool:
        return is_subordinate(self, parent)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DomainName):
            return NotImplemented
        return self.labels == other.labels

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: DomainName) -> bool:
        return self.labels[::-1] < other.labels[::-1]

    def __str__(self) -> str:
        return ".".join(self.labels) + "."

    def __repr__(self) -> str:
        return f"DomainName({str(self)!r})"


ROOT = DomainName()


def name(text: str | DomainName) -> DomainName:
    """Coerce presentation text (or an existing name) to a DomainName."""
    if isinstance(text, DomainName):
        return text
    return DomainName.parse(text)


def is_subordinate(child: DomainName, parent: DomainName) -> bool:
    """True iff ``parent`` is a whole-label suffix of ``child`` (equality counts)."""
    n = len(parent.labels)
    if n == 0:
        return True
    return len(child.labels) >= n and child.labels[-n:] == parent.labels


class BailiwickClass(enum.Enum):
    IN_BAILIWICK_STRICT = "in-bailiwick-strict"
    IN_BAILIWICK_WIDER = "in-bailiwick-wider"
    OUT_OF_BAILIWICK = "out-of-bailiwick"

    @property
    def in_bailiwick(self) -> bool:
        return self is not BailiwickClass.OUT_OF_BAILIWICK


def classify_bailiwick(
    ns_name: DomainName, rrset_owner: DomainName, zone_origin: DomainName
) -> BailiwickClass:
    """Classify an NS target relative to the NS RRset owner and the zone origin.

    Raises ValueError when the owner is not inside the zone origin.
    """
    if not is_subordinate(rrset_owner, zone_origin):
        raise ValueError(f"{rrset_owner} is not subordinate to zone origin {zone_origin}")
    if is_subordinate(ns_name, rrset_owner):
        return BailiwickClass.IN_BAILIWICK_STRICT
    if is_subordinate(ns_name, zone_origin):
        return BailiwickClass.IN_BAILIWICK_WIDER
    return BailiwickClass.OUT_OF_BAILIWICK
