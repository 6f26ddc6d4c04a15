"""Segmented publication and AIMD-paced retrieval of large objects."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

from ..errors import DecodeError, FetchTimeout, ValidationFailed
from ..ndn.forwarder import AppFace, preference_key
from ..ndn.name import Component, Name
from ..ndn.packet import DEFAULT_LIFETIME_MS, ContentType, Data, Interest
from ..ndn.security import Identity

log = logging.getLogger(__name__)

DEFAULT_MSS = 1500
MIN_MSS = 64
INITIAL_SSTHRESH = 16
# Consecutive timeouts tolerated on one segment before the fetch gives up.
DEFAULT_MAX_TIMEOUTS = 10


@dataclass(frozen=True)
class SegmentedObject:
    base_name: Name
    segments: tuple

    @property
    def size(self) -> int:
        return sum(len(d.content) for d in self.segments)

    def __len__(self) -> int:
        return len(self.segments)


def segment_count(size: int, mss: int = DEFAULT_MSS) -> int:
    return max(1, math.ceil(size / mss))


def publish_segments(signer: Identity, base_name: Name, payload: bytes, mss: int = DEFAULT_MSS,
                     freshness_ms: int = 0, content_type: ContentType = ContentType.BLOB) -> SegmentedObject:
    """Cut ``payload`` into ``mss``-sized pieces named ``base_name/seg=i``,
    each signed and carrying the index of the last segment."""
    if mss < MIN_MSS:
        raise ValueError(f"mss must be at least {MIN_MSS}")
    if not payload:
        raise ValueError("cannot publish an empty object")
    n = segment_count(len(payload), mss)
    final = Component.segment(n - 1)
    segments = tuple(
        signer.sign(Data(
            base_name.append_segment(i),
            content=payload[i * mss:(i + 1) * mss],
            content_type=content_type,
            freshness_period_ms=freshness_ms,
            final_block_id=final,
        ))
        for i in range(n)
    )
    return SegmentedObject(base_name, segments)


class Repo:
    """Serves a role's published Data from memory under one registered prefix.

    Among several packets matching a CanBePrefix Interest it answers with the
    newest version, lowest segment.
    """

    def __init__(self, face: AppFace, prefix: Name):
        self.face = face
        self.prefix = prefix
        self.data: dict[Name, Data] = {}
        face.register_prefix(prefix, self._on_interest)

    def insert(self, packets: Iterable[Data]):
        for d in packets:
            if not self.prefix.is_prefix_of(d.name):
                raise ValueError(f"{d.name} is outside {self.prefix}")
            self.data[d.name] = d

    def find(self, interest: Interest) -> Data | None:
        if not interest.can_be_prefix:
            return self.data.get(interest.name)
        candidates = [d for n, d in self.data.items() if interest.name.is_prefix_of(n)]
        return min(candidates, key=preference_key) if candidates else None

    def _on_interest(self, interest: Interest, face: AppFace):
        data = self.find(interest)
        if data is not None:
            face.put(data)

    def __len__(self) -> int:
        return len(self.data)


@dataclass
class FetchStats:
    interests: int = 0
    timeouts: int = 0
    retransmissions: int = 0
    md_events: int = 0
    window_trace: list = field(default_factory=list)

    @property
    def max_window(self) -> float:
        return max(self.window_trace, default=1.0)


@dataclass
class FetchResult:
    content: bytes
    segments: list
    stats: FetchStats

    @property
    def name(self) -> Name:
        return self.segments[0].name[:-1]


class SegmentFetcher:
    """Window-based pipeline over the segments of one object.

    Slow start grows the window by one per Data (doubling each round trip)
    up to ``ssthresh``, then by one per window. A timeout halves
    ``ssthresh``, drops the window to 1 and retransmits; a burst of timeouts
    from the same window counts as one decrease.
    """

    def __init__(self, face: AppFace, name: Name, *, must_be_fresh: bool = False,
                 lifetime_ms: int = DEFAULT_LIFETIME_MS, max_timeouts: int = DEFAULT_MAX_TIMEOUTS,
                 ssthresh: float = INITIAL_SSTHRESH):
        self.face = face
        self.name = name
        self.must_be_fresh = must_be_fresh
        self.lifetime_ms = lifetime_ms
        self.max_timeouts = max_timeouts
        self.cwnd = 1.0
        self.ssthresh = float(ssthresh)
        self.stats = FetchStats(window_trace=[self.cwnd])
        self.object_name: Name | None = None
        self.total: int | None = None
        self.received: dict[int, Data] = {}
        self.in_flight: dict[int, int] = {}       # segment -> send time
        self.consecutive: dict[int, int] = {}
        self.retx: list[int] = []
        self.next_segment = 0
        self.last_decrease = -1
        self.error: Exception | None = None

    @property
    def done(self) -> bool:
        return self.error is not None or (self.total is not None and len(self.received) == self.total)

    # -- sending -------------------------------------------------------------------
    def _express(self, segment: int | None):
        if segment is None:
            interest = Interest(self.name, can_be_prefix=True, must_be_fresh=self.must_be_fresh,
                                lifetime_ms=self.lifetime_ms)
            key = -1
        else:
            interest = Interest(self.object_name.append_segment(segment), lifetime_ms=self.lifetime_ms)
            key = segment
        self.in_flight[key] = self.face.scheduler.now
        self.stats.interests += 1
        self.face.express_interest(interest, self._on_data, lambda i, k=key: self._on_timeout(k))

    def _fill_window(self):
        while not self.done and len(self.in_flight) < int(self.cwnd):
            if self.retx:
                segment = self.retx.pop(0)
                if segment in self.received or segment in self.in_flight:
                    continue
                self.stats.retransmissions += 1
                self._express(None if segment == -1 else segment)
                continue
            while self.next_segment < self.total and self.next_segment in self.received:
                self.next_segment += 1
            if self.next_segment >= self.total:
                break
            self._express(self.next_segment)
            self.next_segment += 1

    # -- events ----------------------------------------------------------------------
    def _on_data(self, interest: Interest, data: Data):
        segment = data.name.segment()
        if segment is None:
            self.error = DecodeError(f"{data.name} is not a segment")
            return
        if self.total is None:
            if data.final_block_id is None or not data.final_block_id.is_segment:
                self.error = DecodeError(f"{data.name} carries no FinalBlockId")
                return
            self.object_name = data.name[:-1]
            self.total = data.final_block_id.to_number() + 1
        self.in_flight.pop(-1 if interest.can_be_prefix else segment, None)
        self.consecutive.pop(-1, None)
        if segment >= self.total:
            self.error = DecodeError(f"{data.name} is past the final block")
            return
        self.received[segment] = data
        self.consecutive.pop(segment, None)
        if self.cwnd < self.ssthresh:
            self.cwnd += 1
        else:
            self.cwnd += 1 / self.cwnd
        self.stats.window_trace.append(self.cwnd)
        self._fill_window()

    def _on_timeout(self, key: int):
        if self.done:
            return
        sent_at = self.in_flight.pop(key, None)
        self.stats.timeouts += 1
        count = self.consecutive[key] = self.consecutive.get(key, 0) + 1
        if count >= self.max_timeouts:
            what = self.name if key == -1 else self.object_name.append_segment(key)
            self.error = FetchTimeout(what)
            return
        if sent_at is not None and sent_at >= self.last_decrease:
            self.ssthresh = max(self.cwnd / 2, 1.0)
            self.cwnd = 1.0
            self.stats.md_events += 1
            self.last_decrease = self.face.scheduler.now
            self.stats.window_trace.append(self.cwnd)
        self.retx.append(key)
        if self.total is None:
            self._retransmit_first()
        else:
            self._fill_window()

    def _retransmit_first(self):
        self.retx.remove(-1)
        self.stats.retransmissions += 1
        self._express(None)

    def run(self) -> list[Data]:
        self._express(None)
        self.face.scheduler.run_until(lambda: self.done)
        if self.error is not None:
            raise self.error
        if not self.done:
            raise FetchTimeout(self.name)
        return [self.received[i] for i in range(self.total)]


def fetch_segments(face: AppFace, name: Name, validator: Callable[[Data], object] | None = None,
                   sink: Counter | None = None, **options) -> FetchResult:
    """Fetch every segment of the object at (or newest under) ``name``.

    ``validator`` is applied to each segment once all have arrived; the
    first one that does not validate aborts with ValidationFailed. Fetch
    counters are added to ``sink`` when given, whether or not it succeeds.
    """
    fetcher = SegmentFetcher(face, name, **options)
    try:
        segments = fetcher.run()
    finally:
        if sink is not None:
            st = fetcher.stats
            sink.update(interests=st.interests, timeouts=st.timeouts,
                        retransmissions=st.retransmissions, md_events=st.md_events)
    if validator is not None:
        for d in segments:
            result = validator(d)
            if not result:
                raise ValidationFailed(result)
    log.debug("fetched %s: %d segments, %d interests, %d timeouts",
              segments[0].name[:-1], len(segments), fetcher.stats.interests, fetcher.stats.timeouts)
    return FetchResult(b"".join(d.content for d in segments), segments, fetcher.stats)


def fetch_latest(face: AppFace, prefix: Name, validator: Callable[[Data], object] | None = None,
                 discovery_timeouts: int = 2, **options) -> FetchResult:
    """Fetch the newest version published under ``prefix``.

    The first attempt asks for fresh data so the publisher (or a cache still
    holding fresh copies) answers with its latest version. If nobody can,
    e.g. the publisher is offline, any cached version is accepted.
    """
    try:
        return fetch_segments(face, prefix, validator, must_be_fresh=True,
                              max_timeouts=discovery_timeouts, **options)
    except FetchTimeout:
        log.debug("no fresh answer for %s, falling back to cached versions", prefix)
        return fetch_segments(face, prefix, validator, must_be_fresh=False, **options)
