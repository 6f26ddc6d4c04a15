"""In-memory NDN forwarding on a virtual clock.

Everything runs on a single :class:`Scheduler`: link deliveries, handler
callbacks and timers are events ordered by (virtual time, insertion order),
so a run is fully determined by the seed of the random generator that drives
nonces and link loss.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import random
from collections import Counter, OrderedDict
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from ..errors import NacAbeError
from .name import Name
from .packet import Data, Interest, decode_packet, encode_packet

log = logging.getLogger("nacabe.ndn")

DEFAULT_CS_CAPACITY = 4096


class Event:
    __slots__ = ("time", "seq", "callback", "cancelled")

    def __init__(self, time: int, seq: int, callback: Callable[[], None]):
        self.time = time
        self.seq = seq
        self.callback = callback
        self.cancelled = False

    def cancel(self):
        self.cancelled = True

    def __lt__(self, other: "Event") -> bool:
        return (self.time, self.seq) < (other.time, other.seq)


class Scheduler:
    """Discrete-event loop with a millisecond virtual clock."""

    def __init__(self, start_ms: int = 0):
        self.now = start_ms
        self._queue: list[Event] = []
        self._seq = itertools.count()

    def schedule(self, delay_ms: float, callback: Callable[[], None]) -> Event:
        if delay_ms < 0:
            raise ValueError("negative delay")
        event = Event(self.now + int(delay_ms), next(self._seq), callback)
        heapq.heappush(self._queue, event)
        return event

    def step(self) -> bool:
        while self._queue:
            event = heapq.heappop(self._queue)
            if event.cancelled:
                continue
            self.now = event.time
            event.callback()
            return True
        return False

    def run(self, until_ms: int | None = None):
        """Process events; stop before the first event later than ``until_ms``."""
        while self._queue:
            head = self._queue[0]
            if until_ms is not None and head.time > until_ms:
                break
            self.step()
        if until_ms is not None and until_ms > self.now:
            self.now = until_ms

    def advance_to(self, time_ms: int):
        self.run(until_ms=time_ms)

    def run_until(self, predicate: Callable[[], bool]) -> bool:
        """Process events until ``predicate()`` holds; False if the queue drains first."""
        while not predicate():
            if not self.step():
                return predicate()
        return True

    @property
    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)


def preference_key(data: Data):
    """Ordering used when several packets satisfy a CanBePrefix Interest:
    newest version first, then lowest segment, then name order."""
    version = data.name.version()
    segment = data.name.segment()
    return (-(version if version is not None else -1), segment if segment is not None else -1, data.name)


class ContentStore:
    """Bounded LRU cache of Data packets keyed by name."""

    def __init__(self, capacity: int = DEFAULT_CS_CAPACITY):
        self.capacity = capacity
        self._entries: "OrderedDict[Name, tuple[Data, int]]" = OrderedDict()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: Name) -> bool:
        return name in self._entries

    def insert(self, data: Data, now: int):
        if self.capacity <= 0:
            return
        self._entries[data.name] = (data, now)
        self._entries.move_to_end(data.name)
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)

    @staticmethod
    def _fresh(data: Data, arrival: int, now: int) -> bool:
        return now < arrival + data.freshness_period_ms

    def find(self, interest: Interest, now: int) -> Data | None:
        if not interest.can_be_prefix:
            hit = self._entries.get(interest.name)
            candidates = [hit] if hit is not None else []
        else:
            candidates = [e for name, e in self._entries.items() if interest.name.is_prefix_of(name)]
        if interest.must_be_fresh:
            candidates = [e for e in candidates if self._fresh(e[0], e[1], now)]
        if not candidates:
            return None
        data = min((e[0] for e in candidates), key=preference_key)
        self._entries.move_to_end(data.name)
        return data

    def clear(self):
        self._entries.clear()


class Face:
    """One attachment point of a forwarder."""

    _ids = itertools.count(1)

    def __init__(self, forwarder: "Forwarder"):
        self.id = next(Face._ids)
        self.forwarder = forwarder

    def send_interest(self, interest: Interest):  # forwarder -> face
        raise NotImplementedError

    def send_data(self, data: Data):
        raise NotImplementedError


@dataclass
class PitEntry:
    interest: Interest
    in_faces: set = field(default_factory=set)
    expiry: Event | None = None


class Forwarder:
    """FIB with longest-prefix match, PIT with aggregation, LRU content store."""

    def __init__(self, name: str, scheduler: Scheduler, cs_capacity: int = DEFAULT_CS_CAPACITY,
                 network: "Network | None" = None):
        self.name = name
        self.scheduler = scheduler
        self.network = network
        self.cs = ContentStore(cs_capacity)
        self.fib: list[tuple[Name, Face]] = []
        self.pit: dict[tuple[Name, bool, bool], PitEntry] = {}
        self._seen_nonces: set[tuple[Name, bytes]] = set()
        self.stats: Counter = Counter()

    # -- routing ----------------------------------------------------------
    def add_route(self, prefix: Name, face: Face):
        if (prefix, face) not in self.fib:
            self.fib.append((prefix, face))

    def remove_route(self, prefix: Name, face: Face):
        self.fib = [(p, f) for p, f in self.fib if not (p == prefix and f is face)]

    def lookup(self, name: Name) -> list[Face]:
        """Faces of the longest registered prefix of ``name``."""
        best = -1
        faces: list[Face] = []
        for prefix, face in self.fib:
            if prefix.is_prefix_of(name):
                if len(prefix) > best:
                    best, faces = len(prefix), [face]
                elif len(prefix) == best:
                    faces.append(face)
        return faces

    # -- packet processing ------------------------------------------------
    def receive_interest(self, face: Face, interest: Interest):
        self.stats["interests_in"] += 1
        log.debug("[%s] t=%d interest %s from face %d", self.name, self.scheduler.now, interest.name, face.id)
        nonce_key = (interest.name, interest.nonce)
        if nonce_key in self._seen_nonces:
            self.stats["duplicate_nonce_drops"] += 1
            return
        self._seen_nonces.add(nonce_key)

        cached = self.cs.find(interest, self.scheduler.now)
        if cached is not None:
            self.stats["cache_hits"] += 1
            self.scheduler.schedule(0, lambda: face.send_data(cached))
            return

        key = (interest.name, interest.can_be_prefix, interest.must_be_fresh)
        entry = self.pit.get(key)
        retransmission = entry is not None and face in entry.in_faces
        if entry is None:
            entry = self.pit[key] = PitEntry(interest)
        elif not retransmission:
            entry.in_faces.add(face)
            self.stats["aggregated"] += 1
            self._extend(key, entry, interest)
            return
        entry.in_faces.add(face)
        entry.interest = interest
        self._extend(key, entry, interest)

        out = [f for f in self.lookup(interest.name) if f is not face]
        if not out:
            self.stats["no_route"] += 1
            return
        self.stats["interests_out"] += 1
        out[0].send_interest(interest)

    def _extend(self, key, entry: PitEntry, interest: Interest):
        if entry.expiry is not None:
            entry.expiry.cancel()

        def expire():
            if self.pit.get(key) is entry:
                del self.pit[key]

        entry.expiry = self.scheduler.schedule(interest.lifetime_ms, expire)

    def receive_data(self, face: Face, data: Data):
        self.stats["data_in"] += 1
        log.debug("[%s] t=%d data %s from face %d", self.name, self.scheduler.now, data.name, face.id)
        matched = [(k, e) for k, e in self.pit.items() if e.interest.matches(data)]
        if not matched:
            self.stats["unsolicited_drops"] += 1
            return
        self.cs.insert(data, self.scheduler.now)
        targets: list[Face] = []
        for key, entry in matched:
            del self.pit[key]
            if entry.expiry is not None:
                entry.expiry.cancel()
            for f in entry.in_faces:
                if f is not face and f not in targets:
                    targets.append(f)
        for f in targets:
            self.stats["data_out"] += 1
            f.send_data(data)

    # -- faces --------------------------------------------------------------
    def add_app_face(self, rng: random.Random | None = None) -> "AppFace":
        return AppFace(self, rng or (self.network.rng if self.network else random.Random()))


class PendingInterest:
    def __init__(self, interest: Interest, on_data, on_timeout, timer: Event):
        self.interest = interest
        self.on_data = on_data
        self.on_timeout = on_timeout
        self.timer = timer
        self.done = False

    def cancel(self):
        self.done = True
        self.timer.cancel()


class RegistrationError(NacAbeError):
    pass


class AppFace(Face):
    """Application-side face: expresses Interests and serves registered prefixes."""

    def __init__(self, forwarder: Forwarder, rng: random.Random):
        super().__init__(forwarder)
        self.rng = rng
        self.pending: list[PendingInterest] = []
        self.handlers: list[tuple[Name, Callable]] = []
        self.interests_handled = 0
        self.retransmissions = 0

    @property
    def scheduler(self) -> Scheduler:
        return self.forwarder.scheduler

    # application -> network
    def express_interest(self, interest: Interest, on_data: Callable[[Interest, Data], None] | None = None,
                         on_timeout: Callable[[Interest], None] | None = None) -> PendingInterest:
        interest = replace(interest, nonce=self.rng.randbytes(4))

        def timeout():
            if pending.done:
                return
            pending.done = True
            self.pending.remove(pending)
            if on_timeout:
                on_timeout(interest)

        timer = self.scheduler.schedule(interest.lifetime_ms, timeout)
        pending = PendingInterest(interest, on_data, on_timeout, timer)
        self.pending.append(pending)
        self.scheduler.schedule(0, lambda: self.forwarder.receive_interest(self, interest))
        return pending

    def register_prefix(self, prefix: Name | str, on_interest: Callable[[Interest, "AppFace"], None]):
        prefix = Name.coerce(prefix)
        if len(prefix) == 0:
            raise RegistrationError("cannot register the empty prefix")
        if any(p == prefix for p, _ in self.handlers):
            raise RegistrationError(f"prefix already registered on this face: {prefix}")
        self.handlers.append((prefix, on_interest))
        self.forwarder.add_route(prefix, self)
        if self.forwarder.network is not None:
            self.forwarder.network.announce(self.forwarder, prefix)
        return prefix

    def unregister_prefix(self, prefix: Name):
        self.handlers = [(p, h) for p, h in self.handlers if p != prefix]
        self.forwarder.remove_route(prefix, self)

    def put(self, data: Data):
        self.scheduler.schedule(0, lambda: self.forwarder.receive_data(self, data))

    # network -> application
    def send_interest(self, interest: Interest):
        best = None
        for prefix, handler in self.handlers:
            if prefix.is_prefix_of(interest.name) and (best is None or len(prefix) > len(best[0])):
                best = (prefix, handler)
        if best is not None:
            self.interests_handled += 1
            best[1](interest, self)

    def send_data(self, data: Data):
        for pending in list(self.pending):
            if not pending.done and pending.interest.matches(data):
                pending.cancel()
                self.pending.remove(pending)
                if pending.on_data:
                    pending.on_data(pending.interest, data)

    # blocking convenience for top-level (non-callback) code
    def get(self, interest: Interest | Name | str, retries: int = 3) -> Data | None:
        """Express ``interest`` and run the loop until Data arrives or all
        ``retries`` retransmissions time out."""
        if not isinstance(interest, Interest):
            interest = Interest(Name.coerce(interest))
        result: list[Data] = []
        for attempt in range(retries + 1):
            if attempt:
                self.retransmissions += 1
            state = {"done": False}

            def on_data(_i, d):
                result.append(d)
                state["done"] = True

            def on_timeout(_i):
                state["done"] = True

            self.express_interest(interest, on_data, on_timeout)
            self.scheduler.run_until(lambda: state["done"])
            if result:
                return result[0]
        return None


class LinkFace(Face):
    def __init__(self, forwarder: Forwarder, link: "Link"):
        super().__init__(forwarder)
        self.link = link
        self.peer: LinkFace | None = None

    def send_interest(self, interest: Interest):
        self.link.transmit(self, interest)

    def send_data(self, data: Data):
        self.link.transmit(self, data)


class Link:
    """Point-to-point link with fixed delay and independent Bernoulli loss.

    Packets cross the link in wire format, so every hop exercises the codec.
    """

    def __init__(self, network: "Network", a: Forwarder, b: Forwarder, delay_ms: int = 10,
                 loss_probability: float = 0.0):
        self.network = network
        self.delay_ms = delay_ms
        self.loss_probability = loss_probability
        self.up = True
        self.face_a = LinkFace(a, self)
        self.face_b = LinkFace(b, self)
        self.face_a.peer, self.face_b.peer = self.face_b, self.face_a
        self.stats: Counter = Counter()

    def transmit(self, from_face: LinkFace, packet: Interest | Data):
        wire = encode_packet(packet)
        if not self.up:
            self.stats["down_drops"] += 1
            return
        if self.loss_probability > 0 and self.network.rng.random() < self.loss_probability:
            self.stats["lost"] += 1
            return
        self.stats["delivered"] += 1
        peer = from_face.peer
        scheduler = self.network.scheduler

        def deliver():
            decoded = decode_packet(wire)
            if isinstance(decoded, Interest):
                peer.forwarder.receive_interest(peer, decoded)
            else:
                peer.forwarder.receive_data(peer, decoded)

        scheduler.schedule(self.delay_ms, deliver)

    def ends(self) -> tuple[Forwarder, Forwarder]:
        return self.face_a.forwarder, self.face_b.forwarder


class Network:
    """A set of forwarders sharing one scheduler, joined by links.

    Prefix registrations are propagated as static routes along the links
    (shortest hop path), which is all the tree-shaped scenarios need.
    """

    def __init__(self, rng: random.Random | None = None, scheduler: Scheduler | None = None,
                 cs_capacity: int = DEFAULT_CS_CAPACITY):
        self.rng = rng or random.Random()
        self.scheduler = scheduler or Scheduler()
        self.cs_capacity = cs_capacity
        self.nodes: dict[str, Forwarder] = {}
        self.links: list[Link] = []
        self._announced: list[tuple[Forwarder, Name]] = []

    def add_node(self, name: str, cs_capacity: int | None = None) -> Forwarder:
        if name in self.nodes:
            raise ValueError(f"duplicate node {name!r}")
        fw = Forwarder(name, self.scheduler, self.cs_capacity if cs_capacity is None else cs_capacity, self)
        self.nodes[name] = fw
        return fw

    def connect(self, a: str | Forwarder, b: str | Forwarder, delay_ms: int = 10,
                loss_probability: float = 0.0) -> Link:
        fa = self.nodes[a] if isinstance(a, str) else a
        fb = self.nodes[b] if isinstance(b, str) else b
        link = Link(self, fa, fb, delay_ms, loss_probability)
        self.links.append(link)
        for origin, prefix in self._announced:
            self._propagate(origin, prefix)
        return link

    def link_between(self, a: str, b: str) -> Link:
        for link in self.links:
            ends = {fw.name for fw in link.ends()}
            if ends == {a, b}:
                return link
        raise KeyError(f"no link {a}-{b}")

    def detach(self, node: str):
        """Take every link of ``node`` down; its packets stop flowing both ways."""
        for link in self.links:
            if any(fw.name == node for fw in link.ends()):
                link.up = False

    def announce(self, origin: Forwarder, prefix: Name):
        self._announced.append((origin, prefix))
        self._propagate(origin, prefix)

    def _neighbours(self, fw: Forwarder) -> Iterable[tuple[Forwarder, LinkFace]]:
        for link in self.links:
            if link.face_a.forwarder is fw:
                yield link.face_b.forwarder, link.face_b
            elif link.face_b.forwarder is fw:
                yield link.face_a.forwarder, link.face_a

    def _propagate(self, origin: Forwarder, prefix: Name):
        visited = {origin.name}
        frontier = [origin]
        while frontier:
            nxt = []
            for fw in frontier:
                for neighbour, face_towards_fw in self._neighbours(fw):
                    if neighbour.name in visited:
                        continue
                    visited.add(neighbour.name)
                    neighbour.add_route(prefix, face_towards_fw)
                    nxt.append(neighbour)
            frontier = nxt

    def stats(self) -> Counter:
        total: Counter = Counter()
        for fw in self.nodes.values():
            total.update(fw.stats)
        for link in self.links:
            total.update({f"link_{k}": v for k, v in link.stats.items()})
        return total
