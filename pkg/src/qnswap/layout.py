"""Hardware layouts and the networks generated from them.

A layout is an undirected site graph; a subset of sites carry finite queues
and act as sources (injection) or sinks (extraction), every other site
becomes a capacity-one intermediate node.  ``build_lattice_network`` turns a
layout into a network with uniform nearest-neighbor routing;
``munoz15_fixture`` returns the hand-built 15-node reference network used
throughout the test suite.

Layout document shape::

    {
      "sites": ["a", "b", ...],
      "edges": [["a", "b"], ...],
      "queues": [{"site": "a", "role": "source", "capacity": 8}, ...]
    }
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Mapping

from .errors import (
    DisconnectedLayoutError,
    NoSinkError,
    NoSourceError,
    ParseError,
    SchemaError,
    UnreachableError,
)
from .model import (
    NetworkSpec,
    NodeKind,
    NodeSpec,
    RoutingMatrix,
    validate_network,
)

DEFAULT_BOUNDARY_CAPACITY = 8


@dataclass(frozen=True)
class QueueSite:
    """Role and buffer size of a boundary site.

    ``capacity`` may be left None to pick up the builder default.
    """

    role: NodeKind
    capacity: int | None = None

    def __post_init__(self):
        if self.role not in (NodeKind.SOURCE, NodeKind.SINK):
            raise SchemaError("queues.role", f"must be source or sink, got {self.role!r}")
        if self.capacity is not None and (
                not isinstance(self.capacity, int) or isinstance(self.capacity, bool)
                or self.capacity < 1):
            raise SchemaError("queues.capacity", "must be a positive integer")


@dataclass(frozen=True)
class LayoutGraph:
    """Undirected site graph with queue-site annotations."""

    sites: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    queue_sites: Mapping[str, QueueSite]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        norm = []
        for a, b in self.edges:
            if a == b:
                raise SchemaError("edges", f"self-edge on site {a!r}")
            norm.append((a, b) if a <= b else (b, a))
        object.__setattr__(self, "edges", tuple(sorted(set(norm))))
        object.__setattr__(self, "queue_sites",
                           dict(sorted(self.queue_sites.items())))
        known = set(self.sites)
        if len(known) != len(self.sites):
            raise SchemaError("sites", "site names must be unique")
        for a, b in self.edges:
            for s in (a, b):
                if s not in known:
                    raise SchemaError("edges", f"unknown site {s!r}")
        for s in self.queue_sites:
            if s not in known:
                raise SchemaError("queues", f"unknown site {s!r}")

    def neighbors(self, site: str) -> tuple[str, ...]:
        out = [b for a, b in self.edges if a == site]
        out += [a for a, b in self.edges if b == site]
        return tuple(sorted(out))


def _check_connected(layout: LayoutGraph):
    if not layout.sites:
        raise SchemaError("sites", "layout has no sites")
    seen = {layout.sites[0]}
    frontier = deque(seen)
    while frontier:
        v = frontier.popleft()
        for w in layout.neighbors(v):
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    missing = [s for s in layout.sites if s not in seen]
    if missing:
        raise DisconnectedLayoutError(missing)


def parse_layout(text: str) -> LayoutGraph:
    """Parse a layout document (strict keys, connectivity checked)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    for k in doc:
        if k not in {"sites", "edges", "queues"}:
            raise SchemaError(f"$.{k}", "unknown key")
    for k in ("sites", "edges", "queues"):
        if k not in doc:
            raise SchemaError("$", f"missing required key {k!r}")
    if not isinstance(doc["sites"], list) or not all(isinstance(s, str) for s in doc["sites"]):
        raise SchemaError("$.sites", "must be an array of site names")
    edges = []
    for k, e in enumerate(doc["edges"]):
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(s, str) for s in e)):
            raise SchemaError(f"$.edges[{k}]", "must be a pair of site names")
        edges.append((e[0], e[1]))
    queues = {}
    for k, q in enumerate(doc["queues"]):
        path = f"$.queues[{k}]"
        if not isinstance(q, dict):
            raise SchemaError(path, "must be an object")
        for key in q:
            if key not in {"site", "role", "capacity"}:
                raise SchemaError(f"{path}.{key}", "unknown key")
        for key in ("site", "role", "capacity"):
            if key not in q:
                raise SchemaError(path, f"missing required key {key!r}")
        if not isinstance(q["site"], str):
            raise SchemaError(f"{path}.site", "must be a site name")
        if q["role"] not in ("source", "sink"):
            raise SchemaError(f"{path}.role", f"must be source or sink, got {q['role']!r}")
        cap = q["capacity"]
        if isinstance(cap, bool) or not isinstance(cap, int) or cap < 1:
            raise SchemaError(f"{path}.capacity", "must be a positive integer")
        if q["site"] in queues:
            raise SchemaError(path, f"duplicate queue entry for site {q['site']!r}")
        queues[q["site"]] = QueueSite(role=NodeKind(q["role"]), capacity=cap)
    layout = LayoutGraph(tuple(doc["sites"]), tuple(edges), queues)
    _check_connected(layout)
    return layout


def build_lattice_network(
    layout: LayoutGraph,
    *,
    service_rate: float = 1.0,
    unblock_rate: float = 0.15,
    arrival_rate: float | Mapping[str, float] = 0.1,
    boundary_capacity: int = DEFAULT_BOUNDARY_CAPACITY,
) -> NetworkSpec:
    """Generate a network with uniform nearest-neighbor routing.

    Interior sites become capacity-one intermediate nodes that route with
    equal probability to *every* adjacent site (a moving job is as likely to
    hop back toward its source as onward; direction is not modeled).  Source
    sites route uniformly into their adjacent interior sites, sink sites
    absorb (everything arriving there leaves the network).

    Node ids are assigned deterministically from layout order: interior
    sites first (1..m), then sources, then sinks.

    Args:
        layout: site graph; must be connected and declare at least one
            source and one sink.
        service_rate: mu for every node.
        unblock_rate: mu_b for the interior nodes.
        arrival_rate: external rate per source, either one number for all
            or a mapping keyed by site name.
        boundary_capacity: buffer size for queue sites that do not fix one.

    Returns:
        A validated NetworkSpec.
    """
    _check_connected(layout)
    interior = [s for s in layout.sites if s not in layout.queue_sites]
    sources = [s for s in layout.sites
               if layout.queue_sites.get(s, None) is not None
               and layout.queue_sites[s].role is NodeKind.SOURCE]
    sinks = [s for s in layout.sites
             if layout.queue_sites.get(s, None) is not None
             and layout.queue_sites[s].role is NodeKind.SINK]
    if not sources:
        raise NoSourceError()
    if not sinks:
        raise NoSinkError()

    ids: dict[str, int] = {}
    next_id = 1
    for s in interior + sources + sinks:
        ids[s] = next_id
        next_id += 1

    nodes = []
    for s in interior:
        nodes.append(NodeSpec(ids[s], NodeKind.INTERMEDIATE, 1,
                              service_rate, unblock_rate))
    for s in sources + sinks:
        q = layout.queue_sites[s]
        cap = q.capacity if q.capacity is not None else boundary_capacity
        nodes.append(NodeSpec(ids[s], q.role, cap, service_rate, 0.0))

    entries: dict[tuple[int, int], float] = {}
    for s in interior:
        nbrs = layout.neighbors(s)
        share = 1.0 / len(nbrs)
        for t in nbrs:
            entries[(ids[s], ids[t])] = share
    for s in sources:
        targets = [t for t in layout.neighbors(s) if t in set(interior)]
        if targets:
            share = 1.0 / len(targets)
            for t in targets:
                entries[(ids[s], ids[t])] = share
    # sink rows stay empty: exit probability 1

    if isinstance(arrival_rate, Mapping):
        missing = [s for s in sources if s not in arrival_rate]
        if missing:
            raise SchemaError("arrival_rate",
                              f"no rate for source site(s) {missing}")
        external = {ids[s]: float(arrival_rate[s]) for s in sources}
    else:
        external = {ids[s]: float(arrival_rate) for s in sources}

    return validate_network(NetworkSpec(
        nodes=tuple(nodes),
        routing=RoutingMatrix(entries),
        external_arrivals=external,
    ))


# Reference 15-node network: 11 capacity-one interior nodes (1..11), two
# sources (12, 13), two sinks (14, 15).  Interior arrival and unblocking
# rates are fixed reference values; the interior arrival rates are injected
# as known rates rather than derived from the routing, which only pins the
# boundary flows and the hop structure (shortest routes of 3 and 5 hops
# from each source to the sinks).
_FIXTURE_UNBLOCK = {
    1: 0.136, 2: 0.136, 3: 0.13, 4: 0.144, 5: 0.17, 6: 0.142,
    7: 0.124, 8: 0.173, 9: 0.175, 10: 0.195, 11: 0.143,
}
_FIXTURE_ARRIVAL = {
    1: 0.94, 2: 0.94, 3: 0.936, 4: 0.88, 5: 1.644, 6: 1.596,
    7: 1.02, 8: 1.6, 9: 1.18, 10: 1.42, 11: 0.86,
}
_FIXTURE_ROUTING = {
    (12, 1): 1.0,
    (13, 7): 1.0,
    (1, 2): 0.5, (1, 4): 0.5,
    (2, 3): 0.5, (2, 14): 0.5,
    (3, 14): 1.0,
    (4, 5): 0.5, (4, 10): 0.5,
    (5, 6): 1.0,
    (6, 15): 1.0,
    (7, 3): 0.5, (7, 8): 0.5,
    (8, 9): 0.5, (8, 11): 0.5,
    (9, 6): 1.0,
    (10, 9): 1.0,
    (11, 5): 1.0,
}
_FIXTURE_EXTERNAL = {12: 0.15, 13: 0.1}


def munoz15_fixture() -> NetworkSpec:
    """The 15-node reference network (unit service rates everywhere)."""
    nodes = [
        NodeSpec(i, NodeKind.INTERMEDIATE, 1, 1.0, _FIXTURE_UNBLOCK[i])
        for i in range(1, 12)
    ]
    nodes += [
        NodeSpec(12, NodeKind.SOURCE, DEFAULT_BOUNDARY_CAPACITY, 1.0, 0.0),
        NodeSpec(13, NodeKind.SOURCE, DEFAULT_BOUNDARY_CAPACITY, 1.0, 0.0),
        NodeSpec(14, NodeKind.SINK, DEFAULT_BOUNDARY_CAPACITY, 1.0, 0.0),
        NodeSpec(15, NodeKind.SINK, DEFAULT_BOUNDARY_CAPACITY, 1.0, 0.0),
    ]
    return validate_network(NetworkSpec(
        nodes=tuple(nodes),
        routing=RoutingMatrix(_FIXTURE_ROUTING),
        external_arrivals=_FIXTURE_EXTERNAL,
        known_arrival_rates=_FIXTURE_ARRIVAL,
    ))


def shortest_hops(spec: NetworkSpec, src: int, dst: int) -> int:
    """Minimum hop count from src to dst over positive routing entries."""
    spec.node(src)
    spec.node(dst)
    if src == dst:
        return 0
    dist = {src: 0}
    frontier = deque([src])
    while frontier:
        v = frontier.popleft()
        for w in spec.routing.successors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                if w == dst:
                    return dist[w]
                frontier.append(w)
    raise UnreachableError(src, dst)
