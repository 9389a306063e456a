"""Network and market data model: transmission case, radial feeders, bids, config.

Loads the JSON dataset files, cross-links responsive-load bids to feeder
nodes, and checks every structural invariant. All types are immutable
after loading; validation never mutates.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

SCHEDULE_TOL_MW = 1e-6


class DatasetError(Exception):
    """Base class for dataset loading problems."""


class SchemaError(DatasetError):
    """A file does not match its schema; message names field and location."""


class ValidationError(DatasetError):
    """A parsed system violates structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"[{v.code}] {v.message}" for v in self.violations))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class Bus:
    id: int
    name: str
    scheduled_injection: float  # MW, net day-ahead injection


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    susceptance: float  # per-unit
    flow_limit: float   # MW


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    reg_min: float  # MW, <= 0
    reg_max: float  # MW, >= 0
    price: float    # currency/MWh


@dataclass(frozen=True)
class TieLine:
    id: int
    transmission_bus: int
    dso: int
    flow_limit: float  # MW


@dataclass(frozen=True)
class FeederNode:
    node_id: int
    base_load_p: float  # MW
    base_load_q: float  # MVAr


@dataclass(frozen=True)
class FeederBranch:
    from_node: int
    to_node: int
    r: float  # ohm
    x: float  # ohm


@dataclass(frozen=True)
class Feeder:
    dso: int
    nodes: tuple[FeederNode, ...]
    branches: tuple[FeederBranch, ...]
    nominal_voltage: float  # kV
    root_node: int

    def node_ids(self):
        return [n.node_id for n in self.nodes]

    def base_load(self, node_id: int) -> FeederNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(f"node {node_id} not in feeder of DSO {self.dso}")


@dataclass(frozen=True)
class ResponsiveLoadBid:
    id: str
    dso: int
    feeder_node: int
    quantity: float  # MW offered load reduction
    floor: float     # MW minimum dispatch, usually 0
    price: float     # currency/MWh


@dataclass(frozen=True)
class MarketConfig:
    penalty_price: float      # currency/MWh for the two-sided slack resource
    conventional_cost: float  # currency/h, reporting benchmark
    loss_price: float         # currency/MWh applied to feeder losses
    settlement_mode: str      # "pay-as-bid" | "uniform"
    power_base: float = 100.0  # MVA


@dataclass(frozen=True)
class TransmissionNetwork:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    ties: tuple[TieLine, ...]

    def bus_count(self) -> int:
        return len(self.buses)


@dataclass(frozen=True)
class System:
    """Fully cross-linked dataset; returned validated by load_dataset."""

    network: TransmissionNetwork
    feeders: tuple[Feeder, ...]
    bids: tuple[ResponsiveLoadBid, ...]
    config: MarketConfig

    def feeder_for(self, dso: int) -> Feeder:
        for f in self.feeders:
            if f.dso == dso:
                return f
        raise KeyError(f"no feeder for DSO {dso}")

    def dso_ids(self):
        return sorted(f.dso for f in self.feeders)

    def bids_for(self, dso: int):
        return [b for b in self.bids if b.dso == dso]


# ---------------------------------------------------------------------------
# JSON parsing


def _get(obj, key, types, where, default=None):
    if key not in obj:
        if default is not None:
            return default
        raise SchemaError(f"{where}: missing field '{key}'")
    val = obj[key]
    if not isinstance(val, types) or isinstance(val, bool):
        raise SchemaError(f"{where}: field '{key}' has wrong type")
    return val


def _num(obj, key, where, default=None):
    return float(_get(obj, key, (int, float), where, default))


def _int(obj, key, where):
    val = _get(obj, key, (int,), where)
    return int(val)


def _read_json(path):
    path = Path(path)
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise OSError(f"cannot parse {path}: {exc}") from exc


def network_from_dict(d, where="network") -> TransmissionNetwork:
    buses = tuple(
        Bus(_int(b, "id", f"{where}.buses[{i}]"),
            str(_get(b, "name", (str,), f"{where}.buses[{i}]")),
            _num(b, "scheduled_injection", f"{where}.buses[{i}]"))
        for i, b in enumerate(_get(d, "buses", (list,), where))
    )
    branches = tuple(
        Branch(_int(br, "id", f"{where}.branches[{i}]"),
               _int(br, "from_bus", f"{where}.branches[{i}]"),
               _int(br, "to_bus", f"{where}.branches[{i}]"),
               _num(br, "susceptance", f"{where}.branches[{i}]"),
               _num(br, "flow_limit", f"{where}.branches[{i}]"))
        for i, br in enumerate(_get(d, "branches", (list,), where))
    )
    generators = tuple(
        Generator(_int(g, "id", f"{where}.generators[{i}]"),
                  _int(g, "bus", f"{where}.generators[{i}]"),
                  _num(g, "reg_min", f"{where}.generators[{i}]"),
                  _num(g, "reg_max", f"{where}.generators[{i}]"),
                  _num(g, "price", f"{where}.generators[{i}]"))
        for i, g in enumerate(_get(d, "generators", (list,), where))
    )
    ties = tuple(
        TieLine(_int(t, "id", f"{where}.ties[{i}]"),
                _int(t, "transmission_bus", f"{where}.ties[{i}]"),
                _int(t, "dso", f"{where}.ties[{i}]"),
                _num(t, "flow_limit", f"{where}.ties[{i}]"))
        for i, t in enumerate(_get(d, "ties", (list,), where))
    )
    return TransmissionNetwork(buses, branches, generators, ties)


def feeder_from_dict(d, where="feeder") -> Feeder:
    nodes = tuple(
        FeederNode(_int(n, "node_id", f"{where}.nodes[{i}]"),
                   _num(n, "base_load_p", f"{where}.nodes[{i}]"),
                   _num(n, "base_load_q", f"{where}.nodes[{i}]"))
        for i, n in enumerate(_get(d, "nodes", (list,), where))
    )
    branches = tuple(
        FeederBranch(_int(b, "from", f"{where}.branches[{i}]"),
                     _int(b, "to", f"{where}.branches[{i}]"),
                     _num(b, "r", f"{where}.branches[{i}]"),
                     _num(b, "x", f"{where}.branches[{i}]"))
        for i, b in enumerate(_get(d, "branches", (list,), where))
    )
    return Feeder(
        dso=_int(d, "dso", where),
        nodes=nodes,
        branches=branches,
        nominal_voltage=_num(d, "nominal_voltage", where),
        root_node=_int(d, "root_node", where),
    )


def bids_from_list(items, where="bids") -> tuple[ResponsiveLoadBid, ...]:
    if not isinstance(items, list):
        raise SchemaError(f"{where}: expected an array of bids")
    out = []
    for i, b in enumerate(items):
        loc = f"{where}[{i}]"
        out.append(ResponsiveLoadBid(
            id=str(_get(b, "id", (str,), loc)),
            dso=_int(b, "dso", loc),
            feeder_node=_int(b, "node", loc),
            quantity=_num(b, "mw", loc),
            floor=_num(b, "floor", loc, default=0.0),
            price=_num(b, "price", loc),
        ))
    return tuple(out)


def config_from_dict(d, where="config") -> MarketConfig:
    mode = str(_get(d, "settlement_mode", (str,), where, default="pay-as-bid"))
    return MarketConfig(
        penalty_price=_num(d, "penalty_price", where),
        conventional_cost=_num(d, "conventional_cost", where),
        loss_price=_num(d, "loss_price", where),
        settlement_mode=mode,
        power_base=_num(d, "power_base", where, default=100.0),
    )


def load_network(path) -> TransmissionNetwork:
    return network_from_dict(_read_json(path), where=str(path))


def load_feeder(path) -> Feeder:
    return feeder_from_dict(_read_json(path), where=str(path))


def load_bids(path) -> tuple[ResponsiveLoadBid, ...]:
    return bids_from_list(_read_json(path), where=str(path))


def load_config(path) -> MarketConfig:
    return config_from_dict(_read_json(path), where=str(path))


def load_dataset(network_file, feeder_files, bids_file, config_file) -> System:
    """Load and cross-validate all dataset files; raises on any violation."""
    system = System(
        network=load_network(network_file),
        feeders=tuple(sorted((load_feeder(p) for p in feeder_files), key=lambda f: f.dso)),
        bids=load_bids(bids_file),
        config=load_config(config_file),
    )
    violations = validate_system(system)
    if violations:
        raise ValidationError(violations)
    return system


# ---------------------------------------------------------------------------
# Serialization (round-trips with the loaders)


def network_to_dict(net: TransmissionNetwork) -> dict:
    return {
        "buses": [{"id": b.id, "name": b.name, "scheduled_injection": b.scheduled_injection}
                  for b in net.buses],
        "branches": [{"id": b.id, "from_bus": b.from_bus, "to_bus": b.to_bus,
                      "susceptance": b.susceptance, "flow_limit": b.flow_limit}
                     for b in net.branches],
        "generators": [{"id": g.id, "bus": g.bus, "reg_min": g.reg_min,
                        "reg_max": g.reg_max, "price": g.price}
                       for g in net.generators],
        "ties": [{"id": t.id, "transmission_bus": t.transmission_bus,
                  "dso": t.dso, "flow_limit": t.flow_limit}
                 for t in net.ties],
    }


def feeder_to_dict(f: Feeder) -> dict:
    return {
        "dso": f.dso,
        "nominal_voltage": f.nominal_voltage,
        "root_node": f.root_node,
        "nodes": [{"node_id": n.node_id, "base_load_p": n.base_load_p,
                   "base_load_q": n.base_load_q} for n in f.nodes],
        "branches": [{"from": b.from_node, "to": b.to_node, "r": b.r, "x": b.x}
                     for b in f.branches],
    }


def bids_to_list(bids) -> list:
    return [{"id": b.id, "dso": b.dso, "node": b.feeder_node, "mw": b.quantity,
             "floor": b.floor, "price": b.price} for b in bids]


def config_to_dict(c: MarketConfig) -> dict:
    return {"penalty_price": c.penalty_price, "conventional_cost": c.conventional_cost,
            "loss_price": c.loss_price, "settlement_mode": c.settlement_mode,
            "power_base": c.power_base}


def system_to_dict(system: System) -> dict:
    return {
        "network": network_to_dict(system.network),
        "feeders": [feeder_to_dict(f) for f in system.feeders],
        "bids": bids_to_list(system.bids),
        "config": config_to_dict(system.config),
    }


def system_from_dict(d) -> System:
    return System(
        network=network_from_dict(_get(d, "network", (dict,), "system")),
        feeders=tuple(sorted((feeder_from_dict(f, where=f"system.feeders[{i}]")
                              for i, f in enumerate(_get(d, "feeders", (list,), "system"))),
                             key=lambda f: f.dso)),
        bids=bids_from_list(_get(d, "bids", (list,), "system")),
        config=config_from_dict(_get(d, "config", (dict,), "system")),
    )


# ---------------------------------------------------------------------------
# Validation


def _connected(n_buses, edges) -> bool:
    if n_buses == 0:
        return True
    adj = {i: [] for i in range(n_buses)}
    for f, t in edges:
        if f in adj and t in adj:
            adj[f].append(t)
            adj[t].append(f)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == n_buses


def _feeder_violations(feeder: Feeder):
    out = []
    tag = f"feeder dso={feeder.dso}"
    ids = feeder.node_ids()
    if len(set(ids)) != len(ids):
        out.append(Violation("feeder-node-duplicate", f"{tag}: duplicate node ids"))
        return out
    known = set(ids)
    if feeder.root_node not in known:
        out.append(Violation("feeder-root", f"{tag}: root node {feeder.root_node} not listed"))
        return out
    for b in feeder.branches:
        if b.from_node not in known or b.to_node not in known:
            out.append(Violation("feeder-branch-node",
                                 f"{tag}: branch {b.from_node}-{b.to_node} references unknown node"))
        if b.r < 0:
            out.append(Violation("feeder-resistance",
                                 f"{tag}: branch {b.from_node}-{b.to_node} has r < 0"))
    if any(v.code == "feeder-branch-node" for v in out):
        return out

    # radial = spanning tree rooted at root_node: every node reachable, no cycle
    adj = {i: [] for i in ids}
    for b in feeder.branches:
        adj[b.from_node].append(b.to_node)
        adj[b.to_node].append(b.from_node)
    if len(feeder.branches) != len(ids) - 1:
        out.append(Violation("feeder-radial",
                             f"{tag}: {len(feeder.branches)} branches for {len(ids)} nodes"))
    seen = {feeder.root_node}
    queue = deque([feeder.root_node])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    unreachable = known - seen
    if unreachable:
        out.append(Violation("feeder-unreachable",
                             f"{tag}: nodes {sorted(unreachable)} unreachable from root"))
    return out


def validate_system(system: System):
    """Check every structural invariant; returns a list of Violation records."""
    out = []
    net = system.network

    ids = [b.id for b in net.buses]
    if sorted(ids) != list(range(len(ids))):
        out.append(Violation("bus-ids", f"bus ids must be 0..{len(ids) - 1}, got {sorted(ids)}"))
    total = sum(b.scheduled_injection for b in net.buses)
    if abs(total) > SCHEDULE_TOL_MW:
        out.append(Violation("schedule-imbalance",
                             f"scheduled injections sum to {total:g} MW, expected 0"))

    bus_set = set(ids)
    for br in net.branches:
        where = f"branch {br.id}"
        if br.from_bus == br.to_bus or br.from_bus not in bus_set or br.to_bus not in bus_set:
            out.append(Violation("branch-endpoint", f"{where}: bad endpoints "
                                                    f"{br.from_bus}->{br.to_bus}"))
        if br.susceptance <= 0:
            out.append(Violation("branch-susceptance", f"{where}: susceptance must be > 0"))
        if br.flow_limit <= 0:
            out.append(Violation("branch-limit", f"{where}: flow limit must be > 0"))
    if not any(v.code == "branch-endpoint" for v in out):
        if not _connected(len(net.buses), [(b.from_bus, b.to_bus) for b in net.branches]):
            out.append(Violation("network-disconnected", "transmission graph is not connected"))

    for g in net.generators:
        if not (g.reg_min <= 0.0 <= g.reg_max):
            out.append(Violation("gen-range",
                                 f"generator {g.id}: needs reg_min <= 0 <= reg_max, "
                                 f"got [{g.reg_min}, {g.reg_max}]"))
        if g.price < 0:
            out.append(Violation("gen-price", f"generator {g.id}: price must be >= 0"))
        if g.bus not in bus_set:
            out.append(Violation("gen-bus", f"generator {g.id}: unknown bus {g.bus}"))

    tie_dsos = {}
    for t in net.ties:
        if t.transmission_bus not in bus_set:
            out.append(Violation("tie-bus", f"tie {t.id}: unknown bus {t.transmission_bus}"))
        if t.flow_limit <= 0:
            out.append(Violation("tie-limit", f"tie {t.id}: flow limit must be > 0"))
        tie_dsos.setdefault(t.dso, []).append(t.id)
    for dso, tids in tie_dsos.items():
        if len(tids) != 1:
            out.append(Violation("tie-dso", f"DSO {dso} attached by ties {tids}, expected one"))

    feeder_dsos = [f.dso for f in system.feeders]
    if len(set(feeder_dsos)) != len(feeder_dsos):
        out.append(Violation("feeder-dso-duplicate", "multiple feeders share a DSO id"))
    for f in system.feeders:
        out.extend(_feeder_violations(f))
        if f.dso not in tie_dsos:
            out.append(Violation("feeder-tie", f"feeder dso={f.dso} has no tie line"))
    feeder_map = {f.dso: f for f in system.feeders}

    seen_bid_ids = set()
    for b in system.bids:
        where = f"bid {b.id}"
        if b.id in seen_bid_ids:
            out.append(Violation("rl-id", f"{where}: duplicate id"))
        seen_bid_ids.add(b.id)
        if not (0.0 <= b.floor <= b.quantity):
            out.append(Violation("rl-range", f"{where}: needs 0 <= floor <= quantity, "
                                             f"got [{b.floor}, {b.quantity}]"))
        if b.price < 0:
            out.append(Violation("rl-price", f"{where}: price must be >= 0"))
        feeder = feeder_map.get(b.dso)
        if feeder is None:
            out.append(Violation("rl-dso", f"{where}: unknown DSO {b.dso}"))
            continue
        if b.feeder_node not in set(feeder.node_ids()):
            out.append(Violation("rl-node", f"{where}: node {b.feeder_node} not in "
                                            f"feeder of DSO {b.dso}"))
            continue
        if feeder.base_load(b.feeder_node).base_load_p < b.quantity - 1e-12:
            out.append(Violation("rl-base-load",
                                 f"{where}: offers {b.quantity} MW but node {b.feeder_node} "
                                 f"consumes {feeder.base_load(b.feeder_node).base_load_p} MW"))

    cfg = system.config
    if system.bids:
        top = max(b.price for b in system.bids)
        top = max(top, max((g.price for g in net.generators), default=0.0))
        if cfg.penalty_price <= top:
            out.append(Violation("config-penalty",
                                 f"penalty price {cfg.penalty_price} must exceed every "
                                 f"bid price (max {top})"))
    if cfg.loss_price < 0:
        out.append(Violation("config-loss-price", "loss price must be >= 0"))
    if cfg.settlement_mode not in ("pay-as-bid", "uniform"):
        out.append(Violation("config-settlement",
                             f"unknown settlement mode '{cfg.settlement_mode}'"))
    if cfg.power_base <= 0:
        out.append(Violation("config-power-base", "power base must be > 0"))
    return out
