"""Scenario files: schema, loading, and total validation.

A scenario that loads is a scenario that runs: every cross-reference is
resolved here (hardware profile names, band ids, node names) and every
static invariant is checked with the failing rule named in the error, so
configuration-class failures cannot surface mid-simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .access import Burst, ChannelOccupancy, LbtConfig, TddConfig, slot_duration_us
from .corenet import CoreConfig, SubscriberRecord
from .errors import ConfigError, ScenarioError
from .rflink import Cable, HostModel, LinkMedium, OverAir, SdrModel, get_host, get_sdr
from .spectrum import (
    ChannelAssignment,
    check_regulatory,
    get_band,
    load_regulatory_rules,
    validate_assignment,
    validate_channel,
)

SCHEMA_VERSION = 1
BUNDLED = ("test_a", "test_b", "test_c", "test_d", "north_south", "east_west")


@dataclass(frozen=True)
class CellConfig:
    band_id: str
    arfcn: int
    bandwidth_mhz: float
    scs_khz: int
    tx_power_dbm: float
    attenuation_factor: float
    ssb_gscn: int
    indoor: bool
    tdd: TddConfig
    lbt: LbtConfig

    @property
    def eirp_mw(self) -> float:
        return 10 ** (self.tx_power_dbm / 10)


@dataclass(frozen=True)
class NodeConfig:
    name: str
    role: str  # "gnb" | "ue"
    host: HostModel
    sdr: SdrModel
    imsi: str | None = None
    gnb: str | None = None
    medium: LinkMedium | None = None
    n3_address: str | None = None
    on_air: bool = True
    unprovisioned: bool = False


@dataclass(frozen=True)
class PingPlan:
    label: str
    src: str
    dst: str  # node name, "core-gateway", "external", or a literal IPv4
    count: int = 100
    interval_ms: int = 200


@dataclass(frozen=True)
class ThroughputPlan:
    label: str
    ue: str
    direction: str  # "UL" | "DL"
    duration_s: int = 30


@dataclass(frozen=True)
class ExternalHostConfig:
    address: str = "142.250.204.4"
    one_way_delay_us: int = 5000
    ttl: int = 117


@dataclass
class Scenario:
    name: str
    seed: int
    duration_s: int
    jurisdiction: str
    cell: CellConfig
    core: CoreConfig
    subscribers: tuple[SubscriberRecord, ...]
    prior_allocations: int
    nodes: list[NodeConfig]
    traffic: list[PingPlan | ThroughputPlan]
    external: ExternalHostConfig
    occupancy: ChannelOccupancy
    taps: list[str]
    allow_noncompliant: bool = False
    notes: list[str] = field(default_factory=list)

    def node(self, name: str) -> NodeConfig:
        for node in self.nodes:
            if node.name == name:
                return node
        raise ConfigError(f"no node named {name!r} in scenario {self.name}")

    def ues(self) -> list[NodeConfig]:
        return [n for n in self.nodes if n.role == "ue"]

    def gnbs(self) -> list[NodeConfig]:
        return [n for n in self.nodes if n.role == "gnb"]


def _require(raw: dict, key: str, context: str):
    if key not in raw:
        raise ScenarioError(f"{context}: missing required field {key!r}")
    return raw[key]


def _parse_medium(raw: dict, context: str) -> LinkMedium:
    kind = _require(raw, "kind", context)
    if kind == "over_air":
        return OverAir(distance_m=float(_require(raw, "distance_m", context)))
    if kind == "cable":
        return Cable(
            length_cm=float(_require(raw, "length_cm", context)),
            attenuator_db=float(raw.get("attenuator_db", 0.0)),
        )
    raise ScenarioError(f"{context}: unknown medium kind {kind!r}")


def _parse_cell(raw: dict) -> CellConfig:
    try:
        band = get_band(str(_require(raw, "band", "cell")))
    except ConfigError as exc:
        raise ScenarioError(f"cell: {exc}") from None
    tdd_raw = raw.get("tdd", {})
    lbt_raw = raw.get("lbt", {})
    scs_khz = int(raw.get("scs_khz", 30))
    try:
        tdd = TddConfig(
            period_slots=int(tdd_raw.get("period_slots", 10)),
            dl_slots=int(tdd_raw.get("dl_slots", 7)),
            ul_slots=int(tdd_raw.get("ul_slots", 2)),
            slot_us=slot_duration_us(scs_khz),
        )
        lbt = LbtConfig(
            cca_threshold_dbm=float(lbt_raw.get("cca_threshold_dbm", -72.0)),
            cca_duration_us=int(lbt_raw.get("cca_duration_us", 25)),
            cw_min=int(lbt_raw.get("cw_min", 15)),
            cw_max=int(lbt_raw.get("cw_max", 1023)),
        )
    except ConfigError as exc:
        raise ScenarioError(f"cell: {exc}") from None
    cell = CellConfig(
        band_id=band.band_id,
        arfcn=int(_require(raw, "arfcn", "cell")),
        bandwidth_mhz=float(_require(raw, "bandwidth_mhz", "cell")),
        scs_khz=scs_khz,
        tx_power_dbm=float(_require(raw, "tx_power_dbm", "cell")),
        attenuation_factor=float(raw.get("attenuation_factor", 0.0)),
        ssb_gscn=int(_require(raw, "ssb_gscn", "cell")),
        indoor=bool(raw.get("indoor", False)),
        tdd=tdd,
        lbt=lbt,
    )
    # Raster and band-span checks, both links (TDD bands share one raster).
    for link in ("DL", "UL"):
        if not validate_channel(band, cell.arfcn, link):
            dl = band.dl_raster
            raise ScenarioError(
                f"cell: ARFCN {cell.arfcn} invalid on the {band.band_id} {link} raster "
                f"({dl.first}-<{dl.step}>-{dl.last})"
            )
    sync = [e for e in band.sync_entries if cell.ssb_gscn in e.gscn]
    if not sync:
        raise ScenarioError(
            f"cell: SSB GSCN {cell.ssb_gscn} not on the {band.band_id} sync raster"
        )
    if all(e.scs_khz != cell.scs_khz for e in sync):
        raise ScenarioError(
            f"cell: SCS {cell.scs_khz} kHz does not match the {band.band_id} SS block "
            f"numerology ({sync[0].scs_khz} kHz)"
        )
    return cell


def _check_compliance(cell: CellConfig, jurisdiction: str, allow: bool, notes: list[str]) -> None:
    band = get_band(cell.band_id)
    assignment = ChannelAssignment(
        band_id=cell.band_id,
        arfcn=cell.arfcn,
        bandwidth_mhz=cell.bandwidth_mhz,
        eirp_mw=cell.eirp_mw,
        indoor=cell.indoor,
    )
    try:
        validate_assignment(band, assignment)
        rules = load_regulatory_rules(jurisdiction)
    except ConfigError as exc:
        raise ScenarioError(f"cell: {exc}") from None
    violations = check_regulatory(assignment, rules)
    if violations:
        if not allow:
            raise ScenarioError(
                f"cell violates {jurisdiction} rules: "
                + "; ".join(v.message for v in violations)
            )
        notes.append(
            f"regulatory override active: {'; '.join(v.message for v in violations)}"
        )


def scenario_from_dict(raw: dict, name_hint: str = "scenario") -> Scenario:
    """Build and fully validate a Scenario from parsed YAML content."""
    if not isinstance(raw, dict):
        raise ScenarioError(f"{name_hint}: top level must be a mapping")
    schema = raw.get("schema")
    if schema != SCHEMA_VERSION:
        raise ScenarioError(f"{name_hint}: schema must be {SCHEMA_VERSION}, got {schema!r}")
    notes: list[str] = []
    name = str(raw.get("name", name_hint))
    if "seed" in raw:
        seed = int(raw["seed"])
    else:
        seed = 0
        notes.append("seed defaulted to 0")
    duration_s = int(raw.get("duration_s", 30))
    jurisdiction = str(raw.get("jurisdiction", "AU"))
    allow_noncompliant = bool(raw.get("allow_noncompliant", False))

    cell = _parse_cell(_require(raw, "cell", name))
    _check_compliance(cell, jurisdiction, allow_noncompliant, notes)

    core_raw = _require(raw, "core", name)
    try:
        core = CoreConfig(
            core_subnet=str(core_raw.get("subnet", "192.168.70.128/26")),
            amf_address=str(core_raw.get("amf_address", "192.168.70.132")),
            upf_address=str(core_raw.get("upf_address", "192.168.70.134")),
            ue_pool_cidr=str(core_raw.get("ue_pool", "12.1.1.0/24")),
        )
        subscribers = tuple(
            SubscriberRecord(imsi=str(row["imsi"]), enabled=bool(row.get("enabled", True)))
            for row in core_raw.get("subscribers", [])
        )
    except ConfigError as exc:
        raise ScenarioError(f"core: {exc}") from None
    prior_allocations = int(core_raw.get("prior_allocations", 0))

    nodes: list[NodeConfig] = []
    seen_names: set[str] = set()
    for node_raw in _require(raw, "nodes", name):
        node_name = str(_require(node_raw, "name", "nodes"))
        if node_name in seen_names:
            raise ScenarioError(f"nodes: duplicate node name {node_name!r}")
        seen_names.add(node_name)
        role = str(_require(node_raw, "role", node_name))
        if role not in ("gnb", "ue"):
            raise ScenarioError(f"node {node_name}: role must be 'gnb' or 'ue', got {role!r}")
        try:
            host = get_host(str(_require(node_raw, "host", node_name)))
            sdr = get_sdr(str(_require(node_raw, "sdr", node_name)))
        except ConfigError as exc:
            raise ScenarioError(f"node {node_name}: {exc}") from None
        medium = None
        if role == "ue":
            medium = _parse_medium(_require(node_raw, "medium", f"node {node_name}"), node_name)
        nodes.append(
            NodeConfig(
                name=node_name,
                role=role,
                host=host,
                sdr=sdr,
                imsi=str(node_raw["imsi"]) if "imsi" in node_raw else None,
                gnb=str(node_raw["gnb"]) if "gnb" in node_raw else None,
                medium=medium,
                n3_address=str(node_raw["n3_address"]) if "n3_address" in node_raw else None,
                on_air=bool(node_raw.get("on_air", True)),
                unprovisioned=bool(node_raw.get("unprovisioned", False)),
            )
        )

    gnb_names = {n.name for n in nodes if n.role == "gnb"}
    if not gnb_names:
        raise ScenarioError("nodes: scenario needs at least one gNB")
    provisioned = {s.imsi for s in subscribers}
    for node in nodes:
        if node.role != "ue":
            continue
        if node.imsi is None:
            raise ScenarioError(f"node {node.name}: UE needs an imsi")
        if node.gnb not in gnb_names:
            raise ScenarioError(f"node {node.name}: references unknown gNB {node.gnb!r}")
        if node.imsi not in provisioned and not node.unprovisioned:
            raise ScenarioError(
                f"node {node.name}: IMSI {node.imsi} is not provisioned; mark the node "
                f"'unprovisioned: true' if that is deliberate"
            )

    ue_names = {n.name for n in nodes if n.role == "ue"}
    traffic: list[PingPlan | ThroughputPlan] = []
    for idx, step in enumerate(raw.get("traffic", [])):
        probe = str(_require(step, "probe", f"traffic[{idx}]"))
        if probe == "ping":
            src = str(_require(step, "src", f"traffic[{idx}]"))
            if src not in ue_names:
                raise ScenarioError(f"traffic[{idx}]: ping src {src!r} is not a UE node")
            traffic.append(
                PingPlan(
                    label=str(step.get("label", f"ping-{idx}")),
                    src=src,
                    dst=str(_require(step, "dst", f"traffic[{idx}]")),
                    count=int(step.get("count", 100)),
                    interval_ms=int(step.get("interval_ms", 200)),
                )
            )
        elif probe == "throughput":
            ue = str(_require(step, "ue", f"traffic[{idx}]"))
            if ue not in ue_names:
                raise ScenarioError(f"traffic[{idx}]: throughput ue {ue!r} is not a UE node")
            direction = str(_require(step, "direction", f"traffic[{idx}]")).upper()
            if direction not in ("UL", "DL"):
                raise ScenarioError(f"traffic[{idx}]: direction must be UL or DL")
            traffic.append(
                ThroughputPlan(
                    label=str(step.get("label", f"throughput-{direction.lower()}-{idx}")),
                    ue=ue,
                    direction=direction,
                    duration_s=int(step.get("duration_s", duration_s)),
                )
            )
        else:
            raise ScenarioError(f"traffic[{idx}]: unknown probe {probe!r}")

    ext_raw = raw.get("external_host", {})
    external = ExternalHostConfig(
        address=str(ext_raw.get("address", ExternalHostConfig.address)),
        one_way_delay_us=int(ext_raw.get("one_way_delay_us", ExternalHostConfig.one_way_delay_us)),
        ttl=int(ext_raw.get("ttl", ExternalHostConfig.ttl)),
    )

    try:
        occupancy = ChannelOccupancy(
            [
                Burst(start_us=int(b["start_us"]), end_us=int(b["end_us"]),
                      power_dbm=float(b["power_dbm"]))
                for b in raw.get("occupancy", [])
            ]
        )
    except ConfigError as exc:
        raise ScenarioError(f"occupancy: {exc}") from None

    taps = [str(t) for t in raw.get("taps", [])]
    valid_taps = {f"ue:{n}" for n in ue_names} | {f"n3:{g}" for g in gnb_names} | {"n6"}
    for tap in taps:
        if tap not in valid_taps:
            raise ScenarioError(f"taps: unknown tap {tap!r}; valid: {sorted(valid_taps)}")

    return Scenario(
        name=name,
        seed=seed,
        duration_s=duration_s,
        jurisdiction=jurisdiction,
        cell=cell,
        core=core,
        subscribers=subscribers,
        prior_allocations=prior_allocations,
        nodes=nodes,
        traffic=traffic,
        external=external,
        occupancy=occupancy,
        taps=taps,
        allow_noncompliant=allow_noncompliant,
        notes=notes,
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}: parse error{where}: {exc}") from None
    return scenario_from_dict(raw, name_hint=path.stem)


def bundled_scenario_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"unknown bundled scenario {name!r}; shipped: {', '.join(BUNDLED)}")
    return Path(str(resources.files("nrusim.data") / "scenarios" / f"{name}.yaml"))


def load_bundled(name: str) -> Scenario:
    """One of the scenarios shipped with the package."""
    return load_scenario(bundled_scenario_path(name))
