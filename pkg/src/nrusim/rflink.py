"""Radio link budget and SDR/host sampling-capacity model.

The link budget works entirely in dB: received power is transmit power
minus the configured digital attenuation minus the medium loss.  The
capacity model expresses the one hard constraint the hardware imposes on
an SDR deployment: the host must drain the sample stream the radio
produces, and a host that cannot keeps the control plane alive while bulk
data dies.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from importlib import resources
from typing import Union

import yaml

from .errors import ConfigError, DomainError

# Digital attenuation applied per unit of the attenuation-factor setting.
ATT_DB_PER_UNIT = 1.0
# Coax loss at 5 GHz, per metre.
CABLE_LOSS_DB_PER_M = 1.0
# Log-distance path-loss exponent for short indoor links.
PATH_LOSS_EXPONENT = 2.0
# Sustained sample-drop fraction above which bulk traffic cannot survive.
VIABILITY_DROP_THRESHOLD = 0.001


@dataclass(frozen=True)
class SdrModel:
    """An SDR board: usable RF bandwidth and its host interface."""

    name: str
    max_bandwidth_mhz: float
    interface: str  # "usb3" | "ethernet"

    def __post_init__(self):
        if self.max_bandwidth_mhz <= 0:
            raise ConfigError(f"SDR {self.name}: max_bandwidth must be positive")
        if self.interface not in ("usb3", "ethernet"):
            raise ConfigError(f"SDR {self.name}: unknown interface {self.interface!r}")


@dataclass(frozen=True)
class HostModel:
    """A compute host: sample-rate capacity and co-located core overhead.

    ``added_latency_us`` is the extra one-way processing delay a slower
    host contributes to each packet traversal.
    """

    name: str
    capacity_msps: float
    colocated_core_load_msps: float = 0.0
    added_latency_us: int = 0

    def __post_init__(self):
        if self.capacity_msps <= 0:
            raise ConfigError(f"host {self.name}: capacity must be positive")
        if self.colocated_core_load_msps < 0:
            raise ConfigError(f"host {self.name}: core load cannot be negative")


@dataclass(frozen=True)
class OverAir:
    """Free-air link over a given distance."""

    distance_m: float

    def __post_init__(self):
        if self.distance_m <= 0:
            raise DomainError(f"over-air distance must be positive, got {self.distance_m}")


@dataclass(frozen=True)
class Cable:
    """Direct coax link, optionally through a fixed attenuator."""

    length_cm: float
    attenuator_db: float = 0.0

    def __post_init__(self):
        if self.length_cm <= 0:
            raise DomainError(f"cable length must be positive, got {self.length_cm}")
        if self.attenuator_db < 0:
            raise DomainError("attenuator cannot have negative loss")


LinkMedium = Union[OverAir, Cable]


@dataclass(frozen=True)
class RsrpReport:
    rsrp_dbm: float
    attenuation_factor: float

    def __post_init__(self):
        if not math.isfinite(self.rsrp_dbm):
            raise DomainError("RSRP must be finite")


def free_space_loss_db(distance_m: float, carrier_mhz: float) -> float:
    """Free-space loss: 20 log10(d_km) + 20 log10(f_MHz) + 32.44."""
    if distance_m <= 0:
        raise DomainError("distance must be positive")
    return 20 * math.log10(distance_m / 1000) + 20 * math.log10(carrier_mhz) + 32.44


def medium_loss_db(medium: LinkMedium, carrier_mhz: float) -> float:
    """Total propagation loss of the link medium in dB."""
    if isinstance(medium, Cable):
        return medium.attenuator_db + CABLE_LOSS_DB_PER_M * medium.length_cm / 100
    if isinstance(medium, OverAir):
        # Log-distance model anchored at the 1 m free-space loss.
        anchor = free_space_loss_db(1.0, carrier_mhz)
        return anchor + 10 * PATH_LOSS_EXPONENT * math.log10(medium.distance_m)
    raise DomainError(f"unknown medium {medium!r}")


def compute_rsrp(
    tx_power_dbm: float,
    attenuation_factor: float,
    medium: LinkMedium,
    carrier_mhz: float = 5250.0,
    db_per_unit: float = ATT_DB_PER_UNIT,
) -> float:
    """Received power after digital attenuation and medium loss.

    Strictly decreasing in the attenuation factor and in every medium
    loss term.
    """
    return tx_power_dbm - attenuation_factor * db_per_unit - medium_loss_db(medium, carrier_mhz)


def required_sampling_rate(bandwidth_mhz: float) -> float:
    """Host-side sample rate (MSPS) needed for a channel bandwidth (MHz)."""
    if bandwidth_mhz <= 0:
        raise DomainError("bandwidth must be positive")
    return bandwidth_mhz * 1.0


def sample_drop_fraction(host: HostModel, required_msps: float) -> float:
    """Fraction of samples the host drops at the required stream rate.

    Zero while the host has headroom; otherwise the deficit relative to
    the required rate.  Rates are quantised to 1 ksps internally so the
    arithmetic is exact.
    """
    if required_msps <= 0:
        raise DomainError("required sample rate must be positive")
    capacity = round(host.capacity_msps * 1000)
    load = round(host.colocated_core_load_msps * 1000)
    required = round(required_msps * 1000)
    headroom = capacity - load
    if headroom >= required:
        return 0.0
    return min(1.0, (required - headroom) / required)


def link_viable(drop_fraction: float, threshold: float = VIABILITY_DROP_THRESHOLD) -> bool:
    """Whether a link sustains bulk data.

    A non-viable link still carries short control exchanges (ICMP and
    signalling) but its bulk throughput collapses to zero: sustained
    sample loss breaks radio synchronisation faster than small packets
    can notice.
    """
    if not 0 <= drop_fraction <= 1:
        raise DomainError(f"drop fraction must lie in [0, 1], got {drop_fraction}")
    return drop_fraction <= threshold


@functools.lru_cache(maxsize=1)
def load_hardware_profiles() -> tuple[dict[str, HostModel], dict[str, SdrModel]]:
    """(hosts, sdrs) shipped with the package, keyed by profile name."""
    path = resources.files("nrusim.data") / "hardware.yaml"
    with path.open("r", encoding="utf-8") as handle:
        raw = yaml.safe_load(handle)
    hosts = {
        name: HostModel(
            name=name,
            capacity_msps=float(node["capacity_msps"]),
            colocated_core_load_msps=float(node.get("colocated_core_load_msps", 0.0)),
            added_latency_us=int(node.get("added_latency_us", 0)),
        )
        for name, node in raw["hosts"].items()
    }
    sdrs = {
        name: SdrModel(
            name=name,
            max_bandwidth_mhz=float(node["max_bandwidth_mhz"]),
            interface=str(node["interface"]),
        )
        for name, node in raw["sdrs"].items()
    }
    return hosts, sdrs


def get_host(name: str) -> HostModel:
    hosts, _ = load_hardware_profiles()
    try:
        return hosts[name]
    except KeyError:
        raise ConfigError(f"unknown host profile {name!r}; shipped: {', '.join(sorted(hosts))}") from None


def get_sdr(name: str) -> SdrModel:
    _, sdrs = load_hardware_profiles()
    try:
        return sdrs[name]
    except KeyError:
        raise ConfigError(f"unknown SDR profile {name!r}; shipped: {', '.join(sorted(sdrs))}") from None
