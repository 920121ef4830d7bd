"""Minimal 5G core control plane.

Registration (the AMF role) reduces to an enabled-IMSI allowlist: the
subscriber store stands in for the UDR/AUSF/UDM chain, which this model
does not cryptographically reproduce.  Session management (the SMF role)
allocates UE addresses lowest-free-first from a configurable pool and
hands out tunnel endpoint identifiers from a monotonic counter so runs
are deterministic.
"""

from __future__ import annotations

import ipaddress
import itertools
import logging
from dataclasses import dataclass

from .errors import AllocationError, ConfigError, StateError

log = logging.getLogger(__name__)

IMSI_DIGITS = 15


@dataclass(frozen=True)
class SubscriberRecord:
    imsi: str
    enabled: bool = True

    def __post_init__(self):
        if len(self.imsi) != IMSI_DIGITS or not self.imsi.isdigit():
            raise ConfigError(f"IMSI must be {IMSI_DIGITS} decimal digits, got {self.imsi!r}")


@dataclass(frozen=True)
class RegistrationResult:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


REJECT_MALFORMED = "malformed"
REJECT_UNKNOWN = "unknown-subscriber"
REJECT_DISABLED = "subscriber-disabled"


@dataclass
class PduSession:
    """An authorised data path: UE address plus its two tunnel endpoints.

    ``interface`` is the UE-side virtual interface the address gets bound
    to (the first tunnel on a UE host comes up as oaitun_ue1).
    """

    ue_id: str
    ip: str
    teid_uplink: int
    teid_downlink: int
    state: str = "ACTIVE"
    interface: str = "oaitun_ue1"

    @property
    def active(self) -> bool:
        return self.state == "ACTIVE"


class IpPool:
    """Host-address pool over one IPv4 subnet; first host is the gateway."""

    def __init__(self, cidr: str):
        try:
            self.network = ipaddress.IPv4Network(cidr)
        except ValueError as exc:
            raise ConfigError(f"bad pool CIDR {cidr!r}: {exc}") from None
        hosts = list(self.network.hosts())
        if len(hosts) < 2:
            raise ConfigError(f"pool {cidr} too small: needs a gateway plus at least one host")
        self.gateway = hosts[0]
        self._hosts = hosts[1:]
        self._allocated: set[ipaddress.IPv4Address] = set()

    @property
    def cidr(self) -> str:
        return str(self.network)

    @property
    def capacity(self) -> int:
        """Allocatable host count (gateway excluded)."""
        return len(self._hosts)

    @property
    def allocated_count(self) -> int:
        return len(self._allocated)

    @property
    def free_count(self) -> int:
        return self.capacity - self.allocated_count

    def allocate(self) -> str:
        """Lowest free host address above the gateway."""
        for host in self._hosts:
            if host not in self._allocated:
                self._allocated.add(host)
                return str(host)
        raise AllocationError(f"pool {self.cidr} exhausted ({self.capacity} hosts allocated)")

    def release(self, ip: str) -> None:
        addr = ipaddress.IPv4Address(ip)
        self._allocated.discard(addr)

    def __contains__(self, ip: str) -> bool:
        return ipaddress.IPv4Address(ip) in self.network


@dataclass(frozen=True)
class CoreConfig:
    """Addressing of the core-network virtual subnet and the UE pool."""

    core_subnet: str = "192.168.70.128/26"
    amf_address: str = "192.168.70.132"
    upf_address: str = "192.168.70.134"
    ue_pool_cidr: str = "12.1.1.0/24"

    def __post_init__(self):
        subnet = ipaddress.IPv4Network(self.core_subnet)
        for label, addr in (("AMF", self.amf_address), ("UPF", self.upf_address)):
            if ipaddress.IPv4Address(addr) not in subnet:
                raise ConfigError(f"{label} address {addr} not inside core subnet {self.core_subnet}")


class CoreNetwork:
    """Subscriber store, registration state, and PDU session bookkeeping."""

    def __init__(
        self,
        config: CoreConfig | None = None,
        subscribers: tuple[SubscriberRecord, ...] | list[SubscriberRecord] = (),
        teid_start: int = 1,
    ):
        self.config = config or CoreConfig()
        self.subscribers: dict[str, SubscriberRecord] = {}
        for record in subscribers:
            if record.imsi in self.subscribers:
                raise ConfigError(f"duplicate IMSI {record.imsi} in subscriber store")
            self.subscribers[record.imsi] = record
        self.pool = IpPool(self.config.ue_pool_cidr)
        self._teids = itertools.count(teid_start)
        self._registered: dict[str, str] = {}  # ue_id -> imsi
        self.sessions: dict[str, PduSession] = {}  # ue_id -> session

    # -- registration (AMF role) -------------------------------------------

    def register_ue(self, imsi: str, ue_id: str | None = None) -> RegistrationResult:
        """Admit a UE by IMSI; re-registration replaces the prior entry."""
        ue_id = ue_id if ue_id is not None else imsi
        if len(imsi) != IMSI_DIGITS or not imsi.isdigit():
            return RegistrationResult(False, REJECT_MALFORMED)
        record = self.subscribers.get(imsi)
        if record is None:
            return RegistrationResult(False, REJECT_UNKNOWN)
        if not record.enabled:
            return RegistrationResult(False, REJECT_DISABLED)
        self._registered[ue_id] = imsi
        return RegistrationResult(True)

    def is_registered(self, ue_id: str) -> bool:
        return ue_id in self._registered

    # -- session management (SMF role) --------------------------------------

    def establish_pdu_session(self, ue_id: str) -> PduSession:
        """Allocate an address and fresh TEIDs for a registered UE."""
        if ue_id not in self._registered:
            raise StateError(f"UE {ue_id!r} must register before establishing a session")
        if ue_id in self.sessions and self.sessions[ue_id].active:
            raise StateError(f"UE {ue_id!r} already has an active session")
        ip = self.pool.allocate()
        session = PduSession(
            ue_id=ue_id,
            ip=ip,
            teid_uplink=next(self._teids),
            teid_downlink=next(self._teids),
        )
        self.sessions[ue_id] = session
        return session

    def release_session(self, session: PduSession) -> PduSession:
        """Return the address to the pool and retire the TEIDs; idempotent."""
        if not session.active:
            log.warning("release of already-released session for UE %s ignored", session.ue_id)
            return session
        self.pool.release(session.ip)
        session.state = "RELEASED"
        self.sessions.pop(session.ue_id, None)
        return session

    def reconfigure_pool(self, cidr: str) -> CoreConfig:
        """Swap the UE pool; refused while any session is active."""
        active = [s for s in self.sessions.values() if s.active]
        if active:
            raise StateError(f"cannot reconfigure pool with {len(active)} active session(s)")
        if cidr == self.pool.cidr:
            return self.config
        self.pool = IpPool(cidr)
        self.config = CoreConfig(
            core_subnet=self.config.core_subnet,
            amf_address=self.config.amf_address,
            upf_address=self.config.upf_address,
            ue_pool_cidr=cidr,
        )
        return self.config

    # -- queries -------------------------------------------------------------

    def active_sessions(self) -> list[PduSession]:
        return [s for s in self.sessions.values() if s.active]

    def session_by_ip(self, ip: str) -> PduSession | None:
        for session in self.sessions.values():
            if session.active and session.ip == ip:
                return session
        return None
