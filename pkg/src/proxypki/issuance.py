"""Proxy CSRs, proxy-certificate issuance and the certificate server lease.

The certificate server re-signs the same CSR on a fixed schedule; only the
validity window and serial change between emissions. Stopping the schedule
(terminating the lease) is the revocation mechanism: the last certificate
simply runs out.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol

from .model import (Certificate, Extensions, FailureMode, Instant, KeyPair, PublicKey, ResumptionPolicy,
                    SignatureScheme, ValidityPeriod, canonical_encode)
from .names import NameSet, intersect, is_subset, parse_subject_name, union_san_cn


class IssuanceError(Exception):
    pass


class NameEscalation(IssuanceError):
    pass


class SignerUnavailable(IssuanceError):
    pass


@dataclass(frozen=True)
class ProxyCSR:
    public_key: PublicKey
    requested_names: NameSet
    resumption_policy: Optional[ResumptionPolicy] = None
    failure_mode: Optional[FailureMode] = None
    path_len: Optional[int] = None

    def __post_init__(self):
        if self.requested_names.is_universal or self.requested_names.is_empty():
            raise ValueError("a proxy CSR must request a finite, non-empty set of names")

    def to_record(self) -> dict:
        return {
            "public_key": self.public_key.to_record(),
            "requested_names": self.requested_names.sorted_texts(),
            "resumption_policy": None if self.resumption_policy is None else self.resumption_policy.value,
            "failure_mode": None if self.failure_mode is None else self.failure_mode.value,
            "path_len": self.path_len,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ProxyCSR":
        return cls(
            public_key=PublicKey.from_record(rec["public_key"]),
            requested_names=NameSet(parse_subject_name(t) for t in rec["requested_names"]),
            resumption_policy=None if rec["resumption_policy"] is None else ResumptionPolicy(rec["resumption_policy"]),
            failure_mode=None if rec["failure_mode"] is None else FailureMode(rec["failure_mode"]),
            path_len=rec["path_len"],
        )


@dataclass(frozen=True)
class IssuanceSchedule:
    start: Instant
    period: int
    validity: int

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.validity <= self.period:
            raise ValueError("validity must exceed the period so consecutive certificates overlap")

    def to_record(self) -> dict:
        return {"start": self.start, "period": self.period, "validity": self.validity}

    @classmethod
    def from_record(cls, rec: dict) -> "IssuanceSchedule":
        return cls(rec["start"], rec["period"], rec["validity"])


def window_of(schedule: IssuanceSchedule, k: int) -> ValidityPeriod:
    if k < 0:
        raise ValueError("k must be non-negative")
    not_before = schedule.start + k * schedule.period
    return ValidityPeriod(not_before, not_before + schedule.validity)


class Signer(Protocol):
    scheme: SignatureScheme
    public_key: PublicKey

    def sign(self, message: bytes) -> bytes: ...


class KeySigner:
    """Signs directly with an in-memory key."""

    def __init__(self, key: KeyPair):
        self._key = key
        self.scheme = key.scheme
        self.public_key = key.public

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)


class AirGappedSigner:
    """A signing device that only answers signing requests and never releases its key.

    It can be taken offline, in which case issuance fails with SignerUnavailable.
    """

    def __init__(self, key: KeyPair):
        self.__key = key
        self.scheme = key.scheme
        self.public_key = key.public
        self.online = True
        self.requests = 0

    def sign(self, message: bytes) -> bytes:
        if not self.online:
            raise SignerUnavailable("signing device is offline")
        self.requests += 1
        return self.__key.sign(message)


def _as_signer(signer) -> Signer:
    return KeySigner(signer) if isinstance(signer, KeyPair) else signer


def permitted_names(parent: Certificate) -> NameSet:
    names = union_san_cn(parent)
    if parent.extensions.name_constraints is not None:
        names = intersect(names, parent.extensions.name_constraints)
    return names


def issue_proxy(parent: Certificate, signer, csr: ProxyCSR, window: ValidityPeriod, serial: int = 1) -> Certificate:
    signer = _as_signer(signer)
    if signer.public_key != parent.public_key:
        raise SignerUnavailable("signer does not hold the parent certificate's key")
    if not is_subset(csr.requested_names, permitted_names(parent)):
        raise NameEscalation(
            f"requested {csr.requested_names} exceeds the parent's permitted names {permitted_names(parent)}")
    names = sorted(csr.requested_names.patterns, key=str)
    tbs = Certificate(
        subject_common_name=names[0],
        issuer=parent.subject,
        serial=serial,
        validity=window,
        public_key=csr.public_key,
        extensions=Extensions(
            is_ca=False,
            path_len=csr.path_len,
            subject_alt_names=tuple(names),
            resumption_policy=csr.resumption_policy,
            failure_mode=csr.failure_mode,
        ),
        signature_scheme=signer.scheme,
    )
    return replace(tbs, signature=signer.sign(canonical_encode(tbs)))


class Lease(str, enum.Enum):
    ACTIVE = "active"
    TERMINATED = "terminated"


@dataclass
class CertificateServer:
    parent_cert: Certificate
    signer: object
    schedule: IssuanceSchedule
    active_csr: ProxyCSR
    lease: Lease = Lease.ACTIVE
    issued_count: int = 0
    issued: list[Certificate] = field(default_factory=list)
    first_serial: int = 1

    def __post_init__(self):
        self.signer = _as_signer(self.signer)
        if not is_subset(self.active_csr.requested_names, permitted_names(self.parent_cert)):
            raise NameEscalation("initial CSR requests names outside the parent's permitted set")

    def tick(self, t: Instant) -> Optional[Certificate]:
        if self.lease is not Lease.ACTIVE:
            return None
        if t < self.schedule.start + self.issued_count * self.schedule.period:
            return None
        cert = issue_proxy(self.parent_cert, self.signer, self.active_csr,
                           window_of(self.schedule, self.issued_count),
                           serial=self.first_serial + self.issued_count)
        self.issued_count += 1
        self.issued.append(cert)
        return cert

    def terminate_lease(self) -> None:
        self.lease = Lease.TERMINATED

    def rollover(self, new_csr: ProxyCSR) -> None:
        if not is_subset(new_csr.requested_names, permitted_names(self.parent_cert)):
            raise NameEscalation(f"rollover CSR requests {new_csr.requested_names} outside the parent's names")
        self.active_csr = new_csr

    def latest(self) -> Optional[Certificate]:
        return self.issued[-1] if self.issued else None

    def current(self, t: Instant) -> Optional[Certificate]:
        """Pull-model retrieval: the newest issued certificate whose window contains ``t``."""
        for cert in reversed(self.issued):
            if t in cert.validity:
                return cert
        return None

    @property
    def last_not_after(self) -> Optional[Instant]:
        return self.issued[-1].validity.not_after if self.issued else None


# module-level spellings of the server operations
def tick(server: CertificateServer, t: Instant) -> Optional[Certificate]:
    return server.tick(t)


def terminate_lease(server: CertificateServer) -> None:
    server.terminate_lease()


def rollover(server: CertificateServer, new_csr: ProxyCSR) -> None:
    server.rollover(new_csr)
