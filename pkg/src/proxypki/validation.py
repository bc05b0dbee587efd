"""Certification-path validation extended to proxy certificates.

A chain is split at its first non-CA certificate. The prefix (the regular
path) gets RFC 5280-style checks against the trust anchors. The suffix (the
proxy path) is validated with the end-entity certificate acting as the trust
anchor: CA bits are ignored, path-length counting restarts at the end-entity
certificate, and the permitted names are narrowed at every step by

    PST_i = PST_{i-1} & NC_i & (SAN_i | CN_i),   PST_0 = SAN_0 | CN_0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .model import Certificate, Instant, verify_signature
from .names import DnsName, NameSet, intersect, is_subset, member, union_san_cn


class Reason(str, enum.Enum):
    NO_END_ENTITY = "NoEndEntity"
    UNTRUSTED_ANCHOR = "UntrustedAnchor"
    ISSUER_MISMATCH = "IssuerMismatch"
    BAD_SIGNATURE = "BadSignature"
    EXPIRED = "Expired"
    NOT_YET_VALID = "NotYetValid"
    CA_BIT_MISSING = "CaBitMissing"
    PATH_LEN_EXCEEDED = "PathLenExceeded"
    NAME_CONSTRAINT_VIOLATION = "NameConstraintViolation"
    EMPTY_PERMITTED_SET = "EmptyPermittedSet"
    NAME_ESCALATION = "NameEscalation"
    PROXY_PATH_LEN_EXCEEDED = "ProxyPathLenExceeded"
    TARGET_NAME_MISMATCH = "TargetNameMismatch"


class NoEndEntity(ValueError):
    pass


@dataclass(frozen=True)
class ValidationOutcome:
    reason: Optional[Reason] = None
    effective_names: NameSet = field(default_factory=NameSet.empty)
    pst_trace: tuple[NameSet, ...] = ()
    path_split: Optional[int] = None
    failed_index: Optional[int] = None  # position in the full chain of the offending certificate

    @property
    def accepted(self) -> bool:
        return self.reason is None

    @property
    def verdict(self) -> str:
        return "Accept" if self.accepted else "Reject"

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": None if self.reason is None else self.reason.value,
            "effective_names": None if self.effective_names.is_universal else self.effective_names.sorted_texts(),
            "pst_trace": [s.sorted_texts() for s in self.pst_trace],
            "path_split": self.path_split,
            "failed_index": self.failed_index,
        }


def split_path(chain: Sequence[Certificate]) -> tuple[list[Certificate], list[Certificate]]:
    for i, cert in enumerate(chain):
        if not cert.is_ca:
            return list(chain[: i + 1]), list(chain[i + 1:])
    raise NoEndEntity("every certificate in the chain is a CA certificate")


def _time_reason(cert: Certificate, t: Instant) -> Optional[Reason]:
    if t < cert.validity.not_before:
        return Reason.NOT_YET_VALID
    if t >= cert.validity.not_after:
        return Reason.EXPIRED
    return None


def validate_regular(regular: Sequence[Certificate], anchors: Iterable[Certificate], t: Instant) -> ValidationOutcome:
    def reject(reason, i):
        return ValidationOutcome(reason, path_split=len(regular) - 1, failed_index=i)

    if not regular:
        return reject(Reason.NO_END_ENTITY, None)

    first = regular[0]
    if not any(a.subject == first.issuer and verify_signature(first, a.public_key) for a in anchors):
        return reject(Reason.UNTRUSTED_ANCHOR, 0)

    permitted = NameSet.universal()
    remaining_ca: Optional[int] = None  # CA certificates still allowed below the current one
    last = len(regular) - 1
    for i, cert in enumerate(regular):
        if i > 0:
            issuer = regular[i - 1]
            if cert.issuer != issuer.subject:
                return reject(Reason.ISSUER_MISMATCH, i)
            if not verify_signature(cert, issuer.public_key):
                return reject(Reason.BAD_SIGNATURE, i)
        reason = _time_reason(cert, t)
        if reason is not None:
            return reject(reason, i)
        if i < last and not cert.is_ca:
            return reject(Reason.CA_BIT_MISSING, i)
        if i > 0 and i < last:
            if remaining_ca is not None:
                if remaining_ca == 0:
                    return reject(Reason.PATH_LEN_EXCEEDED, i)
                remaining_ca -= 1
        if not is_subset(union_san_cn(cert), permitted):
            return reject(Reason.NAME_CONSTRAINT_VIOLATION, i)
        if cert.is_ca and cert.extensions.path_len is not None:
            k = cert.extensions.path_len
            remaining_ca = k if remaining_ca is None else min(remaining_ca, k)
        if cert.extensions.name_constraints is not None:
            permitted = intersect(permitted, cert.extensions.name_constraints)

    return ValidationOutcome(effective_names=union_san_cn(regular[-1]), path_split=last)


def validate_proxy(proxy: Sequence[Certificate], ee: Certificate, t: Instant, *, offset: int = 0) -> ValidationOutcome:
    """Validate the proxy path below ``ee``; ``offset`` is ee's index in the full chain."""
    pst = union_san_cn(ee)
    trace = [pst]
    remaining = ee.extensions.path_len  # restarts at the end-entity certificate; None means unbounded

    def reject(reason, i):
        return ValidationOutcome(reason, pst_trace=tuple(trace), path_split=offset, failed_index=offset + 1 + i)

    issuer = ee
    for i, cert in enumerate(proxy):
        if cert.issuer != issuer.subject:
            return reject(Reason.ISSUER_MISMATCH, i)
        if not verify_signature(cert, issuer.public_key):
            return reject(Reason.BAD_SIGNATURE, i)
        reason = _time_reason(cert, t)
        if reason is not None:
            return reject(reason, i)
        if remaining is not None:
            if remaining == 0:
                return reject(Reason.PROXY_PATH_LEN_EXCEEDED, i)
            remaining -= 1
        allowed = pst
        if cert.extensions.name_constraints is not None:
            allowed = intersect(allowed, cert.extensions.name_constraints)
        if allowed.is_empty():
            return reject(Reason.EMPTY_PERMITTED_SET, i)
        own = union_san_cn(cert)
        if not is_subset(own, allowed):
            return reject(Reason.NAME_ESCALATION, i)
        pst = intersect(allowed, own)
        trace.append(pst)
        # CA bit deliberately not consulted; path_len reuses the RFC 5280 parameter
        if cert.extensions.path_len is not None:
            k = cert.extensions.path_len
            remaining = k if remaining is None else min(remaining, k)
        issuer = cert

    return ValidationOutcome(effective_names=pst, pst_trace=tuple(trace), path_split=offset)


def validate(chain: Sequence[Certificate], anchors: Iterable[Certificate], t: Instant,
             target: DnsName | str) -> ValidationOutcome:
    if isinstance(target, str):
        target = DnsName.parse(target)
    try:
        regular, proxy = split_path(chain)
    except NoEndEntity:
        return ValidationOutcome(Reason.NO_END_ENTITY)
    outcome = validate_regular(regular, list(anchors), t)
    if not outcome.accepted:
        return outcome
    if proxy:
        outcome = validate_proxy(proxy, regular[-1], t, offset=len(regular) - 1)
        if not outcome.accepted:
            return outcome
    if not member(outcome.effective_names, target):
        return ValidationOutcome(Reason.TARGET_NAME_MISMATCH, outcome.effective_names,
                                 outcome.pst_trace, outcome.path_split)
    return outcome
