"""Delegated credentials: short-lived keys signed by an end-entity key.

A credential carries a public key, an expiry expressed relative to the
end-entity certificate's ``not_before``, the signature scheme it may be used
with in the handshake, and a signature by the end-entity key. The signed bytes
also bind the end-entity certificate's fingerprint so a credential cannot be
replayed under another certificate.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import Optional

from .model import (WEEK, Certificate, Instant, KeyPair, KeyUsage, PublicKey, SchemeMismatch, SignatureScheme,
                    canonical_dumps, canonical_encode, verify)
from .documents import DELEGATED_CREDENTIAL, dump_block, parse_blocks

MAX_LIFETIME = WEEK


class DcReason(str, enum.Enum):
    DC_EXPIRED = "DcExpired"
    DC_LIFETIME_TOO_LONG = "DcLifetimeTooLong"
    SCHEME_MISMATCH = "SchemeMismatch"
    BAD_DC_SIGNATURE = "BadDcSignature"
    MISSING_DELEGATION_USAGE = "MissingDelegationUsage"
    MISSING_DIGITAL_SIGNATURE_BIT = "MissingDigitalSignatureBit"


class DcIssueError(Exception):
    pass


class MissingDelegationUsage(DcIssueError):
    pass


class MissingDigitalSignatureBit(DcIssueError):
    pass


class TtlTooLong(DcIssueError):
    pass


class EeExpired(DcIssueError):
    pass


@dataclass(frozen=True)
class DelegatedCredential:
    public_key: PublicKey
    relative_ttl: int
    handshake_scheme: SignatureScheme
    signature_scheme: SignatureScheme
    signature: bytes

    def __post_init__(self):
        if self.relative_ttl <= 0:
            raise ValueError("relative_ttl must be positive")

    def expiry(self, ee: Certificate) -> Instant:
        return ee.validity.not_before + self.relative_ttl


def ee_fingerprint(ee: Certificate) -> str:
    return hashlib.sha256(canonical_encode(ee)).hexdigest()


def binding_record(ee: Certificate, public_key: PublicKey, relative_ttl: int,
                   handshake_scheme: SignatureScheme) -> dict:
    return {
        "ee_fingerprint": ee_fingerprint(ee),
        "public_key": public_key.to_record(),
        "relative_ttl": relative_ttl,
        "handshake_scheme": handshake_scheme.value,
    }


def _extension_problem(ee: Certificate) -> Optional[DcReason]:
    if not ee.extensions.delegation_usage:
        return DcReason.MISSING_DELEGATION_USAGE
    if KeyUsage.DIGITAL_SIGNATURE not in ee.extensions.key_usage:
        return DcReason.MISSING_DIGITAL_SIGNATURE_BIT
    return None


def issue_dc(ee: Certificate, ee_signer, dc_pub: PublicKey, ttl_from_now: int,
             scheme: SignatureScheme, now: Instant) -> DelegatedCredential:
    problem = _extension_problem(ee)
    if problem is DcReason.MISSING_DELEGATION_USAGE:
        raise MissingDelegationUsage("end-entity certificate lacks the DelegationUsage extension")
    if problem is DcReason.MISSING_DIGITAL_SIGNATURE_BIT:
        raise MissingDigitalSignatureBit("end-entity certificate lacks the digitalSignature key usage")
    if now not in ee.validity:
        raise EeExpired(f"end-entity certificate is not valid at {now}")
    if ttl_from_now <= 0:
        raise ValueError("ttl must be positive")
    if ttl_from_now > MAX_LIFETIME:
        raise TtlTooLong(f"ttl {ttl_from_now}s exceeds {MAX_LIFETIME}s")
    if dc_pub.scheme != scheme:
        raise SchemeMismatch(f"credential key is {dc_pub.scheme.value}, handshake scheme is {scheme.value}")
    if isinstance(ee_signer, KeyPair):
        signer_scheme, signer_pub = ee_signer.scheme, ee_signer.public
    else:
        signer_scheme, signer_pub = ee_signer.scheme, ee_signer.public_key
    if signer_pub != ee.public_key:
        raise DcIssueError("signer does not hold the end-entity key")
    relative_ttl = now + ttl_from_now - ee.validity.not_before
    message = canonical_dumps(binding_record(ee, dc_pub, relative_ttl, scheme))
    return DelegatedCredential(dc_pub, relative_ttl, scheme, signer_scheme, ee_signer.sign(message))


@dataclass(frozen=True)
class DcVerdict:
    reason: Optional[DcReason] = None

    @property
    def accepted(self) -> bool:
        return self.reason is None


def validate_dc(dc: DelegatedCredential, ee: Certificate, t: Instant,
                handshake_scheme: SignatureScheme) -> DcVerdict:
    expiry = dc.expiry(ee)
    if not ee.validity.not_before <= t < expiry:
        return DcVerdict(DcReason.DC_EXPIRED)
    # remaining lifetime as seen at t; this caps the accepted window at 7 days
    if expiry - t > MAX_LIFETIME:
        return DcVerdict(DcReason.DC_LIFETIME_TOO_LONG)
    if handshake_scheme != dc.handshake_scheme:
        return DcVerdict(DcReason.SCHEME_MISMATCH)
    problem = _extension_problem(ee)
    if problem is not None:
        return DcVerdict(problem)
    message = canonical_dumps(binding_record(ee, dc.public_key, dc.relative_ttl, dc.handshake_scheme))
    if not verify(ee.public_key, message, dc.signature, dc.signature_scheme):
        return DcVerdict(DcReason.BAD_DC_SIGNATURE)
    return DcVerdict()


class Served(str, enum.Enum):
    DELEGATED_CREDENTIAL = "DcCredential"
    FULL_CHAIN_ONLY = "FullChainOnly"


def negotiate(client_sent_dc_extension: bool, server_has_dc: bool) -> Served:
    if client_sent_dc_extension and server_has_dc:
        return Served.DELEGATED_CREDENTIAL
    return Served.FULL_CHAIN_ONLY


# -- .pdc documents ----------------------------------------------------------

def dc_to_block(dc: DelegatedCredential, ee: Certificate) -> str:
    record = binding_record(ee, dc.public_key, dc.relative_ttl, dc.handshake_scheme)
    record["signature_scheme"] = dc.signature_scheme.value
    return dump_block(DELEGATED_CREDENTIAL, record, dc.signature)


def dc_from_block(text: str) -> tuple[DelegatedCredential, str]:
    """Returns the credential and the end-entity fingerprint recorded next to it."""
    (rec, sig), = parse_blocks(text, DELEGATED_CREDENTIAL)
    dc = DelegatedCredential(
        public_key=PublicKey.from_record(rec["public_key"]),
        relative_ttl=rec["relative_ttl"],
        handshake_scheme=SignatureScheme(rec["handshake_scheme"]),
        signature_scheme=SignatureScheme(rec["signature_scheme"]),
        signature=sig or b"",
    )
    return dc, rec["ee_fingerprint"]
