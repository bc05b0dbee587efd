"""Semantic certificate model, signature schemes and canonical encoding.

Time is always passed in explicitly as an integer number of seconds since a
fixed epoch; nothing in here reads the wall clock.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ed448, ed25519

from .names import NamePattern, NameSet, parse_constraint, parse_subject_name

Instant = int

DAY = 86400
WEEK = 7 * DAY


class SchemeMismatch(ValueError):
    pass


class SignatureScheme(str, enum.Enum):
    ED25519 = "ed25519"
    ED448 = "ed448"


class ResumptionPolicy(str, enum.Enum):
    ALLOW = "allow"
    DISALLOW = "disallow"
    BOUND = "bound"  # resumption only while the presenting credential is unexpired

    @property
    def strictness(self) -> int:
        return _POLICY_STRICTNESS[self]


_POLICY_STRICTNESS = {ResumptionPolicy.ALLOW: 0, ResumptionPolicy.BOUND: 1, ResumptionPolicy.DISALLOW: 2}


class FailureMode(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"


class KeyUsage(str, enum.Enum):
    DIGITAL_SIGNATURE = "digital_signature"
    KEY_CERT_SIGN = "key_cert_sign"


# -- signature schemes ------------------------------------------------------

@dataclass(frozen=True)
class _Backend:
    seed_size: int
    private_cls: Any
    public_cls: Any


_BACKENDS = {
    SignatureScheme.ED25519: _Backend(32, ed25519.Ed25519PrivateKey, ed25519.Ed25519PublicKey),
    SignatureScheme.ED448: _Backend(57, ed448.Ed448PrivateKey, ed448.Ed448PublicKey),
}

_RAW = dict(encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw)


@dataclass(frozen=True)
class PublicKey:
    scheme: SignatureScheme
    data: bytes

    def fingerprint(self) -> str:
        return hashlib.sha256(self.scheme.value.encode() + b":" + self.data).hexdigest()[:16]

    def to_record(self) -> dict:
        return {"scheme": self.scheme.value, "data": self.data.hex()}

    @classmethod
    def from_record(cls, rec: dict) -> "PublicKey":
        return cls(SignatureScheme(rec["scheme"]), bytes.fromhex(rec["data"]))


@dataclass(frozen=True)
class KeyPair:
    scheme: SignatureScheme
    private: bytes = field(repr=False)
    public: PublicKey

    @classmethod
    def from_seed(cls, scheme: SignatureScheme, seed: bytes) -> "KeyPair":
        """Derive a key pair deterministically; the seed is stretched to the scheme's size."""
        backend = _BACKENDS[scheme]
        raw = hashlib.shake_256(b"proxypki-key:" + scheme.value.encode() + b":" + seed).digest(backend.seed_size)
        sk = backend.private_cls.from_private_bytes(raw)
        return cls(scheme, raw, PublicKey(scheme, sk.public_key().public_bytes(**_RAW)))

    @classmethod
    def generate(cls, scheme: SignatureScheme = SignatureScheme.ED25519) -> "KeyPair":
        import os
        return cls.from_seed(scheme, os.urandom(32))

    def sign(self, message: bytes) -> bytes:
        return _BACKENDS[self.scheme].private_cls.from_private_bytes(self.private).sign(message)

    def to_record(self) -> dict:
        return {"scheme": self.scheme.value, "private": self.private.hex(), "public": self.public.data.hex()}

    @classmethod
    def from_record(cls, rec: dict) -> "KeyPair":
        scheme = SignatureScheme(rec["scheme"])
        private = bytes.fromhex(rec["private"])
        sk = _BACKENDS[scheme].private_cls.from_private_bytes(private)
        public = PublicKey(scheme, sk.public_key().public_bytes(**_RAW))
        if public.data.hex() != rec.get("public", public.data.hex()):
            raise ValueError("public key does not match private key")
        return cls(scheme, private, public)


def verify(public_key: PublicKey, message: bytes, signature: bytes, scheme: SignatureScheme) -> bool:
    if public_key.scheme != scheme:
        return False
    backend = _BACKENDS[scheme]
    try:
        backend.public_cls.from_public_bytes(public_key.data).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


# -- canonical encoding -----------------------------------------------------

def canonical_dumps(record: Any) -> bytes:
    """Sorted keys, no insignificant whitespace, UTF-8."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def canonical_loads(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)


# -- certificates -----------------------------------------------------------

@dataclass(frozen=True)
class ValidityPeriod:
    not_before: Instant
    not_after: Instant

    def __post_init__(self):
        if not 0 <= self.not_before < self.not_after:
            raise ValueError(f"empty or negative validity window [{self.not_before}, {self.not_after})")

    def __contains__(self, t: Instant) -> bool:
        return self.not_before <= t < self.not_after

    @property
    def length(self) -> int:
        return self.not_after - self.not_before


@dataclass(frozen=True)
class Extensions:
    is_ca: bool = False
    path_len: Optional[int] = None
    key_usage: frozenset[KeyUsage] = frozenset({KeyUsage.DIGITAL_SIGNATURE})
    name_constraints: Optional[NameSet] = None
    subject_alt_names: tuple[NamePattern, ...] = ()
    delegation_usage: bool = False
    resumption_policy: Optional[ResumptionPolicy] = None
    failure_mode: Optional[FailureMode] = None
    logged: bool = False

    def __post_init__(self):
        if self.path_len is not None and self.path_len < 0:
            raise ValueError("path_len must be non-negative")
        nc = self.name_constraints
        if nc is not None and nc.is_universal:
            raise ValueError("a present name_constraints extension must be finite")

    def to_record(self) -> dict:
        nc = self.name_constraints
        return {
            "basic_constraints": {"is_ca": self.is_ca, "path_len": self.path_len},
            "key_usage": sorted(k.value for k in self.key_usage),
            "name_constraints": None if nc is None else nc.sorted_texts(),
            "subject_alt_names": [str(p) for p in self.subject_alt_names],
            "delegation_usage": self.delegation_usage,
            "resumption_policy": None if self.resumption_policy is None else self.resumption_policy.value,
            "failure_mode": None if self.failure_mode is None else self.failure_mode.value,
            "logged": self.logged,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Extensions":
        bc = rec["basic_constraints"]
        nc = rec["name_constraints"]
        return cls(
            is_ca=bc["is_ca"],
            path_len=bc["path_len"],
            key_usage=frozenset(KeyUsage(k) for k in rec["key_usage"]),
            name_constraints=None if nc is None else NameSet(parse_constraint(t) for t in nc),
            subject_alt_names=tuple(parse_subject_name(t) for t in rec["subject_alt_names"]),
            delegation_usage=rec["delegation_usage"],
            resumption_policy=None if rec["resumption_policy"] is None else ResumptionPolicy(rec["resumption_policy"]),
            failure_mode=None if rec["failure_mode"] is None else FailureMode(rec["failure_mode"]),
            logged=rec["logged"],
        )


@dataclass(frozen=True)
class Certificate:
    """A certificate; ``signature`` is empty until :func:`sign_certificate` fills it in."""

    subject_common_name: NamePattern
    issuer: str
    serial: int
    validity: ValidityPeriod
    public_key: PublicKey
    extensions: Extensions = Extensions()
    signature_scheme: SignatureScheme = SignatureScheme.ED25519
    signature: bytes = field(default=b"", repr=False)

    @property
    def subject(self) -> str:
        """Label other certificates use in their ``issuer`` field to point at this one."""
        return str(self.subject_common_name)

    @property
    def is_ca(self) -> bool:
        return self.extensions.is_ca

    def tbs_record(self) -> dict:
        return {
            "subject_common_name": str(self.subject_common_name),
            "issuer": self.issuer,
            "serial": self.serial,
            "validity": {"not_before": self.validity.not_before, "not_after": self.validity.not_after},
            "public_key": self.public_key.to_record(),
            "extensions": self.extensions.to_record(),
            "signature_scheme": self.signature_scheme.value,
        }

    def fingerprint(self) -> str:
        return hashlib.sha256(canonical_encode(self)).hexdigest()

    @classmethod
    def from_tbs_record(cls, rec: dict, signature: bytes = b"") -> "Certificate":
        v = rec["validity"]
        return cls(
            subject_common_name=parse_subject_name(rec["subject_common_name"]),
            issuer=rec["issuer"],
            serial=rec["serial"],
            validity=ValidityPeriod(v["not_before"], v["not_after"]),
            public_key=PublicKey.from_record(rec["public_key"]),
            extensions=Extensions.from_record(rec["extensions"]),
            signature_scheme=SignatureScheme(rec["signature_scheme"]),
            signature=signature,
        )


def canonical_encode(cert: Certificate) -> bytes:
    """Deterministic byte form of every field except the signature."""
    return canonical_dumps(cert.tbs_record())


def decode_tbs(data: bytes, signature: bytes = b"") -> Certificate:
    return Certificate.from_tbs_record(canonical_loads(data), signature)


def sign_certificate(tbs: Certificate, issuer_key: KeyPair) -> Certificate:
    if issuer_key.scheme != tbs.signature_scheme:
        raise SchemeMismatch(
            f"issuer key is {issuer_key.scheme.value}, certificate declares {tbs.signature_scheme.value}")
    return replace(tbs, signature=issuer_key.sign(canonical_encode(tbs)))


def verify_signature(cert: Certificate, issuer_pk: PublicKey) -> bool:
    return verify(issuer_pk, canonical_encode(cert), cert.signature, cert.signature_scheme)


def within_validity(cert: Certificate, t: Instant) -> bool:
    return t in cert.validity


def chain_expiry(chain) -> Instant:
    """First instant at which some certificate of the chain has expired."""
    return min(c.validity.not_after for c in chain)
