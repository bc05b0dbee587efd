"""Text documents for certificates, keys, CSRs, schedules and delegated credentials.

Every document is a block::

    -----BEGIN PROXYPKI <KIND>-----
    <canonical record, one line>
    signature: <hex>            (signed kinds only)
    -----END PROXYPKI <KIND>-----

Files may hold several blocks back to back; a chain file lists certificates
trust-anchor-adjacent first.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable

from .model import Certificate, KeyPair, canonical_dumps, canonical_loads

CERTIFICATE = "CERTIFICATE"
KEY = "KEY"
CSR = "CSR"
SCHEDULE = "SCHEDULE"
DELEGATED_CREDENTIAL = "DELEGATED CREDENTIAL"

_BLOCK = re.compile(
    r"-----BEGIN PROXYPKI (?P<kind>[A-Z ]+)-----\n(?P<body>.*?)\n-----END PROXYPKI (?P=kind)-----",
    re.DOTALL,
)


class DocumentError(ValueError):
    pass


def dump_block(kind: str, record: dict, signature: bytes | None = None) -> str:
    lines = [f"-----BEGIN PROXYPKI {kind}-----", canonical_dumps(record).decode("utf-8")]
    if signature is not None:
        lines.append(f"signature: {signature.hex()}")
    lines.append(f"-----END PROXYPKI {kind}-----")
    return "\n".join(lines) + "\n"


def parse_blocks(text: str, kind: str | None = None) -> list[tuple[dict, bytes | None]]:
    out = []
    for m in _BLOCK.finditer(text):
        if kind is not None and m.group("kind") != kind:
            raise DocumentError(f"expected {kind} block, found {m.group('kind')}")
        lines = m.group("body").split("\n")
        try:
            record = canonical_loads(lines[0])
        except ValueError as exc:
            raise DocumentError(f"malformed record in {m.group('kind')} block: {exc}") from None
        signature = None
        if len(lines) > 1:
            if len(lines) != 2 or not lines[1].startswith("signature: "):
                raise DocumentError("unexpected trailing lines in block")
            signature = bytes.fromhex(lines[1][len("signature: "):])
        out.append((record, signature))
    if not out:
        raise DocumentError("no PROXYPKI blocks found")
    return out


# -- certificates --------------------------------------------------------------

def dump_certificate(cert: Certificate) -> str:
    return dump_block(CERTIFICATE, cert.tbs_record(), cert.signature)


def dump_chain(certs: Iterable[Certificate]) -> str:
    return "".join(dump_certificate(c) for c in certs)


def load_chain_text(text: str) -> list[Certificate]:
    try:
        return [Certificate.from_tbs_record(rec, sig or b"") for rec, sig in parse_blocks(text, CERTIFICATE)]
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed certificate record: {exc}") from None


def load_chain(path) -> list[Certificate]:
    return load_chain_text(Path(path).read_text())


def load_certificates(paths) -> list[Certificate]:
    """Load certificates from files and directories (``*.pcert`` inside directories)."""
    certs = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for f in sorted(p.glob("*.pcert")):
                certs.extend(load_chain(f))
        else:
            certs.extend(load_chain(p))
    return certs


# -- keys ----------------------------------------------------------------------

def dump_key(key: KeyPair) -> str:
    return dump_block(KEY, key.to_record())


def load_key(path) -> KeyPair:
    (record, _), = parse_blocks(Path(path).read_text(), KEY)
    return KeyPair.from_record(record)


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
