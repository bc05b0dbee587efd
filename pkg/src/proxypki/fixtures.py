"""Deterministic generation of the test PKI.

Every key is derived from the fixture seed and a label (see
:meth:`proxypki.model.KeyPair.from_seed`), and Ed25519/Ed448 signatures are
deterministic, so the same seed and topology always produce byte-identical
files. Besides keys, certificates, CSRs and delegated credentials, the output
contains ``manifest.json`` listing every chain with the verdict it must get,
and scenario scripts for the resumption simulator.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .credentials import dc_to_block, issue_dc
from .documents import SCHEDULE, CSR, dump_block, dump_chain, dump_key, write_text
from .issuance import IssuanceSchedule, ProxyCSR, issue_proxy
from .model import (DAY, Certificate, Extensions, KeyPair, KeyUsage, ResumptionPolicy, SignatureScheme,
                    ValidityPeriod, canonical_dumps, sign_certificate)
from .names import NameSet, parse_constraint, parse_subject_name

YEAR = 365 * DAY
HOUR = 3600
DEFAULT_AT = 1000

SHAPES = ("regular", "name-constrained", "short-lived", "proxy", "delegated-credential", "negative", "scenarios")


class MalformedSpec(ValueError):
    pass


@dataclass(frozen=True)
class FixtureSpec:
    seed: int = 1
    topology: tuple[str, ...] = SHAPES

    def __post_init__(self):
        if self.seed < 0:
            raise MalformedSpec("seed must be non-negative")
        if not self.topology:
            raise MalformedSpec("topology is empty")
        unknown = [s for s in self.topology if s not in SHAPES]
        if unknown:
            raise MalformedSpec(f"unknown shapes: {unknown}")
        if len(set(self.topology)) != len(self.topology):
            raise MalformedSpec("duplicate shapes in topology")


@dataclass(frozen=True)
class ChainCase:
    name: str
    chain: str
    target: str
    at: int
    verdict: str
    reason: Optional[str] = None
    effective: Optional[tuple[str, ...]] = None

    def to_record(self) -> dict:
        return {"name": self.name, "chain": self.chain, "target": self.target, "at": self.at,
                "verdict": self.verdict, "reason": self.reason,
                "effective": None if self.effective is None else list(self.effective)}


class _Builder:
    def __init__(self, seed: int):
        self.seed = seed
        self.files: dict[str, str] = {}
        self.keys: dict[str, KeyPair] = {}
        self.cases: list[ChainCase] = []
        self.dc_cases: list[dict] = []

    def key(self, label: str, scheme: SignatureScheme = SignatureScheme.ED25519) -> KeyPair:
        if label not in self.keys:
            self.keys[label] = KeyPair.from_seed(scheme, f"{self.seed}:{label}".encode())
            self.files[f"keys/{label}.pkey"] = dump_key(self.keys[label])
        return self.keys[label]

    def cert(self, cn: str, key_label: str, issuer: Optional[Certificate], issuer_key: Optional[str],
             window: tuple[int, int], serial: int, **ext) -> Certificate:
        names = ext.pop("san", ())
        nc = ext.pop("nc", None)
        extensions = Extensions(
            subject_alt_names=tuple(parse_subject_name(n) for n in names),
            name_constraints=None if nc is None else NameSet(parse_constraint(c) for c in nc),
            **ext,
        )
        signer = self.key(issuer_key or key_label)
        tbs = Certificate(
            subject_common_name=parse_subject_name(cn),
            issuer=cn if issuer is None else issuer.subject,
            serial=serial,
            validity=ValidityPeriod(*window),
            public_key=self.key(key_label).public,
            extensions=extensions,
            signature_scheme=signer.scheme,
        )
        return sign_certificate(tbs, signer)

    def ca(self, cn, key_label, issuer, issuer_key, serial, **ext):
        ext.setdefault("key_usage", frozenset({KeyUsage.KEY_CERT_SIGN, KeyUsage.DIGITAL_SIGNATURE}))
        return self.cert(cn, key_label, issuer, issuer_key, (0, 10 * YEAR), serial, is_ca=True, **ext)

    def chain(self, name: str, certs: list[Certificate]) -> str:
        path = f"chains/{name}.pcert"
        self.files[path] = dump_chain(certs)
        return path

    def case(self, name, chain_path, target, verdict, reason=None, effective=None, at=DEFAULT_AT):
        self.cases.append(ChainCase(name, chain_path, target, at, verdict, reason,
                                    None if effective is None else tuple(effective)))


def _build(spec: FixtureSpec) -> dict[str, str]:
    b = _Builder(spec.seed)
    shapes = set(spec.topology)

    root = b.ca("root.pki.test", "root", None, None, 1)
    b.files["anchors/root.pcert"] = dump_chain([root])
    ica = b.ca("ca.pki.test", "ica", root, "root", 2)
    b.files["certs/ica.pcert"] = dump_chain([ica])

    # end-entity certificates shared by several shapes
    ee_www = b.cert("www.example.com", "ee-www", ica, "ica", (0, 90 * DAY), 10)
    ee_wild = b.cert("*.example.com", "ee-wild", ica, "ica", (0, 90 * DAY), 11)
    b.files["certs/ee-wild.pcert"] = dump_chain([ee_wild])
    base_wild = b.chain("ee-wild", [ica, ee_wild])

    if "regular" in shapes:
        p = b.chain("regular", [ica, ee_www])
        b.case("regular-accept", p, "www.example.com", "Accept", effective=["www.example.com"])
        b.case("regular-wrong-target", p, "mail.example.com", "Reject", "TargetNameMismatch")
        b.case("regular-expired", p, "www.example.com", "Reject", "Expired", at=90 * DAY)
        b.case("wildcard-null-proxy", base_wild, "foo.example.com", "Accept", effective=["*.example.com"])
        b.case("wildcard-depth", base_wild, "bar.foo.example.com", "Reject", "TargetNameMismatch")

    if "name-constrained" in shapes:
        nca = b.ca("constrained.pki.test", "nca", root, "root", 3, nc=[".example.com"])
        good = b.cert("shop.example.com", "ee-shop", nca, "nca", (0, 90 * DAY), 30)
        bad = b.cert("shop.example.org", "ee-evil", nca, "nca", (0, 90 * DAY), 31)
        b.case("nc-accept", b.chain("nc-accept", [nca, good]), "shop.example.com", "Accept",
               effective=["shop.example.com"])
        b.case("nc-violation", b.chain("nc-violation", [nca, bad]), "shop.example.org", "Reject",
               "NameConstraintViolation")

    if "short-lived" in shapes:
        short = b.cert("short.example.com", "ee-short", ica, "ica", (0, HOUR), 40)
        p = b.chain("short-lived", [ica, short])
        b.case("short-lived-accept", p, "short.example.com", "Accept", effective=["short.example.com"])
        b.case("short-lived-expired", p, "short.example.com", "Reject", "Expired", at=HOUR)

    if "proxy" in shapes:
        s1 = b.cert("s1.example.com", "edge-s1", ee_wild, "ee-wild", (0, HOUR), 100)
        p = b.chain("proxy-s1", [ica, ee_wild, s1])
        b.case("proxy-name-narrowing", p, "s1.example.com", "Accept", effective=["s1.example.com"])
        b.case("proxy-other-subdomain", p, "s2.example.com", "Reject", "TargetNameMismatch")
        b.case("proxy-expired", p, "s1.example.com", "Reject", "Expired", at=HOUR)
        nores = b.cert("s1.example.com", "edge-s1", ee_wild, "ee-wild", (0, HOUR), 101,
                       resumption_policy=ResumptionPolicy.DISALLOW)
        b.chain("proxy-s1-noresume", [ica, ee_wild, nores])
        www = b.cert("www.example.com", "cdn-www", ee_wild, "ee-wild", (0, DAY), 102, san=["www.example.com"])
        www2 = b.cert("www.example.com", "edge-www", www, "cdn-www", (0, DAY), 103)
        b.case("proxy-equal-names", b.chain("proxy-www-www", [ica, ee_wild, www, www2]), "www.example.com",
               "Accept", effective=["www.example.com"])
        cab = b.cert("s2.example.com", "edge-s2", ee_wild, "ee-wild", (0, DAY), 104, is_ca=True)
        b.case("proxy-ca-bit-ignored", b.chain("proxy-ca-bit", [ica, ee_wild, cab]), "s2.example.com", "Accept",
               effective=["s2.example.com"])
        ee_pl = b.cert("*.example.com", "ee-wild-pl1", ica, "ica", (0, 90 * DAY), 12, path_len=1)
        q1 = b.cert("s1.example.com", "cdn-q1", ee_pl, "ee-wild-pl1", (0, DAY), 105)
        q2 = b.cert("s1.example.com", "edge-q2", q1, "cdn-q1", (0, DAY), 106)
        b.case("proxy-path-len-ok", b.chain("proxy-pathlen-1", [ica, ee_pl, q1]), "s1.example.com", "Accept",
               effective=["s1.example.com"])
        b.case("proxy-path-len-exceeded", b.chain("proxy-pathlen-2", [ica, ee_pl, q1, q2]), "s1.example.com",
               "Reject", "ProxyPathLenExceeded")
        csr = ProxyCSR(b.key("edge-s1").public, NameSet([parse_subject_name("s1.example.com")]))
        b.files["csr/edge-s1.pcsr"] = dump_block(CSR, csr.to_record())
        sched = IssuanceSchedule(0, HOUR, 90 * 60)
        b.files["csr/hourly.pcsr"] = dump_block(SCHEDULE, sched.to_record())
        # issue_proxy path, to keep the CSR flow exercised by the fixture set
        via_csr = issue_proxy(ee_wild, b.key("ee-wild"), csr, ValidityPeriod(0, HOUR), serial=107)
        b.chain("proxy-s1-from-csr", [ica, ee_wild, via_csr])

    if "negative" in shapes:
        www = b.cert("www.example.com", "cdn-www", ee_wild, "ee-wild", (0, DAY), 110)
        admin = b.cert("admin.example.com", "edge-admin", www, "cdn-www", (0, DAY), 111)
        b.case("escalation-www-admin", b.chain("escalation", [ica, ee_wild, www, admin]), "admin.example.com",
               "Reject", "NameEscalation")
        deep = b.cert("bar.foo.example.com", "edge-deep", ee_wild, "ee-wild", (0, DAY), 112)
        b.case("escalation-wildcard-depth", b.chain("wildcard-depth-proxy", [ica, ee_wild, deep]),
               "bar.foo.example.com", "Reject", "NameEscalation")
        short = b.cert("www.example.com", "cdn-www", ee_wild, "ee-wild", (0, HOUR), 113)
        longer = b.cert("www.example.com", "edge-www", short, "cdn-www", (0, 30 * DAY), 114)
        p = b.chain("deferred-expiry", [ica, ee_wild, short, longer])
        b.case("deferred-expiry-before", p, "www.example.com", "Accept", effective=["www.example.com"])
        b.case("deferred-expiry-after", p, "www.example.com", "Reject", "Expired", at=2 * HOUR)
        b.case("deferred-expiry-much-later", p, "www.example.com", "Reject", "Expired", at=20 * DAY)
        nc_empty = b.cert("www.example.com", "edge-www", ee_wild, "ee-wild", (0, DAY), 115, nc=[".example.org"])
        b.case("proxy-own-nc-empty", b.chain("proxy-nc-empty", [ica, ee_wild, nc_empty]), "www.example.com",
               "Reject", "EmptyPermittedSet")
        future = b.cert("s3.example.com", "edge-s3", ee_wild, "ee-wild", (5000, DAY), 116)
        b.case("proxy-not-yet-valid", b.chain("proxy-future", [ica, ee_wild, future]), "s3.example.com",
               "Reject", "NotYetValid")
        good = b.cert("s4.example.com", "edge-s4", ee_wild, "ee-wild", (0, DAY), 117)
        tampered = replace(good, serial=118)
        b.case("proxy-bad-signature", b.chain("proxy-tampered", [ica, ee_wild, tampered]), "s4.example.com",
               "Reject", "BadSignature")
        strict = b.ca("strict.pki.test", "strict", root, "root", 4, path_len=0)
        sub = b.ca("sub.pki.test", "sub", strict, "strict", 5)
        leaf = b.cert("deep.example.com", "ee-deep", sub, "sub", (0, 90 * DAY), 50)
        b.case("regular-path-len-exceeded", b.chain("regular-pathlen", [strict, sub, leaf]), "deep.example.com",
               "Reject", "PathLenExceeded")
        rogue = b.ca("rogue.pki.test", "rogue", None, None, 6)
        rogue_ee = b.cert("www.example.com", "ee-rogue", rogue, "rogue", (0, 90 * DAY), 60)
        b.case("untrusted-anchor", b.chain("untrusted", [rogue_ee]), "www.example.com", "Reject",
               "UntrustedAnchor")
        b.case("no-end-entity", b.chain("ca-only", [ica]), "www.example.com", "Reject", "NoEndEntity")

    if "delegated-credential" in shapes:
        ee_dc = b.cert("dc.example.com", "ee-dc", ica, "ica", (0, 90 * DAY), 70, delegation_usage=True)
        ee_plain = b.cert("dc.example.com", "ee-dc", ica, "ica", (0, 90 * DAY), 71)
        b.files["certs/ee-dc.pcert"] = dump_chain([ee_dc])
        b.files["certs/ee-dc-no-usage.pcert"] = dump_chain([ee_plain])
        b.chain("dc-chain", [ica, ee_dc])
        dc_key = b.key("dc-edge")
        dc = issue_dc(ee_dc, b.key("ee-dc"), dc_key.public, 3 * DAY, SignatureScheme.ED25519, now=0)
        b.files["dc/dc-3d.pdc"] = dc_to_block(dc, ee_dc)
        dc448 = issue_dc(ee_dc, b.key("ee-dc"), b.key("dc-edge-448", SignatureScheme.ED448).public, DAY,
                         SignatureScheme.ED448, now=0)
        b.files["dc/dc-ed448.pdc"] = dc_to_block(dc448, ee_dc)
        b.dc_cases += [
            {"name": "dc-accept", "dc": "dc/dc-3d.pdc", "ee": "certs/ee-dc.pcert", "at": DEFAULT_AT,
             "scheme": "ed25519", "verdict": "Accept", "reason": None},
            {"name": "dc-last-second", "dc": "dc/dc-3d.pdc", "ee": "certs/ee-dc.pcert", "at": 3 * DAY - 1,
             "scheme": "ed25519", "verdict": "Accept", "reason": None},
            {"name": "dc-expired", "dc": "dc/dc-3d.pdc", "ee": "certs/ee-dc.pcert", "at": 3 * DAY,
             "scheme": "ed25519", "verdict": "Reject", "reason": "DcExpired"},
            {"name": "dc-scheme-mismatch", "dc": "dc/dc-3d.pdc", "ee": "certs/ee-dc.pcert", "at": DEFAULT_AT,
             "scheme": "ed448", "verdict": "Reject", "reason": "SchemeMismatch"},
            {"name": "dc-ed448", "dc": "dc/dc-ed448.pdc", "ee": "certs/ee-dc.pcert", "at": DEFAULT_AT,
             "scheme": "ed448", "verdict": "Accept", "reason": None},
            {"name": "dc-wrong-ee", "dc": "dc/dc-3d.pdc", "ee": "certs/ee-dc-no-usage.pcert", "at": DEFAULT_AT,
             "scheme": "ed25519", "verdict": "Reject", "reason": "MissingDelegationUsage"},
        ]

    if "scenarios" in shapes:
        if "proxy" not in shapes:
            raise MalformedSpec("the scenarios shape needs the proxy shape")
        b.files.update(_scenario_scripts())

    manifest = {
        "seed": spec.seed,
        "topology": list(spec.topology),
        "anchors": "anchors",
        "chains": [c.to_record() for c in b.cases],
        "delegated_credentials": b.dc_cases,
    }
    b.files["manifest.json"] = canonical_dumps(manifest).decode("utf-8") + "\n"
    return b.files


RESUMPTION_TIMES = (0, 6 * DAY, 12 * DAY, 18 * DAY)


def chaining_script(policy: str, chain: str = "../chains/proxy-s1.pcert", behavior: str = "malicious") -> str:
    """One full handshake with a 1-hour proxy certificate, then resumptions every six days."""
    lines = [
        "# malicious PSK chaining against a one-hour credential",
        "TARGET s1.example.com",
        "ANCHORS ../anchors/root.pcert",
        f"BEHAVIOR {behavior}",
        f"AT {RESUMPTION_TIMES[0]} HANDSHAKE {chain} POLICY {policy}",
    ]
    lines += [f"AT {t} RESUME" for t in RESUMPTION_TIMES[1:]]
    return "\n".join(lines) + "\n"


def lease_script() -> str:
    lines = [
        "# hourly proxy certificates with 90-minute validity; lease terminated after the third",
        "TARGET s1.example.com",
        "ANCHORS ../anchors/root.pcert",
        "BEHAVIOR malicious",
        f"SERVER ../chains/ee-wild.pcert ../keys/ee-wild.pkey ../csr/edge-s1.pcsr START 0 PERIOD {HOUR} VALIDITY 5400",
        "AT 0 TICK",
        "AT 0 HANDSHAKE @server POLICY bound",
        "AT 3000 RESUME",
        f"AT {HOUR} TICK",
        f"AT {HOUR + 60} REFRESH @server",
        "AT 7000 RESUME",
        f"AT {2 * HOUR} TICK",
        f"AT {2 * HOUR + 60} REFRESH @server",
        f"AT {2 * HOUR + 120} TERMINATE-LEASE",
        f"AT {3 * HOUR} TICK",
        f"AT {3 * HOUR + 60} HANDSHAKE @server POLICY bound",
        "AT 12599 RESUME",
        "AT 12600 RESUME",
        "AT 12600 HANDSHAKE @server POLICY bound",
    ]
    return "\n".join(lines) + "\n"


def _scenario_scripts() -> dict[str, str]:
    return {
        "scripts/chaining-allow.scn": chaining_script("allow"),
        "scripts/chaining-bound.scn": chaining_script("bound"),
        "scripts/chaining-disallow.scn": chaining_script("disallow"),
        "scripts/chaining-cert-disallow.scn": chaining_script("allow", "../chains/proxy-s1-noresume.pcert"),
        "scripts/chaining-honest.scn": chaining_script("allow", behavior="honest"),
        "scripts/lease.scn": lease_script(),
    }


def build(spec: FixtureSpec = FixtureSpec()) -> dict[str, str]:
    """The fixture set as a mapping of relative path to file contents."""
    return dict(sorted(_build(spec).items()))


def generate(spec: FixtureSpec, out_dir) -> list[Path]:
    out = Path(out_dir)
    written = []
    for rel, text in build(spec).items():
        write_text(out / rel, text)
        written.append(out / rel)
    return written
