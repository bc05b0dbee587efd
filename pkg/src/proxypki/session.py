"""Deterministic simulator for TLS sessions, PSK chaining and resumption policies.

Only lifetimes and validity are modelled. A full handshake validates the
presented chain (and delegated credential, if any) and may provision a
single-use PSK; a resumption consumes the PSK without looking at the
certificate again and may provision the next one. A malicious server always
issues maximum-lifetime PSKs, which lets a session outlive a short-lived
certificate indefinitely unless the client binds resumption to the
credential's expiry or disallows it.
"""
from __future__ import annotations

import enum
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .credentials import DelegatedCredential, dc_from_block, validate_dc
from .documents import load_chain, load_certificates, load_key, parse_blocks, CSR
from .issuance import CertificateServer, IssuanceSchedule, ProxyCSR
from .model import WEEK, Certificate, FailureMode, Instant, ResumptionPolicy, chain_expiry
from .names import DnsName
from .validation import split_path, validate

MAX_PSK_LIFETIME = WEEK


class SessionReason(str, enum.Enum):
    PSK_EXPIRED = "PskExpired"
    PSK_CONSUMED = "PskConsumed"
    POLICY_FORBIDS_RESUMPTION = "PolicyForbidsResumption"
    CREDENTIAL_EXPIRED = "CredentialExpired"
    NO_PSK = "NoPsk"
    NO_CREDENTIAL = "NoCredential"
    NO_SESSION = "NoSession"


class ServerBehavior(str, enum.Enum):
    HONEST = "honest"
    MALICIOUS_CHAINER = "malicious"


class SessionError(Exception):
    def __init__(self, reason):
        super().__init__(reason.value)
        self.reason = reason


class HandshakeRejected(SessionError):
    pass


class ResumptionRejected(SessionError):
    pass


class MalformedScript(ValueError):
    pass


@dataclass
class Psk:
    issued_at: Instant
    lifetime: int
    issuer_credential_expiry: Instant
    lineage_depth: int = 0
    bound: bool = False
    consumed: bool = False

    def __post_init__(self):
        if not 0 < self.lifetime <= MAX_PSK_LIFETIME:
            raise ValueError(f"PSK lifetime must be in (0, {MAX_PSK_LIFETIME}]")

    @property
    def expires_at(self) -> Instant:
        end = self.issued_at + self.lifetime
        return min(end, self.issuer_credential_expiry) if self.bound else end


@dataclass(frozen=True)
class Connection:
    established_at: Instant
    credential: str
    resumed: bool
    policy: ResumptionPolicy
    credential_expiry: Instant
    lineage_depth: int = 0


def effective_policy(client_default: ResumptionPolicy, domain_policy: Optional[ResumptionPolicy]) -> ResumptionPolicy:
    """The client may tighten the domain's policy but never loosen it."""
    if domain_policy is None:
        return client_default
    return max(client_default, domain_policy, key=lambda p: p.strictness)


def domain_policy(chain: Sequence[Certificate]) -> Optional[ResumptionPolicy]:
    """Strictest resumption policy carried by the end-entity or proxy certificates."""
    _, proxy = split_path(chain)
    ee = chain[len(chain) - len(proxy) - 1]
    found = [c.extensions.resumption_policy for c in [ee, *proxy] if c.extensions.resumption_policy is not None]
    return max(found, key=lambda p: p.strictness) if found else None


def failure_handling(chain: Sequence[Certificate], client_mode: Optional[FailureMode] = None) -> FailureMode:
    """How a failed validation is surfaced: hard fail unless the domain asks for soft and the client agrees."""
    modes = [c.extensions.failure_mode for c in chain if c.extensions.failure_mode is not None]
    if client_mode is not None:
        modes.append(client_mode)
    if not modes or FailureMode.HARD in modes:
        return FailureMode.HARD
    return FailureMode.SOFT


def _psk_lifetime(behavior: ServerBehavior, t: Instant, credential_expiry: Instant) -> Optional[int]:
    if behavior is ServerBehavior.MALICIOUS_CHAINER:
        return MAX_PSK_LIFETIME
    remaining = min(MAX_PSK_LIFETIME, credential_expiry - t)
    return remaining if remaining > 0 else None


def full_handshake(chain: Sequence[Certificate], anchors, t: Instant, policy: ResumptionPolicy,
                   behavior: ServerBehavior, target: DnsName | str, dc: DelegatedCredential | None = None,
                   label: str = "credential") -> tuple[Connection, Optional[Psk]]:
    outcome = validate(chain, anchors, t, target)
    if not outcome.accepted:
        raise HandshakeRejected(outcome.reason)
    expiry = chain_expiry(chain)
    if dc is not None:
        regular, _ = split_path(chain)
        ee = regular[-1]
        verdict = validate_dc(dc, ee, t, dc.handshake_scheme)
        if not verdict.accepted:
            raise HandshakeRejected(verdict.reason)
        expiry = min(expiry, dc.expiry(ee))
    # delegated credentials carry no policy, so the domain can only speak through the certificates
    policy = effective_policy(policy, domain_policy(chain))
    conn = Connection(t, label, False, policy, expiry)
    if policy is ResumptionPolicy.DISALLOW:
        return conn, None
    lifetime = _psk_lifetime(behavior, t, expiry)
    if lifetime is None:
        return conn, None
    return conn, Psk(t, lifetime, expiry, 0, bound=policy is ResumptionPolicy.BOUND)


def resume(psk: Psk, t: Instant, policy: ResumptionPolicy, behavior: ServerBehavior,
           label: str = "credential") -> tuple[Connection, Optional[Psk]]:
    if psk.consumed:
        raise ResumptionRejected(SessionReason.PSK_CONSUMED)
    if policy is ResumptionPolicy.DISALLOW:
        raise ResumptionRejected(SessionReason.POLICY_FORBIDS_RESUMPTION)
    if not psk.issued_at <= t < psk.issued_at + psk.lifetime:
        raise ResumptionRejected(SessionReason.PSK_EXPIRED)
    bound = policy is ResumptionPolicy.BOUND or psk.bound
    if bound and t >= psk.issuer_credential_expiry:
        raise ResumptionRejected(SessionReason.CREDENTIAL_EXPIRED)
    psk.consumed = True
    conn = Connection(t, label, True, policy, psk.issuer_credential_expiry, psk.lineage_depth + 1)
    lifetime = _psk_lifetime(behavior, t, psk.issuer_credential_expiry)
    if lifetime is None:
        return conn, None
    return conn, Psk(t, lifetime, psk.issuer_credential_expiry, psk.lineage_depth + 1, bound=bound)


# -- scenarios -----------------------------------------------------------------

SERVER_SOURCE = "@server"


@dataclass(frozen=True)
class Event:
    t: Instant
    kind: str  # HANDSHAKE, RESUME, TICK, TERMINATE-LEASE, REFRESH
    source: Optional[str] = None
    policy: Optional[ResumptionPolicy] = None


@dataclass
class Presented:
    chain: list[Certificate]
    dc: Optional[DelegatedCredential] = None


@dataclass
class Scenario:
    events: list[Event]
    target: Optional[DnsName] = None
    anchors: list[Certificate] = field(default_factory=list)
    behavior: ServerBehavior = ServerBehavior.HONEST
    credentials: dict[str, Presented] = field(default_factory=dict)
    server: Optional[CertificateServer] = None
    server_chain: list[Certificate] = field(default_factory=list)  # regular path ending at the server's parent


@dataclass(frozen=True)
class TraceRow:
    t: Instant
    event: str
    verdict: str
    reason: str = "-"
    credential: str = "-"
    lineage: str = "-"
    psk_expiry: str = "-"

    def tsv(self) -> str:
        return "\t".join(str(x) for x in (self.t, self.event, self.verdict, self.reason,
                                          self.credential, self.lineage, self.psk_expiry))


@dataclass
class Trace:
    rows: list[TraceRow] = field(default_factory=list)
    max_connection: dict[str, Instant] = field(default_factory=dict)
    credential_expiry: dict[str, Instant] = field(default_factory=dict)
    connections: int = 0
    full_handshakes: int = 0
    max_lineage: int = 0

    @property
    def latest_connection(self) -> Optional[Instant]:
        return max(self.max_connection.values(), default=None)

    def to_tsv(self) -> str:
        lines = ["t\tevent\tverdict\treason\tcredential\tlineage\tpsk_expiry"]
        lines += [r.tsv() for r in self.rows]
        for cred in sorted(self.credential_expiry):
            last = self.max_connection.get(cred, "-")
            lines.append(f"#\tsummary\t{cred}\tmax_connection={last}\texpiry={self.credential_expiry[cred]}")
        lines.append(f"#\ttotals\tconnections={self.connections}\tfull_handshakes={self.full_handshakes}"
                     f"\tmax_lineage={self.max_lineage}")
        return "\n".join(lines) + "\n"


@dataclass
class _ClientState:
    credential: str
    policy: ResumptionPolicy
    psk: Optional[Psk]


def run_scenario(scenario: Scenario) -> Trace:
    events = scenario.events
    if any(b.t < a.t for a, b in zip(events, events[1:])):
        raise MalformedScript("events are not in time order")
    trace = Trace()
    state: Optional[_ClientState] = None
    server = scenario.server

    def resolve(source: str, t: Instant) -> tuple[str, Optional[Presented]]:
        if source == SERVER_SOURCE:
            if server is None:
                raise MalformedScript("@server used without a SERVER directive")
            cert = server.latest()
            if cert is None:
                return SERVER_SOURCE, None
            return f"server#{cert.serial}", Presented(scenario.server_chain + [cert])
        return source, scenario.credentials[source]

    def record_connection(conn: Connection):
        trace.connections += 1
        trace.max_lineage = max(trace.max_lineage, conn.lineage_depth)
        prev = trace.max_connection.get(conn.credential)
        trace.max_connection[conn.credential] = conn.established_at if prev is None else max(prev, conn.established_at)

    for ev in events:
        t = ev.t
        if ev.kind == "HANDSHAKE":
            if scenario.target is None:
                raise MalformedScript("HANDSHAKE requires a TARGET")
            label, presented = resolve(ev.source, t)
            if presented is None:
                trace.rows.append(TraceRow(t, ev.kind, "REJECT", SessionReason.NO_CREDENTIAL.value, label))
                continue
            trace.credential_expiry[label] = _presented_expiry(presented)
            try:
                conn, psk = full_handshake(presented.chain, scenario.anchors, t, ev.policy, scenario.behavior,
                                           scenario.target, presented.dc, label)
            except HandshakeRejected as exc:
                mode = failure_handling(presented.chain)
                trace.rows.append(TraceRow(t, ev.kind, "REJECT", f"{exc.reason.value}/{mode.value}-fail", label))
                continue
            trace.full_handshakes += 1
            record_connection(conn)
            state = _ClientState(label, conn.policy, psk)
            trace.rows.append(TraceRow(t, ev.kind, "ACCEPT", conn.policy.value, label, "0",
                                       "-" if psk is None else str(psk.expires_at)))
        elif ev.kind == "RESUME":
            if state is None:
                trace.rows.append(TraceRow(t, ev.kind, "REJECT", SessionReason.NO_SESSION.value))
                continue
            if state.psk is None:
                reason = (SessionReason.POLICY_FORBIDS_RESUMPTION if state.policy is ResumptionPolicy.DISALLOW
                          else SessionReason.NO_PSK)
                trace.rows.append(TraceRow(t, ev.kind, "REJECT", reason.value, state.credential))
                continue
            try:
                conn, psk = resume(state.psk, t, state.policy, scenario.behavior, state.credential)
            except ResumptionRejected as exc:
                trace.rows.append(TraceRow(t, ev.kind, "REJECT", exc.reason.value, state.credential,
                                           str(state.psk.lineage_depth)))
                continue
            record_connection(conn)
            state.psk = psk
            trace.rows.append(TraceRow(t, ev.kind, "ACCEPT", state.policy.value, state.credential,
                                       str(conn.lineage_depth), "-" if psk is None else str(psk.expires_at)))
        elif ev.kind == "TICK":
            if server is None:
                raise MalformedScript("TICK requires a SERVER directive")
            cert = server.tick(t)
            if cert is None:
                trace.rows.append(TraceRow(t, ev.kind, "NONE"))
            else:
                trace.rows.append(TraceRow(t, ev.kind, "ISSUED", f"{cert.validity.not_before}-{cert.validity.not_after}",
                                           f"server#{cert.serial}"))
        elif ev.kind == "TERMINATE-LEASE":
            if server is None:
                raise MalformedScript("TERMINATE-LEASE requires a SERVER directive")
            server.terminate_lease()
            trace.rows.append(TraceRow(t, ev.kind, "DONE"))
        elif ev.kind == "REFRESH":
            # out-of-band delivery of a fresher certificate to the client's session state
            label, presented = resolve(ev.source, t)
            if state is None or presented is None:
                reason = SessionReason.NO_SESSION if state is None else SessionReason.NO_CREDENTIAL
                trace.rows.append(TraceRow(t, ev.kind, "REJECT", reason.value, label))
                continue
            outcome = validate(presented.chain, scenario.anchors, t, scenario.target)
            if not outcome.accepted:
                trace.rows.append(TraceRow(t, ev.kind, "REJECT", outcome.reason.value, label))
                continue
            expiry = _presented_expiry(presented)
            trace.credential_expiry[label] = expiry
            state.credential = label
            if state.psk is not None:
                state.psk.issuer_credential_expiry = expiry
            trace.rows.append(TraceRow(t, ev.kind, "ACCEPT", "-", label, "-",
                                       "-" if state.psk is None else str(state.psk.expires_at)))
        else:
            raise MalformedScript(f"unknown event {ev.kind}")
    return trace


def _presented_expiry(presented: Presented) -> Instant:
    expiry = chain_expiry(presented.chain)
    if presented.dc is not None:
        regular, _ = split_path(presented.chain)
        expiry = min(expiry, presented.dc.expiry(regular[-1]))
    return expiry


# -- script files --------------------------------------------------------------

def parse_script(text: str, base_dir: Path | str = ".") -> Scenario:
    """Parse a line-oriented scenario script; relative file names resolve against ``base_dir``."""
    base = Path(base_dir)
    scenario = Scenario(events=[])
    schedule_line = None

    def num(tok: str, lineno: int) -> int:
        try:
            value = int(tok)
        except ValueError:
            raise MalformedScript(f"line {lineno}: expected an integer, got {tok!r}") from None
        if value < 0:
            raise MalformedScript(f"line {lineno}: negative value {value}")
        return value

    def load_presented(source: str, dc_file: Optional[str], lineno: int):
        if source == SERVER_SOURCE or source in scenario.credentials:
            return
        try:
            chain = load_chain(base / source)
            dc = dc_from_block((base / dc_file).read_text())[0] if dc_file else None
        except OSError as exc:
            raise MalformedScript(f"line {lineno}: {exc}") from None
        scenario.credentials[source] = Presented(chain, dc)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = shlex.split(line)
        head = tok[0].upper()
        try:
            if head == "TARGET" and len(tok) == 2:
                scenario.target = DnsName.parse(tok[1])
            elif head == "ANCHORS" and len(tok) >= 2:
                scenario.anchors = load_certificates(base / p for p in tok[1:])
            elif head == "BEHAVIOR" and len(tok) == 2:
                scenario.behavior = ServerBehavior(tok[1].lower())
            elif head == "SERVER" and len(tok) == 10 and [x.upper() for x in tok[4:10:2]] == ["START", "PERIOD", "VALIDITY"]:
                schedule_line = (tok, lineno)
            elif head == "AT" and len(tok) >= 3:
                t = num(tok[1], lineno)
                kind = tok[2].upper()
                rest = tok[3:]
                if kind == "HANDSHAKE":
                    if len(rest) not in (3, 5) or rest[-2].upper() != "POLICY":
                        raise MalformedScript(f"line {lineno}: HANDSHAKE <chain> [DC <file>] POLICY <policy>")
                    dc_file = None
                    if len(rest) == 5:
                        if rest[1].upper() != "DC":
                            raise MalformedScript(f"line {lineno}: expected DC <file>")
                        dc_file = rest[2]
                    load_presented(rest[0], dc_file, lineno)
                    scenario.events.append(Event(t, kind, rest[0], ResumptionPolicy(rest[-1].lower())))
                elif kind == "REFRESH" and len(rest) == 1:
                    load_presented(rest[0], None, lineno)
                    scenario.events.append(Event(t, kind, rest[0]))
                elif kind in ("RESUME", "TICK", "TERMINATE-LEASE") and not rest:
                    scenario.events.append(Event(t, kind))
                else:
                    raise MalformedScript(f"line {lineno}: bad event {' '.join(tok[2:])!r}")
            else:
                raise MalformedScript(f"line {lineno}: cannot parse {line!r}")
        except MalformedScript:
            raise
        except (ValueError, KeyError, OSError) as exc:
            raise MalformedScript(f"line {lineno}: {exc}") from None

    if schedule_line is not None:
        tok, lineno = schedule_line
        try:
            chain = load_chain(base / tok[1])
            key = load_key(base / tok[2])
            (csr_rec, _), = parse_blocks((base / tok[3]).read_text(), CSR)
            schedule = IssuanceSchedule(num(tok[5], lineno), num(tok[7], lineno), num(tok[9], lineno))
            scenario.server = CertificateServer(chain[-1], key, schedule, ProxyCSR.from_record(csr_rec))
        except MalformedScript:
            raise
        except (ValueError, KeyError, OSError) as exc:
            raise MalformedScript(f"line {lineno}: {exc}") from None
        scenario.server_chain = chain

    ts = [e.t for e in scenario.events]
    if ts != sorted(ts):
        raise MalformedScript("events are not in time order")
    return scenario


def simulate_file(path) -> Trace:
    path = Path(path)
    return run_scenario(parse_script(path.read_text(), path.parent))
