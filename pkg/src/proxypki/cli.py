"""Command-line front end.

Exit status: 0 on success or acceptance, 1 on a domain rejection (reported as
a single ``REJECT <Reason>`` line), 2 on usage or I/O errors. Commands that
evaluate validity require ``--at``; nothing reads the wall clock.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from . import fixtures as fixtures_mod
from . import matrix as matrix_mod
from .credentials import DcIssueError, dc_from_block, dc_to_block, issue_dc, validate_dc
from .documents import (CSR, SCHEDULE, DocumentError, dump_block, dump_chain, dump_key, load_certificates,
                        load_chain, load_key, parse_blocks, write_text)
from .issuance import (CertificateServer, IssuanceError, IssuanceSchedule, ProxyCSR, issue_proxy)
from .model import (Certificate, Extensions, FailureMode, KeyPair, KeyUsage, ResumptionPolicy, SchemeMismatch,
                    SignatureScheme, ValidityPeriod, canonical_dumps, sign_certificate)
from .names import NameSet, parse_constraint, parse_subject_name
from .session import MalformedScript, simulate_file
from .validation import validate

SCHEMES = click.Choice([s.value for s in SignatureScheme])
POLICIES = click.Choice([p.value for p in ResumptionPolicy])
FAILURE_MODES = click.Choice([m.value for m in FailureMode])
FORMATS = click.Choice(["text", "records"])


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (OSError, DocumentError, MalformedScript, ValueError, KeyError) as exc:
            click.echo(f"ERROR {exc}", err=True)
            ctx.exit(2)


def _reject(reason: str) -> None:
    click.echo(f"REJECT {reason}")
    sys.exit(1)


def _last_cert(path) -> Certificate:
    return load_chain(path)[-1]


def _extensions(ca: bool, path_len, name_constraints, sans, delegation_usage=False, digital_signature=True,
                resumption=None, failure_mode=None, logged=False) -> Extensions:
    usage = {KeyUsage.DIGITAL_SIGNATURE} if digital_signature else set()
    if ca:
        usage.add(KeyUsage.KEY_CERT_SIGN)
    return Extensions(
        is_ca=ca,
        path_len=path_len,
        key_usage=frozenset(usage),
        name_constraints=NameSet(parse_constraint(c) for c in name_constraints) if name_constraints else None,
        subject_alt_names=tuple(parse_subject_name(s) for s in sans),
        delegation_usage=delegation_usage,
        resumption_policy=None if resumption is None else ResumptionPolicy(resumption),
        failure_mode=None if failure_mode is None else FailureMode(failure_mode),
        logged=logged,
    )


def _issue(cn, subject_key: KeyPair, issuer: Certificate | None, issuer_key: KeyPair, not_before, not_after,
           serial, extensions, out) -> None:
    tbs = Certificate(
        subject_common_name=parse_subject_name(cn),
        issuer=cn if issuer is None else issuer.subject,
        serial=serial,
        validity=ValidityPeriod(not_before, not_after),
        public_key=subject_key.public,
        extensions=extensions,
        signature_scheme=issuer_key.scheme,
    )
    if issuer is not None and issuer.public_key != issuer_key.public:
        raise click.UsageError("--issuer-key does not match the issuer certificate")
    write_text(out, dump_chain([sign_certificate(tbs, issuer_key)]))
    click.echo(f"wrote {out}")


def validity_options(f):
    f = click.option("--serial", type=click.IntRange(min=0), default=1, show_default=True)(f)
    f = click.option("--not-after", type=click.IntRange(min=0), required=True)(f)
    f = click.option("--not-before", type=click.IntRange(min=0), required=True)(f)
    f = click.option("--cn", required=True, help="Subject common name (exact or *.wildcard).")(f)
    return f


@click.group(cls=_Group)
def cli():
    """Proxy-certificate PKI toolkit."""


@cli.command()
@click.option("--scheme", type=SCHEMES, default="ed25519", show_default=True)
@click.option("--seed", help="Derive the key deterministically from this string.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def keygen(scheme, seed, out):
    """Generate a key pair (.pkey)."""
    s = SignatureScheme(scheme)
    key = KeyPair.from_seed(s, seed.encode()) if seed is not None else KeyPair.generate(s)
    write_text(out, dump_key(key))
    click.echo(f"wrote {out} fingerprint={key.public.fingerprint()}")


@cli.command("issue-root")
@click.option("--key", "key_path", type=click.Path(exists=True, dir_okay=False), required=True)
@validity_options
@click.option("--path-len", type=click.IntRange(min=0))
@click.option("--name-constraint", "name_constraints", multiple=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def issue_root(key_path, cn, not_before, not_after, serial, path_len, name_constraints, out):
    """Create a self-signed trust anchor."""
    key = load_key(key_path)
    _issue(cn, key, None, key, not_before, not_after, serial,
           _extensions(True, path_len, name_constraints, ()), out)


@cli.command("issue-ca")
@click.option("--issuer", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--issuer-key", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--key", "key_path", type=click.Path(exists=True, dir_okay=False), required=True)
@validity_options
@click.option("--path-len", type=click.IntRange(min=0))
@click.option("--name-constraint", "name_constraints", multiple=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def issue_ca(issuer, issuer_key, key_path, cn, not_before, not_after, serial, path_len, name_constraints, out):
    """Issue an intermediate CA certificate."""
    _issue(cn, load_key(key_path), _last_cert(issuer), load_key(issuer_key), not_before, not_after, serial,
           _extensions(True, path_len, name_constraints, ()), out)


@cli.command("issue-ee")
@click.option("--issuer", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--issuer-key", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--key", "key_path", type=click.Path(exists=True, dir_okay=False), required=True)
@validity_options
@click.option("--san", "sans", multiple=True)
@click.option("--path-len", type=click.IntRange(min=0), help="Bound on proxy certificates below this one.")
@click.option("--delegation-usage", is_flag=True)
@click.option("--no-digital-signature", is_flag=True)
@click.option("--resumption", type=POLICIES)
@click.option("--failure-mode", type=FAILURE_MODES)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def issue_ee(issuer, issuer_key, key_path, cn, not_before, not_after, serial, sans, path_len, delegation_usage,
             no_digital_signature, resumption, failure_mode, out):
    """Issue an end-entity certificate."""
    ext = _extensions(False, path_len, (), sans, delegation_usage, not no_digital_signature, resumption,
                      failure_mode, logged=True)
    _issue(cn, load_key(key_path), _last_cert(issuer), load_key(issuer_key), not_before, not_after, serial, ext, out)


@cli.command()
@click.option("--key", "key_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--name", "names", multiple=True, required=True)
@click.option("--resumption", type=POLICIES)
@click.option("--failure-mode", type=FAILURE_MODES)
@click.option("--path-len", type=click.IntRange(min=0))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def csr(key_path, names, resumption, failure_mode, path_len, out):
    """Write an unsigned proxy CSR (.pcsr)."""
    req = ProxyCSR(
        public_key=load_key(key_path).public,
        requested_names=NameSet(parse_subject_name(n) for n in names),
        resumption_policy=None if resumption is None else ResumptionPolicy(resumption),
        failure_mode=None if failure_mode is None else FailureMode(failure_mode),
        path_len=path_len,
    )
    write_text(out, dump_block(CSR, req.to_record()))
    click.echo(f"wrote {out}")


def _load_csr(path) -> ProxyCSR:
    (rec, _), = parse_blocks(Path(path).read_text(), CSR)
    return ProxyCSR.from_record(rec)


@cli.command("issue-proxy")
@click.option("--parent", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Chain file whose last certificate is the parent.")
@click.option("--parent-key", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--csr", "csr_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--not-before", type=click.IntRange(min=0), required=True)
@click.option("--not-after", type=click.IntRange(min=0), required=True)
@click.option("--serial", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Extended chain is written here.")
def issue_proxy_cmd(parent, parent_key, csr_path, not_before, not_after, serial, out):
    """Sign a proxy certificate below the last certificate of --parent."""
    chain = load_chain(parent)
    try:
        cert = issue_proxy(chain[-1], load_key(parent_key), _load_csr(csr_path),
                           ValidityPeriod(not_before, not_after), serial)
    except IssuanceError as exc:
        _reject(type(exc).__name__)
    write_text(out, dump_chain(chain + [cert]))
    click.echo(f"wrote {out}")


@cli.command("issue-dc")
@click.option("--ee", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--ee-key", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--dc-key", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--ttl", type=click.IntRange(min=1), required=True, help="Seconds from --at.")
@click.option("--scheme", type=SCHEMES, default="ed25519", show_default=True)
@click.option("--at", type=click.IntRange(min=0), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def issue_dc_cmd(ee, ee_key, dc_key, ttl, scheme, at, out):
    """Issue a delegated credential (.pdc)."""
    ee_cert = _last_cert(ee)
    try:
        dc = issue_dc(ee_cert, load_key(ee_key), load_key(dc_key).public, ttl, SignatureScheme(scheme), at)
    except (DcIssueError, SchemeMismatch) as exc:
        _reject(type(exc).__name__)
    write_text(out, dc_to_block(dc, ee_cert))
    click.echo(f"wrote {out} expiry={dc.expiry(ee_cert)}")


@cli.command("validate-chain")
@click.argument("chain_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--anchors", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--target", required=True)
@click.option("--at", type=click.IntRange(min=0), required=True)
@click.option("--format", "fmt", type=FORMATS, default="text", show_default=True)
def validate_chain(chain_files, anchors, target, at, fmt):
    """Validate a chain (anchor-adjacent first) for TARGET at time --at."""
    chain = [c for f in chain_files for c in load_chain(f)]
    outcome = validate(chain, load_certificates(anchors), at, target)
    if fmt == "records":
        click.echo(canonical_dumps(outcome.to_record()).decode())
        sys.exit(0 if outcome.accepted else 1)
    if not outcome.accepted:
        _reject(outcome.reason.value)
    click.echo(f"ACCEPT effective={outcome.effective_names}")


@cli.command("validate-dc")
@click.argument("dc_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--ee", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--scheme", type=SCHEMES, required=True, help="Scheme used to sign the handshake.")
@click.option("--at", type=click.IntRange(min=0), required=True)
@click.option("--format", "fmt", type=FORMATS, default="text", show_default=True)
def validate_dc_cmd(dc_file, ee, scheme, at, fmt):
    """Validate a delegated credential against its end-entity certificate."""
    dc, _ = dc_from_block(Path(dc_file).read_text())
    ee_cert = _last_cert(ee)
    verdict = validate_dc(dc, ee_cert, at, SignatureScheme(scheme))
    if fmt == "records":
        record = {"verdict": "Accept" if verdict.accepted else "Reject",
                  "reason": None if verdict.accepted else verdict.reason.value,
                  "expiry": dc.expiry(ee_cert)}
        click.echo(canonical_dumps(record).decode())
        sys.exit(0 if verdict.accepted else 1)
    if not verdict.accepted:
        _reject(verdict.reason.value)
    click.echo(f"ACCEPT expiry={dc.expiry(ee_cert)}")


@cli.group(cls=_Group)
def server():
    """Certificate server (scheduled proxy issuance)."""


@server.command("run")
@click.option("--chain", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Chain ending with the parent certificate.")
@click.option("--key", "key_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--csr", "csr_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--start", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--period", type=click.IntRange(min=1))
@click.option("--validity", type=click.IntRange(min=1))
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, dir_okay=False),
              help="Schedule document instead of --start/--period/--validity.")
@click.option("--until", type=click.IntRange(min=0), required=True)
@click.option("--terminate-at", type=click.IntRange(min=0))
@click.option("--out", type=click.Path(file_okay=False), required=True)
def server_run(chain, key_path, csr_path, start, period, validity, schedule_path, until, terminate_at, out):
    """Tick the server at every period boundary up to --until, writing each proxy chain."""
    if schedule_path:
        (rec, _), = parse_blocks(Path(schedule_path).read_text(), SCHEDULE)
        schedule = IssuanceSchedule.from_record(rec)
    elif period is None or validity is None:
        raise click.UsageError("either --schedule or both --period and --validity are required")
    else:
        schedule = IssuanceSchedule(start, period, validity)
    base = load_chain(chain)
    try:
        srv = CertificateServer(base[-1], load_key(key_path), schedule, _load_csr(csr_path))
    except IssuanceError as exc:
        _reject(type(exc).__name__)
    t = schedule.start
    while t <= until:
        if terminate_at is not None and t >= terminate_at:
            srv.terminate_lease()
            click.echo(f"TERMINATED at={terminate_at}")
            break
        cert = srv.tick(t)
        if cert is not None:
            path = Path(out) / f"proxy-{cert.serial:04d}.pcert"
            write_text(path, dump_chain(base + [cert]))
            click.echo(f"ISSUED serial={cert.serial} not_before={cert.validity.not_before} "
                       f"not_after={cert.validity.not_after} file={path}")
        t += schedule.period
    if srv.last_not_after is not None:
        click.echo(f"LAST not_after={srv.last_not_after}")


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
def simulate(script):
    """Run a scenario script and print its tab-separated trace."""
    click.echo(simulate_file(script).to_tsv(), nl=False)


@cli.group(cls=_Group)
def matrix():
    """Scheme comparison matrix."""


def _profile_or_usage(keys):
    try:
        return matrix_mod.combine(keys)
    except matrix_mod.UnknownScheme as exc:
        raise click.UsageError(f"unknown scheme {exc}")


@matrix.command("show")
@click.argument("scheme")
def matrix_show(scheme):
    """Print one base or combination row."""
    m = matrix_mod.load_matrix()
    if scheme in m.combinations:
        profile = m.combinations[scheme]
    else:
        profile = _profile_or_usage([scheme])
    for line in matrix_mod.format_profile(profile):
        click.echo(line)


@matrix.command("combine")
@click.argument("schemes", nargs=-1, required=True)
def matrix_combine(schemes):
    """Combine schemes with the max/min calculus."""
    profile = _profile_or_usage(schemes)
    for line in matrix_mod.format_profile(profile):
        click.echo(line)
    r1, r2 = profile.satisfies_requirements()
    click.echo(f"R1={'yes' if r1 else 'no'} R2={'yes' if r2 else 'no'}")


@matrix.command("check")
def matrix_check():
    """Verify the shipped data and the combination calculus."""
    report = matrix_mod.check()
    for line in report.lines():
        click.echo(line)
    sys.exit(0 if report.ok else 1)


@cli.group(cls=_Group)
def fixtures():
    """Deterministic test PKI."""


@fixtures.command("generate")
@click.option("--seed", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def fixtures_generate(seed, out):
    """Write the fixture set to --out."""
    written = fixtures_mod.generate(fixtures_mod.FixtureSpec(seed=seed), out)
    click.echo(f"wrote {len(written)} files to {out}")


def main(argv=None):
    cli.main(args=argv, prog_name="proxypki")


if __name__ == "__main__":
    main()
