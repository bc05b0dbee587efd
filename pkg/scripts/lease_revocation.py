"""Measure the exposure window after a delegation lease is terminated.

Runs a certificate server with the given period and validity, terminates the
lease at every offset within one period, and reports how long the last
issued proxy certificate keeps validating.
"""
import argparse

from proxypki.issuance import CertificateServer, IssuanceSchedule, ProxyCSR
from proxypki.model import (Certificate, Extensions, KeyPair, KeyUsage, SignatureScheme, ValidityPeriod,
                            sign_certificate)
from proxypki.names import NameSet, parse_subject_name
from proxypki.validation import validate


def build_parent():
    root_key = KeyPair.from_seed(SignatureScheme.ED25519, b"lease:root")
    ee_key = KeyPair.from_seed(SignatureScheme.ED25519, b"lease:ee")
    window = ValidityPeriod(0, 10**8)
    root = sign_certificate(Certificate(parse_subject_name("root.test"), "root.test", 1, window, root_key.public,
                                        Extensions(is_ca=True, key_usage=frozenset(KeyUsage))), root_key)
    ee = sign_certificate(Certificate(parse_subject_name("*.example.com"), "root.test", 2, window, ee_key.public),
                          root_key)
    return root, ee, ee_key


def exposure(period: int, validity: int, terminate_at: int, root, ee, ee_key) -> tuple[int, int]:
    csr = ProxyCSR(KeyPair.from_seed(SignatureScheme.ED25519, b"lease:edge").public,
                   NameSet.parse(["s1.example.com"]))
    srv = CertificateServer(ee, ee_key, IssuanceSchedule(0, period, validity), csr)
    t = 0
    while t <= terminate_at:
        srv.tick(t)
        t += period
    srv.terminate_lease()
    last = srv.last_not_after
    # the last accepted instant, found by checking just before and at not_after
    assert validate([ee, srv.latest()], [root], last - 1, "s1.example.com").accepted
    assert not validate([ee, srv.latest()], [root], last, "s1.example.com").accepted
    return last - terminate_at, srv.issued_count


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--period", type=int, default=3600)
    ap.add_argument("--validity", type=int, default=5400)
    ap.add_argument("--step", type=int, default=600)
    ap.add_argument("--base", type=int, default=12 * 3600, help="termination offsets start here")
    args = ap.parse_args()
    root, ee, ee_key = build_parent()
    print("terminate_at_s\tissued\texposure_s")
    worst = 0
    for off in range(0, args.period, args.step):
        window, issued = exposure(args.period, args.validity, args.base + off, root, ee, ee_key)
        worst = max(worst, window)
        print(f"{args.base + off}\t{issued}\t{window}")
    print(f"# worst-case exposure {worst}s (validity {args.validity}s)")


if __name__ == "__main__":
    main()
