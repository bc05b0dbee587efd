"""Replay PSK chaining against a one-hour proxy certificate under each resumption policy.

Prints, per policy, how long after the credential's expiry the client still
holds a connection, for a range of attacker horizons.
"""
import argparse
import tempfile
from pathlib import Path

from proxypki.fixtures import FixtureSpec, generate
from proxypki.model import DAY
from proxypki.session import parse_script, run_scenario

RESUME_EVERY = 6 * DAY


def script(policy: str, horizon: int) -> str:
    lines = ["TARGET s1.example.com", "ANCHORS anchors/root.pcert", "BEHAVIOR malicious",
             f"AT 0 HANDSHAKE chains/proxy-s1.pcert POLICY {policy}"]
    lines += [f"AT {t} RESUME" for t in range(RESUME_EVERY, horizon + RESUME_EVERY, RESUME_EVERY)]
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--horizons", type=int, nargs="+", default=[14, 30, 90, 365], help="days")
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        generate(FixtureSpec(seed=args.seed), root)
        print("policy\thorizon_days\tconnections\tfull_handshakes\tmax_lineage\tlast_connection_s\tcredential_expiry_s")
        for policy in ("allow", "bound", "disallow"):
            for days in args.horizons:
                trace = run_scenario(parse_script(script(policy, days * DAY), root))
                expiry = max(trace.credential_expiry.values())
                print(f"{policy}\t{days}\t{trace.connections}\t{trace.full_handshakes}\t{trace.max_lineage}"
                      f"\t{trace.latest_connection}\t{expiry}")


if __name__ == "__main__":
    main()
