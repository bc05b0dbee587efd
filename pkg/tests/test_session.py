import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from proxypki.model import DAY, WEEK, FailureMode, ResumptionPolicy
from proxypki.session import (Event, HandshakeRejected, MalformedScript, Presented, Psk, ResumptionRejected,
                              Scenario, ServerBehavior, SessionReason, domain_policy, effective_policy,
                              failure_handling, full_handshake, parse_script, resume, run_scenario, simulate_file)
from proxypki.names import DnsName
from proxypki.validation import Reason

from conftest import GOLDEN
from pkitools import Pki

ALLOW, BOUND, DISALLOW = ResumptionPolicy.ALLOW, ResumptionPolicy.BOUND, ResumptionPolicy.DISALLOW
HONEST, MALICIOUS = ServerBehavior.HONEST, ServerBehavior.MALICIOUS_CHAINER
HOUR = 3600
PKI = Pki()


def short_chain(**ext):
    return [PKI.ica, PKI.ee, PKI.proxy("s1.example.com", "s1", window=(0, HOUR), **ext)]


def handshake(policy=ALLOW, behavior=MALICIOUS, chain=None, t=0):
    return full_handshake(chain or short_chain(), PKI.anchors, t, policy, behavior, "s1.example.com")


def test_handshake_allow_gives_psk():
    conn, psk = handshake()
    assert not conn.resumed and conn.credential_expiry == HOUR
    assert psk.lifetime == WEEK and psk.lineage_depth == 0


def test_honest_psk_capped_at_credential():
    _, psk = handshake(behavior=HONEST, t=1000)
    assert psk.lifetime == HOUR - 1000


def test_handshake_disallow_gives_no_psk():
    conn, psk = handshake(DISALLOW)
    assert psk is None and conn.policy is DISALLOW


def test_expired_chain_no_connection():
    with pytest.raises(HandshakeRejected) as exc:
        handshake(t=HOUR)
    assert exc.value.reason is Reason.EXPIRED


def test_malicious_chaining_under_allow():
    _, psk = handshake()
    for k in (1, 2, 3):
        conn, psk = resume(psk, 6 * k * DAY, ALLOW, MALICIOUS)
        assert conn.lineage_depth == k
        assert psk.expires_at == 6 * k * DAY + WEEK
    assert conn.established_at == 18 * DAY > conn.credential_expiry


def test_bound_rejects_after_credential_expiry():
    _, psk = handshake(BOUND)
    assert psk.expires_at == HOUR
    with pytest.raises(ResumptionRejected) as exc:
        resume(psk, 6 * DAY, BOUND, MALICIOUS)
    assert exc.value.reason is SessionReason.CREDENTIAL_EXPIRED
    conn, nxt = resume(psk, HOUR - 1, BOUND, MALICIOUS)
    assert conn.resumed and nxt.expires_at == HOUR


def test_consumed_psk_rejected():
    _, psk = handshake()
    resume(psk, 10, ALLOW, MALICIOUS)
    with pytest.raises(ResumptionRejected) as exc:
        resume(psk, 20, ALLOW, MALICIOUS)
    assert exc.value.reason is SessionReason.PSK_CONSUMED


def test_disallow_and_expiry_reasons():
    _, psk = handshake()
    with pytest.raises(ResumptionRejected) as exc:
        resume(psk, 10, DISALLOW, MALICIOUS)
    assert exc.value.reason is SessionReason.POLICY_FORBIDS_RESUMPTION
    with pytest.raises(ResumptionRejected) as exc:
        resume(psk, WEEK, ALLOW, MALICIOUS)
    assert exc.value.reason is SessionReason.PSK_EXPIRED


def test_psk_lifetime_cap():
    with pytest.raises(ValueError):
        Psk(0, WEEK + 1, 10)


@pytest.mark.parametrize("client,domain", list(itertools.product(ResumptionPolicy, [None, *ResumptionPolicy])))
def test_policy_precedence(client, domain):
    got = effective_policy(client, domain)
    if domain is None:
        assert got is client
    else:
        assert got.strictness == max(client.strictness, domain.strictness)
        assert got in (client, domain)


def test_certificate_policy_overrides_permissive_client():
    chain = short_chain(resumption_policy=DISALLOW)
    assert domain_policy(chain) is DISALLOW
    conn, psk = handshake(ALLOW, chain=chain)
    assert conn.policy is DISALLOW and psk is None
    bound_chain = short_chain(resumption_policy=BOUND)
    conn, psk = handshake(DISALLOW, chain=bound_chain)
    assert conn.policy is DISALLOW


def test_failure_handling():
    assert failure_handling(short_chain()) is FailureMode.HARD
    soft = short_chain(failure_mode=FailureMode.SOFT)
    assert failure_handling(soft) is FailureMode.SOFT
    assert failure_handling(soft, FailureMode.HARD) is FailureMode.HARD
    assert failure_handling(short_chain(failure_mode=FailureMode.HARD), FailureMode.SOFT) is FailureMode.HARD


def test_empty_script_empty_trace():
    trace = run_scenario(Scenario(events=[]))
    assert trace.rows == [] and trace.connections == 0
    assert trace.to_tsv() == ("t\tevent\tverdict\treason\tcredential\tlineage\tpsk_expiry\n"
                              "#\ttotals\tconnections=0\tfull_handshakes=0\tmax_lineage=0\n")


def test_out_of_order_events_rejected():
    with pytest.raises(MalformedScript):
        run_scenario(Scenario(events=[Event(5, "RESUME"), Event(1, "RESUME")]))


@pytest.mark.parametrize("script", [
    "AT x RESUME\n",
    "AT 5 RESUME\nAT 1 RESUME\n",
    "AT 1 FLY\n",
    "AT -1 RESUME\n",
    "AT 1 HANDSHAKE missing.pcert POLICY allow\n",
    "AT 1 HANDSHAKE c.pcert POLICY sometimes\n",
    "BEHAVIOR sneaky\n",
    "NONSENSE\n",
])
def test_malformed_scripts(script, tmp_path):
    with pytest.raises(MalformedScript):
        parse_script(script, tmp_path)


def test_resume_without_session():
    trace = run_scenario(Scenario(events=[Event(0, "RESUME")]))
    assert trace.rows[0].reason == SessionReason.NO_SESSION.value


GOLDEN_SCRIPTS = ["chaining-allow", "chaining-bound", "chaining-disallow", "chaining-cert-disallow",
                  "chaining-honest", "lease"]


@pytest.mark.parametrize("name", GOLDEN_SCRIPTS)
def test_golden_traces(fixture_dir, name):
    trace = simulate_file(fixture_dir / "scripts" / f"{name}.scn")
    assert trace.to_tsv() == (GOLDEN / f"{name}.tsv").read_text()


def test_refresh_extends_bound_session(fixture_dir):
    trace = simulate_file(fixture_dir / "scripts" / "lease.scn")
    resumed = [r for r in trace.rows if r.event == "RESUME" and r.verdict == "ACCEPT"]
    assert [r.t for r in resumed] == [3000, 7000, 12599]
    # 7000 is past the first certificate's expiry, so only the refresh made it acceptable
    assert trace.credential_expiry["server#1"] < 7000


# -- properties --------------------------------------------------------------

def scenario(events, behavior=MALICIOUS, chain=None):
    return Scenario(events=events, target=DnsName.parse("s1.example.com"), anchors=PKI.anchors, behavior=behavior,
                    credentials={"c": Presented(chain or short_chain())})


@given(st.integers(HOUR, 10 * 365 * DAY))
def test_chaining_is_unbounded_under_allow(horizon):
    times = list(range(0, horizon + 6 * DAY, 6 * DAY))
    events = [Event(0, "HANDSHAKE", "c", ALLOW)] + [Event(t, "RESUME") for t in times[1:]]
    trace = run_scenario(scenario(events))
    assert trace.full_handshakes == 1
    assert trace.latest_connection > horizon
    assert trace.max_lineage == len(times) - 1


event_lists = st.lists(
    st.tuples(st.integers(0, 2 * HOUR) | st.integers(0, 3 * WEEK), st.sampled_from(["HANDSHAKE", "RESUME", "RESUME", "RESUME"]),
              st.sampled_from(list(ResumptionPolicy))),
    max_size=12)


def to_events(raw, policy=None):
    return [Event(t, kind, "c" if kind == "HANDSHAKE" else None,
                  (policy or p) if kind == "HANDSHAKE" else None)
            for t, kind, p in sorted(raw, key=lambda e: e[0])]


@given(event_lists, st.sampled_from([HONEST, MALICIOUS]))
def test_bound_never_connects_after_credential_expiry(raw, behavior):
    trace = run_scenario(scenario(to_events(raw, BOUND), behavior))
    for row in trace.rows:
        if row.verdict == "ACCEPT":
            assert row.t < trace.credential_expiry[row.credential]


@given(event_lists, st.sampled_from([HONEST, MALICIOUS]))
def test_disallow_connections_equal_handshakes(raw, behavior):
    trace = run_scenario(scenario(to_events(raw, DISALLOW), behavior))
    assert trace.connections == trace.full_handshakes


@given(event_lists, st.sampled_from([HONEST, MALICIOUS]))
def test_psk_lifetime_never_exceeds_week(raw, behavior):
    trace = run_scenario(scenario(to_events(raw), behavior))
    for row in trace.rows:
        if row.verdict == "ACCEPT" and row.psk_expiry != "-":
            assert int(row.psk_expiry) - row.t <= WEEK


@given(event_lists)
def test_honest_server_never_outlives_credential(raw):
    trace = run_scenario(scenario(to_events(raw), HONEST))
    for row in trace.rows:
        if row.verdict == "ACCEPT":
            assert row.t < trace.credential_expiry[row.credential]


@given(event_lists)
def test_simulation_is_deterministic(raw):
    a = run_scenario(scenario(to_events(raw))).to_tsv()
    b = run_scenario(scenario(to_events(raw))).to_tsv()
    assert a == b
