import io
import json
import random
import socket
import struct
import threading

import pytest

from abclab import scheme, wire
from abclab.curve import BASE, BASE_X, BASE_Y, NEUTRAL, point_equal, scalar_mul
from abclab.field import Q
from abclab.wire import (
    ConnectionFailed,
    Envelope,
    FrameTooLarge,
    MalformedCredential,
    MalformedEnvelope,
    MalformedJson,
    RemoteError,
    UnexpectedEof,
    WireError,
    client_issue,
    client_verify,
    credential_from_wire,
    credential_to_wire,
    decode_point,
    encode_point,
    frame_read,
    frame_write,
    key_from_wire,
    key_to_wire,
    parse_endpoint,
    public_from_wire,
    public_to_wire,
)


def round_trip(env):
    buf = io.BytesIO()
    frame_write(buf, env)
    buf.seek(0)
    return frame_read(buf)


class TestFraming:
    def test_round_trip_all_types(self):
        for env_type in wire.ENVELOPE_TYPES:
            env = Envelope(env_type, {"k": [1, "two", None]})
            got = round_trip(env)
            assert got.type == env.type
            assert got.payload == env.payload

    def test_zero_length_rejected(self):
        buf = io.BytesIO(struct.pack("!I", 0) + b"{}")
        with pytest.raises(FrameTooLarge):
            frame_read(buf)

    def test_oversize_declared_length_rejected_before_read(self):
        # 2 MiB declared, no body present at all.
        buf = io.BytesIO(struct.pack("!I", 2 * 1024 * 1024))
        with pytest.raises(FrameTooLarge):
            frame_read(buf)

    def test_truncated_header(self):
        with pytest.raises(UnexpectedEof):
            frame_read(io.BytesIO(b"\x00\x00"))

    def test_truncated_body(self):
        buf = io.BytesIO(struct.pack("!I", 10) + b"{}")
        with pytest.raises(UnexpectedEof):
            frame_read(buf)

    def test_bad_json(self):
        for body in (b"{nope", b"\xff\xfe\x00garbage!"):
            buf = io.BytesIO(struct.pack("!I", len(body)) + body)
            with pytest.raises(MalformedJson):
                frame_read(buf)

    def test_bad_envelope_shape(self):
        for doc in ([1, 2], {"type": "NOPE", "payload": {}}, {"type": "ERROR"}, {"type": "ERROR", "payload": 3}):
            body = json.dumps(doc).encode()
            buf = io.BytesIO(struct.pack("!I", len(body)) + body)
            with pytest.raises(MalformedEnvelope):
                frame_read(buf)

    def test_write_rejects_oversize_envelope(self):
        env = Envelope("ERROR", {"blob": "x" * (wire.MAX_FRAME_BYTES + 10)})
        with pytest.raises(FrameTooLarge):
            frame_write(io.BytesIO(), env)

    def test_fuzz_random_bytes_yield_typed_errors(self):
        rng = random.Random(0xF022)
        for _ in range(2000):
            blob = rng.randbytes(rng.randrange(0, 64))
            try:
                frame_read(io.BytesIO(blob))
            except WireError:
                pass


class TestPointCodec:
    def test_neutral(self):
        doc = encode_point(NEUTRAL)
        assert doc["x"] == "0" * 64
        assert doc["y"] == "0" * 63 + "1"

    def test_base_point_hex(self):
        doc = encode_point(BASE)
        assert doc["x"] == format(BASE_X, "064x")
        assert doc["y"] == format(BASE_Y, "064x")

    def test_round_trip_random_points(self):
        rng = random.Random(21)
        for _ in range(10):
            pt = scalar_mul(rng.randrange(1, Q), BASE)
            assert point_equal(decode_point(encode_point(pt)), pt)

    def test_rejects_bad_width(self):
        with pytest.raises(MalformedCredential):
            decode_point({"x": "00", "y": "0" * 64})

    def test_rejects_uppercase(self):
        doc = encode_point(BASE)
        with pytest.raises(MalformedCredential):
            decode_point({"x": doc["x"].upper(), "y": doc["y"]})

    def test_rejects_off_curve(self):
        with pytest.raises(MalformedCredential):
            decode_point({"x": format(1, "064x"), "y": format(1, "064x")})

    def test_rejects_non_canonical_coordinate(self):
        from abclab.field import P

        with pytest.raises(MalformedCredential):
            decode_point({"x": format(P, "064x"), "y": format(1, "064x")})


@pytest.fixture(scope="module")
def ecc_key():
    return scheme.ecc_keygen(random.Random(31))


@pytest.fixture(scope="module")
def rsa_key():
    return scheme.rsa_keygen(random.Random(32))


class TestCredentialCodec:
    def test_ecc_round_trip(self, ecc_key):
        cred = scheme.ecc_issue(ecc_key, scheme.DEFAULT_ATTRIBUTES[:3], random.Random(1))
        doc = credential_to_wire("ecc160", cred)
        assert doc["scheme"] == "ecc160"
        assert doc["attributes"] == [str(a) for a in cred.attributes]
        name, back = credential_from_wire(doc)
        assert name == "ecc160"
        # Decoding re-lifts points with Z=1, so compare projectively.
        assert back.attributes == cred.attributes
        assert back.response == cred.response
        assert point_equal(back.commitment, cred.commitment)
        assert point_equal(back.nonce_point, cred.nonce_point)
        assert scheme.ecc_verify(ecc_key.public, back)

    def test_modexp_round_trip(self, rsa_key):
        cred = scheme.rsa_issue(rsa_key, scheme.DEFAULT_ATTRIBUTES[:2])
        doc = credential_to_wire("modexp1024", cred)
        assert len(doc["signature"]) == 256
        name, back = credential_from_wire(doc)
        assert name == "modexp1024"
        assert back == cred

    def test_json_serializable(self, ecc_key):
        cred = scheme.ecc_issue(ecc_key, [7], random.Random(2))
        json.dumps(credential_to_wire("ecc160", cred))

    def test_unknown_scheme_rejected(self):
        with pytest.raises(MalformedCredential):
            credential_from_wire({"scheme": "nope", "attributes": ["1"]})

    def test_bad_attribute_strings_rejected(self):
        with pytest.raises(MalformedCredential):
            credential_from_wire({"scheme": "modexp1024", "attributes": ["1x"], "signature": "0" * 256})


class TestKeyCodec:
    def test_ecc_key_round_trip(self, ecc_key):
        name, back = key_from_wire(key_to_wire("ecc160", ecc_key))
        assert name == "ecc160"
        assert back.secret == ecc_key.secret
        assert point_equal(back.public, ecc_key.public)

    def test_modexp_key_round_trip(self, rsa_key):
        name, back = key_from_wire(key_to_wire("modexp1024", rsa_key))
        assert name == "modexp1024" and back == rsa_key

    def test_public_round_trip(self, ecc_key, rsa_key):
        name, pub = public_from_wire(public_to_wire("ecc160", ecc_key.public))
        assert name == "ecc160" and point_equal(pub, ecc_key.public)
        name, pub = public_from_wire(public_to_wire("modexp1024", rsa_key.public))
        assert name == "modexp1024" and pub == rsa_key.public


class TestParseEndpoint:
    def test_host_port(self):
        assert parse_endpoint("10.0.0.1:7001") == ("10.0.0.1", 7001)

    def test_port_only(self):
        assert parse_endpoint(":7002") == ("127.0.0.1", 7002)

    def test_rejects_garbage(self):
        for text in ("nohost", "host:", "host:abc"):
            with pytest.raises(ValueError):
                parse_endpoint(text)


@pytest.fixture(scope="module")
def services(ecc_key, rsa_key):
    """Issuer and verifier listening on ephemeral localhost ports."""
    keys = {"ecc160": ecc_key, "modexp1024": rsa_key}
    publics = {"ecc160": ecc_key.public, "modexp1024": rsa_key.public}
    issuer_sock = socket.create_server(("127.0.0.1", 0))
    verifier_sock = socket.create_server(("127.0.0.1", 0))
    issuer_ep = ("127.0.0.1", issuer_sock.getsockname()[1])
    verifier_ep = ("127.0.0.1", verifier_sock.getsockname()[1])
    stop = threading.Event()
    threads = [
        threading.Thread(target=wire.issuer_serve, args=(issuer_sock, keys),
                         kwargs={"stop_event": stop}, daemon=True),
        threading.Thread(target=wire.verifier_serve, args=(verifier_sock, publics),
                         kwargs={"stop_event": stop}, daemon=True),
    ]
    for t in threads:
        t.start()
    yield issuer_ep, verifier_ep
    stop.set()
    for t in threads:
        t.join(timeout=3)


class TestServices:
    def test_issue_verify_end_to_end(self, services, ecc_key):
        issuer_ep, verifier_ep = services
        for name in scheme.SCHEME_NAMES:
            doc, rt_ms = client_issue(issuer_ep, name, scheme.DEFAULT_ATTRIBUTES[:5])
            assert rt_ms > 0
            valid, _ = client_verify(verifier_ep, name, doc)
            assert valid

    def test_ten_fixture_attributes_verify_locally(self, services, ecc_key):
        issuer_ep, _ = services
        doc, _ = client_issue(issuer_ep, "ecc160", scheme.DEFAULT_ATTRIBUTES)
        name, cred = credential_from_wire(doc)
        assert scheme.verify(name, ecc_key.public, cred)

    def test_unknown_scheme(self, services):
        issuer_ep, _ = services
        with pytest.raises(RemoteError) as err:
            client_issue(issuer_ep, "rot13", [1])
        assert err.value.code == "UNKNOWN_SCHEME"

    def test_too_many_attributes(self, services):
        issuer_ep, _ = services
        with pytest.raises(RemoteError) as err:
            client_issue(issuer_ep, "ecc160", list(range(11)))
        assert err.value.code == "BAD_ATTRIBUTES"

    def test_malformed_credential_hex(self, services):
        _, verifier_ep = services
        doc = {"scheme": "ecc160", "attributes": ["1"], "commitment": {"x": "zz", "y": "qq"},
               "nonce_point": {"x": "0" * 64, "y": "0" * 64}, "response": "0" * 64}
        with pytest.raises(RemoteError) as err:
            client_verify(verifier_ep, "ecc160", doc)
        assert err.value.code == "MALFORMED"

    def test_tampered_attribute_fails_verification(self, services):
        issuer_ep, verifier_ep = services
        doc, _ = client_issue(issuer_ep, "ecc160", scheme.DEFAULT_ATTRIBUTES[:3])
        doc["attributes"][0] = str(int(doc["attributes"][0]) + 1)
        valid, _ = client_verify(verifier_ep, "ecc160", doc)
        assert not valid

    def test_dead_endpoint(self):
        # Grab a port and close it so nothing is listening there.
        probe = socket.create_server(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        with pytest.raises(ConnectionFailed):
            client_issue(("127.0.0.1", port), "ecc160", [1])

    def test_service_survives_garbage_connection(self, services):
        issuer_ep, _ = services
        # Raw garbage, then an abrupt close...
        with socket.create_connection(issuer_ep) as conn:
            conn.sendall(b"\xde\xad\xbe\xef" * 10)
        # ...must not stop the next legitimate client from being served.
        doc, _ = client_issue(issuer_ep, "ecc160", [42])
        assert doc["scheme"] == "ecc160"

    def test_error_reply_on_garbage_frame(self, services):
        issuer_ep, _ = services
        with socket.create_connection(issuer_ep) as conn:
            body = b"not json at all"
            conn.sendall(struct.pack("!I", len(body)) + body)
            with conn.makefile("rb") as stream:
                reply = frame_read(stream)
        assert reply.type == "ERROR"
        assert reply.payload["code"] == "MALFORMED"
