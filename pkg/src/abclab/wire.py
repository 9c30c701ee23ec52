"""Length-prefixed JSON protocol between user, issuer, and verifier.

Frames are a 4-byte big-endian length followed by a UTF-8 JSON body of at
most 1 MiB.  Services are deliberately sequential: one connection, one
request, one response, close.  Keeping concurrency out of the loop keeps
the benchmark's timings clean.
"""

from __future__ import annotations

import json
import logging
import socket
import struct
import time
from dataclasses import dataclass

from . import scheme
from .curve import AffinePoint, ExtendedPoint, NotOnCurve, from_affine, to_affine
from .field import P, Q

log = logging.getLogger(__name__)

MAX_FRAME_BYTES = 1 << 20

ENVELOPE_TYPES = (
    "ISSUE_REQUEST",
    "ISSUE_RESPONSE",
    "VERIFY_REQUEST",
    "VERIFY_RESPONSE",
    "ERROR",
)

DEFAULT_ISSUER_PORT = 7001
DEFAULT_VERIFIER_PORT = 7002
ISSUER_ADDR_ENV = "ABC_ISSUER_ADDR"
VERIFIER_ADDR_ENV = "ABC_VERIFIER_ADDR"


class WireError(Exception):
    """Base class for every protocol-level failure."""


class FrameTooLarge(WireError):
    """Declared frame length is 0 or exceeds MAX_FRAME_BYTES."""


class UnexpectedEof(WireError):
    """Stream ended mid-frame."""


class MalformedJson(WireError):
    """Frame body is not valid UTF-8 JSON."""


class MalformedEnvelope(WireError):
    """JSON parsed but is not a {type, payload} envelope with a known tag."""


class MalformedCredential(WireError):
    """A wire credential or key document failed to decode."""


class ConnectionFailed(WireError):
    """Could not reach the remote service."""


class RemoteError(WireError):
    """The remote service answered with an ERROR envelope."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass
class Envelope:
    type: str
    payload: dict


# ---------------------------------------------------------------------------
# Framing
# ---------------------------------------------------------------------------


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            raise UnexpectedEof(f"stream ended with {remaining} of {n} bytes unread")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def frame_write(stream, env: Envelope) -> None:
    body = json.dumps({"type": env.type, "payload": env.payload}).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"envelope serializes to {len(body)} bytes")
    stream.write(struct.pack("!I", len(body)) + body)
    stream.flush()


def frame_read(stream) -> Envelope:
    """Read one envelope; the length is validated before any body allocation."""
    (length,) = struct.unpack("!I", _read_exact(stream, 4))
    if length == 0 or length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"declared frame length {length}")
    body = _read_exact(stream, length)
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJson(str(exc)) from None
    if not isinstance(doc, dict):
        raise MalformedEnvelope("body is not a JSON object")
    env_type = doc.get("type")
    payload = doc.get("payload")
    if env_type not in ENVELOPE_TYPES:
        raise MalformedEnvelope(f"unknown envelope type {env_type!r}")
    if not isinstance(payload, dict):
        raise MalformedEnvelope("payload is not a JSON object")
    return Envelope(env_type, payload)


# ---------------------------------------------------------------------------
# Hex codecs: fixed-width lowercase, big-endian
# ---------------------------------------------------------------------------


def _to_hex(value: int, width: int) -> str:
    return format(value, f"0{width}x")


def _from_hex(text, width: int, bound: int | None = None) -> int:
    if not isinstance(text, str) or len(text) != width or text.lower() != text:
        raise MalformedCredential(f"expected {width} lowercase hex chars")
    try:
        value = int(text, 16)
    except ValueError:
        raise MalformedCredential("invalid hex digits") from None
    if bound is not None and value >= bound:
        raise MalformedCredential("value out of range")
    return value


def encode_point(pt: ExtendedPoint) -> dict:
    aff = to_affine(pt)
    return {"x": _to_hex(aff.x, 64), "y": _to_hex(aff.y, 64)}


def decode_point(doc) -> ExtendedPoint:
    if not isinstance(doc, dict):
        raise MalformedCredential("point must be an object with x and y")
    x = _from_hex(doc.get("x"), 64, P)
    y = _from_hex(doc.get("y"), 64, P)
    try:
        return from_affine(AffinePoint(x, y))
    except NotOnCurve as exc:
        raise MalformedCredential(str(exc)) from None


def _attrs_to_wire(attrs) -> list[str]:
    return [str(a) for a in attrs]


def _attrs_from_wire(values) -> tuple[int, ...]:
    if not isinstance(values, list):
        raise MalformedCredential("attributes must be a list of decimal strings")
    out = []
    for item in values:
        if not isinstance(item, str):
            raise MalformedCredential("attributes must be decimal strings")
        try:
            out.append(int(item, 10))
        except ValueError:
            raise MalformedCredential(f"bad decimal attribute {item!r}") from None
    return tuple(out)


def credential_to_wire(scheme_name: str, cred) -> dict:
    if scheme_name == "ecc160":
        return {
            "scheme": scheme_name,
            "attributes": _attrs_to_wire(cred.attributes),
            "commitment": encode_point(cred.commitment),
            "nonce_point": encode_point(cred.nonce_point),
            "response": _to_hex(cred.response, 64),
        }
    if scheme_name == "modexp1024":
        return {
            "scheme": scheme_name,
            "attributes": _attrs_to_wire(cred.attributes),
            "signature": _to_hex(cred.signature, 256),
        }
    raise scheme.UnknownScheme(scheme_name)


def credential_from_wire(doc) -> tuple[str, object]:
    if not isinstance(doc, dict):
        raise MalformedCredential("credential must be a JSON object")
    scheme_name = doc.get("scheme")
    attrs = _attrs_from_wire(doc.get("attributes"))
    if scheme_name == "ecc160":
        return scheme_name, scheme.EccCredential(
            attributes=attrs,
            commitment=decode_point(doc.get("commitment")),
            nonce_point=decode_point(doc.get("nonce_point")),
            response=_from_hex(doc.get("response"), 64, Q),
        )
    if scheme_name == "modexp1024":
        return scheme_name, scheme.ModexpCredential(
            attributes=attrs,
            signature=_from_hex(doc.get("signature"), 256),
        )
    raise MalformedCredential(f"unknown scheme tag {scheme_name!r}")


def public_to_wire(scheme_name: str, public) -> dict:
    if scheme_name == "ecc160":
        return {"scheme": scheme_name, "public": encode_point(public)}
    if scheme_name == "modexp1024":
        n, e = public
        return {"scheme": scheme_name, "n": _to_hex(n, 256), "e": _to_hex(e, 256)}
    raise scheme.UnknownScheme(scheme_name)


def public_from_wire(doc):
    scheme_name = doc.get("scheme")
    if scheme_name == "ecc160":
        return scheme_name, decode_point(doc.get("public"))
    if scheme_name == "modexp1024":
        n = _from_hex(doc.get("n"), 256)
        e = _from_hex(doc.get("e"), 256)
        return scheme_name, (n, e)
    raise MalformedCredential(f"unknown scheme tag {scheme_name!r}")


def key_to_wire(scheme_name: str, key) -> dict:
    if scheme_name == "ecc160":
        return {
            "scheme": scheme_name,
            "secret": _to_hex(key.secret, 64),
            "public": encode_point(key.public),
        }
    if scheme_name == "modexp1024":
        return {
            "scheme": scheme_name,
            "p1": _to_hex(key.p1, 128),
            "p2": _to_hex(key.p2, 128),
            "n": _to_hex(key.n, 256),
            "e": _to_hex(key.e, 256),
            "d": _to_hex(key.d, 256),
        }
    raise scheme.UnknownScheme(scheme_name)


def key_from_wire(doc):
    scheme_name = doc.get("scheme")
    if scheme_name == "ecc160":
        return scheme_name, scheme.EccIssuerKey(
            secret=_from_hex(doc.get("secret"), 64, Q),
            public=decode_point(doc.get("public")),
        )
    if scheme_name == "modexp1024":
        return scheme_name, scheme.ModexpIssuerKey(
            p1=_from_hex(doc.get("p1"), 128),
            p2=_from_hex(doc.get("p2"), 128),
            n=_from_hex(doc.get("n"), 256),
            e=_from_hex(doc.get("e"), 256),
            d=_from_hex(doc.get("d"), 256),
        )
    raise MalformedCredential(f"unknown scheme tag {scheme_name!r}")


# ---------------------------------------------------------------------------
# Services
# ---------------------------------------------------------------------------


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def _as_listener(endpoint) -> socket.socket:
    if isinstance(endpoint, socket.socket):
        return endpoint
    return socket.create_server(endpoint)


def _error_envelope(code: str, message: str) -> Envelope:
    return Envelope("ERROR", {"code": code, "message": message})


def _serve(endpoint, handler, stop_event) -> None:
    """Sequential accept loop; one failed client never affects the next."""
    listener = _as_listener(endpoint)
    listener.settimeout(0.2)
    try:
        while stop_event is None or not stop_event.is_set():
            try:
                conn, _addr = listener.accept()
            except socket.timeout:
                continue
            try:
                with conn, conn.makefile("rwb") as stream:
                    try:
                        request = frame_read(stream)
                        response = handler(request)
                    except WireError as exc:
                        response = _error_envelope("MALFORMED", str(exc))
                    except Exception as exc:  # never let the loop die
                        log.exception("handler failure")
                        response = _error_envelope("INTERNAL", str(exc))
                    frame_write(stream, response)
            except OSError:
                log.warning("client connection dropped", exc_info=True)
    finally:
        listener.close()


def _handle_issue(request: Envelope, issuer_keys: dict) -> Envelope:
    if request.type != "ISSUE_REQUEST":
        return _error_envelope("UNSUPPORTED_TYPE", request.type)
    scheme_name = request.payload.get("scheme")
    if scheme_name not in issuer_keys:
        return _error_envelope("UNKNOWN_SCHEME", str(scheme_name))
    try:
        attrs = _attrs_from_wire(request.payload.get("attributes"))
        scheme.check_attributes(attrs)
    except (MalformedCredential, ValueError) as exc:
        return _error_envelope("BAD_ATTRIBUTES", str(exc))
    key = issuer_keys[scheme_name]
    start = time.perf_counter()
    cred = scheme.issue(scheme_name, key, attrs)
    issue_ms = (time.perf_counter() - start) * 1e3
    return Envelope(
        "ISSUE_RESPONSE",
        {"credential": credential_to_wire(scheme_name, cred), "issue_ms": issue_ms},
    )


def _handle_verify(request: Envelope, publics: dict) -> Envelope:
    if request.type != "VERIFY_REQUEST":
        return _error_envelope("UNSUPPORTED_TYPE", request.type)
    scheme_name = request.payload.get("scheme")
    if scheme_name not in publics:
        return _error_envelope("UNKNOWN_SCHEME", str(scheme_name))
    try:
        wire_scheme, cred = credential_from_wire(request.payload.get("credential"))
        if wire_scheme != scheme_name:
            raise MalformedCredential("scheme tag mismatch")
    except MalformedCredential as exc:
        return _error_envelope("MALFORMED", str(exc))
    start = time.perf_counter()
    try:
        valid = scheme.verify(scheme_name, publics[scheme_name], cred)
    except scheme.MalformedPoint:
        valid = False
    verify_ms = (time.perf_counter() - start) * 1e3
    return Envelope("VERIFY_RESPONSE", {"valid": valid, "verify_ms": verify_ms})


def issuer_serve(endpoint, issuer_keys: dict, *, stop_event=None) -> None:
    """Serve ISSUE_REQUESTs until stop_event is set (forever if None)."""
    _serve(endpoint, lambda req: _handle_issue(req, issuer_keys), stop_event)


def verifier_serve(endpoint, publics: dict, *, stop_event=None) -> None:
    """Serve VERIFY_REQUESTs until stop_event is set (forever if None)."""
    _serve(endpoint, lambda req: _handle_verify(req, publics), stop_event)


# ---------------------------------------------------------------------------
# Client side
# ---------------------------------------------------------------------------


def _exchange(endpoint: tuple[str, int], request: Envelope) -> tuple[Envelope, float]:
    try:
        conn = socket.create_connection(endpoint, timeout=10)
    except OSError as exc:
        raise ConnectionFailed(f"cannot reach {endpoint[0]}:{endpoint[1]}: {exc}") from None
    with conn, conn.makefile("rwb") as stream:
        start = time.perf_counter()
        frame_write(stream, request)
        response = frame_read(stream)
        round_trip_ms = (time.perf_counter() - start) * 1e3
    if response.type == "ERROR":
        raise RemoteError(
            str(response.payload.get("code")), str(response.payload.get("message"))
        )
    return response, round_trip_ms


def client_issue(endpoint, scheme_name: str, attrs) -> tuple[dict, float]:
    """One issuance exchange; returns the wire credential and the
    request-to-response wall time in milliseconds."""
    request = Envelope(
        "ISSUE_REQUEST", {"scheme": scheme_name, "attributes": _attrs_to_wire(attrs)}
    )
    response, round_trip_ms = _exchange(endpoint, request)
    if response.type != "ISSUE_RESPONSE":
        raise MalformedEnvelope(f"expected ISSUE_RESPONSE, got {response.type}")
    return response.payload["credential"], round_trip_ms


def client_verify(endpoint, scheme_name: str, wire_credential: dict) -> tuple[bool, float]:
    request = Envelope(
        "VERIFY_REQUEST", {"scheme": scheme_name, "credential": wire_credential}
    )
    response, round_trip_ms = _exchange(endpoint, request)
    if response.type != "VERIFY_RESPONSE":
        raise MalformedEnvelope(f"expected VERIFY_RESPONSE, got {response.type}")
    return bool(response.payload["valid"]), round_trip_ms
