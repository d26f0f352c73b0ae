"""Length-prefixed framing and the handshake state machine.

Frame layout: u32 big-endian payload length, one type byte, payload.

    initiator                          responder
      PARAMS   ------------------------>
      TOKEN_I  ------------------------>
               <------------------------  TOKEN_R
      CONFIRM_I ----------------------->
               <------------------------  CONFIRM_R   (or ERROR)

The session key is bound to SHA-256 over the exact bytes of the first three
frames.  `Session` does no I/O; `run_initiator` / `run_responder` drive it
over anything with ``sendall`` and ``recv`` (sockets, socketpairs).
"""

from __future__ import annotations

from dataclasses import dataclass
import enum
import hashlib
import hmac
import logging
import random
import struct
from typing import Optional

from .kap import (
    MalformedTokenError, ParamsFormatError, PublicParams, SharedKey, Token,
    derive_key, gen_private, make_token,
)

log = logging.getLogger(__name__)

HEADER = struct.Struct(">IB")
MAX_PAYLOAD = 1 << 20


class MsgType(enum.IntEnum):
    PARAMS = 0x01
    TOKEN_I = 0x02
    TOKEN_R = 0x03
    CONFIRM_I = 0x04
    CONFIRM_R = 0x05
    ERROR = 0x7F


class NeedMoreBytes(Exception):
    """Buffer holds only a prefix of a frame."""


class HandshakeError(Exception):
    """Base for handshake failures. `reply` is an ERROR frame owed to the peer, if any."""

    def __init__(self, message, reply: Optional[bytes] = None):
        super().__init__(message)
        self.reply = reply


class ProtocolError(HandshakeError):
    pass


class PeerError(ProtocolError):
    """The peer aborted with an ERROR frame."""


class KeyConfirmationError(HandshakeError):
    pass


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    payload: bytes = b""


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(frame.payload)} bytes exceeds cap")
    return HEADER.pack(len(frame.payload), frame.msg_type) + frame.payload


def _parse_header(data) -> tuple[int, MsgType]:
    length, raw_type = HEADER.unpack_from(data)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared length {length} exceeds {MAX_PAYLOAD}")
    try:
        return length, MsgType(raw_type)
    except ValueError:
        raise ProtocolError(f"unknown message type 0x{raw_type:02x}") from None


def decode_frame(data: bytes) -> tuple[Frame, int]:
    """Decode one frame from the front of `data`; returns (frame, bytes consumed)."""
    if len(data) < HEADER.size:
        raise NeedMoreBytes(HEADER.size - len(data))
    length, msg_type = _parse_header(data)
    end = HEADER.size + length
    if len(data) < end:
        raise NeedMoreBytes(end - len(data))
    return Frame(msg_type, bytes(data[HEADER.size:end])), end


def _error_frame(reason: str) -> bytes:
    return encode_frame(Frame(MsgType.ERROR, reason.encode()[:1024]))


def confirm_tag(label: bytes, session_key: bytes) -> bytes:
    return hashlib.sha256(label + session_key).digest()


class Phase(enum.Enum):
    START = "start"
    PARAMS_SENT = "params-sent"
    PARAMS_RECEIVED = "params-received"
    TOKEN_SENT = "token-sent"
    CONFIRMED = "confirmed"
    FAILED = "failed"


class Session:
    """One side of a handshake.  Feed it received frames, send what it returns."""

    def __init__(self, role: str, rng: random.Random, params: Optional[PublicParams] = None,
                 *, expected_params: Optional[PublicParams] = None, min_p_bits: int = 3):
        if role not in ("initiator", "responder"):
            raise ValueError(f"bad role {role!r}")
        if role == "initiator" and params is None:
            raise ValueError("initiator needs params")
        self.role = role
        self.rng = rng
        self.params = params
        self.expected_params = expected_params
        self.min_p_bits = min_p_bits
        self.phase = Phase.START
        self.priv = None
        self.key: Optional[SharedKey] = None
        self._transcript = hashlib.sha256()

    def _record(self, raw: bytes) -> bytes:
        self._transcript.update(raw)
        return raw

    def _send(self, msg_type, payload=b"") -> bytes:
        return self._record(encode_frame(Frame(msg_type, payload)))

    def _fail(self, exc_type, message, notify=True):
        self.phase = Phase.FAILED
        raise exc_type(message, _error_frame(message) if notify else None)

    @property
    def done(self) -> bool:
        return self.phase is Phase.CONFIRMED

    def start(self) -> bytes:
        """Initiator opening flight: PARAMS then TOKEN_I."""
        if self.role != "initiator" or self.phase is not Phase.START:
            self._fail(ProtocolError, "start() is only valid for a fresh initiator", notify=False)
        out = self._send(MsgType.PARAMS, self.params.to_bytes())
        self.phase = Phase.PARAMS_SENT
        self.priv = gen_private(self.params, self.rng)
        out += self._send(MsgType.TOKEN_I, make_token(self.params, self.priv).to_bytes())
        self.phase = Phase.TOKEN_SENT
        return out

    def receive(self, frame: Frame) -> bytes:
        """Consume one frame; returns bytes to send (possibly empty)."""
        if self.phase in (Phase.FAILED, Phase.CONFIRMED):
            raise ProtocolError(f"session is {self.phase.value}; no further frames accepted")
        if frame.msg_type is MsgType.ERROR:
            self.phase = Phase.FAILED
            reason = frame.payload.decode(errors="replace")
            awaiting_confirm = self.role == "initiator" and self.key is not None
            raise (KeyConfirmationError if awaiting_confirm else PeerError)(f"peer error: {reason}")
        raw = encode_frame(frame)
        if self.role == "initiator":
            return self._initiator_step(frame, raw)
        return self._responder_step(frame, raw)

    def _initiator_step(self, frame, raw):
        if frame.msg_type is MsgType.TOKEN_R and self.phase is Phase.TOKEN_SENT and self.key is None:
            self._record(raw)
            peer = self._parse_token(frame.payload)
            self.key = derive_key(self.params, self.priv, peer, self._transcript.digest())
            return self._send(MsgType.CONFIRM_I, confirm_tag(b"confirm-I", self.key.session_key))
        if frame.msg_type is MsgType.CONFIRM_R and self.key is not None:
            self._record(raw)
            if not hmac.compare_digest(frame.payload, confirm_tag(b"confirm-R", self.key.session_key)):
                self._fail(KeyConfirmationError, "key confirmation failed")
            self.phase = Phase.CONFIRMED
            return b""
        self._fail(ProtocolError, f"unexpected {frame.msg_type.name} in phase {self.phase.value}")

    def _responder_step(self, frame, raw):
        if frame.msg_type is MsgType.PARAMS and self.phase is Phase.START:
            self._record(raw)
            self.params = self._validate_params(frame.payload)
            self.phase = Phase.PARAMS_RECEIVED
            return b""
        if frame.msg_type is MsgType.TOKEN_I and self.phase is Phase.PARAMS_RECEIVED:
            self._record(raw)
            peer = self._parse_token(frame.payload)
            self.priv = gen_private(self.params, self.rng)
            out = self._send(MsgType.TOKEN_R, make_token(self.params, self.priv).to_bytes())
            self.key = derive_key(self.params, self.priv, peer, self._transcript.digest())
            self.phase = Phase.TOKEN_SENT
            return out
        if frame.msg_type is MsgType.CONFIRM_I and self.phase is Phase.TOKEN_SENT:
            self._record(raw)
            if not hmac.compare_digest(frame.payload, confirm_tag(b"confirm-I", self.key.session_key)):
                self._fail(KeyConfirmationError, "key confirmation failed")
            out = self._send(MsgType.CONFIRM_R, confirm_tag(b"confirm-R", self.key.session_key))
            self.phase = Phase.CONFIRMED
            return out
        self._fail(ProtocolError, f"unexpected {frame.msg_type.name} in phase {self.phase.value}")

    def _validate_params(self, payload) -> PublicParams:
        try:
            params = PublicParams.from_bytes(payload)
        except (ParamsFormatError, ValueError) as exc:
            self._fail(ProtocolError, f"invalid params: {exc}")
        if params.p.bit_length() < self.min_p_bits:
            self._fail(ProtocolError, f"invalid params: p has fewer than {self.min_p_bits} bits")
        if self.expected_params is not None and params != self.expected_params:
            self._fail(ProtocolError, "invalid params: not the pinned parameter set")
        return params

    def _parse_token(self, payload) -> Token:
        try:
            return Token.from_bytes(payload, self.params)
        except MalformedTokenError as exc:
            self._fail(ProtocolError, f"malformed token: {exc}")


class FrameReader:
    """Pulls whole frames off a blocking byte stream."""

    def __init__(self, stream):
        self.stream = stream
        self.buf = bytearray()

    def read_frame(self) -> Frame:
        while True:
            try:
                frame, used = decode_frame(self.buf)
            except NeedMoreBytes as more:
                chunk = self.stream.recv(max(more.args[0], 4096))
                if not chunk:
                    raise ConnectionError("peer closed the connection mid-handshake") from None
                self.buf += chunk
                continue
            del self.buf[:used]
            return frame


def _drive(session: Session, stream, opening: bytes = b"") -> SharedKey:
    reader = FrameReader(stream)
    try:
        if opening:
            stream.sendall(opening)
        while not session.done:
            try:
                frame = reader.read_frame()
            except ProtocolError as exc:
                session.phase = Phase.FAILED
                exc.reply = _error_frame(str(exc))
                raise
            out = session.receive(frame)
            if out:
                stream.sendall(out)
    except HandshakeError as exc:
        if exc.reply:
            try:
                stream.sendall(exc.reply)
            except OSError:
                pass
        log.debug("%s handshake failed: %s", session.role, exc)
        raise
    return session.key


def _apply_timeout(stream, timeout):
    if timeout is not None and hasattr(stream, "settimeout"):
        stream.settimeout(timeout)


def run_initiator(stream, params: PublicParams, rng: random.Random,
                  timeout: Optional[float] = None) -> SharedKey:
    """Run the initiator side to completion; returns the confirmed key."""
    _apply_timeout(stream, timeout)
    session = Session("initiator", rng, params)
    return _drive(session, stream, session.start())


def run_responder(stream, rng: random.Random, timeout: Optional[float] = None, *,
                  expected_params: Optional[PublicParams] = None, min_p_bits: int = 3) -> SharedKey:
    _apply_timeout(stream, timeout)
    session = Session("responder", rng, expected_params=expected_params, min_p_bits=min_p_bits)
    return _drive(session, stream)
