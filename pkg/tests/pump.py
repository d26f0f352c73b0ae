"""Move frames between two in-memory Sessions, optionally corrupting one."""

from rmpf.wire import HandshakeError, NeedMoreBytes, ProtocolError, decode_frame


def split_frames(data):
    out = []
    while data:
        _, used = decode_frame(data)
        out.append(data[:used])
        data = data[used:]
    return out


def pump(initiator, responder, tamper=None):
    """Run a handshake to quiescence.

    `tamper(raw_frame_bytes) -> bytes` is applied to every frame the initiator
    or responder emits.  Returns {"initiator": key-or-exception, ...}; a side
    left waiting when nothing is in flight is reported as TimeoutError.
    """
    sides = {"initiator": initiator, "responder": responder}
    inbox = {"initiator": bytearray(), "responder": bytearray()}
    result = {}
    peer = {"initiator": "responder", "responder": "initiator"}

    def emit(src, data):
        for raw in split_frames(bytes(data)):
            inbox[peer[src]] += tamper(raw) if tamper else raw

    emit("initiator", initiator.start())
    progress = True
    while progress:
        progress = False
        for name, sess in sides.items():
            if name in result:
                continue
            try:
                frame, used = decode_frame(inbox[name])
            except NeedMoreBytes:
                continue
            except ProtocolError as exc:
                result[name] = exc
                inbox[peer[name]] += b"\x00\x00\x00\x05\x7fframe"
                progress = True
                continue
            del inbox[name][:used]
            progress = True
            try:
                out = sess.receive(frame)
            except HandshakeError as exc:
                result[name] = exc
                if exc.reply:
                    inbox[peer[name]] += exc.reply
                continue
            if out:
                emit(name, out)
            if sess.done:
                result[name] = sess.key
    for name in sides:
        result.setdefault(name, TimeoutError("stalled"))
    return result
