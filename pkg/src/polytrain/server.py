"""Live session service over a localhost stream socket.

Serves one client at a time. The client drives the clock: every
InputFrame advances the engine exactly one frame, and the reply is a
Guidance message, a StateUpdate, and any transition events. Engine time
is authoritative; client timestamps are logged, never scheduled on. If
the client goes silent for over a second the session simply pauses,
because a frozen input stream freezes the frame clock by construction.

Redaction: while a frame is in testing mode, outgoing messages carry no
score and no reference target. Scores still go to the log, which never
leaves the server.

Outbound messages pass through a bounded queue; when a slow client lets
it fill, StateUpdates are dropped (they're periodic), while Guidance,
Event, and Summary messages block until there is room.
"""

from __future__ import annotations

import functools
import http.server
import logging
import queue
import socket
import threading
from pathlib import Path

from .kinematics import PlanarPoint
from .protocol import (
    PROTOCOL_VERSION,
    Message,
    MessageKind,
    MessageReader,
    MessageWriter,
    ProtocolError,
    SequenceValidator,
)
from .session import (
    HandSample,
    OutOfWorkspaceError,
    SensedInput,
    SessionConfig,
    SessionEngine,
    SessionEvent,
    StepResult,
)
from .trainer import Hand, TrainingMode

log = logging.getLogger(__name__)

CLIENT_TIMEOUT_S = 1.0
FRAME_GAP_WARN_FACTOR = 5.0
SEND_QUEUE_SIZE = 256

# Event payload fields that are score-valued and must not reach a client
# while the session is in testing mode.
_SCORE_EVENT_FIELDS = ("block_avg", "best")


def guidance_payload(result: StepResult) -> dict:
    """Per-hand power and target for the client's pull cue; no newtons."""
    payload: dict = {
        "t": result.t,
        "power": {"nd": result.powers[0], "dom": result.powers[1]},
    }
    if result.mode is not TrainingMode.TEST and result.targets is not None:
        payload["targets"] = {
            hand.value: {"y": point.y, "z": point.z}
            for hand, point in result.targets.items()
        }
    return payload


def state_update_payload(result: StepResult) -> dict:
    payload = {"t": result.t, "mode": int(result.mode), "elapsed": result.t}
    if result.mode is not TrainingMode.TEST:
        payload["score"] = result.sample.current_score
    return payload


def event_payload(event: SessionEvent, mode: TrainingMode) -> dict:
    payload = {"t": event.t, "event": event.kind}
    for key, value in event.payload.items():
        if mode is TrainingMode.TEST and key in _SCORE_EVENT_FIELDS:
            continue
        payload[key] = value
    return payload


class _Sender:
    """Sender thread with a bounded queue; drops only StateUpdates when full."""

    def __init__(self, sock: socket.socket, queue_size: int = SEND_QUEUE_SIZE):
        self._sock = sock
        self._queue: queue.Queue[bytes | None] = queue.Queue(maxsize=queue_size)
        self._writer = MessageWriter()
        self.dropped = 0
        self._thread = threading.Thread(target=self._run, name="polytrain-send", daemon=True)
        self._thread.start()

    def send(self, kind: MessageKind, payload: dict) -> None:
        # Only the connection thread sends, so seq order equals queue order.
        data = self._writer.encode(kind, payload)
        if kind is MessageKind.STATE_UPDATE:
            try:
                self._queue.put_nowait(data)
            except queue.Full:
                self.dropped += 1
            return
        self._queue.put(data)

    def close(self) -> None:
        try:
            self._queue.put(None, timeout=1.0)
        except queue.Full:
            pass
        self._thread.join(timeout=5.0)

    def _run(self) -> None:
        # Keep draining after a send failure so producers never block on
        # a dead connection.
        failed = False
        while True:
            data = self._queue.get()
            if data is None:
                return
            if failed:
                continue
            try:
                self._sock.sendall(data)
            except OSError:
                failed = True


class SessionServer:
    """Accepts one client at a time and runs live sessions for it."""

    def __init__(
        self,
        config: SessionConfig,
        host: str = "127.0.0.1",
        port: int = 0,
        out_dir: str | Path | None = None,
        ui_dir: str | Path | None = None,
        ui_port: int = 0,
    ):
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(0.2)
        self.host, self.port = self._listener.getsockname()[:2]
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._session_counter = 0
        self._ui_server = None
        self.ui_port = None
        if ui_dir is not None:
            handler = functools.partial(
                http.server.SimpleHTTPRequestHandler, directory=str(ui_dir)
            )
            self._ui_server = http.server.ThreadingHTTPServer((host, ui_port), handler)
            self.ui_port = self._ui_server.server_address[1]
            threading.Thread(
                target=self._ui_server.serve_forever, name="polytrain-ui", daemon=True
            ).start()

    def start(self) -> "SessionServer":
        self._thread = threading.Thread(target=self._accept_loop, name="polytrain-accept", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
        self._listener.close()
        if self._ui_server is not None:
            self._ui_server.shutdown()

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stop.is_set():
                self._stop.wait(0.5)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def __enter__(self) -> "SessionServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            log.info("client connected from %s", addr)
            try:
                self._handle_client(conn)
            except Exception:
                log.exception("client handler failed")
            finally:
                conn.close()
                log.info("client disconnected")

    def _handle_client(self, conn: socket.socket) -> None:
        conn.settimeout(CLIENT_TIMEOUT_S)
        reader = MessageReader(conn)
        validator = SequenceValidator()
        sender = _Sender(conn)
        engine: SessionEngine | None = None
        paused = False
        last_client_t: float | None = None
        try:
            if not self._handshake(reader, validator, sender):
                return
            while not self._stop.is_set():
                try:
                    msg = reader.read()
                except socket.timeout:
                    if engine is not None and not engine.ended and not paused:
                        paused = True
                        log.warning(
                            "no input for %.1f s; session paused at t=%.2f",
                            CLIENT_TIMEOUT_S, engine.t,
                        )
                    continue
                except ProtocolError as exc:
                    sender.send(MessageKind.ERROR, {"code": "Protocol", "message": str(exc)})
                    return
                if msg is None:
                    if engine is not None and not engine.ended:
                        engine.finish("disconnected")
                        self._persist(engine)
                    return
                try:
                    validator.check(msg)
                except ProtocolError as exc:
                    sender.send(MessageKind.ERROR, {"code": "Sequence", "message": str(exc)})
                    return
                if paused:
                    paused = False
                    log.info("input resumed")
                engine, last_client_t = self._dispatch(msg, engine, sender, last_client_t)
        finally:
            sender.close()

    def _handshake(self, reader: MessageReader, validator: SequenceValidator, sender: _Sender) -> bool:
        try:
            msg = reader.read()
        except (socket.timeout, ProtocolError) as exc:
            log.warning("handshake failed: %s", exc)
            return False
        if msg is None:
            return False
        try:
            validator.check(msg)
        except ProtocolError:
            return False
        if msg.kind is not MessageKind.HELLO:
            sender.send(MessageKind.ERROR, {"code": "Protocol", "message": "expected Hello"})
            return False
        version = msg.payload.get("version")
        if version != PROTOCOL_VERSION:
            sender.send(
                MessageKind.ERROR,
                {
                    "code": "VersionMismatch",
                    "message": f"server speaks v{PROTOCOL_VERSION}, client sent {version!r}",
                },
            )
            return False
        sender.send(
            MessageKind.HELLO,
            {"version": PROTOCOL_VERSION, "frame_rate": self.config.frame_rate},
        )
        return True

    def _dispatch(
        self,
        msg: Message,
        engine: SessionEngine | None,
        sender: _Sender,
        last_client_t: float | None,
    ) -> tuple[SessionEngine | None, float | None]:
        kind = msg.kind
        if kind is MessageKind.START_SESSION:
            if engine is not None and not engine.ended:
                sender.send(
                    MessageKind.ERROR,
                    {"code": "SessionActive", "message": "stop the current session first"},
                )
                return engine, last_client_t
            subject = str(msg.payload.get("subject", "anon"))
            engine = SessionEngine(self.config, subject=subject)
            log.info("session started for %r", subject)
            return engine, None
        if kind is MessageKind.STOP_SESSION:
            if engine is None or engine.ended:
                sender.send(MessageKind.ERROR, {"code": "NoSession", "message": "no active session"})
                return engine, last_client_t
            engine.finish("stopped")
            self._finalize(engine, sender)
            return engine, last_client_t
        if kind is MessageKind.INPUT_FRAME:
            if engine is None or engine.ended:
                sender.send(MessageKind.ERROR, {"code": "NoSession", "message": "no active session"})
                return engine, last_client_t
            return self._input_frame(msg, engine, sender, last_client_t)
        sender.send(
            MessageKind.ERROR,
            {"code": "UnexpectedKind", "message": f"client may not send {kind.value}"},
        )
        return engine, last_client_t

    def _input_frame(
        self,
        msg: Message,
        engine: SessionEngine,
        sender: _Sender,
        last_client_t: float | None,
    ) -> tuple[SessionEngine, float | None]:
        try:
            sensed = _parse_input_frame(msg.payload)
        except (KeyError, TypeError, ValueError) as exc:
            sender.send(MessageKind.ERROR, {"code": "BadFrame", "message": str(exc)})
            return engine, last_client_t
        if sensed.client_t is not None and last_client_t is not None:
            gap = sensed.client_t - last_client_t
            if gap > FRAME_GAP_WARN_FACTOR * self.config.dt:
                log.warning("frame gap %.3f s (> %g frame periods)", gap, FRAME_GAP_WARN_FACTOR)
        try:
            result = engine.step(sensed)
        except OutOfWorkspaceError as exc:
            sender.send(MessageKind.ERROR, {"code": "OutOfWorkspace", "message": str(exc)})
            return engine, sensed.client_t
        for event in result.events:
            sender.send(MessageKind.EVENT, event_payload(event, result.mode))
        sender.send(MessageKind.GUIDANCE, guidance_payload(result))
        sender.send(MessageKind.STATE_UPDATE, state_update_payload(result))
        if engine.ended:
            self._finalize(engine, sender)
        return engine, sensed.client_t

    def _finalize(self, engine: SessionEngine, sender: _Sender) -> None:
        summary = dict(engine.summary())
        path = self._persist(engine)
        if path is not None:
            summary["log_path"] = str(path)
        sender.send(MessageKind.SUMMARY, summary)

    def _persist(self, engine: SessionEngine) -> Path | None:
        if self.out_dir is None:
            return None
        from .logio import write_log, write_summary

        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._session_counter += 1
        base = f"{engine.subject}-{self._session_counter:03d}"
        path = write_log(engine.records, self.out_dir / f"{base}.jsonl")
        write_summary(engine.summary(), self.out_dir / f"{base}.summary.json")
        log.info("session log written to %s", path)
        return path


def _parse_input_frame(payload: dict) -> SensedInput:
    hands = {}
    for name in ("nd", "dom"):
        data = payload[name]
        hands[name] = HandSample(
            pos=PlanarPoint(float(data["y"]), float(data["z"])),
            vy=float(data["vy"]),
            vz=float(data["vz"]),
        )
    client_t = payload.get("t")
    return SensedInput(
        nd=hands["nd"], dom=hands["dom"],
        client_t=None if client_t is None else float(client_t),
    )


def serve(
    config: SessionConfig,
    host: str = "127.0.0.1",
    port: int = 4321,
    out_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> None:
    """Blocking entry point: run the service until interrupted."""
    server = SessionServer(config, host=host, port=port, out_dir=out_dir, ui_dir=ui_dir)
    log.info("listening on %s:%d", server.host, server.port)
    if server.ui_port is not None:
        log.info("serving UI bundle on http://%s:%d/", server.host, server.ui_port)
    server.serve_forever()
