"""Event transport: TCP line sender with a disk spool, and the collector.

Wire format is newline-delimited JSON over a persistent TCP connection, one
UTF-8 object per line, no acknowledgements. Delivery is at-least-once: a
line that cannot be sent is appended to a spool file, and the whole spool is
replayed on the next successful connection, so duplicates are possible but
silent loss is not. Lines longer than 1 MiB are a protocol error and are
dropped by the collector.
"""

from __future__ import annotations

import json
import logging
import select
import socket
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import BindFailureError, EndpointUnreachableError

log = logging.getLogger(__name__)

MAX_LINE_BYTES = 1 << 20


@dataclass(frozen=True)
class DeliveryReport:
    """Outcome of a send session.

    `sent` counts lines written to the socket, replays included;
    `respooled` counts appends to the spool file; `spooled` is what the
    spool still holds, i.e. lines never confirmed onto the wire.
    """

    sent: int
    respooled: int
    spooled: int


def _peer_closed(sock: socket.socket) -> bool:
    """True when the peer has closed; detected without consuming data.

    The collector never talks back, so a readable socket means EOF or a
    reset, not payload.
    """
    try:
        readable, _, _ = select.select([sock], [], [], 0)
        if not readable:
            return False
        return sock.recv(1, socket.MSG_PEEK) == b""
    except OSError:
        return True


class TcpEventSender:
    """Synchronous order-preserving line sender with spool-based retry.

    A failed connection cycle (retry_max attempts with exponential backoff)
    puts the sender into a permanent give-up state for the rest of its
    life: every further line goes straight to the spool, bounding how long
    a dead endpoint can stall the caller. A connection lost after a
    successful cycle gets one fresh cycle on the next send.
    """

    def __init__(
        self,
        host: str,
        port: int,
        spool_path: str | Path,
        retry_max: int = 5,
        backoff_ms: int = 100,
        connect_timeout_s: float = 2.0,
    ):
        self._host = host
        self._port = port
        self._spool_path = Path(spool_path)
        self._retry_max = retry_max
        self._backoff_ms = backoff_ms
        self._timeout = connect_timeout_s
        self._sock: socket.socket | None = None
        self.gave_up = False
        self.sent = 0
        self.respooled = 0

    # -- spool -------------------------------------------------------------

    def _spool(self, line: str) -> None:
        with open(self._spool_path, "a", encoding="utf-8") as fh:
            fh.write(line)
        self.respooled += 1

    def _spool_lines(self) -> list[str]:
        try:
            with open(self._spool_path, "r", encoding="utf-8") as fh:
                return [ln + "\n" for ln in fh.read().splitlines() if ln]
        except FileNotFoundError:
            return []

    def spooled_count(self) -> int:
        return len(self._spool_lines())

    def _rewrite_spool(self, lines: list[str]) -> None:
        with open(self._spool_path, "w", encoding="utf-8") as fh:
            fh.writelines(lines)

    # -- connection --------------------------------------------------------

    def _drop(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None

    def _connect_cycle(self) -> bool:
        """One reconnection cycle; exponential backoff between attempts."""
        for attempt in range(self._retry_max):
            try:
                self._sock = socket.create_connection(
                    (self._host, self._port), timeout=self._timeout
                )
                self._sock.settimeout(self._timeout)
                return True
            except OSError:
                if attempt + 1 < self._retry_max:
                    time.sleep(self._backoff_ms * (2**attempt) / 1000.0)
        log.warning(
            "endpoint %s:%d unreachable after %d attempts; spooling",
            self._host, self._port, self._retry_max,
        )
        return False

    def _replay(self) -> bool:
        """Push spooled lines down the live socket, oldest first.

        On mid-replay failure the unsent tail is written back, so spool
        order always matches the original send order.
        """
        pending = self._spool_lines()
        if not pending:
            return True
        for i, line in enumerate(pending):
            try:
                self._sock.sendall(line.encode("utf-8"))
                self.sent += 1
            except OSError:
                self._rewrite_spool(pending[i:])
                self._drop()
                return False
        self._rewrite_spool([])
        return True

    # -- sending -----------------------------------------------------------

    def send(self, line: str) -> bool:
        """Send one newline-terminated line; False means it went to spool."""
        if not line.endswith("\n"):
            line += "\n"
        if self.gave_up:
            self._spool(line)
            return False
        if self._sock is not None and _peer_closed(self._sock):
            self._drop()
        if self._sock is None:
            if not self._connect_cycle():
                self.gave_up = True
                self._spool(line)
                return False
            if not self._replay():
                self._spool(line)
                return False
        try:
            self._sock.sendall(line.encode("utf-8"))
            self.sent += 1
            return True
        except OSError:
            self._drop()
            self._spool(line)
            return False

    def close(self) -> DeliveryReport:
        self._drop()
        return DeliveryReport(self.sent, self.respooled, self.spooled_count())


def send_tcp(
    lines,
    host: str,
    port: int,
    spool_path: str | Path,
    retry_max: int = 5,
    backoff_ms: int = 100,
) -> DeliveryReport:
    """Send an iterable of NDJSON lines, spooling what cannot be delivered.

    Raises EndpointUnreachableError (report attached) when a connection
    cycle was exhausted at any point; the spool file keeps the undelivered
    lines either way.
    """
    sender = TcpEventSender(host, port, spool_path, retry_max, backoff_ms)
    for line in lines:
        sender.send(line)
    report = sender.close()
    if sender.gave_up:
        raise EndpointUnreachableError(
            f"{host}:{port} unreachable; {report.spooled} lines in spool "
            f"{spool_path}",
            report=report,
        )
    return report


# ------------------------------------------------------------------ receiver

class Collector:
    """Threaded line collector: every valid JSON line is appended to a file.

    One thread per connection; appends are serialized by a lock and flushed
    per line, so a line is either fully in the file or absent. Malformed
    JSON and oversized lines are logged and skipped without dropping the
    connection.
    """

    def __init__(self, host: str, port: int, out_path: str | Path):
        self._out_path = Path(out_path)
        try:
            self._listener = socket.create_server(
                (host, port), reuse_port=False
            )
        except OSError as exc:
            raise BindFailureError(f"cannot bind {host}:{port}: {exc}") from exc
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._conns: set[socket.socket] = set()
        self._out = None
        self.received = 0
        self.skipped = 0

    @property
    def port(self) -> int:
        return self._listener.getsockname()[1]

    def start(self) -> "Collector":
        self._out = open(self._out_path, "a", encoding="utf-8")
        # timeout lets the accept loop notice stop() even if the wake-up
        # shutdown is missed
        self._listener.settimeout(0.25)
        accept = threading.Thread(target=self._accept_loop, daemon=True)
        accept.start()
        self._threads.append(accept)
        return self

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except TimeoutError:
                continue
            except OSError:
                return  # listener closed
            # lets a successor rebind the port while this connection's
            # kernel state is still draining
            try:
                conn.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            except OSError:
                pass
            with self._lock:
                self._conns.add(conn)
            worker = threading.Thread(
                target=self._serve_conn, args=(conn,), daemon=True
            )
            worker.start()
            self._threads.append(worker)

    def _handle_line(self, raw: bytes) -> None:
        if len(raw) > MAX_LINE_BYTES:
            log.warning("dropping oversized line (%d bytes)", len(raw))
            self.skipped += 1
            return
        try:
            text = raw.decode("utf-8")
            json.loads(text)
        except (UnicodeDecodeError, json.JSONDecodeError):
            log.warning("dropping malformed line: %r", raw[:80])
            self.skipped += 1
            return
        with self._lock:
            self._out.write(text + "\n")
            self._out.flush()
            self.received += 1

    def _serve_conn(self, conn: socket.socket) -> None:
        buffer = b""
        discarding = False
        try:
            while True:
                chunk = conn.recv(65536)
                if not chunk:
                    break
                buffer += chunk
                while True:
                    newline = buffer.find(b"\n")
                    if newline < 0:
                        break
                    raw, buffer = buffer[:newline], buffer[newline + 1 :]
                    if discarding:
                        discarding = False  # tail of an oversized line
                        self.skipped += 1
                    else:
                        self._handle_line(raw)
                if len(buffer) > MAX_LINE_BYTES:
                    # line grew past the limit with no newline yet: drop
                    # what we have and keep discarding until one shows up
                    log.warning("dropping oversized line in progress")
                    buffer = b""
                    discarding = True
        except OSError:
            pass
        finally:
            with self._lock:
                self._conns.discard(conn)
            try:
                conn.close()
            except OSError:
                pass

    def stop(self) -> None:
        self._stop.set()
        # shutdown, not close: close alone leaves the kernel socket alive
        # while a thread is still blocked inside accept/recv on it
        try:
            self._listener.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            conns = list(self._conns)
        for conn in conns:
            # linger-0 resets the connection on close, releasing the port
            # immediately so a restarted collector can rebind at once
            try:
                conn.setsockopt(
                    socket.SOL_SOCKET,
                    socket.SO_LINGER,
                    struct.pack("ii", 1, 0),
                )
            except OSError:
                pass
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        for thread in self._threads:
            thread.join(timeout=2.0)
        with self._lock:
            for conn in list(self._conns):
                try:
                    conn.close()
                except OSError:
                    pass
            self._conns.clear()
        if self._out is not None:
            self._out.close()
            self._out = None


def serve_collector(bind: str, out_path: str | Path) -> None:
    """Run a collector until interrupted; `bind` is host:port."""
    host, _, port_text = bind.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        raise BindFailureError(f"bad bind address {bind!r}")
    collector = Collector(host or "127.0.0.1", port, out_path)
    collector.start()
    log.info("collecting on %s:%d -> %s", host, collector.port, out_path)
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        collector.stop()
