"""Master-worker execution of fitness evaluation.

The master owns every random draw and the whole optimizer state; workers
are stateless word scorers. Each iteration the master assigns one particle
per worker (round-robin when workers are scarce), barrier-waits for all
results, merges them in particle-id order, then broadcasts the new global
best. Because workers are pure, a single-worker in-process run and a
many-worker socket run produce bit-identical ledgers.

Two transports share the same framed protocol: an in-process loopback
(queues carrying encoded frames) and TCP sockets.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from swarmselect.bpso import (
    EngineConfig,
    RngStreams,
    apply_initial_reports,
    absorb,
    initialize_swarm,
    move,
    should_terminate,
)
from swarmselect.core import BinaryPosition, FitnessReport
from swarmselect.fitness import FitnessEvaluator
from swarmselect.phylo.tree import TopologySignature
from swarmselect.protocol import (
    FrameError,
    WireMessage,
    decode_frame,
    encode_frame,
)

log = logging.getLogger("swarmselect.runtime")


class ChannelClosed(Exception):
    pass


class LocalChannel:
    """Queue-backed channel that still moves encoded frames end to end."""

    def __init__(self, inbox: "queue.Queue[bytes | None]", outbox: "queue.Queue[bytes | None]"):
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False

    def send(self, m: WireMessage) -> None:
        if self._closed:
            raise ChannelClosed("channel is closed")
        self._outbox.put(encode_frame(m))

    def recv(self) -> WireMessage:
        data = self._inbox.get()
        if data is None:
            raise ChannelClosed("peer closed the channel")
        return decode_frame(data)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(None)


def local_channel_pair() -> tuple[LocalChannel, LocalChannel]:
    a: "queue.Queue[bytes | None]" = queue.Queue()
    b: "queue.Queue[bytes | None]" = queue.Queue()
    return LocalChannel(a, b), LocalChannel(b, a)


class SocketChannel:
    """Length-prefixed frames over a stream socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._lock = threading.Lock()

    def _recv_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = self._sock.recv(n - len(buf))
            if not chunk:
                raise ChannelClosed("socket closed by peer")
            buf += chunk
        return buf

    def send(self, m: WireMessage) -> None:
        data = encode_frame(m)
        try:
            with self._lock:
                self._sock.sendall(data)
        except OSError as exc:
            raise ChannelClosed(f"send failed: {exc}") from exc

    def recv(self) -> WireMessage:
        try:
            header = self._recv_exact(4)
            length = int.from_bytes(header, "big")
            payload = self._recv_exact(length) if length else b""
        except OSError as exc:
            raise ChannelClosed(f"recv failed: {exc}") from exc
        return decode_frame(header + payload)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def worker_loop(evaluator: FitnessEvaluator, channel) -> None:
    """Serve ASSIGN requests until STOP or the channel goes away.

    A malformed frame triggers an ERROR reply and closes the connection.
    """
    channel.send(WireMessage(kind="HELLO", run_id=""))
    while True:
        try:
            m = channel.recv()
        except ChannelClosed:
            return
        except FrameError as exc:
            try:
                channel.send(WireMessage(kind="ERROR", run_id="", detail=str(exc)))
            except ChannelClosed:
                pass
            channel.close()
            return
        if m.kind == "STOP":
            channel.close()
            return
        if m.kind == "BEST":
            continue  # informational; updates are centralized at the master
        if m.kind == "ASSIGN":
            word = BinaryPosition.from_text(m.word)
            report = evaluator.evaluate(word)
            channel.send(
                WireMessage(
                    kind="RESULT",
                    run_id=m.run_id,
                    iteration=m.iteration,
                    particle_id=m.particle_id,
                    word=m.word,
                    b=report.b,
                    p=report.p,
                    fitness=report.fitness,
                    topology_id=report.topology_id,
                )
            )
            continue
        log.warning("worker ignoring unexpected %s message", m.kind)


@dataclass(frozen=True)
class LedgerRecord:
    iteration: int
    particle_id: int
    word: str
    b: float
    p: float
    fitness: float
    topology_id: str
    wall_time: float

    def report(self) -> FitnessReport:
        topo = TopologySignature.from_id(self.topology_id) if self.topology_id else None
        return FitnessReport(b=self.b, p=self.p, fitness=self.fitness, topology=topo)


class RunLedger:
    """Append-only evaluation log; the trajectory is replayable from it."""

    def __init__(self, run_id: str):
        self.run_id = run_id
        self.records: list[LedgerRecord] = []
        self.events: list[tuple] = []
        self.final_best: tuple[str, FitnessReport] | None = None

    def append(self, iteration: int, particle_id: int, word: str, r: FitnessReport) -> None:
        self.records.append(
            LedgerRecord(
                iteration=iteration,
                particle_id=particle_id,
                word=word,
                b=r.b,
                p=r.p,
                fitness=r.fitness,
                topology_id=r.topology_id,
                wall_time=time.monotonic(),
            )
        )

    def best_trace(self) -> list[tuple[int, str, float]]:
        """(iteration, word, fitness) of the running global best."""
        trace: list[tuple[int, str, float]] = []
        best_word, best_fit = "", float("-inf")
        by_iter: dict[int, list[LedgerRecord]] = {}
        for rec in self.records:
            by_iter.setdefault(rec.iteration, []).append(rec)
        for it in sorted(by_iter):
            for rec in sorted(by_iter[it], key=lambda x: x.particle_id):
                if rec.fitness > best_fit:
                    best_word, best_fit = rec.word, rec.fitness
            trace.append((it, best_word, best_fit))
        return trace

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(
                    f"{rec.iteration}\t{rec.particle_id}\t{rec.word}\t"
                    f"{rec.b!r}\t{rec.p!r}\t{rec.fitness!r}\t{rec.topology_id}\n"
                )

    @classmethod
    def read(cls, path: str | Path) -> "RunLedger":
        ledger = cls(run_id=Path(path).stem)
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            it, pid, word, b, p, fitness, topo = (line.split("\t") + [""])[:7]
            ledger.records.append(
                LedgerRecord(
                    iteration=int(it),
                    particle_id=int(pid),
                    word=word,
                    b=float(b),
                    p=float(p),
                    fitness=float(fitness),
                    topology_id=topo,
                    wall_time=0.0,
                )
            )
        return ledger


class _Inbox:
    """Reader threads funnel every channel's messages into one queue."""

    CLOSED = object()

    def __init__(self, channels: Sequence):
        self.queue: "queue.Queue[tuple[int, object]]" = queue.Queue()
        self.threads = []
        for idx, ch in enumerate(channels):
            t = threading.Thread(target=self._pump, args=(idx, ch), daemon=True)
            t.start()
            self.threads.append(t)

    def _pump(self, idx: int, ch) -> None:
        while True:
            try:
                m = ch.recv()
            except (ChannelClosed, FrameError):
                self.queue.put((idx, self.CLOSED))
                return
            self.queue.put((idx, m))
            if m.kind == "ERROR":
                return

    def join(self) -> None:
        for t in self.threads:
            t.join(timeout=5.0)


class LocalTransport:
    """In-process workers on threads; frames still cross the codec."""

    def __init__(self, evaluator_factory: Callable[[], FitnessEvaluator], n_workers: int):
        if n_workers < 1:
            raise ValueError("need at least one worker")
        self.evaluator_factory = evaluator_factory
        self.n_workers = n_workers
        self._threads: list[threading.Thread] = []

    def start(self) -> list[LocalChannel]:
        channels = []
        for _ in range(self.n_workers):
            master_side, worker_side = local_channel_pair()
            ev = self.evaluator_factory()
            t = threading.Thread(target=worker_loop, args=(ev, worker_side), daemon=True)
            t.start()
            self._threads.append(t)
            channels.append(master_side)
        return channels

    def stop(self) -> None:
        for t in self._threads:
            t.join(timeout=10.0)
        self._threads.clear()


class TcpMasterTransport:
    """Master-side listener; workers connect and say HELLO."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, n_workers: int = 1,
                 accept_timeout: float = 60.0):
        if n_workers < 1:
            raise ValueError("need at least one worker")
        self.host = host
        self.n_workers = n_workers
        self.accept_timeout = accept_timeout
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(accept_timeout)
        self.port = self._listener.getsockname()[1]

    def start(self) -> list[SocketChannel]:
        channels = []
        deadline = time.monotonic() + self.accept_timeout
        while len(channels) < self.n_workers:
            if time.monotonic() > deadline:
                raise TimeoutError(
                    f"only {len(channels)}/{self.n_workers} workers connected"
                )
            conn, _ = self._listener.accept()
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            channels.append(SocketChannel(conn))
        return channels

    def stop(self) -> None:
        self._listener.close()


def serve_worker(evaluator: FitnessEvaluator, host: str, port: int) -> None:
    """Connect to a master and serve evaluations until STOP."""
    sock = socket.create_connection((host, port))
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    worker_loop(evaluator, SocketChannel(sock))


class _Barrier:
    """Collects one RESULT per particle, surviving worker loss."""

    def __init__(self, channels, inbox: _Inbox, run_id: str, timeout: float):
        self.channels = channels
        self.inbox = inbox
        self.run_id = run_id
        self.timeout = timeout
        self.live = set(range(len(channels)))
        self.events: list[tuple] = []

    def _assign(self, worker: int, iteration: int, particle_id: int, word: str) -> bool:
        try:
            self.channels[worker].send(
                WireMessage(
                    kind="ASSIGN",
                    run_id=self.run_id,
                    iteration=iteration,
                    particle_id=particle_id,
                    word=word,
                )
            )
            return True
        except ChannelClosed:
            return False

    def _next_worker(self, counter: list[int]) -> int:
        if not self.live:
            raise RuntimeError("all workers lost")
        order = sorted(self.live)
        worker = order[counter[0] % len(order)]
        counter[0] += 1
        return worker

    def collect(self, iteration: int, words: Sequence[str]) -> list[FitnessReport]:
        """ASSIGN all words, wait for all RESULTs, reassigning on loss."""
        counter = [0]
        outstanding: dict[int, tuple[int, str]] = {}  # particle -> (worker, word)
        for pid, word in enumerate(words):
            while True:
                worker = self._next_worker(counter)
                if self._assign(worker, iteration, pid, word):
                    outstanding[pid] = (worker, word)
                    break
                self._drop(worker, iteration, outstanding, counter)
        results: dict[int, FitnessReport] = {}
        deadline = time.monotonic() + self.timeout
        while len(results) < len(words):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError(f"barrier timed out at iteration {iteration}")
            try:
                idx, item = self.inbox.queue.get(timeout=remaining)
            except queue.Empty:
                continue
            if item is _Inbox.CLOSED:
                self._drop(idx, iteration, outstanding, counter, results)
                continue
            m = item
            if m.kind == "ERROR":
                log.error("worker %d protocol error: %s", idx, m.detail)
                self.events.append(("worker_error", idx, m.detail))
                self._drop(idx, iteration, outstanding, counter, results)
                continue
            if m.kind != "RESULT":
                log.warning("master ignoring unexpected %s message", m.kind)
                continue
            if m.run_id != self.run_id or m.iteration != iteration:
                self.events.append(("stale_result", idx, m.iteration, m.particle_id))
                continue
            pid = m.particle_id
            if pid in results:
                self.events.append(("duplicate_result", iteration, pid))
                log.info("duplicate RESULT for iteration %d particle %d", iteration, pid)
                continue
            topo = TopologySignature.from_id(m.topology_id) if m.topology_id else None
            results[pid] = FitnessReport(b=m.b, p=m.p, fitness=m.fitness, topology=topo)
            outstanding.pop(pid, None)
        return [results[pid] for pid in range(len(words))]

    def _drop(
        self,
        worker: int,
        iteration: int,
        outstanding: dict[int, tuple[int, str]],
        counter: list[int],
        results: dict[int, FitnessReport] | None = None,
    ) -> None:
        if worker not in self.live:
            return
        self.live.discard(worker)
        self.events.append(("worker_lost", worker, iteration))
        log.warning("worker %d lost at iteration %d; reassigning", worker, iteration)
        done = results or {}
        for pid, (assigned_worker, word) in list(outstanding.items()):
            if assigned_worker != worker or pid in done:
                continue
            placed = False
            while not placed:
                candidate = self._next_worker(counter)
                placed = self._assign(candidate, iteration, pid, word)
                if placed:
                    outstanding[pid] = (candidate, word)
                else:
                    self._drop(candidate, iteration, outstanding, counter, results)

    def broadcast(self, m: WireMessage) -> None:
        for idx in sorted(self.live):
            try:
                self.channels[idx].send(m)
            except ChannelClosed:
                self.live.discard(idx)

    def stop_all(self) -> None:
        self.broadcast(WireMessage(kind="STOP", run_id=self.run_id))
        for ch in self.channels:
            try:
                ch.close()
            except Exception:
                pass


def master_loop(
    cfg: EngineConfig,
    instance_size: int,
    channels: Sequence,
    run_id: str | None = None,
    seed: int | Sequence[int] | None = None,
    barrier_timeout: float = 120.0,
) -> RunLedger:
    """Drive a full swarm run over already-connected worker channels.

    Waits for one HELLO per channel, then iterates: assign, barrier,
    merge, broadcast BEST, until should_terminate; finally STOPs workers.
    """
    if not channels:
        raise ValueError("at least one worker channel is required")
    run_id = run_id or uuid.uuid4().hex[:12]
    ledger = RunLedger(run_id)
    inbox = _Inbox(channels)
    barrier = _Barrier(channels, inbox, run_id, barrier_timeout)
    barrier.events = ledger.events

    helloed = 0
    deadline = time.monotonic() + barrier_timeout
    while helloed < len(channels):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise TimeoutError("timed out waiting for worker HELLOs")
        idx, item = inbox.queue.get(timeout=remaining)
        if item is _Inbox.CLOSED:
            raise RuntimeError(f"worker {idx} disconnected before HELLO")
        if item.kind == "HELLO":
            helloed += 1
        else:
            log.warning("expected HELLO, got %s", item.kind)

    rng = RngStreams(cfg.seed if seed is None else seed, cfg.L)
    state = initialize_swarm(instance_size, cfg, rng)
    words = [p.position.text for p in state.particles]
    reports = barrier.collect(0, words)
    state = apply_initial_reports(state, reports)
    for pid, (word, r) in enumerate(zip(words, reports)):
        ledger.append(0, pid, word, r)
    _broadcast_best(barrier, run_id, state)

    while not should_terminate(state, cfg):
        velocities, positions = move(state, cfg, rng)
        words = [x.text for x in positions]
        reports = barrier.collect(state.iteration + 1, words)
        state = absorb(state, velocities, positions, reports, cfg)
        for pid, (word, r) in enumerate(zip(words, reports)):
            ledger.append(state.iteration, pid, word, r)
        _broadcast_best(barrier, run_id, state)

    barrier.stop_all()
    inbox.join()
    ledger.final_best = (state.global_best_position.text, state.global_best_report)
    return ledger


def _broadcast_best(barrier: _Barrier, run_id: str, state) -> None:
    barrier.broadcast(
        WireMessage(
            kind="BEST",
            run_id=run_id,
            iteration=state.iteration,
            word=state.global_best_position.text,
            fitness=state.global_best_report.fitness,
        )
    )
