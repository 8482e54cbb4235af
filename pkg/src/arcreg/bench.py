"""Throughput benchmark driver: hold and work modes, sweeps, CSV output.

One writer thread updates the register continuously while N reader threads
read continuously (zero think time). In ``hold`` mode a write copies a
fixed template (stamped with an 8-byte version word so ordering checks
still work when verification is on) and a read only fetches the buffer
view; in ``work`` mode every write generates a fresh versioned payload and
every read scans the whole retrieved buffer. With ``verify`` enabled, all
operations are recorded and the history checks run before results are
reported.

Runs are duration-based with an optional minimum-operations floor: the run
continues until the duration has elapsed and the floor is met.
"""

from __future__ import annotations

import json
import logging
import os
import random
import sys
import threading
import time
from dataclasses import dataclass

from .api import CapacityError, ConfigurationError, RegisterKind, RF_MAX_READERS
from .api import decode_versioned, encode_versioned
from .arc import ArcRegister
from .baselines import PetersonRegister, RfRegister, RwlockRegister
from .history import History, Recorder, check_history

log = logging.getLogger(__name__)

CSV_HEADER = (
    "algo,mode,readers,size_bytes,duration_s,reads,writes,"
    "read_rmw,write_rmw,throughput_ops_s,violations"
)


@dataclass
class BenchConfig:
    """One workload configuration.

    ``min_ops`` keeps the run going past ``duration`` until the operation
    floor is met. ``writer_enabled=False`` pauses the writer (debug flag
    for read-path experiments). ``switch_interval`` temporarily overrides
    the interpreter's thread switch interval to force finer interleaving.
    """

    algo: RegisterKind
    readers: int
    size: int
    duration: float
    mode: str = "hold"
    verify: bool = False
    seed: int = 0
    csv_path: str | None = None
    pin: bool = False
    repeat: int = 1
    min_ops: int = 0
    writer_enabled: bool = True
    switch_interval: float | None = None
    debug_checks: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.algo, str):
            self.algo = RegisterKind.parse(self.algo)
        if self.readers < 1:
            raise ConfigurationError(f"need at least one reader, got {self.readers}")
        if self.size < 8:
            raise ConfigurationError(f"size must be at least 8 bytes, got {self.size}")
        if self.mode not in ("hold", "work"):
            raise ConfigurationError(f"mode must be 'hold' or 'work', got {self.mode!r}")
        if self.duration <= 0:
            raise ConfigurationError("duration must be positive")
        if self.repeat < 1:
            raise ConfigurationError("repeat must be at least 1")
        if self.algo is RegisterKind.RF and self.readers > RF_MAX_READERS:
            raise CapacityError(
                f"RF admits at most {RF_MAX_READERS} readers, got {self.readers}"
            )


@dataclass
class BenchResult:
    """Aggregated outcome of one configuration (averaged over repeats)."""

    algo: RegisterKind
    mode: str
    readers: int
    size: int
    duration_s: float
    reads: int  # reader-role operations
    writes: int  # writer-role operations
    read_rmw: int
    write_rmw: int
    throughput_ops_s: float
    violations: int
    no_past: int = 0
    inversions: int = 0
    torn_reads: int = 0
    max_read_rmw: int = 0
    max_scan_len: int = 0
    runs: int = 1

    @property
    def total_ops(self) -> int:
        return self.reads + self.writes

    def csv_row(self) -> str:
        return (
            f"{self.algo.name},{self.mode},{self.readers},{self.size},"
            f"{self.duration_s:.3f},{self.reads},{self.writes},"
            f"{self.read_rmw},{self.write_rmw},"
            f"{self.throughput_ops_s:.1f},{self.violations}"
        )


_REGISTER_TYPES = {
    RegisterKind.ARC: ArcRegister,
    RegisterKind.RF: RfRegister,
    RegisterKind.PETERSON: PetersonRegister,
    RegisterKind.RWLOCK: RwlockRegister,
}


def make_register(cfg: BenchConfig):
    """Build the register under test with a version-0 initial value."""
    initial = encode_versioned(0, cfg.size)
    cls = _REGISTER_TYPES[cfg.algo]
    if cfg.algo is RegisterKind.ARC:
        return cls(initial, cfg.readers, cfg.size, debug=cfg.debug_checks)
    return cls(initial, cfg.readers, cfg.size)


class _RunControl:
    __slots__ = ("stop", "errors", "ops")

    def __init__(self, n_threads: int) -> None:
        self.stop = False
        self.errors: list[BaseException] = []
        self.ops = [0] * n_threads


def _pin_current_thread(slot: int) -> None:
    if not hasattr(os, "sched_setaffinity"):
        return
    cpus = sorted(os.sched_getaffinity(0))
    os.sched_setaffinity(0, {cpus[slot % len(cpus)]})


def _reader_loop(ctl, barrier, handle, cfg: BenchConfig, recorder, slot: int) -> None:
    try:
        if cfg.pin:
            _pin_current_thread(slot)
        barrier.wait()
        now = time.monotonic_ns
        size = cfg.size
        n = 0
        if cfg.mode == "work" and cfg.verify:
            while not ctl.stop:
                t0 = now()
                buf, sz = handle.read()
                seq, intact = decode_versioned(buf, sz)
                recorder.record_read(t0, now(), seq, intact)
                n += 1
        elif cfg.mode == "work":
            while not ctl.stop:
                buf, sz = handle.read()
                decode_versioned(buf, sz)
                n += 1
        elif cfg.verify:  # hold + verify: peek the version word only
            while not ctl.stop:
                t0 = now()
                buf, sz = handle.read()
                seq = int.from_bytes(buf[:8], "little")
                recorder.record_read(t0, now(), seq, True)
                n += 1
        else:
            while not ctl.stop:
                handle.read()
                n += 1
        ctl.ops[slot] = n
    except BaseException as exc:  # surfaced after join
        ctl.errors.append(exc)
        ctl.stop = True
    finally:
        handle.finish()


def _writer_loop(ctl, barrier, handle, cfg: BenchConfig, recorder, slot: int) -> None:
    try:
        if cfg.pin:
            _pin_current_thread(slot)
        rng = random.Random(cfg.seed)
        template = bytearray(rng.randbytes(cfg.size))
        template[0:8] = (0).to_bytes(8, "little")
        barrier.wait()
        now = time.monotonic_ns
        seq = 0
        n = 0
        if cfg.mode == "hold":
            while not ctl.stop:
                seq += 1
                template[0:8] = seq.to_bytes(8, "little")
                if cfg.verify:
                    t0 = now()
                    handle.write(template)
                    recorder.record_write(t0, now(), seq)
                else:
                    handle.write(template)
                n += 1
        else:
            while not ctl.stop:
                seq += 1
                data = encode_versioned(seq, cfg.size)
                if cfg.verify:
                    t0 = now()
                    handle.write(data)
                    recorder.record_write(t0, now(), seq)
                else:
                    handle.write(data)
                n += 1
        ctl.ops[slot] = n
    except BaseException as exc:
        ctl.errors.append(exc)
        ctl.stop = True


def _run_once(cfg: BenchConfig, register_factory) -> BenchResult:
    register = register_factory(cfg)
    n_threads = cfg.readers + 1
    ctl = _RunControl(n_threads)
    barrier = threading.Barrier(n_threads + 1)
    recorders = [Recorder(i) for i in range(n_threads)] if cfg.verify else [None] * n_threads

    writer_handle = register.writer()
    threads = []
    if cfg.writer_enabled:
        threads.append(
            threading.Thread(
                target=_writer_loop,
                args=(ctl, barrier, writer_handle, cfg, recorders[0], 0),
                name="bench-writer",
                daemon=True,
            )
        )
    else:
        barrier = threading.Barrier(n_threads)  # no writer participating
    for i in range(cfg.readers):
        handle = register.new_reader()
        threads.append(
            threading.Thread(
                target=_reader_loop,
                args=(ctl, barrier, handle, cfg, recorders[i + 1], i + 1),
                name=f"bench-reader-{i}",
                daemon=True,
            )
        )

    old_interval = sys.getswitchinterval()
    if cfg.switch_interval is not None:
        sys.setswitchinterval(cfg.switch_interval)
    try:
        for t in threads:
            t.start()
        barrier.wait()
        t_start = time.monotonic()
        deadline = t_start + cfg.duration
        while True:
            time.sleep(0.02)
            if ctl.stop:
                break
            if time.monotonic() >= deadline and sum(ctl.ops) + _inflight_ops(register) >= cfg.min_ops:
                break
        ctl.stop = True
        t_stop = time.monotonic()
        for t in threads:
            t.join()
    finally:
        if cfg.switch_interval is not None:
            sys.setswitchinterval(old_interval)
    if ctl.errors:
        raise ctl.errors[0]

    elapsed = t_stop - t_start
    writes = ctl.ops[0]
    reads = sum(ctl.ops[1:])
    read_rmw, write_rmw = register.rmw_counters()
    no_past = inversions = torn = 0
    if cfg.verify:
        history = History.from_recorders([r for r in recorders if r is not None])
        report = check_history(history)
        no_past = len(report.no_past)
        inversions = len(report.inversions)
        torn = report.torn_reads
    max_read_rmw = max((r.max_read_rmw for r in register._readers), default=0)
    max_scan_len = getattr(writer_handle, "max_scan_len", 0)
    return BenchResult(
        algo=cfg.algo,
        mode=cfg.mode,
        readers=cfg.readers,
        size=cfg.size,
        duration_s=elapsed,
        reads=reads,
        writes=writes,
        read_rmw=read_rmw,
        write_rmw=write_rmw,
        throughput_ops_s=(reads + writes) / elapsed if elapsed > 0 else 0.0,
        violations=no_past + inversions + torn,
        no_past=no_past,
        inversions=inversions,
        torn_reads=torn,
        max_read_rmw=max_read_rmw,
        max_scan_len=max_scan_len,
    )


def _inflight_ops(register) -> int:
    # Racy but monotone-ish progress estimate used only for the floor check;
    # exact counts are collected after join.
    total = sum(r.reads for r in register._readers)
    if register._writer is not None:
        total += register._writer.writes
    return total


def run_bench(cfg: BenchConfig, register_factory=make_register) -> BenchResult:
    """Run ``cfg.repeat`` workload runs and return the averaged sample."""
    results = [_run_once(cfg, register_factory) for _ in range(cfg.repeat)]
    if len(results) == 1:
        return results[0]
    k = len(results)
    return BenchResult(
        algo=cfg.algo,
        mode=cfg.mode,
        readers=cfg.readers,
        size=cfg.size,
        duration_s=sum(r.duration_s for r in results) / k,
        reads=round(sum(r.reads for r in results) / k),
        writes=round(sum(r.writes for r in results) / k),
        read_rmw=round(sum(r.read_rmw for r in results) / k),
        write_rmw=round(sum(r.write_rmw for r in results) / k),
        throughput_ops_s=sum(r.throughput_ops_s for r in results) / k,
        violations=sum(r.violations for r in results),
        no_past=sum(r.no_past for r in results),
        inversions=sum(r.inversions for r in results),
        torn_reads=sum(r.torn_reads for r in results),
        max_read_rmw=max(r.max_read_rmw for r in results),
        max_scan_len=max(r.max_scan_len for r in results),
        runs=k,
    )


@dataclass
class MatrixSpec:
    """Cartesian sweep description: algos x reader counts x sizes."""

    algos: list[RegisterKind]
    readers: list[int]
    sizes: list[int]
    duration: float = 1.0
    mode: str = "hold"
    verify: bool = False
    seed: int = 0
    pin: bool = False
    repeat: int = 1
    min_ops: int = 0

    @classmethod
    def from_json(cls, path) -> "MatrixSpec":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        raw["algos"] = [RegisterKind.parse(a) for a in raw["algos"]]
        return cls(**raw)


def run_matrix(spec: MatrixSpec, register_factory=make_register) -> list[BenchResult]:
    """Run the sweep; combinations beyond an algorithm's capacity are skipped
    with a note."""
    results = []
    for algo in spec.algos:
        for readers in spec.readers:
            if algo is RegisterKind.RF and readers > RF_MAX_READERS:
                log.warning(
                    "skipping %s at %d readers: capacity is %d",
                    algo.name,
                    readers,
                    RF_MAX_READERS,
                )
                continue
            for size in spec.sizes:
                cfg = BenchConfig(
                    algo=algo,
                    readers=readers,
                    size=size,
                    duration=spec.duration,
                    mode=spec.mode,
                    verify=spec.verify,
                    seed=spec.seed,
                    pin=spec.pin,
                    repeat=spec.repeat,
                    min_ops=spec.min_ops,
                )
                results.append(run_bench(cfg, register_factory))
    return results


def emit_csv(results, path) -> None:
    """Write results as CSV with the fixed column order."""
    if not results:
        raise ConfigurationError("no results to emit")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in results:
            fh.write(r.csv_row() + "\n")
