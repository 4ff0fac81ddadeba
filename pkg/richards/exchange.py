"""
In-process SPMD substrate: halo exchange and global reductions
Workers talk only through send/recv by part id, so the same calls map onto
real message passing later
"""

import queue
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Callable, List, Optional, TypeVar

import numpy as np

from .errors import CollectiveTimeoutError, ConfigurationError, ContractError, GroupAbortedError
from .grid import HaloTopology

T = TypeVar("T")

CellField = np.ndarray   # owned values followed by halo slots

_POLL_SECONDS = 0.05


class ReduceKind(Enum):
    MAX = "max"
    SUM = "sum"


def _copy_payload(payload):
    if isinstance(payload, np.ndarray):
        return payload.copy()
    if isinstance(payload, tuple):
        return tuple(_copy_payload(p) for p in payload)
    return payload


class Communicator:
    """Point-to-point messaging for one worker of a group"""

    rank: int = 0
    size: int = 1

    def __init__(self):
        self.counters = Counter()

    def send(self, dest: int, payload: Any, tag: str):
        raise NotImplementedError

    def recv(self, source: int, tag: str) -> Any:
        raise NotImplementedError


class SerialCommunicator(Communicator):
    """Single-part fallback: collectives short-circuit, no peers to talk to"""

    def send(self, dest: int, payload: Any, tag: str):
        raise ContractError(f"serial communicator has no peer {dest}")

    def recv(self, source: int, tag: str) -> Any:
        raise ContractError(f"serial communicator has no peer {source}")


class ThreadCommunicator(Communicator):
    def __init__(self, group: "SpmdGroup", rank: int):
        super().__init__()
        self.group = group
        self.rank = rank
        self.size = group.size

    def send(self, dest: int, payload: Any, tag: str):
        self.group.mailbox(self.rank, dest).put((tag, _copy_payload(payload)))

    def recv(self, source: int, tag: str) -> Any:
        box = self.group.mailbox(source, self.rank)
        deadline = time.monotonic() + self.group.timeout
        while True:
            if self.group.aborted.is_set():
                raise GroupAbortedError(f"rank {self.rank}: group aborted while waiting on rank {source}")
            try:
                got_tag, payload = box.get(timeout=_POLL_SECONDS)
                break
            except queue.Empty:
                if time.monotonic() > deadline:
                    raise CollectiveTimeoutError(
                        f"rank {self.rank} waited {self.group.timeout:.0f}s for '{tag}' from rank {source}"
                    )
        if got_tag != tag:
            raise ContractError(f"rank {self.rank} expected '{tag}' from rank {source}, got '{got_tag}'")
        return payload


class SpmdGroup:
    """
    A fixed set of long-lived workers, one per part

    Args:
        size: number of workers
        timeout: seconds a receive may block before it is reported as a deadlock
        threads: thread-pool size; collectives block, so it must cover every worker
    """

    def __init__(self, size: int, timeout: float = 300.0, threads: Optional[int] = None):
        if size < 1:
            raise ValueError(f"group size must be >= 1, got {size}")
        threads = size if threads is None else threads
        if threads < size:
            raise ConfigurationError(f"{threads} thread(s) cannot host {size} blocking workers")
        self.size = size
        self.threads = threads
        self.timeout = timeout
        self.aborted = threading.Event()
        self._boxes = {(s, d): queue.Queue() for s in range(size) for d in range(size) if s != d}

    def mailbox(self, source: int, dest: int) -> queue.Queue:
        try:
            return self._boxes[(source, dest)]
        except KeyError:
            raise ContractError(f"no channel {source} -> {dest} in a group of {self.size}") from None

    def communicator(self, rank: int) -> Communicator:
        if self.size == 1:
            return SerialCommunicator()
        return ThreadCommunicator(self, rank)

    def run(self, worker: Callable[[Communicator], T]) -> List[T]:
        """Run worker(comm) on every rank; re-raise the first real failure"""
        if self.size == 1:
            return [worker(self.communicator(0))]

        def guarded(rank):
            try:
                return worker(self.communicator(rank))
            except BaseException:
                self.aborted.set()
                raise

        with ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix="part") as pool:
            futures = [pool.submit(guarded, r) for r in range(self.size)]
            errors = [f.exception() for f in futures]
        primary = [e for e in errors if e is not None and not isinstance(e, GroupAbortedError)]
        if primary:
            raise primary[0]
        if any(e is not None for e in errors):
            raise next(e for e in errors if e is not None)
        return [f.result() for f in futures]


def halo_exchange(field: CellField, topology: HaloTopology, comm: Communicator) -> CellField:
    """
    Fill every halo slot with the current owned value of the remote cell

    Owned values are left untouched; the field is updated in place and returned.
    """
    if field.shape[0] != topology.n_ext:
        raise ContractError(
            f"part {topology.part}: field has {field.shape[0]} entries, topology expects {topology.n_ext}"
        )
    comm.counters["halo_exchange"] += 1
    for link in topology.links:
        comm.send(link.neighbor, field[link.send], "halo")
    n = topology.n_owned
    for link in topology.links:
        data = comm.recv(link.neighbor, "halo")
        if data.shape[0] != link.recv.size:
            raise ContractError(
                f"part {topology.part}: {data.shape[0]} values from part {link.neighbor}, "
                f"expected {link.recv.size}"
            )
        field[n + link.recv] = data
    return field


def _combine(kind: ReduceKind, left, right):
    if kind is ReduceKind.MAX:
        return np.maximum(left, right)
    return left + right


def broadcast(value: Any, comm: Communicator) -> Any:
    """Binomial-tree broadcast from rank 0; every rank returns rank 0's value"""
    rank, size = comm.rank, comm.size
    if size == 1:
        return value
    if rank == 0:
        span = 1
        while span < size:
            span *= 2
    else:
        span = rank & -rank
        value = comm.recv(rank - span, "bcast")
    step = span // 2
    while step >= 1:
        if rank + step < size:
            comm.send(rank + step, value, "bcast")
        step //= 2
    return value


def global_reduce(kind: ReduceKind, local, comm: Communicator):
    """
    Combine a scalar (or small array) across all parts

    Partial results are combined pairwise up a binary tree keyed by part id
    (lower id on the left) and broadcast back, so every caller gets the same
    bits and a fixed part count always reproduces the same result.
    """
    scalar = np.ndim(local) == 0
    value = np.array(local, dtype=float)
    comm.counters[f"reduce_{kind.value}"] += 1
    rank, size = comm.rank, comm.size
    if size > 1:
        step = 1
        while step < size:
            if rank % (2 * step) == 0:
                partner = rank + step
                if partner < size:
                    value = _combine(kind, value, comm.recv(partner, "reduce"))
            else:
                comm.send(rank - step, value, "reduce")
                break
            step *= 2
        value = broadcast(value, comm)
    return float(value) if scalar else value


def gather_field(local: np.ndarray, cells: np.ndarray, ncells: int, comm: Communicator) -> Optional[np.ndarray]:
    """Assemble owned segments into one global array on rank 0 (None elsewhere)"""
    comm.counters["gather"] += 1
    if comm.rank != 0:
        comm.send(0, (cells, np.asarray(local)), "gather")
        return None
    out = np.empty(ncells, dtype=float)
    out[cells] = local
    for source in range(1, comm.size):
        remote_cells, values = comm.recv(source, "gather")
        out[remote_cells] = values
    return out


def new_cell_field(topology: HaloTopology, fill: float = 0.0) -> CellField:
    return np.full(topology.n_ext, fill, dtype=float)


__all__ = [
    "CellField", "Communicator", "ReduceKind", "SerialCommunicator", "SpmdGroup",
    "ThreadCommunicator", "broadcast", "gather_field", "global_reduce", "halo_exchange", "new_cell_field",
]
