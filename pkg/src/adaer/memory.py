"""Bounded episodic memory with reservoir and entropy-balanced update policies."""

from __future__ import annotations

import struct

import numpy as np

from .errors import DataError, EmptyBufferError
from .validation import check_positive_int

RESERVOIR = "reservoir"
ENTROPY_BALANCED = "entropy_balanced"
POLICIES = (RESERVOIR, ENTROPY_BALANCED)

BUFFER_MAGIC = b"LRMEM1"


class MemoryBuffer:
    """Fixed-capacity store of (features, label, task_id, score) slots.

    ``update`` streams one example through the reservoir admission test:
    the n-th example seen is admitted with probability (M + 1)/(n + 1)
    once the buffer is full, which converges to the classic M/n inclusion
    rate. On admission the reservoir policy evicts a uniformly random
    slot; the entropy-balanced policy evicts the lowest-score slot of the
    most populated class (ties: smallest label, then smallest slot index),
    nudging per-class counts toward balance.

    Scores are written by the replay engine's scoring pass and reset to
    zero for freshly inserted examples.
    """

    def __init__(self, capacity, policy=RESERVOIR, seed=0):
        self.capacity = check_positive_int(capacity, "capacity")
        if policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
        self.policy = policy
        self.seen_count = 0
        self._rng = np.random.default_rng(seed)
        self._size = 0
        self._features = None  # allocated (capacity, dim) on first insert
        self._labels = np.zeros(self.capacity, dtype=np.int64)
        self._task_ids = np.zeros(self.capacity, dtype=np.int64)
        self._scores = np.zeros(self.capacity, dtype=np.float64)

    def __len__(self):
        return self._size

    @property
    def features(self):
        if self._features is None:
            return np.empty((0, 0))
        return self._features[:self._size]

    @property
    def labels(self):
        return self._labels[:self._size]

    @property
    def task_ids(self):
        return self._task_ids[:self._size]

    @property
    def scores(self):
        return self._scores[:self._size]

    def _write_slot(self, idx, x, y, task_id):
        self._features[idx] = x
        self._labels[idx] = y
        self._task_ids[idx] = task_id
        self._scores[idx] = 0.0

    def update(self, x, y, task_id):
        """Stream one example through the buffer.

        Returns the slot index written, or None when the admission test
        rejects the example (the buffer then only advances its count).
        """
        x = np.asarray(x, dtype=np.float64).ravel()
        if self._features is None:
            self._features = np.zeros((self.capacity, x.shape[0]))
        elif x.shape[0] != self._features.shape[1]:
            raise ValueError(
                f"expected {self._features.shape[1]} features, got {x.shape[0]}")
        self.seen_count += 1
        if self._size < self.capacity:
            idx = self._size
            self._size += 1
            self._write_slot(idx, x, y, task_id)
            return idx
        draw = int(self._rng.integers(0, self.seen_count + 1))  # uniform over {0..N}
        if draw > self.capacity:
            return None
        if self.policy == RESERVOIR:
            idx = int(self._rng.integers(0, self.capacity))
        else:
            idx = self.entropy_balanced_victim()
        self._write_slot(idx, x, y, task_id)
        return idx

    def entropy_balanced_victim(self):
        """Slot the entropy-balanced policy would evict right now."""
        if self._size == 0:
            raise EmptyBufferError("buffer has no slots to evict")
        labels = self._labels[:self._size]
        majority = int(np.bincount(labels).argmax())  # ties: smallest label
        candidates = np.flatnonzero(labels == majority)
        within = self._scores[:self._size][candidates].argmin()  # ties: smallest index
        return int(candidates[within])

    def set_scores(self, scores):
        """Replace every slot's score; length must match the slot count."""
        scores = np.asarray(scores, dtype=np.float64).ravel()
        if scores.shape[0] != self._size:
            raise ValueError(f"expected {self._size} scores, got {scores.shape[0]}")
        if scores.size and not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        self._scores[:self._size] = scores

    def sample_uniform(self, k, rng=None):
        """k slot indices drawn uniformly without replacement.

        Falls back to sampling with replacement when k exceeds the slot
        count. Draws come from ``rng`` when given, else the buffer's own
        generator.
        """
        if self._size == 0:
            raise EmptyBufferError("cannot sample from an empty buffer")
        if k < 0:
            raise ValueError(f"k must be nonnegative, got {k}")
        rng = self._rng if rng is None else rng
        return rng.choice(self._size, size=k, replace=k > self._size)

    def class_counts(self):
        """Exact multiset counts of slot labels."""
        values, counts = np.unique(self._labels[:self._size], return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def dump(self, path):
        """Write a debug snapshot (rng state is not preserved).

        Layout: magic "LRMEM1", u32 LE capacity, u64 LE seen count, u32 LE
        slot count, u32 LE feature dim, then one record per slot: i32 LE
        label, i32 LE task id, f64 LE score, dim f64 LE features.
        """
        dim = 0 if self._features is None else self._features.shape[1]
        with open(path, "wb") as f:
            f.write(BUFFER_MAGIC)
            f.write(struct.pack("<IQII", self.capacity, self.seen_count, self._size, dim))
            for i in range(self._size):
                f.write(struct.pack("<iid", int(self._labels[i]),
                                    int(self._task_ids[i]), float(self._scores[i])))
                f.write(self._features[i].astype("<f8").tobytes())

    @classmethod
    def load(cls, path, policy=RESERVOIR, seed=0):
        """Rebuild a buffer from a snapshot written by :meth:`dump`."""
        with open(path, "rb") as f:
            magic = f.read(len(BUFFER_MAGIC))
            if magic != BUFFER_MAGIC:
                raise DataError(f"{path}: not a buffer snapshot (bad magic {magic!r})")
            header = f.read(20)
            if len(header) < 20:
                raise DataError(f"{path}: truncated header")
            capacity, seen, size, dim = struct.unpack("<IQII", header)
            buf = cls(capacity, policy=policy, seed=seed)
            buf.seen_count = seen
            buf._size = size
            buf._features = np.zeros((capacity, dim)) if dim else None
            record = struct.Struct("<iid")
            for i in range(size):
                data = f.read(record.size + dim * 8)
                if len(data) < record.size + dim * 8:
                    raise DataError(f"{path}: truncated slot record {i}")
                label, task_id, score = record.unpack_from(data)
                buf._labels[i] = label
                buf._task_ids[i] = task_id
                buf._scores[i] = score
                buf._features[i] = np.frombuffer(data, dtype="<f8", offset=record.size)
        return buf
