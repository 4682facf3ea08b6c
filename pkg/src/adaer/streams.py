"""Class-incremental benchmark streams.

Builds split benchmarks from IDX image files or a synthetic Gaussian-cluster
generator, partitions them into tasks over disjoint consecutive class sets,
and delivers each task as seeded, shuffled fixed-size batches.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, IdxFormatError, InsufficientDataError
from .validation import as_float_matrix, as_label_vector, check_positive_int, round_half_up

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
SYNTHETIC_MAGIC = b"LRSYN1"

# Distance between synthetic cluster means is scale * sqrt(2) in units of
# the (unit) within-cluster standard deviation. The shared offset places the
# clusters on a common positive baseline, as pixel-intensity data is, which
# makes classifier features overlap across classes.
DEFAULT_CLUSTER_SCALE = 3.5
DEFAULT_CLUSTER_OFFSET = 2.0


def _read_u32(f, path, what):
    offset = f.tell()
    data = f.read(4)
    if len(data) < 4:
        raise IdxFormatError(path, offset, f"truncated file while reading {what}")
    return struct.unpack(">I", data)[0]


def load_idx(images_path, labels_path):
    """Read an IDX image/label file pair.

    Returns (features, labels) with pixel bytes scaled into [0, 1] and one
    flattened row per image. Malformed input raises IdxFormatError naming
    the offending file and byte offset.
    """
    with open(images_path, "rb") as f:
        magic = _read_u32(f, images_path, "magic number")
        if magic != IDX_IMAGE_MAGIC:
            raise IdxFormatError(
                images_path, 0,
                f"expected image magic 0x{IDX_IMAGE_MAGIC:08x}, got 0x{magic:08x}")
        count = _read_u32(f, images_path, "image count")
        rows = _read_u32(f, images_path, "row count")
        cols = _read_u32(f, images_path, "column count")
        payload = f.read(count * rows * cols)
        if len(payload) < count * rows * cols:
            raise IdxFormatError(
                images_path, 16 + len(payload),
                f"truncated pixel data: expected {count * rows * cols} bytes, got {len(payload)}")
    X = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    X = X.reshape(count, rows * cols) / 255.0

    with open(labels_path, "rb") as f:
        magic = _read_u32(f, labels_path, "magic number")
        if magic != IDX_LABEL_MAGIC:
            raise IdxFormatError(
                labels_path, 0,
                f"expected label magic 0x{IDX_LABEL_MAGIC:08x}, got 0x{magic:08x}")
        n = _read_u32(f, labels_path, "label count")
        label_payload = f.read(n)
        if len(label_payload) < n:
            raise IdxFormatError(
                labels_path, 8 + len(label_payload),
                f"truncated label data: expected {n} bytes, got {len(label_payload)}")
    y = np.frombuffer(label_payload, dtype=np.uint8).astype(np.int64)

    if count != n:
        raise IdxFormatError(
            labels_path, 4, f"image/label count mismatch: {count} images vs {n} labels")
    return X, y


def make_synthetic(num_classes, dim, per_class, seed, scale=DEFAULT_CLUSTER_SCALE,
                   offset=DEFAULT_CLUSTER_OFFSET):
    """Unit-variance Gaussian clusters, one per class.

    Means sit on the vertices of a scaled coordinate simplex, translated by
    a shared positive offset, which keeps the classes linearly separable
    with a margin while their features overlap the way intensity data
    does; requires dim >= num_classes. Deterministic per seed.
    """
    num_classes = check_positive_int(num_classes, "num_classes")
    dim = check_positive_int(dim, "dim")
    per_class = check_positive_int(per_class, "per_class")
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if dim < num_classes:
        raise ValueError(f"dim ({dim}) must be >= num_classes ({num_classes})")
    rng = np.random.default_rng(seed)
    means = np.full((num_classes, dim), float(offset))
    means[np.arange(num_classes), np.arange(num_classes)] += scale
    X = rng.standard_normal((num_classes * per_class, dim)) + np.repeat(means, per_class, axis=0)
    y = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    return X, y


def save_synthetic(path, X, y):
    """Write a dataset to the versioned binary cache format.

    Layout: magic "LRSYN1", then u32 LE example count, u32 LE feature dim,
    u32 LE class count; payload is float64 LE features (row-major) followed
    by one unsigned byte per label.
    """
    X = as_float_matrix(X, "features")
    y = as_label_vector(y, "labels")
    if y.size and (y.min() < 0 or y.max() > 255):
        raise ValueError("labels must fit in one byte")
    num_classes = int(y.max()) + 1 if y.size else 0
    with open(path, "wb") as f:
        f.write(SYNTHETIC_MAGIC)
        f.write(struct.pack("<III", X.shape[0], X.shape[1], num_classes))
        f.write(X.astype("<f8").tobytes())
        f.write(y.astype(np.uint8).tobytes())


def load_synthetic(path):
    """Read a dataset written by :func:`save_synthetic`."""
    with open(path, "rb") as f:
        magic = f.read(len(SYNTHETIC_MAGIC))
        if magic != SYNTHETIC_MAGIC:
            raise DataError(f"{path}: not a synthetic cache file (bad magic {magic!r})")
        header = f.read(12)
        if len(header) < 12:
            raise DataError(f"{path}: truncated header")
        count, dim, _ = struct.unpack("<III", header)
        features = f.read(count * dim * 8)
        labels = f.read(count)
    if len(features) < count * dim * 8 or len(labels) < count:
        raise DataError(f"{path}: truncated payload")
    X = np.frombuffer(features, dtype="<f8").reshape(count, dim).copy()
    y = np.frombuffer(labels, dtype=np.uint8).astype(np.int64)
    return X, y


@dataclass(frozen=True)
class TaskSpec:
    """One task: its class set plus train and held-out test examples."""

    task_id: int  # 1-based position in the stream
    classes: tuple
    train_X: np.ndarray
    train_y: np.ndarray
    test_X: np.ndarray
    test_y: np.ndarray


class TaskStream:
    """Ordered class-incremental tasks with a fixed, seeded batch order.

    Immutable after construction; batches from one task never mix with
    another and each training example appears exactly once per epoch.
    """

    def __init__(self, tasks, batch_size, orders):
        self.tasks = list(tasks)
        self.batch_size = batch_size
        self._orders = [np.asarray(o) for o in orders]

    @property
    def num_tasks(self):
        return len(self.tasks)

    def task(self, task_id) -> TaskSpec:
        if not 1 <= task_id <= self.num_tasks:
            raise ValueError(f"task_id must lie in [1, {self.num_tasks}], got {task_id}")
        return self.tasks[task_id - 1]

    def batches(self, task_id):
        """Yield (X, y) batches covering the task's training set once."""
        spec = self.task(task_id)
        order = self._orders[task_id - 1]
        for start in range(0, len(order), self.batch_size):
            idx = order[start:start + self.batch_size]
            yield spec.train_X[idx], spec.train_y[idx]

    def __iter__(self):
        """Yield (task_id, X, y) over the whole stream in task order."""
        for spec in self.tasks:
            for X, y in self.batches(spec.task_id):
                yield spec.task_id, X, y


def _per_class_train_counts(classes, train_per_task, lam):
    """Training budget per class within one task.

    lam == 0 spreads the budget evenly (counts differ by at most one).
    lam > 0 is the first:second class sample-count ratio for two-class
    tasks: the second class receives round(train_per_task / (1 + lam))
    examples and the first class round(lam * that).
    """
    if lam == 0:
        base = train_per_task // len(classes)
        extra = train_per_task % len(classes)
        return [base + (1 if i < extra else 0) for i in range(len(classes))]
    if len(classes) != 2:
        raise ValueError("an imbalance ratio requires exactly 2 classes per task")
    n2 = round_half_up(train_per_task / (1.0 + lam))
    n1 = round_half_up(lam * n2)
    return [n1, n2]


def split_stream(X, y, num_tasks, classes_per_task, train_per_task, lam=0.0,
                 batch_size=20, seed=0, test_X=None, test_y=None, test_per_class=200):
    """Split a labeled set into a class-incremental TaskStream.

    Tasks take consecutive classes in ascending label order (task 1 gets
    the two smallest labels, and so on). When no separate test set is
    given, test_per_class examples per class are held out from the input
    before the training examples are drawn; with a separate test set,
    test_per_class=None selects its full per-class split.
    """
    X = as_float_matrix(X, "features")
    y = as_label_vector(y, "labels")
    num_tasks = check_positive_int(num_tasks, "num_tasks")
    classes_per_task = check_positive_int(classes_per_task, "classes_per_task")
    train_per_task = check_positive_int(train_per_task, "train_per_task")
    batch_size = check_positive_int(batch_size, "batch_size")
    if not 0 <= lam < 1:
        raise ValueError(f"lam must lie in [0, 1), got {lam}")
    if test_X is None and test_per_class is None:
        raise ValueError("test_per_class is required when holding test data out of the input")

    labels = np.unique(y)
    needed = num_tasks * classes_per_task
    if needed > len(labels):
        raise ValueError(
            f"need {needed} classes for {num_tasks} tasks of {classes_per_task}, "
            f"dataset has {len(labels)}")
    used = labels[:needed]

    if test_X is not None:
        test_X = as_float_matrix(test_X, "test features")
        test_y = as_label_vector(test_y, "test labels")

    rng = np.random.default_rng(seed)
    train_pools = {c: rng.permutation(np.flatnonzero(y == c)) for c in used}
    if test_X is not None:
        test_pools = {c: rng.permutation(np.flatnonzero(test_y == c)) for c in used}

    # Availability audit up front so the error can report every deficit.
    deficits = {}
    for t in range(num_tasks):
        classes = used[t * classes_per_task:(t + 1) * classes_per_task]
        counts = _per_class_train_counts(classes, train_per_task, lam)
        for c, n_train in zip(classes, counts):
            need = n_train
            have = len(train_pools[c])
            if test_X is None:
                need += test_per_class
            else:
                have_test = len(test_pools[c])
                want_test = have_test if test_per_class is None else test_per_class
                if have_test < want_test:
                    deficits[int(c)] = deficits.get(int(c), 0) + (want_test - have_test)
            if have < need:
                deficits[int(c)] = deficits.get(int(c), 0) + (need - have)
    if deficits:
        detail = ", ".join(f"class {c}: short {n}" for c, n in sorted(deficits.items()))
        raise InsufficientDataError(f"insufficient examples for split ({detail})")

    tasks = []
    for t in range(num_tasks):
        classes = used[t * classes_per_task:(t + 1) * classes_per_task]
        counts = _per_class_train_counts(classes, train_per_task, lam)
        train_idx, test_idx_self, test_parts = [], [], []
        for c, n_train in zip(classes, counts):
            pool = train_pools[c]
            if test_X is None:
                test_idx_self.append(pool[:test_per_class])
                train_idx.append(pool[test_per_class:test_per_class + n_train])
            else:
                train_idx.append(pool[:n_train])
                tp = test_pools[c]
                test_parts.append(tp if test_per_class is None else tp[:test_per_class])
        tr = np.concatenate(train_idx)
        if test_X is None:
            te = np.concatenate(test_idx_self)
            t_X, t_y = X[te], y[te]
        else:
            te = np.concatenate(test_parts)
            t_X, t_y = test_X[te], test_y[te]
        tasks.append(TaskSpec(
            task_id=t + 1,
            classes=tuple(int(c) for c in classes),
            train_X=X[tr], train_y=y[tr],
            test_X=t_X, test_y=t_y,
        ))

    orders = [rng.permutation(len(spec.train_y)) for spec in tasks]
    return TaskStream(tasks, batch_size, orders)
