"""Result-matrix bookkeeping and the four stream-level metrics.

Accuracies are stored as fractions in [0, 1]; rendering as percentages is
left to the reporting layer.
"""

from __future__ import annotations

import numpy as np

from .errors import IncompleteRunError, UndefinedMetricError
from .validation import check_positive_int


class ResultMatrix:
    """T x T accuracy matrix R[i, j]: accuracy on task j after learning task i.

    Tracks per-task best accuracy as a running maximum over recorded rows
    and an optional random-initialization baseline per task.
    """

    def __init__(self, num_tasks):
        self.num_tasks = check_positive_int(num_tasks, "num_tasks")
        self._R = np.zeros((self.num_tasks, self.num_tasks))
        self._best = np.zeros(self.num_tasks)
        self._recorded = np.zeros(self.num_tasks, dtype=bool)
        self._baseline = None

    @staticmethod
    def _check_accuracies(values, n, what):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (n,):
            raise ValueError(f"{what} must have length {n}, got shape {values.shape}")
        if not np.all((values >= 0.0) & (values <= 1.0)):
            raise ValueError(f"{what} must lie in [0, 1]")
        return values

    def set_baseline(self, accuracies):
        """Per-task test accuracy measured at random initialization."""
        self._baseline = self._check_accuracies(accuracies, self.num_tasks, "baseline")

    def record_row(self, task_learned, accuracies):
        """Set row ``task_learned`` (1-based); best accuracies keep the max."""
        if not 1 <= task_learned <= self.num_tasks:
            raise ValueError(
                f"task_learned must lie in [1, {self.num_tasks}], got {task_learned}")
        row = self._check_accuracies(accuracies, self.num_tasks, "accuracies")
        self._R[task_learned - 1] = row
        self._best = np.maximum(self._best, row)
        self._recorded[task_learned - 1] = True

    @property
    def matrix(self):
        return self._R.copy()

    @property
    def best(self):
        return self._best.copy()

    @property
    def baseline(self):
        return None if self._baseline is None else self._baseline.copy()

    def _require_complete(self):
        if not self._recorded.all():
            missing = [int(i) + 1 for i in np.flatnonzero(~self._recorded)]
            raise IncompleteRunError(f"rows not yet recorded for tasks {missing}")

    def _require_multi_task(self, metric):
        if self.num_tasks == 1:
            raise UndefinedMetricError(f"{metric} is undefined for a single task")

    def average_accuracy(self):
        """Mean of the final row: accuracy over all tasks at the end."""
        if not self._recorded[-1]:
            raise IncompleteRunError("final row not yet recorded")
        return float(self._R[-1].mean())

    def forgetting(self):
        """Mean drop from each task's best accuracy to its final accuracy.

        Nonnegative by construction; lower is better.
        """
        self._require_complete()
        self._require_multi_task("forgetting")
        return float(np.mean(self._best[:-1] - self._R[-1, :-1]))

    def backward_transfer(self):
        """Mean final-minus-just-learned accuracy over earlier tasks.

        Positive when later learning improves earlier tasks.
        """
        self._require_complete()
        self._require_multi_task("backward transfer")
        diag = np.diag(self._R)[:-1]
        return float(np.mean(self._R[-1, :-1] - diag))

    def forward_transfer(self):
        """Mean just-learned accuracy gain over the random-init baseline."""
        if self._baseline is None:
            raise IncompleteRunError("random-initialization baseline not recorded")
        self._require_complete()
        self._require_multi_task("forward transfer")
        diag = np.diag(self._R)[:-1]
        return float(np.mean(diag - self._baseline[:-1]))

    def summary(self):
        """All four metrics as a dict (keys acc, forget, bwt, fwt)."""
        return {
            "acc": self.average_accuracy(),
            "forget": self.forgetting(),
            "bwt": self.backward_transfer(),
            "fwt": self.forward_transfer(),
        }
