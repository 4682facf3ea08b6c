"""Scikit-learn style front end over the continual-learning core."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import nn
from .memory import MemoryBuffer
from .replay import Strategy, default_policy, train_step
from .validation import as_float_matrix, as_label_vector


class ContinualClassifier(ClassifierMixin, BaseEstimator):
    """MLP classifier trained task-by-task with experience replay.

    Each ``partial_fit`` call is treated as one task: its data is chunked
    into ``batch_size`` mini-batches (in the order given) and streamed
    through the selected replay strategy while the episodic memory is
    updated under the strategy's canonical policy. ``fit`` resets the
    model and either trains a single task or, when ``task_ids`` is given,
    replays the class-incremental protocol task by task.

    Parameters
    ----------
    strategy : str, one of "online", "er", "mir", "ccmr", "adaer", "ebrs"
    hidden_dim : hidden layer width.
    memory_size : episodic memory capacity (ignored by "online").
    replay_size : examples replayed per step.
    tau : interfered fraction of the replay batch (pinned to 1 for "mir"
        and "ebrs").
    alpha : SGD learning rate.
    batch_size : mini-batch length cut from each partial_fit call.
    random_state : seed for initialization, memory admission, and replay
        draws.
    """

    def __init__(self, strategy="adaer", hidden_dim=400, memory_size=100,
                 replay_size=20, tau=0.5, alpha=0.05, batch_size=20,
                 random_state=0):
        self.strategy = strategy
        self.hidden_dim = hidden_dim
        self.memory_size = memory_size
        self.replay_size = replay_size
        self.tau = tau
        self.alpha = alpha
        self.batch_size = batch_size
        self.random_state = random_state

    def _setup(self, n_features, classes):
        self._strategy = Strategy(self.strategy, replay_size=self.replay_size, tau=self.tau)
        seeds = np.random.SeedSequence(self.random_state).generate_state(3)
        self.classes_ = np.asarray(classes)
        if self.classes_.ndim != 1 or len(self.classes_) < 2:
            raise ValueError("classes must be a 1-D collection of at least 2 labels")
        self.classes_ = np.sort(self.classes_)
        self.n_features_in_ = int(n_features)
        self.params_ = nn.init_network(
            self.n_features_in_, self.hidden_dim, len(self.classes_), int(seeds[0]))
        policy = default_policy(self._strategy.kind)
        self.buffer_ = None if policy is None else MemoryBuffer(
            self.memory_size, policy=policy, seed=int(seeds[1]))
        self._replay_rng = np.random.default_rng(int(seeds[2]))
        self._next_task = 1

    def _encode(self, y):
        y = as_label_vector(y)
        idx = np.searchsorted(self.classes_, y)
        idx = np.clip(idx, 0, len(self.classes_) - 1)
        if not np.array_equal(self.classes_[idx], y):
            unseen = sorted(set(y.tolist()) - set(self.classes_.tolist()))
            raise ValueError(f"labels {unseen} not in declared classes")
        return idx

    def partial_fit(self, X, y, classes=None, task_id=None):
        """Train on one task's data; ``classes`` is required on the first call."""
        X = as_float_matrix(X)
        if not hasattr(self, "params_"):
            if classes is None:
                raise ValueError("classes must be passed on the first partial_fit call")
            self._setup(X.shape[1], classes)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        y_idx = self._encode(y)
        task = self._next_task if task_id is None else int(task_id)
        for start in range(0, X.shape[0], self.batch_size):
            stop = start + self.batch_size
            self.params_ = train_step(
                self.params_, X[start:stop], y_idx[start:stop], self.buffer_,
                self._strategy, self.alpha, self._replay_rng, task)
        self._next_task = task + 1
        return self

    def fit(self, X, y, task_ids=None):
        """Reset and train.

        Without ``task_ids`` the data is treated as one stationary task and
        shuffled (seeded) before the single pass; with ``task_ids`` the
        tasks are replayed in ascending id order, each in the order given.
        """
        for attr in ("params_", "buffer_", "classes_", "n_features_in_"):
            if hasattr(self, attr):
                delattr(self, attr)
        X = as_float_matrix(X)
        y = as_label_vector(y)
        classes = np.unique(y)
        if task_ids is None:
            order = np.random.default_rng(self.random_state).permutation(X.shape[0])
            return self.partial_fit(X[order], y[order], classes=classes)
        task_ids = as_label_vector(task_ids, "task_ids")
        if task_ids.shape[0] != X.shape[0]:
            raise ValueError("task_ids must have one entry per example")
        for task in np.unique(task_ids):
            mask = task_ids == task
            self.partial_fit(X[mask], y[mask], classes=classes, task_id=int(task))
        return self

    def _check_fitted(self, X):
        if not hasattr(self, "params_"):
            raise ValueError("this classifier has not been fitted yet")
        X = as_float_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X

    def _logits(self, X):
        hidden = np.maximum(X @ self.params_.w1 + self.params_.b1, 0.0)
        return hidden @ self.params_.w2 + self.params_.b2

    def predict_proba(self, X):
        """Softmax class probabilities in ``classes_`` order."""
        X = self._check_fitted(X)
        logits = self._logits(X)
        expz = np.exp(logits - logits.max(axis=1, keepdims=True))
        return expz / expz.sum(axis=1, keepdims=True)

    def predict(self, X):
        """Most probable class label for each row."""
        X = self._check_fitted(X)
        return self.classes_[self._logits(X).argmax(axis=1)]
