"""Replay-strategy engine.

Scores each memory slot by how much a one-step lookahead update on the
incoming batch would raise its loss, selects the most interfered slots plus
per-task quota samples into one replay plan, and applies a single combined
SGD step. The online, uniform-replay (er), interfered-only (mir) and
quota-mixed (ccmr, adaer, ebrs) strategies all run through the same step
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import EmptyBufferError
from .memory import ENTROPY_BALANCED, RESERVOIR
from .validation import round_half_up

STRATEGY_KINDS = ("online", "er", "mir", "ccmr", "adaer", "ebrs")

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class Strategy:
    """Replay strategy selector plus its parameters.

    kind:
      online  plain SGD on the incoming batch, no memory
      er      uniform replay from the buffer
      mir     replay only the most interfered slots (tau pinned to 1)
      ccmr    interfered + task-quota replay over a plain reservoir
      adaer   ccmr replay paired with the entropy-balanced buffer policy
      ebrs    mir replay paired with the entropy-balanced buffer policy

    ``tau`` is the fraction of the replay batch devoted to the interfered
    picks; tau=1 reduces the plan to mir. ``separate_replay_loss`` sums the
    batch mean and replay mean losses instead of one mean over their
    concatenation.
    """

    kind: str
    replay_size: int = 20
    tau: float = 0.5
    separate_replay_loss: bool = False

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"kind must be one of {STRATEGY_KINDS}, got {self.kind!r}")
        if self.replay_size < 1:
            raise ValueError(f"replay_size must be >= 1, got {self.replay_size}")
        if self.kind in ("mir", "ebrs"):
            object.__setattr__(self, "tau", 1.0)
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")


def default_policy(kind):
    """Canonical buffer policy pairing for a strategy kind (None: no buffer)."""
    if kind == "online":
        return None
    if kind in ("adaer", "ebrs"):
        return ENTROPY_BALANCED
    return RESERVOIR


@dataclass(frozen=True)
class ReplayPlan:
    """Slot indices chosen for replay: interfered picks plus quota samples.

    The two index lists are always disjoint; ``quotas`` records the
    per-task allocation behind the task-associated part.
    """

    interfered: np.ndarray
    task_associated: np.ndarray
    quotas: dict
    tau: float

    def __len__(self):
        return len(self.interfered) + len(self.task_associated)

    @property
    def indices(self):
        return np.concatenate([self.interfered, self.task_associated])


def virtual_step(params, X, y, alpha):
    """One-step lookahead parameters from the incoming batch alone."""
    return nn.sgd_step(params, nn.backward(params, X, y), alpha)


def compute_scores(params, lookahead, buffer):
    """Per-slot loss increase under the lookahead parameters.

    Positive scores mark memories the pending update is about to damage.
    The scores are also written into the buffer so the entropy-balanced
    update policy can consult them between scoring passes.
    """
    if len(buffer) == 0:
        raise EmptyBufferError("cannot score an empty buffer")
    before = nn.forward_loss(params, buffer.features, buffer.labels).per_example_loss
    after = nn.forward_loss(lookahead, buffer.features, buffer.labels).per_example_loss
    scores = after - before
    buffer.set_scores(scores)
    return scores


def select_interfered(scores, p):
    """Indices of the p largest scores, descending, ties to the smaller index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= p <= len(scores):
        raise ValueError(f"p must lie in [0, {len(scores)}], got {p}")
    order = np.lexsort((np.arange(len(scores)), -scores))
    return order[:p].astype(np.int64)


def _largest_remainder(weights, total):
    """Integer split of ``total`` proportional to ``weights`` (ties: lower key)."""
    weight_sum = sum(weights.values())
    raw = {j: total * w / weight_sum for j, w in weights.items()}
    alloc = {j: int(math.floor(r)) for j, r in raw.items()}
    leftover = total - sum(alloc.values())
    for j in sorted(weights, key=lambda j: (-(raw[j] - alloc[j]), j))[:leftover]:
        alloc[j] += 1
    return alloc


def allocate_task_quota(buffer, r_e, q):
    """Per-task quotas for the task-associated replay samples.

    Each task present among the interfered picks gets a share of q
    proportional to its pick count, rounded by largest remainder (ties to
    the lower task id), capped by how many of its slots remain outside the
    picks, with any surplus redistributed by the same rule.
    """
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    r_e = np.asarray(r_e, dtype=np.int64)
    if q == 0:
        return {}
    if len(r_e) == 0:
        raise ValueError("r_e must be nonempty when q > 0")
    task_ids = buffer.task_ids
    picked_tasks, pick_counts = np.unique(task_ids[r_e], return_counts=True)
    weights = {int(j): int(c) for j, c in zip(picked_tasks, pick_counts)}
    outside = np.ones(len(buffer), dtype=bool)
    outside[r_e] = False
    available = {j: int(np.sum(outside & (task_ids == j))) for j in weights}
    remaining = min(q, sum(available.values()))
    alloc = {j: 0 for j in weights}
    while remaining > 0:
        open_tasks = [j for j in weights if alloc[j] < available[j]]
        share = _largest_remainder({j: weights[j] for j in open_tasks}, remaining)
        for j in open_tasks:
            take = min(share[j], available[j] - alloc[j])
            alloc[j] += take
            remaining -= take
    return alloc


def build_plan(buffer, scores, replay_size, tau, rng):
    """Compose the replay plan for one step.

    p = round(tau * replay_size) slots come from the top of the score
    ranking; the remaining q are drawn uniformly without replacement from
    the unpicked slots of each task, honoring the task quotas. A buffer
    with fewer slots than replay_size is replayed in full (every slot
    exactly once); an empty buffer yields an empty plan.
    """
    if replay_size < 1:
        raise ValueError(f"replay_size must be >= 1, got {replay_size}")
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    n = len(buffer)
    if n == 0:
        return ReplayPlan(_EMPTY, _EMPTY, {}, tau)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] != n:
        raise ValueError(f"expected {n} scores, got {scores.shape[0]}")
    # tau > 0 means the interfered part is never empty; without it the task
    # quotas would have no tasks to draw from.
    p = max(1, round_half_up(tau * replay_size))

    if n <= replay_size:
        r_e = select_interfered(scores, min(p, n))
        r_t = np.setdiff1d(np.arange(n, dtype=np.int64), r_e)
        task_ids = buffer.task_ids
        quotas = {int(j): int(c) for j, c in
                  zip(*np.unique(task_ids[r_t], return_counts=True))} if len(r_t) else {}
        return ReplayPlan(r_e, r_t, quotas, tau)

    r_e = select_interfered(scores, p)
    q = replay_size - p
    if q == 0:
        return ReplayPlan(r_e, _EMPTY, {}, tau)
    quotas = allocate_task_quota(buffer, r_e, q)
    task_ids = buffer.task_ids
    outside = np.ones(n, dtype=bool)
    outside[r_e] = False
    parts = []
    for j in sorted(quotas):
        if quotas[j] == 0:
            continue
        pool = np.flatnonzero(outside & (task_ids == j))
        parts.append(np.sort(rng.choice(pool, size=quotas[j], replace=False)))
    r_t = np.concatenate(parts).astype(np.int64) if parts else _EMPTY
    return ReplayPlan(r_e, r_t, quotas, tau)


def _summed_grads(a, b):
    return nn.Params(a.w1 + b.w1, a.b1 + b.b1, a.w2 + b.w2, a.b2 + b.b2)


def train_step(params, X, y, buffer, strategy, alpha, rng, task_id):
    """One continual-learning update on an incoming batch.

    Selects the replay examples (strategy-dependent), applies a single SGD
    step on replay + batch, then streams every batch example through the
    buffer's admission policy. Returns the new parameters; the buffer is
    updated in place. With no buffer, or an empty one, the step degrades
    to plain SGD on the batch.
    """
    if strategy.kind == "online":
        return nn.sgd_step(params, nn.backward(params, X, y), alpha)

    replay_X = replay_y = None
    if len(buffer) > 0:
        if strategy.kind == "er":
            idx = buffer.sample_uniform(strategy.replay_size, rng=rng)
        else:
            lookahead = virtual_step(params, X, y, alpha)
            scores = compute_scores(params, lookahead, buffer)
            plan = build_plan(buffer, scores, strategy.replay_size, strategy.tau, rng)
            idx = plan.indices
        if len(idx):
            replay_X = buffer.features[idx]
            replay_y = buffer.labels[idx]

    if replay_X is None:
        new_params = nn.sgd_step(params, nn.backward(params, X, y), alpha)
    elif strategy.separate_replay_loss:
        grads = _summed_grads(nn.backward(params, X, y),
                              nn.backward(params, replay_X, replay_y))
        new_params = nn.sgd_step(params, grads, alpha)
    else:
        combined_X = np.concatenate([replay_X, np.asarray(X, dtype=np.float64)])
        combined_y = np.concatenate([replay_y, np.asarray(y, dtype=np.int64).ravel()])
        new_params = nn.sgd_step(params, nn.backward(params, combined_X, combined_y), alpha)

    for i in range(len(y)):
        buffer.update(X[i], int(y[i]), task_id)
    return new_params
