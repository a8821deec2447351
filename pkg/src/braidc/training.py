"""Value-iteration training of the cost-to-go network.

A policy network learns J(s), the number of gates separating a braid state
from the identity, by regressing on bootstrap targets from a frozen target
network: J'(s) = min_a (g(s, a) + J_t(S(s, a))), with J = 0 inside a small
ball around the identity. Whenever the loss drops below delta the target
network is synchronized with the policy and the scramble length M grows by
one, so the curriculum expands outward from the identity.

Training states come from two sources: all words up to a brute-force depth
(including the identity itself), and random scrambles of length up to M with
every prefix kept, which makes the scramble-depth histogram uniform.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceDetected
from .gateset import ACTIONS, GateSet, default_gateset
from .mlp import (MLPNetwork, NetworkSpec, copy_parameters, desk_spec,
                  load_checkpoint)
from .search import _as_heuristic
from .su2 import UnitQuaternion, canonicalize_rows, quat_mult_one_many

_IDENTITY_ROW = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters for one training run; defaults are desk-scale."""

    M_init: int = 5
    delta: float = 0.05
    D_bf_data: int = 2
    batch_size: int = 2048
    epochs: int = 2000
    lr: float = 1e-4
    identity_eps: float = 1e-4
    seed: int = 0
    # engineering knobs not fixed by the algorithm description
    net_spec: NetworkSpec = field(default_factory=desk_spec)
    refresh_epochs: int = 50
    M_cap: int = 40
    log_path: Optional[str] = None
    checkpoint_path: Optional[str] = None
    checkpoint_every: int = 500

    def __post_init__(self):
        if self.M_init < 1:
            raise ValueError("M_init must be at least 1")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass
class TrainingSample:
    """One state with its four successors and the scramble depth it came from."""

    state: UnitQuaternion
    successors: tuple
    scramble_k: int


def _successor_rows(states: np.ndarray, gates: GateSet) -> np.ndarray:
    """(n, 4, 4) canonical successor quaternions, action-indexed."""
    aq = gates.quaternion_array
    n = len(states)
    out = np.empty((n, 4, 4))
    for ai in range(4):
        out[:, ai, :] = canonicalize_rows(quat_mult_one_many(aq[ai], states))
    return out


def _batch_arrays(cfg: TrainingConfig, M: int, rng: np.random.Generator,
                  gates: GateSet):
    """(states, successors, ks) for one batch; see the module docstring."""
    rows = [_IDENTITY_ROW[None, :]]
    ks = [np.zeros(1, dtype=np.int64)]
    level = _IDENTITY_ROW[None, :]
    aq = gates.quaternion_array
    for d in range(1, cfg.D_bf_data + 1):
        level = np.concatenate([
            canonicalize_rows(quat_mult_one_many(aq[ai], level))
            for ai in range(4)])
        rows.append(level)
        ks.append(np.full(len(level), d, dtype=np.int64))
    n_bf = sum(len(r) for r in rows)

    n_walks = max(1, (cfg.batch_size - n_bf + M - 1) // M)
    actions = rng.integers(0, 4, size=(n_walks, M))
    walk = np.tile(_IDENTITY_ROW, (n_walks, 1))
    for step in range(M):
        nxt = np.empty_like(walk)
        for ai in range(4):
            sel = actions[:, step] == ai
            if sel.any():
                nxt[sel] = quat_mult_one_many(aq[ai], walk[sel])
        walk = canonicalize_rows(nxt)
        rows.append(walk.copy())
        ks.append(np.full(n_walks, step + 1, dtype=np.int64))

    states = np.concatenate(rows)
    ks = np.concatenate(ks)
    return states, _successor_rows(states, gates), ks


def generate_training_batch(cfg: TrainingConfig, M: int,
                            rng: Optional[np.random.Generator] = None,
                            gates: Optional[GateSet] = None) -> list:
    """All depth <= D_bf_data word states plus random-scramble prefixes.

    Scrambles have length M with every prefix retained, so the scramble
    depth k is uniform on {1..M}. Duplicate states are kept. Deterministic
    for a given generator state.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    gates = gates or default_gateset()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    states, succ, ks = _batch_arrays(cfg, M, rng, gates)
    samples = []
    for i in range(len(states)):
        samples.append(TrainingSample(
            state=UnitQuaternion.from_components(states[i].copy()),
            successors=tuple(UnitQuaternion.from_components(succ[i, a].copy())
                             for a in range(4)),
            scramble_k=int(ks[i])))
    return samples


def _targets_from_rows(target_net, states: np.ndarray, succ: np.ndarray,
                       gates: GateSet, identity_eps: float) -> np.ndarray:
    """Eq-style bootstrap: min over actions of cost plus clamped J_t."""
    h = _as_heuristic(target_net)
    n = len(states)
    flat = succ.reshape(n * 4, 4)
    j_succ = np.maximum(h(flat), 0.0).reshape(n, 4)
    d_succ = np.sqrt(np.maximum(0.0, 1.0 - flat[:, 0] ** 2)).reshape(n, 4)
    j_succ = np.where(d_succ < identity_eps, 0.0, j_succ)
    costs = np.array([gates.cost(a) for a in ACTIONS])
    targets = (costs[None, :] + j_succ).min(axis=1)
    d_state = np.sqrt(np.maximum(0.0, 1.0 - states[:, 0] ** 2))
    return np.where(d_state < identity_eps, 0.0, targets)


def compute_targets(target_net, samples: list, gates: Optional[GateSet] = None,
                    identity_eps: float = 1e-4) -> np.ndarray:
    """Training targets for a list of TrainingSample; one batched net call."""
    gates = gates or default_gateset()
    states = np.stack([s.state.components for s in samples])
    succ = np.stack([np.stack([q.components for q in s.successors])
                     for s in samples])
    return _targets_from_rows(target_net, states, succ, gates, identity_eps)


def train(cfg: TrainingConfig, gates: Optional[GateSet] = None,
          resume_checkpoint: Optional[str] = None,
          resume_M: Optional[int] = None):
    """Run the value-iteration loop; returns (policy_net, log_rows).

    Log rows are dicts with epoch, loss, M, mean_target; the same rows are
    appended to cfg.log_path as CSV when set. Raises DivergenceDetected on a
    non-finite loss. Passing resume_checkpoint loads saved parameters into
    both the policy and the target net before the loop; resume_M sets the
    starting walk length so a restarted run continues its curriculum.
    """
    gates = gates or default_gateset()
    policy = MLPNetwork(cfg.net_spec).initialize(cfg.seed)
    if resume_checkpoint:
        copy_parameters(load_checkpoint(resume_checkpoint), policy)
    if cfg.epochs <= 0:
        policy.eval()
        if cfg.checkpoint_path:
            policy.save_checkpoint(cfg.checkpoint_path)
        return policy, []
    target = MLPNetwork(cfg.net_spec).initialize(cfg.seed)
    copy_parameters(policy, target)
    target.eval()

    rng = np.random.default_rng(cfg.seed)
    M = cfg.M_init
    if resume_M is not None:
        if resume_M < 1:
            raise ValueError(f"resume_M must be >= 1, got {resume_M}")
        M = min(resume_M, cfg.M_cap)
    log_rows = []
    writer = None
    log_file = None
    if cfg.log_path:
        os.makedirs(os.path.dirname(cfg.log_path) or ".", exist_ok=True)
        log_file = open(cfg.log_path, "w", newline="")
        writer = csv.writer(log_file)
        writer.writerow(["epoch", "loss", "M", "mean_target"])

    states = succ = targets = None
    try:
        for epoch in range(cfg.epochs):
            if states is None or epoch % cfg.refresh_epochs == 0:
                states, succ, _ = _batch_arrays(cfg, M, rng, gates)
                targets = None
            if targets is None:
                targets = _targets_from_rows(target, states, succ, gates,
                                             cfg.identity_eps)

            policy.train()
            loss, grads = policy.loss_and_gradient(states, targets)
            if not np.isfinite(loss):
                raise DivergenceDetected(f"loss became {loss} at epoch {epoch}")
            policy.adam_step(grads, cfg.lr)

            row = {"epoch": epoch, "loss": float(loss), "M": M,
                   "mean_target": float(np.mean(targets))}
            log_rows.append(row)
            if writer:
                writer.writerow([row["epoch"], repr(row["loss"]), row["M"],
                                 repr(row["mean_target"])])

            if loss < cfg.delta:
                copy_parameters(policy, target)
                target.eval()
                if M < cfg.M_cap:
                    M += 1
                states = None        # curriculum moved: fresh data next epoch
                targets = None

            if (cfg.checkpoint_path and cfg.checkpoint_every > 0
                    and (epoch + 1) % cfg.checkpoint_every == 0):
                policy.eval()
                policy.save_checkpoint(cfg.checkpoint_path)
    finally:
        if log_file:
            log_file.close()

    policy.eval()
    if cfg.checkpoint_path:
        policy.save_checkpoint(cfg.checkpoint_path)
    return policy, log_rows
