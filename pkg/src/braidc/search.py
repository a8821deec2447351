"""Batched weighted A* over the braid-action graph.

States are canonical unit quaternions w * q_target reached by applying braid
words w to the target; the goal is the identity. Each iteration pops the N
lowest-f open nodes (f = lambda G + J + decimal penalty), expands all
actions in one batched heuristic call, deduplicates against every state seen
so far on a quaternion grid, and tracks the best state by distance to the
identity. The final answer is the inverted, reversed, freely reduced path
of the best node, which realizes the target up to the reported distance.

Tie-breaking is pinned for reproducibility: node order is ascending f, then
ascending J, then insertion order; the same order drives open-set eviction
from the top.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import EmptyGateSet
from .gateset import (ACTIONS, Action, BraidWord, GateSet, free_reduce,
                      invert_word)
from .mlp import MLPNetwork
from .su2 import (UnitQuaternion, Unitary2, canonicalize_rows, distance_rows,
                  quat_mult_one_many, unitary_to_quaternion)

EXACT_HIT_EPS = 1e-9         # accuracy goal when epsilon_T is unset
PENALTY_FLOOR = 1e-9         # below this J the decimal penalty is defined as 0
BEST_TIE_EPS = 1e-12         # distance ties prefer the shorter word


@dataclass(frozen=True)
class SearchConfig:
    """All scalars the search needs; defaults follow the reference settings."""

    lam: float = 1.0
    gamma: float = 400.0
    D_max: int = 100
    D_bf: int = 5
    N: int = 100
    max_open: int = 100_000
    epsilon_T: Optional[float] = None
    dedupe_grid: float = 1e-9

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "gamma": self.gamma, "D_max": self.D_max,
                "D_bf": self.D_bf, "N": self.N, "max_open": self.max_open,
                "epsilon_T": self.epsilon_T, "dedupe_grid": self.dedupe_grid}


def complexity_config(epsilon_T: float, **overrides) -> SearchConfig:
    """Preset for accuracy-targeted runs: deep cap, everything else default."""
    return replace(SearchConfig(D_max=1000, epsilon_T=epsilon_T), **overrides)


@dataclass
class SearchNode:
    """API-level view of one search node (the engine itself is array-based)."""

    state: UnitQuaternion
    G: float
    parent: Optional["SearchNode"] = None
    action: Optional[Action] = None
    J: float = 0.0
    f: float = 0.0


@dataclass
class CompileReport:
    """Outcome of one compilation, JSON-serializable."""

    word: BraidWord
    distance: float
    length: int
    nodes_expanded: int
    depth_reached: int
    wall_time: float
    terminated_by: str
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"word": self.word.to_text(), "distance": self.distance,
                "length": self.length, "nodes_expanded": self.nodes_expanded,
                "depth_reached": self.depth_reached,
                "wall_time_s": self.wall_time,
                "terminated_by": self.terminated_by, "config": self.config}

    @staticmethod
    def from_json(doc: dict) -> "CompileReport":
        return CompileReport(word=BraidWord.from_text(doc["word"]),
                             distance=doc["distance"], length=doc["length"],
                             nodes_expanded=doc["nodes_expanded"],
                             depth_reached=doc["depth_reached"],
                             wall_time=doc["wall_time_s"],
                             terminated_by=doc["terminated_by"],
                             config=doc.get("config", {}))


def decimal_penalty(j: float, gamma: float) -> float:
    """gamma (J - round(J))^2 / J, defined as 0 at J <= 1e-9."""
    if j <= PENALTY_FLOOR:
        return 0.0
    frac = j - round(j)
    return gamma * frac * frac / j


def evaluate_f(node: SearchNode, cfg: SearchConfig) -> float:
    """f(s) = lambda G(s) + J(s) + decimal penalty."""
    return cfg.lam * node.G + node.J + decimal_penalty(node.J, cfg.gamma)


def _penalty_rows(j: np.ndarray, gamma: float) -> np.ndarray:
    frac = j - np.round(j)
    with np.errstate(divide="ignore", invalid="ignore"):
        pen = gamma * frac * frac / j
    return np.where(j <= PENALTY_FLOOR, 0.0, pen)


def _as_heuristic(net):
    """Adapt a cost-to-go provider to a callable (n, 4) -> (n,)."""
    if isinstance(net, MLPNetwork):
        net.eval()
        return lambda rows: np.maximum(net.forward(rows), 0.0)
    if callable(net):
        return lambda rows: np.asarray(net(rows), dtype=np.float64)
    raise TypeError(f"cannot use {type(net).__name__} as a heuristic")


def _select_ordered(cand_idx, f, j, n_take):
    """Indices of the n_take lowest nodes by (f, J, index), exactly ordered."""
    if len(cand_idx) == 0 or n_take <= 0:
        return cand_idx[:0]
    fv = f[cand_idx]
    if n_take < len(cand_idx):
        part = np.argpartition(fv, n_take - 1)[:n_take]
        thresh = fv[part].max()
        keep = cand_idx[fv <= thresh]
    else:
        keep = cand_idx
    order = np.lexsort((keep, j[keep], f[keep]))
    return keep[order[:n_take]]


class _NodeStore:
    """Growable arrays of node attributes plus the seen-state grid index."""

    def __init__(self, grid: float, cap: int = 4096):
        self.grid = grid
        self.n = 0
        self.states = np.empty((cap, 4))
        self.G = np.empty(cap)
        self.J = np.empty(cap)
        self.f = np.empty(cap)
        self.dist = np.empty(cap)
        self.parent = np.empty(cap, dtype=np.int64)
        self.action = np.empty(cap, dtype=np.int8)
        self.length = np.empty(cap, dtype=np.int32)
        self.in_open = np.zeros(cap, dtype=bool)
        self.seen = {}

    def _ensure(self, extra: int):
        need = self.n + extra
        cap = self.states.shape[0]
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        for name in ("states", "G", "J", "f", "dist", "parent", "action",
                     "length", "in_open"):
            old = getattr(self, name)
            shape = (cap,) + old.shape[1:]
            new = np.zeros(shape, dtype=old.dtype)
            new[:self.n] = old[:self.n]
            setattr(self, name, new)

    def keys_of(self, rows: np.ndarray):
        ints = np.round(rows / self.grid).astype(np.int64)
        return [r.tobytes() for r in ints]


def search(target: Unitary2, net, gates: GateSet, cfg: SearchConfig) -> CompileReport:
    """Compile one unitary into a braid word; see the module docstring."""
    t0 = time.perf_counter()
    if not gates.unitaries:
        raise EmptyGateSet("the gate set has no actions")
    if not isinstance(target, Unitary2):
        target = Unitary2(target)

    heuristic = _as_heuristic(net)
    q_target = unitary_to_quaternion(target).components
    action_quats = gates.quaternion_array
    costs = np.array([gates.cost(a) for a in ACTIONS])
    eps_goal = cfg.epsilon_T if cfg.epsilon_T is not None else EXACT_HIT_EPS

    store = _NodeStore(cfg.dedupe_grid)
    root_words = []

    # best-so-far: strict improvement beyond a hair, or same distance with a
    # shorter (unreduced) word
    best_idx = -1
    best_dist = np.inf

    def consider_best(indices):
        nonlocal best_idx, best_dist
        for i in indices:
            d = store.dist[i]
            if d < best_dist - BEST_TIE_EPS or (
                    d < best_dist + BEST_TIE_EPS
                    and (best_idx < 0 or store.length[i] < store.length[best_idx])):
                best_idx = int(i)
                best_dist = min(best_dist, float(d))

    def insert_nodes(rows, g_vals, lengths, parents, actions, root_ids=None):
        """Dedupe rows against everything seen, then append the survivors."""
        keys = store.keys_of(rows)
        fresh = []
        for r, key in enumerate(keys):
            if key not in store.seen:
                store.seen[key] = store.n + len(fresh)
                fresh.append(r)
        if not fresh:
            return np.empty(0, dtype=np.int64)
        fresh = np.array(fresh)
        rows = rows[fresh]
        m = len(fresh)
        store._ensure(m)
        sl = slice(store.n, store.n + m)
        j_vals = heuristic(rows)
        store.states[sl] = rows
        store.G[sl] = g_vals[fresh]
        store.J[sl] = j_vals
        store.f[sl] = cfg.lam * g_vals[fresh] + j_vals + _penalty_rows(j_vals, cfg.gamma)
        store.dist[sl] = distance_rows(rows, np.array([1.0, 0.0, 0.0, 0.0]))
        store.parent[sl] = parents[fresh]
        store.action[sl] = actions[fresh]
        store.length[sl] = lengths[fresh]
        store.in_open[sl] = True
        new_idx = np.arange(store.n, store.n + m)
        store.n += m
        consider_best(new_idx)
        return new_idx

    # ---- brute-force initialization: every reduced word of length <= D_bf
    # applied to the target, shortest first so dedupe keeps minimal words
    level = [((), unitary_to_quaternion(target).components)]
    all_init = []
    for depth in range(cfg.D_bf + 1):
        if depth > 0:
            nxt = []
            for word, state in level:
                last = word[-1] if word else None
                for ai, a in enumerate(ACTIONS):
                    if last is not None and a is last.inverse_action:
                        continue
                    rows = quat_mult_one_many(action_quats[ai], state[None, :])
                    nxt.append((word + (a,), canonicalize_rows(rows)[0]))
            level = nxt
        all_init.extend(level)
    init_rows = np.stack([s for _, s in all_init])
    init_parents = np.empty(len(all_init), dtype=np.int64)
    init_lengths = np.empty(len(all_init), dtype=np.int32)
    for i, (word, _) in enumerate(all_init):
        root_words.append(word)
        init_parents[i] = -1 - i
        init_lengths[i] = len(word)
    insert_nodes(init_rows, np.zeros(len(all_init)), init_lengths,
                 init_parents, np.full(len(all_init), -1, dtype=np.int64))

    nodes_expanded = 0
    depth_reached = 0
    terminated_by = "DepthCap"
    if best_dist < eps_goal:
        terminated_by = "Accuracy"
    else:
        for iteration in range(1, cfg.D_max + 1):
            open_idx = np.flatnonzero(store.in_open[:store.n])
            if len(open_idx) == 0:
                break
            selected = _select_ordered(open_idx, store.f, store.J, cfg.N)
            store.in_open[selected] = False
            nodes_expanded += len(selected)
            depth_reached = iteration

            m = len(selected)
            parent_states = store.states[selected]
            rows = np.concatenate([
                canonicalize_rows(quat_mult_one_many(action_quats[ai], parent_states))
                for ai in range(4)])
            parents = np.tile(selected, 4)
            actions = np.repeat(np.arange(4, dtype=np.int64), m)
            g_vals = store.G[parents] + costs[actions]
            lengths = store.length[parents] + 1
            insert_nodes(rows, g_vals, lengths, parents, actions)

            n_open = int(store.in_open[:store.n].sum())
            if n_open > cfg.max_open:
                open_now = np.flatnonzero(store.in_open[:store.n])
                keep = _select_ordered(open_now, store.f, store.J, cfg.max_open)
                store.in_open[open_now] = False
                store.in_open[keep] = True

            if best_dist < eps_goal:
                terminated_by = "Accuracy"
                break

    # ---- path reconstruction: tree actions back to the root, then the
    # root's own initial word; invert to get the word realizing the target
    tree = []
    i = best_idx
    while store.parent[i] >= 0:
        tree.append(ACTIONS[store.action[i]])
        i = int(store.parent[i])
    root = root_words[-int(store.parent[i]) - 1]
    path = BraidWord(root + tuple(reversed(tree)))
    word = free_reduce(invert_word(path))

    return CompileReport(word=word, distance=float(store.dist[best_idx]),
                         length=len(word),
                         nodes_expanded=nodes_expanded,
                         depth_reached=depth_reached,
                         wall_time=time.perf_counter() - t0,
                         terminated_by=terminated_by, config=cfg.to_dict())


def compile_with_accuracy(target: Unitary2, net, gates: GateSet,
                          cfg: SearchConfig) -> CompileReport:
    """Accuracy-targeted entry point; requires epsilon_T to be set."""
    if cfg.epsilon_T is None:
        raise ValueError("compile_with_accuracy requires cfg.epsilon_T")
    return search(target, net, gates, cfg)
