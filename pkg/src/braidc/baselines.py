"""Baseline compilers and the exact BFS distance table.

Three independent ways to compile a unitary into a braid word, used both as
baselines in benchmarks and as oracles in tests:

  * BfsTable: breadth-first enumeration from the identity with
    inverse-adjacent pruning and grid deduplication; gives the exact gate
    distance for every state within its radius, and doubles as an admissible
    heuristic (BfsHeuristic) and as the epsilon-net for Solovay-Kitaev.
  * bruteforce_compile: exhaustive scan of all reduced words up to a depth
    applied to the target, returning the minimum-length word among those at
    the best achieved distance.
  * sk_compile: the group-commutator recursion, squaring the accuracy
    exponent per level at a five-fold word-length cost.
"""

from __future__ import annotations

import time
from typing import Optional

import numpy as np

from .errors import (CommutatorDecompositionFailure, CorruptCheckpoint,
                     DepthGuardExceeded)
from .gateset import (ACTIONS, Action, BraidWord, GateSet, default_gateset,
                      free_reduce, invert_word)
from .search import CompileReport
from .su2 import (SIGN_EPS, UnitQuaternion, Unitary2, canonicalize_rows,
                  quat_mult_one_many, quat_mult_rows, quaternion_distance,
                  quaternion_to_unitary, unitary_to_quaternion)

MAX_BF_DEPTH = 16            # exhaustive enumeration guard, ~4*3^15 states
TABLE_VERSION = 1
_IDENTITY_ROW = np.array([1.0, 0.0, 0.0, 0.0])
_INVERSE_IDX = None


def _inverse_idx() -> np.ndarray:
    global _INVERSE_IDX
    if _INVERSE_IDX is None:
        _INVERSE_IDX = np.array([ACTIONS.index(a.inverse_action) for a in ACTIONS])
    return _INVERSE_IDX


def _expand_level(states, last, action_quats, pruned=True):
    """Apply every admissible action to every state in one level.

    Returns (rows, parent_local, action_idx); pruning skips the action that
    undoes the one that produced the state.
    """
    inv = _inverse_idx()
    rows_parts, parent_parts, action_parts = [], [], []
    for ai in range(4):
        if pruned and last is not None:
            idx = np.flatnonzero(last != inv[ai])
        else:
            idx = np.arange(len(states), dtype=np.int64)
        if len(idx) == 0:
            continue
        rows = canonicalize_rows(quat_mult_one_many(action_quats[ai], states[idx]))
        rows_parts.append(rows)
        parent_parts.append(idx)
        action_parts.append(np.full(len(idx), ai, dtype=np.int8))
    return (np.concatenate(rows_parts), np.concatenate(parent_parts),
            np.concatenate(action_parts))


class BfsTable:
    """Exact gate distances for every braid state within max_depth actions.

    States are canonical quaternions keyed on a grid of pitch `grid`; each
    distinct state is stored once, at its first (hence minimal) depth, with
    a parent pointer so the realizing word can be reconstructed.
    """

    def __init__(self, quats, depth, parent, action, grid, max_depth):
        self.quats = quats
        self.depth = depth
        self.parent = parent
        self.action = action
        self.grid = grid
        self.max_depth = max_depth
        self.key_to_idx = {}
        ints = np.round(quats / grid).astype(np.int64)
        for i in range(len(quats)):
            self.key_to_idx.setdefault(ints[i].tobytes(), i)

    def __len__(self) -> int:
        return len(self.quats)

    @classmethod
    def build(cls, max_depth: int, gates: Optional[GateSet] = None,
              grid: float = 1e-9) -> "BfsTable":
        gates = gates or default_gateset()
        aq = gates.quaternion_array
        quats = [_IDENTITY_ROW[None, :]]
        depth = [np.zeros(1, dtype=np.int32)]
        parent = [np.full(1, -1, dtype=np.int64)]
        action = [np.full(1, -1, dtype=np.int8)]
        seen = {np.round(_IDENTITY_ROW / grid).astype(np.int64).tobytes(): 0}
        frontier = _IDENTITY_ROW[None, :]
        frontier_last = None
        frontier_global = np.zeros(1, dtype=np.int64)
        n_total = 1
        for d in range(1, max_depth + 1):
            rows, par_local, act = _expand_level(frontier, frontier_last, aq)
            ints = np.round(rows / grid).astype(np.int64)
            fresh = []
            for i in range(len(rows)):
                key = ints[i].tobytes()
                if key not in seen:
                    seen[key] = n_total + len(fresh)
                    fresh.append(i)
            if not fresh:
                break
            fresh = np.array(fresh)
            rows = rows[fresh]
            quats.append(rows)
            depth.append(np.full(len(fresh), d, dtype=np.int32))
            parent.append(frontier_global[par_local[fresh]])
            action.append(act[fresh])
            n_total += len(fresh)
            frontier = rows
            frontier_last = act[fresh]
            frontier_global = np.arange(n_total - len(fresh), n_total, dtype=np.int64)
        table = cls.__new__(cls)
        table.quats = np.concatenate(quats)
        table.depth = np.concatenate(depth)
        table.parent = np.concatenate(parent)
        table.action = np.concatenate(action)
        table.grid = grid
        table.max_depth = max_depth
        table.key_to_idx = seen
        return table

    def lookup_many(self, rows: np.ndarray) -> np.ndarray:
        """Table index per row, -1 where the state is not covered.

        Rows must be canonical. On a primary miss, grid cells whose rounding
        was numerically ambiguous are probed too, as is the mirrored
        quaternion when the canonical sign itself was borderline.
        """
        rows = np.atleast_2d(rows)
        scaled = rows / self.grid
        keys = np.round(scaled)
        frac = scaled - keys
        ints = keys.astype(np.int64)
        out = np.full(len(rows), -1, dtype=np.int64)
        for i in range(len(rows)):
            idx = self.key_to_idx.get(ints[i].tobytes())
            if idx is None:
                idx = self._probe_neighbors(ints[i], frac[i])
            if idx is None:
                big = np.flatnonzero(np.abs(rows[i]) > SIGN_EPS)
                if len(big) and abs(rows[i][big[0]]) < 10 * SIGN_EPS:
                    idx = self.key_to_idx.get((-ints[i]).tobytes())
            if idx is not None:
                out[i] = idx
        return out

    def _probe_neighbors(self, ints, frac, tol=1e-3):
        near = np.flatnonzero(np.abs(np.abs(frac) - 0.5) < tol)
        if len(near) == 0:
            return None
        for mask in range(1, 1 << len(near)):
            alt = ints.copy()
            for b, dim in enumerate(near):
                if mask >> b & 1:
                    alt[dim] += 1 if frac[dim] > 0 else -1
            idx = self.key_to_idx.get(alt.tobytes())
            if idx is not None:
                return idx
        return None

    def word_for(self, idx: int) -> BraidWord:
        """The depth-minimal word realizing state idx, leftmost acting first."""
        actions = []
        i = int(idx)
        while self.parent[i] >= 0:
            actions.append(ACTIONS[self.action[i]])
            i = int(self.parent[i])
        return BraidWord(tuple(reversed(actions)))

    def save(self, path: str):
        np.savez_compressed(path, version=TABLE_VERSION, grid=self.grid,
                            max_depth=self.max_depth, quats=self.quats,
                            depth=self.depth, parent=self.parent,
                            action=self.action)

    @classmethod
    def load(cls, path: str) -> "BfsTable":
        try:
            with np.load(path) as z:
                if int(z["version"]) != TABLE_VERSION:
                    raise CorruptCheckpoint(
                        f"unsupported table version {int(z['version'])}")
                return cls(z["quats"], z["depth"], z["parent"], z["action"],
                           float(z["grid"]), int(z["max_depth"]))
        except CorruptCheckpoint:
            raise
        except Exception as exc:
            raise CorruptCheckpoint(f"cannot load BFS table: {exc}") from exc


def bfs_distance(state: UnitQuaternion, table: BfsTable) -> Optional[int]:
    """Exact gate distance of a state, or None when outside the table radius."""
    idx = table.lookup_many(state.components[None, :])[0]
    if idx < 0:
        return None
    return int(table.depth[idx])


class BfsHeuristic:
    """Adapter exposing a BfsTable as a batched cost-to-go function.

    States beyond the table radius get max_depth + 1, the smallest value
    consistent with not being in the table.
    """

    def __init__(self, table: BfsTable):
        self.table = table

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        idx = self.table.lookup_many(rows)
        depths = self.table.depth[np.maximum(idx, 0)].astype(np.float64)
        return np.where(idx >= 0, depths, float(self.table.max_depth + 1))


def bruteforce_compile(target: Unitary2, max_depth: int,
                       gates: Optional[GateSet] = None,
                       accuracy_goal: Optional[float] = None,
                       pruned: bool = True) -> CompileReport:
    """Scan all (reduced) words up to max_depth applied to the target.

    Returns the minimum-length word among those achieving the best distance
    found; with accuracy_goal set, stops after the first level on which the
    goal is met. Raises DepthGuardExceeded above depth 16, where the state
    count passes 4 * 3^15.
    """
    t0 = time.perf_counter()
    if max_depth > MAX_BF_DEPTH:
        raise DepthGuardExceeded(
            f"max_depth {max_depth} exceeds the exhaustive-search guard "
            f"({MAX_BF_DEPTH})")
    if not isinstance(target, Unitary2):
        target = Unitary2(target)
    gates = gates or default_gateset()
    aq = gates.quaternion_array

    states = unitary_to_quaternion(target).components[None, :]
    last = None
    levels = []                      # (parent_local, action) per depth >= 1
    best = (float(np.sqrt(max(0.0, 1.0 - states[0, 0] ** 2))), 0, 0)
    nodes = 1
    depth_reached = 0
    terminated_by = "DepthCap"
    for d in range(1, max_depth + 1):
        if accuracy_goal is not None and best[0] < accuracy_goal:
            terminated_by = "Accuracy"
            break
        rows, par, act = _expand_level(states, last, aq, pruned=pruned)
        levels.append((par, act))
        dist = np.sqrt(np.maximum(0.0, 1.0 - rows[:, 0] ** 2))
        i = int(np.argmin(dist))
        if dist[i] < best[0]:
            best = (float(dist[i]), d, i)
        nodes += len(rows)
        depth_reached = d
        states, last = rows, act
    else:
        if accuracy_goal is not None and best[0] < accuracy_goal:
            terminated_by = "Accuracy"

    # walk the per-level parent arrays back down to the root
    actions = []
    d, i = best[1], best[2]
    while d > 0:
        par, act = levels[d - 1]
        actions.append(ACTIONS[act[i]])
        i = int(par[i])
        d -= 1
    path = BraidWord(tuple(reversed(actions)))
    word = free_reduce(invert_word(path))
    return CompileReport(word=word, distance=best[0], length=len(word),
                         nodes_expanded=nodes, depth_reached=depth_reached,
                         wall_time=time.perf_counter() - t0,
                         terminated_by=terminated_by,
                         config={"max_depth": max_depth, "pruned": pruned,
                                 "accuracy_goal": accuracy_goal})


class SkBase:
    """Epsilon-net over the group: every braid state within a BFS radius."""

    def __init__(self, table: BfsTable, covering_radius: float):
        self.table = table
        self.covering_radius = covering_radius

    def __len__(self) -> int:
        return len(self.table)

    @property
    def depth(self) -> int:
        return self.table.max_depth

    def nearest(self, q: np.ndarray) -> tuple:
        """(index, distance) of the net element closest to quaternion row q."""
        dots = np.abs(self.table.quats @ q)
        i = int(np.argmax(dots))
        return i, float(np.sqrt(max(0.0, 1.0 - min(1.0, dots[i]) ** 2)))

    def word(self, idx: int) -> BraidWord:
        return self.table.word_for(idx)

    def quat(self, idx: int) -> np.ndarray:
        return self.table.quats[idx]


def sk_build_base(depth: int = 12, gates: Optional[GateSet] = None,
                  radius_samples: int = 256, seed: int = 0) -> SkBase:
    """Enumerate the epsilon-net and estimate its covering radius by sampling."""
    table = BfsTable.build(depth, gates)
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((radius_samples, 4))
    samples /= np.linalg.norm(samples, axis=1, keepdims=True)
    samples = canonicalize_rows(samples)
    dots = np.abs(samples @ table.quats.T).max(axis=1)
    radius = float(np.sqrt(np.maximum(0.0, 1.0 - np.minimum(1.0, dots) ** 2)).max())
    return SkBase(table, radius)


def _rotation_between(m: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Quaternion of a rotation taking unit vector m to unit vector n."""
    d = float(np.dot(m, n))
    if d > 1.0 - 1e-14:
        return _IDENTITY_ROW.copy()
    if d < -1.0 + 1e-12:
        # half-turn about any axis perpendicular to m
        helper = np.array([1.0, 0.0, 0.0]) if abs(m[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(m, helper)
        axis /= np.linalg.norm(axis)
        return np.concatenate(([0.0], axis))
    q = np.concatenate(([1.0 + d], np.cross(m, n)))
    return q / np.linalg.norm(q)


def _quat_conj(q: np.ndarray) -> np.ndarray:
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def _commutator(qv: np.ndarray, qw: np.ndarray) -> np.ndarray:
    rows = np.stack([qv, qw, _quat_conj(qv), _quat_conj(qw)])
    out = rows[0]
    for r in rows[1:]:
        out = quat_mult_rows(out[None, :], r[None, :])[0]
    return out


def gc_decompose_quat(q: np.ndarray) -> tuple:
    """Balanced group-commutator factors (qv, qw) with qv qw qv* qw* = q.

    The rotation angle theta of q fixes the common factor angle phi through
    sin(theta / 4) = sin^2(phi / 2); both factors are phi-rotations about
    perpendicular axes, conjugated so the commutator axis lands on q's axis.
    """
    w = float(np.clip(q[0], -1.0, 1.0))
    vec = q[1:]
    theta = 2.0 * np.arccos(w)
    if theta > np.pi:
        # re-balance into the admissible range via the mirrored rotation
        theta = 2.0 * np.pi - theta
        vec = -vec
    if theta < 1e-12 or np.linalg.norm(vec) < 1e-300:
        return _IDENTITY_ROW.copy(), _IDENTITY_ROW.copy()
    axis = vec / np.linalg.norm(vec)
    phi = 2.0 * np.arcsin(np.sqrt(np.sin(theta / 4.0)))
    c, s = np.cos(phi / 2.0), np.sin(phi / 2.0)
    qv0 = np.array([c, s, 0.0, 0.0])
    qw0 = np.array([c, 0.0, s, 0.0])
    m = np.array([c * s, -c * s, c * c])
    m /= np.linalg.norm(m)
    qs = _rotation_between(m, axis)
    qsc = _quat_conj(qs)
    qv = quat_mult_rows(quat_mult_rows(qs[None], qv0[None]), qsc[None])[0]
    qw = quat_mult_rows(quat_mult_rows(qs[None], qw0[None]), qsc[None])[0]
    return qv, qw


def gc_decompose(u: Unitary2, tol: float = 1e-8) -> tuple:
    """Unitaries (V, W) with V W V^dag W^dag = U up to tol; see gc_decompose_quat."""
    q = unitary_to_quaternion(u).components
    qv, qw = gc_decompose_quat(q)
    qc = _commutator(qv, qw)
    # component-wise residual: the inner-product metric cannot resolve below
    # its own rounding floor near zero
    residual = min(np.abs(qc - q).max(), np.abs(qc + q).max())
    if residual > tol:
        raise CommutatorDecompositionFailure(
            f"commutator residual {residual:.3e} exceeds {tol:.1e}")
    return (quaternion_to_unitary(UnitQuaternion.from_components(qv)),
            quaternion_to_unitary(UnitQuaternion.from_components(qw)))


def _invert_tuple(word: tuple) -> tuple:
    return tuple(a.inverse_action for a in reversed(word))


def sk_compile(target: Unitary2, level: int, base: SkBase) -> CompileReport:
    """Solovay-Kitaev recursion on top of an enumerated epsilon-net.

    Level 0 is nearest-neighbour lookup in the net; level n approximates the
    residual with a balanced group commutator whose factors are compiled at
    level n - 1, giving the usual accuracy-squaring / length-times-5 trade.
    """
    t0 = time.perf_counter()
    if not isinstance(target, Unitary2):
        target = Unitary2(target)
    q_t = unitary_to_quaternion(target).components
    lookups = [0]

    def rec(q: np.ndarray, n: int) -> tuple:
        if n == 0:
            lookups[0] += 1
            i, _ = base.nearest(q)
            return tuple(base.word(i)), base.quat(i)
        w_u, q_u = rec(q, n - 1)
        delta = canonicalize_rows(
            quat_mult_rows(q[None], _quat_conj(q_u)[None]))[0]
        qv_goal, qw_goal = gc_decompose_quat(delta)
        w_v, q_v = rec(qv_goal, n - 1)
        w_w, q_w = rec(qw_goal, n - 1)
        word = w_u + _invert_tuple(w_w) + _invert_tuple(w_v) + w_w + w_v
        realized = _commutator(q_v, q_w)
        realized = quat_mult_rows(realized[None], q_u[None])[0]
        realized /= np.linalg.norm(realized)
        return word, realized

    word_tuple, q_real = rec(q_t, level)
    word = free_reduce(BraidWord(word_tuple))
    dist = quaternion_distance(UnitQuaternion.from_components(q_real),
                               UnitQuaternion.from_components(q_t))
    return CompileReport(word=word, distance=dist, length=len(word),
                         nodes_expanded=lookups[0], depth_reached=level,
                         wall_time=time.perf_counter() - t0,
                         terminated_by="DepthCap",
                         config={"level": level, "base_depth": base.depth,
                                 "base_size": len(base)})
