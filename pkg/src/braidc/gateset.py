"""Fibonacci braid generators, word algebra, and the state transition S(s, a).

The action alphabet is the four-element set {s1, s1i, s2, s2i}: the two
elementary braidings and their inverses. Braid words are written leftmost
token acting first in time, so the realized matrix is the product
U(w_n) ... U(w_1). The text form is whitespace-separated tokens, e.g.
"s1 s2i s2i s1".
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import su2
from .su2 import UnitQuaternion, Unitary2

INVERSE_CLOSURE_TOL = 1e-12


class Action(enum.Enum):
    """One of the four elementary braid moves."""

    S1 = ("s1", 1, False)
    S1I = ("s1i", 1, True)
    S2 = ("s2", 2, False)
    S2I = ("s2i", 2, True)

    def __init__(self, token: str, generator: int, inverse: bool):
        self.token = token
        self.generator = generator
        self.inverse = inverse

    @property
    def index(self) -> int:
        """Stable position in ACTIONS, for array-indexed code paths."""
        return _ACTION_INDEX[self]

    @property
    def inverse_action(self) -> "Action":
        return _INVERSES[self]

    @staticmethod
    def from_token(token: str) -> "Action":
        try:
            return _TOKEN_TO_ACTION[token]
        except KeyError:
            raise ValueError(f"unknown braid token {token!r}; expected one of "
                             f"{sorted(_TOKEN_TO_ACTION)}") from None


ACTIONS = (Action.S1, Action.S1I, Action.S2, Action.S2I)
_ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}
_INVERSES = {Action.S1: Action.S1I, Action.S1I: Action.S1,
             Action.S2: Action.S2I, Action.S2I: Action.S2}
_TOKEN_TO_ACTION = {a.token: a for a in ACTIONS}


@dataclass(frozen=True)
class BraidWord:
    """An ordered action sequence; leftmost token acts first in time."""

    tokens: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @staticmethod
    def from_text(text: str) -> "BraidWord":
        return BraidWord(tuple(Action.from_token(t) for t in text.split()))

    def to_text(self) -> str:
        return " ".join(a.token for a in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __add__(self, other: "BraidWord") -> "BraidWord":
        return BraidWord(self.tokens + other.tokens)


@dataclass(frozen=True)
class GateSet:
    """Action alphabet with unitaries, per-action costs, and cached quaternions."""

    unitaries: dict
    costs: dict = field(default_factory=dict)

    def __post_init__(self):
        costs = dict(self.costs) if self.costs else {a: 1.0 for a in self.unitaries}
        for a, u in self.unitaries.items():
            inv = a.inverse_action
            if inv not in self.unitaries:
                raise ValueError(f"gate set lacks the inverse of {a}")
            err = np.linalg.norm(self.unitaries[inv].matrix - u.matrix.conj().T)
            if err > INVERSE_CLOSURE_TOL:
                raise ValueError(f"gate set not closed under inverse at {a}: {err:.3e}")
            if costs.get(a, 0.0) <= 0.0:
                raise ValueError(f"nonpositive cost for {a}")
        object.__setattr__(self, "costs", costs)
        quats = {a: su2.unitary_to_quaternion(u) for a, u in self.unitaries.items()}
        object.__setattr__(self, "_quats", quats)
        arr = np.stack([quats[a].components for a in ACTIONS])
        arr.flags.writeable = False
        object.__setattr__(self, "_quat_array", arr)

    def unitary(self, a: Action) -> Unitary2:
        return self.unitaries[a]

    def quaternion(self, a: Action) -> UnitQuaternion:
        return self._quats[a]

    @property
    def quaternion_array(self) -> np.ndarray:
        """(4, 4) array of action quaternions in ACTIONS order."""
        return self._quat_array

    def cost(self, a: Action) -> float:
        return self.costs[a]


def fibonacci_gateset() -> GateSet:
    """The Fibonacci-anyon gate set.

    sigma1 = diag(exp(-i 4 pi / 5), exp(i 3 pi / 5)) and sigma2 = F sigma1 F,
    where F is the symmetric involution built from the golden ratio
    phi = (sqrt(5) + 1) / 2. All action costs are 1.
    """
    phi = (math.sqrt(5.0) + 1.0) / 2.0
    s1 = np.array([[np.exp(-4j * np.pi / 5.0), 0.0],
                   [0.0, np.exp(3j * np.pi / 5.0)]])
    f = np.array([[1.0 / phi, 1.0 / math.sqrt(phi)],
                  [1.0 / math.sqrt(phi), -1.0 / phi]])
    s2 = f @ s1 @ f
    unitaries = {
        Action.S1: Unitary2(s1),
        Action.S1I: Unitary2(s1.conj().T),
        Action.S2: Unitary2(s2),
        Action.S2I: Unitary2(s2.conj().T),
    }
    return GateSet(unitaries=unitaries)


_DEFAULT_GATESET = None


def default_gateset() -> GateSet:
    """Cached module-wide Fibonacci gate set."""
    global _DEFAULT_GATESET
    if _DEFAULT_GATESET is None:
        _DEFAULT_GATESET = fibonacci_gateset()
    return _DEFAULT_GATESET


def apply_action(s: UnitQuaternion, a: Action, gates: GateSet = None) -> UnitQuaternion:
    """State transition S(s, a): left-multiply the state by the action's gate.

    Runs in quaternion arithmetic (the convention in su2 makes the quaternion
    map a homomorphism), then re-applies the canonical sign.
    """
    gates = gates or default_gateset()
    prod = su2.quat_mult_rows(gates.quaternion(a).components[None, :],
                              s.components[None, :])[0]
    return UnitQuaternion.from_components(prod)


def word_to_unitary(w: BraidWord, gates: GateSet = None) -> Unitary2:
    """Realize a braid word as a matrix: leftmost token is the rightmost factor."""
    gates = gates or default_gateset()
    m = np.eye(2, dtype=np.complex128)
    for a in w:
        m = gates.unitary(a).matrix @ m
    return Unitary2(m)


def invert_word(w: BraidWord) -> BraidWord:
    """Reverse the order and flip every inverse flag."""
    return BraidWord(tuple(a.inverse_action for a in reversed(w.tokens)))


def free_reduce(w: BraidWord) -> BraidWord:
    """Cancel adjacent a a^-1 pairs until none remain."""
    out = []
    for a in w:
        if out and out[-1] is a.inverse_action:
            out.pop()
        else:
            out.append(a)
    return BraidWord(tuple(out))
