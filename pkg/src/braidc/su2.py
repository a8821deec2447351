"""2x2 unitary algebra, projective SU(2) canonicalization, quaternion metric.

The quaternion convention is fixed once, here: a unit quaternion
q = w + x i + y j + z k corresponds to the SU(2) matrix

    U(q) = w I - i (x sx + y sy + z sz)
         = [[w - i z, -y - i x],
            [ y - i x,  w + i z]]

with sx, sy, sz the Pauli matrices. The minus sign makes the map a group
homomorphism: q(U V) = q(U) q(V) under the Hamilton product, so gate
composition can run in quaternion arithmetic. Global phase is stripped by
projecting to SU(2) first; the leftover q vs -q ambiguity is resolved by a
canonical sign rule: the first component of (w, x, y, z) whose magnitude
exceeds 1e-9 is made positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonUnitaryInput

UNITARITY_TOL = 1e-10
NORM_TOL = 1e-12
SIGN_EPS = 1e-9


# ---------------------------------------------------------------------------
# Array helpers (row-vectorized quaternion arithmetic used by search/training)
# ---------------------------------------------------------------------------

def canonicalize_rows(rows: np.ndarray, eps: float = SIGN_EPS) -> np.ndarray:
    """Apply the canonical sign rule to every row of an (n, 4) array."""
    rows = np.asarray(rows, dtype=np.float64)
    sign = np.zeros(rows.shape[0])
    for k in range(4):
        undecided = sign == 0.0
        big = np.abs(rows[:, k]) > eps
        pick = undecided & big
        sign[pick] = np.sign(rows[pick, k])
    sign[sign == 0.0] = 1.0
    return rows * sign[:, None]


def quat_mult_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise Hamilton product of two (n, 4) arrays."""
    w1, x1, y1, z1 = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    w2, x2, y2, z2 = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    out = np.empty_like(a)
    out[:, 0] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    out[:, 1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    out[:, 2] = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    out[:, 3] = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    return out


def quat_mult_one_many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of one quaternion (4,) with every row of b (n, 4)."""
    return quat_mult_rows(np.broadcast_to(a, b.shape), b)


def distance_rows(rows: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Quaternion distance of every row of an (n, 4) array to one quaternion."""
    dot = rows @ np.asarray(q, dtype=np.float64)
    return np.sqrt(np.maximum(0.0, 1.0 - np.minimum(dot * dot, 1.0)))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Unitary2:
    """A 2x2 unitary matrix, validated at construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.shape != (2, 2):
            raise NonUnitaryInput(f"expected a 2x2 matrix, got shape {m.shape}")
        err = np.linalg.norm(m.conj().T @ m - np.eye(2))
        if not err < UNITARITY_TOL:
            raise NonUnitaryInput(f"unitarity violated: ||U+U - I||_F = {err:.3e}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def identity() -> "Unitary2":
        return Unitary2(np.eye(2, dtype=np.complex128))

    def dagger(self) -> "Unitary2":
        return Unitary2(self.matrix.conj().T)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2(self.matrix @ other.matrix)


@dataclass(frozen=True)
class UnitQuaternion:
    """A unit quaternion in canonical sign form; the search/network state."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        v = np.array([self.w, self.x, self.y, self.z], dtype=np.float64)
        n2 = float(v @ v)
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValueError(f"quaternion norm^2 = {n2!r} is not 1")
        v = canonicalize_rows(v[None, :])[0]
        object.__setattr__(self, "w", float(v[0]))
        object.__setattr__(self, "x", float(v[1]))
        object.__setattr__(self, "y", float(v[2]))
        object.__setattr__(self, "z", float(v[3]))

    @staticmethod
    def identity() -> "UnitQuaternion":
        return UnitQuaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_components(v) -> "UnitQuaternion":
        v = np.asarray(v, dtype=np.float64)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValueError("zero quaternion")
        v = v / n
        return UnitQuaternion(float(v[0]), float(v[1]), float(v[2]), float(v[3]))

    @property
    def components(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion.from_components([self.w, -self.x, -self.y, -self.z])

    def multiply(self, other: "UnitQuaternion") -> "UnitQuaternion":
        prod = quat_mult_rows(self.components[None, :], other.components[None, :])[0]
        return UnitQuaternion.from_components(prod)


@dataclass(frozen=True)
class PhaseDecomposition:
    """U = phase * special with det(special) = 1 and |phase| = 1."""

    special: Unitary2
    phase: complex


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def project_to_su2(u: Unitary2) -> PhaseDecomposition:
    """Split a unitary into a global phase and an SU(2) part.

    The phase is the principal square root of det(U), so phase^2 = det(U)
    and the special part has determinant exactly 1 (to rounding).
    """
    m = u.matrix
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    phase = np.sqrt(det)
    phase = phase / abs(phase)
    return PhaseDecomposition(Unitary2(m / phase), complex(phase))


def unitary_to_quaternion(u: Unitary2) -> UnitQuaternion:
    """Map a unitary to the canonical unit quaternion of its SU(2) class."""
    s = project_to_su2(u).special.matrix
    a, b = s[0, 0], s[1, 0]
    return UnitQuaternion.from_components([a.real, -b.imag, b.real, -a.imag])


def quaternion_to_unitary(q: UnitQuaternion) -> Unitary2:
    """Inverse of unitary_to_quaternion, up to the projective sign."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return Unitary2(np.array([[w - 1j * z, -y - 1j * x],
                              [y - 1j * x, w + 1j * z]]))


def quaternion_distance(q1: UnitQuaternion, q2: UnitQuaternion) -> float:
    """d(q1, q2) = sqrt(1 - <q1, q2>^2); sign- and phase-invariant, in [0, 1]."""
    dot = q1.w * q2.w + q1.x * q2.x + q1.y * q2.y + q1.z * q2.z
    return math.sqrt(max(0.0, 1.0 - min(dot * dot, 1.0)))


def random_su2(seed) -> Unitary2:
    """Haar-random SU(2) element; deterministic for an integer seed.

    Accepts either an integer seed or a numpy Generator (so callers can draw
    many samples from one stream).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        v = rng.normal(size=4)
        n = np.linalg.norm(v)
        if n > 1e-6:
            break
    return quaternion_to_unitary(UnitQuaternion.from_components(v / n))


# ---------------------------------------------------------------------------
# External interface: JSON form and named gates
# ---------------------------------------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)

_NAMED_GATES = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]]),
    "T": np.array([[1.0, 0.0], [0.0, np.exp(0.25j * np.pi)]]),
}


def named_gate(name: str) -> Unitary2:
    """Look up one of the named gates I, X, Y, Z, H, T."""
    try:
        return Unitary2(_NAMED_GATES[name])
    except KeyError:
        raise KeyError(f"unknown gate name {name!r}; expected one of "
                       f"{sorted(_NAMED_GATES)}") from None


def unitary_to_json(u: Unitary2) -> dict:
    """Serialize as {"matrix": [[[re, im], ...], ...]} row-major."""
    return {"matrix": [[[float(c.real), float(c.imag)] for c in row]
                       for row in u.matrix]}


def unitary_from_json(obj: dict) -> Unitary2:
    """Parse the JSON form produced by unitary_to_json."""
    m = np.array([[complex(c[0], c[1]) for c in row] for row in obj["matrix"]])
    return Unitary2(m)
