"""Two-qubit compilation: KAK decomposition plus braid-compiled slots.

An arbitrary 4x4 unitary is decomposed, up to global phase, into the fixed
topology of seven single-qubit slots and three CNOTs:

    wire 0: --C--(x)--RZ(d)--(c)-----------(x)--B--
    wire 1: --D--(c)--RY(b)--(x)--RY(a)----(c)--A--

where (c)/(x) mark control/target. Basis convention is big endian: index
2*b0 + b1, wire 0 is the most significant bit, and CNOT with control 0 is
diag-block(I, X). The interaction angles come from the eigenvalue phases of
gamma(U) = (E+ U E)(E+ U E)^T in the magic basis E; the outer tensor factors
come from simultaneous real-orthogonal diagonalization of gamma on the
target and circuit sides.

Each CNOT can then be replaced by an Rz(-pi/2) on the control, merged into
the preceding slot on that wire, times a controlled-iX whose realization is
an external braid fixture (or the ideal matrix, flagged). Finally the seven
slots are compiled to braid words and the result is scored by the
phase-aligned spectral norm.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonUnitaryInput
from .gateset import BraidWord, GateSet, word_to_unitary
from .search import CompileReport, SearchConfig, search
from .su2 import Unitary2

UNITARITY_TOL_4 = 1e-10

# magic basis: E (SO(4)) E+ lands in SU(2) x SU(2)
MAGIC_E = np.array([[1, 1j, 0, 0],
                    [0, 0, 1j, 1],
                    [0, 0, 1j, -1],
                    [1, -1j, 0, 0]], dtype=complex) / np.sqrt(2.0)
CNOT01 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                  dtype=complex)
CNOT10 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]],
                  dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
                dtype=complex)
IDEAL_CIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1j],
                      [0, 0, 1j, 0]], dtype=complex)

# (wire of each slot in time order); CNOTs sit after slots 1, 3, 4
SLOT_WIRES = (0, 1, 0, 1, 1, 0, 1)
CNOT_PLACEMENTS = ((1, 0), (0, 1), (1, 0))


@dataclass(frozen=True)
class Unitary4:
    """A validated 4x4 unitary; the matrix is read-only after construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise NonUnitaryInput(f"expected a 4x4 matrix, got {m.shape}")
        err = np.linalg.norm(m.conj().T @ m - np.eye(4))
        if err > UNITARITY_TOL_4:
            raise NonUnitaryInput(
                f"unitarity violated: ||U+U - I||_F = {err:.3e}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def dagger(self) -> "Unitary4":
        return Unitary4(self.matrix.conj().T)


def random_su4(seed) -> Unitary4:
    """Haar-style random 4x4 unitary; deterministic for an integer seed.

    Accepts either an integer seed or a numpy Generator.
    """
    rng = (seed if isinstance(seed, np.random.Generator)
           else np.random.default_rng(seed))
    z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, r = np.linalg.qr(z)
    return Unitary4(q * (np.diagonal(r) / np.abs(np.diagonal(r))))


def _rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _kron_on_wires(m0: np.ndarray, m1: np.ndarray) -> np.ndarray:
    return np.kron(m0, m1)


def spectral_distance_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    """min over phase of ||a - e^{i phi} b||_2 for unitaries a, b.

    a+ b is unitary, so the minimum is set by the smallest arc enclosing its
    eigenvalue phases: 2 sin(width / 4).
    """
    lam = np.linalg.eigvals(a.conj().T @ b)
    ang = np.sort(np.angle(lam))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * np.pi]]))
    width = 2.0 * np.pi - gaps.max()
    return float(2.0 * np.sin(min(width / 4.0, np.pi / 2.0)))


@dataclass(frozen=True)
class TwoQubitCircuit:
    """Seven single-qubit slots plus three CNOTs in the fixed topology."""

    slots: tuple                      # 7 Unitary2, wires given by SLOT_WIRES
    cnots: tuple = CNOT_PLACEMENTS    # (control, target) per CNOT
    global_phase: complex = 1.0 + 0.0j

    @property
    def slot_wires(self) -> tuple:
        return SLOT_WIRES

    def recompose(self) -> Unitary4:
        return Unitary4(self.global_phase * _assemble(
            [s.matrix for s in self.slots],
            [CNOT01 if c == (0, 1) else CNOT10 for c in self.cnots]))


def _assemble(slot_mats, coupler_mats) -> np.ndarray:
    """Multiply the fixed topology out, first-in-time factor rightmost."""
    stages = [
        _kron_on_wires(slot_mats[0], slot_mats[1]),
        coupler_mats[0],
        _kron_on_wires(slot_mats[2], slot_mats[3]),
        coupler_mats[1],
        _kron_on_wires(np.eye(2), slot_mats[4]),
        coupler_mats[2],
        _kron_on_wires(slot_mats[5], slot_mats[6]),
    ]
    out = np.eye(4, dtype=complex)
    for stage in stages:
        out = stage @ out
    return out


def _to_su4(m: np.ndarray):
    """(V, phase) with V in SU(4) and m = phase * V."""
    det = np.linalg.det(m)
    phase = np.exp(1j * np.angle(det) / 4.0)
    return m / phase, phase


def _simdiag_symmetric_unitary(k: np.ndarray):
    """Real-orthogonal eigenbasis of a symmetric unitary K.

    Re K and Im K commute, so eigh on Re K refined by Im K inside degenerate
    blocks diagonalizes both. Returns (P, lam) with columns ordered by
    eigenvalue phase ascending and a deterministic sign rule per column.
    """
    k = (k + k.T) / 2.0
    kr, ki = k.real, k.imag
    w, p = np.linalg.eigh(kr)
    start = 0
    while start < 4:
        stop = start + 1
        while stop < 4 and abs(w[stop] - w[start]) < 1e-7:
            stop += 1
        if stop - start > 1:
            block = p[:, start:stop].T @ ki @ p[:, start:stop]
            _, rot = np.linalg.eigh((block + block.T) / 2.0)
            p[:, start:stop] = p[:, start:stop] @ rot
        start = stop
    lam = np.einsum("ij,jk,ki->i", p.T, k, p)
    order = np.argsort(np.angle(lam), kind="stable")
    p, lam = p[:, order], lam[order]
    for col in range(4):
        lead = np.flatnonzero(np.abs(p[:, col]) > 1e-9)[0]
        if p[lead, col] < 0:
            p[:, col] = -p[:, col]
    return p, lam


def _match_columns(p: np.ndarray, lam: np.ndarray, lam_ref: np.ndarray):
    """Reorder (p, lam) so lam tracks lam_ref entrywise (nearest unused)."""
    order = []
    used = set()
    for target in lam_ref:
        best, best_d = -1, np.inf
        for j in range(4):
            if j in used:
                continue
            d = abs(lam[j] - target)
            if d < best_d:
                best, best_d = j, d
        order.append(best)
        used.add(best)
    order = np.array(order)
    return p[:, order], lam[order]


def _fix_det(p: np.ndarray) -> np.ndarray:
    if np.linalg.det(p) < 0:
        p = p.copy()
        p[:, -1] = -p[:, -1]
    return p


def _tensor_factors(m: np.ndarray):
    """Split M = A (x) B into 2x2 factors via the rank-1 reshuffle."""
    r = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    uu, ss, vv = np.linalg.svd(r)
    a = (uu[:, 0] * np.sqrt(ss[0])).reshape(2, 2)
    b = (vv[0, :] * np.sqrt(ss[0])).reshape(2, 2)
    return a, b


def kak_decompose(u: Unitary4) -> TwoQubitCircuit:
    """Fixed-topology KAK decomposition; deterministic, never fails.

    Degenerate interaction spectra are handled by the ordering rules in
    _simdiag_symmetric_unitary and _match_columns; any orthonormal basis of
    a degenerate eigenspace yields a valid decomposition.
    """
    if not isinstance(u, Unitary4):
        u = Unitary4(u)
    u_su4, phase0 = _to_su4(u.matrix)
    swap_u = np.exp(1j * np.pi / 4.0) * (SWAP @ u_su4)

    edag = MAGIC_E.conj().T
    mu = edag @ swap_u @ MAGIC_E
    p, lam_u = _simdiag_symmetric_unitary(mu @ mu.T)

    x, y, z = np.angle(lam_u[:3])
    alpha, beta, delta = (x + y) / 2.0, (x + z) / 2.0, (z + y) / 2.0

    v_mat = (SWAP @ CNOT10 @ _kron_on_wires(np.eye(2), _ry(alpha))
             @ CNOT01 @ _kron_on_wires(_rz(delta), _ry(beta)) @ CNOT10)
    mv = edag @ v_mat @ MAGIC_E
    q, lam_v = _simdiag_symmetric_unitary(mv @ mv.T)
    q, lam_v = _match_columns(q, lam_v, lam_u)
    p, q = _fix_det(p), _fix_det(q)

    g = p @ q.T
    h = (mv.conj().T @ q @ p.T @ mu).real

    ab = MAGIC_E @ g @ edag
    cd = MAGIC_E @ h @ edag
    a, b = _tensor_factors(ab)
    c, d = _tensor_factors(cd)

    # swap_U = AB . (SWAP V_int) . CD, so U picks up SWAP AB SWAP = B (x) A
    slots = (Unitary2(c), Unitary2(d), Unitary2(_rz(delta)),
             Unitary2(_ry(beta)), Unitary2(_ry(alpha)), Unitary2(b),
             Unitary2(a))
    gp = phase0 * np.exp(-1j * np.pi / 4.0)
    raw = _assemble([s.matrix for s in slots],
                    [CNOT10, CNOT01, CNOT10])
    # mop residual numeric phase so recompose() reproduces U exactly
    corr = np.trace(raw.conj().T @ (u.matrix / gp)) / 4.0
    gp = gp * corr / abs(corr)
    return TwoQubitCircuit(slots=slots, cnots=CNOT_PLACEMENTS, global_phase=gp)


# ---- controlled-iX fixture


@dataclass(frozen=True)
class CixFixture:
    """Externally supplied controlled-iX realization plus its metadata.

    The braid word uses an opaque six-anyon token alphabet; this module only
    accounts for its declared length and error, it never interprets tokens.
    """

    word: tuple
    matrix: Unitary4
    length: int
    error: float
    leakage: float
    charge: str
    synthetic: bool = False

    def __post_init__(self):
        if self.charge not in ("I", "tau"):
            raise ValueError(f"unknown total charge label {self.charge!r}")
        gap = spectral_distance_up_to_phase(self.matrix.matrix, IDEAL_CIX)
        if gap > self.error + 1e-9:
            raise ValueError(
                f"fixture matrix is {gap:.3e} from the ideal controlled-iX, "
                f"beyond its declared error {self.error:.3e}")

    def to_json(self) -> dict:
        m = self.matrix.matrix
        return {"word": list(self.word),
                "matrix": [[[float(m[i, j].real), float(m[i, j].imag)]
                            for j in range(4)] for i in range(4)],
                "length": self.length, "error": self.error,
                "leakage": self.leakage, "charge": self.charge,
                "synthetic": self.synthetic}

    @staticmethod
    def from_json(doc: dict) -> "CixFixture":
        m = np.array([[complex(re, im) for re, im in row]
                      for row in doc["matrix"]])
        return CixFixture(word=tuple(doc["word"]), matrix=Unitary4(m),
                          length=int(doc["length"]), error=float(doc["error"]),
                          leakage=float(doc["leakage"]),
                          charge=doc["charge"],
                          synthetic=bool(doc.get("synthetic", False)))

    @staticmethod
    def load(path: str) -> "CixFixture":
        with open(path) as f:
            return CixFixture.from_json(json.load(f))

    def save(self, path: str):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=1)


def default_fixture() -> CixFixture:
    """Stand-in fixture: the ideal matrix with the published length metadata.

    The braid word is empty because no six-anyon synthesis happens here; the
    length 140 is carried only so total-length accounting matches reports
    built on the published realization. Clearly marked synthetic.
    """
    return CixFixture(word=(), matrix=Unitary4(IDEAL_CIX), length=140,
                      error=0.0, leakage=0.0, charge="I", synthetic=True)


@dataclass(frozen=True)
class HybridCircuit:
    """The circuit after CNOT -> Rz(-pi/2) + controlled-iX substitution."""

    slots: tuple
    cix_placements: tuple
    fixture: Optional[CixFixture]
    ideal_cnot_mode: bool
    global_phase: complex

    def cix_matrix(self) -> np.ndarray:
        return (self.fixture.matrix.matrix if self.fixture is not None
                else IDEAL_CIX)

    def recompose_with(self, slot_mats) -> np.ndarray:
        """Assemble using the given 7 slot matrices (time order)."""
        cix = self.cix_matrix()
        couplers = [cix if c == (0, 1) else SWAP @ cix @ SWAP
                    for c in self.cix_placements]
        return self.global_phase * _assemble(list(slot_mats), couplers)

    def recompose(self) -> Unitary4:
        return Unitary4(self.recompose_with([s.matrix for s in self.slots]))


def substitute_cnots(circuit: TwoQubitCircuit,
                     fixture: Optional[CixFixture] = None) -> HybridCircuit:
    """Replace each CNOT by Rz(-pi/2)-on-control plus a controlled-iX.

    CNOT = e^{-i pi/4} (Rz(-pi/2) on control) (controlled-iX); the rotation
    merges into the slot immediately preceding the CNOT on its control wire
    (slots 1, 2, 4 in the fixed topology), and the three phase factors fold
    into the global phase.
    """
    rz = _rz(-np.pi / 2.0)
    slots = list(circuit.slots)
    for slot_idx in (1, 2, 4):
        slots[slot_idx] = Unitary2(rz @ slots[slot_idx].matrix)
    gp = circuit.global_phase * np.exp(-3j * np.pi / 4.0)
    return HybridCircuit(slots=tuple(slots), cix_placements=circuit.cnots,
                         fixture=fixture, ideal_cnot_mode=fixture is None,
                         global_phase=gp)


# ---- end-to-end compilation


@dataclass
class TwoQubitReport:
    """Outcome of compiling one 4x4 unitary to braids plus fixtures."""

    slot_reports: tuple
    error: float
    total_length: int
    fixture_length: int
    ideal_cnot_mode: bool
    wall_time: float

    def to_json(self) -> dict:
        return {"slots": [r.to_json() for r in self.slot_reports],
                "error": self.error, "total_length": self.total_length,
                "fixture_length": self.fixture_length,
                "ideal_cnot_mode": self.ideal_cnot_mode,
                "wall_time_s": self.wall_time}


def compile_two_qubit(u: Unitary4, net, gates: GateSet, cfg: SearchConfig,
                      fixture: Optional[CixFixture] = None) -> TwoQubitReport:
    """KAK-decompose, substitute CNOTs, braid-compile all seven slots.

    The reported error is the phase-aligned spectral norm between the input
    and the recomposition built from the realized braid words plus the
    fixture matrix; total length is the slot word lengths plus three times
    the fixture's declared length.
    """
    t0 = time.perf_counter()
    if not isinstance(u, Unitary4):
        u = Unitary4(u)
    hybrid = substitute_cnots(kak_decompose(u), fixture)
    reports = []
    realized = []
    for slot in hybrid.slots:
        rep = search(slot, net, gates, cfg)
        reports.append(rep)
        realized.append(word_to_unitary(rep.word, gates).matrix)
    approx = hybrid.recompose_with(realized)
    err = spectral_distance_up_to_phase(u.matrix, approx)
    fixture_length = fixture.length if fixture is not None else 0
    total = sum(r.length for r in reports) + 3 * fixture_length
    return TwoQubitReport(slot_reports=tuple(reports), error=err,
                          total_length=total, fixture_length=fixture_length,
                          ideal_cnot_mode=hybrid.ideal_cnot_mode,
                          wall_time=time.perf_counter() - t0)
