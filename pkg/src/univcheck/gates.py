"""Gate sets: validation, the builtin library, JSON ingestion and projective classes."""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import math
import re

import numpy as np
import scipy.linalg

from .numerics import as_matrix

UNITARITY_TOL = 1e-10
PHASE_TOL = 1e-8


class GateSetError(ValueError):
    pass


def unitarity_defect(u: np.ndarray) -> float:
    """Max-entry deviation of ``u^H u`` from the identity."""
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def projectively_equal(u, v, phase_tol: float = PHASE_TOL) -> bool:
    """True iff ``u = e^{i phi} v`` up to ``phase_tol`` on ``|tr(u^H v)|``."""
    u, v = np.asarray(u), np.asarray(v)
    d = u.shape[0]
    return abs(np.vdot(u, v)) >= d - phase_tol


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Rescale so the first largest-magnitude entry is real and positive."""
    flat = u.ravel()
    mags = np.abs(flat)
    k = int(np.flatnonzero(mags >= mags.max() - 1e-9)[0])
    return u * (abs(flat[k]) / flat[k])


@dataclass(frozen=True)
class ProjectiveClass:
    representative: np.ndarray

    @classmethod
    def of(cls, u) -> "ProjectiveClass":
        return cls(canonical_phase(as_matrix(u)))

    def contains(self, u, phase_tol: float = PHASE_TOL) -> bool:
        return projectively_equal(self.representative, u, phase_tol)


def _phase_angle(expr: str) -> float:
    # accepts 0.785, pi, pi/4, 2*pi/3, -pi/8
    m = re.fullmatch(r"\s*([+-]?)\s*(?:(\d+(?:\.\d*)?)\s*\*\s*)?pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*", expr)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        num = float(m.group(2)) if m.group(2) else 1.0
        den = float(m.group(3)) if m.group(3) else 1.0
        return sign * num * math.pi / den
    try:
        return float(expr)
    except ValueError:
        raise GateSetError(f"cannot parse phase angle {expr!r}") from None


def builtin(name: str, d: int) -> np.ndarray:
    """Standard gate matrix for ``name`` at dimension ``d``.

    Qudit generalisations: ``X`` is the cyclic shift, ``Z`` the clock
    ``diag(w^j)``, ``F`` the Fourier matrix ``w^{jk}/sqrt(d)`` with
    ``w = exp(2 pi i/d)`` and ``PHASE(theta)`` puts ``e^{i theta}`` on the last
    basis state.  ``Y``, ``H``, ``S`` and ``T`` are qubit gates and ``CNOT``
    is the 4x4 two-qubit gate, i.e. a single ``d = 4`` gate.
    """
    key = name.strip().upper()
    if d < 2:
        raise GateSetError(f"dimension must be at least 2, got {d}")
    omega = np.exp(2j * np.pi / d)
    j = np.arange(d)
    if key == "I":
        return np.eye(d, dtype=complex)
    if key == "X":
        return np.roll(np.eye(d, dtype=complex), 1, axis=0)
    if key == "Z":
        return np.diag(omega ** j)
    if key == "F":
        return omega ** np.outer(j, j) / np.sqrt(d)
    m = re.fullmatch(r"PHASE\((.*)\)", key)
    if m:
        theta = _phase_angle(m.group(1).lower())
        u = np.eye(d, dtype=complex)
        u[-1, -1] = np.exp(1j * theta)
        return u
    qubit = {
        "Y": np.array([[0, -1j], [1j, 0]]),
        "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
        "S": np.diag([1, 1j]),
        "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    }
    if key in qubit:
        if d != 2:
            raise GateSetError(f"gate {name} is only defined for d=2")
        return qubit[key].astype(complex)
    if key == "CNOT":
        if d != 4:
            raise GateSetError("CNOT is a 4x4 gate (d=4)")
        u = np.eye(4, dtype=complex)
        u[2:, 2:] = [[0, 1], [1, 0]]
        return u
    raise GateSetError(f"unknown builtin gate {name!r}")


def project_unitary(u: np.ndarray) -> np.ndarray:
    """Nearest unitary (unitary polar factor)."""
    w, _ = scipy.linalg.polar(u)
    return w


@dataclass(frozen=True)
class GateSet:
    """A validated finite gate set ``S`` with the uniform measure on it.

    ``gates`` holds one representative per projective class, in input
    order, with the identity first when it had to be inserted.
    ``multiplicities`` counts how many input gates fell into each class.
    """

    d: int
    labels: tuple[str, ...]
    matrices: tuple[np.ndarray, ...]
    identity_inserted: bool = False
    multiplicities: tuple[int, ...] = field(default=())
    unitarity_tol: float = UNITARITY_TOL
    phase_tol: float = PHASE_TOL

    def __len__(self) -> int:
        return len(self.matrices)

    def __iter__(self):
        return iter(zip(self.labels, self.matrices))

    @classmethod
    def from_gates(cls, gates, d: int | None = None, *,
                   unitarity_tol: float = UNITARITY_TOL,
                   phase_tol: float = PHASE_TOL,
                   project: bool = False) -> "GateSet":
        """Build from ``(label, matrix)`` pairs, or bare matrices."""
        pairs = []
        for k, g in enumerate(gates):
            label, mat = g if isinstance(g, tuple) else (f"g{k}", g)
            try:
                mat = as_matrix(mat)
            except ValueError as exc:
                raise GateSetError(f"gate {label}: {exc}") from None
            pairs.append((label, mat))
        if not pairs:
            raise GateSetError("gate set is empty")
        if d is None:
            d = pairs[0][1].shape[0]
        if d < 2:
            raise GateSetError(f"dimension must be at least 2, got {d}")

        labels, mats, mult = [], [], []
        for label, mat in pairs:
            if mat.shape != (d, d):
                raise GateSetError(f"gate {label} has shape {mat.shape}, expected {(d, d)}")
            if project:
                mat = project_unitary(mat)
            defect = unitarity_defect(mat)
            if defect > unitarity_tol:
                raise GateSetError(f"gate {label} is not unitary (defect {defect:.3e})")
            for k, kept in enumerate(mats):
                if projectively_equal(kept, mat, phase_tol):
                    mult[k] += 1
                    break
            else:
                labels.append(label)
                mats.append(mat)
                mult.append(1)

        eye = np.eye(d, dtype=complex)
        inserted = not any(projectively_equal(eye, m, phase_tol) for m in mats)
        if inserted:
            labels.insert(0, "I")
            mats.insert(0, eye)
            mult.insert(0, 0)
        for m in mats:
            m.setflags(write=False)
        return cls(d, tuple(labels), tuple(mats), inserted, tuple(mult),
                   unitarity_tol, phase_tol)

    def non_identity(self) -> list[np.ndarray]:
        eye = np.eye(self.d)
        return [m for m in self.matrices if not projectively_equal(eye, m, self.phase_tol)]

    def symmetrized(self) -> list[np.ndarray]:
        """``S`` together with the adjoints, one representative per projective class."""
        out = list(self.matrices)
        for m in self.matrices:
            inv = m.conj().T
            if not any(projectively_equal(inv, k, self.phase_tol) for k in out):
                out.append(inv)
        return out

    def summary(self) -> dict:
        return {
            "d": self.d,
            "gates": list(self.labels),
            "identityInserted": self.identity_inserted,
            "multiplicities": dict(zip(self.labels, self.multiplicities)),
        }


def _parse_matrix(rows, d: int, name: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != d:
        raise GateSetError(f"gate {name}: matrix must have {d} rows")
    out = np.empty((d, d), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != d:
            raise GateSetError(f"gate {name}: row {i} must have {d} entries")
        for j, entry in enumerate(row):
            if (not isinstance(entry, list) or len(entry) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                raise GateSetError(f"gate {name}: entry ({i},{j}) must be [re, im]")
            re_, im_ = float(entry[0]), float(entry[1])
            if not (math.isfinite(re_) and math.isfinite(im_)):
                raise GateSetError(f"gate {name}: entry ({i},{j}) is not finite")
            out[i, j] = complex(re_, im_)
    return out


def parse_gate_set(source, *, unitarity_tol: float = UNITARITY_TOL,
                   phase_tol: float = PHASE_TOL, project: bool = False) -> GateSet:
    """Read the JSON gate-set format from bytes, text or a binary/text stream.

    ``{"d": 2, "gates": [{"name": "A", "matrix": [[[re, im], ...], ...]},
    {"name": "H", "builtin": true}]}``
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise GateSetError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or "d" not in doc or "gates" not in doc:
        raise GateSetError('expected an object with "d" and "gates"')
    d = doc["d"]
    if not isinstance(d, int) or isinstance(d, bool):
        raise GateSetError('"d" must be an integer')
    if d < 2:
        raise GateSetError(f"dimension must be at least 2, got {d}")
    if not isinstance(doc["gates"], list) or not doc["gates"]:
        raise GateSetError('"gates" must be a non-empty list')
    pairs = []
    for k, g in enumerate(doc["gates"]):
        if not isinstance(g, dict):
            raise GateSetError(f"gate #{k} must be an object")
        name = str(g.get("name", f"g{k}"))
        if g.get("builtin"):
            pairs.append((name, builtin(name, d)))
        elif "matrix" in g:
            pairs.append((name, _parse_matrix(g["matrix"], d, name)))
        else:
            raise GateSetError(f"gate {name}: needs a matrix or builtin=true")
    return GateSet.from_gates(pairs, d, unitarity_tol=unitarity_tol,
                              phase_tol=phase_tol, project=project)


def dump_gate_set(gates, d: int) -> str:
    """Serialize ``(name, matrix)`` pairs into the JSON gate-set format."""
    return json.dumps({
        "d": d,
        "gates": [
            {"name": name, "matrix": [[[float(z.real), float(z.imag)] for z in row]
                                      for row in np.asarray(m)]}
            for name, m in gates
        ],
    })
