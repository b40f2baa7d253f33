"""Budgeted projective closure of a gate set and exact finite-group oracles."""
from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from .gates import PHASE_TOL, GateSet, ProjectiveClass, canonical_phase
from .moments import DeltaEstimate, delta_of_unitaries
from .numerics import NORM_TOL

log = logging.getLogger(__name__)

MAX_ELEMENTS = 20_000
FINITE = "FINITE"
BUDGET_EXCEEDED = "BUDGET_EXCEEDED"
_GRID = 1e-6


class ConsistencyError(RuntimeError):
    """An exact finite-group identity failed numerically."""


class _ClassTable:
    """Projective classes bucketed by phase-invariant features.

    The features are ``|tr U|`` and a fixed weighted sum of ``|U_ij|``; a
    candidate is compared against the neighbouring buckets only, with the
    exact test ``|tr(U^H V)| >= d - phase_tol``.
    """

    def __init__(self, d: int, phase_tol: float):
        self.d = d
        self.phase_tol = phase_tol
        self.weights = np.random.default_rng(12345).uniform(0.5, 1.5, d * d)
        self.buckets: dict[tuple[int, int], list[int]] = {}
        self.reps: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.reps)

    def _key(self, u: np.ndarray) -> tuple[int, int]:
        return (int(np.rint(abs(np.trace(u)) / _GRID)),
                int(np.rint(self.weights @ np.abs(u).ravel() / _GRID)))

    def find(self, u: np.ndarray) -> int | None:
        a, b = self._key(u)
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                for k in self.buckets.get((a + da, b + db), ()):
                    if abs(np.vdot(self.reps[k], u)) >= self.d - self.phase_tol:
                        return k
        return None

    def add(self, u: np.ndarray) -> bool:
        if self.find(u) is not None:
            return False
        self.buckets.setdefault(self._key(u), []).append(len(self.reps))
        self.reps.append(canonical_phase(u))
        return True


@dataclass
class ClosureReport:
    status: str
    d: int
    order: int | None
    product_depth: int
    elements: list[ProjectiveClass] = field(default_factory=list, repr=False)
    explored: int = 0

    @property
    def finite(self) -> bool:
        return self.status == FINITE

    def matrices(self) -> list[np.ndarray]:
        return [e.representative for e in self.elements]

    def summary(self) -> dict:
        return {"status": self.status, "order": self.order,
                "productDepth": self.product_depth, "explored": self.explored}


def close_group(s: GateSet, max_elements: int = MAX_ELEMENTS,
                phase_tol: float = PHASE_TOL, verify: int = 100,
                seed: int = 0) -> ClosureReport:
    """Breadth-first closure of ``s`` under products, up to global phase.

    Words are extended on the right by generators only.  The closure is
    reported FINITE once a whole level adds no new class; otherwise the
    search stops with BUDGET_EXCEEDED after ``max_elements`` classes.
    """
    if max_elements < len(s):
        raise ValueError("max_elements must be at least |S|")
    gens = list(s.matrices)
    table = _ClassTable(s.d, phase_tol)
    table.add(np.eye(s.d, dtype=complex))
    frontier = [0]
    depth = 0
    while frontier:
        fresh = []
        for k in frontier:
            g = table.reps[k]
            for h in gens:
                if table.add(g @ h):
                    fresh.append(len(table) - 1)
                    if len(table) > max_elements:
                        log.info("closure budget of %d classes exhausted at depth %d",
                                 max_elements, depth + 1)
                        return ClosureReport(BUDGET_EXCEEDED, s.d, None, depth + 1,
                                             explored=len(table))
        if fresh:
            depth += 1
        frontier = fresh

    rng = np.random.default_rng(seed)
    n = len(table)
    for a, b in rng.integers(0, n, size=(verify, 2)):
        if table.find(table.reps[a] @ table.reps[b]) is None:
            raise ConsistencyError("closure is not closed under products; "
                                   "projective deduplication degraded")
    elements = [ProjectiveClass(r) for r in table.reps]
    return ClosureReport(FINITE, s.d, n, depth, elements, explored=n)


def _require_finite(report: ClosureReport) -> None:
    if not report.finite:
        raise ValueError("closure is not FINITE")


def group_delta_exact(report: ClosureReport, t: int, tol: float = NORM_TOL,
                      seed: int = 0) -> DeltaEstimate:
    """``delta(t, nu_G)`` from the exact average over all group elements.

    For a finite group the value is 0 or 1; anything else by more than 1e-6
    raises ``ConsistencyError``.
    """
    _require_finite(report)
    est = delta_of_unitaries(report.matrices(), report.d, t, tol, seed)
    if min(est.value, abs(1.0 - est.value)) > 1e-6:
        raise ConsistencyError(f"group delta {est.value!r} is neither 0 nor 1")
    return est


def group_commutant_dim(report: ClosureReport, t1: int, t2: int) -> int:
    """Character formula ``(1/|G|) sum_g |tr g|^{2(t1+t2)}``."""
    _require_finite(report)
    k = 2 * (t1 + t2)
    traces = np.array([abs(np.trace(m)) for m in report.matrices()])
    value = float(np.mean(traces ** k))
    dim = int(round(value))
    if abs(value - dim) > 1e-6:
        raise ConsistencyError(f"character average {value!r} is not an integer")
    return dim
