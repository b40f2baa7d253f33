"""Command-line front end and the end-to-end universality check."""
from __future__ import annotations

import argparse
from contextlib import contextmanager
from dataclasses import dataclass, field
import json
import logging
import math
import re
import sys
import time

import numpy as np

from . import haar_ref
from .closure import (MAX_ELEMENTS, ConsistencyError, close_group, group_commutant_dim,
                      group_delta_exact)
from .commutant import (BUDGET, GAP_TOL, CommutantQuery, commutant_dim, necessary_condition,
                        select_backend)
from .gates import PHASE_TOL, UNITARITY_TOL, GateSet, GateSetError, parse_gate_set
from .moments import MAX_HAAR_T, delta, haar_moment_operator
from .numerics import CERTIFIED_GAP, DENSE_CAP, NORM_TOL, REL_TOL, NonConvergenceError, SizeCapError

log = logging.getLogger("univcheck")

SCHEMA_VERSION = 1
UNIVERSAL = "UNIVERSAL"
NOT_UNIVERSAL = "NOT_UNIVERSAL"
INCONCLUSIVE = "INCONCLUSIVE"
EXIT_CODES = {UNIVERSAL: 0, NOT_UNIVERSAL: 1, INCONCLUSIVE: 2}
EXIT_INPUT = 3
EXIT_NUMERICS = 4


def design_order(d: int) -> int:
    """Smallest t with no finite unitary t-group in dimension d."""
    return 6 if d == 2 else 4


@dataclass
class UniversalityReport:
    d: int
    t_used: int
    commutant_dim: int
    target_dim: int
    verdict: str
    certainty: str
    gap_ratio: float
    backend: str
    necessary_condition_dim: int
    gate_set: dict = field(default_factory=dict)
    delta_diagnostics: dict | None = None
    closure_diagnostics: dict | None = None
    tolerances: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def to_dict(self) -> dict:
        return _jsonable({
            "schemaVersion": SCHEMA_VERSION,
            "d": self.d,
            "tUsed": self.t_used,
            "commutantDim": self.commutant_dim,
            "targetDim": self.target_dim,
            "verdict": self.verdict,
            "certainty": self.certainty,
            "gapRatio": self.gap_ratio,
            "backend": self.backend,
            "necessaryConditionDim": self.necessary_condition_dim,
            "gateSet": self.gate_set,
            "deltaDiagnostics": self.delta_diagnostics,
            "closureDiagnostics": self.closure_diagnostics,
            "tolerances": self.tolerances,
            "timings": self.timings,
            "notes": self.notes,
        })


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


@contextmanager
def _timed(timings: dict, stage: str):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = time.perf_counter() - t0


def _delta_diagnostics(s: GateSet, ts, closure, tol: float, seed: int) -> dict:
    out = {"gateSet": {}, "group": {}}
    for t in ts:
        if s.d ** (2 * t) > DENSE_CAP or t > MAX_HAAR_T:
            out["gateSet"][t] = {"skipped": "size cap"}
            continue
        out["gateSet"][t] = delta(s, t, tol, seed).as_dict()
        if closure is not None and closure.finite:
            out["group"][t] = group_delta_exact(closure, t, tol, seed).as_dict()
    if closure is None or not closure.finite:
        del out["group"]
    return out


def run_check(s: GateSet, t: int | None = None, *, rank_tol: float = REL_TOL,
              tol: float = NORM_TOL, backend: str = "auto", diagnostics: str = "none",
              budget: int = MAX_ELEMENTS, iterations: int = BUDGET, gap_tol: float = GAP_TOL,
              seed: int = 0) -> UniversalityReport:
    """Decide universality of ``s`` from the commutant dimension at ``(t, t)``.

    Raises ``ConsistencyError`` when an identity that must hold exactly
    fails (commutant smaller than the Haar reference, a finite closure
    reported universal, or disagreement with the character oracle).
    """
    timings = {}
    d = s.d
    t_required, target = haar_ref.target_dimension(d)
    notes = []
    if t is None:
        t = t_required
    elif t != t_required:
        target = haar_ref.haar_commutant_dim(d, t, t)
        notes.append(f"t={t} overrides the criterion order t({d})={t_required}")

    opts = dict(rel_tol=rank_tol, gap_tol=gap_tol, budget=iterations, seed=seed)
    with _timed(timings, "necessaryCondition"):
        nc = necessary_condition(s, backend="auto", **opts)
    chosen = select_backend(d, t, t, backend)
    with _timed(timings, "commutant"):
        res = commutant_dim(CommutantQuery(s, t, t, backend=chosen.value, **opts))

    if res.certified and res.dimension < target:
        raise ConsistencyError(
            f"commutant dimension {res.dimension} below the Haar reference {target}")
    if not res.certified:
        verdict = INCONCLUSIVE
    elif res.dimension == target:
        verdict = UNIVERSAL if t >= t_required else INCONCLUSIVE
        if t < t_required:
            notes.append("dimension match below t(d) does not decide universality")
    else:
        verdict = NOT_UNIVERSAL

    closure = None
    closure_diag = None
    if diagnostics in ("closure", "delta", "all"):
        with _timed(timings, "closure"):
            closure = close_group(s, budget, s.phase_tol, seed=seed)
    if diagnostics in ("closure", "all"):
        closure_diag = closure.summary()
        if closure.finite:
            oracle = group_commutant_dim(closure, t, t)
            closure_diag["characterCommutantDim"] = oracle
            closure_diag["agrees"] = bool(oracle == res.dimension)
            if res.certified and oracle != res.dimension:
                raise ConsistencyError(
                    f"character oracle gives {oracle}, linear algebra {res.dimension}")
    if closure is not None and closure.finite and verdict == UNIVERSAL:
        raise ConsistencyError("a finite closure cannot be universal")

    delta_diag = None
    if diagnostics in ("delta", "all"):
        with _timed(timings, "delta"):
            delta_diag = _delta_diagnostics(s, sorted({t, design_order(d)}), closure, tol, seed)

    return UniversalityReport(
        d=d, t_used=t, commutant_dim=res.dimension, target_dim=target, verdict=verdict,
        certainty=res.certainty.value, gap_ratio=res.gap_ratio, backend=res.backend.value,
        necessary_condition_dim=nc.dimension, gate_set=s.summary(),
        delta_diagnostics=delta_diag, closure_diagnostics=closure_diag,
        tolerances={"unitarityTol": s.unitarity_tol, "phaseTol": s.phase_tol,
                    "rankTol": rank_tol, "normTol": tol, "gapTol": gap_tol,
                    "certifiedGap": CERTIFIED_GAP, "closureBudget": budget,
                    "matrixFreeBudget": iterations},
        timings=timings, notes=notes,
    )


def _load(path: str, args) -> GateSet:
    with open(path, "rb") as fh:
        return parse_gate_set(fh, unitarity_tol=args.unitarity_tol,
                              phase_tol=args.phase_tol, project=args.project_unitary)


def dumps(payload: dict) -> str:
    """JSON text with every float written to 17 significant digits."""
    floats = []

    def mark(obj):
        if isinstance(obj, dict):
            return {k: mark(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [mark(v) for v in obj]
        if isinstance(obj, float):
            floats.append(format(obj, ".17g"))
            return f"\x00{len(floats) - 1}\x00"
        return obj

    text = json.dumps(mark(_jsonable(payload)), indent=2, allow_nan=False)
    return re.sub(r'"\\u0000(\d+)\\u0000"', lambda m: floats[int(m.group(1))], text)


def _emit(payload: dict, as_json: bool, lines) -> None:
    if as_json:
        print(dumps(payload))
    else:
        for line in lines:
            print(line)


def cmd_check(args) -> int:
    s = _load(args.gatefile, args)
    if args.verbose:
        failed = [k for k, ok in haar_ref.selftest().items() if not ok]
        if failed:
            raise ConsistencyError(f"startup self-check failed: {failed}")
    report = run_check(s, args.t, rank_tol=args.rank_tol, tol=args.tol, backend=args.backend,
                       diagnostics=args.diagnostics, budget=args.budget,
                       iterations=args.iterations, seed=args.seed)
    lines = [
        f"d                 {report.d}",
        f"gates             {', '.join(s.labels)}" + ("  (identity inserted)" if s.identity_inserted else ""),
        f"t                 {report.t_used}",
        f"dim C(S^(1,1))    {report.necessary_condition_dim}  (Haar: 2)",
        f"dim C(S^(t,t))    {report.commutant_dim}  (Haar: {report.target_dim})",
        f"backend           {report.backend}  [{report.certainty}, gap {report.gap_ratio:.3e}]",
    ]
    if report.closure_diagnostics:
        lines.append(f"closure           {report.closure_diagnostics}")
    if report.delta_diagnostics:
        for kind, vals in report.delta_diagnostics.items():
            for t, v in vals.items():
                lines.append(f"delta[{kind}](t={t})  {v}")
    lines += [f"note: {n}" for n in report.notes]
    lines.append(f"verdict           {report.verdict}")
    _emit(report.to_dict(), args.json, lines)
    return report.exit_code


def cmd_delta(args) -> int:
    s = _load(args.gatefile, args)
    if s.d ** (2 * args.t) > DENSE_CAP or args.t > MAX_HAAR_T:
        raise SizeCapError(f"d^(2t) = {s.d ** (2 * args.t)} exceeds the cap; "
                           "use `check`, which needs a smaller t")
    est = delta(s, args.t, args.tol, args.seed)
    payload = {"schemaVersion": SCHEMA_VERSION, "d": s.d, "t": args.t, **est.as_dict()}
    lines = [f"delta(t={args.t}, gate set) = {est.value:.12f} +/- {est.error:.1e}"
             + ("  AT_ONE" if est.at_one else "")]
    if not args.no_group:
        closure = close_group(s, args.budget, s.phase_tol, seed=args.seed)
        payload["closure"] = closure.summary()
        if closure.finite:
            g = group_delta_exact(closure, args.t, args.tol, args.seed)
            payload["group"] = g.as_dict()
            lines.append(f"delta(t={args.t}, generated group of order {closure.order}) = "
                         f"{g.value:.12f}" + ("  AT_ONE" if g.at_one else ""))
        else:
            lines.append("generated group: closure budget exceeded")
    _emit(payload, args.json, lines)
    return 0


def cmd_haar_dim(args) -> int:
    dim = haar_ref.haar_commutant_dim(args.d, args.t1, args.t2)
    _emit({"schemaVersion": SCHEMA_VERSION, "d": args.d, "t1": args.t1, "t2": args.t2,
           "dimension": dim}, args.json, [str(dim)])
    return 0


def cmd_closure(args) -> int:
    s = _load(args.gatefile, args)
    report = close_group(s, args.budget, s.phase_tol, seed=args.seed)
    payload = {"schemaVersion": SCHEMA_VERSION, **report.summary()}
    line = report.status + (f" order {report.order}" if report.finite else "")
    _emit(payload, args.json, [line])
    return 0


def selftest_checks() -> dict[str, bool]:
    checks = haar_ref.selftest()
    for t, trace in ((1, 1), (2, 2), (3, 5)):
        p = haar_moment_operator(2, t).matrix
        checks[f"haar projector d=2 t={t} idempotent"] = bool(np.abs(p @ p - p).max() < 1e-10)
        checks[f"haar projector d=2 t={t} hermitian"] = bool(np.abs(p - p.conj().T).max() < 1e-10)
        checks[f"haar projector d=2 t={t} trace {trace}"] = bool(abs(np.trace(p) - trace) < 1e-8)
    return checks


def cmd_selftest(args) -> int:
    checks = selftest_checks()
    _emit({"schemaVersion": SCHEMA_VERSION, "checks": checks}, args.json,
          [f"{'PASS' if ok else 'FAIL'}  {name}" for name, ok in checks.items()])
    return 0 if all(checks.values()) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="univcheck",
                                     description="Decide universality of a qudit gate set.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="JSON report on stdout")
    common.add_argument("--seed", type=int, default=0)

    gatefile = argparse.ArgumentParser(add_help=False)
    gatefile.add_argument("gatefile")
    gatefile.add_argument("--project-unitary", action="store_true",
                          help="replace each gate by its nearest unitary")
    gatefile.add_argument("--unitarity-tol", type=float, default=UNITARITY_TOL)
    gatefile.add_argument("--phase-tol", type=float, default=PHASE_TOL)
    gatefile.add_argument("--budget", type=int, default=MAX_ELEMENTS,
                          help="closure budget (projective classes)")
    gatefile.add_argument("--tol", type=float, default=NORM_TOL, help="spectral-norm tolerance")

    p = sub.add_parser("check", parents=[common, gatefile], help="universality verdict")
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--rank-tol", type=float, default=REL_TOL)
    p.add_argument("--backend", choices=["auto", "dense", "matrixfree"], default="auto")
    p.add_argument("--diagnostics", choices=["none", "delta", "closure", "all"], default="none")
    p.add_argument("--iterations", type=int, default=BUDGET, help="matrix-free sweep budget")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("delta", parents=[common, gatefile], help="t-design distance")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--no-group", action="store_true", help="skip the generated-group value")
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("haar-dim", parents=[common], help="Haar commutant dimension")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t1", type=int, required=True)
    p.add_argument("--t2", type=int, required=True)
    p.set_defaults(func=cmd_haar_dim)

    p = sub.add_parser("closure", parents=[common, gatefile], help="projective group closure")
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("selftest", parents=[common], help="startup identities")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which would read as INCONCLUSIVE
        return EXIT_INPUT if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GateSetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NonConvergenceError, ConsistencyError, SizeCapError,
            haar_ref.PrimeDisagreement, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
