"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import time

import numpy as np
import pytest

from univcheck import haar_ref
from univcheck.cli import INCONCLUSIVE, NOT_UNIVERSAL, UNIVERSAL, main, run_check
from univcheck.closure import close_group, group_commutant_dim
from univcheck.commutant import (Certainty, commutant_basis, commutant_dim_dense,
                                 commutant_dim_matrixfree, commutator_stack,
                                 necessary_condition, partial_transpose)
from univcheck.gates import GateSet, builtin
from univcheck.moments import (delta, delta_of_operator, haar_moment_operator, mixed_lift,
                               moment_operator, word_moment)
from univcheck.numerics import numerical_rank

from conftest import load
from suites import AGREEMENT, QUBIT_SETS, QUTRIT_SETS, haar_set, split_dims

pytestmark = pytest.mark.slow

H, S, T, X, Z = (builtin(n, 2) for n in "HSTXZ")


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_haar_constants(verdict, capsys):
    haar_ref.gram_rank.cache_clear()
    haar_ref.gram_cycles.cache_clear()
    start = time.perf_counter()
    got = {}
    for d, t in [(2, 3), (3, 2), (4, 2), (5, 2), (6, 2), (2, 2)]:
        main(["haar-dim", "--d", str(d), "--t1", str(t), "--t2", str(t)])
        got[(d, t)] = int(capsys.readouterr().out)
    elapsed = time.perf_counter() - start
    expected = {(2, 3): 132, (3, 2): 23, (4, 2): 24, (5, 2): 24, (6, 2): 24, (2, 2): 14}
    verdict(1, got == expected and elapsed < 60,
            f"haar dims {sorted(got.values())}, two-prime agreement, {elapsed:.1f}s (< 60s)")


def test_criterion_02_su2_decomposition(verdict):
    start = time.perf_counter()
    mult = haar_ref.su2_decompose(3)
    total = haar_ref.square_sum(mult)
    elapsed = time.perf_counter() - start
    ok = mult == {6: 1, 4: 5, 2: 9, 0: 5} and total == 132 and elapsed < 1
    verdict(2, ok, f"su2_decompose(3) = {mult}, sum m^2 = {total}, {elapsed * 1e3:.1f}ms")


def test_criterion_03_su3_consistency(verdict):
    start = time.perf_counter()
    total = haar_ref.square_sum(haar_ref.su3_reference())
    rank = haar_ref.gram_rank(4, 3)
    elapsed = time.perf_counter() - start
    verdict(3, total == 23 == rank and elapsed < 1,
            f"su3 sum m^2 = {total}, gram_rank(4,3) = {rank}, {elapsed * 1e3:.1f}ms")


def test_criterion_04_universal_fixture(verdict, ht_report):
    r = ht_report
    seconds = sum(r.timings.values())
    stack_rank = numerical_rank(commutator_stack(GateSet.from_gates([H, T]), 3, 3))
    ok = (r.verdict == UNIVERSAL and r.commutant_dim == 132 and r.target_dim == 132
          and r.gap_ratio >= 1e4 and stack_rank.rank == 4096 - 132 and stack_rank.certified)
    verdict(4, ok, f"{{H,T}}: {r.verdict}, dim {r.commutant_dim}, gap {r.gap_ratio:.2e}, "
                   f"stack SVD rank {stack_rank.rank} (gap {stack_rank.gap_ratio:.2e}), "
                   f"{seconds:.0f}s")


def test_criterion_05_non_universal_finite(verdict, hs_report):
    r = hs_report
    closure = r.closure_diagnostics
    group = r.delta_diagnostics["group"]
    gate_set = r.delta_diagnostics["gateSet"]
    oracle = group_commutant_dim(close_group(GateSet.from_gates([H, S])), 3, 3)
    ok = (r.verdict == NOT_UNIVERSAL and r.commutant_dim == 187 == oracle
          and closure["order"] == 24 and closure["agrees"]
          and group[3]["delta"] <= 1e-8 and group[6]["delta"] >= 1 - 1e-8
          # link between the measure on S and its group: < 1 exactly when the group value is 0
          and gate_set[3]["delta"] < 1 - 1e-6 and gate_set[6]["delta"] >= 1 - 1e-8)
    verdict(5, ok, f"{{H,S}}: {r.verdict}, dim {r.commutant_dim} (character oracle {oracle}, "
                   f"order {closure['order']}); group delta(3) = {group[3]['delta']:.1e}, "
                   f"delta(6) = {group[6]['delta']:.12f}; gate-set delta(3) = "
                   f"{gate_set[3]['delta']:.6f}")


def test_criterion_06_necessary_condition(verdict):
    xz_set = GateSet.from_gates([X, Z])
    xz = necessary_condition(xz_set)
    report = run_check(xz_set)
    t_set = GateSet.from_gates([T])
    t_only = necessary_condition(t_set)
    t_oracle = group_commutant_dim(close_group(t_set), 1, 1)
    ok = (xz.dimension == 4 and not xz.holds and report.verdict == NOT_UNIVERSAL
          and not t_only.holds and t_only.dimension == t_oracle)
    verdict(6, ok, f"{{X,Z}}: dim C(S^(1,1)) = {xz.dimension} != 2, {report.verdict}; "
                   f"{{T}}: dim {t_only.dimension} != 2 (character oracle {t_oracle}; "
                   "a count of 4 misses the repeated eigenvalue 1 of T (x) conj(T))")


def test_criterion_07_qutrit_universal(verdict, qutrit_report):
    r = qutrit_report
    s = load("qutrit_f_phase.json")
    free = commutant_dim_matrixfree(s, 2, 2)
    d4 = r.delta_diagnostics["gateSet"][4]["delta"]
    seconds = sum(r.timings.values())
    ok = (r.verdict == UNIVERSAL and r.commutant_dim == 23 and r.backend == "dense"
          and free.certified and free.dimension == 23 and d4 < 1 and seconds <= 15 * 60)
    verdict(7, ok, f"qutrit F + diag(1,1,e^(i pi/4)): {r.verdict}, dim {r.commutant_dim} "
                   f"(dense, gap {r.gap_ratio:.2e}; matrix-free {free.dimension}), "
                   f"delta(4) = {d4:.6f}, {seconds:.0f}s")


def test_criterion_08_split_invariance(verdict):
    mismatched = []
    count = 0
    for d, sets in ((2, QUBIT_SETS), (3, QUTRIT_SETS)):
        for name in sets:
            count += 1
            for total in (2, 3, 4):
                dims = split_dims(d, name, total)
                if None in dims or len(set(dims)) != 1:
                    mismatched.append((d, name, total, dims))

    rng = np.random.default_rng(0)
    involution = 0.0
    for d, t in ((2, 3), (3, 2), (2, 4)):
        x = rng.standard_normal((d ** t,) * 2) + 1j * rng.standard_normal((d ** t,) * 2)
        for n in range(t + 1):
            back = partial_transpose(partial_transpose(x, t, n, d), t, n, d)
            involution = max(involution, float(np.abs(back - x).max()))

    residual = 0.0
    mapped_ok = True
    for s in (GateSet.from_gates([H, S]), GateSet.from_gates([T]), haar_set(2, 5),
              haar_set(3, 6)):
        t = 2
        basis = commutant_basis(s, t, 0)
        for n in (1, 2):
            lifts = [mixed_lift(g, t - n, n).matrix for g in s.matrices]
            mapped = [partial_transpose(b, t, n, s.d) for b in basis]
            for y in mapped:
                for lift in lifts:
                    residual = max(residual, float(np.abs(lift @ y - y @ lift).max()))
            flat = np.array([y.ravel() for y in mapped])
            mapped_ok &= np.linalg.matrix_rank(flat, tol=1e-9) == len(basis) == \
                commutant_dim_dense(s, t - n, n).dimension
    ok = count >= 20 and not mismatched and involution == 0.0 and residual <= 1e-9 and mapped_ok
    verdict(8, ok, f"{count} gate sets x sums 2,3,4: split dims equal ({len(mismatched)} "
                   f"mismatches); involution error {involution}; mapped-basis commutator "
                   f"residual {residual:.1e}")


def test_criterion_09_moment_suite(verdict):
    worst_idem = worst_herm = worst_abs = worst_conv = 0.0
    traces = []
    for t in (1, 2, 3):
        p = haar_moment_operator(2, t).matrix
        worst_idem = max(worst_idem, float(np.abs(p @ p - p).max()))
        worst_herm = max(worst_herm, float(np.abs(p - p.conj().T).max()))
        traces.append(float(np.trace(p).real))
    deltas = []
    for gates in ([H, T], [H, S], [T], [X, Z]):
        s = GateSet.from_gates(gates)
        for t in (1, 2, 3):
            m = moment_operator(s, t).matrix
            p = haar_moment_operator(2, t).matrix
            worst_abs = max(worst_abs, float(np.abs(m @ p - p).max()),
                            float(np.abs(p @ m - p).max()))
            deltas.append(delta(s, t).value)
        sym = GateSet.from_gates(s.symmetrized())
        for t in (1, 2):
            base = delta(sym, t).value
            for l in (2, 3):
                conv = delta_of_operator(word_moment(sym, t, l).matrix, 2, t).value
                worst_conv = max(worst_conv, abs(conv - base ** l))
    ok = (worst_idem <= 1e-10 and worst_herm <= 1e-10 and np.allclose(traces, [1, 2, 5], atol=1e-10)
          and worst_abs <= 1e-10 and all(0 <= v <= 1 + 1e-9 for v in deltas)
          and worst_conv <= 1e-7)
    verdict(9, ok, f"idempotence {worst_idem:.1e}, hermiticity {worst_herm:.1e}, traces "
                   f"{[round(v, 12) for v in traces]}, absorption {worst_abs:.1e}, delta range "
                   f"[{min(deltas):.3f}, {max(deltas):.3f}], convolution {worst_conv:.1e}")


def test_criterion_10_backend_agreement(verdict):
    disagreements = []
    for d, seed, count, tt in AGREEMENT:
        s = haar_set(d, seed, count)
        dense = commutant_dim_dense(s, *tt)
        free = commutant_dim_matrixfree(s, *tt, seed=seed)
        if not (dense.certified and free.certified and dense.dimension == free.dimension):
            disagreements.append((d, seed, tt, dense.dimension, free.dimension))

    pair = haar_set(4, 7)
    start = time.perf_counter()
    big = commutant_dim_matrixfree(pair, 2, 2)
    elapsed = time.perf_counter() - start

    starved = run_check(pair, backend="matrixfree", iterations=1)
    ok = (not disagreements and big.dimension == 24 and big.certainty is Certainty.CERTIFIED
          and elapsed <= 30 * 60 and starved.verdict == INCONCLUSIVE)
    verdict(10, ok, f"{len(AGREEMENT)} random fixtures agree ({len(disagreements)} "
                    f"disagreements); Haar pair d=4 (2,2): {big.dimension} {big.certainty.value} "
                    f"in {elapsed:.0f}s; 1-sweep budget -> {starved.verdict}")
