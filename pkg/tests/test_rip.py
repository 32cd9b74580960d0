"""Restricted-isometry measurement and the stability-constant formulas."""

import math

import numpy as np
import pytest

from sparserec.ensembles import EnsembleSpec, generate
from sparserec.rip import (
    RipEntry,
    RipReport,
    check_exact_condition,
    check_stable_condition,
    delta_exhaustive,
    delta_sampled,
    measure,
    pairwise_delta2,
    recovery_error_bound,
    stability_constants,
)


def _unit_column_matrix(n, m, seed):
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((n, m))
    return mat / np.linalg.norm(mat, axis=0)


# ---------------------------------------------------------------------------
# delta_S scans
# ---------------------------------------------------------------------------

def test_exhaustive_delta2_matches_pairwise_oracle():
    # The 2x2 Gram of unit columns has eigenvalues 1 +- |inner product|,
    # so the largest off-diagonal Gram entry is an independent delta_2 oracle.
    for seed in range(20):
        mat = _unit_column_matrix(8, 16, seed)
        assert abs(delta_exhaustive(mat, 2) - pairwise_delta2(mat)) <= 1e-10


def test_orthonormal_columns_have_zero_delta():
    q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((16, 8)))
    for s in (1, 2, 3):
        assert delta_exhaustive(q, s) <= 1e-12


def test_delta_is_monotone_in_subset_size():
    mat = _unit_column_matrix(8, 14, 11)
    deltas = [delta_exhaustive(mat, s) for s in (1, 2, 3, 4)]
    assert all(b >= a - 1e-12 for a, b in zip(deltas, deltas[1:]))


def test_delta1_is_worst_column_norm_deviation():
    rng = np.random.default_rng(5)
    mat = rng.standard_normal((6, 10))
    expected = np.abs(np.linalg.norm(mat, axis=0) ** 2 - 1.0).max()
    assert delta_exhaustive(mat, 1) == pytest.approx(expected, abs=1e-12)


def test_exhaustive_accepts_operator_objects():
    op = generate(EnsembleSpec("gaussian_iid", n=8, m=12, seed=4,
                               normalize_columns=True))
    assert abs(delta_exhaustive(op, 2) - pairwise_delta2(op.materialize())) <= 1e-10


def test_exhaustive_budget_overflow_raises():
    mat = _unit_column_matrix(8, 16, 0)
    with pytest.raises(ValueError, match="delta_sampled"):
        delta_exhaustive(mat, 4, budget=100)


def test_exhaustive_rejects_bad_subset_size():
    mat = _unit_column_matrix(4, 6, 0)
    with pytest.raises(ValueError):
        delta_exhaustive(mat, 0)
    with pytest.raises(ValueError):
        delta_exhaustive(mat, 7)
    with pytest.raises(ValueError):
        delta_exhaustive(np.ones(5), 1)


def test_sampled_is_lower_bound_and_monotone_in_draws():
    mat = _unit_column_matrix(8, 16, 2)
    exact = delta_exhaustive(mat, 3)
    few = delta_sampled(mat, 3, num_subsets=16, seed=9)
    many = delta_sampled(mat, 3, num_subsets=256, seed=9)
    assert few <= many + 1e-15
    assert many <= exact + 1e-12


def test_sampled_covers_all_subsets_eventually():
    # C(8, 2) = 28 subsets; thousands of draws will visit every one.
    mat = _unit_column_matrix(6, 8, 7)
    exact = delta_exhaustive(mat, 2)
    assert delta_sampled(mat, 2, num_subsets=4000, seed=1) == pytest.approx(exact, abs=1e-12)


def test_sampled_is_seed_deterministic():
    mat = _unit_column_matrix(8, 16, 6)
    a = delta_sampled(mat, 3, num_subsets=64, seed=123)
    b = delta_sampled(mat, 3, num_subsets=64, seed=123)
    assert a == b
    with pytest.raises(ValueError):
        delta_sampled(mat, 3, num_subsets=0, seed=1)


def test_pairwise_oracle_requires_unit_columns():
    with pytest.raises(ValueError, match="unit-norm"):
        pairwise_delta2(2.0 * _unit_column_matrix(6, 8, 0))


# ---------------------------------------------------------------------------
# Reports and recovery conditions
# ---------------------------------------------------------------------------

def test_measure_report_and_csv_round_trip():
    mat = _unit_column_matrix(8, 12, 8)
    rep = measure(mat, [1, 2, 3])
    assert rep.n == 8 and rep.m == 12
    assert sorted(rep.entries) == [1, 2, 3]
    for s in (1, 2, 3):
        assert rep.entries[s].method == "exhaustive"
        assert rep.entries[s].subsets_examined == math.comb(12, s)
        assert rep.delta(s) == pytest.approx(delta_exhaustive(mat, s), abs=1e-12)
    back = RipReport.from_csv(rep.to_csv(), n=rep.n, m=rep.m)
    assert back.entries == rep.entries


def test_measure_falls_back_to_sampling_under_budget():
    mat = _unit_column_matrix(8, 16, 9)
    rep = measure(mat, [1, 3], budget=20, num_subsets=50, seed=4)
    assert rep.entries[1].method == "exhaustive"
    assert rep.entries[3].method == "sampled"
    assert rep.entries[3].subsets_examined == 50
    skipped = measure(mat, [3], budget=20, num_subsets=0)
    assert 3 not in skipped.entries


def test_report_csv_rejects_bad_header():
    with pytest.raises(ValueError, match="header"):
        RipReport.from_csv("delta,S\n1,0.5\n")


def test_report_missing_size_raises():
    rep = RipReport(n=4, m=8, entries={1: RipEntry(0.1, "exhaustive", 8)})
    with pytest.raises(ValueError, match="S=2"):
        rep.delta(2)


def test_recovery_condition_checks():
    rep = RipReport(n=0, m=0, entries={
        1: RipEntry(0.10, "exhaustive", 1),
        2: RipEntry(0.25, "exhaustive", 1),
        3: RipEntry(0.40, "exhaustive", 1),
        4: RipEntry(0.50, "exhaustive", 1),
    })
    assert check_exact_condition(rep, 1)          # 0.10 + 0.25 + 0.40 < 1
    assert check_stable_condition(rep, 1)         # 0.40 + 3 * 0.50 < 2
    tight = RipReport(n=0, m=0, entries={
        1: RipEntry(0.30, "exhaustive", 1),
        2: RipEntry(0.35, "exhaustive", 1),
        3: RipEntry(0.40, "exhaustive", 1),
        4: RipEntry(0.60, "exhaustive", 1),
    })
    assert not check_exact_condition(tight, 1)    # 1.05 >= 1
    assert not check_stable_condition(tight, 1)   # 0.40 + 1.80 >= 2


# ---------------------------------------------------------------------------
# Stability constants
# ---------------------------------------------------------------------------

def test_stability_constants_reference_point():
    # rho = 1/3 with both deltas at 0.2: frozen values cross-checked by an
    # independent high-precision evaluation of the closed forms.
    sc = stability_constants(1, 3, 0.2, 0.2)
    assert sc.valid
    assert sc.rho == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert sc.c_s == pytest.approx(8.8154615116443299, rel=1e-12)
    assert sc.c1_s == pytest.approx(12.042144370990124, rel=1e-12)
    assert sc.c2_s == pytest.approx(8.7708213633601452, rel=1e-12)


def test_stability_constants_quarter_delta_point():
    sc = stability_constants(1, 3, 0.25, 0.25)
    assert sc.c_s == pytest.approx(10.472135954999579, rel=1e-12)


def test_stability_constants_shrink_with_delta():
    loose = stability_constants(1, 3, 0.3, 0.3)
    tight = stability_constants(1, 3, 0.1, 0.1)
    assert tight.valid and loose.valid
    assert tight.c_s < loose.c_s
    assert tight.c1_s < loose.c1_s


def test_stability_constants_scale_free_in_t0():
    # Only rho and the deltas enter the formulas.
    a = stability_constants(2, 6, 0.2, 0.2)
    b = stability_constants(10, 30, 0.2, 0.2)
    assert a.c_s == pytest.approx(b.c_s, rel=1e-14)
    assert a.c2_s == pytest.approx(b.c2_s, rel=1e-14)


def test_stability_constants_invalid_region():
    sc = stability_constants(3, 3, 0.2, 0.2)   # rho = 1 pushes c below zero
    assert not sc.valid
    assert math.isinf(sc.c_s) and math.isinf(sc.c1_s) and math.isinf(sc.c2_s)
    with pytest.raises(ValueError, match="vacuous"):
        recovery_error_bound(sc, 0.1, np.ones(3))


def test_stability_constants_validation():
    with pytest.raises(ValueError):
        stability_constants(0, 3, 0.2, 0.2)
    with pytest.raises(ValueError):
        stability_constants(1, 3, -0.1, 0.2)
    with pytest.raises(ValueError):
        stability_constants(1, 3, 0.2, 1.0)


def test_recovery_error_bound_composition():
    sc = stability_constants(2, 6, 0.2, 0.2)
    x_sparse = np.array([3.0, -1.0, 0.0, 0.0, 0.0])
    assert recovery_error_bound(sc, 0.5, x_sparse) == pytest.approx(sc.c1_s * 0.5, rel=1e-14)
    x_tail = np.array([3.0, -1.0, 0.5, -0.25, 0.0])
    expected = sc.c1_s * 0.5 + sc.c2_s * 0.75 / np.sqrt(2.0)
    assert recovery_error_bound(sc, 0.5, x_tail) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        recovery_error_bound(sc, -1.0, x_tail)
