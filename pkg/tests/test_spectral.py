"""Truncation, eigensolver, classification and bisection tests.

The small frozen matrices and eigenvalues were worked out by hand from the
block action on the level tower.
"""

import dataclasses
import random
from fractions import Fraction

import numpy as np
import pytest

from ptdirac.params import (
    Branch,
    DegenerateCoefficientsError,
    PhaseVerdict,
    PhysParams,
    Valley,
    Vary,
    critical_point,
    derive_coeffs,
    level_energy,
)
from ptdirac.spectral import (
    EigensolveError,
    NoTransitionBracketedError,
    build_truncated,
    classify_spectrum,
    dump_matrix,
    eigensolve,
    find_exceptional_point,
    parse_matrix,
    phase_verdict_numeric,
    scramble,
)

BASE = PhysParams(v_f=1.37, lam=0.5, k1=0.02, b0=100.0)
BROKEN = dataclasses.replace(BASE, lam=1.8)
CO = derive_coeffs(BASE)
CO_BROKEN = derive_coeffs(BROKEN)

SQRT_K = 1.4916047          # sqrt(2.2248845)
U_ENTRY = -1.74j            # -i * a * hbar, a = 2*(1.37 - 0.5)
L_ENTRY = 1.2786693j        # i * k / (a * hbar) = i * 2.2248845 / 1.74
UII_ENTRY = -0.5948889j     # -i * k / (b * hbar) = -i * 2.2248845 / 3.74
FROZEN = 1e-6


def reference_matrix(co, n_tr, branch, valley):
    """Entry tables restated from the hand derivation, kept separate from
    the builder under test."""
    a = complex(co.a_coef)
    b = complex(co.b_coef)
    k = complex(co.k_coef)
    hb = complex(co.hbar)
    holo = (branch is Branch.I) == (valley is Valley.PRIMARY)
    lead = a if branch is Branch.I else b
    coup = 1j * k / (lead * hb) if branch is Branch.I else -1j * k / (lead * hb)
    m = np.zeros((2 * n_tr, 2 * n_tr), dtype=complex)
    for l in range(n_tr):
        if holo:
            if l >= 1:
                m[2 * (l - 1), 2 * l + 1] = -1j * lead * hb * l
            if l + 1 < n_tr:
                m[2 * (l + 1) + 1, 2 * l] = coup
        else:
            if l + 1 < n_tr:
                m[2 * (l + 1), 2 * l + 1] = coup
            if l >= 1:
                m[2 * (l - 1) + 1, 2 * l] = -1j * lead * hb * l
    return m


def test_truncated_matches_reference_entries():
    for co in (CO, CO_BROKEN):
        for branch in (Branch.I, Branch.II):
            for valley in (Valley.PRIMARY, Valley.TIME_REVERSED):
                rep = build_truncated(co, 6, branch, valley)
                ref = reference_matrix(co, 6, branch, valley)
                scale = max(1.0, float(np.max(np.abs(ref))))
                assert np.max(np.abs(rep.matrix - ref)) <= 1e-13 * scale
                assert rep.dropped_count == 1
                assert not rep.scrambled


def test_smallest_truncation_structure():
    rep = build_truncated(CO, 2, Branch.I, Valley.PRIMARY)
    nz = np.argwhere(np.abs(rep.matrix) > 1e-12)
    assert {tuple(idx) for idx in nz} == {(0, 3), (3, 0)}
    assert abs(rep.matrix[0, 3] - U_ENTRY) < FROZEN
    assert abs(rep.matrix[3, 0] - L_ENTRY) < FROZEN
    assert rep.dropped_count == 1
    values = np.sort(np.linalg.eigvals(rep.matrix).real)
    assert abs(values[0] + SQRT_K) < FROZEN
    assert abs(values[3] - SQRT_K) < FROZEN
    assert abs(values[1]) < 1e-10 and abs(values[2]) < 1e-10


def test_smallest_truncation_branch_ii():
    rep = build_truncated(CO, 2, Branch.II, Valley.PRIMARY)
    nz = np.argwhere(np.abs(rep.matrix) > 1e-12)
    assert {tuple(idx) for idx in nz} == {(2, 1), (1, 2)}
    assert abs(rep.matrix[2, 1] - UII_ENTRY) < FROZEN
    values = np.sort(np.linalg.eigvals(rep.matrix).imag)
    assert abs(values[0] + SQRT_K) < FROZEN
    assert abs(values[3] - SQRT_K) < FROZEN


def test_truncated_rejects_bad_input():
    with pytest.raises(ValueError):
        build_truncated(CO, 1)
    with pytest.raises(DegenerateCoefficientsError):
        build_truncated(derive_coeffs(dataclasses.replace(BASE, lam=1.37)), 8)


def test_retained_levels_are_exact_for_every_size():
    # truncation only adds the two spurious zeros; kept levels never move,
    # so accuracy is already saturated at small sizes
    for n_tr in (10, 20, 40, 80):
        rep = build_truncated(CO, n_tr)
        result = eigensolve(rep.matrix)
        report = classify_spectrum(result.values, 1e-8, result.residuals)
        assert report.verdict is PhaseVerdict.UNBROKEN
        worst = 0.0
        for n in range(6):
            plus, _ = level_energy(BASE, n, Branch.I)
            num = report.retained_pairs[n][0]
            worst = max(worst, abs(num - plus) / max(1.0, abs(plus)))
        assert worst <= 1e-8


# ---------------------------------------------------------------------------
# eigensolve
# ---------------------------------------------------------------------------


def test_eigensolve_sorting_and_certificates():
    result = eigensolve(np.diag([1.0, 2.0j, -3.0]))
    assert np.allclose(result.values, [-3.0, 2.0j, 1.0], atol=1e-12)
    assert result.residuals.max() <= 1e-12
    flip = eigensolve(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(flip.values, [-1.0, 1.0], atol=1e-12)


def test_eigensolve_rejects_bad_matrices():
    with pytest.raises(ValueError):
        eigensolve(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eigensolve(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        eigensolve(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        eigensolve(np.eye(2001))


def test_eigensolve_certificate_failure_carries_partials():
    rng = np.random.default_rng(7)
    m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    with pytest.raises(EigensolveError) as info:
        eigensolve(m, tol=0.0)
    assert info.value.values.shape == (5,)
    assert info.value.residuals.shape == (5,)
    assert info.value.residuals.max() > 0.0


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def test_classify_rejects_empty():
    with pytest.raises(ValueError):
        classify_spectrum([])


def test_classify_real_spectrum_with_edge_discard():
    report = classify_spectrum([0.0, 0.0, 1.0, -1.0, 2.0, -2.0])
    assert report.verdict is PhaseVerdict.UNBROKEN
    assert report.retained_pairs == ((1.0 + 0j, -1.0 + 0j),)
    assert report.n_real == 2
    assert report.n_complex_pairs == 0
    assert report.discarded_edge_levels == 2
    assert report.unpaired == ()


def test_classify_broken_spectrum():
    report = classify_spectrum([1j, -1j, 2j, -2j, 3j, -3j])
    assert report.verdict is PhaseVerdict.BROKEN
    assert report.discarded_edge_levels == 1
    assert [p[0].imag for p in report.retained_pairs] == [1.0, 2.0]
    assert all(p[0].imag > 0 for p in report.retained_pairs)
    assert all(abs(p[0] + p[1]) < 1e-12 for p in report.retained_pairs)


def test_classify_all_zero_is_critical():
    report = classify_spectrum([0.0, 0.0, 0.0, 0.0])
    assert report.verdict is PhaseVerdict.CRITICAL
    assert report.retained_pairs == ()
    assert report.discarded_edge_levels == 2


def test_classify_leftover_is_reported_not_fatal():
    report = classify_spectrum([1.0, -1.0, 0.5])
    assert report.unpaired == (0.5 + 0j,)
    assert report.verdict is PhaseVerdict.UNBROKEN


def test_classify_near_zero_pair_discarded():
    report = classify_spectrum([1e-12, -1e-12, 1.0, -1.0])
    assert report.verdict is PhaseVerdict.UNBROKEN
    assert report.discarded_edge_levels == 1
    assert report.retained_pairs == ((1.0 + 0j, -1.0 + 0j),)


def test_classify_unpairable_everything_is_critical():
    report = classify_spectrum([1.0, 2.0])
    assert report.verdict is PhaseVerdict.CRITICAL
    assert len(report.unpaired) == 2


def test_classify_validates_residuals():
    with pytest.raises(ValueError):
        classify_spectrum([1.0, -1.0], residuals=[0.0])
    report = classify_spectrum([1.0, -1.0], residuals=[1e-12, 2e-12])
    assert report.max_residual == 2e-12


# ---------------------------------------------------------------------------
# scrambling
# ---------------------------------------------------------------------------


def test_scramble_preserves_spectrum_and_fills_matrix():
    rep = build_truncated(CO, 20)
    mixed = scramble(rep, seed=5)
    assert mixed.scrambled and not rep.scrambled
    assert mixed.matrix.shape == rep.matrix.shape
    before = np.sort_complex(np.linalg.eigvals(rep.matrix))
    after = np.sort_complex(np.linalg.eigvals(mixed.matrix))
    spread = max(1.0, float(np.max(np.abs(before))))
    assert float(np.max(np.abs(before - after))) <= 1e-9 * spread
    scale = float(np.max(np.abs(mixed.matrix)))
    density = float(np.mean(np.abs(mixed.matrix) > 1e-12 * scale))
    assert density >= 0.9


def test_scramble_seeds_differ():
    rep = build_truncated(CO, 6)
    a = scramble(rep, seed=1)
    b = scramble(rep, seed=2)
    assert not np.allclose(a.matrix, b.matrix)
    assert np.array_equal(scramble(rep, seed=1).matrix, a.matrix)


# ---------------------------------------------------------------------------
# end-to-end verdicts
# ---------------------------------------------------------------------------


def test_numeric_agreement_unbroken():
    report = phase_verdict_numeric(BASE, branch=Branch.I, n_tr=40, seed=3)
    assert report.verdict is PhaseVerdict.UNBROKEN
    for n in range(11):
        plus, _ = level_energy(BASE, n, Branch.I)
        num = report.retained_pairs[n][0]
        assert abs(num - plus) <= 1e-8 * max(1.0, abs(plus))


def test_numeric_agreement_broken():
    report = phase_verdict_numeric(BROKEN, branch=Branch.I, n_tr=40, seed=3)
    assert report.verdict is PhaseVerdict.BROKEN
    for n in range(11):
        plus, _ = level_energy(BROKEN, n, Branch.I)
        num = report.retained_pairs[n][0]
        assert num.imag > 0
        assert abs(num - plus) <= 1e-8 * max(1.0, abs(plus))
        minus = report.retained_pairs[n][1]
        assert abs(minus + num) <= 1e-8 * max(1.0, abs(num))


def test_numeric_agreement_branch_ii_and_valley():
    report = phase_verdict_numeric(
        BASE, branch=Branch.II, valley=Valley.TIME_REVERSED, n_tr=30, seed=9
    )
    assert report.verdict is PhaseVerdict.BROKEN
    for n in range(8):
        plus, _ = level_energy(BASE, n, Branch.II)
        num = report.retained_pairs[n][0]
        assert abs(num - plus) <= 1e-8 * max(1.0, abs(plus))


def test_find_exceptional_point_matches_analytic():
    rng = random.Random(20240818)
    families = []
    for _ in range(10):
        vf = rng.uniform(0.8, 2.0)
        k1 = rng.uniform(0.01, 0.15)
        families.append((PhysParams(v_f=vf, lam=0.0, k1=k1, b0=50.0), Vary.LAMBDA))
    for _ in range(6):
        vf = rng.uniform(0.8, 2.0)
        k1 = rng.uniform(0.01, 0.15)
        lam = rng.uniform(0.0, 0.5 * vf)
        families.append((PhysParams(v_f=vf, lam=lam, k1=k1, b0=50.0), Vary.B0))
    for p, vary in families:
        target = critical_point(p, vary)
        assert target is not None
        found = find_exceptional_point(
            p, vary, 0.5 * target, 1.5 * target, tol=1e-6, n_tr=16
        )
        # Verdicts blur inside a roundoff band around the defective point,
        # so the locator cannot beat the band width, only the 1e-4 budget.
        assert abs(found - target) <= 1e-4 * max(1.0, target)


def test_find_exceptional_point_requires_bracket():
    with pytest.raises(NoTransitionBracketedError) as info:
        find_exceptional_point(BASE, Vary.LAMBDA, 0.1, 0.3, n_tr=8)
    assert "no transition bracketed" in str(info.value)
    with pytest.raises(ValueError):
        find_exceptional_point(BASE, Vary.LAMBDA, 0.3, 0.1, n_tr=8)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_matrix_dump_round_trip():
    m = build_truncated(CO, 5).matrix
    assert np.array_equal(parse_matrix(dump_matrix(m)), m)


def test_parse_matrix_validation():
    with pytest.raises(ValueError):
        parse_matrix("")
    with pytest.raises(ValueError):
        parse_matrix("2\n0.0 0.0\n")
    with pytest.raises(ValueError):
        parse_matrix("1\n0.0\n")


def test_exact_coefficients_build_too():
    co = derive_coeffs(
        PhysParams(
            v_f=Fraction(137, 100),
            lam=Fraction(1, 2),
            k1=Fraction(1, 50),
            b0=Fraction(100),
            e=Fraction(1),
            c=Fraction(137),
            hbar=Fraction(1),
        )
    )
    rep = build_truncated(co, 4)
    ref = reference_matrix(co, 4, Branch.I, Valley.PRIMARY)
    assert np.max(np.abs(rep.matrix - ref)) <= 1e-13 * float(np.max(np.abs(ref)))
