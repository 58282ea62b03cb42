"""Both evaluation routes against the stated closed forms."""

from fractions import Fraction

import pytest

from gridlsh.integrals import (
    IntegralId,
    Verdict,
    check_all,
    derived_closed_form,
    eval_integral,
    printed_closed_form,
    tensor_quadrature,
)

I = IntegralId


@pytest.mark.parametrize(
    "integral_id, d, m, expected",
    [
        (I.LINEAR_1D, None, None, Fraction(3, 8)),
        (I.PRODUCT_2D, None, None, Fraction(9, 64)),
        (I.PRODUCT_ND, 4, None, Fraction(3, 8) ** 4),
        (I.MIN_2D, None, None, Fraction(5, 24)),
        (I.MIN_ND, 1, None, Fraction(3, 8)),
        (I.MIN_ND, 3, None, Fraction(7, 64)),
        (I.MIN_ND, 6, None, Fraction(13, 896)),
        (I.YV_2D, None, None, Fraction(1, 8)),
        (I.YV_ND, None, 5, Fraction(1, 8) ** 5),
        (I.COMBINED, 1, 1, Fraction(3, 64)),
        (I.COMBINED, 2, 1, Fraction(3, 512)),
    ],
)
def test_printed_closed_forms(integral_id, d, m, expected):
    assert printed_closed_form(integral_id, d, m) == expected


def test_min_nd_printed_sequence():
    expected = [Fraction(3, 8), Fraction(5, 24), Fraction(7, 64),
                Fraction(9, 160), Fraction(11, 384), Fraction(13, 896)]
    assert [printed_closed_form(I.MIN_ND, d) for d in range(1, 7)] == expected


def test_combined_candidates_swap_d_and_m():
    assert derived_closed_form(I.COMBINED, 2, 1) == Fraction(5, 192)
    assert printed_closed_form(I.COMBINED, 2, 1) == Fraction(3, 512)
    for d in range(1, 5):
        for m in range(1, 5):
            assert printed_closed_form(I.COMBINED, d, m) == derived_closed_form(I.COMBINED, m, d)
        assert printed_closed_form(I.COMBINED, d, d) == derived_closed_form(I.COMBINED, d, d)


def test_derived_equals_printed_except_combined():
    cases = [
        (I.LINEAR_1D, None, None),
        (I.PRODUCT_2D, None, None),
        (I.PRODUCT_ND, 7, None),
        (I.MIN_2D, None, None),
        (I.MIN_ND, 9, None),
        (I.YV_2D, None, None),
        (I.YV_ND, None, 8),
    ]
    for integral_id, d, m in cases:
        assert printed_closed_form(integral_id, d, m) == derived_closed_form(integral_id, d, m)


def test_deterministic_evaluation_matches_printed_forms():
    sweep = [
        (I.LINEAR_1D, None, None),
        (I.PRODUCT_2D, None, None),
        *((I.PRODUCT_ND, d, None) for d in range(1, 13)),
        (I.MIN_2D, None, None),
        *((I.MIN_ND, d, None) for d in range(1, 13)),
        (I.YV_2D, None, None),
        *((I.YV_ND, None, m) for m in range(1, 13)),
    ]
    for integral_id, d, m in sweep:
        value = eval_integral(integral_id, d, m, mc_samples=2).deterministic
        assert value == pytest.approx(float(printed_closed_form(integral_id, d, m)), abs=1e-12)


def test_example_values():
    assert eval_integral(I.LINEAR_1D, mc_samples=2).deterministic == pytest.approx(0.375)
    assert eval_integral(I.MIN_2D, mc_samples=2).deterministic == pytest.approx(5 / 24)
    assert eval_integral(I.MIN_ND, 3, mc_samples=2).deterministic == pytest.approx(0.109375)


@pytest.mark.parametrize(
    "integral_id, d, m",
    [
        (I.LINEAR_1D, None, None),
        (I.PRODUCT_2D, None, None),
        (I.PRODUCT_ND, 4, None),
        (I.MIN_2D, None, None),
        (I.MIN_ND, 5, None),
        (I.YV_2D, None, None),
        (I.YV_ND, None, 3),
        (I.COMBINED, 2, 1),
        (I.COMBINED, 1, 2),
        (I.COMBINED, 3, 3),
    ],
)
def test_monte_carlo_agrees_with_deterministic(integral_id, d, m):
    evaluation = eval_integral(integral_id, d, m, mc_samples=100_000, seed=8)
    assert abs(evaluation.mc_mean - evaluation.deterministic) <= 4 * evaluation.mc_stderr


def test_combined_monte_carlo_separates_the_candidates():
    evaluation = eval_integral(I.COMBINED, 2, 1, mc_samples=200_000)
    printed = float(printed_closed_form(I.COMBINED, 2, 1))
    derived = float(derived_closed_form(I.COMBINED, 2, 1))
    assert (derived - printed) / evaluation.mc_stderr >= 10
    assert abs(evaluation.mc_mean - derived) <= 4 * evaluation.mc_stderr
    assert abs(evaluation.mc_mean - printed) >= 10 * evaluation.mc_stderr


def test_tensor_quadrature_cross_checks():
    # multilinear families: a 4-node rule is exact
    assert tensor_quadrature(I.PRODUCT_ND, 4) == pytest.approx(float(Fraction(3, 8) ** 4), abs=1e-9)
    assert tensor_quadrature(I.YV_ND, m=3) == pytest.approx(float(Fraction(1, 8) ** 3), abs=1e-9)
    assert tensor_quadrature(I.LINEAR_1D) == pytest.approx(0.375, abs=1e-9)
    # the order-statistic kink degrades tensor accuracy; loose tolerances
    assert tensor_quadrature(I.MIN_2D) == pytest.approx(5 / 24, abs=5e-4)
    assert tensor_quadrature(I.COMBINED, 1, 1) == pytest.approx(3 / 64, abs=1e-6)
    assert tensor_quadrature(I.COMBINED, 2, 1) == pytest.approx(5 / 192, abs=5e-4)
    with pytest.raises(ValueError):
        tensor_quadrature(I.COMBINED, 6, 3)  # d + m > 8


def test_parameter_validation():
    with pytest.raises(ValueError):
        eval_integral(I.PRODUCT_ND)  # missing d
    with pytest.raises(ValueError):
        eval_integral(I.YV_ND)  # missing m
    with pytest.raises(ValueError):
        eval_integral(I.COMBINED, 2, None)
    with pytest.raises(ValueError):
        eval_integral(I.MIN_2D, d=3)  # fixed-parameter family
    with pytest.raises(ValueError):
        eval_integral(I.MIN_ND, d=13)  # beyond the supported reduction range
    with pytest.raises(ValueError):
        eval_integral(I.PRODUCT_ND, d=0)


def test_check_all_structure_and_verdicts():
    checks = check_all(2, 2, tol=1e-9, mc_samples=2_000)
    # 1 + 1 + 2 + 1 + 2 + 1 + 2 + 4 combinations
    assert len(checks) == 14
    for check in checks:
        if check.id is I.COMBINED:
            continue
        assert check.verdict is Verdict.MATCHES_PRINTED
        assert check.printed_closed_form == check.derived_closed_form
        assert check.abs_err_numeric_vs_derived <= 1e-9
    combined = {(c.d, c.m): c for c in checks if c.id is I.COMBINED}
    assert combined[(1, 1)].verdict is Verdict.MATCHES_PRINTED
    assert combined[(2, 2)].verdict is Verdict.MATCHES_PRINTED
    off_diagonal = [c.verdict for (d, m), c in combined.items() if d != m]
    assert set(off_diagonal) == {Verdict.MATCHES_DERIVED_ONLY}


def test_check_all_validation():
    with pytest.raises(ValueError):
        check_all(0, 1)
    with pytest.raises(ValueError):
        check_all(2, 2, tol=0.0)
