"""Numeric verification of the coverage model's definite-integral table.

Eight integral families appear in the model's derivation, each with a stated
closed form. Every family is evaluated two independent ways, a deterministic
path (Gauss-Legendre on the 1-dimensional order-statistics reduction, exact
for these polynomial integrands) and plain Monte Carlo over the box domain
with a reported standard error, and the results are compared against the
closed forms instead of assuming them.

Orientation of the order-statistic families (MIN_2D, MIN_ND, COMBINED): the
stated closed form (2d+1) / ((d+1) * 2^(d+1)) and its stated reduction
``d * integral of x^(d-1) * (x + 1/2) over [0, 1/2]`` both describe the
largest-coordinate integrand ``max(x_1..x_d) + 1/2`` on [0, 1/2]^d; the
reflection x -> 1/2 - x maps it to ``1 - min(x_1..x_d)``. The literal
smallest-coordinate integrand ``min(x) + 1/2`` integrates to
(d+2) / ((d+1) * 2^(d+1)) instead, which differs for d >= 2. Both evaluation
paths here use the orientation the reduction fixes, so they test the closed
form that is actually stated.

The COMBINED family has two closed-form candidates, equal exactly when
d == m (each is the other with d and m swapped):

* printed: (2m+1) / (8^d * (m+1) * 2^(m+1))
* derived: [(2d+1) / ((d+1) * 2^(d+1))] * (1/8)^m, the product form implied
  by independence of the x block and the (y, v) pairs.

:func:`check_all` records which candidate the numbers support; it never
"corrects" the printed form silently, and a disagreement is reported as a
finding, not an evaluation failure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import sqrt

import numpy as np

from .rng import stream_key, uniform_block

__all__ = [
    "IntegralId",
    "Verdict",
    "IntegralEvaluation",
    "IntegralCheck",
    "printed_closed_form",
    "derived_closed_form",
    "eval_integral",
    "tensor_quadrature",
    "check_all",
]

# 1-d reductions are polynomials of degree <= MAX_VARS + 1; the fixed
# 24-node rule is exact far beyond that.
MAX_VARS = 12
_GL_ORDER = 24

_MC_SAMPLES = 200_000
_MC_SEED = 20260810  # fixed so evaluations are deterministic by default

# Tensor cross-check caps: x-variables + pairs per the supported range, and
# a total grid budget that keeps memory in the tens of megabytes.
_TENSOR_MAX_VARS = 8
_TENSOR_POINT_BUDGET = 2**21


class IntegralId(enum.Enum):
    """The eight integral families, in order of appearance in the table."""

    LINEAR_1D = "LINEAR_1D"
    PRODUCT_2D = "PRODUCT_2D"
    PRODUCT_ND = "PRODUCT_ND"
    MIN_2D = "MIN_2D"
    MIN_ND = "MIN_ND"
    YV_2D = "YV_2D"
    YV_ND = "YV_ND"
    COMBINED = "COMBINED"


class Verdict(enum.Enum):
    MATCHES_PRINTED = "MATCHES_PRINTED"
    MATCHES_DERIVED_ONLY = "MATCHES_DERIVED_ONLY"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class IntegralEvaluation:
    """Both evaluation routes for one integral."""

    deterministic: float
    mc_mean: float
    mc_stderr: float
    mc_samples: int


@dataclass(frozen=True)
class IntegralCheck:
    """One verified integral: numerics next to both closed-form candidates."""

    id: IntegralId
    d: int | None
    m: int | None
    numeric: float
    printed_closed_form: Fraction
    derived_closed_form: Fraction
    abs_err_numeric_vs_derived: float
    verdict: Verdict


# Family shape: which ids take a d parameter, an m parameter, and whether the
# x block enters as a product of (x_i + 1/2) or as max(x) + 1/2.
_FIXED_D = {IntegralId.LINEAR_1D: 1, IntegralId.PRODUCT_2D: 2, IntegralId.MIN_2D: 2}
_FIXED_M = {IntegralId.YV_2D: 1}
_ORDER_STAT = {IntegralId.MIN_2D, IntegralId.MIN_ND, IntegralId.COMBINED}


def _resolve_params(integral_id: IntegralId, d: int | None, m: int | None) -> tuple[int, int]:
    """Normalize (d, m) to (number of x variables, number of (y, v) pairs)."""
    if integral_id in (IntegralId.PRODUCT_ND, IntegralId.MIN_ND):
        if d is None:
            raise ValueError(f"{integral_id.value} requires d")
        x_vars, pairs = d, 0
        if m not in (None, 1):
            raise ValueError(f"{integral_id.value} takes no m parameter")
    elif integral_id is IntegralId.YV_ND:
        if m is None:
            raise ValueError("YV_ND requires m (number of (y, v) pairs)")
        x_vars, pairs = 0, m
        if d not in (None, 1):
            raise ValueError("YV_ND takes no d parameter")
    elif integral_id is IntegralId.COMBINED:
        if d is None or m is None:
            raise ValueError("COMBINED requires both d and m")
        x_vars, pairs = d, m
    else:
        x_vars = _FIXED_D.get(integral_id, 0)
        pairs = _FIXED_M.get(integral_id, 0)
        if d is not None and d != max(x_vars, 1):
            raise ValueError(f"{integral_id.value} has fixed d={x_vars}")
        if m is not None and m != max(pairs, 1):
            raise ValueError(f"{integral_id.value} has fixed m={pairs}")
    if x_vars < 0 or pairs < 0 or x_vars + pairs == 0:
        raise ValueError(f"invalid parameters d={d}, m={m} for {integral_id.value}")
    if x_vars > MAX_VARS or pairs > MAX_VARS:
        raise ValueError(f"at most {MAX_VARS} variables per block are supported")
    return x_vars, pairs


def _order_stat_fraction(d: int) -> Fraction:
    return Fraction(2 * d + 1, (d + 1) * 2 ** (d + 1))


def printed_closed_form(integral_id: IntegralId, d: int | None = None, m: int | None = None) -> Fraction:
    """The stated closed form for this integral."""
    x_vars, pairs = _resolve_params(integral_id, d, m)
    if integral_id is IntegralId.COMBINED:
        return Fraction(2 * pairs + 1, 8**x_vars * (pairs + 1) * 2 ** (pairs + 1))
    if integral_id in _ORDER_STAT:
        return _order_stat_fraction(x_vars)
    # pure products of degree-1 factors
    return Fraction(3, 8) ** x_vars * Fraction(1, 8) ** pairs


def derived_closed_form(integral_id: IntegralId, d: int | None = None, m: int | None = None) -> Fraction:
    """The closed form implied by independence of the variable blocks.

    Identical to the printed form for every family except COMBINED, where
    the two candidates swap the roles of d and m.
    """
    x_vars, pairs = _resolve_params(integral_id, d, m)
    if integral_id is IntegralId.COMBINED:
        return _order_stat_fraction(x_vars) * Fraction(1, 8) ** pairs
    return printed_closed_form(integral_id, d, m)


@lru_cache(maxsize=None)
def _gl_half() -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre nodes and weights mapped from [-1, 1] to [0, 1/2].
    nodes, weights = np.polynomial.legendre.leggauss(_GL_ORDER)
    return (nodes + 1.0) / 4.0, weights / 4.0


def _quad_linear() -> float:
    x, w = _gl_half()
    return float(np.sum(w * (x + 0.5)))


def _quad_order_stat(d: int) -> float:
    # integral over [0, 1/2]^d of max(x) + 1/2, reduced to one dimension via
    # the measure of {max <= t}: d * t^(d-1) dt.
    x, w = _gl_half()
    return float(np.sum(w * d * x ** (d - 1) * (x + 0.5)))


def _quad_pair() -> float:
    # one (y, v) pair: y on [0, 1/2], v on [-1/2, 0]
    y, wy = _gl_half()
    v, wv = -_gl_half()[0], _gl_half()[1]
    return float(np.sum(wy[:, None] * wv[None, :] * (y[:, None] - v[None, :])))


def _deterministic_value(integral_id: IntegralId, x_vars: int, pairs: int) -> float:
    pair_part = _quad_pair() ** pairs if pairs else 1.0
    if x_vars == 0:
        return pair_part
    if integral_id in _ORDER_STAT:
        return _quad_order_stat(x_vars) * pair_part
    return _quad_linear() ** x_vars * pair_part


def _mc_value(
    integral_id: IntegralId, x_vars: int, pairs: int, samples: int, seed: int
) -> tuple[float, float]:
    if samples < 2:
        raise ValueError(f"mc_samples must be >= 2, got {samples}")
    tag = ((list(IntegralId).index(integral_id) + 1) << 16) | (x_vars << 8) | pairs
    width = x_vars + 2 * pairs
    u = uniform_block(stream_key(seed, tag), 0, samples, width)
    f = np.ones(samples)
    if x_vars:
        x = 0.5 * u[:, :x_vars]
        if integral_id in _ORDER_STAT:
            f *= x.max(axis=1) + 0.5
        else:
            f *= np.prod(x + 0.5, axis=1)
    if pairs:
        y = 0.5 * u[:, x_vars : x_vars + pairs]
        v = -0.5 * u[:, x_vars + pairs :]
        f *= np.prod(y - v, axis=1)
    volume = 0.5**x_vars * 0.25**pairs
    mean = float(np.mean(f)) * volume
    stderr = float(np.std(f, ddof=1)) / sqrt(samples) * volume
    return mean, stderr


def eval_integral(
    integral_id: IntegralId,
    d: int | None = None,
    m: int | None = None,
    mc_samples: int = _MC_SAMPLES,
    seed: int = _MC_SEED,
) -> IntegralEvaluation:
    """Evaluate one integral by both routes.

    The deterministic route reduces min/max blocks to one dimension and uses
    fixed-node Gauss-Legendre (exact on these polynomial integrands up to
    rounding); the Monte Carlo route samples the box domain directly and
    reports its standard error. Both are returned so callers can compare.
    """
    x_vars, pairs = _resolve_params(integral_id, d, m)
    deterministic = _deterministic_value(integral_id, x_vars, pairs)
    mc_mean, mc_stderr = _mc_value(integral_id, x_vars, pairs, mc_samples, seed)
    return IntegralEvaluation(
        deterministic=deterministic,
        mc_mean=mc_mean,
        mc_stderr=mc_stderr,
        mc_samples=mc_samples,
    )


def tensor_quadrature(
    integral_id: IntegralId,
    d: int | None = None,
    m: int | None = None,
    point_budget: int = _TENSOR_POINT_BUDGET,
) -> float:
    """Full tensor-grid quadrature over every variable at once.

    A cross-check that does not use the per-block factorization. For the
    multilinear families a 4-node rule per axis is already exact; the
    order-statistic integrand has a derivative kink, so its tensor value
    converges only algebraically and is useful at loose tolerances and small
    dimension counts. Limited to d + m <= 8 variables blocks.
    """
    x_vars, pairs = _resolve_params(integral_id, d, m)
    if x_vars + pairs > _TENSOR_MAX_VARS:
        raise ValueError(f"tensor quadrature supports d + m <= {_TENSOR_MAX_VARS}")
    axes = x_vars + 2 * pairs
    if integral_id in _ORDER_STAT:
        per_axis = min(512, max(8, int(point_budget ** (1.0 / axes))))
    else:
        per_axis = 4
    nodes, weights = np.polynomial.legendre.leggauss(per_axis)
    half = (nodes + 1.0) / 4.0
    whalf = weights / 4.0

    def on_axis(values: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * axes
        shape[axis] = per_axis
        return values.reshape(shape)

    f = np.array(1.0)
    w = np.array(1.0)
    for k in range(x_vars):
        xk = on_axis(half, k)
        w = w * on_axis(whalf, k)
        if integral_id in _ORDER_STAT:
            f = np.maximum(f, xk) if k else xk + 0.0
        else:
            f = f * (xk + 0.5)
    if x_vars and integral_id in _ORDER_STAT:
        f = f + 0.5
    for p in range(pairs):
        y_axis = x_vars + 2 * p
        v_axis = y_axis + 1
        f = f * (on_axis(half, y_axis) - on_axis(-half, v_axis))
        w = w * on_axis(whalf, y_axis) * on_axis(whalf, v_axis)
    return float(np.sum(f * w))


def _decide(numeric: float, printed: Fraction, derived: Fraction, tol: float) -> Verdict:
    if abs(numeric - float(printed)) <= tol:
        return Verdict.MATCHES_PRINTED
    if abs(numeric - float(derived)) <= tol:
        return Verdict.MATCHES_DERIVED_ONLY
    return Verdict.INCONCLUSIVE


def check_all(
    d_max: int,
    m_max: int,
    tol: float = 1e-9,
    mc_samples: int = _MC_SAMPLES,
    seed: int = _MC_SEED,
) -> list[IntegralCheck]:
    """One IntegralCheck per (id, parameter) combination.

    Fixed-parameter families appear once; PRODUCT_ND and MIN_ND sweep
    d = 1..d_max, YV_ND sweeps m = 1..m_max, and COMBINED covers the full
    (d, m) grid. The verdict compares the deterministic value against both
    closed-form candidates at ``tol``; for everything except COMBINED the
    candidates coincide, so anything but MATCHES_PRINTED means the
    evaluation disagrees with the stated form.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not 1 <= d_max <= MAX_VARS or not 1 <= m_max <= MAX_VARS:
        raise ValueError(f"d_max and m_max must be in 1..{MAX_VARS}")

    combos: list[tuple[IntegralId, int | None, int | None]] = [
        (IntegralId.LINEAR_1D, None, None),
        (IntegralId.PRODUCT_2D, None, None),
        *((IntegralId.PRODUCT_ND, d, None) for d in range(1, d_max + 1)),
        (IntegralId.MIN_2D, None, None),
        *((IntegralId.MIN_ND, d, None) for d in range(1, d_max + 1)),
        (IntegralId.YV_2D, None, None),
        *((IntegralId.YV_ND, None, m) for m in range(1, m_max + 1)),
        *(
            (IntegralId.COMBINED, d, m)
            for d in range(1, d_max + 1)
            for m in range(1, m_max + 1)
        ),
    ]

    checks = []
    for integral_id, d, m in combos:
        evaluation = eval_integral(integral_id, d, m, mc_samples=mc_samples, seed=seed)
        printed = printed_closed_form(integral_id, d, m)
        derived = derived_closed_form(integral_id, d, m)
        numeric = evaluation.deterministic
        checks.append(
            IntegralCheck(
                id=integral_id,
                d=d,
                m=m,
                numeric=numeric,
                printed_closed_form=printed,
                derived_closed_form=derived,
                abs_err_numeric_vs_derived=abs(numeric - float(derived)),
                verdict=_decide(numeric, printed, derived, tol),
            )
        )
    return checks
