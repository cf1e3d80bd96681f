import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gram_constant
from lyapcert.admissibility import (
    AdmissibilityEstimate,
    TrendThresholds,
    admissibility_constant,
    admissibility_trend,
    classify_trend,
    l2_iss_verdict,
    operator_class_scan,
)
from lyapcert.models import counterexample_system, heat_system
from lyapcert.systems import SpectralSystem


def test_classify_trend_basic():
    assert classify_trend([4, 16, 64], [2.0, 4.0, 8.0])[0] == "diverging"
    assert classify_trend([4, 16, 64], [1.0, 1.0, 1.0])[0] == "bounded"
    assert classify_trend([4, 16, 64], [0.0, 0.0, 0.0]) == ("bounded", 0.0)


def test_counterexample_half_power_scan():
    family = [counterexample_system(n) for n in (4, 16, 64)]
    scan = operator_class_scan(family, 0.5)
    # sum over modes of lam^-1 b^2 = 1 per mode, so the norms are sqrt(N).
    assert scan.norms == pytest.approx((2.0, 4.0, 8.0), rel=1e-12)
    assert scan.verdict == "diverging"
    assert scan.growth_exponent == pytest.approx(0.5, abs=1e-9)


def test_counterexample_three_quarter_scan():
    family = [counterexample_system(n) for n in (10, 20, 40)]
    scan = operator_class_scan(family, 0.75)
    # Oracle: geometric series sum_{n>=1} 2^(-n/2) = 1/(sqrt(2)-1).
    limit = math.sqrt(1.0 / (math.sqrt(2.0) - 1.0))
    assert scan.verdict == "bounded"
    assert scan.norms[-1] == pytest.approx(limit, abs=1e-3)


def test_heat_neumann_half_power_scan_bounded():
    family = [heat_system("neumann", n) for n in (16, 64, 256)]
    scan = operator_class_scan(family, 0.5)
    assert scan.verdict == "bounded"
    # Oracle: sum 2/((n-1/2) pi)^2 -> 1, by direct partial summation.
    n = np.arange(1, 200_001)
    oracle = float(np.sqrt(np.sum(2.0 / ((n - 0.5) * np.pi) ** 2)))
    assert oracle == pytest.approx(1.0, abs=1e-5)
    assert scan.norms[-1] == pytest.approx(oracle, abs=2e-3)


def test_heat_dirichlet_scan_threshold():
    # Oracle: sum (n pi)^(2 - 4 gamma) is a p-series converging iff
    # 4 gamma - 2 > 1, i.e. gamma > 3/4.
    family = [heat_system("dirichlet", n) for n in (16, 64, 256)]
    for gamma in (0.25, 0.5, 0.75):
        assert operator_class_scan(family, gamma).verdict == "diverging"
    deep = [heat_system("dirichlet", n) for n in (1024, 4096, 16384)]
    assert operator_class_scan(deep, 1.0).verdict == "bounded"


def test_scan_needs_three_points():
    with pytest.raises(ValueError):
        operator_class_scan([counterexample_system(4), counterexample_system(8)], 0.5)


def test_scalar_l2_constant_reaches_closed_form():
    # Oracle: the extremal input is proportional to exp(-(T-s)); the
    # constant converges to sqrt(int_0^inf e^(-2 tau) d tau) = 1/sqrt(2).
    sys = SpectralSystem([1.0], [1.0])
    est = admissibility_constant(sys, 2, horizon=20.0, steps=2048)
    assert est.constant == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-4)


def test_l2_constant_matches_gram_oracle():
    rng = np.random.default_rng(17)
    for _ in range(5):
        n = int(rng.integers(2, 8))
        sys = SpectralSystem(np.sort(rng.uniform(0.2, 20.0, n)), rng.normal(size=n))
        est = admissibility_constant(sys, 2, horizon=8.0, steps=2048)
        oracle = gram_constant(sys.eigenvalues, sys.input_coeffs, 8.0)
        assert est.constant == pytest.approx(oracle, rel=2e-3)
        assert est.constant <= oracle * (1 + 1e-9)  # discretization only loses


def test_zero_input_operator():
    sys = SpectralSystem([1.0, 2.0], [0.0, 0.0])
    for q in (1, 2, math.inf):
        assert admissibility_constant(sys, q, horizon=5.0).constant == 0.0


def test_matrix_realization_matches_diagonal():
    from lyapcert.systems import MatrixSystem

    lam = np.array([0.7, 2.5, 6.0])
    b = np.array([1.0, -0.5, 2.0])
    diagonal = SpectralSystem(lam, b)
    dense = MatrixSystem(np.diag(-lam), b.reshape(-1, 1))
    k_diag = admissibility_constant(diagonal, 2, horizon=6.0, steps=256).constant
    k_dense = admissibility_constant(dense, 2, horizon=6.0, steps=256).constant
    assert k_dense == pytest.approx(k_diag, rel=1e-9)


def test_multi_input_matrix_rejected():
    from lyapcert.systems import MatrixSystem

    sys = MatrixSystem(np.diag([-1.0, -2.0]), np.eye(2))
    with pytest.raises(ValueError, match="scalar input"):
        admissibility_constant(sys, 2, horizon=1.0)


def test_q_inf_constant_exact():
    sys = SpectralSystem([1.0], [1.0])
    est = admissibility_constant(sys, math.inf, horizon=3.0)
    assert est.constant == pytest.approx(1.0 - math.exp(-3.0), rel=1e-9)


def test_q_one_constant_is_peak_kernel_norm():
    sys = SpectralSystem([1.0, 4.0], [1.0, -2.0])
    est = admissibility_constant(sys, 1, horizon=5.0)
    assert est.constant == pytest.approx(math.sqrt(5.0), rel=1e-12)


def test_unsupported_q():
    sys = SpectralSystem([1.0], [1.0])
    with pytest.raises(ValueError):
        admissibility_constant(sys, 3, horizon=1.0)
    with pytest.raises(ValueError):
        admissibility_constant(sys, 2, horizon=0.0)
    with pytest.raises(ValueError):
        admissibility_constant(sys, 2, horizon=1.0, steps=4)


def test_counterexample_constant_bounded_despite_diverging_scan():
    family = [counterexample_system(n) for n in (64, 128, 256)]
    est = admissibility_trend(family, 2, [10.0])
    rows = sorted((n, v) for _, n, v in est.trend)
    ratios = [b / a for (_, a), (_, b) in zip(rows, rows[1:])]
    assert all(r <= 1.02 for r in ratios)
    # Cross-check the plateau against the exact Gram oracle.
    oracle = gram_constant(family[-1].eigenvalues, family[-1].input_coeffs, 10.0)
    assert rows[-1][1] == pytest.approx(oracle, rel=5e-3)


def test_trend_monotone_in_horizon_and_modes():
    family = [counterexample_system(n) for n in (4, 8, 16)]
    est = admissibility_trend(family, 2, [2.0, 5.0, 10.0], steps=256)
    by_t, by_n = {}, {}
    for t, n, v in est.trend:
        by_t.setdefault(t, []).append((n, v))
        by_n.setdefault(n, []).append((t, v))
    for rows in list(by_t.values()) + list(by_n.values()):
        rows.sort()
        values = [v for _, v in rows]
        assert all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))


def test_estimate_monotonicity_validation():
    with pytest.raises(ValueError):
        AdmissibilityEstimate(
            q=2.0,
            horizon=1.0,
            steps=8,
            constant=1.0,
            trend=((1.0, 4, 2.0), (1.0, 8, 1.0)),
        )


@settings(max_examples=25, deadline=None)
@given(power=st.integers(-4, 4), seed=st.integers(0, 2**31 - 1))
def test_scaling_covariance(power, seed):
    # Multiplying the input column by c multiplies every constant and scan
    # norm by |c|; binary scales keep the identity exact.
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    lam = np.sort(rng.uniform(0.2, 30.0, n))
    b = rng.normal(size=n)
    c = 2.0**power
    base = SpectralSystem(lam, b)
    scaled = SpectralSystem(lam, c * b)
    k_base = admissibility_constant(base, 2, horizon=4.0, steps=128).constant
    k_scaled = admissibility_constant(scaled, 2, horizon=4.0, steps=128).constant
    assert k_scaled == abs(c) * k_base


def test_verdicts():
    neumann = [heat_system("neumann", n) for n in (16, 64, 256)]
    est = admissibility_trend(neumann, 2, [10.0])
    assert l2_iss_verdict(neumann[-1], est).verdict == "ISS"

    dirichlet = [heat_system("dirichlet", n) for n in (16, 64, 256)]
    est = admissibility_trend(dirichlet, 2, [10.0])
    verdict = l2_iss_verdict(dirichlet[-1], est)
    assert verdict.verdict == "not-ISS"
    assert any("grows" in r for r in verdict.reasons)

    silent = SpectralSystem([1.0, 2.0], [0.0, 0.0])
    est = admissibility_trend([silent], 2, [5.0])
    assert l2_iss_verdict(silent, est).verdict == "ISS"


def test_thresholds_are_configurable():
    lax = TrendThresholds(diverging_slope=0.6, bounded_ratio=2.5)
    verdict, _ = classify_trend([4, 16, 64], [2.0, 4.0, 8.0], lax)
    assert verdict == "bounded"
