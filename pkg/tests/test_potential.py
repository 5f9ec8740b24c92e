import numpy as np
import pytest

from bchwaves import (NotInExistenceSet, WaveParameters, a_max,
                      critical_points, eval_g, eval_potential,
                      existence_check)


def bisect(f, lo, hi, tol=1e-14):
    """Plain bisection, kept independent of the library's root finding."""
    flo = f(lo)
    assert flo * f(hi) < 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo, flo = mid, f(mid)
    return 0.5 * (lo + hi)


def test_parameter_validation():
    with pytest.raises(ValueError):
        WaveParameters(b=1.0, a=0.1, E=0.0, c=1.0)
    with pytest.raises(ValueError):
        WaveParameters(b=2.0, a=float("nan"), E=0.0, c=1.0)
    WaveParameters(b=2.0, a=-1.0, E=0.0, c=1.0)  # admissibility checked later


def test_potential_values(ref_params):
    assert eval_potential(0.0, ref_params) == pytest.approx(0.1, abs=1e-15)
    assert eval_potential(0.5, ref_params) == pytest.approx(0.075, abs=1e-15)


def test_potential_diverges_at_c(ref_params):
    vals = eval_potential(np.array([0.9, 0.99, 0.999999]), ref_params)
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 1e4


def test_potential_domain(ref_params):
    with pytest.raises(ValueError):
        eval_potential(1.0, ref_params)
    with pytest.raises(ValueError):
        eval_g(1.5, ref_params)


def test_g_values():
    p0 = WaveParameters(b=2.0, a=0.0, E=0.0, c=1.0)
    assert eval_g(1.0 / 3.0, p0) == pytest.approx(4.0 / 27.0, abs=1e-15)
    p = WaveParameters(b=2.0, a=0.37, E=0.0, c=1.0)
    assert eval_g(0.0, p) == -0.37


def test_g_second_derivative_at_critical_point():
    # -b c (b c/(b+1))^(b-2) = -2 for b = 2, c = 1
    p = WaveParameters(b=2.0, a=0.1, E=0.0, c=1.0)
    h = 1e-5
    x = 1.0 / 3.0
    d2 = (eval_g(x + h, p) - 2 * eval_g(x, p) + eval_g(x - h, p)) / h**2
    assert d2 == pytest.approx(-2.0, abs=1e-5)


def test_critical_points_against_bisection(ref_params):
    scan = critical_points(ref_params)
    g = lambda phi: eval_g(phi, ref_params)
    phi1 = bisect(g, 1e-12, 1.0 / 3.0)
    phi2 = bisect(g, 1.0 / 3.0, 1.0 - 1e-9)
    assert scan.phi1 == pytest.approx(phi1, abs=1e-10)
    assert scan.phi2 == pytest.approx(phi2, abs=1e-10)
    assert scan.phi1 == pytest.approx(0.1331, abs=1e-3)
    assert scan.phi2 == pytest.approx(0.5873, abs=1e-3)
    assert abs(g(scan.phi1)) < 1e-12 and abs(g(scan.phi2)) < 1e-12
    assert scan.V_phi2 < scan.V_phi1
    assert 0 < scan.phi1 < 1.0 / 3.0 < scan.phi2 < 1.0


def test_critical_points_merge_at_amax():
    amax = a_max(2.0, 1.0)
    scan = critical_points(WaveParameters(b=2.0, a=amax * (1 - 1e-8), E=0.0, c=1.0))
    assert scan.phi1 == pytest.approx(1.0 / 3.0, abs=1e-3)
    assert scan.phi2 == pytest.approx(1.0 / 3.0, abs=1e-3)


def test_critical_points_b3():
    assert a_max(3.0, 1.0) == pytest.approx(27.0 / 256.0, abs=1e-15)
    scan = critical_points(WaveParameters(b=3.0, a=0.05, E=0.0, c=1.0))
    assert scan.phi1 < 0.25 < scan.phi2


def test_critical_points_rejects_bad_a():
    with pytest.raises(NotInExistenceSet):
        critical_points(WaveParameters(b=2.0, a=0.2, E=0.0, c=1.0))
    with pytest.raises(NotInExistenceSet):
        critical_points(WaveParameters(b=2.0, a=-0.1, E=0.0, c=1.0))


def test_g_prime_signs(ref_params):
    scan = critical_points(ref_params)
    h = 1e-7
    dg1 = (eval_g(scan.phi1 + h, ref_params) - eval_g(scan.phi1 - h, ref_params)) / (2 * h)
    dg2 = (eval_g(scan.phi2 + h, ref_params) - eval_g(scan.phi2 - h, ref_params)) / (2 * h)
    assert dg1 > 0 > dg2


def test_potential_stationary_at_critical_points(ref_params):
    # independent finite differencing of eval_potential
    scan = critical_points(ref_params)
    h = 1e-6
    for phi in (scan.phi1, scan.phi2):
        dV = (eval_potential(phi + h, ref_params)
              - eval_potential(phi - h, ref_params)) / (2 * h)
        assert abs(dV) < 1e-10


def test_existence_reference(ref_params):
    res = existence_check(ref_params)
    assert res.ok and res.reason is None
    assert res.scan.V_phi2 == pytest.approx(0.0699, abs=2e-4)
    assert res.scan.V_phi1 == pytest.approx(0.1065, abs=2e-4)


def test_existence_rejects_large_a():
    res = existence_check(WaveParameters(b=2.0, a=0.2, E=0.09, c=1.0))
    assert not res.ok and "a outside" in res.reason


def test_existence_boundary_excluded(ref_scan):
    p = WaveParameters(b=2.0, a=0.1, E=ref_scan.V_phi2, c=1.0)
    res = existence_check(p)
    assert not res.ok
    assert res.scan is not None  # scan still reported for rejected energies


def test_existence_rejects_nonpositive_c():
    res = existence_check(WaveParameters(b=2.0, a=0.1, E=0.09, c=-1.0))
    assert not res.ok


def test_existence_deterministic(ref_params):
    r1 = existence_check(ref_params)
    r2 = existence_check(ref_params)
    assert r1 == r2


def test_amax_monotone_in_c():
    cs = np.linspace(0.3, 3.0, 12)
    for b in (1.5, 2.0, 3.0, 4.0):
        vals = [a_max(b, c) for c in cs]
        assert np.all(np.diff(vals) > 0)
