import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multisle.combinat import LinkPattern, enumerate_link_patterns, enumerate_pair_partitions, sign
from multisle.partfn import (
    ISING,
    N2_PATTERNS,
    MethodError,
    PartitionValue,
    PointConfig,
    SleParams,
    b_alpha,
    b_total,
    check_bounds,
    check_cascade_asymptotics,
    gff_prob,
    grad_log_z_ising,
    hafnian_sum,
    poisson_kernel,
    z_ising_pfaffian,
    z_ising_sum,
    z_pure,
    z_symmetric,
)
from multisle.partfn.checks import bounds_suite, gff_suite, identity_suite, random_configs, worst_rows

from .conftest import increasing_points

gaps = st.lists(st.floats(0.05, 20.0), min_size=1, max_size=9)


@st.composite
def configs(draw, min_n=1, max_n=5):
    n = draw(st.integers(min_n, max_n))
    g = draw(st.lists(st.floats(0.02, 50.0), min_size=2 * n - 1, max_size=2 * n - 1))
    start = draw(st.floats(-100.0, 100.0))
    return increasing_points(g, start)


def brute_pfaffian(x):
    """Signed pairing sum written out independently of the library."""
    n = len(x) // 2
    return sum(sign(p) * math.prod(1.0 / (x[b - 1] - x[a - 1]) for a, b in p.pairs)
               for p in enumerate_pair_partitions(n))


# --------------------------------------------------------------- value types


def test_point_config_validation():
    assert PointConfig((0, 1, 2, 3)).n == 2
    assert PointConfig((0, 2, 3, 6)).min_gap == 1.0
    for bad in [(0,), (0, 1, 2), (1, 0), (0, 0), (0, math.inf), ()]:
        with pytest.raises(ValueError):
            PointConfig(bad)


def test_partition_value_log_space():
    v = PartitionValue(-800.0)
    assert v.value == 0.0 or v.value < 1e-300
    assert PartitionValue.from_value(2.0).log_value == pytest.approx(math.log(2.0))
    with pytest.raises(ValueError):
        PartitionValue.from_value(0.0)
    assert PartitionValue(1000.0).value == math.inf


def test_sle_params():
    assert ISING.h == 0.5 and ISING.is_ising
    assert SleParams(2.0).h == 1.0
    for bad in (0.0, -1.0, 6.5):
        with pytest.raises(ValueError):
            SleParams(bad)


# --------------------------------------------------------------- spot values


@pytest.mark.parametrize("x, y, expected", [(0, 1, 1.0), (0, 2, 0.25), (-1, 3, 1 / 16)])
def test_poisson_kernel(x, y, expected):
    assert poisson_kernel(x, y).value == pytest.approx(expected, rel=1e-15)


def test_poisson_kernel_singular():
    with pytest.raises(ValueError):
        poisson_kernel(1.0, 1.0)


@pytest.mark.parametrize("alpha, x, expected", [
    ("1-2,3-4", (0, 1, 2, 3), 1.0),
    ("1-4,2-3", (0, 1, 2, 3), 1 / 3),
    ("1-2", (0, 4), 0.25),
])
def test_b_alpha(alpha, x, expected):
    assert b_alpha(LinkPattern.parse(alpha), x).value == pytest.approx(expected, rel=1e-14)


def test_b_alpha_size_mismatch():
    with pytest.raises(ValueError):
        b_alpha(LinkPattern.parse("1-2"), (0, 1, 2, 3))


@pytest.mark.parametrize("x, expected", [((0, 1), 1.0), ((0, 1, 2, 3), 4 / 3), ((0, 2, 3, 6), 1 / 3)])
def test_b_total(x, expected):
    assert b_total(x).value == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("x, expected", [((0, 1), 1.0), ((0, 1, 2, 3), 13 / 12), ((0, 1, 2, 4), 7 / 12)])
def test_z_ising_sum_and_pfaffian(x, expected):
    assert z_ising_sum(x).value == pytest.approx(expected, rel=1e-14)
    assert z_ising_pfaffian(x).value == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("x, expected", [((0, 1), 1.0), ((0, 1, 2, 4), 49 / 144)])
def test_hafnian(x, expected):
    assert hafnian_sum(x).value == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("j, x, expected", [(1, (0, 1), 1.0), (2, (0, 1), -1.0)])
def test_gradient_examples(j, x, expected):
    assert grad_log_z_ising(j, x) == pytest.approx(expected, rel=1e-14)


def test_gradient_fd_at_0123():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    h = 1e-6
    e = np.array([h, 0, 0, 0])
    fd = (math.log(brute_pfaffian(x + e)) - math.log(brute_pfaffian(x - e))) / (2 * h)
    assert grad_log_z_ising(1, x) == pytest.approx(fd, rel=1e-7)
    with pytest.raises(IndexError):
        grad_log_z_ising(5, x)


@pytest.mark.parametrize("a, b, x, expected", [
    (1, 2, (0, 5), 1.0),
    (1, 2, (0, 1, 2, 3), 0.75),
    (1, 4, (0, 1, 2, 3), 0.25),
])
def test_gff_examples(a, b, x, expected):
    assert gff_prob(a, b, x) == pytest.approx(expected, rel=1e-14)


def test_gff_parity_error():
    with pytest.raises(ValueError):
        gff_prob(1, 3, (0, 1, 2, 3))


# --------------------------------------------------------------- randomized properties


@given(configs(1, 6))
def test_pfaffian_matches_signed_sum(x):
    assert z_ising_pfaffian(x).value == pytest.approx(brute_pfaffian(x), rel=1e-10)
    assert z_ising_sum(x).value == pytest.approx(brute_pfaffian(x), rel=1e-10)


@given(configs(1, 5))
def test_hafnian_identity(x):
    assert hafnian_sum(x).value == pytest.approx(z_ising_sum(x).value ** 2, rel=1e-10)


@given(configs(1, 5))
def test_positivity(x):
    assert z_ising_pfaffian(x).value > 0
    assert z_ising_sum(x).value > 0


@given(configs(1, 5), st.floats(0.01, 100.0), st.floats(-1e3, 1e3))
def test_scaling_and_translation(x, lam, c):
    n = len(x) // 2
    xs = tuple(lam * v for v in x)
    xt = tuple(v + c for v in x)
    assert z_ising_pfaffian(xs).log_value == pytest.approx(z_ising_pfaffian(x).log_value - n * math.log(lam),
                                                           abs=1e-11)
    assert b_total(xs).log_value == pytest.approx(b_total(x).log_value - n * math.log(lam), abs=1e-11)
    assert z_ising_pfaffian(xt).value == pytest.approx(z_ising_pfaffian(x).value, rel=1e-9)
    assert b_total(xt).value == pytest.approx(b_total(x).value, rel=1e-9)


@given(configs(1, 5))
def test_gff_normalisation(x):
    m = len(x)
    for a in range(1, m, 2):
        assert sum(gff_prob(a, b, x) for b in range(2, m + 1, 2)) == pytest.approx(1.0, abs=1e-12)
        for b in range(2, m + 1, 2):
            assert 0 < gff_prob(a, b, x) <= 1 + 1e-15


@given(configs(1, 4))
def test_gradient_matches_finite_differences(x):
    x = np.array(x)
    step = 1e-6 * np.min(np.diff(x))
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = step
        fd = (z_ising_pfaffian(x + e).log_value - z_ising_pfaffian(x - e).log_value) / (2 * step)
        scale = max(abs(grad_log_z_ising(k + 1, x)) for k in range(len(x)))
        assert abs(grad_log_z_ising(j + 1, x) - fd) <= 1e-5 * scale


def test_log_space_survives_extreme_scales():
    x = (0.0, 1e-200, 2e-200, 3e-200)
    lv = z_ising_pfaffian(x).log_value
    assert math.isfinite(lv)
    assert lv == pytest.approx(math.log(13 / 12) + 400 * math.log(10), rel=1e-12)
    assert z_ising_pfaffian(x).value == math.inf


# --------------------------------------------------------------- pure partition functions


def test_z_pure_one_link():
    assert z_pure(LinkPattern.parse("1-2"), (0, 1)).value == 1.0
    assert z_pure(LinkPattern.parse("1-2"), (0, 4)).value == pytest.approx(0.25)
    assert z_pure(LinkPattern.parse("1-2"), (0, 4), SleParams(2.0)).value == pytest.approx(4.0 ** -2)


def test_z_pure_symmetric_configuration():
    x = (0.0, 2.0, 3.0, 6.0)
    ztot = z_ising_pfaffian(x).value
    for alpha in N2_PATTERNS:
        assert z_pure(alpha, x).value / ztot == pytest.approx(0.5, abs=1e-10)


@given(configs(2, 2))
def test_z_pure_sum_equals_pfaffian(x):
    total = sum(z_pure(a, x).value for a in N2_PATTERNS)
    assert total == pytest.approx(z_ising_pfaffian(x).value, rel=1e-6)


@given(configs(2, 2))
def test_strong_bound(x):
    for a in N2_PATTERNS:
        assert 0 < z_pure(a, x).value <= b_alpha(a, x).value * (1 + 1e-9)


@given(configs(2, 2), st.floats(0.1, 10.0), st.floats(-10, 10))
def test_z_pure_covariance(x, lam, c):
    for a in N2_PATTERNS:
        z0 = z_pure(a, x).log_value
        assert z_pure(a, tuple(lam * v + c for v in x)).log_value == pytest.approx(z0 - 2 * math.log(lam), abs=1e-8)


def _pde_residuals(alpha, x, h=1e-4):
    """Second-order PDE residuals of Z_alpha by central differences (kappa = 3)."""
    x = np.array(x, dtype=float)
    kappa, hh = 3.0, 0.5

    def Z(y):
        return z_pure(alpha, y).value

    z0 = Z(x)
    grad = np.empty(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        grad[i] = (Z(x + e) - Z(x - e)) / (2 * h)
    out = []
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        d2 = (Z(x + e) - 2 * z0 + Z(x - e)) / h**2
        r = 0.5 * kappa * d2
        for i in range(4):
            if i != j:
                r += 2.0 / (x[i] - x[j]) * grad[i] - 2.0 * hh / (x[i] - x[j]) ** 2 * z0
        out.append(r / z0)
    return np.array(out)


@pytest.mark.parametrize("x", [(0.0, 1.0, 2.0, 3.0), (0.0, 2.0, 3.0, 6.0), (-1.0, 0.5, 0.7, 4.0)])
@pytest.mark.parametrize("alpha", N2_PATTERNS, ids=str)
def test_z_pure_solves_pde_system(alpha, x):
    assert np.max(np.abs(_pde_residuals(alpha, x))) < 1e-4


@pytest.mark.parametrize("alpha, j", [("1-2,3-4", 1), ("1-2,3-4", 3), ("1-4,2-3", 2)])
def test_asymptotic_refinement(alpha, j):
    a = LinkPattern.parse(alpha)
    base = [0.0, 2.0, 5.0, 9.0]
    devs = []
    for s in (1e-1, 1e-2, 1e-3, 1e-4):
        x = list(base)
        x[j] = x[j - 1] + s
        if j + 1 < 4:
            x[j + 1:] = [v + 3.0 for v in x[j + 1:]]
        rest = [v for k, v in enumerate(x) if k not in (j - 1, j)]
        lhs = s * z_pure(a, x).value
        rhs = (rest[1] - rest[0]) ** -1.0
        devs.append(abs(lhs / rhs - 1))
    assert devs[-1] < 1e-3
    assert all(b <= 1.05 * a + 1e-12 for a, b in zip(devs, devs[1:]))


def test_z_pure_method_errors():
    a2 = LinkPattern.parse("1-2,3-4")
    with pytest.raises(MethodError):
        z_pure(a2, (0, 1, 2, 3), method="closed_form")
    with pytest.raises(MethodError):
        z_pure(a2, (0, 1, 2, 3), SleParams(2.0), method="ode_n2")
    with pytest.raises(MethodError):
        z_pure(a2, (0, 1, 2, 3), method="cascade_mc")
    with pytest.raises(MethodError):
        z_pure(a2, (0, 1, 2, 3), method="bogus")
    with pytest.raises(ValueError):
        z_pure(LinkPattern.parse("1-2"), (0, 1, 2, 3))


def test_z_symmetric():
    assert z_symmetric((0, 1, 2, 3)).value == pytest.approx(13 / 12, rel=1e-12)
    assert z_symmetric((0, 1)).value == 1.0
    assert z_symmetric((0, 2), SleParams(2.0)).value == pytest.approx(2.0 ** -2)
    with pytest.raises(MethodError):
        z_symmetric((0, 1, 2, 3), SleParams(2.0))


# --------------------------------------------------------------- suites


def test_check_bounds_spot():
    rep = check_bounds((0, 1, 2, 3))
    assert rep.ok
    lower = next(r for r in rep.rows if r.check_name == "ising_lower")
    assert lower.lhs == pytest.approx(4 / (3 * math.sqrt(2)))
    assert lower.rhs == pytest.approx(13 / 12)
    upper = next(r for r in rep.rows if r.check_name == "ising_upper")
    assert upper.rhs == pytest.approx(4.0)


def test_check_bounds_single_pair():
    assert check_bounds((0, 1)).ok


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_bounds_suite_random(n):
    x = random_configs(np.random.default_rng(n), 300, n, spread=2.0)
    rep = bounds_suite(x)
    assert rep.ok, rep.first_failure()


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_identity_suite_random(n):
    rep = identity_suite(random_configs(np.random.default_rng(10 + n), 200, n))
    assert rep.ok, rep.first_failure()


def test_identity_suite_flags_impossible_tolerance():
    rep = identity_suite(random_configs(np.random.default_rng(3), 20, 3), tol=1e-20)
    assert not rep.ok


def test_gff_suite_random():
    for n in range(1, 7):
        assert gff_suite(random_configs(np.random.default_rng(n), 100, n)).ok


def test_worst_rows_collapses():
    rep = gff_suite(random_configs(np.random.default_rng(1), 50, 3))
    w = worst_rows(rep)
    assert len(w.rows) == 3
    assert all("worst of 50" in r.config_id for r in w.rows)


@pytest.mark.parametrize("n, tail", [(1, (2.0, 3.0)), (1, (2.0, 3.0, 5.0, 9.0)), (2, (2.0, 3.0)),
                                     (2, ()), (1, ())])
def test_cascade_asymptotics(n, tail):
    res = check_cascade_asymptotics(n, tail)
    assert res.ok, res.first_failure()
    assert res.deviations[-1] < 1e-3


def test_cascade_asymptotics_full_collapse_is_exact():
    res = check_cascade_asymptotics(2, ())
    assert np.allclose(res.ratios, 1.0) and np.allclose(res.deviations, 0.0, atol=1e-12)


def test_cascade_asymptotics_geometry_errors():
    with pytest.raises(ValueError):
        check_cascade_asymptotics(1, (0.05, 3.0))
    with pytest.raises(ValueError):
        check_cascade_asymptotics(1, (2.0, 3.0), separations=(1e-3, 1e-2))
    with pytest.raises(ValueError):
        check_cascade_asymptotics(1, (2.0,))


def test_report_serialisation(tmp_path):
    rep = check_bounds((0, 1, 2, 3))
    text = rep.to_csv(tmp_path / "r.csv")
    header = text.splitlines()[0]
    assert header == "config_id,N,check_name,lhs,rhs,margin,pass"
    # 17 significant digits
    assert "1.0833333333333333" in text
    s = rep.summary()
    assert s["checks_run"] == len(rep.rows) and s["failures"] == []
