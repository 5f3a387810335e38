import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multisle.combinat import LinkPattern
from multisle.ising import (
    ALGORITHMS,
    BETA_C,
    LatticePolygon,
    MarkCollision,
    SamplerSettings,
    SpinField,
    TopologyError,
    build_polygon,
    connectivity,
    continuum_ratio,
    estimate_crossing_probs,
    integrated_autocorrelation,
    interfaces_to_svg,
    mark_images,
    run_sweeps,
    sample_spins,
    spins_to_pgm,
    trace_from,
    trace_interfaces,
)
from multisle.loewner import McConfig, make_rng

SQUARE_CORNERS = (0.0, 0.25, 0.5, 0.75)
SIDE_MIDPOINTS = (0.125, 0.375, 0.625, 0.875)
ASYMMETRIC = (0.0625, 0.1875, 0.5, 0.6875)
P12 = LinkPattern.parse("1-2,3-4")
P14 = LinkPattern.parse("1-4,2-3")


def collar(spins):
    m = np.ones(spins.shape, dtype=bool)
    m[1:-1, 1:-1] = False
    return spins[m]


# --------------------------------------------------------------- polygons


def test_build_polygon_examples():
    assert build_polygon(100, SQUARE_CORNERS).marks == (1, 102, 203, 304)
    p = build_polygon(8, (0.0, 0.5))
    assert p.marks == (1, 19) and p.n_links == 1 and p.perimeter == 36


def test_build_polygon_collision():
    with pytest.raises(MarkCollision):
        build_polygon(8, (0.0, 0.001))


@pytest.mark.parametrize("fractions", [(), (0.1,), (0.5, 0.2), (0.0, 1.0), (-0.1, 0.5)])
def test_build_polygon_invalid(fractions):
    with pytest.raises(ValueError):
        build_polygon(8, fractions)


def test_polygon_validation():
    with pytest.raises(MarkCollision):
        LatticePolygon(4, (3, 3))
    with pytest.raises(ValueError):
        LatticePolygon(4, (5, 3))
    with pytest.raises(ValueError):
        LatticePolygon(0, (1, 2))


@pytest.mark.parametrize("fractions", [SQUARE_CORNERS, ASYMMETRIC, (0.1, 0.2, 0.3, 0.6, 0.7, 0.9)])
def test_boundary_alternates(fractions):
    p = build_polygon(16, fractions)
    ring = p.ring_spins
    m = p.marks
    for i, k in enumerate(m):
        assert ring[k] == (1 if i % 2 == 0 else -1)
        assert ring[k - 1] == (-1 if i % 2 == 0 else 1)
    assert np.sum(np.diff(np.concatenate([ring, ring[:1]])) != 0) == len(m)


# --------------------------------------------------------------- sampler


def test_zero_temperature_ground_state():
    p = build_polygon(8, (0.125, 0.625))
    expected = np.where(np.arange(8)[:, None] >= 4, 1, -1) * np.ones((1, 8), dtype=int)
    for seed in range(3):
        f = sample_spins(p, math.inf, 500, "heatbath", seed=seed)
        assert np.array_equal(f.interior, expected)
        assert len(trace_interfaces(f)) == 1


def test_infinite_temperature_is_iid():
    p = build_polygon(64, (0.0, 0.5))
    f = sample_spins(p, 0.0, 1, "heatbath", seed=5)
    s = f.interior.astype(float)
    n = s.size
    assert abs(s.mean()) < 4 / math.sqrt(n)
    corr = np.mean(s[:-1] * s[1:])
    assert abs(corr) < 4 / math.sqrt(s[:-1].size)


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_boundary_spins_never_change(algorithm):
    p = build_polygon(16, ASYMMETRIC)
    f = sample_spins(p, BETA_C, 50, algorithm, seed=2)
    assert np.array_equal(collar(f.spins), collar(p.boundary_spins))
    assert set(np.unique(f.interior)) <= {-1, 1}


def test_sampler_parameter_errors():
    f = sample_spins(build_polygon(4, (0.0, 0.5)), sweeps=1)
    rng = make_rng(0)
    with pytest.raises(ValueError):
        run_sweeps(f, -1.0, 1, "heatbath", rng)
    with pytest.raises(ValueError):
        run_sweeps(f, 1.0, 1, "metropolis", rng)
    with pytest.raises(ValueError):
        run_sweeps(f, 1.0, -1, "heatbath", rng)


def test_sampler_seed_determinism():
    p = build_polygon(16, SQUARE_CORNERS)
    for alg in ALGORITHMS:
        a = sample_spins(p, BETA_C, 20, alg, seed=9)
        b = sample_spins(p, BETA_C, 20, alg, seed=9)
        assert np.array_equal(a.spins, b.spins)


@pytest.mark.parametrize("neighbours", [(1, 1, 1, 1), (1, 1, 1, -1), (1, -1, 1, -1), (-1, -1, -1, 1),
                                        (-1, -1, -1, -1)])
def test_heatbath_conditional_law(neighbours):
    # a single interior site surrounded by four fixed spins
    beta = BETA_C
    poly = build_polygon(1, (0.0, 0.5))
    s = np.zeros((3, 3), dtype=np.int8)
    s[1, 0], s[2, 1], s[1, 2], s[0, 1] = neighbours
    h = sum(neighbours)
    expected = math.exp(beta * h) / (2 * math.cosh(beta * h))
    rng = make_rng(11)
    n = 4000
    plus = 0
    for _ in range(n):
        f = SpinField(poly, s.copy())
        run_sweeps(f, beta, 1, "heatbath", rng)
        plus += f.spins[1, 1] == 1
        assert np.array_equal(collar(f.spins), collar(s))
    se = math.sqrt(expected * (1 - expected) / n)
    assert abs(plus / n - expected) <= 4 * se


def test_magnetization_symmetric_at_criticality():
    p = build_polygon(64, SQUARE_CORNERS)
    rng = make_rng(21)
    f = sample_spins(p, BETA_C, 640, "wolff_frozen_boundary", seed=rng)
    m = np.empty(1000)
    for i in range(m.size):
        run_sweeps(f, BETA_C, 5, "wolff_frozen_boundary", rng)
        m[i] = f.magnetization()
    se = m.std(ddof=1) / math.sqrt(m.size) * math.sqrt(2 * integrated_autocorrelation(m))
    assert abs(m.mean()) <= 3 * se


def test_integrated_autocorrelation():
    rng = np.random.default_rng(0)
    assert integrated_autocorrelation(rng.standard_normal(20000)) == pytest.approx(0.5, abs=0.05)
    # AR(1) with coefficient r has tau = (1 + r) / (2 (1 - r))
    r = 0.8
    x = np.empty(200000)
    x[0] = 0
    e = rng.standard_normal(x.size)
    for i in range(1, x.size):
        x[i] = r * x[i - 1] + e[i]
    assert integrated_autocorrelation(x) == pytest.approx((1 + r) / (2 * (1 - r)), rel=0.1)


# --------------------------------------------------------------- interfaces


def _split_field(L=8):
    p = build_polygon(L, (0.125, 0.625))
    s = p.boundary_spins.copy()
    s[1:L // 2 + 1, 1:-1] = -1
    s[L // 2 + 1:-1, 1:-1] = 1
    return SpinField(p, s)


def test_straight_vertical_interface():
    f = _split_field()
    (tr,) = trace_interfaces(f)
    assert (tr.start, tr.end) == (2, 1)
    assert np.all(tr.path[:, 0] == 4)
    assert list(tr.path[:, 1]) == list(range(8, -1, -1))
    assert str(connectivity([tr])) == "1-2"


def _checkerboard_field():
    # 4 x 4 interior (6 x 6 with the collar), - left and + right, with a
    # checkerboard plaquette at (2, 3) on the interface
    p = build_polygon(4, (0.125, 0.625))
    s = p.boundary_spins.copy()
    s[1:3, 1:5] = -1
    s[3:5, 1:5] = 1
    s[2, 3] = 1
    s[3, 3] = -1
    return SpinField(p, s)


def test_checkerboard_turns_left():
    f = _checkerboard_field()
    (tr,) = trace_interfaces(f)
    # arriving southwards at (2, 3) both east and west are admissible; left is east
    assert tr.path.tolist() == [[2, 4], [2, 3], [3, 3], [3, 2], [2, 2], [2, 1], [2, 0]]
    (tr_r,) = trace_interfaces(f, tie_break="right")
    assert tr_r.path.tolist() == [[2, 4], [2, 3], [1, 3], [1, 2], [2, 2], [2, 1], [2, 0]]


def test_checkerboard_mirrored_walker_agrees():
    f = _checkerboard_field()
    for tb in ("left", "right"):
        fwd = trace_from(f, 2, tb)
        back = trace_from(f, 1, tb)
        assert back.path[::-1].tolist() == fwd.path.tolist()
    with pytest.raises(ValueError):
        trace_from(f, 2, "straight")


def _quadrant_field(plus_quadrants):
    L = 8
    p = build_polygon(L, SIDE_MIDPOINTS)
    s = p.boundary_spins.copy()
    xs, ys = np.meshgrid(np.arange(1, L + 1), np.arange(1, L + 1), indexing="ij")
    right, top = xs > L // 2, ys > L // 2
    quad = {"BL": ~right & ~top, "BR": right & ~top, "TR": right & top, "TL": ~right & top}
    inner = -np.ones((L, L), dtype=np.int8)
    for q in plus_quadrants:
        inner[quad[q]] = 1
    s[1:-1, 1:-1] = inner
    return SpinField(p, s)


@pytest.mark.parametrize("plus, pattern", [(("BR", "TL"), "1-2,3-4"), (("BR", "TL", "BL", "TR"), "1-4,2-3"),
                                           (("BR", "TL", "TR"), "1-4,2-3")])
def test_constructed_connectivity(plus, pattern):
    f = _quadrant_field(plus)
    assert str(connectivity(trace_interfaces(f))) == pattern


def test_connectivity_rejects_crossing():
    from multisle.ising import InterfaceTrace

    z = np.zeros((1, 2), dtype=int)
    with pytest.raises(TopologyError):
        connectivity([InterfaceTrace(z, 1, 3), InterfaceTrace(z, 2, 4)])


@settings(max_examples=30)
@given(st.integers(0, 2**32), st.sampled_from([0.0, 0.3, BETA_C, 1.0]), st.integers(1, 3))
def test_interfaces_exhaust_marks_and_order_independent(seed, beta, n):
    fr = tuple(np.sort(np.random.default_rng(seed).choice(64, 2 * n, replace=False)) / 64)
    p = build_polygon(16, fr)
    f = sample_spins(p, beta, 3, "heatbath", seed=seed)
    traces = trace_interfaces(f)
    ends = sorted([t.start for t in traces] + [t.end for t in traces])
    assert ends == list(range(1, 2 * n + 1))
    alpha = connectivity(traces)
    assert alpha.n_links == n
    # processing the starts in another order, or from the odd ends, changes nothing
    rev = [trace_from(f, i) for i in range(2 * n, 0, -2)][::-1]
    assert all(np.array_equal(a.path, b.path) for a, b in zip(traces, rev))
    odd = [trace_from(f, i) for i in range(1, 2 * n, 2)]
    assert {t.link for t in odd} == {t.link for t in traces}
    by_link = {t.link: t for t in traces}
    for t in odd:
        assert np.array_equal(t.path[::-1], by_link[t.link].path)


def test_interfaces_are_edge_self_avoiding():
    f = sample_spins(build_polygon(32, ASYMMETRIC), BETA_C, 20, "wolff_frozen_boundary", seed=4)
    for t in trace_interfaces(f):
        steps = {tuple(sorted((tuple(a), tuple(b)))) for a, b in zip(t.path[:-1], t.path[1:])}
        assert len(steps) == len(t.path) - 1
        assert np.all(np.abs(np.diff(t.path, axis=0)).sum(axis=1) == 1)


# --------------------------------------------------------------- crossing estimates


def test_single_interface_histogram():
    h = estimate_crossing_probs(build_polygon(8, (0.0, 0.5)), McConfig(n_samples=20, batch_size=10))
    assert h.as_dict() == {"1-2": 1.0}
    assert h.to_csv().splitlines() == ["pattern,count,freq,se", "1-2,20,1,0"]


def test_histogram_frequencies_sum_to_one():
    h = estimate_crossing_probs(build_polygon(16, (0.0, 0.2, 0.4, 0.6, 0.7, 0.9)),
                                McConfig(n_samples=60, batch_size=30))
    assert h.counts.sum() == 60
    assert h.freq.sum() == pytest.approx(1.0)
    assert len(h.patterns) == 5


def test_histogram_batches_independent_of_jobs():
    p = build_polygon(12, ASYMMETRIC)
    a = estimate_crossing_probs(p, McConfig(n_samples=40, batch_size=10, seed=3, jobs=1))
    b = estimate_crossing_probs(p, McConfig(n_samples=40, batch_size=10, seed=3, jobs=2))
    assert np.array_equal(a.counts, b.counts)


def test_wolff_and_heatbath_agree():
    p = build_polygon(32, ASYMMETRIC)
    w = estimate_crossing_probs(p, McConfig(n_samples=2000, batch_size=2000, seed=1),
                                SamplerSettings("wolff_frozen_boundary"))
    hb = estimate_crossing_probs(p, McConfig(n_samples=300, batch_size=300, seed=2),
                                 SamplerSettings("heatbath"))
    k = w.index(P12)
    comb = math.hypot(w.se[k], hb.se[k])
    assert abs(w.freq[k] - hb.freq[k]) <= 3 * comb


def test_sampler_settings_validation():
    with pytest.raises(ValueError):
        SamplerSettings("metropolis")
    with pytest.raises(ValueError):
        SamplerSettings(tie_break="up")
    assert SamplerSettings("heatbath").resolve(8) == (640, 64)
    assert SamplerSettings().resolve(8) == (80, 5)


# --------------------------------------------------------------- continuum oracle


def test_continuum_ratio_symmetric():
    for L in (16, 64):
        p = build_polygon(L, SQUARE_CORNERS)
        assert continuum_ratio(p, P12) == pytest.approx(0.5, abs=1e-10)
        assert continuum_ratio(p, P14) == pytest.approx(0.5, abs=1e-10)


def test_continuum_ratio_asymmetric_value():
    p = build_polygon(64, ASYMMETRIC)
    r = continuum_ratio(p, P12)
    assert r + continuum_ratio(p, P14) == pytest.approx(1.0, abs=1e-12)
    assert r == pytest.approx(0.73421, abs=5e-5)


@pytest.mark.parametrize("moved", [
    (0.3125, 0.4375, 0.75, 0.9375),   # quarter turn
    (0.0, 0.1875, 0.5625, 0.6875),    # half turn, labels shifted by two
    (0.25, 0.4375, 0.8125, 0.9375),   # three quarter turns, labels shifted by two
    (0.3125, 0.5, 0.8125, 0.9375),    # reflection
])
def test_continuum_ratio_square_symmetries(moved):
    base = continuum_ratio(build_polygon(64, ASYMMETRIC), P12)
    assert continuum_ratio(build_polygon(64, moved), P12) == pytest.approx(base, abs=1e-9)


def test_mark_images_increasing_and_one_link():
    x = mark_images(build_polygon(32, ASYMMETRIC))
    assert np.all(np.diff(x) > 0) and np.all(np.isfinite(x))
    assert continuum_ratio(build_polygon(8, (0.0, 0.5)), LinkPattern.parse("1-2")) == 1.0
    with pytest.raises(ValueError):
        continuum_ratio(build_polygon(8, (0.0, 0.5)), P12)


# --------------------------------------------------------------- export


def test_pgm_export(tmp_path):
    f = _split_field()
    data = spins_to_pgm(f, tmp_path / "f.pgm")
    header = b"P5\n10 10\n255\n"
    assert data.startswith(header) and len(data) == len(header) + 100
    assert (tmp_path / "f.pgm").read_bytes() == data
    img = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(10, 10)
    # rows run from the top; + spins are white on the right half
    assert img[0, -1] == 255 and img[-1, 0] == 0


def test_svg_export(tmp_path):
    f = sample_spins(build_polygon(12, ASYMMETRIC), BETA_C, 10, seed=1)
    traces = trace_interfaces(f)
    text = interfaces_to_svg(f, traces, tmp_path / "f.svg")
    root = ET.fromstring(text)
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f"{ns}polyline")) == 2
    assert len(root.findall(f"{ns}rect")) == 14 * 14
