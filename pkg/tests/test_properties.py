import math

import numpy as np
from hypothesis import given, settings, strategies as st

from fdwlan import channel as ch
from fdwlan.mac import Access, BackoffState, MacParams, on_outcome, random_backoff
from fdwlan.metrics import empirical_cdf, quantile
from fdwlan.sensitivity import MeasurementTable, created_eligible_targets, natural_eligible_pairs
from fdwlan.topology import generate_hex_grid, place_stations

dbm = st.floats(-110, 0, allow_nan=False)


@given(dbm, st.lists(dbm, max_size=4), dbm, st.floats(0.1, 30))
def test_sinr_decreases_with_interference(sig, others, extra, bump):
    base = ch.sinr_db(sig, others + [extra])
    assert ch.sinr_db(sig, others + [extra + bump]) < base
    assert ch.sinr_db(sig, others) >= base


@given(st.floats(1, 500), st.floats(0.01, 100), st.floats(2, 6), st.floats(1, 10))
def test_path_loss_monotone(d, step, n, bp):
    assert ch.path_loss_db(d + step, pathloss_exp=n, breakpoint=bp) > ch.path_loss_db(d, pathloss_exp=n,
                                                                                      breakpoint=bp)


@given(st.floats(-150, 50))
def test_db_roundtrip(x):
    assert math.isclose(float(ch.mw_to_dbm(ch.dbm_to_mw(x))), x, rel_tol=1e-9, abs_tol=1e-9)


@given(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(50, 150))
def test_rsi_monotone_in_rho(r1, r2, sic):
    lo, hi = sorted((r1, r2))
    assert ch.residual_self_interference_dbm(14, sic, hi) <= ch.residual_self_interference_dbm(14, sic, lo)


@st.composite
def tables(draw):
    n = draw(st.integers(2, 6))
    ids = list(range(1, n + 1))
    a = {i: draw(st.floats(-80, -30)) for i in ids}
    b = {}
    for i in ids:
        b[i] = {}
        for j in ids:
            if j != i and draw(st.booleans()):
                b[i][j] = draw(st.floats(-82, -30))
    return MeasurementTable(a, b, draw(st.floats(0.5, 20)))


@given(tables())
def test_adapted_cst_between_neighbour_and_ap(t):
    for p in t.stations:
        for tgt, cst in created_eligible_targets(t, p).items():
            assert t.rssi_neighbor[tgt][p] < cst <= t.rssi_ap[tgt]


@given(tables(), st.floats(0.1, 30))
def test_larger_margin_never_creates_more(t, extra):
    bigger = MeasurementTable(t.rssi_ap, t.rssi_neighbor, t.tolerance + extra)
    for p in t.stations:
        assert set(created_eligible_targets(bigger, p)) <= set(created_eligible_targets(t, p))


@given(tables())
def test_natural_and_created_disjoint(t):
    nat = natural_eligible_pairs(t)
    for p in t.stations:
        for tgt in created_eligible_targets(t, p):
            assert (p, tgt) not in nat


@given(st.integers(2, 64), st.integers(0, 5), st.lists(st.sampled_from(["success", "collision"]), max_size=30),
       st.sampled_from([Access.CA, Access.ECA]), st.integers(0, 2 ** 32 - 1))
def test_backoff_state_machine(cw, m, outcomes, mode, seed):
    p = MacParams(cw_min=cw, max_stage=m)
    rng = np.random.default_rng(seed)
    s = BackoffState(mode, 0, random_backoff(0, p, rng))
    for o in outcomes:
        s = on_outcome(s, o, p, rng)
        assert 0 <= s.stage <= m
        assert 0 <= s.counter < cw * 2 ** s.stage
        if o == "success" and mode is Access.ECA:
            assert s.counter == math.ceil(cw / 2) - 1 and s.stage == 0


@given(st.lists(st.floats(0, 3), min_size=1, max_size=50))
def test_cdf_monotone_in_unit_range(xs):
    cdf = empirical_cdf(xs)
    vals = [v for v, _ in cdf]
    fr = [f for _, f in cdf]
    assert vals == sorted(vals) and fr == sorted(fr)
    assert 0 < fr[0] and fr[-1] == 1.0


@given(st.lists(st.floats(0, 3), min_size=1, max_size=50), st.floats(0, 1))
def test_quantile_is_lower_empirical(xs, q):
    v = quantile(xs, q)
    srt = sorted(xs)
    assert v in srt
    # smallest sample whose CDF value reaches q
    k = srt.index(v)
    assert (srt.index(v) + srt.count(v)) / len(srt) >= q - 1e-12
    assert k == 0 or k / len(srt) < q + 1e-12


@settings(max_examples=25)
@given(st.integers(0, 2), st.floats(5, 60), st.integers(1, 20), st.integers(0, 2 ** 32 - 1))
def test_stations_inside_their_cell(rings, radius, n, seed):
    topo = place_stations(generate_hex_grid(rings, radius), n, radius, np.random.default_rng(seed))
    for ap, stas in zip(topo.ap_positions, topo.sta_positions):
        assert len(stas) == n
        assert np.all(np.hypot(*(stas - ap).T) <= radius * (1 + 1e-12))
