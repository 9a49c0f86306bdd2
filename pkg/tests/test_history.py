from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import four_point_rainflow
from pit2crack.exceptions import ParseError
from pit2crack.history import (CSV_COLUMNS, StrainHistory, UnsupportedRegimeError,
                               histories_to_csv, parse_history_csv, rainflow, reversals,
                               uniaxial_history)

HEADER = ",".join(CSV_COLUMNS)


def _row(loc, step, base=0.0):
    vals = [base + k * 1e-4 for k in range(6)] + [base * 1e3 + k for k in range(6)]
    return ",".join([loc, str(step)] + [repr(v) for v in vals])


def test_parse_two_locations():
    lines = [HEADER] + [_row(loc, s, s) for loc in ("a", "b") for s in (2, 0, 1)]
    hs = parse_history_csv("\n".join(lines).encode())
    assert [h.location_id for h in hs] == ["a", "b"]
    assert all(len(h) == 3 for h in hs)
    # rows are re-ordered by step
    assert hs[0].strain[:, 0].tolist() == [0.0, 1.0, 2.0]
    assert hs[0].stress[1, 5] == pytest.approx(1005.0)


def test_parse_header_only():
    assert parse_history_csv(HEADER + "\n") == []


def test_parse_duplicate_row():
    text = "\n".join([HEADER, _row("a", 0), _row("a", 1), _row("a", 1)])
    with pytest.raises(ParseError) as info:
        parse_history_csv(text)
    assert info.value.row == 4
    assert "duplicate" in str(info.value)


def test_parse_missing_column():
    with pytest.raises(ParseError, match="tyz") as info:
        parse_history_csv(HEADER.replace(",tyz", "") + "\n")
    assert info.value.row == 1


def test_parse_non_numeric():
    bad = _row("a", 1).replace("0.0001", "abc", 1)
    with pytest.raises(ParseError, match="non-numeric") as info:
        parse_history_csv("\n".join([HEADER, _row("a", 0), bad]))
    assert info.value.row == 3


def test_csv_round_trip(material):
    h = uniaxial_history(200, 20, material, 8, 2, location_id="p1")
    (back,) = parse_history_csv(histories_to_csv([h]))
    assert np.array_equal(back.strain, h.strain)
    assert np.array_equal(back.stress, h.stress)


def test_uniaxial_peak_strain(material):
    h = uniaxial_history(260.0, 26.0, material)
    assert h.strain[:, 0].max() == 260.0 / 198000
    assert h.strain[:, 0].max() == pytest.approx(1.3131e-3, rel=1e-4)
    assert np.allclose(h.strain[:, 1] / h.strain[:, 0], -0.3)
    assert np.allclose(h.strain[:, 2] / h.strain[:, 0], -0.3)
    assert np.all(h.strain[:, 3:] == 0) and np.all(h.stress[:, 1:] == 0)


def test_uniaxial_periodic(material):
    h = uniaxial_history(260.0, 26.0, material, points_per_cycle=10, n_cycles=3)
    assert len(h) == 31
    s = h.stress[:, 0]
    assert np.array_equal(s[:10], s[10:20]) and np.array_equal(s[10:20], s[20:30])
    assert h.repeat_count == 3


def test_uniaxial_constant(material):
    h = uniaxial_history(100.0, 100.0, material)
    assert np.ptp(h.strain[:, 0]) == 0
    assert rainflow(h.strain[:, 0]) == []


def test_uniaxial_beyond_yield(material):
    with pytest.raises(UnsupportedRegimeError):
        uniaxial_history(400.0, 40.0, material)


def test_history_needs_two_samples():
    with pytest.raises(ValueError):
        StrainHistory("x", np.zeros((1, 6)), np.zeros((1, 6)))


def _rw(cycles):
    return sorted((c.range, c.weight) for c in cycles)


def test_rainflow_constant_amplitude():
    cyc = rainflow([0, 1, 0, 1, 0])
    assert sorted(_rw(cyc)) == [(1.0, 0.5), (1.0, 0.5), (1.0, 1.0)]
    assert sum(c.weight for c in cyc) == 2.0


def test_rainflow_monotone():
    cyc = rainflow([0.0, 0.5, 2.0, 3.5])
    assert _rw(cyc) == [(3.5, 0.5)]
    assert (cyc[0].i_start, cyc[0].i_end) == (0, 3)


def test_rainflow_hand_worked_example():
    # four-point rule on the ASTM E1049 sequence: only (5, -1, 3, -4) closes
    # the inner pair (-1, 3); everything else is residue
    series = [-2, 1, -3, 5, -1, 3, -4, 4, -2]
    counts = Counter(_rw(rainflow(series)))
    assert counts == Counter({(4.0, 1.0): 1, (3.0, 0.5): 1, (4.0, 0.5): 1, (8.0, 0.5): 2,
                              (9.0, 0.5): 1, (6.0, 0.5): 1})


def test_rainflow_companions():
    series = [0.0, 2.0, 1.0, 3.0, 0.0]
    comp = [10.0, 30.0, 0.0, 20.0, 5.0]
    cyc = rainflow(series, comp)
    full = [c for c in cyc if c.weight == 1.0]
    assert len(full) == 1
    c = full[0]
    assert (c.i_start, c.i_end) == (1, 2)
    assert c.companion_range == (30.0,)
    assert c.companion_mean == (15.0,)


def test_rainflow_plateaus_and_non_reversals():
    idx = reversals([0, 0, 1, 2, 2, 2, 1, 1, 3])
    assert idx.tolist() == [0, 3, 6, 8]


@pytest.mark.parametrize("seed", range(20))
def test_rainflow_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    for _ in range(25):
        n = int(rng.integers(2, 21))
        s = rng.integers(-3, 4, n).astype(float) if rng.random() < 0.5 else rng.normal(size=n)
        assert _rw(rainflow(s)) == four_point_rainflow(s)


series_st = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=40)


@settings(max_examples=300, deadline=None)
@given(series_st)
def test_rainflow_conservation(series):
    x = np.asarray(series)
    rev = x[reversals(x)]
    variation = np.abs(np.diff(rev)).sum() if len(rev) > 1 else 0.0
    total = sum(c.weight * c.range for c in rainflow(x))
    assert total <= variation * (1 + 1e-12) + 1e-9
    assert total == pytest.approx(variation / 2, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(series_st, st.floats(-5, 5).filter(lambda k: abs(k) > 1e-3))
def test_rainflow_scaling(series, k):
    base = rainflow(series)
    scaled = rainflow([k * v for v in series])
    assert len(base) == len(scaled)
    for a, b in zip(base, scaled):
        assert b.range == pytest.approx(abs(k) * a.range, rel=1e-9, abs=1e-9)
        assert (a.i_start, a.i_end, a.weight) == (b.i_start, b.i_end, b.weight)


def test_constant_amplitude_conservation_equality():
    x = np.tile([0.0, 2.0], 6)
    total = sum(c.weight * c.range for c in rainflow(x))
    # each reversal segment is counted once as a half range
    assert total == np.abs(np.diff(x)).sum() / 2
