import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vanetsim.baselines import PdgrConfig, greedy_next_hop, pdgr_next_hop, pdgr_score
from vanetsim.core import CARRY, Forward, Position

from conftest import table_of, vehicle

DEST = Position(1000, 0)


def test_greedy_forwards_on_progress():
    cur = vehicle(0, pos=(0, 0))
    tbl = table_of(0, [(1, (50, 0), (0, 0)), (2, (-40, 0), (0, 0))])
    assert greedy_next_hop(cur, tbl, DEST) == Forward(1)


def test_greedy_carries_at_local_optimum():
    cur = vehicle(0, pos=(0, 0))
    tbl = table_of(0, [(1, (-50, 0), (0, 0)), (2, (0, 100), (0, 0))])
    assert greedy_next_hop(cur, tbl, DEST) is CARRY


def test_empty_tables_carry():
    cur = vehicle(0, pos=(0, 0))
    assert greedy_next_hop(cur, table_of(0, []), DEST) is CARRY
    assert pdgr_next_hop(cur, table_of(0, []), DEST) is CARRY


def test_pdgr_static_closer_neighbor():
    cur = vehicle(0, pos=(0, 0))
    tbl = table_of(0, [(1, (100, 0), (0, 0))])
    # progress 0.1 weighted 0.5, zero velocity gives heading 0
    assert pdgr_score(cur.pos, tbl.get(1), DEST, PdgrConfig()) == pytest.approx(0.05)
    assert pdgr_next_hop(cur, tbl, DEST) == Forward(1)


def test_pdgr_prefers_inbound_neighbor_over_greedy_choice():
    cur = vehicle(0, pos=(0, 0))
    leaving = (1, (200, 0), (-25, 0))   # closest now, driving away
    inbound = (2, (150, 0), (25, 0))    # farther now, heading to the destination
    tbl = table_of(0, [leaving, inbound])
    cfg = PdgrConfig(prediction_horizon=3.0)
    s1 = pdgr_score(cur.pos, tbl.get(1), DEST, cfg)
    s2 = pdgr_score(cur.pos, tbl.get(2), DEST, cfg)
    # predicted: 1 at 125 m, 2 at 225 m
    assert s1 == pytest.approx(0.5 * 0.125 - 0.5)
    assert s2 == pytest.approx(0.5 * 0.225 + 0.5)
    assert greedy_next_hop(cur, tbl, DEST) == Forward(1)
    assert pdgr_next_hop(cur, tbl, DEST, cfg) == Forward(2)


def test_pdgr_config_validation():
    with pytest.raises(ValueError):
        PdgrConfig(prediction_horizon=0)
    with pytest.raises(ValueError):
        PdgrConfig(w_dist=0.7, w_dir=0.7)


def test_static_equivalence_with_distance_only_pdgr():
    """With w_dir = 0 and no motion, PDGR and greedy rank neighbors identically."""
    rng = np.random.default_rng(17)
    cfg = PdgrConfig(w_dist=1.0, w_dir=0.0)
    for _ in range(200):
        k = int(rng.integers(1, 12))
        nbs = [(i + 1, tuple(rng.uniform(-170, 170, 2)), (0.0, 0.0)) for i in range(k)]
        dest = Position(*rng.uniform(-1500, 1500, 2))
        cur = vehicle(0, pos=(0, 0))
        tbl = table_of(0, nbs)
        g = greedy_next_hop(cur, tbl, dest)
        p = pdgr_next_hop(cur, tbl, dest, cfg)
        assert g == p


nb = st.tuples(st.floats(-400, 400), st.floats(-400, 400), st.floats(-25, 25), st.floats(-25, 25))


@given(st.lists(nb, max_size=10), st.floats(-2000, 2000), st.floats(-2000, 2000))
def test_baselines_progress_and_range(nbs, dx, dy):
    cur = vehicle(0, pos=(0, 0))
    dest = Position(dx, dy)
    tbl = table_of(0, [(i + 1, (x, y), (vx, vy)) for i, (x, y, vx, vy) in enumerate(nbs)])
    g = greedy_next_hop(cur, tbl, dest)
    if g is not CARRY:
        chosen = tbl.get(g.next_hop).last_pos
        assert math.dist(chosen, dest) < math.dist(cur.pos, dest)
        assert math.dist(chosen, cur.pos) < 250
    p = pdgr_next_hop(cur, tbl, dest)
    if p is not CARRY:
        assert math.dist(tbl.get(p.next_hop).last_pos, cur.pos) < 250
