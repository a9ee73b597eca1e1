import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.thresholds import (
    SobolevOrders,
    radial_threshold,
    relation,
    scri_backward_admissible,
    scri_forward_admissible,
    threshold_report,
    thresholds_json,
)

FORWARD = SobolevOrders.from_tuple(3, (0, 0, 1.5, 0, 0))
ZERO = SobolevOrders.from_tuple(2, (0, 0, 0, 0, 0))
BACKWARD = SobolevOrders.from_tuple(0, (2, 3, 0, 3, 2))


def test_worked_examples():
    assert scri_forward_admissible(FORWARD).admissible
    assert not scri_backward_admissible(FORWARD).admissible
    assert not scri_forward_admissible(ZERO).admissible
    assert scri_backward_admissible(BACKWARD).admissible
    assert not scri_forward_admissible(BACKWARD).admissible


def test_forward_rows_cite_one_inequality():
    rep = scri_forward_admissible(FORWARD)
    assert len(rep.rows) == 6
    assert all(r.relation == r.metadata["required"] for r in rep.rows)
    assert {r.halfspace for r in rep.rows} == {1, -1}


def test_forward_critical():
    # 2 s_Tf = m + s_nf - 1
    o = SobolevOrders.from_tuple(3, (1, 0, 1.5, 0, 1))
    rep = scri_forward_admissible(o)
    assert rep.critical and not rep.admissible
    assert any(r.relation == "critical" for r in rep.rows)


def test_backward_critical():
    o = SobolevOrders.from_tuple(4, (2, 3, 0, 3, 2))  # m = s_nf + 1
    rep = scri_backward_admissible(o)
    assert rep.critical and not rep.admissible


def test_radial_examples():
    o = SobolevOrders(2.0)
    row = radial_threshold("A", o)
    assert row.quantity == 2 and row.relation == "above" and row.proposition_tag == "A_first_propagation"
    row = radial_threshold("K", SobolevOrders(1.0, s_nFf=1.0))
    assert row.quantity == 2 and row.relation == "above" and row.proposition_tag == "K_first_propagation"
    row = radial_threshold("R", SobolevOrders(1.0, s_Ff=-0.5))
    assert row.relation == "critical" and row.proposition_tag is None


def test_n_and_c_regimes():
    assert radial_threshold("N", SobolevOrders(0.5)).proposition_tag == "beth_propagation_one"
    assert radial_threshold("N", SobolevOrders(3.0)).proposition_tag == "beth_propagation_two"
    assert radial_threshold("C", SobolevOrders(0.5)).proposition_tag == "C_first_propagation"
    with pytest.raises(ValueError):
        radial_threshold("Q", SobolevOrders(1.0))


def test_r_metadata():
    row = radial_threshold("R", SobolevOrders(1.0, s_Pf=0.2, s_Ff=0.3), regularizer_order=0.5)
    assert row.proposition_tag == "R1"
    assert row.metadata["R1_full"] is True
    assert row.metadata["regularizer_cap_ok"] is True
    assert row.metadata["intermediate_orders"] == pytest.approx([0.2 - 1e-3, 0.3 - 1e-3])
    row = radial_threshold("R", SobolevOrders(1.0, s_Pf=-2, s_Ff=-1))
    assert row.proposition_tag == "R2" and row.metadata["R2_full"] is True


def test_report_families_by_dimension():
    assert {r.family for r in threshold_report(FORWARD, d=1)} == set("RNCK")
    assert len(threshold_report(FORWARD, d=2)) == 10


def test_json_is_canonical():
    a = thresholds_json(FORWARD)
    assert json.loads(a)["scri_forward"]["admissible"] is True
    assert a == thresholds_json(FORWARD)


def test_relation_tolerance():
    assert relation(1.0, 1.0 + 5e-13) == "critical"
    assert relation(1.0, 1.0 + 1e-9) == "below"


def test_rejects_nonfinite():
    with pytest.raises(ValueError):
        SobolevOrders(float("nan"))
    with pytest.raises(ValueError):
        SobolevOrders.from_tuple(1, (0, 0, 0))


def test_never_both_admissible_sweep(rng):
    x = rng.uniform(-5, 5, size=(100_000, 6))
    x[::7, 1:] = np.round(x[::7, 1:] * 2) / 2  # hit critical lines too
    both = 0
    for row in x:
        o = SobolevOrders.from_tuple(row[0], row[1:])
        both += scri_forward_admissible(o).admissible and scri_backward_admissible(o).admissible
    assert both == 0


@given(st.sampled_from(list("ANKCR")), *[st.floats(-5, 5) for _ in range(6)])
def test_regimes_exclusive(fam, m, a, b, c, d, e):
    o = SobolevOrders(m, a, b, c, d, e)
    for hs in (1, -1):
        row = radial_threshold(fam, o, hs)
        if row.relation == "critical":
            assert row.proposition_tag is None
        else:
            assert row.proposition_tag is not None
