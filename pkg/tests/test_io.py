import pytest
from hypothesis import given
from hypothesis import strategies as st

from trackflow.io import DataError, Row, format_rows, parse_rows, rows_to_detections, rows_to_gt


def test_parse_defaults():
    rows = parse_rows("1,-1,10,20,30,40\n2,3,1.5,2.5,3.5,4.5,0.7\n3,4,0,0,1,1,1,-1\n")
    assert rows[0] == Row(1, -1, (10.0, 20.0, 30.0, 40.0), 1.0, 0)
    assert rows[1].conf == 0.7 and rows[1].class_id == 0
    assert rows[2].class_id == 0


def test_parse_skips_blank_and_comments():
    assert parse_rows("# header\n\n0,1,0,0,1,1\n") == [Row(0, 1, (0.0, 0.0, 1.0, 1.0))]


@pytest.mark.parametrize("text", [
    "0,1,0,0,1\n",
    "x,1,0,0,1,1\n",
    "0,1,0,0,0,1\n",
    "-1,1,0,0,1,1\n",
    "0.5,1,0,0,1,1\n",
    "0,1,0,0,1,1,high\n",
])
def test_parse_errors(text):
    with pytest.raises(DataError):
        parse_rows(text)


def test_integer_valued_floats_accepted():
    assert parse_rows("3.0,2.0,0,0,1,1\n")[0].frame == 3


finite = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-3, 1e4, allow_nan=False)
rows = st.lists(st.builds(
    Row,
    st.integers(0, 10_000),
    st.integers(-1, 500),
    st.tuples(finite, finite, positive, positive),
    finite,
    st.integers(0, 9),
))


@given(rows)
def test_roundtrip(rs):
    text = format_rows(rs)
    assert parse_rows(text) == rs
    assert format_rows(parse_rows(text)) == text


def test_canonical_format():
    assert format_rows([Row(3, 1, (1, 2, 3, 4), 0.5, 2)]) == "3,1,1.0,2.0,3.0,4.0,0.5,2\n"


def test_detections_sorted_stably():
    rs = parse_rows("2,-1,0,0,1,1\n0,-1,5,0,1,1\n0,-1,9,0,1,1\n")
    dets = rows_to_detections(rs)
    assert [(d.id, d.frame, d.box[0]) for d in dets] == [(0, 0, 5.0), (1, 0, 9.0), (2, 2, 0.0)]


def test_zero_conf_gt_is_ignored():
    gt = rows_to_gt(parse_rows("0,1,0,0,1,1,0\n0,2,0,0,1,1,1\n"))
    assert [b.ignore for b in gt] == [True, False]
