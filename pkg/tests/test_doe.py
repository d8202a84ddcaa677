import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxwing_doe.doe import (
    DesignError,
    DesignMatrix,
    ccf,
    deduplicate,
    full_factorial,
    read_design_csv,
    write_design_csv,
)


@pytest.mark.parametrize("n", range(1, 13))
def test_full_factorial_size_and_distinct(n):
    d = full_factorial(n)
    assert len(d) == 2**n
    assert len({r.tobytes() for r in d.rows}) == 2**n
    assert set(np.unique(d.rows)) == {-1.0, 1.0}


def test_full_factorial_order():
    np.testing.assert_array_equal(full_factorial(1).rows, [[-1], [1]])
    np.testing.assert_array_equal(full_factorial(2).rows, [[-1, -1], [-1, 1], [1, -1], [1, 1]])


def test_prp300_factorial(prp300):
    d = full_factorial(prp300)
    assert len(d) == 512
    assert d.variable_labels == prp300.labels


def test_row_cap():
    with pytest.raises(DesignError, match="row cap"):
        full_factorial(5, row_cap=16)
    with pytest.raises(DesignError):
        full_factorial(0)


def test_ccf_accounting(prp300):
    d = ccf(prp300, center_replicates=8)
    assert len(d) == 538
    assert d.counts() == {"factorial": 512, "center": 8, "axial_face": 18}
    assert len(deduplicate(d)) == 531


def test_ccf_two_variables():
    d = ccf(2)
    expected = [[-1, -1], [-1, 1], [1, -1], [1, 1], [0, 0], [-1, 0], [1, 0], [0, -1], [0, 1]]
    np.testing.assert_array_equal(d.rows, expected)
    d.check_tags()


def test_ccf_needs_a_centre():
    with pytest.raises(DesignError):
        ccf(3, center_replicates=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(1, 6))
def test_ccf_counts(n, r):
    d = ccf(n, r)
    assert len(d) == 2**n + r + 2 * n
    assert len(deduplicate(d)) == 2**n + 1 + 2 * n
    axial = d.rows[np.array(d.mask("axial_face"))]
    assert np.all(np.count_nonzero(axial, axis=1) == 1)


def test_one_variable_faces_coincide_with_corners():
    # with a single factor the face points are the two corners
    assert len(deduplicate(ccf(1, 3))) == 3


def test_deterministic():
    a, b = ccf(4, 3), ccf(4, 3)
    assert a.rows.tobytes() == b.rows.tobytes() and a.provenance == b.provenance


def test_deduplicate_identity_and_centres():
    d = full_factorial(3)
    assert deduplicate(d) == d
    c = DesignMatrix(("a", "b"), np.zeros((3, 2)), ("center",) * 3)
    assert len(deduplicate(c)) == 1


def test_deduplicate_treats_signed_zero_alike():
    d = DesignMatrix(("a",), np.array([[0.0], [-0.0]]), ("center", "center"))
    assert len(deduplicate(d)) == 1


def test_rows_are_read_only():
    d = full_factorial(2)
    with pytest.raises(ValueError):
        d.rows[0, 0] = 5.0


def test_tag_checks():
    with pytest.raises(DesignError):
        DesignMatrix(("a",), np.array([[0.5]]), ("factorial",)).check_tags()
    with pytest.raises(DesignError):
        DesignMatrix(("a",), np.array([[1.0]]), ("center",)).check_tags()
    with pytest.raises(DesignError):
        DesignMatrix(("a",), np.array([[1.0]]), ("mystery",))
    with pytest.raises(DesignError):
        DesignMatrix(("a",), np.array([[1.0]]), ())


def test_csv_round_trip(tmp_path):
    d = ccf(3, 2)
    path = tmp_path / "d.csv"
    write_design_csv(d, path)
    assert read_design_csv(path) == d
    assert path.read_text().splitlines()[1] == "-1,-1,-1,factorial"


def test_csv_without_provenance_is_external(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x1,x2\n0.5,-1\n1,1\n")
    d = read_design_csv(path)
    assert d.provenance == ("external", "external")
    np.testing.assert_array_equal(d.rows, [[0.5, -1], [1, 1]])


def test_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2\n1\n")
    with pytest.raises(DesignError, match="expected 2 fields"):
        read_design_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DesignError):
        read_design_csv(empty)
