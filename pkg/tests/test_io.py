import numpy as np
import pytest

from grvtest.errors import ValidationError
from grvtest.io import (
    read_distance_matrix,
    read_expression,
    read_genotypes,
    read_table,
    write_matrix,
)


def test_round_trip_with_header_and_ids(tmp_path, rng):
    x = rng.normal(size=(4, 3))
    write_matrix(tmp_path / "x.csv", x, header=["a", "b", "c"], row_ids=["r1", "r2", "r3", "r4"])
    values, ids, header = read_table(tmp_path / "x.csv", id_column=True)
    np.testing.assert_array_equal(values, x)
    assert ids == ["r1", "r2", "r3", "r4"] and header == ["a", "b", "c"]


def test_tab_delimited_without_header(tmp_path):
    (tmp_path / "t.tsv").write_text("1\t2\n3\t4\n")
    values, ids, header = read_table(tmp_path / "t.tsv")
    np.testing.assert_array_equal(values, [[1, 2], [3, 4]])
    assert ids is None and header is None


def test_missing_tokens_become_nan(tmp_path):
    (tmp_path / "m.csv").write_text("1,NA\n.,2\n")
    values, _, _ = read_table(tmp_path / "m.csv")
    assert np.isnan(values[0, 1]) and np.isnan(values[1, 0])


def test_ragged_and_non_numeric(tmp_path):
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(ValidationError, match="ragged"):
        read_table(tmp_path / "r.csv")
    (tmp_path / "n.csv").write_text("a,b\n1,x\n")
    with pytest.raises(ValidationError):
        read_table(tmp_path / "n.csv")
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(ValidationError):
        read_table(tmp_path / "e.csv")


def test_genotype_reader(tmp_path):
    (tmp_path / "g.csv").write_text("s1,s2\n0,1\n2,2\n")
    g = read_genotypes(tmp_path / "g.csv")
    assert g.values.dtype == np.int8
    (tmp_path / "bad.csv").write_text("0,1\nNA,2\n1,NA\n")
    with pytest.raises(ValidationError, match="2 sample rows"):
        read_genotypes(tmp_path / "bad.csv")
    (tmp_path / "frac.csv").write_text("0,0.5\n")
    with pytest.raises(ValidationError):
        read_genotypes(tmp_path / "frac.csv")


def test_expression_and_distance_readers(tmp_path):
    (tmp_path / "e.csv").write_text("id,g1\nA,0.5\nB,1.5\n")
    e = read_expression(tmp_path / "e.csv", id_column=True)
    assert e.ids == ["A", "B"]
    (tmp_path / "d.csv").write_text("a,b\n0,2\n2,0\n")
    d = read_distance_matrix(tmp_path / "d.csv")
    assert d.ids == ("a", "b") and d.values[0, 1] == 2.0
