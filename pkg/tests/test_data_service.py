"""Pruebas de app/services/data_service.py."""

import numpy as np
import pytest

from app.models.solver import Task
from app.services.data_service import (
    DataFormat,
    load_dataset,
    parse_csv,
    parse_libsvm,
    train_test_split,
    write_libsvm,
)
from app.services.errors import DimensionMismatchError, EmptyFileError, ParseError
from conftest import smooth_regression


class TestLibsvm:
    def test_single_line(self, tmp_path):
        path = tmp_path / "one.libsvm"
        path.write_text("1 1:0.5 3:2.0\n")
        dataset = parse_libsvm(path, Task.CLASSIFY)
        np.testing.assert_array_equal(dataset.X, [[0.5, 0.0, 2.0]])
        np.testing.assert_array_equal(dataset.y, [[1.0]])

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "c.libsvm"
        path.write_text("# cabecera\n\n-1 2:1.5  # fin\n+1 1:-1\n")
        dataset = parse_libsvm(path)
        assert dataset.X.shape == (2, 2)
        np.testing.assert_array_equal(dataset.y[:, 0], [-1.0, 1.0])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.libsvm"
        path.write_text("")
        with pytest.raises(EmptyFileError):
            parse_libsvm(path)

    @pytest.mark.parametrize("line", ["1 a:0.5", "1 0:1.0", "1 2", "x 1:1.0", "1 1:nan"])
    def test_malformed_line_reports_number(self, tmp_path, line):
        path = tmp_path / "bad.libsvm"
        path.write_text(f"1 1:1.0\n{line}\n")
        with pytest.raises(ParseError) as info:
            parse_libsvm(path)
        assert info.value.line_number == 2

    def test_fixed_feature_count(self, tmp_path):
        path = tmp_path / "pad.libsvm"
        path.write_text("0 2:1.0\n")
        assert parse_libsvm(path, n_features=5).X.shape == (1, 5)
        with pytest.raises(DimensionMismatchError):
            parse_libsvm(path, n_features=1)

    def test_write_then_parse(self, tmp_path, rng):
        X = rng.standard_normal((30, 6)) * (rng.random((30, 6)) < 0.4)
        X[:, -1] = 1.0
        y = rng.integers(0, 3, size=(30, 1)).astype(float)
        path = tmp_path / "rt.libsvm"
        write_libsvm(path, X, y)
        dataset = parse_libsvm(path)
        np.testing.assert_array_equal(dataset.X, X)
        np.testing.assert_array_equal(dataset.y, y)


class TestCsv:
    def test_target_first_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.5,0.1,0.2\n-2,3,4\n")
        dataset = parse_csv(path)
        np.testing.assert_array_equal(dataset.X, [[0.1, 0.2], [3.0, 4.0]])
        np.testing.assert_array_equal(dataset.y[:, 0], [1.5, -2.0])

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("y,a,b\n1,2,3\n")
        assert parse_csv(path, header=True).X.shape == (1, 2)

    def test_header_without_flag_fails(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("y,a,b\n1,2,3\n")
        with pytest.raises(ParseError):
            parse_csv(path)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("1,2,3\n1,2\n")
        with pytest.raises(ParseError) as info:
            parse_csv(path)
        assert info.value.line_number == 2

    def test_load_dataset_checks_dimension(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,3\n")
        with pytest.raises(DimensionMismatchError):
            load_dataset(path, DataFormat.CSV, n_features=4)


class TestSplit:
    def test_sizes_and_disjoint(self):
        dataset = smooth_regression(50, seed=0)
        train, test = train_test_split(dataset, 0.2, seed=3)
        assert (train.n, test.n) == (40, 10)
        rows = {tuple(r) for r in train.X} | {tuple(r) for r in test.X}
        assert len(rows) == 50

    def test_reproducible(self):
        dataset = smooth_regression(20, seed=1)
        a, _ = train_test_split(dataset, 0.25, seed=7)
        b, _ = train_test_split(dataset, 0.25, seed=7)
        np.testing.assert_array_equal(a.X, b.X)

    def test_invalid_fraction(self):
        with pytest.raises(ValueError):
            train_test_split(smooth_regression(5), 1.0)
