"""CSV emission: number formatting, atomic writes and trailers."""

import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mgtlab.csvio import format_value, read_csv, render_csv, write_csv


class TestFormatValue:
    @pytest.mark.parametrize(
        "x,text",
        [
            (None, ""), (True, "true"), (np.bool_(False), "false"), (3, "3"), (np.int64(-7), "-7"),
            (0.1, "0.1"), (np.float64(1e-300), "1e-300"), (math.nan, "nan"), (math.inf, "inf"),
            (-math.inf, "-inf"), (-0.0, "-0.0"), ("b1", "b1"),
        ],
    )
    def test_examples(self, x, text):
        assert format_value(x) == text

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_round_trip(self, x):
        assert float(format_value(x)) == x


class TestRender:
    def test_layout(self):
        text = render_csv(("a", "b"), [(1, 0.5), (None, "x,y")])
        assert text == 'a,b\n1,0.5\n,"x,y"\n'
        assert "\r" not in text

    def test_trailer_verbatim(self):
        text = render_csv(("a",), [(1,)], "# slope=1.5,intercept=0.25,r2=1.0")
        assert text.endswith("\n# slope=1.5,intercept=0.25,r2=1.0\n")

    @pytest.mark.parametrize("trailer", ["slope=1", "# a\n# b"])
    def test_bad_trailer(self, trailer):
        with pytest.raises(ValueError):
            render_csv(("a",), [], trailer)


class TestWrite:
    def test_atomic_and_readable(self, tmp_path):
        path = tmp_path / "out.csv"
        rows = [(0.1, 1, "b0"), (1 / 3, 2, "b1")]
        write_csv(path, ("x", "n", "branch"), rows, "# note")
        assert os.listdir(tmp_path) == ["out.csv"]
        header, body = read_csv(path)
        assert header == ["x", "n", "branch"]
        assert [float(r[0]) for r in body] == [0.1, 1 / 3]
        assert path.read_bytes().count(b"\r") == 0

    def test_overwrite(self, tmp_path):
        path = tmp_path / "out.csv"
        write_csv(path, ("x",), [(1,)])
        write_csv(path, ("x",), [(2,)])
        assert read_csv(path) == (["x"], [["2"]])

    def test_failure_leaves_no_temp(self, tmp_path):
        class Boom:
            def __str__(self):
                raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            write_csv(tmp_path / "out.csv", ("x",), [(Boom(),)])
        assert os.listdir(tmp_path) == []

    def test_missing_directory(self, tmp_path):
        with pytest.raises(OSError):
            write_csv(tmp_path / "nope" / "out.csv", ("x",), [])
