import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spolight.errors import DomainError, MalformedStreamError
from spolight.stream import BinnedCountStream, load_stream, save_stream, write_stream_csv

HEADER1 = "# spolight-binned v1\n# bin_width_ns=12.5\n# channels=1\nbin,ch1\n"


def test_dense_round_trip():
    s = BinnedCountStream.from_dense(12.5, [0, 2, 0, 1], [1, 0, 0, 3])
    assert s.n_channels == 2 and s.n_bins == 4
    np.testing.assert_array_equal(s.dense(0), [0, 2, 0, 1])
    np.testing.assert_array_equal(s.channels[1], [1, 0, 0, 3])
    assert s.total(1) == 4 and s.mean(0) == 0.75


def test_from_bin_indices():
    s = BinnedCountStream.from_bin_indices(10.0, 6, np.array([0, 0, 3, 5, 5, 5]))
    np.testing.assert_array_equal(s.dense(), [2, 0, 0, 1, 0, 3])


def test_segment():
    s = BinnedCountStream.from_dense(1.0, np.arange(10))
    seg = s.segment(3, 7)
    np.testing.assert_array_equal(seg.dense(), [3, 4, 5, 6])
    with pytest.raises(DomainError):
        s.segment(5, 11)


def test_validation():
    with pytest.raises(DomainError):
        BinnedCountStream.from_dense(12.5, [1, 2], [1])
    with pytest.raises(DomainError):
        BinnedCountStream.from_dense(12.5, [1, -1])
    with pytest.raises(DomainError):
        BinnedCountStream.from_dense(0.0, [1])
    with pytest.raises(DomainError):
        BinnedCountStream.from_dense(1.0, [1], [1], [1])


def test_exact_format(tmp_path):
    s = BinnedCountStream.from_dense(12.5, [0, 2, 0], [1, 0, 0])
    buf = io.StringIO()
    write_stream_csv(s, buf)
    assert buf.getvalue() == (
        "# spolight-binned v1\n# bin_width_ns=12.5\n# channels=2\nbin,ch1,ch2\n0,0,1\n1,2,0\n2,0,0\n"
    )


def test_integer_width_has_no_trailing_point():
    buf = io.StringIO()
    write_stream_csv(BinnedCountStream.from_dense(25.0, [1]), buf)
    assert "# bin_width_ns=25\n" in buf.getvalue()


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=60),
    st.sampled_from([12.5, 1.0, 0.25, 100.0]),
    st.integers(1, 7),
)
def test_file_round_trip(tmp_path_factory, rows, width, chunk):
    a = [r[0] for r in rows]
    b = [r[1] for r in rows]
    s = BinnedCountStream.from_dense(width, a, b)
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    with open(path, "w", newline="") as fh:
        write_stream_csv(s, fh, chunk=chunk)
    assert load_stream(path).equals(s)


def test_single_channel_round_trip(tmp_path):
    s = BinnedCountStream.from_dense(12.5, [0, 0, 7, 0])
    save_stream(s, tmp_path / "a.csv")
    assert load_stream(tmp_path / "a.csv").equals(s)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_stream(tmp_path / "nope.csv")


BAD_BODIES = {
    "empty": "",
    "gap": "0,1\n2,1\n",
    "start_at_one": "1,1\n",
    "negative": "0,-1\n",
    "fraction": "0,1.5\n",
    "missing_value": "0,\n",
    "short_row": "0\n",
    "extra_field": "0,1,2\n",
    "text": "0,a\n",
    "crlf": "0,1\r\n1,0\r\n",
}


@pytest.mark.parametrize("name", sorted(BAD_BODIES))
def test_malformed_bodies(tmp_path, name):
    path = tmp_path / "b.csv"
    path.write_bytes((HEADER1 + BAD_BODIES[name]).encode())
    with pytest.raises(MalformedStreamError):
        load_stream(path)


BAD_HEADERS = {
    "magic": HEADER1.replace("v1", "v2"),
    "width_text": HEADER1.replace("12.5", "abc"),
    "width_zero": HEADER1.replace("12.5", "0"),
    "width_exp": HEADER1.replace("12.5", "1e1"),
    "channels": HEADER1.replace("channels=1", "channels=3"),
    "column_names": HEADER1.replace("bin,ch1", "bin,counts"),
    "channel_mismatch": HEADER1.replace("channels=1", "channels=2"),
    "crlf_header": HEADER1.replace("\n", "\r\n"),
    "truncated": "# spolight-binned v1\n",
}


@pytest.mark.parametrize("name", sorted(BAD_HEADERS))
def test_malformed_headers(tmp_path, name):
    path = tmp_path / "h.csv"
    path.write_bytes((BAD_HEADERS[name] + "0,1\n").encode())
    with pytest.raises(MalformedStreamError):
        load_stream(path)
