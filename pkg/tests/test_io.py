import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from twophoton import io
from twophoton.errors import BioSignalFormatError, DataIntegrityError, HeaderParseError, SizeMismatchError
from twophoton.stack import ImageStack, StimSchedule

from conftest import random_stack


def _write_raw(tmp_path, header, values, name="s"):
    (tmp_path / f"{name}.json").write_text(json.dumps(header))
    (tmp_path / f"{name}.bin").write_bytes(np.asarray(values, dtype="<f4").tobytes())
    return tmp_path / f"{name}.json"


HEADER = {"channels": 1, "frames": 1, "rows": 1, "cols": 2, "dtype": "f32le", "frame_period_s": 0.125}


class TestStackFiles:
    def test_minimal_load(self, tmp_path):
        s = io.load_stack(_write_raw(tmp_path, HEADER, [1.0, 2.0]))
        assert s.shape == (1, 1, 1, 2)
        np.testing.assert_array_equal(s.data.ravel(), [1.0, 2.0])
        assert s.frame_period_s == 0.125

    def test_payload_is_little_endian_row_major(self, tmp_path, rng):
        s = random_stack(rng)
        io.save_stack(s, tmp_path / "x.json")
        raw = (tmp_path / "x.bin").read_bytes()
        assert raw == s.data.astype("<f4").tobytes(order="C")
        assert len(raw) == 2 * 3 * 4 * 5 * 4

    def test_roundtrip_bit_exact(self, tmp_path, rng):
        s = random_stack(rng)
        io.save_stack(s, tmp_path / "x.json")
        back = io.load_stack(tmp_path / "x.json")
        assert back == s
        assert back.data.tobytes() == s.data.tobytes()

    def test_overwrite(self, tmp_path, rng):
        io.save_stack(random_stack(rng), tmp_path / "x.json")
        s2 = random_stack(rng, shape=(1, 2, 2, 2))
        io.save_stack(s2, tmp_path / "x.json")
        assert io.load_stack(tmp_path / "x.json") == s2

    def test_empty_path_is_write_error(self, rng):
        with pytest.raises(OSError):
            io.save_stack(random_stack(rng), "")

    def test_missing_directory_is_write_error(self, tmp_path, rng):
        with pytest.raises(OSError):
            io.save_stack(random_stack(rng), tmp_path / "nope" / "x.json")

    def test_size_mismatch(self, tmp_path):
        h = dict(HEADER, cols=4)
        with pytest.raises(SizeMismatchError):
            io.load_stack(_write_raw(tmp_path, h, [1.0, 2.0, 3.0]))

    def test_nan_payload(self, tmp_path):
        with pytest.raises(DataIntegrityError):
            io.load_stack(_write_raw(tmp_path, HEADER, [1.0, np.nan]))

    def test_inf_payload(self, tmp_path):
        with pytest.raises(DataIntegrityError):
            io.load_stack(_write_raw(tmp_path, HEADER, [np.inf, 0.0]))

    def test_malformed_json(self, tmp_path):
        (tmp_path / "s.json").write_text("{channels: 1")
        (tmp_path / "s.bin").write_bytes(b"")
        with pytest.raises(HeaderParseError):
            io.load_stack(tmp_path / "s.json")

    @pytest.mark.parametrize("bad", [
        {"dtype": "f64le"},
        {"rows": 0},
        {"cols": 1.5},
        {"frame_period_s": -1},
    ])
    def test_bad_header_fields(self, tmp_path, bad):
        with pytest.raises(HeaderParseError):
            io.load_stack(_write_raw(tmp_path, dict(HEADER, **bad), [1.0, 2.0]))

    def test_missing_header_field(self, tmp_path):
        h = dict(HEADER)
        del h["rows"]
        with pytest.raises(HeaderParseError):
            io.load_stack(_write_raw(tmp_path, h, [1.0, 2.0]))

    def test_error_classes_are_value_errors(self):
        for cls in (HeaderParseError, SizeMismatchError, DataIntegrityError):
            assert issubclass(cls, ValueError)

    @settings(max_examples=25, deadline=None)
    @given(hnp.arrays(np.float32, hnp.array_shapes(min_dims=4, max_dims=4, max_side=4),
                      elements=st.floats(0, 1e6, width=32)))
    def test_roundtrip_property(self, tmp_path_factory, data):
        p = tmp_path_factory.mktemp("rt") / "s.json"
        s = ImageStack(data)
        io.save_stack(s, p)
        assert io.load_stack(p).data.tobytes() == data.tobytes()


class TestBioSignal:
    def test_rate_inferred(self, tmp_path):
        p = tmp_path / "hr.csv"
        p.write_text("time_s,value\n0.000,300\n0.001,301\n")
        sig = io.load_biosignal(p)
        assert sig.sample_rate_hz == 1000.0
        np.testing.assert_array_equal(sig.samples, [300, 301])

    def test_single_row_rejected(self, tmp_path):
        p = tmp_path / "hr.csv"
        p.write_text("time_s,value\n0.0,300\n")
        with pytest.raises(BioSignalFormatError):
            io.load_biosignal(p)

    def test_unsorted_rejected(self, tmp_path):
        p = tmp_path / "hr.csv"
        p.write_text("time_s,value\n0.0,1\n0.002,2\n0.001,3\n")
        with pytest.raises(BioSignalFormatError, match="increasing"):
            io.load_biosignal(p)

    def test_non_numeric_rejected(self, tmp_path):
        p = tmp_path / "hr.csv"
        p.write_text("time_s,value\n0.0,1\n0.001,abc\n")
        with pytest.raises(BioSignalFormatError, match="non-numeric"):
            io.load_biosignal(p)

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "hr.csv"
        p.write_text("t,v\n0.0,1\n0.001,2\n")
        with pytest.raises(BioSignalFormatError):
            io.load_biosignal(p)

    def test_save_load_roundtrip(self, tmp_path):
        from twophoton.stack import BioSignal

        sig = BioSignal(1000.0, np.array([300.5, 301.25, 299.0]))
        io.save_biosignal(sig, tmp_path / "b.csv")
        back = io.load_biosignal(tmp_path / "b.csv")
        assert back.sample_rate_hz == 1000.0
        np.testing.assert_array_equal(back.samples, sig.samples)


class TestSchedule:
    def test_roundtrip(self, tmp_path):
        s = StimSchedule([1.0, 25.5, 50.0])
        io.save_schedule(s, tmp_path / "sch.csv")
        assert (tmp_path / "sch.csv").read_text().splitlines()[0] == "trial_start_s"
        assert io.load_schedule(tmp_path / "sch.csv").trial_starts_s == s.trial_starts_s


class TestPgm:
    def test_scaling(self, tmp_path):
        io.export_pgm(np.array([[0, 1], [2, 3]]), tmp_path / "m.pgm")
        raw = (tmp_path / "m.pgm").read_bytes()
        assert raw.startswith(b"P5\n2 2\n65535\n")
        assert io.read_pgm(tmp_path / "m.pgm").ravel().tolist() == [0, 21845, 43690, 65535]

    def test_big_endian_payload(self, tmp_path):
        io.export_pgm(np.array([[0.0, 1.0]]), tmp_path / "m.pgm")
        raw = (tmp_path / "m.pgm").read_bytes()
        assert raw[-4:] == b"\x00\x00\xff\xff"

    def test_constant_is_zero(self, tmp_path):
        io.export_pgm(np.array([[5.0, 5.0]]), tmp_path / "m.pgm")
        assert io.read_pgm(tmp_path / "m.pgm").tolist() == [[0, 0]]

    def test_single_pixel(self, tmp_path):
        io.export_pgm(np.array([[7.0]]), tmp_path / "m.pgm")
        assert io.read_pgm(tmp_path / "m.pgm").tolist() == [[0]]

    def test_rejects_nan(self, tmp_path):
        with pytest.raises(ValueError):
            io.export_pgm(np.array([[np.nan]]), tmp_path / "m.pgm")

    @settings(max_examples=30, deadline=None)
    @given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=7),
                      elements=st.floats(-1e6, 1e6)))
    def test_grammar(self, m):
        raw = io.pgm_bytes(m)
        rows, cols = m.shape
        header = f"P5\n{cols} {rows}\n65535\n".encode()
        assert raw[:len(header)] == header
        assert len(raw) - len(header) == rows * cols * 2
        vals = np.frombuffer(raw[len(header):], dtype=">u2")
        if m.max() > m.min():
            assert vals.min() == 0 and vals.max() == 65535
        else:
            assert not vals.any()


class TestCsv:
    def test_series(self, tmp_path):
        io.export_csv_series([1.5, 2.5], tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().splitlines() == ["value", "1.5", "2.5"]

    def test_empty_series(self, tmp_path):
        io.export_csv_series([], tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text() == "value\n"

    def test_pairs(self, tmp_path):
        io.export_csv_pairs([(0.1, 0.2)], tmp_path / "p.csv")
        assert (tmp_path / "p.csv").read_text().splitlines() == ["x,y", "0.1,0.2"]

    def test_full_precision(self, tmp_path):
        v = 1.0 / 3.0
        io.export_csv_series([v], tmp_path / "s.csv")
        text = (tmp_path / "s.csv").read_text().splitlines()[1]
        assert float(text) == v
        assert len(text.replace("0.", "", 1)) >= 9
