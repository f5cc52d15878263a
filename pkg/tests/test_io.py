import dataclasses
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mgnss import io
from mgnss.coarse import CoarseConfig
from mgnss.fctn import FctnConfig, FctnRankTable
from mgnss.pipeline import PipelineConfig, RecoveryReport, recover
from mgnss.degradation import apply_mask, make_pixel_mask
from mgnss.synthetic import synthetic_cube


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.lists(st.integers(1, 4), min_size=1, max_size=4).map(tuple),
              elements=st.floats(allow_nan=True, allow_infinity=True)))
def test_tensor_roundtrip_is_bitwise(tmp_path_factory, t):
    path = tmp_path_factory.mktemp("t") / "x.mgt"
    io.save_tensor(path, t)
    back = io.load_tensor(path)
    assert back.shape == t.shape
    assert back.tobytes() == t.tobytes()


def test_tensor_layout_is_first_index_fastest(tmp_path):
    t = np.arange(6, dtype=float).reshape(2, 3)
    io.save_tensor(tmp_path / "a.mgt", t)
    raw = (tmp_path / "a.mgt").read_bytes()
    assert raw[:4] == b"MGT1" and raw[4] == 2
    assert struct.unpack("<2I", raw[5:13]) == (2, 3)
    assert struct.unpack("<6d", raw[13:]) == (0.0, 3.0, 1.0, 4.0, 2.0, 5.0)


def test_mask_roundtrip(tmp_path, rng):
    mask = rng.random((4, 5, 3)) > 0.5
    io.save_mask(tmp_path / "m.mgm", mask)
    raw = (tmp_path / "m.mgm").read_bytes()
    assert len(raw) == 5 + 12 + 60
    np.testing.assert_array_equal(io.load_mask(tmp_path / "m.mgm"), mask)


def test_bad_magic(tmp_path, rng):
    io.save_mask(tmp_path / "m.mgm", rng.random((2, 2)) > 0.5)
    with pytest.raises(io.BadMagicError):
        io.load_tensor(tmp_path / "m.mgm")


def test_truncated_payload_reports_sizes(tmp_path):
    io.save_tensor(tmp_path / "a.mgt", np.zeros((3, 4)))
    raw = (tmp_path / "a.mgt").read_bytes()
    (tmp_path / "b.mgt").write_bytes(raw[:-5])
    with pytest.raises(io.TruncatedFileError) as info:
        io.load_tensor(tmp_path / "b.mgt")
    assert info.value.expected == len(raw)
    assert info.value.actual == len(raw) - 5
    (tmp_path / "c.mgt").write_bytes(raw[:7])
    with pytest.raises(io.TruncatedFileError):
        io.load_tensor(tmp_path / "c.mgt")


def test_trailing_bytes_and_bad_headers(tmp_path):
    io.save_tensor(tmp_path / "a.mgt", np.zeros(2))
    raw = (tmp_path / "a.mgt").read_bytes()
    (tmp_path / "b.mgt").write_bytes(raw + b"\0")
    with pytest.raises(io.FormatError, match="trailing"):
        io.load_tensor(tmp_path / "b.mgt")
    (tmp_path / "c.mgt").write_bytes(b"MGT1\x00")
    with pytest.raises(io.FormatError):
        io.load_tensor(tmp_path / "c.mgt")
    (tmp_path / "d.mgt").write_bytes(b"MGT1\x01" + struct.pack("<I", 0))
    with pytest.raises(io.FormatError):
        io.load_tensor(tmp_path / "d.mgt")
    (tmp_path / "e.mgt").write_bytes(b"MGT1\x03" + struct.pack("<3I", 2**20, 2**20, 2**20))
    with pytest.raises(io.FormatError, match="overflow"):
        io.load_tensor(tmp_path / "e.mgt")


def test_mask_rejects_non_binary_bytes(tmp_path):
    (tmp_path / "m.mgm").write_bytes(b"MGM1\x01" + struct.pack("<I", 3) + b"\x00\x01\x02")
    with pytest.raises(io.FormatError):
        io.load_mask(tmp_path / "m.mgm")


def test_save_rejects_order_zero(tmp_path):
    with pytest.raises(ValueError):
        io.save_tensor(tmp_path / "s.mgt", np.float64(1.0))


def test_import_raw(tmp_path, rng):
    t = rng.random((3, 4, 2))
    (tmp_path / "f.raw").write_bytes(t.astype("<f4").tobytes(order="F"))
    got = io.import_raw(tmp_path / "f.raw", (3, 4, 2), "f4", "F")
    np.testing.assert_allclose(got, t, rtol=1e-7)
    (tmp_path / "c.raw").write_bytes(t.astype("<f8").tobytes(order="C"))
    np.testing.assert_array_equal(io.import_raw(tmp_path / "c.raw", (3, 4, 2), "f8", "C"), t)
    with pytest.raises(io.TruncatedFileError):
        io.import_raw(tmp_path / "c.raw", (3, 4, 3), "f8")


def test_export_band_pgm(tmp_path):
    t = np.zeros((2, 3, 2))
    t[0, 0, 0] = -1.0
    t[1, 2, 1] = 3.0
    t[0, 1, 1] = 1.0
    io.export_band(t, 1, tmp_path / "b.pgm")
    raw = (tmp_path / "b.pgm").read_bytes()
    assert raw.startswith(b"P5\n3 2\n255\n")
    img = io.read_pgm(tmp_path / "b.pgm")
    assert img.shape == (2, 3)
    assert img[1, 2] == 255
    assert img[0, 1] == 128  # (1 - (-1)) / 4 * 255 = 127.5, rounded to even
    assert img[0, 0] == 64
    io.export_band(np.full((2, 2, 1), 5.0), 0, tmp_path / "c.pgm")
    assert np.all(io.read_pgm(tmp_path / "c.pgm") == 0)
    with pytest.raises(ValueError):
        io.export_band(t, 2, tmp_path / "d.pgm")


def test_keyvalue_parse(tmp_path):
    text = "# comment\nw1 = 7\n\ncoarse.alpha = 1, 2, 3   # trailing comment\n"
    assert io.parse_keyvalues(text) == {"w1": "7", "coarse.alpha": "1, 2, 3"}
    with pytest.raises(io.FormatError):
        io.parse_keyvalues("w1 7")


def test_config_roundtrip(tmp_path):
    cfg = PipelineConfig(
        w1=4, stride1=3, iters=2, search_radius=float("inf"), seed=5, normalize_input=False,
        coarse=CoarseConfig(alpha=(1.0, 2.0, 0.5), reweighted=False),
        fctn_init=FctnConfig(ranks=FctnRankTable.from_upper(3, [2, 3, 4]), init_scale=0.5),
        fctn_group=FctnConfig(ranks=FctnRankTable.from_upper(4, [3, 3, 2, 3, 2, 1])))
    io.save_config(tmp_path / "c.cfg", cfg)
    assert io.load_config(tmp_path / "c.cfg") == cfg
    io.save_config(tmp_path / "d.cfg", PipelineConfig())
    assert io.load_config(tmp_path / "d.cfg") == PipelineConfig()


def test_config_errors(tmp_path):
    for text in ["nonsense = 1\n", "coarse.bogus = 1\n", "w1.x = 3\n", "w1 = five\n",
                 "normalize_input = maybe\n"]:
        (tmp_path / "c.cfg").write_text(text)
        with pytest.raises(io.FormatError):
            io.load_config(tmp_path / "c.cfg")


def test_partial_config_keeps_defaults(tmp_path):
    (tmp_path / "c.cfg").write_text("iters = 1\nfctn_group.max_iters = 4\n")
    cfg = io.load_config(tmp_path / "c.cfg")
    assert cfg == dataclasses.replace(PipelineConfig(), iters=1,
                                      fctn_group=FctnConfig(max_iters=4))


def test_report_reloads_as_config(tmp_path):
    truth = synthetic_cube(14, 14, 3)
    mask = make_pixel_mask(truth.shape, 0.4, 0)
    cfg = PipelineConfig(iters=1, coarse=CoarseConfig(max_iters=5),
                         fctn_init=FctnConfig(ranks=2, max_iters=3),
                         fctn_group=FctnConfig(max_iters=3), k_similar=4, seed=9)
    out, report = recover(apply_mask(truth, mask), mask, cfg, truth=truth)
    (tmp_path / "r.txt").write_text(io.report_to_text(report))
    items = io.parse_keyvalues((tmp_path / "r.txt").read_text())
    assert items["stage.0.name"] == "coarse_init"
    assert items["seed"] == "9"
    assert items["rng_algorithm"] == "numpy.random.PCG64"
    assert float(items["realized_rate"]) == report.realized_rate
    assert float(items["metrics.psnr_db"]) == report.metrics.psnr_db
    reloaded = io.load_config(tmp_path / "r.txt")
    assert reloaded == cfg
    again, _ = recover(apply_mask(truth, mask), mask, reloaded)
    np.testing.assert_array_equal(again, out)


def test_report_without_metrics():
    text = io.report_to_text(RecoveryReport(stages=[("coarse_init", 0.5)], realized_rate=0.25))
    assert "metrics." not in text
    assert "stage.0.seconds = 0.5\n" in text
