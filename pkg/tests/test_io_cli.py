"""File formats and the command line front end."""

import math
import struct
import subprocess
import sys

import numpy as np
import pytest

from rubs.cli import main
from rubs.engine import filter_space_invariant
from rubs.oracle import sample_kernel_exact, stripe_image
from rubs.pgmio import (
    quantize,
    read_pgm,
    read_raw_plane,
    write_pgm,
    write_raw_plane,
)


def test_pgm_roundtrip_u8(tmp_path, rng):
    path = tmp_path / "img.pgm"
    data = rng.integers(0, 256, size=(13, 17), dtype=np.uint8)
    write_pgm(path, data, 255)
    back, maxval = read_pgm(path)
    assert maxval == 255
    assert back.dtype == np.uint8
    assert np.array_equal(back, data)


def test_pgm_roundtrip_u16(tmp_path, rng):
    path = tmp_path / "img16.pgm"
    data = rng.integers(0, 40_000, size=(6, 9), dtype=np.uint16)
    write_pgm(path, data, 65535)
    back, maxval = read_pgm(path)
    assert maxval == 65535
    assert back.dtype == np.uint16
    assert np.array_equal(back, data)


def test_pgm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    body = bytes([1, 2, 3, 4, 5, 6])
    path.write_bytes(b"P5 # comment\n# another\n 3\t2 # w h\n255\n" + body)
    data, maxval = read_pgm(path)
    assert maxval == 255
    assert data.shape == (2, 3)
    assert data.tobytes() == body


def test_pgm_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P6 2 2 255\n" + bytes(12))
    with pytest.raises(ValueError):
        read_pgm(bad)
    short = tmp_path / "short.pgm"
    short.write_bytes(b"P5 4 4 255\n" + bytes(3))
    with pytest.raises(ValueError):
        read_pgm(short)
    toolarge = tmp_path / "big.pgm"
    toolarge.write_bytes(b"P5 1 1 70000\n" + bytes(2))
    with pytest.raises(ValueError):
        read_pgm(toolarge)


def test_write_pgm_validates(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "x.pgm", np.zeros((3, 3)), 255)  # float dtype
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "x.pgm",
                  np.full((3, 3), 300, dtype=np.int64), 255)


def test_quantize_rounds_and_clips():
    vals = np.array([-0.2, 0.0, 0.5, 1.5, 2.5, 255.9, 300.0])
    q = quantize(vals, 255)
    # numpy rounds half to even.
    assert list(q) == [0, 0, 0, 2, 2, 255, 255]
    assert q.dtype == np.uint8
    q16 = quantize(np.array([70000.0, 12.3]), 65535)
    assert q16.dtype == np.uint16
    assert list(q16) == [65535, 12]


def test_raw_plane_roundtrip(tmp_path, rng):
    path = tmp_path / "plane.f64"
    data = rng.standard_normal((7, 11))
    write_raw_plane(path, data)
    back = read_raw_plane(path)
    assert np.array_equal(back, data)
    raw = path.read_bytes()
    assert raw[:4] == b"RUF8"
    w, h = struct.unpack("<II", raw[4:12])
    assert (w, h) == (11, 7)


def test_raw_plane_rejects_corrupt(tmp_path):
    bad = tmp_path / "bad.f64"
    bad.write_bytes(b"RUF8" + struct.pack("<II", 4, 4) + bytes(10))
    with pytest.raises(ValueError):
        read_raw_plane(bad)
    wrong = tmp_path / "wrong.f64"
    wrong.write_bytes(b"XXXX" + struct.pack("<II", 1, 1) + bytes(8))
    with pytest.raises(ValueError):
        read_raw_plane(wrong)


def _write_test_image(path, rng, shape=(32, 32)):
    img = (stripe_image(shape, period=6.0, angle=0.5) * 200.0)
    noisy = img + rng.normal(0.0, 10.0, size=shape)
    write_pgm(path, quantize(noisy, 255), 255)
    return noisy


def test_cli_render_kernel_pgm_and_raw(tmp_path):
    out_pgm = tmp_path / "k.pgm"
    rc = main(["render-kernel", "--size", "4", "--elongation", "2.5",
               "--orientation", "0.6", "--out", str(out_pgm)])
    assert rc == 0
    img, maxval = read_pgm(out_pgm)
    assert maxval == 255
    assert img.max() == 255  # peak normalised
    assert img.shape[0] % 2 == 1 and img.shape[1] % 2 == 1

    out_raw = tmp_path / "k.f64"
    rc = main(["render-kernel", "--size", "4", "--elongation", "2.5",
               "--orientation", "0.6", "--step", "0.25", "--out", str(out_raw)])
    assert rc == 0
    plane = read_raw_plane(out_raw)
    assert plane.sum() * 0.25 * 0.25 == pytest.approx(1.0, abs=1e-3)


def test_cli_render_kernel_matches_library(tmp_path):
    from rubs.solver import optimize_scale_vector
    from rubs.geometry import covariance_from_params

    out_raw = tmp_path / "k.f64"
    rc = main(["render-kernel", "--size", "3", "--elongation", "2.0",
               "--orientation", "0.3", "--step", "0.5", "--out", str(out_raw)])
    assert rc == 0
    plane = read_raw_plane(out_raw)
    a = optimize_scale_vector(covariance_from_params(3.0, 2.0, 0.3))
    n = plane.shape[0]
    x = (np.arange(n) - n // 2) * 0.5
    ref = sample_kernel_exact(a, x[None, :], x[:, None])
    assert np.abs(plane - ref).max() < 1e-12


def test_cli_render_kernel_infeasible_exit_code(tmp_path):
    rc = main(["render-kernel", "--size", "2", "--elongation", "50",
               "--orientation", str(math.pi / 8),
               "--out", str(tmp_path / "x.pgm")])
    assert rc == 3


def test_cli_filter_matches_library(tmp_path, rng):
    src = tmp_path / "in.pgm"
    _write_test_image(src, rng)
    dst = tmp_path / "out.f64"
    rc = main(["filter", "--in", str(src), "--out", str(dst),
               "--size", "3", "--elongation", "2", "--orientation", "0.4"])
    assert rc == 0
    got = read_raw_plane(dst)

    from rubs.geometry import covariance_from_params
    from rubs.solver import optimize_scale_vector

    img, maxval = read_pgm(src)
    a = optimize_scale_vector(covariance_from_params(3.0, 2.0, 0.4))
    want = filter_space_invariant(img.astype(float), a)
    assert np.abs(got - want).max() < 1e-9


def test_cli_filter_missing_input_exit_code(tmp_path):
    rc = main(["filter", "--in", str(tmp_path / "nope.pgm"),
               "--out", str(tmp_path / "o.pgm"),
               "--size", "2", "--elongation", "1", "--orientation", "0"])
    assert rc == 4


def test_cli_filter_bad_params_exit_code(tmp_path, rng):
    src = tmp_path / "in.pgm"
    _write_test_image(src, rng)
    rc = main(["filter", "--in", str(src),
               "--out", str(tmp_path / "o.pgm"),
               "--size", "-2", "--elongation", "1", "--orientation", "0"])
    assert rc == 5


def test_cli_adapt_runs(tmp_path, rng):
    src = tmp_path / "noisy.pgm"
    _write_test_image(src, rng)
    dst = tmp_path / "clean.pgm"
    rc = main(["adapt", "--in", str(src), "--out", str(dst),
               "--noise-sigma", "10"])
    assert rc == 0
    img, _ = read_pgm(dst)
    assert img.shape == (32, 32)


def test_cli_lut_build_and_inspect(tmp_path, capsys):
    table = tmp_path / "small.rubs"
    rc = main(["lut-build", "--out", str(table),
               "--rho-points", "8", "--phi-points", "8"])
    assert rc == 0
    capsys.readouterr()
    rc = main(["lut-inspect", "--in", str(table)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "8x8" in text
    assert "worst" in text.lower()


def test_cli_lut_inspect_rejects_bad_file(tmp_path):
    junk = tmp_path / "junk.rubs"
    junk.write_bytes(b"definitely not a table")
    rc = main(["lut-inspect", "--in", str(junk)])
    assert rc == 5


def test_cli_bench_smoke(capsys):
    rc = main(["bench", "--scales", "1,2", "--n", "64", "--runs", "2"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "ratio" in text.lower()


def test_cli_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["filter", "--size", "2"])  # missing required arguments
    assert exc.value.code == 2


def test_console_script_help_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "rubs.cli", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    for sub in ("render-kernel", "filter", "adapt", "bench",
                "lut-build", "lut-inspect"):
        assert sub in proc.stdout
