import numpy as np
import pytest

from nnsph.engine import DIAGNOSTIC_COLUMNS
from nnsph.frames import (HEADER_SIZE, MAGIC, RECORD_SIZE, DiagnosticsWriter, FrameRecord, FrameWriter, IoError,
                          decode_frame, encode_frame, frame_path, ply_text, read_diagnostics, read_frame, write_frame)


def random_record(rng, n, frame=3):
    return FrameRecord(frame, 0.125, rng.normal(size=(n, 3)), rng.normal(size=(n, 3)), rng.uniform(0, 50, n),
                       rng.uniform(0, 1e3, n), rng.uniform(0, 0.1, n), rng.integers(0, 8, n))


def assert_same(a: FrameRecord, b: FrameRecord):
    assert (a.frame, a.time, a.count) == (b.frame, b.time, b.count)
    for name in ("position", "velocity", "temperature", "mu", "plastic_norm", "material_id"):
        x, y = getattr(a, name), getattr(b, name)
        assert x.dtype == y.dtype
        assert x.tobytes() == y.tobytes()


def test_layout_constants():
    assert HEADER_SIZE == 20
    assert RECORD_SIZE == 38
    assert MAGIC == b"NNS1"


def test_empty_frame_is_header_only(tmp_path):
    rec = FrameRecord(0, 0.0, np.empty((0, 3)), np.empty((0, 3)), [], [], [], [])
    path = write_frame(rec, tmp_path / "f.bin")
    data = path.read_bytes()
    assert len(data) == HEADER_SIZE
    assert data[:4] == MAGIC
    assert int.from_bytes(data[16:20], "little") == 0
    assert read_frame(path).count == 0


def test_thousand_particle_frame_size(rng, tmp_path):
    path = write_frame(random_record(rng, 1000), tmp_path / "f.bin")
    assert path.stat().st_size == HEADER_SIZE + 1000 * RECORD_SIZE


def test_round_trip_bitwise(rng, tmp_path):
    rec = random_record(rng, 257)
    back = read_frame(write_frame(rec, tmp_path / "f.bin"))
    assert_same(rec, back)
    assert encode_frame(back) == encode_frame(rec)


def test_header_fields_little_endian(rng):
    data = encode_frame(random_record(rng, 2, frame=7))
    assert int.from_bytes(data[4:8], "little") == 7
    assert np.frombuffer(data[8:16], "<f8")[0] == 0.125
    pos = np.frombuffer(data[20:44], "<f4").reshape(2, 3)
    assert pos.dtype.byteorder in "<="


def test_decode_rejects_garbage(rng):
    good = encode_frame(random_record(rng, 3))
    with pytest.raises(ValueError):
        decode_frame(b"XXXX" + good[4:])
    with pytest.raises(ValueError):
        decode_frame(good[:-1])
    with pytest.raises(ValueError):
        decode_frame(good[:10])


def test_read_errors_carry_path(tmp_path):
    missing = tmp_path / "missing.bin"
    with pytest.raises(IoError) as exc:
        read_frame(missing)
    assert exc.value.path == missing and "missing.bin" in str(exc.value)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nope")
    with pytest.raises(IoError):
        read_frame(bad)


def test_write_error_carries_path(rng, tmp_path):
    target = tmp_path / "no_such_dir" / "f.bin"
    with pytest.raises(IoError) as exc:
        write_frame(random_record(rng, 1), target)
    assert exc.value.path == target
    with pytest.raises(ValueError):
        write_frame(random_record(rng, 1), tmp_path / "f.xyz", fmt="xyz")


def test_ply_export(rng):
    rec = random_record(rng, 5)
    text = ply_text(rec)
    lines = text.splitlines()
    assert lines[0] == "ply" and "element vertex 5" in lines
    body = lines[lines.index("end_header") + 1:]
    assert len(body) == 5
    first = body[0].split()
    assert len(first) == 10
    np.testing.assert_allclose([float(v) for v in first[:3]], rec.position[0], rtol=1e-6)
    assert int(first[-1]) == rec.material_id[0]


def test_frame_writer_writes_every_format(rng, tmp_path):
    with FrameWriter(tmp_path, ("binary", "ply")) as w:
        for k in range(4):
            w.submit(random_record(rng, 10, frame=k))
    for k in range(4):
        assert frame_path(tmp_path, k).is_file()
        assert frame_path(tmp_path, k, "ply").is_file()
    assert read_frame(frame_path(tmp_path, 2)).frame == 2
    assert frame_path(tmp_path, 12).name == "frame_00012.bin"


def test_frame_writer_surfaces_errors(rng, tmp_path):
    w = FrameWriter(tmp_path / "absent")
    w.submit(random_record(rng, 1))
    with pytest.raises(IoError):
        w.close()


def test_diagnostics_round_trip(tmp_path):
    rows = [dict(zip(DIAGNOSTIC_COLUMNS, [k, 0.005 * k, 0.005, 10.0 + k, 1e-3 * k, 1e-4, k % 3, 0.1 / 3]))
            for k in range(5)]
    with DiagnosticsWriter(tmp_path / "d.csv") as d:
        for r in rows:
            d.write(r)
    header = (tmp_path / "d.csv").read_text().splitlines()[0]
    assert header.split(",") == list(DIAGNOSTIC_COLUMNS)
    back = read_diagnostics(tmp_path / "d.csv")
    for c in DIAGNOSTIC_COLUMNS:
        np.testing.assert_array_equal(back[c], [r[c] for r in rows])


def test_diagnostics_bad_path(tmp_path):
    with pytest.raises(IoError):
        DiagnosticsWriter(tmp_path / "x" / "d.csv")
