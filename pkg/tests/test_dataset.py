import math

import numpy as np
import pytest
from helpers import records_match, tree_bytes

from dockkit.core import EpisodeStatus, Trajectory
from dockkit.dataset import (
    DEPTH,
    META,
    RAW_LOG,
    TRAJECTORY,
    episode_id,
    load_json,
    read_episode,
    read_index,
    read_intrinsics,
    read_pgm,
    read_trajectory_csv,
    read_world,
    write_dataset,
    write_episode,
    write_pgm,
    write_trajectory_csv,
    write_world,
)
from dockkit.errors import CorruptArchiveError, MissingComponentError, ParseError
from dockkit.geometry import DepthImage
from dockkit.sim import EpisodeConfig, random_scenario, run_episode


@pytest.fixture(scope="module")
def records():
    rng = np.random.default_rng(2024)
    out = []
    for _ in range(4):
        w, start = random_scenario(rng)
        out.append(run_episode(w, EpisodeConfig(start, seed=int(rng.integers(1000)))))
    return out


def test_episode_roundtrip(records, tmp_path):
    for i, rec in enumerate(records):
        d = tmp_path / episode_id(i)
        manifest = write_episode(rec, d)
        assert set(manifest["files"]) >= {META, DEPTH, RAW_LOG, TRAJECTORY}
        back = read_episode(d)
        assert records_match(rec, back) == []
        lines = (d / TRAJECTORY).read_text().splitlines()
        assert lines[0] == "index,x_m,y_m,cos_psi,sin_psi"
        assert len(lines) - 1 == len(rec.gt_trajectory) == 32
        assert (d / RAW_LOG).read_text().splitlines()[0] == "index,t_s,x_m,y_m,cos_psi,sin_psi"


def test_orientation_norm_after_text_roundtrip(rng, tmp_path):
    h = rng.uniform(-math.pi, math.pi, 500)
    tr = Trajectory(rng.normal(size=(500, 2)) * 100, np.stack([np.cos(h), np.sin(h)], 1))
    write_trajectory_csv(tmp_path / "t.csv", tr)
    back = read_trajectory_csv(tmp_path / "t.csv")
    n = np.hypot(back.orientations[:, 0], back.orientations[:, 1])
    assert np.max(np.abs(n - 1)) <= 1e-6
    assert np.max(np.abs(back.orientations - tr.orientations)) <= 5e-9


def test_missing_depth_file_is_named(records, tmp_path):
    write_episode(records[0], tmp_path)
    (tmp_path / DEPTH).unlink()
    with pytest.raises(MissingComponentError, match="depth.pgm"):
        read_episode(tmp_path)


def test_tampered_orientation_is_corrupt(records, tmp_path):
    write_episode(records[0], tmp_path)
    p = tmp_path / TRAJECTORY
    lines = p.read_text().splitlines()
    f = lines[3].split(",")
    lines[3] = ",".join(f[:3] + ["0.5", "0.5"])
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorruptArchiveError):
        read_episode(tmp_path)


def test_tampered_position_is_corrupt(records, tmp_path):
    write_episode(records[0], tmp_path)
    p = tmp_path / TRAJECTORY
    lines = p.read_text().splitlines()
    f = lines[5].split(",")
    f[1] = "%.9g" % (float(f[1]) + 0.1)
    lines[5] = ",".join(f)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorruptArchiveError, match="resampled"):
        read_episode(tmp_path)


def test_bad_meta_is_corrupt(records, tmp_path):
    write_episode(records[0], tmp_path)
    (tmp_path / META).write_text("{ not json")
    with pytest.raises(CorruptArchiveError):
        read_episode(tmp_path)


def test_dataset_index_and_determinism(records, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    entries = write_dataset(records, a)
    write_dataset(records, b)
    assert read_index(a) == entries
    assert [e[2] for e in entries] == [r.status for r in records]
    assert tree_bytes(a) == tree_bytes(b)
    empty = write_dataset([], tmp_path / "empty")
    assert empty == [] and read_index(tmp_path / "empty") == []


def test_pgm_roundtrip_and_variants(tmp_path):
    data = np.array([[0, 1, 65535], [256, 4097, 7]], dtype=np.uint16)
    img = DepthImage(data, 3, 2)
    write_pgm(tmp_path / "d.pgm", img)
    raw = (tmp_path / "d.pgm").read_bytes()
    assert raw.startswith(b"P5\n3 2\n65535\n")
    assert raw[-4:] == bytes([0x10, 0x01, 0x00, 0x07])  # big-endian samples
    assert read_pgm(tmp_path / "d.pgm") == img
    (tmp_path / "c.pgm").write_bytes(b"P5\n# comment\n2 1\n255\n" + bytes([9, 200]))
    assert np.array_equal(read_pgm(tmp_path / "c.pgm").as_array(), [[9, 200]])
    (tmp_path / "bad.pgm").write_bytes(b"P2\n2 1\n255\n9 200\n")
    with pytest.raises(ParseError):
        read_pgm(tmp_path / "bad.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n2 2\n255\n" + bytes([1]))
    with pytest.raises(ParseError):
        read_pgm(tmp_path / "short.pgm")


def test_world_and_intrinsics_files(records, tmp_path):
    w = records[0].world
    write_world(w, tmp_path / "w.json")
    assert read_world(tmp_path / "w.json") == w
    (tmp_path / "i.json").write_text('{"fx": 1, "fy": 1,\n "cx": 0, "cy": 0,\n "width": 4 "height": 4}')
    with pytest.raises(ParseError) as exc:
        read_intrinsics(tmp_path / "i.json")
    assert exc.value.line == 3
    with pytest.raises(ParseError):
        load_json(tmp_path / "i.json")


def test_status_and_source_preserved(records, tmp_path):
    rec = records[0]
    from dataclasses import replace

    expert = replace(rec, source="expert", status=EpisodeStatus.TIMEOUT, rgb_ref=None)
    write_episode(expert, tmp_path)
    back = read_episode(tmp_path)
    assert (back.source, back.status) == ("expert", EpisodeStatus.TIMEOUT)
    assert records_match(expert, back) == []
