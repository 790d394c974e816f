import numpy as np
import pytest
from PIL import Image

from waveletgan.data import (
    ClipWindow,
    SequencePair,
    load_pair,
    load_sequence,
    make_clip_windows,
    parse_manifest,
    random_crop_aligned,
    window_seed,
    windows_from_frames,
    write_frames_png,
)
from waveletgan.errors import IngestError, ManifestError
from waveletgan.synthetic import make_sequence
from waveletgan.wavelet import Frame


def write_gray_pngs(dirpath, arrays):
    dirpath.mkdir(parents=True, exist_ok=True)
    for i, arr in enumerate(arrays):
        Image.fromarray(arr.astype(np.uint8), mode="L").save(dirpath / f"f{i:03d}.png")


# ---------------------------------------------------------------------------
# loading


def test_load_png_directory(tmp_path):
    arrays = [np.full((8, 10), v, dtype=np.uint8) for v in (0, 128, 255)]
    write_gray_pngs(tmp_path / "seq", arrays)
    frames = load_sequence(tmp_path / "seq", qp=32)
    assert len(frames) == 3
    assert [f.index for f in frames] == [0, 1, 2]
    assert all(f.seq_id == "seq" for f in frames)
    assert all(f.qp == 32 for f in frames)
    assert frames[0].samples.dtype == np.float32
    assert frames[0].samples.shape == (8, 10)
    assert frames[0].samples.max() == 0.0
    assert frames[1].samples.flat[0] == pytest.approx(128 / 255)
    assert frames[2].samples.min() == 1.0


def test_load_sorts_by_filename(tmp_path):
    d = tmp_path / "seq"
    d.mkdir()
    for name, v in [("b.png", 20), ("a.png", 10), ("c.png", 30)]:
        Image.fromarray(np.full((4, 4), v, dtype=np.uint8), mode="L").save(d / name)
    frames = load_sequence(d)
    values = [int(round(f.samples.flat[0] * 255)) for f in frames]
    assert values == [10, 20, 30]


def test_load_rgb_png_converts_to_luma(tmp_path):
    d = tmp_path / "seq"
    d.mkdir()
    rgb = np.zeros((4, 4, 3), dtype=np.uint8)
    rgb[..., 0] = 255  # pure red
    Image.fromarray(rgb, mode="RGB").save(d / "f000.png")
    frames = load_sequence(d)
    # ITU-R 601-2: L = 0.299 R + 0.587 G + 0.114 B -> 76/255 for pure red
    assert frames[0].samples.flat[0] == pytest.approx(76 / 255, abs=1 / 255)


def test_load_empty_directory_rejected(tmp_path):
    d = tmp_path / "seq"
    d.mkdir()
    with pytest.raises(IngestError, match="no image files"):
        load_sequence(d)


def test_load_missing_path_rejected(tmp_path):
    with pytest.raises(IngestError, match="no such sequence"):
        load_sequence(tmp_path / "nope")


def test_load_mixed_frame_sizes_rejected(tmp_path):
    d = tmp_path / "seq"
    d.mkdir()
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(d / "a.png")
    Image.fromarray(np.zeros((4, 6), dtype=np.uint8), mode="L").save(d / "b.png")
    with pytest.raises(IngestError, match="size mismatch"):
        load_sequence(d)


def test_load_raw_with_dims(tmp_path):
    raw = tmp_path / "clip.yc"
    data = np.arange(2 * 3 * 4, dtype=np.uint8)
    raw.write_bytes(data.tobytes())
    frames = load_sequence(raw, dims=(4, 3))  # width 4, height 3 -> 2 frames
    assert len(frames) == 2
    assert frames[0].samples.shape == (3, 4)
    assert frames[1].samples.flat[0] == pytest.approx(12 / 255)


def test_load_raw_with_sidecar(tmp_path):
    raw = tmp_path / "clip.yc"
    raw.write_bytes(bytes(range(24)))
    (tmp_path / "clip.yc.dims").write_text("4x6\n")
    frames = load_sequence(raw)
    assert len(frames) == 1
    assert frames[0].samples.shape == (6, 4)


def test_load_raw_size_mismatch_rejected(tmp_path):
    raw = tmp_path / "clip.yc"
    raw.write_bytes(bytes(range(25)))  # not a multiple of 4x6
    with pytest.raises(IngestError, match="multiple"):
        load_sequence(raw, dims=(4, 6))


def test_load_raw_without_dims_rejected(tmp_path):
    raw = tmp_path / "clip.yc"
    raw.write_bytes(bytes(range(24)))
    with pytest.raises(IngestError, match="dims"):
        load_sequence(raw)


def test_load_raw_bad_sidecar_rejected(tmp_path):
    raw = tmp_path / "clip.yc"
    raw.write_bytes(bytes(range(24)))
    (tmp_path / "clip.yc.dims").write_text("garbage\n")
    with pytest.raises(IngestError, match="WxH"):
        load_sequence(raw)


# ---------------------------------------------------------------------------
# pairs and windows


def test_sequence_pair_validates_lengths():
    a = [Frame(samples=np.zeros((4, 4)), index=i) for i in range(3)]
    b = [Frame(samples=np.zeros((4, 4)), index=i) for i in range(2)]
    with pytest.raises(IngestError, match="length mismatch"):
        SequencePair(compressed=a, groundtruth=b, qp=32)


def test_sequence_pair_validates_shapes():
    a = [Frame(samples=np.zeros((4, 4)))]
    b = [Frame(samples=np.zeros((4, 6)))]
    with pytest.raises(IngestError, match="size mismatch"):
        SequencePair(compressed=a, groundtruth=b, qp=32)


def test_clip_windows_edge_replication():
    frames = [Frame(samples=np.full((4, 4), float(i)), index=i) for i in range(3)]
    gt = [Frame(samples=np.full((4, 4), 10.0 + i), index=i) for i in range(3)]
    pair = SequencePair(compressed=frames, groundtruth=gt, qp=0)
    windows = make_clip_windows(pair, n_neighbors=1)
    assert len(windows) == 3

    def vals(w):
        return [int(f.samples.flat[0]) for f in w.neighbors]

    assert vals(windows[0]) == [0, 1]  # t-1 replicated to frame 0
    assert vals(windows[1]) == [0, 2]
    assert vals(windows[2]) == [1, 2]  # t+1 replicated to frame 2
    assert windows[1].groundtruth.samples.flat[0] == 11.0
    assert windows[0].n_neighbors == 1


def test_clip_windows_wide_context():
    frames = [Frame(samples=np.full((4, 4), float(i)), index=i) for i in range(5)]
    windows = windows_from_frames(frames, n_neighbors=2)
    vals = [int(f.samples.flat[0]) for f in windows[0].neighbors]
    assert vals == [0, 0, 1, 2]
    vals = [int(f.samples.flat[0]) for f in windows[4].neighbors]
    assert vals == [2, 3, 4, 4]


def test_clip_windows_validation():
    frames = [Frame(samples=np.zeros((4, 4)))]
    with pytest.raises(ValueError):
        windows_from_frames(frames, n_neighbors=0)
    with pytest.raises(IngestError):
        windows_from_frames([], n_neighbors=1)


# ---------------------------------------------------------------------------
# cropping


def make_window(h=32, w=48):
    frames = make_sequence("s", 3, h, w, seed=1)
    return ClipWindow(target=frames[1], neighbors=[frames[0], frames[2]],
                      groundtruth=frames[1])


def test_crop_is_deterministic_and_aligned():
    window = make_window()
    a = random_crop_aligned(window, 16, seed=99)
    b = random_crop_aligned(window, 16, seed=99)
    assert a.target.samples.shape == (16, 16)
    np.testing.assert_array_equal(a.target.samples, b.target.samples)
    np.testing.assert_array_equal(a.neighbors[0].samples, b.neighbors[0].samples)


def test_crop_same_offsets_across_frames():
    window = make_window()
    c = random_crop_aligned(window, 16, seed=5)
    # locate the target crop inside the source frame, then check the
    # neighbor crop comes from the same offsets
    src = window.target.samples
    found = None
    for top in range(src.shape[0] - 15):
        for left in range(src.shape[1] - 15):
            if np.array_equal(src[top : top + 16, left : left + 16], c.target.samples):
                found = (top, left)
                break
        if found:
            break
    assert found is not None
    top, left = found
    np.testing.assert_array_equal(
        c.neighbors[1].samples,
        window.neighbors[1].samples[top : top + 16, left : left + 16],
    )
    np.testing.assert_array_equal(
        c.groundtruth.samples,
        window.groundtruth.samples[top : top + 16, left : left + 16],
    )


def test_crop_rejects_unaligned_size():
    with pytest.raises(ValueError, match="multiple"):
        random_crop_aligned(make_window(), 33, seed=0)


def test_crop_rejects_oversize():
    with pytest.raises(ValueError, match="exceeds"):
        random_crop_aligned(make_window(h=16, w=16), 24, seed=0)


def test_window_seed_is_stable_and_distinct():
    s = window_seed(7, "clipA", 3)
    assert s == window_seed(7, "clipA", 3)
    others = {
        window_seed(7, "clipA", 4),
        window_seed(7, "clipB", 3),
        window_seed(8, "clipA", 3),
    }
    assert s not in others
    assert len(others) == 3
    assert 0 <= s < 2**63


# ---------------------------------------------------------------------------
# manifests


def test_parse_manifest(tmp_path):
    write_gray_pngs(tmp_path / "comp", [np.zeros((8, 8))] * 2)
    write_gray_pngs(tmp_path / "orig", [np.zeros((8, 8))] * 2)
    m = tmp_path / "train.manifest"
    m.write_text(
        "# training set\n"
        "\n"
        "comp orig 37\n"
        "comp orig 42  # strong\n"
    )
    entries = parse_manifest(m)
    assert len(entries) == 2
    assert entries[0].qp == 37 and entries[1].qp == 42
    assert entries[0].compressed == (tmp_path / "comp").resolve()
    assert entries[1].line == 4

    pair = load_pair(entries[0].compressed, entries[0].groundtruth, entries[0].qp)
    assert len(pair) == 2 and pair.qp == 37


def test_manifest_bad_field_count(tmp_path):
    m = tmp_path / "bad.manifest"
    m.write_text("only_two fields\n")
    with pytest.raises(ManifestError, match="bad.manifest:1"):
        parse_manifest(m)


def test_manifest_bad_qp(tmp_path):
    m = tmp_path / "bad.manifest"
    m.write_text("a b notanint\n")
    with pytest.raises(ManifestError, match="qp"):
        parse_manifest(m)
    m.write_text("a b -3\n")
    with pytest.raises(ManifestError, match="qp"):
        parse_manifest(m)


def test_manifest_empty_rejected(tmp_path):
    m = tmp_path / "empty.manifest"
    m.write_text("# nothing here\n\n")
    with pytest.raises(ManifestError, match="no entries"):
        parse_manifest(m)


def test_manifest_missing_file(tmp_path):
    with pytest.raises(ManifestError, match="cannot read"):
        parse_manifest(tmp_path / "nope.manifest")


# ---------------------------------------------------------------------------
# serialization


def test_write_frames_png_quantization(tmp_path):
    # 0.5 must round up to 128, values outside [0, 1] must clamp
    arr = np.array([[0.5, -0.2], [1.7, 127.4 / 255]], dtype=np.float64)
    paths = write_frames_png([Frame(samples=arr)], tmp_path)
    assert len(paths) == 1
    back = np.asarray(Image.open(paths[0]))
    np.testing.assert_array_equal(back, np.array([[128, 0], [255, 127]], dtype=np.uint8))


def test_png_roundtrip_is_exact_on_quantized_values(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.integers(0, 256, size=(16, 16)).astype(np.float32) / 255.0
    write_frames_png([Frame(samples=arr)], tmp_path, prefix="x")
    frames = load_sequence(tmp_path)
    np.testing.assert_allclose(frames[0].samples, arr, atol=1e-7)
