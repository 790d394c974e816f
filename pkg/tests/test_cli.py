import numpy as np
import pytest
from PIL import Image

from waveletgan.cli import main, parse_stage_config
from waveletgan.data import write_frames_png
from waveletgan.errors import ConfigError
from waveletgan.generator import GeneratorConfig
from waveletgan.motion import MotionConfig
from waveletgan.synthetic import make_jpeg_pair
from waveletgan.training import desk_stage1, init_state, save_checkpoint


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """Two short JPEG-degraded sequences, PNG dirs plus a manifest."""
    root = tmp_path_factory.mktemp("data")
    lines = []
    for k, quality in ((0, 60), (1, 20)):
        pair = make_jpeg_pair(f"clip{k}", 3, 48, seed=k, quality=quality)
        write_frames_png(pair.compressed, root / f"comp{k}")
        write_frames_png(pair.groundtruth, root / f"gt{k}")
        lines.append(f"comp{k} gt{k} {100 - quality}\n")
    manifest = root / "train.manifest"
    manifest.write_text("".join(lines))
    return root


@pytest.fixture(scope="module")
def fresh_ckpt(tmp_path_factory):
    root = tmp_path_factory.mktemp("ckpt")
    state = init_state(
        desk_stage1(),
        gen_config=GeneratorConfig(channels=8, num_blocks=1, dense_blocks=1,
                                   dense_layers=2, growth=4),
        motion_config=MotionConfig(levels=2, channels=(4, 6, 4)),
    )
    return save_checkpoint(state, root / "fresh.bin")


STAGE1_CONFIG = """\
# desk-size stage 1
stage = 1
iterations = 4
batch_size = 2
crop_size = 16
lr_initial = 1e-4
lr_decay_every = 100
alpha_initial = 10.0
alpha_decay_every = 100
seed = 0
"""


def write_config(tmp_path, text=STAGE1_CONFIG, name="stage1.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# config parsing


def test_parse_stage_config_roundtrip(tmp_path):
    cfg = parse_stage_config(write_config(tmp_path))
    assert cfg.stage == 1
    assert cfg.iterations == 4
    assert cfg.batch_size == 2
    assert cfg.lr_initial == pytest.approx(1e-4)
    assert cfg.seed == 0


def test_parse_stage_config_unknown_key(tmp_path):
    path = write_config(tmp_path, STAGE1_CONFIG + "warp_factor = 9\n")
    with pytest.raises(ConfigError, match=r"stage1\.cfg:11.*warp_factor"):
        parse_stage_config(path)


def test_parse_stage_config_bad_value(tmp_path):
    path = write_config(tmp_path, STAGE1_CONFIG.replace(
        "iterations = 4", "iterations = 4.5"))
    with pytest.raises(ConfigError, match="iterations needs a int"):
        parse_stage_config(path)


def test_parse_stage_config_missing_keys(tmp_path):
    path = write_config(tmp_path, "stage = 1\n")
    with pytest.raises(ConfigError, match="missing required"):
        parse_stage_config(path)


def test_parse_stage_config_duplicate_key(tmp_path):
    path = write_config(tmp_path, STAGE1_CONFIG + "stage = 1\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_stage_config(path)


def test_parse_stage_config_no_equals(tmp_path):
    path = write_config(tmp_path, "stage 1\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_stage_config(path)


# ---------------------------------------------------------------------------
# analyze


def test_analyze_writes_reports(dataset, tmp_path, capsys):
    rc = main(["analyze", "--manifest", str(dataset / "train.manifest"),
               "--level", "1", "--bins", "21", "--out", str(tmp_path)])
    assert rc == 0
    energy = (tmp_path / "energy.csv").read_text().splitlines()
    assert energy[0] == "sequence,role,qp,band,mean_energy"
    assert len(energy) == 1 + 2 * 2 * 4  # 2 sequences x 2 roles x 4 bands
    assert (tmp_path / "histogram.csv").exists()
    out = capsys.readouterr().out
    assert "energy report" in out


def test_analyze_missing_manifest_is_data_error(tmp_path, capsys):
    rc = main(["analyze", "--manifest", str(tmp_path / "nope.manifest"),
               "--out", str(tmp_path)])
    assert rc == 3
    assert "error:" in capsys.readouterr().err


def test_analyze_bad_manifest_line(tmp_path, capsys):
    bad = tmp_path / "bad.manifest"
    bad.write_text("one_field\n")
    rc = main(["analyze", "--manifest", str(bad), "--out", str(tmp_path)])
    assert rc == 3
    assert "bad.manifest:1" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# enhance


def test_enhance_fresh_checkpoint_is_identity(dataset, fresh_ckpt, tmp_path, capsys):
    out = tmp_path / "enh"
    rc = main(["enhance", "--ckpt", str(fresh_ckpt),
               "--input", str(dataset / "comp0"),
               "--gt", str(dataset / "gt0"),
               "--out", str(out)])
    assert rc == 0
    in_files = sorted((dataset / "comp0").glob("*.png"))
    out_files = sorted(out.glob("*.png"))
    assert len(out_files) == len(in_files) == 3
    for a, b in zip(in_files, out_files):
        assert np.array_equal(np.asarray(Image.open(a)), np.asarray(Image.open(b)))
    psnr_lines = (out / "psnr.csv").read_text().splitlines()
    assert psnr_lines[0] == "index,psnr_compressed,psnr_enhanced"
    assert len(psnr_lines) == 4
    for line in psnr_lines[1:]:
        _, p_in, p_out = line.split(",")
        assert p_in == p_out
    assert "psnr" in capsys.readouterr().out


def test_enhance_without_gt(dataset, fresh_ckpt, tmp_path):
    out = tmp_path / "enh"
    rc = main(["enhance", "--ckpt", str(fresh_ckpt),
               "--input", str(dataset / "comp1"), "--out", str(out)])
    assert rc == 0
    assert len(list(out.glob("*.png"))) == 3
    assert not (out / "psnr.csv").exists()


def test_enhance_missing_checkpoint(dataset, tmp_path, capsys):
    rc = main(["enhance", "--ckpt", str(tmp_path / "nope.bin"),
               "--input", str(dataset / "comp0"), "--out", str(tmp_path)])
    assert rc == 3


def test_enhance_corrupt_checkpoint(dataset, fresh_ckpt, tmp_path, capsys):
    bad = tmp_path / "bad.bin"
    raw = bytearray(fresh_ckpt.read_bytes())
    raw[50] ^= 0xFF
    bad.write_bytes(bytes(raw))
    rc = main(["enhance", "--ckpt", str(bad),
               "--input", str(dataset / "comp0"), "--out", str(tmp_path)])
    assert rc == 3
    assert "integrity" in capsys.readouterr().err


def test_enhance_gt_length_mismatch(dataset, fresh_ckpt, tmp_path, capsys):
    short = tmp_path / "short"
    short.mkdir()
    src = sorted((dataset / "gt0").glob("*.png"))[0]
    (short / src.name).write_bytes(src.read_bytes())
    rc = main(["enhance", "--ckpt", str(fresh_ckpt),
               "--input", str(dataset / "comp0"),
               "--gt", str(short), "--out", str(tmp_path / "o")])
    assert rc == 3


def test_enhance_bad_dims_flag(dataset, fresh_ckpt, tmp_path):
    rc = main(["enhance", "--ckpt", str(fresh_ckpt),
               "--input", str(dataset / "comp0"),
               "--dims", "banana", "--out", str(tmp_path)])
    assert rc == 2


# ---------------------------------------------------------------------------
# train


def test_train_stage1_then_stage2(dataset, tmp_path, capsys):
    cfg1 = write_config(tmp_path)
    out1 = tmp_path / "run1"
    rc = main(["train", "--stage", "1", "--config", str(cfg1),
               "--manifest", str(dataset / "train.manifest"),
               "--out", str(out1)])
    assert rc == 0
    assert (out1 / "checkpoint.bin").exists()
    log = (out1 / "loss.csv").read_text().splitlines()
    assert log[0] == "iteration,l_w,l_m,l_adv,l_d,l_g_total"
    assert len(log) == 5
    echo = capsys.readouterr().out
    assert "stage 1: 4 iterations" in echo
    assert "lr=" in echo and "alpha=" in echo

    stage2_text = (STAGE1_CONFIG.replace("stage = 1", "stage = 2")
                   .replace("alpha_initial = 10.0", "alpha_initial = 0.01")
                   + "beta = 5e-3\n")
    cfg2 = write_config(tmp_path, stage2_text, name="stage2.cfg")
    out2 = tmp_path / "run2"
    rc = main(["train", "--stage", "2", "--config", str(cfg2),
               "--manifest", str(dataset / "train.manifest"),
               "--init", str(out1 / "checkpoint.bin"),
               "--out", str(out2)])
    assert rc == 0
    log2 = (out2 / "loss.csv").read_text().splitlines()
    assert len(log2) == 5
    last = log2[-1].split(",")
    assert float(last[3]) != 0.0 or float(last[4]) != 0.0  # adversarial terms live


def test_train_stage2_without_init(dataset, tmp_path, capsys):
    cfg = write_config(tmp_path, STAGE1_CONFIG.replace("stage = 1", "stage = 2")
                       + "beta = 5e-3\n", name="s2.cfg")
    rc = main(["train", "--stage", "2", "--config", str(cfg),
               "--manifest", str(dataset / "train.manifest"),
               "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "--init" in capsys.readouterr().err


def test_train_stage_flag_config_mismatch(dataset, tmp_path, capsys):
    cfg = write_config(tmp_path)
    rc = main(["train", "--stage", "2", "--config", str(cfg),
               "--manifest", str(dataset / "train.manifest"),
               "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "stage" in capsys.readouterr().err


def test_train_bad_config_is_usage_error(dataset, tmp_path, capsys):
    cfg = write_config(tmp_path, STAGE1_CONFIG + "mystery = 1\n")
    rc = main(["train", "--stage", "1", "--config", str(cfg),
               "--manifest", str(dataset / "train.manifest"),
               "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "mystery" in capsys.readouterr().err


def test_train_missing_manifest_is_data_error(tmp_path, capsys):
    cfg = write_config(tmp_path)
    rc = main(["train", "--stage", "1", "--config", str(cfg),
               "--manifest", str(tmp_path / "nope.manifest"),
               "--out", str(tmp_path / "o")])
    assert rc == 3


def test_train_divergence_exit_code(dataset, tmp_path, capsys):
    cfg = write_config(tmp_path, STAGE1_CONFIG.replace(
        "lr_initial = 1e-4", "lr_initial = 1e12").replace(
        "iterations = 4", "iterations = 40"))
    rc = main(["train", "--stage", "1", "--config", str(cfg),
               "--manifest", str(dataset / "train.manifest"),
               "--out", str(tmp_path / "o")])
    assert rc == 4
    assert "non-finite" in capsys.readouterr().err


def test_usage_errors_from_argparse(capsys):
    with pytest.raises(SystemExit) as info:
        main(["train", "--stage", "7"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
