import filecmp

import numpy as np
import pytest

from memdiff import io
from memdiff.cli import main
from memdiff.config import load_config
from memdiff.errors import ConfigError, InvalidInput
from memdiff.synth import SyntheticVideoSpec, generate


def test_pgm_roundtrip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (7, 11), dtype=np.uint8)
    io.write_pgm(tmp_path / "a.pgm", img)
    assert np.array_equal(io.read_pgm(tmp_path / "a.pgm"), img)


def test_pgm_with_comment(tmp_path):
    (tmp_path / "c.pgm").write_bytes(b"P5\n# note\n2 1\n255\n\x01\x02")
    assert io.read_pgm(tmp_path / "c.pgm").tolist() == [[1, 2]]


@pytest.mark.parametrize("data", [b"P2\n2 1\n255\n12", b"P5\n2 2\n255\n\x01", b"P5\n2 1\n65535\n\x00\x01"])
def test_pgm_rejects_bad_files(tmp_path, data):
    (tmp_path / "b.pgm").write_bytes(data)
    with pytest.raises(InvalidInput):
        io.read_pgm(tmp_path / "b.pgm")


def test_raw_with_sidecar(tmp_path):
    frames = [np.full((4, 6), k, np.uint8) for k in range(3)]
    io.write_raw(tmp_path / "v.raw", frames)
    got = list(io.iter_frames(tmp_path / "v.raw"))
    assert len(got) == 3 and all(np.array_equal(a, b) for a, b in zip(got, frames))
    (tmp_path / "v.hdr").write_text("width=4\nheight=4\nframes=3\n")
    with pytest.raises(InvalidInput):
        list(io.iter_frames(tmp_path / "v.raw"))


def test_csv_nine_significant_digits(tmp_path):
    io.write_csv(tmp_path / "x.csv", ["a", "b"], [(1, 1 / 3)])
    assert (tmp_path / "x.csv").read_text() == "a,b\n1,0.333333333\n"


def test_config_overrides_and_fingerprint(tmp_path):
    base = load_config()
    user = tmp_path / "u.cfg"
    user.write_text("[device]\nalpha_p = 200\n")
    cfg = load_config(user)
    assert cfg.device.alpha_p == 200 and cfg.device.alpha_n == base.device.alpha_n
    assert cfg.fingerprint != base.fingerprint
    assert load_config().fingerprint == base.fingerprint


@pytest.mark.parametrize("text", ["[device]\nr_on = abc\n", "[device]\nbogus = 1\n",
                                  "[device]\nr_on = 400e3\n", "[bands]\nfloor = 200e3\n"])
def test_config_errors(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises((ConfigError, ValueError)):
        load_config(p)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_cli_device_sweep(tmp_path, capsys):
    assert main(["device", "sweep", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "t_s,applied_v,device_v,current_a,x" and len(lines) == 2001
    assert "pinch_check = pass" in (tmp_path / "summary.txt").read_text()
    assert "config_fingerprint" in (tmp_path / "manifest.txt").read_text()


def test_cli_subthreshold_sweep_reports_non_hysteretic(tmp_path):
    main(["device", "sweep", "--pp", "0.2", "--out", str(tmp_path)])
    text = (tmp_path / "summary.txt").read_text()
    assert "hysteretic = False" in text and "pinch_check = fail" in text


@pytest.mark.parametrize("name", ["task1", "task2"])
def test_cli_tactile_shipped(tmp_path, name):
    assert main(["tactile", "run", name, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trace.csv").read_text().startswith(
        "t_s,piezo_r,mem_r,gain,force_cmd,event\n")
    assert "result = pass" in (tmp_path / "report.txt").read_text()


def test_cli_tactile_unmatched_markers(tmp_path, capsys):
    sc = tmp_path / "s.scn"
    sc.write_text("[scenario]\nname = s\n[events]\n0.0, force, 1.0\n0.05, end, 0\n"
                  "[expect]\n0.05, pain_reflex\n")
    assert main(["tactile", "run", str(sc), "--out", str(tmp_path / "o")]) == 1
    assert "pain_reflex" in capsys.readouterr().err


def test_cli_tactile_empty_scenario(tmp_path, capsys):
    assert main(["tactile", "run", "empty", "--out", str(tmp_path)]) == 2
    assert "empty trace" in capsys.readouterr().err


def test_cli_vision_static_and_rejects_bad_size(tmp_path, capsys):
    frames = tmp_path / "f"
    frames.mkdir()
    for k in range(2):
        io.write_pgm(frames / f"{k}.pgm", np.full((900, 1920), 80, np.uint8))
    assert main(["vision", "run", str(frames), "--out", str(tmp_path / "o")]) == 0
    sal = io.read_pgm(tmp_path / "o" / "maps" / "saliency_00001.pgm")
    assert sal.shape == (25, 40) and np.all(sal == 255)
    assert "block = 48x36" in capsys.readouterr().out
    bad = tmp_path / "bad"
    bad.mkdir()
    for k in range(2):
        io.write_pgm(bad / f"{k}.pgm", np.zeros((900, 1910), np.uint8))
    assert main(["vision", "run", str(bad), "--out", str(tmp_path / "o2")]) == 2
    assert "multiple of 40" in capsys.readouterr().err


def test_cli_synth_vision_eval_roundtrip(tmp_path, capsys):
    out = tmp_path / "syn"
    assert main(["synth", "gen", "--velocity", "1", "0", "--noise", "0.05", "--seed", "4",
                 "--out", str(out)]) == 0
    assert main(["vision", "run", str(out / "frames"), "--labels", str(out / "labels"),
                 "--out", str(tmp_path / "v")]) == 0
    rate = float((tmp_path / "v" / "overlap.txt").read_text().split()[2])
    assert rate >= 0.94
    assert main(["eval", "overlap", str(tmp_path / "v" / "maps"), str(out / "labels"),
                 "--out", str(tmp_path / "e")]) == 0
    assert f"overlap_rate = {rate:.6f}" in (tmp_path / "e" / "overlap.txt").read_text()


def test_synth_examples():
    frames, masks = generate(SyntheticVideoSpec(frames=4, velocity=(0, 0), start_frame=0))
    assert all(np.array_equal(f, frames[0]) for f in frames)
    assert all(np.array_equal(m, masks[0]) and m.sum() == 9 for m in masks)
    _, masks = generate(SyntheticVideoSpec(frames=20, velocity=(1, 0), start=(0, 5),
                                           start_frame=0))
    for a, b in zip(masks, masks[1:]):
        assert np.array_equal(np.roll(a, 1, axis=1), b)
    with pytest.raises(InvalidInput):
        SyntheticVideoSpec(size=(41, 3))
    with pytest.raises(InvalidInput):
        SyntheticVideoSpec(noise=0.2)


def test_synth_deterministic(tmp_path):
    for d in ("a", "b"):
        main(["synth", "gen", "--noise", "0.05", "--seed", "9", "--out", str(tmp_path / d)])
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.subdirs["frames"].diff_files
