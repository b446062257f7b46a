import json

import pytest

from probtrack import config
from probtrack.formats import FormatError
from probtrack.tracker import TrackerConfig


def test_dump_load_round_trip(tmp_path):
    cfg = TrackerConfig(tau1=0.5, max_lost=12, enable_greedy=False)
    p = tmp_path / "c.cfg"
    p.write_text(config.dump_config(cfg))
    assert config.load_config(p) == cfg


def test_comments_and_partial_files(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# relax only\n\nenable_kfcov = false  # off\nenable_ellipse = no\ntau2 = 0.25\n")
    cfg = config.load_config(p)
    assert not cfg.enable_kfcov and not cfg.enable_ellipse and cfg.enable_relax
    assert cfg.tau2 == 0.25 and cfg.max_lost == TrackerConfig().max_lost


@pytest.mark.parametrize("text,line", [
    ("tau1 0.5\n", 1),
    ("tau1 = 0.5\nmax_lost = 3.5\n", None),
    ("enable_relax = 1\n", None),
    ("tau3 = 1\n", None),
    ("tau1 = 0.1\ntau2 = 0.3\n", None),
    ("\n\ntau1 = abc\n", 3),
])
def test_bad_config(tmp_path, text, line):
    p = tmp_path / "c.cfg"
    p.write_text(text)
    with pytest.raises(FormatError) as e:
        config.load_config(p)
    assert e.value.line == line


def test_integer_accepted_for_float_field():
    cfg = config.config_from_values({"tau1": 1})
    assert cfg.tau1 == 1.0 and isinstance(cfg.tau1, float)


def test_manifest_contents(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("a\n")
    dst = tmp_path / "out.csv"
    dst.write_text("b\n")
    m = config.make_manifest("track", {}, {"detections": src}, {"results": dst}, TrackerConfig(), 4)
    assert m["seed"] == 4 and m["config"] == TrackerConfig().to_dict()
    assert m["inputs"]["detections"]["sha256"] == config.sha256_file(src)
    p = tmp_path / "m.json"
    config.write_manifest(p, m)
    assert config.load_manifest(p) == json.loads(config.manifest_text(m))
    assert config.manifest_text(m) == config.manifest_text(json.loads(p.read_text()))


def test_bad_manifest(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        config.load_manifest(p)
    p.write_text('{"command": "track"}')
    with pytest.raises(FormatError):
        config.load_manifest(p)
