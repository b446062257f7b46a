from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from probtrack import formats, synth
from probtrack.formats import FormatError
from probtrack.motmetrics import GtFrame, GtObject
from probtrack.probdet import GaussianBox
from probtrack.tracker import FrameDetections, FrameResult, TrackerConfig, TrackOutput, run_sequence

DATA = Path(__file__).parent / "data"
HEADER = "frame,x1,y1,x2,y2,score,label"


def write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_bytes(text.encode() if isinstance(text, str) else text)
    return p


def test_empty_sequence_with_header(tmp_path):
    assert formats.load_detections(write(tmp_path, f"{HEADER},cov=none\n")) == []


def test_diag4_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    d = GaussianBox([1 / 3, 2 / 7, 10 + np.pi, 20 + np.e], np.diag(rng.uniform(0, 5, 4)), 0.123456789, 3)
    p = tmp_path / "d.csv"
    formats.write_detections(p, [FrameDetections(1, []), FrameDetections(2, [d]), FrameDetections(3, [])])
    frames = formats.load_detections(p)
    assert [f.frame for f in frames] == [1, 2, 3]
    back = frames[1].detections[0]
    np.testing.assert_array_equal(back.mean, d.mean)
    np.testing.assert_array_equal(back.cov, d.cov)
    assert (back.score, back.label) == (d.score, d.label)


def test_full10_reconstructs_symmetric_source(tmp_path):
    rng = np.random.default_rng(1)
    a = rng.normal(size=(4, 4))
    cov = a @ a.T
    cov = 0.5 * (cov + cov.T)
    p = tmp_path / "d.csv"
    formats.write_detections(p, [FrameDetections(1, [GaussianBox([0, 0, 5, 5], cov, 0.5)])], cov="full10")
    np.testing.assert_array_equal(formats.load_detections(p)[0].detections[0].cov, cov)


def test_rows_sorted_by_frame_and_gaps_filled(tmp_path):
    text = f"{HEADER},cov=none\n3,0,0,1,1,0.5,0\n1,0,0,2,2,0.5,0\n"
    frames = formats.load_detections(write(tmp_path, text))
    assert [len(f.detections) for f in frames] == [1, 0, 1]


@pytest.mark.parametrize("text,line", [
    (f"{HEADER},cov=diag4\n1,0,0,1,1,0.5,0\n", 2),
    (f"{HEADER},cov=none\n1,0,0,1,1,0.5,0\n1,0,0,1,x,0.5,0\n", 3),
    (f"{HEADER},cov=none\n0,0,0,1,1,0.5,0\n", 2),
    (f"{HEADER},cov=none\n1,0,0,1,1,1.5,0\n", 2),
    (f"{HEADER},cov=none\n1,5,0,1,1,0.5,0\n", 2),
    (f"{HEADER},cov=none\n1,0,0,1,nan,0.5,0\n", 2),
    (f"{HEADER},cov=diag4\n1,0,0,1,1,0.5,0,1,1,1,-0.5\n", 2),
    (f"{HEADER},cov=bogus\n", 1),
    (f"{HEADER}\n", 1),
    ("x,y\n", 1),
])
def test_malformed_rows_report_line(tmp_path, text, line):
    with pytest.raises(FormatError) as e:
        formats.load_detections(write(tmp_path, text))
    assert e.value.line == line


def test_tiny_negative_eigenvalue_is_clamped(tmp_path):
    text = f"{HEADER},cov=diag4\n1,0,0,1,1,0.5,0,1,1,1,-1e-12\n"
    cov = formats.load_detections(write(tmp_path, text))[0].detections[0].cov
    assert np.linalg.eigvalsh(cov).min() >= 0


def test_binary_garbage_is_a_format_error(tmp_path):
    with pytest.raises(FormatError):
        formats.load_detections(write(tmp_path, b"\xff\xfe\x00garbage"))
    with pytest.raises(FormatError):
        formats.load_detections(tmp_path / "missing.csv")


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.binary(max_size=300))
def test_fuzzed_bytes_never_crash(tmp_path, data):
    p = write(tmp_path, data)
    for loader in (formats.load_detections, formats.load_gt, formats.load_results):
        try:
            loader(p)
        except FormatError:
            pass


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.text(alphabet="0123456789.,-e \n", max_size=40), max_size=6))
def test_fuzzed_rows_never_crash(tmp_path, rows):
    p = write(tmp_path, f"{HEADER},cov=diag4\n" + "\n".join(rows))
    try:
        formats.load_detections(p)
    except FormatError:
        pass


def test_empty_results_is_header_only(tmp_path):
    p = tmp_path / "r.csv"
    formats.write_results(p, [])
    assert p.read_text() == formats.RESULTS_HEADER + "\n"


def test_results_ordering_and_idempotence(tmp_path):
    res = [
        FrameResult(2, [TrackOutput(5, np.array([0, 0, 10, 10.0]), 0.9, 0)]),
        FrameResult(1, [TrackOutput(7, np.array([1, 2, 3, 4.0]), 0.5, 1),
                        TrackOutput(3, np.array([5, 5, 6, 6.0]), 0.6, 0)]),
    ]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    formats.write_results(p1, res)
    lines = p1.read_text().splitlines()
    assert [tuple(l.split(",")[:2]) for l in lines[1:]] == [("1", "3"), ("1", "7"), ("2", "5")]
    assert lines[1].endswith(",-1,-1")
    formats.write_results(p2, formats.load_results(p1))
    assert p1.read_bytes() == p2.read_bytes()


def test_golden_two_track_fixture(tmp_path):
    _, dets = synth.generate(synth.scenario_low_overlap_crossing(0))
    p = tmp_path / "r.csv"
    formats.write_results(p, run_sequence(dets, TrackerConfig()))
    assert p.read_bytes() == (DATA / "golden_crossing_results.csv").read_bytes()


def test_gt_round_trip_and_headerless(tmp_path):
    gt = [GtFrame(1, [GtObject(2, np.array([1.0, 2.0, 11.0, 22.0]), 1, 0.5)])]
    p = tmp_path / "g.csv"
    formats.write_gt(p, gt)
    back = formats.load_gt(p)
    np.testing.assert_array_equal(back[0].objects[0].box, gt[0].objects[0].box)
    assert (back[0].objects[0].label, back[0].objects[0].visible) == (1, 0.5)
    bare = formats.load_gt(write(tmp_path, "1,1,0,0,5,5\n", "bare.csv"))
    assert bare[0].objects[0].label == 0


@pytest.mark.parametrize("row", ["1,0,0,0,5,5", "1,1,0,0,0,5", "1,1,0,0"])
def test_gt_invalid_rows(tmp_path, row):
    with pytest.raises(FormatError):
        formats.load_gt(write(tmp_path, row + "\n"))


def test_atomic_write_leaves_no_temp_files(tmp_path):
    formats.atomic_write(tmp_path / "x.txt", "hello\n")
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
