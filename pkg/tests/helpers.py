"""Scenario builders and CSV helpers shared by the test modules."""

from probtrack import synth


def equivalence_sequences():
    """The five synthetic sequences used for the baseline comparison."""
    specs = [
        synth.random_scenario(n_objects=6, frame_count=60, seed=s, dropout=0.1, clutter_rate=0.3)
        for s in range(1, 5)
    ]
    specs.append(synth.scenario_low_overlap_crossing(0))
    return specs


def as_reference_frames(det_frames):
    return [
        (f.frame, [{"box": d.mean, "score": d.score, "label": d.label} for d in f.detections])
        for f in det_frames
    ]


def relabel(csv_text):
    """Renumber track ids 1, 2, ... in order of first appearance."""
    mapping = {}
    lines = csv_text.splitlines()
    out = [lines[0]]
    for line in lines[1:]:
        frame, tid, rest = line.split(",", 2)
        new = mapping.setdefault(tid, str(len(mapping) + 1))
        out.append(f"{frame},{new},{rest}")
    return "\n".join(out) + "\n"


def crossing_suite():
    """Ten seeds of the low-overlap crossing scenario."""
    return [synth.scenario_low_overlap_crossing(seed) for seed in range(10)]
