"""Error ellipses, the ellipse filter and box relaxation on a few detections.

Run: python3 demos/ellipses_and_relaxation.py [out.svg]
"""

import sys

import numpy as np

from probtrack import geometry
from probtrack.probdet import GaussianBox, corner_ellipses_95, passes_ellipse_filter, relax_box
from probtrack.viz import frame_svg

# Three detections of the same 60x120 box with growing corner uncertainty.
dets = [
    GaussianBox([40, 40, 100, 160], np.diag([4.0, 4.0, 4.0, 4.0]), 0.9),
    GaussianBox([180, 40, 240, 160], np.diag([36.0, 16.0, 36.0, 16.0]), 0.8),
    GaussianBox([320, 40, 380, 160], np.diag([400.0, 100.0, 400.0, 100.0]), 0.7),
]

print("sigma_x   a_tl    b_tl   pass@0.65  pass@0.30")
for d in dets:
    tl, _ = corner_ellipses_95(d)
    print(f"{np.sqrt(d.cov[0, 0]):7.1f} {tl.a:6.1f} {tl.b:7.1f} {passes_ellipse_filter(d, 0.65)!s:>10} "
          f"{passes_ellipse_filter(d, 0.30)!s:>10}")

# A track's last detection and a new detection that barely overlap.
last = GaussianBox([100, 200, 132, 264], np.eye(4) * 9.0)
new = GaussianBox([128, 202, 160, 266], np.eye(4) * 9.0)
print()
print(f"plain IoU          {geometry.iou(last.mean, new.mean):.3f}")
print(f"relaxed IoU        {geometry.iou(relax_box(last), relax_box(new)):.3f}")
print(f"relaxed GIoU       {geometry.giou(relax_box(last), relax_box(new)):.3f}")

if len(sys.argv) > 1:
    with open(sys.argv[1], "w") as fh:
        fh.write(frame_svg(1, (480, 320), detections=dets + [last, new]))
    print(f"wrote {sys.argv[1]}")
