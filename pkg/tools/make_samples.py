#!/usr/bin/env python3
"""Regenerate the bundled synthetic sample images under samples/.

The fingerprint is a vertical ridge pattern (period 7 px) with four phase
dislocations, which behave like real minutiae under enhancement and thinning.
The eye is a dark pupil disc inside a textured iris annulus on a bright
sclera.  Both images are fully deterministic.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from biokey import imaging  # noqa: E402


def make_fingerprint(width=256, height=256, margin=24):
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    phase = 2.0 * np.pi * x / 7.0
    for cx, cy, winding in ((96.0, 88.0, 1.0), (148.0, 120.0, -1.0),
                            (110.0, 168.0, 1.0), (176.0, 84.0, -1.0)):
        phase += winding * np.arctan2(y - cy, x - cx)
    ridges = 127.5 + 127.5 * np.cos(phase)
    img = np.full((height, width), 255.0)
    img[margin:-margin, margin:-margin] = ridges[margin:-margin, margin:-margin]
    return imaging.quantize_u8(img)


def make_eye(width=320, height=280, cx=160.0, cy=140.0, r_pupil=30.0, r_iris=95.0):
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    d = np.hypot(x - cx, y - cy)
    theta = np.arctan2(y - cy, x - cx)
    img = np.full((height, width), 225.0)
    # Low-frequency spiral texture: no straight or circular isophotes, so the
    # Hough stages lock onto the true boundaries.
    texture = 115.0 + 35.0 * np.cos(3.0 * theta + (d - r_pupil) / 20.0)
    img[d <= r_iris] = texture[d <= r_iris]
    img[d <= r_pupil] = 20.0
    return imaging.quantize_u8(img)


def main():
    out = Path(__file__).resolve().parents[1] / "samples"
    out.mkdir(exist_ok=True)
    imaging.save_pgm(make_fingerprint(), out / "fingerprint.pgm")
    imaging.save_pgm(make_eye(), out / "eye.pgm")
    print(f"wrote {out / 'fingerprint.pgm'} and {out / 'eye.pgm'}")


if __name__ == "__main__":
    main()
