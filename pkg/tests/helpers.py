"""Shared builders for tests."""

import numpy as np

from flowmotion import synth
from flowmotion.model import PixelCoord, SamplePoint


def planted_samples(H, width, height, xs, ys, offsets=None):
    """Samples whose flow comes straight from the synth oracle's polynomial."""
    pts = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        u, v = synth.background_at(H, width, height, float(x), float(y))
        if offsets is not None:
            u += offsets[i][0]
            v += offsets[i][1]
        pts.append(SamplePoint(PixelCoord(int(x), int(y)), (u, v)))
    return pts


def random_pixels(rng, n, width, height):
    flat = rng.choice(width * height, size=n, replace=False)
    return flat % width, flat // width
