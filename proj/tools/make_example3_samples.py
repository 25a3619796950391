# Copyright 2026 The dsteer Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes presets/data/example3_source.csv: a "GT" letter point cloud in the position plane.

Positions are sampled uniformly along the strokes of the two letters with small
jitter; velocities are N(0, 0.04 I). The output is committed, so rerunning this
script is only needed to change the shape.
"""
import argparse

import numpy as np


def strokes():
    # G: open arc plus the inner bar, centred at (-3, 0); T: bar and stem centred at (3, 0).
    t = np.linspace(np.deg2rad(40), np.deg2rad(360), 200)
    arc = np.stack([-3 + 2.5 * np.cos(t), 2.5 * np.sin(t)], axis=1)
    bar = np.stack([np.linspace(-3, -0.5, 60), np.zeros(60)], axis=1)
    top = np.stack([np.linspace(0.8, 5.2, 100), np.full(100, 2.5)], axis=1)
    stem = np.stack([np.full(100, 3.0), np.linspace(2.5, -2.5, 100)], axis=1)
    return [arc, bar, top, stem]


def sample(count, rng):
    segs = strokes()
    lengths = np.array([np.sum(np.linalg.norm(np.diff(s, axis=0), axis=1)) for s in segs])
    which = rng.choice(len(segs), size=count, p=lengths / lengths.sum())
    pos = np.empty((count, 2))
    for i, w in enumerate(which):
        s = segs[w]
        j = rng.integers(0, len(s) - 1)
        a = rng.random()
        pos[i] = (1 - a) * s[j] + a * s[j + 1]
    pos += rng.normal(scale=0.15, size=pos.shape)
    vel = rng.normal(scale=0.2, size=(count, 2))
    return np.hstack([pos, vel])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", default="presets/data/example3_source.csv")
    args = ap.parse_args()
    pts = sample(args.count, np.random.default_rng(args.seed))
    np.savetxt(args.out, pts, delimiter=",", header="x_1,x_2,x_3,x_4", comments="", fmt="%.10g")


if __name__ == "__main__":
    main()
