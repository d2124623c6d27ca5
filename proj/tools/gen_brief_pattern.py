#!/usr/bin/env python3
"""Regenerates src/brief_pattern_v1.inc.

Points are drawn from an isotropic Gaussian (sigma = 31/5) and kept only if
they fall inside the radius-15 disc of the 31x31 patch, so every rotated
point stays within the 20 px descriptor border. The output is committed; do
not regenerate unless bumping kBriefPatternVersion.
"""
import sys

import numpy as np

SEED = 20200717
PATCH = 31
RADIUS = 15


def sample_point(rng):
    while True:
        x, y = np.rint(rng.normal(0.0, PATCH / 5.0, size=2)).astype(int)
        if x * x + y * y <= RADIUS * RADIUS:
            return int(x), int(y)


def main():
    rng = np.random.default_rng(SEED)
    pairs = []
    while len(pairs) < 256:
        a = sample_point(rng)
        b = sample_point(rng)
        if a != b:
            pairs.append(a + b)
    out = sys.stdout
    out.write(f"// Generated by tools/gen_brief_pattern.py (seed {SEED}). Do not edit.\n")
    for ax, ay, bx, by in pairs:
        out.write(f"{{{ax}, {ay}, {bx}, {by}}},\n")


if __name__ == "__main__":
    main()
