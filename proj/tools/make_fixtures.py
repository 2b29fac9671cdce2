#!/usr/bin/env python3
"""Regenerates fixtures/: EIAM mock responses and a two-condition Gaussian world."""

import json
import struct
from pathlib import Path

import numpy as np

FRAMES, CHANNELS, HEIGHT, WIDTH = 2, 2, 48, 48
SIGMA = 0.5
# Condition ids of the fixture prompts under embed_prompt with length 8.
SOURCE_ID, TARGET_ID = 3, 6


def write_latf(path, kind, array):
    f, c, h, w = array.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as out:
        out.write(b"LATF")
        out.write(struct.pack("<6I", 1, kind, f, c, h, w))
        out.write(array.astype("<f4").tobytes())


def square(top, left, size):
    m = np.zeros((FRAMES, 1, HEIGHT, WIDTH), dtype=np.float32)
    m[:, :, top:top + size, left:left + size] = 1.0
    return m


def disk(cy, cx, r):
    y, x = np.mgrid[0:HEIGHT, 0:WIDTH]
    m = ((y - cy) ** 2 + (x - cx) ** 2 <= r * r).astype(np.float32)
    return np.broadcast_to(m, (FRAMES, 1, HEIGHT, WIDTH)).copy()


def main():
    root = Path(__file__).resolve().parent.parent / "fixtures"

    eiam = root / "eiam"
    masks = {
        "elephant": square(20, 20, 8),
        "dog": square(8, 6, 10),
        "ball": disk(36, 34, 4),
    }
    for name, m in masks.items():
        write_latf(eiam / "masks" / f"{name}.latf", 1, m)
    manifest = {
        "captions": {
            "elephant": "an elephant walks on the grass",
            "dog": "a dog chases the ball",
        },
        "masks": {
            "elephant": {"elephant": "masks/elephant.latf"},
            "dog": {"dog": "masks/dog.latf", "ball": "masks/ball.latf"},
        },
    }
    (eiam / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    f, c, y, x = np.meshgrid(np.arange(FRAMES), np.arange(CHANNELS), np.arange(HEIGHT), np.arange(WIDTH),
                             indexing="ij")
    background = 0.8 * np.sin(2 * np.pi * x / 24 + c) * np.cos(2 * np.pi * y / 32 + 0.3 * f)
    mu_source = background.astype(np.float32)
    mu_target = mu_source.copy()
    mu_target[:, :, 20:28, 20:28] += 4 * SIGMA

    world = root / "world"
    write_latf(world / f"mu_{SOURCE_ID}.latf", 0, mu_source)
    write_latf(world / f"mu_{TARGET_ID}.latf", 0, mu_target)
    (world / "world.txt").write_text(
        f"# condition_id path (sigma = {SIGMA})\n{SOURCE_ID} mu_{SOURCE_ID}.latf\n{TARGET_ID} mu_{TARGET_ID}.latf\n")

    rng = np.random.default_rng(7)
    source = mu_source + SIGMA * rng.standard_normal(mu_source.shape)
    write_latf(world / "source.latf", 0, source.astype(np.float32))


if __name__ == "__main__":
    main()
