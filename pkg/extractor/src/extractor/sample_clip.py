"""Synthetic table-tennis-style clip for demos and schema tests.

Flat gray hall, blue table at center, two brightly colored players swaying
at the table ends, an occasional dull spectator blob near the border.
Deterministic for a given seed.
"""

from __future__ import annotations

import math

import cv2
import numpy as np


def generate_sample_clip(
    path: str,
    seconds: float = 10.0,
    fps: float = 25.0,
    width: int = 320,
    height: int = 240,
    seed: int = 0,
    with_people: bool = True,
) -> int:
    """Write the clip and return the number of frames."""
    rng = np.random.default_rng(seed)
    fourcc = cv2.VideoWriter_fourcc(*"mp4v")
    writer = cv2.VideoWriter(str(path), fourcc, fps, (width, height))
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {path}")

    n_frames = int(round(seconds * fps))
    cx, cy = width // 2, int(height * 0.62)
    table_w, table_h = int(width * 0.38), int(height * 0.10)

    spectator_on = rng.uniform(size=n_frames) < 0.4
    spectator_x = int(width * 0.85)

    for i in range(n_frames):
        frame = np.full((height, width, 3), 70, dtype=np.uint8)
        # floor shade
        frame[cy + table_h :, :] = 60

        # table: saturated blue (BGR)
        cv2.rectangle(
            frame,
            (cx - table_w // 2, cy - table_h // 2),
            (cx + table_w // 2, cy + table_h // 2),
            (200, 90, 20),
            thickness=-1,
        )

        if with_people:
            sway = math.sin(2.0 * math.pi * i / fps)
            pw, ph = int(width * 0.04), int(height * 0.16)
            for side, color, phase in ((-1, (40, 40, 210), 0.0), (1, (40, 200, 210), 1.7)):
                px = cx + side * (table_w // 2 + pw + 6) + int(4 * math.sin(sway * 2 + phase))
                py = cy - ph // 2 - int(3 * abs(math.cos(sway + phase)))
                cv2.rectangle(frame, (px, py), (px + pw, py + ph), color, thickness=-1)

            if spectator_on[i]:
                # dull, low-saturation blob: below the person color threshold
                cv2.rectangle(
                    frame,
                    (spectator_x, int(height * 0.2)),
                    (spectator_x + 14, int(height * 0.2) + 26),
                    (95, 90, 100),
                    thickness=-1,
                )

        writer.write(frame)
    writer.release()
    return n_frames
