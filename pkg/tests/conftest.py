from __future__ import annotations

import numpy as np
import pytest

from prism import write_ppm


@pytest.fixture
def make_sequence(tmp_path):
    """Write uniform PPM frames into a fresh directory; returns its path."""

    def _make(rgbs, name="frames", width=8, height=6):
        directory = tmp_path / name
        directory.mkdir(parents=True, exist_ok=True)
        for i, rgb in enumerate(rgbs):
            pixels = np.empty((height, width, 3), dtype=np.uint8)
            pixels[:] = rgb
            write_ppm(directory / f"frame_{i:05d}.ppm", pixels)
        return directory

    return _make
