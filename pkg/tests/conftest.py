import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from egvd import RainParams, make_clean_clip, synthesize_dataset
from egvd.imgio import save_frame_dir


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory) -> Path:
    """One 6-frame 48x48 sequence with light-ish rain; shared read-only."""
    root = tmp_path_factory.mktemp("data")
    clip = make_clean_clip(48, 48, 6, seed=1)
    save_frame_dir(root / "src" / "clip00", clip)
    synthesize_dataset(
        root / "src",
        [("rainA", RainParams(density=2000.0, seed=3))],
        root / "ds",
    )
    return root / "ds"


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
