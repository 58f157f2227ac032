from pathlib import Path

import pytest

SAMPLES = Path(__file__).resolve().parents[1] / "samples"


@pytest.fixture(scope="session")
def sample_fingerprint_path():
    return SAMPLES / "fingerprint.pgm"


@pytest.fixture(scope="session")
def sample_eye_path():
    return SAMPLES / "eye.pgm"
