from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from alids._accel import available_backends, get_kernels


@pytest.fixture(params=available_backends())
def backend(request):
    """Run kernel-touching tests against every available backend."""
    return get_kernels(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_csv(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text(
        "a,b,label\n"
        "1,x,normal.\n"
        "5,y,smurf.\n"
        "10,x,neptune.\n"
    )
    return path


@pytest.fixture
def tiny_schema():
    from alids.dataset import FeatureSchema

    return FeatureSchema(
        columns=(("a", "numeric"), ("b", "categorical"), ("label", "ignored")),
        label_column="label",
        normal_label="normal.",
        has_header=True,
    )
