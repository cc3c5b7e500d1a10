import json

import numpy as np
import pytest

from fnls import Field, Grid, field_from_function
from fnls import fieldio
from fnls import spectral as sp


@pytest.fixture
def sample(tmp_path):
    grid = Grid(2, 20.0, 16)
    rng = np.random.default_rng(11)
    f = Field(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    return tmp_path, grid, f


def test_round_trip(sample):
    tmp, grid, f = sample
    path = tmp / "f.field"
    fieldio.write_field(path, f)
    back = fieldio.read_field(path)
    assert back.grid == grid
    assert back.space == f.space
    assert np.array_equal(back.values, f.values)


def test_header_layout(sample):
    tmp, grid, f = sample
    path = tmp / "f.field"
    fieldio.write_field(path, f)
    raw = path.read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    assert header == {
        "box_length": 20.0,
        "dim": 2,
        "points_per_dim": 16,
        "scalar": "f8",
        "space": "physical",
    }
    payload = raw[nl + 1 :]
    assert len(payload) == 2 * 8 * 16 * 16
    first = np.frombuffer(payload[:16], dtype="<f8")
    assert first[0] == f.values.ravel()[0].real
    assert first[1] == f.values.ravel()[0].imag


def test_frequency_space_round_trip(sample):
    tmp, grid, f = sample
    F = sp.forward_transform(f)
    path = tmp / "F.field"
    fieldio.write_field(path, F)
    back = fieldio.read_field(path)
    assert back.space == "frequency"
    assert np.array_equal(back.values, F.values)


def test_checkpoint_sidecar(sample):
    tmp, grid, f = sample
    fieldio.write_checkpoint(tmp, "snap", f, t=1.25, step_count=1250, config_hash="ab12")
    back, sidecar = fieldio.read_checkpoint(tmp, "snap")
    assert np.array_equal(back.values, f.values)
    assert sidecar == {"t": 1.25, "step_count": 1250, "config_hash": "ab12"}


def test_truncated_payload_detected(sample):
    tmp, grid, f = sample
    path = tmp / "f.field"
    fieldio.write_field(path, f)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        fieldio.read_field(path)
