import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockframes.erasure import BlockModel
from blockframes.errors import ValidationError
from blockframes.frames import Frame, FrameSpec, construct_frame
from blockframes.io import dump_json, format_frame, parse_frame, read_csv, read_frame, write_csv, write_frame


def test_recipe_round_trip(tmp_path):
    spec = FrameSpec("hadamard", 16, 6, (0, 2, 5, 6, 14, 15), tuple(reversed(range(16))), BlockModel(4, 4, 2))
    frame = construct_frame(spec)
    path = tmp_path / "f.frame"
    write_frame(frame, path)
    again = read_frame(path)
    assert again.spec == spec
    assert np.array_equal(again.entries, frame.entries)
    assert path.read_text().startswith("frame v1 base=hadamard N=16 M=6 NB=4 NA=2\n")


def test_active_blocks_override_and_default():
    text = "frame v1 base=dft N=7 M=3 NB=7\nrows: 0,1,3\nperm: 0,1,2,3,4,5,6\n"
    assert parse_frame(text).blocks.active_blocks == 7
    assert parse_frame(text, active_blocks=3).blocks.active_blocks == 3


@given(seed=st.integers(0, 2**32 - 1))
def test_matrix_round_trip_bit_exact(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 6)) + 1j * rng.normal(size=(3, 6))
    frame = Frame(a / np.linalg.norm(a, axis=0), BlockModel(3, 2, 2))
    again = parse_frame(format_frame(frame))
    assert np.array_equal(again.entries, frame.entries)


@pytest.mark.parametrize("text", [
    "",
    "frame v2 base=dft N=7 M=3 NB=7\n",
    "frame v1 base=dft N=7 NB=7\nrows: 0,1,3\nperm: 0,1,2,3,4,5,6\n",
    "frame v1 base=dft N=7 M=3 NB=7\nrows: 0,1,x\nperm: 0,1,2,3,4,5,6\n",
    "frame v1 base=dft N=7 M=3 NB=7\nrows: 0,1,3\n",
    "frame v1 base=dft N=7 M=3 NB=7\nrows: 0,1,3\nperm: 0,0,2,3,4,5,6\n",
    "frame v1 base=none N=2 M=1 NB=1\n",
    "frame v1 base=none N=2 M=1 NB=1\nmatrix\n1+0j\n",
    "frame v1 base=dft N=8 M=3 NB=3\nrows: 0,1,3\nperm: 0,1,2,3,4,5,6,7\n",
])
def test_malformed_frames(text):
    with pytest.raises(ValidationError):
        parse_frame(text)


def test_csv_and_json_are_deterministic(tmp_path):
    rows = [(0.1, "a", 1 / 3), (0.2, "b", np.float64(2.5))]
    t1 = write_csv(["x", "series", "value"], rows, tmp_path / "a.csv", {"seed": 1})
    t2 = write_csv(["x", "series", "value"], rows, tmp_path / "b.csv", {"seed": 1})
    assert t1 == t2 and t1.startswith("# seed=1\n")
    back = read_csv(tmp_path / "a.csv")
    assert float(back[0]["value"]) == 1 / 3
    assert dump_json({"b": np.int64(2), "a": np.arange(2)}) == dump_json({"a": [0, 1], "b": 2})
