import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from integral_gp import io
from integral_gp.fusion import BlockModel
from integral_gp.supports import Supports

finite = st.floats(-1e12, 1e12, allow_nan=False, allow_subnormal=True)


@given(
    dim=st.sampled_from([2, 3]),
    n=st.integers(1, 12),
    data=st.data(),
    with_noise=st.booleans(),
)
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
def test_sample_round_trip_is_bit_exact(tmp_path, dim, n, data, with_noise):
    A = data.draw(hnp.arrays(float, (n, dim), elements=finite))
    H = data.draw(hnp.arrays(float, (n, dim), elements=st.floats(0, 1e6)))
    y = data.draw(hnp.arrays(float, n, elements=finite))
    noise = data.draw(hnp.arrays(float, n, elements=st.floats(0, 10))) if with_noise else None
    s = Supports(A, H, y, noise)
    path = tmp_path / f"s{dim}{n}.csv"
    io.write_samples(path, s, seed=3, config={"a": 1})
    back, meta = io.read_samples(path)
    assert np.array_equal(back.centroids, s.centroids)
    assert np.array_equal(back.extents, s.extents)
    assert np.array_equal(back.values, s.values)
    if with_noise:
        assert np.array_equal(back.noise, noise)
    else:
        assert back.noise is None
    assert meta["seed"] == "3"


def test_header_carries_version_seed_and_hash(tmp_path):
    p = io.write_table(tmp_path / "t.csv", {"a": [1, 2]}, seed=7, config={"k": 1}, meta={"v": [0.5, 1.0]})
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# integral-gp ")
    assert lines[1] == f"# seed=7, config={io.config_hash({'k': 1})}"
    assert lines[2] == "# v=0.5 1.0"
    assert lines[3] == "a"


def test_config_hash_ignores_key_order():
    assert io.config_hash({"a": 1, "b": 2}) == io.config_hash({"b": 2, "a": 1})
    assert io.config_hash({"a": 1}) != io.config_hash({"a": 2})


def test_unequal_columns_rejected(tmp_path):
    with pytest.raises(ValueError):
        io.write_table(tmp_path / "t.csv", {"a": [1, 2], "b": [1]})


@pytest.mark.parametrize(
    "body, pattern",
    [
        ("x,y\n1,2\n3\n", r"bad\.csv:3: expected 2 fields"),
        ("x,y\n1,2\n3,abc\n", r"bad\.csv:3: non-numeric field 'abc'"),
        ("# only comments\n", r"no header row"),
        ("x,x\n1,2\n", r"bad\.csv:1: duplicate"),
    ],
)
def test_schema_errors_name_the_line(tmp_path, body, pattern):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(io.SchemaError, match=pattern):
        io.read_table(p)


def test_required_and_sample_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y,value\n1,2,3\n")
    with pytest.raises(io.SchemaError, match="missing"):
        io.read_table(p, required=["z"])
    with pytest.raises(io.SchemaError, match=r"\['hx', 'hy'\]"):
        io.read_samples(p)
    p.write_text("x,y,hx,hy,value\n1,2,0,-1,3\n")
    with pytest.raises(io.SchemaError, match="negative extent in data row 1"):
        io.read_samples(p)


def test_block_model_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    bm = BlockModel((7.5, 7.5, 605.0), (15.0, 15.0, 10.0), (3, 2, 2), rng.uniform(50, 65, 12))
    p = io.write_block_model(tmp_path / "bm.csv", bm)
    back, _ = io.read_block_model(p)
    assert back.origin == bm.origin and back.cell_size == bm.cell_size and back.counts == bm.counts
    assert np.array_equal(back.values, bm.values)


def test_block_model_rows_in_any_order(tmp_path):
    bm = BlockModel((0.5, 0.5), (1.0, 1.0), (2, 3), np.arange(6.0))
    p = io.write_block_model(tmp_path / "bm.csv", bm)
    lines = p.read_text().splitlines()
    head, rows = lines[:4], lines[4:]
    p.write_text("\n".join(head + rows[::-1]) + "\n")
    back, _ = io.read_block_model(p)
    assert np.array_equal(back.values, bm.values)


def test_block_model_errors(tmp_path):
    bm = BlockModel((0.5, 0.5), (1.0, 1.0), (2, 2), np.arange(4.0))
    p = io.write_block_model(tmp_path / "bm.csv", bm)
    lines = p.read_text().splitlines()
    (tmp_path / "short.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(io.SchemaError, match="one row per block"):
        io.read_block_model(tmp_path / "short.csv")
    off = lines[:-1] + ["0.7,1.5,1.0,1.0,3.0"]
    (tmp_path / "off.csv").write_text("\n".join(off) + "\n")
    with pytest.raises(io.SchemaError, match="not on the block lattice"):
        io.read_block_model(tmp_path / "off.csv")
    io.write_samples(tmp_path / "plain.csv", bm.cells())
    with pytest.raises(io.SchemaError, match="lacks 'origin='"):
        io.read_block_model(tmp_path / "plain.csv")
