import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disclapmix import io
from disclapmix.dataset import sample_mixture
from disclapmix.fwsim import HaplotypeTable
from disclapmix.mixture import FitReport, MixtureModel

rows_st = st.lists(
    st.tuples(st.integers(-50, 60), st.integers(-50, 60), st.integers(-50, 60), st.integers(1, 10**6)),
    min_size=1,
    max_size=20,
)


@settings(max_examples=50, deadline=None)
@given(rows_st)
def test_population_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("pop") / "pop.csv"
    t = HaplotypeTable.from_rows([r[:3] for r in rows], [r[3] for r in rows], ("DYS19", "DYS389I", "DYS390"))
    io.write_population(path, t)
    assert io.read_population(path) == t
    assert path.read_text().splitlines()[0] == "DYS19,DYS389I,DYS390,N"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(-99, 99), min_size=2, max_size=2), max_size=30))
def test_dataset_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("ds") / "d.csv"
    db = np.array(rows, dtype=np.int64).reshape(len(rows), 2)
    io.write_dataset(path, db, ("A", "B"))
    back, names = io.read_dataset(path)
    np.testing.assert_array_equal(back, db)
    assert names == ("A", "B") and back.shape == (len(rows), 2)


def test_unique_round_trip(tmp_path):
    p1 = HaplotypeTable.from_rows([[0, 0], [0, 1], [3, 3]], [3, 1, 7])
    p2 = HaplotypeTable.from_rows([[0, 1], [5, 5]], [1, 2])
    ds = sample_mixture(p1, p2, 60, 0.4, np.random.default_rng(0))
    path = tmp_path / "u.csv"
    io.atomic_write(path, io.unique_csv(ds))
    back = io.read_unique(path)
    np.testing.assert_array_equal(back.unique, ds.unique)
    np.testing.assert_array_equal(back.ndb, ds.ndb)
    np.testing.assert_array_equal(back.true_freq, ds.true_freq)
    assert back.source == ds.source
    assert back.n == ds.n


def test_model_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(3)
    m = MixtureModel(rng.dirichlet(np.ones(3)), rng.integers(5, 30, (3, 4)),
                     np.array([0.0, -0.3, 0.21]), rng.uniform(-3, -1, 4), ("a", "b", "c", "d"))
    rep = FitReport([-10.0, -9.5], 2, True, 42.125, 20, 100)
    path = tmp_path / "m.json"
    io.write_model(path, m, rep)
    back = io.read_model(path)
    for name in ("tau", "centers", "omega", "lambda_"):
        np.testing.assert_array_equal(getattr(back, name), getattr(m, name))
    assert back.locus_names == m.locus_names
    doc = json.loads(path.read_text())
    assert set(doc) == {"c", "r", "locus_names", "tau", "centers", "omega", "lambda", "fit"}
    assert doc["fit"] == {"loglik": -9.5, "bic": 42.125, "iterations": 2, "converged": True}
    assert io.model_json(back, rep) == path.read_text()


def test_float_format():
    assert io.fmt_float(0.1) == "0.10000000000000001"
    assert float(io.fmt_float(1 / 3)) == 1 / 3


@pytest.mark.parametrize(
    "text,needle",
    [
        ("A,B,N\n1,2,3\n1,x,3\n", "line 3"),
        ("A,B,N\n1,2\n", "line 2"),
        ("A,B,N\n1,2,0\n", "line 2"),
        ("A,B\n1,2\n", "line 1"),
        ("", "line 1"),
        ("A,B,N\n", "no rows"),
    ],
)
def test_population_errors(tmp_path, text, needle):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(io.FormatError, match=needle):
        io.read_population(path)


def test_dataset_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("A,B\n1,2\n3,4,5\n")
    with pytest.raises(io.FormatError, match="line 3"):
        io.read_dataset(path)
    with pytest.raises(io.FormatError):
        io.read_dataset(tmp_path / "missing.csv")


def test_model_errors(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{not json")
    with pytest.raises(io.FormatError):
        io.read_model(path)
    path.write_text(json.dumps({"c": 1, "r": 1, "tau": [1.0], "centers": [[0]], "omega": [0.0], "lambda": [0.5]}))
    with pytest.raises(io.FormatError):
        io.read_model(path)
    path.write_text(json.dumps({"c": 2, "r": 1, "tau": [1.0], "centers": [[0]], "omega": [0.0], "lambda": [-1.0]}))
    with pytest.raises(io.FormatError):
        io.read_model(path)


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "x.csv", "a\n")
    io.atomic_write(tmp_path / "x.csv", "b\n")
    assert [p.name for p in tmp_path.iterdir()] == ["x.csv"]
    assert (tmp_path / "x.csv").read_text() == "b\n"
