import numpy as np
import pytest

from betaselect import (Dataset, DomainError, ModelSpec, RankDeficiencyError, build_design,
                        load_reading_skills, read_csv, rescale_to_unit)


def test_reading_data_shape(reading):
    assert reading.n == 44
    assert reading.names == ("x2", "x3", "x4", "x5", "x6")
    np.testing.assert_allclose(reading["x4"], reading["x2"] * reading["x3"])
    np.testing.assert_allclose(reading["x5"], reading["x2"] ** 2)
    np.testing.assert_allclose(reading["x6"], reading["x3"] * reading["x5"])
    assert np.all((reading.y > 0) & (reading.y < 1))
    assert sorted(set(reading["x3"])) == [-1.0, 1.0]
    assert int(np.sum(reading["x3"] == 1)) == 19


def test_design_dimensions(reading):
    d = build_design(reading, ModelSpec())
    assert d.X.shape == (44, 1) and d.Z.shape == (44, 1)
    assert np.all(d.X == 1) and np.all(d.Z == 1)
    d = build_design(reading, ModelSpec(("x2", "x3"), ("x2",)))
    assert d.X.shape == (44, 3) and d.Z.shape == (44, 2)
    again = build_design(reading, ModelSpec(("x2", "x3"), ("x2",)))
    assert np.array_equal(d.X, again.X) and np.array_equal(d.Z, again.Z)


def test_rank_deficiency_names_columns(reading):
    with pytest.raises(RankDeficiencyError) as exc:
        build_design(reading, ModelSpec(("x2", "x2"), ()))
    assert "x2" in str(exc.value)
    ds = Dataset(reading.y, {"one": np.ones(44), "x2": reading["x2"]})
    with pytest.raises(RankDeficiencyError, match="one"):
        build_design(ds, ModelSpec((), ("one",)))


def test_unknown_term(reading):
    with pytest.raises(KeyError):
        build_design(reading, ModelSpec(("nope",), ()))


def test_spec_counts_and_serialisation():
    s = ModelSpec(("a", "b"), ("c",), "probit", "cloglog")
    assert (s.r, s.s, s.k) == (3, 2, 5)
    assert ModelSpec.from_dict(s.to_dict()) == s
    assert s.same_terms(ModelSpec(("b", "a"), ("c",)))
    assert not s.same_terms(ModelSpec(("a",), ("c",)))


def test_rescale_to_unit():
    got = rescale_to_unit(np.array([2.0, 4.0, 6.0]), 2.0, 6.0)
    np.testing.assert_allclose(got, [0.5 / 3, 0.5, 2.5 / 3])
    assert got[1] == 0.5
    with pytest.raises(DomainError):
        rescale_to_unit(np.array([2.0, 7.0]), 2.0, 6.0)
    rng = np.random.default_rng(1)
    out = rescale_to_unit(rng.integers(0, 11, 100).astype(float), 0, 10)
    assert np.all((out > 0) & (out < 1))


def test_dataset_validation():
    with pytest.raises(DomainError):
        Dataset(np.array([0.2, 1.0]), {"a": np.array([1.0, 2.0])})
    with pytest.raises(ValueError):
        Dataset(np.array([0.2, 0.3]), {"a": np.array([1.0])})
    ds = Dataset(np.array([0.2, 0.3]), {"a": np.array([1.0, 2.0])})
    with pytest.raises((TypeError, ValueError)):
        ds.y[0] = 0.5


def test_read_csv(tmp_path, reading):
    p = tmp_path / "d.csv"
    p.write_text("resp,u,v\n0.2,1,2\n0.6,3,5\n0.4,2,2\n")
    ds = read_csv(p, "resp")
    assert ds.names == ("u", "v") and ds.n == 3
    with pytest.raises(KeyError, match="score"):
        read_csv(p, "score")
    again = load_reading_skills()
    assert np.array_equal(again.y, reading.y)
