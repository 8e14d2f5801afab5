import numpy as np
import pytest

from disagree import (
    DataError,
    Dataset,
    FeatureSchema,
    fit_standardizer,
    load_csv,
    load_schema,
    save_csv,
    save_schema,
    standardize,
    train_test_split,
    unstandardize,
)


def make_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


AB_SCHEMA = FeatureSchema(names=("a", "b"), label_name="label")


class TestFeatureSchema:
    def test_d_matches_names(self):
        assert AB_SCHEMA.d == 2

    def test_duplicate_names_rejected(self):
        with pytest.raises(DataError):
            FeatureSchema(names=("a", "a"), label_name="y")

    def test_empty_name_rejected(self):
        with pytest.raises(DataError):
            FeatureSchema(names=("a", ""), label_name="y")

    def test_label_clash_rejected(self):
        with pytest.raises(DataError):
            FeatureSchema(names=("a", "b"), label_name="a")

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "schema.json"
        save_schema(AB_SCHEMA, path)
        assert load_schema(path) == AB_SCHEMA


class TestLoadCsv:
    def test_three_row_file(self, tmp_path):
        path = make_csv(tmp_path, "a,b,label\n1,2,0\n3,4,1\n5,6,0\n")
        ds = load_csv(path, AB_SCHEMA)
        assert (ds.n, ds.d) == (3, 2)
        assert np.array_equal(ds.X, [[1, 2], [3, 4], [5, 6]])
        assert np.array_equal(ds.y, [0, 1, 0])

    def test_bad_label_names_row(self, tmp_path):
        path = make_csv(tmp_path, "a,b,label\n1,2,0\n3,4,2\n")
        with pytest.raises(DataError, match="row 1"):
            load_csv(path, AB_SCHEMA)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_csv(tmp_path / "nope.csv", AB_SCHEMA)

    def test_header_mismatch(self, tmp_path):
        path = make_csv(tmp_path, "a,c,label\n1,2,0\n")
        with pytest.raises(DataError, match="header mismatch"):
            load_csv(path, AB_SCHEMA)

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = make_csv(tmp_path, "a,b,label\n1,2,0\n1,oops,1\n")
        with pytest.raises(DataError, match=r"row 1, column 'b'"):
            load_csv(path, AB_SCHEMA)

    def test_compas_export_shape(self, tmp_path, compas):
        path = tmp_path / "compas.csv"
        save_csv(compas, path)
        ds = load_csv(path, compas.schema)
        assert (ds.n, ds.d) == (4937, 7)
        assert np.array_equal(ds.X, compas.X)
        assert np.array_equal(ds.y, compas.y)


class TestSplit:
    def _toy(self, n=10):
        rng = np.random.default_rng(0)
        return Dataset(AB_SCHEMA, rng.normal(size=(n, 2)), rng.integers(0, 2, size=n))

    def test_sizes_floor_behavior(self):
        train, test = train_test_split(self._toy(10), 0.3, seed=7)
        assert (train.n, test.n) == (7, 3)

    def test_deterministic(self):
        ds = self._toy()
        a = train_test_split(ds, 0.3, seed=7)
        b = train_test_split(ds, 0.3, seed=7)
        assert np.array_equal(a[0].X, b[0].X) and np.array_equal(a[1].X, b[1].X)
        assert np.array_equal(a[0].y, b[0].y) and np.array_equal(a[1].y, b[1].y)

    def test_partition_multiset(self):
        ds = self._toy(23)
        train, test = train_test_split(ds, 0.4, seed=3)
        combined = np.vstack([train.X, test.X])
        assert np.array_equal(
            np.sort(combined.view([("", float)] * 2).ravel(), order=["f0", "f1"]),
            np.sort(ds.X.view([("", float)] * 2).ravel(), order=["f0", "f1"]),
        )

    def test_compas_test_count(self, compas):
        _, test = train_test_split(compas, 0.3, seed=0)
        assert test.n == 1482

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_bad_fraction(self, fraction):
        with pytest.raises(DataError):
            train_test_split(self._toy(), fraction, seed=0)


class TestStandardizer:
    def test_hand_values(self):
        ds = Dataset(FeatureSchema(("a",), "y"), np.array([[1.0], [2.0], [3.0]]), [0, 1, 0])
        s = fit_standardizer(ds)
        assert s.means[0] == 2.0
        assert s.stds[0] == pytest.approx(0.816496580927726, abs=1e-15)
        out = standardize(s, ds.X)
        np.testing.assert_allclose(out[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)

    def test_constant_column_guard(self):
        ds = Dataset(FeatureSchema(("a",), "y"), np.array([[5.0], [5.0]]), [0, 1])
        s = fit_standardizer(ds)
        assert s.means[0] == 5.0 and s.stds[0] == 1.0
        assert np.all(standardize(s, ds.X) == 0.0)

    def test_single_row_guard(self):
        ds = Dataset(AB_SCHEMA, np.array([[3.0, -1.0]]), [1])
        s = fit_standardizer(ds)
        assert np.all(s.stds == 1.0)

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        ds = Dataset(AB_SCHEMA, rng.normal(2, 3, size=(40, 2)), rng.integers(0, 2, size=40))
        s = fit_standardizer(ds)
        back = unstandardize(s, standardize(s, ds.X))
        np.testing.assert_allclose(back, ds.X, atol=1e-12)

    def test_fitted_data_is_centered_and_scaled(self, compas):
        s = fit_standardizer(compas)
        Z = standardize(s, compas.X)
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-9)

    def test_dimension_mismatch(self):
        ds = Dataset(AB_SCHEMA, np.array([[1.0, 2.0]]), [0])
        s = fit_standardizer(ds)
        with pytest.raises(DataError):
            standardize(s, np.ones((3, 5)))


class TestDatasetValidation:
    def test_label_outside_binary(self):
        with pytest.raises(DataError):
            Dataset(AB_SCHEMA, np.ones((2, 2)), [0, 2])

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            Dataset(AB_SCHEMA, np.array([[1.0, np.nan]]), [0])

    def test_immutable(self):
        ds = Dataset(AB_SCHEMA, np.ones((2, 2)), [0, 1])
        with pytest.raises(ValueError):
            ds.X[0, 0] = 5.0
