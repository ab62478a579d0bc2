import numpy as np
import pytest

from cvtnet import dataset
from cvtnet.dataset import DatasetError, LabeledTable, SplitSpec


def write(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_iris_shape(iris):
    assert iris.n_samples == 150
    assert iris.n_features == 4
    assert iris.class_names == ("setosa", "versicolor", "virginica")
    assert iris.feature_names == ("sepal_length", "sepal_width", "petal_length", "petal_width")


def test_single_row_single_feature(tmp_path):
    t = dataset.load_csv(write(tmp_path, "a,label\n1.5,yes\n"), "label")
    assert t.n_samples == 1
    assert t.features.tolist() == [[1.5]]


def test_labels_in_first_appearance_order(tmp_path):
    t = dataset.load_csv(write(tmp_path, "label,a\nzeta,1\nalpha,2\nzeta,3\n"), "label")
    assert t.class_names == ("zeta", "alpha")
    assert t.labels.tolist() == [0, 1, 0]
    assert t.one_hot().tolist() == [[1, 0], [0, 1], [1, 0]]


def test_non_numeric_cell_is_located(tmp_path):
    path = write(tmp_path, "a,b,label\n1,2,x\n3,oops,y\n")
    with pytest.raises(DatasetError, match=r"row 3, column 'b'.*'oops'"):
        dataset.load_csv(path, "label")


@pytest.mark.parametrize("text, match", [
    ("a,label\n1,x\n2\n", "row 3 has 1 cells"),
    ("a,b\n1,2\n", "label column"),
    ("a,label\ninf,x\n", "non-finite"),
    ("", "empty file"),
    ("a,label\n", "no data rows"),
])
def test_malformed_files(tmp_path, text, match):
    with pytest.raises(DatasetError, match=match):
        dataset.load_csv(write(tmp_path, text), "label")


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="no such file"):
        dataset.load_csv(tmp_path / "nope.csv", "label")


def test_reload_is_bitwise_identical(iris):
    again = dataset.load_csv(dataset.iris_path(), "species")
    assert again.features.tobytes() == iris.features.tobytes()
    assert again.labels.tobytes() == iris.labels.tobytes()


def test_table_is_immutable(iris):
    with pytest.raises(ValueError):
        iris.features[0, 0] = 1.0


def test_table_invariants():
    with pytest.raises(DatasetError):
        LabeledTable(np.zeros((2, 1)), ["a"], [0, 3], ["x", "y"])
    with pytest.raises(DatasetError):
        LabeledTable(np.array([[np.nan]]), ["a"], [0], ["x"])


def test_iris_split_sizes_and_strata(iris):
    train, test = dataset.split(iris, SplitSpec(0.8, 7))
    assert (train.n_samples, test.n_samples) == (120, 30)
    assert np.bincount(train.labels).tolist() == [40, 40, 40]
    assert np.bincount(test.labels).tolist() == [10, 10, 10]


def test_split_deterministic_and_partitioning(iris):
    a_train, a_test = dataset.split_indices(iris.labels, SplitSpec(0.8, 7))
    b_train, b_test = dataset.split_indices(iris.labels, SplitSpec(0.8, 7))
    assert np.array_equal(a_train, b_train) and np.array_equal(a_test, b_test)
    assert not set(a_train) & set(a_test)
    assert sorted(set(a_train) | set(a_test)) == list(range(150))
    c_train, _ = dataset.split_indices(iris.labels, SplitSpec(0.8, 8))
    assert not np.array_equal(a_train, c_train)


def test_split_total_uses_rounding():
    labels = np.array([0] * 5 + [1] * 6)
    train, test = dataset.split_indices(labels, SplitSpec(0.5, 0))
    assert len(train) == 6  # round(5.5) half up
    assert len(train) + len(test) == 11


def test_degenerate_split(iris):
    with pytest.raises(DatasetError):
        dataset.split(iris.take([0, 1]), SplitSpec(0.1, 0))
    with pytest.raises(DatasetError):
        SplitSpec(1.0, 0)


def test_minmax_uses_train_ranges(iris):
    train, test = dataset.split(iris, SplitSpec(0.8, 7))
    s_train, s_test = dataset.minmax_scale(train, test)
    assert s_train.features.min(axis=0).tolist() == [0.0] * 4
    assert s_train.features.max(axis=0).tolist() == [1.0] * 4
    lo = train.features.min(axis=0)
    span = train.features.max(axis=0) - lo
    assert np.allclose(s_test.features, (test.features - lo) / span)
