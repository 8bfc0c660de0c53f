import io
from importlib import resources

import pytest

from lpspike.datasets import (
    CLASSES,
    DatasetError,
    load_iris,
    make_fold_plan,
    mean_validation_error,
)


@pytest.fixture(scope="module")
def iris():
    return load_iris()


class TestLoad:
    def test_bundled(self, iris):
        assert len(iris) == 150
        assert [sum(s.label == c for s in iris) for c in CLASSES] == [50, 50, 50]
        assert iris[0].features == (5.1, 3.5, 1.4, 0.2)
        assert iris[0].label == "Setosa"

    def test_binary_stream(self):
        with resources.files("lpspike.data").joinpath("iris.data").open("rb") as raw:
            assert len(load_iris(raw)) == 150

    def test_empty(self):
        with pytest.raises(DatasetError, match="no samples"):
            load_iris(io.StringIO(""))

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("5.1,3.5,1.4,Iris-setosa\n", "line 1"),
            ("5.1,x,1.4,0.2,Iris-setosa\n", "line 1"),
            ("5.1,3.5,1.4,0.2,Iris-setosa\n5.1,3.5,1.4,0.2,Iris-rosea\n", "line 2"),
            ("5.1,3.5,1.4,-0.2,Iris-setosa\n", "line 1"),
            ("5.1,3.5,1.4,0.2,Iris-setosa\n", "50 per class"),
        ],
    )
    def test_errors(self, text, fragment):
        with pytest.raises(DatasetError, match=fragment):
            load_iris(text)


class TestFoldPlan:
    @pytest.mark.parametrize("size,k", [(10, 5), (20, 2), (25, 2), (30, 1)])
    def test_fold_counts(self, iris, size, k):
        plan = make_fold_plan(iris, size, seed=0)
        assert plan.k == k
        for train, val in plan.folds:
            assert len(train) == 3 * size
            assert len(val) == 150 - 3 * size
            assert not set(train) & set(val)
            assert set(train) | set(val) == set(range(150))
            assert [sum(iris[i].label == c for i in train) for c in CLASSES] == [size] * 3

    def test_blocks_partition_when_exact(self, iris):
        plan = make_fold_plan(iris, 10, seed=3)
        seen = [i for train, _ in plan.folds for i in train]
        assert sorted(seen) == list(range(150))

    def test_deterministic(self, iris):
        assert make_fold_plan(iris, 25, 7) == make_fold_plan(iris, 25, 7)
        assert make_fold_plan(iris, 25, 7).folds != make_fold_plan(iris, 25, 8).folds

    def test_invalid_size(self, iris):
        with pytest.raises(DatasetError):
            make_fold_plan(iris, 15)

    def test_csv(self, iris):
        lines = make_fold_plan(iris, 30).to_csv().splitlines()
        assert lines[0] == "fold_id,role,sample_index"
        assert len(lines) == 1 + 150


class TestMeanError:
    def test_examples(self):
        assert mean_validation_error([0.1, 0.2]) == pytest.approx(0.15)
        assert mean_validation_error([0.3]) == 0.3
        assert mean_validation_error([0, 0, 0, 0, 0]) == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            mean_validation_error([])
