import pytest

from arctax.model import Category, CorpusError, GeneratorUnit, TaskResult, validate_task_id


def test_valid_task_id():
    assert validate_task_id("007bbfb7") == "007bbfb7"


@pytest.mark.parametrize("bad", ["xyz", "007BBFB7", "007bbfb", "007bbfb77", "", "g0000000"])
def test_malformed_task_ids(bad):
    with pytest.raises(CorpusError):
        validate_task_id(bad)


def test_category_codes():
    assert Category.from_code("S3") is Category.S3
    assert Category.from_code("ambiguous") is Category.AMBIGUOUS
    assert Category.from_code("Ambiguous") is Category.AMBIGUOUS
    with pytest.raises(CorpusError):
        Category.from_code("S9")


def test_category_enum_is_exactly_ten_values():
    assert len(Category) == 10


def test_task_result_range_checks():
    TaskResult(task_id="00000001", cell_acc=0.5, grid_acc=0.0)
    with pytest.raises(CorpusError):
        TaskResult(task_id="00000001", cell_acc=1.7, grid_acc=0.0)
    with pytest.raises(CorpusError):
        TaskResult(task_id="00000001", cell_acc=0.5, grid_acc=-0.1)
    with pytest.raises(CorpusError):
        TaskResult(task_id="00000001", cell_acc=0.5, grid_acc=0.0, seed=-1)


def test_grid_acc_may_exceed_cell_acc():
    # Distinct metrics: no ordering constraint between them.
    TaskResult(task_id="00000001", cell_acc=0.2, grid_acc=0.9)


def test_generator_unit_requires_body():
    with pytest.raises(CorpusError):
        GeneratorUnit(task_id="00000001", source_lines=())
    unit = GeneratorUnit(task_id="00000001", source_lines=("    x = 1", "    return x"))
    assert unit.has_return()
