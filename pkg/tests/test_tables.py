import pytest

from poa_lab.tables import IDENTICAL, UNWEIGHTED, WEIGHTED, compute_table, matches_printed, table_tasks


@pytest.mark.parametrize(
    "value,printed,ok",
    [
        (2.618033, "2.618", True),
        (37.5876, "37.58", True),  # truncated cell
        (4.2355, "4.236", True),  # rounded cell
        (1858.28, "1,858", True),
        (974588660.4, "974,588,649", False),
        (float("nan"), "1.0", False),
    ],
)
def test_printed_precision_matching(value, printed, ok):
    assert matches_printed(value, printed) is ok


def test_table_shapes():
    for tab in (WEIGHTED, UNWEIGHTED):
        assert set(tab) == {"poa", "crs", "crc"} and all(len(v) == 8 for v in tab.values())
    assert len(IDENTICAL) == 8
    assert len(table_tasks("weighted")) == 24
    with pytest.raises(ValueError):
        table_tasks("mixed")


def test_identical_table_matches():
    cells = compute_table("identical")
    assert all(c.match for c in cells)


def test_worker_pool_keeps_order():
    serial = [c.to_json() for c in compute_table("identical", 1)]
    pooled = [c.to_json() for c in compute_table("identical", 2)]
    assert serial == pooled
