import pytest

from src.models.design import DesignPoint, FeasibilityReport, PointResult
from src.models.errors import ConfigurationError
from src.services.result_store import ResultStore


def report(margin=0.10, scale=1.0):
    points = [
        (DesignPoint(row_buffer_bytes=1024, t_read_ns=60, t_write_ns=150), {"kv": 0.97, "web": 0.93}),
        (DesignPoint(row_buffer_bytes=512, t_read_ns=500, t_write_ns=2000), {"kv": 0.71, "web": 0.92}),
    ]
    results = []
    for point, ratios in points:
        ratios = {k: v * scale for k, v in ratios.items()}
        results.append(PointResult(point=point, ratios=ratios,
                                   feasible=all(r >= 1 - margin for r in ratios.values())))
    return FeasibilityReport(baseline="planar", target_margin=margin, cache_fraction=1 / 32,
                             workloads=["kv", "web"], results=results)


@pytest.fixture
def store(tmp_path):
    store = ResultStore(str(tmp_path / "nested" / "results.db"))
    yield store
    store.db_manager.dispose()


def test_save_and_load(store):
    original = report()
    run_id = store.save_report(original, label="first", seed=7)
    loaded = store.load_report(run_id)
    assert loaded == original
    assert loaded.feasible_points() == [DesignPoint(row_buffer_bytes=1024, t_read_ns=60, t_write_ns=150)]


def test_latest_run_is_the_default(store):
    store.save_report(report())
    second = store.save_report(report(scale=0.5), label="second")
    latest = store.load_report()
    assert latest.feasible_points() == []
    assert latest == store.load_report(second)


def test_list_and_delete(store):
    first = store.save_report(report(), label="a", seed=1)
    store.save_report(report(margin=0.3), label="b")
    runs = store.list_runs()
    assert [r["label"] for r in runs] == ["a", "b"]
    assert runs[0]["points"] == 4
    assert runs[0]["seed"] == 1
    assert runs[1]["target_margin"] == 0.3

    assert store.delete_run(first)
    assert not store.delete_run(first)
    assert [r["label"] for r in store.list_runs()] == ["b"]
    with pytest.raises(ConfigurationError) as err:
        store.load_report(first)
    assert err.value.key == "run_id"


def test_empty_store(store):
    assert store.list_runs() == []
    with pytest.raises(ConfigurationError):
        store.load_report()
