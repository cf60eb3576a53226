import pytest

from evaluation.metrics import MetricsReport
from storage.database import DatabaseManager


@pytest.fixture
def db():
    manager = DatabaseManager(":memory:")
    yield manager
    manager.close()


def report(model, dataset, value):
    return MetricsReport(model, dataset, value, value, value, value, value, value, 0.1, 0.1)


def test_add_and_query_runs(db):
    db.add_run("mordred", "lorenz", {"n_u": 64, "p_drop": 0.5}, val_loss=1.2, cell_index=0)
    db.add_run("mordred", "lorenz", {"n_u": 128, "p_drop": 0.25}, val_loss=0.8, cell_index=1, selected=True)
    db.add_run("ar", "lorenz", {"order": 16}, val_loss=0.3)
    assert db.get_total_runs() == 3
    assert len(db.get_runs(model_id="mordred")) == 2
    best = db.get_best_run("mordred", "lorenz")
    assert best.cell_index == 1 and best.to_dict()["hyperparameters"] == {"n_u": 128, "p_drop": 0.25}
    assert best.to_dict()["selected"] is True
    assert db.get_best_run("gp", "lorenz") is None


def test_recent_runs_newest_first(db):
    for i in range(5):
        db.add_run("ar", "sine", {"order": i})
    recent = db.get_recent_runs(limit=2)
    assert [r.to_dict()["hyperparameters"]["order"] for r in recent] == [4, 3]


def test_metrics_keep_latest(db):
    assert db.add_metrics([report("ar", "sine", 1.0), report("gp-mc", "sine", 2.0)]) == 16
    db.add_metrics([report("ar", "sine", 3.0)])
    frame = db.get_metrics_frame()
    assert len(frame) == 16
    ar = frame[(frame.model == "ar") & (frame.metric == "nll")]
    assert ar["value"].tolist() == [3.0]
    assert len(db.get_metrics_frame("gp-mc")) == 8


def test_summary_and_clear(db):
    db.add_run("ar", "sine", {})
    db.add_run("gp", "henon", {})
    db.add_metrics([report("ar", "sine", 1.0)])
    summary = db.get_statistics_summary()
    assert summary["total_runs"] == 2
    assert summary["runs_per_model"] == {"ar": 1, "gp": 1}
    assert summary["datasets"] == ["henon", "sine"]
    assert summary["metric_rows"] == 8
    assert db.clear_all() == 10
    assert db.get_total_runs() == 0


def test_file_database(tmp_path):
    path = tmp_path / "nested" / "runs.db"
    db = DatabaseManager(str(path))
    db.add_run("ar", "sine", {"order": 16})
    db.close()
    reopened = DatabaseManager(str(path))
    assert reopened.get_total_runs() == 1
    reopened.close()
