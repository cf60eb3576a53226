import json

import numpy as np
import pandas as pd
import pytest

from evaluation.ranking import merge_gp_variants, rank_tables, reports_to_frame


def frame(rows):
    return pd.DataFrame(rows, columns=["model", "dataset", "metric", "value"])


def test_single_model_is_degenerate():
    tables = rank_tables(frame([("ar", d, "nll", 1.0) for d in ("a", "b", "c")]))
    assert tables.best_count.loc["nll", "ar"] == 3
    assert tables.mean_rank.loc["nll", "ar"] == 0.0
    assert tables.mean_worst_rank.loc["nll", "ar"] == 0.0


def test_dominant_model_ranks_first():
    rows = []
    for d in ("a", "b"):
        rows += [("A", d, "rmse", 1.0), ("B", d, "rmse", 2.0)]
    tables = rank_tables(frame(rows))
    assert tables.mean_rank.loc["rmse"].tolist() == [0.0, 1.0]
    assert tables.mean_worst_rank.loc["rmse"].tolist() == [1.0, 0.0]
    assert tables.best_count.loc["rmse"].tolist() == [2, 0]


def test_ties_go_to_first_listed_model():
    tables = rank_tables(frame([("A", "a", "nll", 1.0), ("B", "a", "nll", 1.0)]))
    assert tables.best_count.loc["nll"].tolist() == [1, 0]
    tables = rank_tables(frame([("B", "a", "nll", 1.0), ("A", "a", "nll", 1.0)]))
    assert tables.best_count.loc["nll", "B"] == 1


def test_nan_ranks_last():
    tables = rank_tables(frame([("A", "a", "nll", np.nan), ("B", "a", "nll", 3.0)]))
    assert tables.best_count.loc["nll", "B"] == 1


def test_missing_cells_are_listed():
    with pytest.raises(ValueError, match="B/b/nll"):
        rank_tables(frame([("A", "a", "nll", 1.0), ("A", "b", "nll", 1.0), ("B", "a", "nll", 2.0)]))


def test_gp_variants_merge_to_better_value():
    rows = [("mordred", "a", "nll", 3.0), ("gp-mc", "a", "nll", 5.0), ("gp-gmm", "a", "nll", 4.0)]
    merged = merge_gp_variants(frame(rows))
    assert merged["model"].tolist() == ["mordred", "gp"]
    assert merged.loc[merged["model"] == "gp", "value"].item() == 4.0
    tables = rank_tables(frame(rows))
    assert list(tables.mean_rank.columns) == ["mordred", "gp"]


def test_rank_tables_json_round_trips():
    tables = rank_tables(frame([("A", "a", "nll", 1.0), ("B", "a", "nll", 2.0)]))
    data = json.loads(tables.to_json())
    assert data["best_count"]["nll"] == {"A": 1, "B": 0}


def test_reports_to_frame_empty():
    assert reports_to_frame([]).empty
