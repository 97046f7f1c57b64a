import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psychkit.dataset import (
    AnalysisConfig,
    DataError,
    EmptySubsetWarning,
    ResponseMatrix,
    group_levels,
    load_csv,
    save_csv,
    subset,
)


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


HEADER = "student_id,grade,gender,Q1,Q2,Q3\n"


def test_load_basic(tmp_path):
    p = write(tmp_path, HEADER + "a,3,girls,1,0,1\nb,4,boys,0,0,1\n")
    m = load_csv(p)
    assert m.items == ("Q1", "Q2", "Q3")
    assert m.n_students == 2
    assert m.totals().tolist() == [2, 1]
    assert m.grades.tolist() == [3, 4]
    assert m.responses.dtype == np.int8


def test_responses_are_read_only(tmp_path):
    m = load_csv(write(tmp_path, HEADER + "a,3,girls,1,0,1\n"))
    with pytest.raises(ValueError):
        m.responses[0, 0] = 0


def test_non_binary_names_row_and_column(tmp_path):
    p = write(tmp_path, HEADER + "a,3,girls,1,0,1\nb,3,boys,1,2,0\n")
    with pytest.raises(DataError, match=r"row 3, column Q2"):
        load_csv(p)


def test_missing_rejected_by_default(tmp_path):
    p = write(tmp_path, HEADER + "a,3,girls,1,,1\n")
    with pytest.raises(DataError, match=r"row 2, column Q2: missing"):
        load_csv(p)


def test_missing_scored_incorrect(tmp_path):
    p = write(tmp_path, HEADER + "a,3,girls,1,,1\n")
    m = load_csv(p, AnalysisConfig(missing_policy="score_as_incorrect"))
    assert m.responses.tolist() == [[1, 0, 1]]


def test_duplicate_ids_and_empty_files(tmp_path):
    with pytest.raises(DataError, match="duplicate"):
        load_csv(write(tmp_path, HEADER + "a,3,g,1,0,1\na,3,g,1,0,1\n"))
    with pytest.raises(DataError, match="empty"):
        load_csv(write(tmp_path, "", "e.csv"))
    with pytest.raises(DataError, match="empty"):
        load_csv(write(tmp_path, HEADER, "h.csv"))


def test_malformed_header(tmp_path):
    with pytest.raises(DataError, match="header"):
        load_csv(write(tmp_path, "id,grade,gender,Q1,Q2\nx,3,g,1,0\n"))


def test_excluded_items_and_extra_columns(tmp_path):
    p = write(tmp_path, "student_id,grade,gender,school,Q1,Q2,Q3\na,3,g,s1,1,0,1\nb,3,b,s2,0,1,1\n")
    cfg = AnalysisConfig(excluded_items=frozenset({"Q2"}), extra_columns=("school",))
    m = load_csv(p, cfg)
    assert m.items == ("Q1", "Q3")
    assert m.column("school").tolist() == ["s1", "s2"]
    assert subset(m, school="s2").student_ids.tolist() == ["b"]


def test_excluding_unknown_item_fails(tmp_path):
    p = write(tmp_path, HEADER + "a,3,girls,1,0,1\n")
    with pytest.raises(DataError, match="Q9"):
        load_csv(p, AnalysisConfig(excluded_items=frozenset({"Q9"})))


def test_config_file_and_hash(tmp_path):
    p = write(tmp_path, "# comment\nexcluded_items = Q2\ngrouping_variable=gender\nrandom_seed=7\ndif_pairs=3,4|5,6\n", "c.cfg")
    cfg = AnalysisConfig.from_file(p)
    assert cfg.excluded_items == frozenset({"Q2"})
    assert cfg.grouping_variable == "gender"
    assert cfg.random_seed == 7
    assert cfg.hash() == AnalysisConfig.from_file(p).hash()
    assert cfg.hash() != AnalysisConfig().hash()
    assert len(cfg.hash()) == 16


def synthetic_matrix(seed, n=60):
    r = np.random.default_rng(seed)
    return ResponseMatrix(
        items=("Q1", "Q2", "Q3", "Q4"),
        student_ids=np.array([f"s{i}" for i in range(n)]),
        grades=r.choice([3, 4, 5, 6], n),
        genders=r.choice(["boys", "girls"], n),
        responses=r.integers(0, 2, (n, 4)),
    )


def test_table2_counts():
    sizes = {3: 709, 4: 748, 5: 585, 6: 624}
    grades = np.concatenate([[g] * n for g, n in sizes.items()])
    m = ResponseMatrix(
        items=("Q1", "Q2"),
        student_ids=np.arange(grades.size).astype(str),
        grades=grades,
        genders=np.array(["x"] * grades.size),
        responses=np.zeros((grades.size, 2)),
    )
    assert {int(g): subset(m, grade=g).n_students for g in group_levels(m, "grade")} == sizes
    assert m.n_students == 2666


@given(st.integers(0, 10_000), st.sampled_from([3, 4, 5, 6]), st.sampled_from(["boys", "girls"]))
@settings(max_examples=40, deadline=None)
def test_subset_composition(seed, grade, gender):
    m = synthetic_matrix(seed)
    both = subset(m, grade=grade, gender=gender)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptySubsetWarning)
        chained = subset(subset(m, grade=grade), gender=gender)
    assert both == chained
    assert subset(m, {}) == m


def test_subset_unknown_column_and_empty():
    m = synthetic_matrix(0)
    with pytest.raises(KeyError):
        subset(m, school="x")
    with pytest.warns(EmptySubsetWarning):
        out = subset(m, grade=9)
    assert out.n_students == 0


def test_subset_callable():
    m = synthetic_matrix(1)
    out = subset(m, lambda r: sum(r.responses) >= 3)
    assert (out.totals() >= 3).all()


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_load_save_idempotent(tmp_path_factory, seed):
    d = tmp_path_factory.mktemp("rt")
    m = synthetic_matrix(seed, n=20)
    save_csv(m, d / "a.csv")
    once = load_csv(d / "a.csv")
    save_csv(once, d / "b.csv")
    twice = load_csv(d / "b.csv")
    assert once == m
    assert twice == once
    assert (d / "a.csv").read_bytes() == (d / "b.csv").read_bytes()


def test_group_levels_numeric_sort():
    m = synthetic_matrix(3, n=200)
    assert group_levels(m, "grade") == ["3", "4", "5", "6"]
