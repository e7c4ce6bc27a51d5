import json
import random
from fractions import Fraction

import pytest

from oddwaring.core import CosetSpec, GramMatrix, is_minkowski_reduced, parity_condition_holds, reduced_entries
from oddwaring.criteria import find_split, r_kw
from oddwaring.survey import (
    EXCEPTIONAL_3I,
    ClaimContradiction,
    _box4,
    _full,
    _last_columns,
    case3iii_m33_bound,
    case3iv_m22_bound,
    case_label,
    cases_for,
    certify_survivor,
    isometric_to_exceptional,
    run_case,
    run_cases,
    run_witnesses,
)


def test_case_labels_cover_all_w():
    assert [(c.label, c.w) for c in cases_for(2)] == [("1-i", (0,)), ("1-i", (1,)), ("1-ii", (0, 1))]
    assert {c.label for c in cases_for(3)} == {"2-i", "2-ii", "2-iii"}
    labels4 = {c.label for c in cases_for(4)}
    assert labels4 == {"3-i", "3-ii", "3-iii", "3-iv"}
    assert [c.w for c in cases_for(4, "3-i") if c.w == (0, 3)] == [(0, 3)]
    assert case_label(4, (0, 3)) == "3-i"
    assert case_label(4, (0,)) == "3-iv"


def test_diag_bounds():
    assert {c.diag_bound for c in cases_for(2)} == {5}
    assert {c.diag_bound for c in cases_for(3)} == {10}
    assert {c.diag_bound for c in cases_for(4)} == {30}
    assert {c.diag_bound for c in cases_for(4, scaled=True)} == {30}
    assert {c.scaled_bound for c in cases_for(4, scaled=True)} == {10}


def test_last_column_routes_agree():
    # numpy route against the scalar generator on random reduced top blocks
    rng = random.Random(5)
    tops = [f for f in reduced_entries(3, 9) if f[0] >= 3]
    for flat in rng.sample(tops, 150):
        a = _full(3, flat)
        scalar = {(m14, m24, m34) for m14, m24, lo, hi in _box4(a) for m34 in range(lo, hi + 1)}
        v1, v2, v3 = _last_columns(a)
        vec = set(zip(v1.tolist(), v2.tolist(), v3.tolist()))
        assert vec == scalar


def test_last_columns_give_reduced_matrices():
    for flat in list(reduced_entries(3, 6))[::7]:
        a = _full(3, flat)
        v1, v2, v3 = _last_columns(a)
        for m14, m24, m34 in list(zip(v1.tolist(), v2.tolist(), v3.tolist()))[::5]:
            m = [row[:] + [x] for row, x in zip(a, (m14, m24, m34))] + [[m14, m24, m34, 40]]
            assert is_minkowski_reduced(m)


def test_c0_bound_printed_and_corrected():
    args = dict(m11=9, m12=2, m13=3, m14=3, m22=9, m23=-4, m24=-4, k=6)
    fixed = case3iii_m33_bound(**args)
    printed = case3iii_m33_bound(**args, as_printed=True)
    assert fixed != printed
    # with |m23| = |m24| in {0, 1} the two readings coincide
    args.update(m23=1, m24=1)
    assert case3iii_m33_bound(**args) == case3iii_m33_bound(**args, as_printed=True)


def test_m22_bound_for_single_index():
    assert case3iv_m22_bound(10, 1, 1, 1, 2) == Fraction(18, 8)
    assert case3iv_m22_bound(10, 0, 0, 0, 2) is None


def test_rank2_survey_empty():
    reps = run_cases(cases_for(2))
    assert all(r.survivors == [] for r in reps)
    assert sum(r.candidates_scanned for r in reps) > 0


def test_rank3_survey_empty():
    reps = run_cases(cases_for(3))
    assert all(r.survivors == [] for r in reps)


def test_rank3_without_rkw_cut_survivors_are_representable():
    # dropping the r_Kw cut lets through cosets whose admissible r never exceeds 13
    reps = run_cases(cases_for(3, rkw_filter="off"))
    surv = [(s, c) for r in reps for s, c in zip(r.survivors, r.certificates)]
    assert surv
    for s, cert in surv:
        assert s.r_kw <= 13
        assert cert.r <= 13


@pytest.mark.parametrize("n", [2, 3])
def test_discharge_is_only_a_shortcut(n):
    on = run_cases(cases_for(n, rkw_filter="off"), certify=False)
    off = run_cases(cases_for(n, rkw_filter="off", use_discharge=False), certify=False)
    for a, b in zip(on, off):
        assert [s.key() for s in a.survivors] == [s.key() for s in b.survivors]


def test_survivors_pass_filters_and_have_no_split():
    rep = run_cases(cases_for(4, "3-iii", scaled=True), scaled=True, certify=False)[0]
    assert rep.survivors
    for s in rep.survivors:
        c = s.coset()
        assert is_minkowski_reduced(c.gram.rows)
        assert parity_condition_holds(c.gram.rows, c.w)
        assert find_split(c) is None
        assert r_kw(c) >= 14


def test_threads_do_not_change_output():
    cases = cases_for(4, "3-iii", scaled=True)
    one = [r.to_json() for r in run_cases(cases, scaled=True, certify=False, threads=1)]
    two = [r.to_json() for r in run_cases(cases, scaled=True, certify=False, threads=2)]
    assert json.dumps(one) == json.dumps(two)


def test_snapshot_resume(tmp_path):
    snap = tmp_path / "snap.jsonl"
    cases = cases_for(3, rkw_filter="off")
    full = [r.to_json() for r in run_cases(cases, snapshot=snap, certify=False)]
    lines = snap.read_text().splitlines()
    assert len(lines) > 3
    # keep only the first few progress records, as if the run had been killed
    snap.write_text("\n".join(lines[:3]) + "\n")
    resumed = [r.to_json() for r in run_cases(cases, snapshot=snap, certify=False)]
    assert resumed == full


def test_snapshot_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("ODD_WARING_SNAPSHOT_DIR", str(tmp_path))
    run_cases(cases_for(2), certify=False)
    assert (tmp_path / "survey.jsonl").exists()


def test_exceptional_matrices_pass_filters_and_fail_split():
    for rows in EXCEPTIONAL_3I:
        c = CosetSpec(GramMatrix(rows), (0, 3))
        assert is_minkowski_reduced(rows)
        assert parity_condition_holds(rows, c.w)
        assert c.q_w == 22
        assert r_kw(c) == 14
        assert find_split(c) is None
        assert certify_survivor(rows, c.w, 14).r == 14


def test_isometric_to_exceptional_ignores_others():
    from oddwaring.survey import Survivor
    s = Survivor(GramMatrix.diag(9, 9, 9, 9), (0, 3), 18, 2, 18)
    assert isometric_to_exceptional(s) is None


def test_certify_raises_on_impossible():
    with pytest.raises(ClaimContradiction):
        certify_survivor([[8, 2], [2, 12]], (1,), 4)


def test_certify_returns_none_when_no_representation_exists():
    # min Q over w + 2K is 6, so r = 6 is the only candidate and it is refuted
    from oddwaring.repsearch import find_representation
    rows = [[2, 0, 1, 1], [0, 2, 1, 1], [1, 1, 5, 0], [1, 1, 0, 5]]
    assert certify_survivor(rows, (0, 1, 2, 3), 14) is None
    c = CosetSpec(GramMatrix(tuple(map(tuple, rows))), (0, 1, 2, 3))
    assert find_representation(c, 6).status == "none"


def test_certify_finds_small_r_for_non_shortest_w():
    rows = [[1, 0, 0, 0], [0, 4, 0, 2], [0, 0, 4, 2], [0, 2, 2, 5]]
    cert = certify_survivor(rows, (0, 1, 2, 3), 14)
    assert cert.r == 6


def test_witnesses():
    verdicts = run_witnesses()
    assert [v.ok for v in verdicts] == [True] * 4
    assert [v.negative.status for v in verdicts] == ["none"] * 4


def test_run_case_single():
    rep = run_case(cases_for(4, "3-iv", scaled=True)[0], scaled=True)
    assert rep.survivors == []
    assert rep.to_json()["case"]["w"] == [1]


def test_exceptions_pair_up_by_isometry():
    from oddwaring.repsearch import cosets_isometric
    e = [CosetSpec(GramMatrix(rows), (0, 3)) for rows in EXCEPTIONAL_3I]
    assert cosets_isometric(e[0], e[3])
    assert cosets_isometric(e[1], e[2])
    assert not cosets_isometric(e[0], e[1])
