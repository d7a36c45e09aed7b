"""Smoke tests for the _privloc python module."""

import math

import pytest

import _privloc as pl


METHOD = """
Location getLocation() {
    LocationManager lm = (LocationManager) getSystemService(LOCATION_SERVICE);
    return lm.getLastKnownLocation(LocationManager.GPS_PROVIDER);
}
"""


def test_mine_paths_finds_the_location_call():
    paths = pl.mine_paths(METHOD)
    assert paths, "expected at least one AST path"
    touching = [p for p in paths if "getLastKnownLocation" in (p[0], p[2])]
    assert touching
    for start, nts, end, start_line, end_line in paths:
        assert 1 <= len(nts) <= 8
        assert start and end
        assert start_line >= 1 and end_line >= 1


def test_leaf_tokens_in_source_order():
    leaves = pl.leaf_tokens("void f(int x) { return; }")
    assert leaves == ["void", "f", "int", "x"]


def test_tokenize_layout_is_eleven_slots():
    counts = {"location": 5, "Name": 5, "MethodInvocation": 5, "getLastKnownLocation": 5}
    slots = pl.tokenize_layout(
        "location", ["Name", "MethodInvocation", "Name"], "getLastKnownLocation", counts, True
    )
    assert len(slots) == 11
    assert slots[10] == 0
    assert slots[0] >= 2 and slots[9] >= 2
    assert slots[4:9] == [0] * 5


def test_split_sizes_follow_the_ratio():
    assert pl.split_sizes(100, 1) == (80, 10, 10)
    assert pl.split_sizes(103, 1) == (82, 10, 11)


def test_fleiss_kappa_hand_case():
    rows = [["yes", "yes", "no"], ["yes", "yes", "yes"]]
    assert math.isclose(pl.fleiss_kappa(rows), -0.2, abs_tol=1e-9)


def test_krippendorff_alpha_hand_case():
    rows = [["a", "a"], ["b", "b"], ["a", "b"], ["b", "b"]]
    assert math.isclose(pl.krippendorff_alpha(rows), 8.0 / 15.0, abs_tol=1e-9)


def test_alpha_accepts_missing_ratings():
    rows = [["a", None], ["a", "b"], ["b", "b"]]
    pl.krippendorff_alpha(rows)  # unit with one rating is excluded


def test_agreement_cases():
    rows = [["yes", "yes", "yes"], ["yes", "yes", "no"], ["yes", "no", "no"], ["no", "no", "no"]]
    best, majority = pl.agreement_cases(rows)
    assert math.isclose(best, 0.75)
    assert math.isclose(majority, 0.5)


def test_top_k_paths_matches_sorting():
    assert pl.top_k_paths([0.1, 0.4, 0.2, 0.3], 2) == [1, 3]
    assert pl.top_k_paths([0.25, 0.25, 0.25, 0.25], 3) == [0, 1, 2]


def test_map_terminals_to_line():
    line, skip = pl.map_terminals_to_line(METHOD.strip(), "getLastKnownLocation", "nothingHere")
    assert line == 3
    assert skip is None
    line, skip = pl.map_terminals_to_line(METHOD.strip(), "nopeA", "nopeB")
    assert line is None
    assert skip == "obfuscated_absent"


def test_parse_errors_surface_as_exceptions():
    with pytest.raises(RuntimeError):
        pl.mine_paths("void broken( {")


def test_gradients_spot_check():
    assert pl.gradcheck_ops(1) < 1e-4
