import json

import numpy as np
import pytest

from blockframes.catalog import (
    CatalogEntry,
    almost_set_search,
    correlation_profile,
    dump_catalog,
    find_difference_sets,
    load_catalog,
    lookup,
    parse_catalog,
    translation_representative,
)
from blockframes.erasure import BlockModel
from blockframes.errors import InfeasibleError, ValidationError
from blockframes.frames import DifferenceSet, FrameSpec, construct_frame, squared_correlation_matrix


def entry_json(**overrides):
    raw = {"name": "x", "group": "binary", "N": 16, "M": 6, "lambda": 2,
           "elements": [0, 2, 5, 6, 14, 15], "base": "hadamard", "almost": False,
           "provenance": "test"}
    raw.update(overrides)
    return raw


def doc(*entries, version=1):
    return json.dumps({"version": version, "entries": list(entries)}, indent=2)


def test_bundled_catalog_loads():
    entries = load_catalog()
    names = {e.name for e in entries}
    assert {"hadamard-16-6", "hadamard-64-28", "dft-7-3"} <= names
    for m in (8, 12, 16, 20, 24, 32):
        assert f"hadamard-64-{m}-almost" in names
    for e in entries:
        assert e.provenance


def test_almost_entries_record_max_correlation():
    for e in load_catalog():
        if e.almost:
            prof = correlation_profile(e.base, e.n, e.difference_set.elements)
            assert prof[1:].max() == pytest.approx(e.max_sq_correlation, abs=1e-9)


def test_profile_matches_full_matrix():
    e = lookup("hadamard-64-20-almost")
    spec = FrameSpec.canonical(e.base, 64, e.difference_set.elements, BlockModel(16, 4, 4))
    corr = squared_correlation_matrix(construct_frame(spec))
    assert np.allclose(corr[0], correlation_profile(e.base, 64, e.difference_set.elements))


def test_wrong_lambda_rejected():
    with pytest.raises(ValidationError, match="lambda=3"):
        parse_catalog(doc(entry_json(**{"lambda": 3})))


def test_non_difference_set_rejected_with_line():
    text = doc(entry_json(name="ok"), entry_json(name="bad", elements=[0, 1, 2, 3, 4, 5]))
    with pytest.raises(ValidationError) as info:
        parse_catalog(text, "cat.json")
    line = text.splitlines().index('      "name": "bad",') + 1
    assert f"cat.json:{line}:" in str(info.value)


def test_empty_file_is_empty_catalog():
    assert parse_catalog("") == []
    assert parse_catalog("   \n") == []


def test_malformed_catalogs():
    with pytest.raises(ValidationError):
        parse_catalog("{not json")
    with pytest.raises(ValidationError):
        parse_catalog(doc(entry_json(), version=2))
    with pytest.raises(ValidationError):
        parse_catalog(doc(entry_json(), entry_json()))
    with pytest.raises(ValidationError):
        parse_catalog(doc(entry_json(base="dft")))
    with pytest.raises(ValidationError):
        parse_catalog(doc(entry_json(M=7)))


def test_round_trip(tmp_path):
    entries = load_catalog()
    path = tmp_path / "c.json"
    dump_catalog(entries, path)
    again = load_catalog(path)
    assert [e.to_dict() for e in again] == [e.to_dict() for e in entries]


def test_lookup_missing():
    with pytest.raises(ValidationError):
        lookup("no-such-set")


def test_find_small_cyclic():
    assert find_difference_sets("cyclic", 7, 3).sets == [(0, 1, 3), (0, 1, 5)]
    res = find_difference_sets("cyclic", 5, 2)
    assert res.sets == [] and "not an integer" in res.reason


def test_find_binary_16_6_contains_case_study():
    res = find_difference_sets("binary", 16, 6)
    rep = translation_representative((0, 2, 5, 6, 14, 15), "binary", 16)
    assert rep in res.sets
    assert len(res.sets) == 28


def test_find_too_large():
    with pytest.raises(InfeasibleError):
        find_difference_sets("binary", 64, 28)


def test_almost_set_search_deterministic():
    a = almost_set_search("hadamard", 32, 10, seed=3, restarts=2)
    b = almost_set_search("hadamard", 32, 10, seed=3, restarts=2)
    assert a == b
    rows, worst = a
    assert len(rows) == 10
    assert worst == pytest.approx(correlation_profile("hadamard", 32, rows)[1:].max())


def test_entry_accepts_string_base():
    e = CatalogEntry("t", DifferenceSet("cyclic", 7, (0, 1, 3), 1), "dft")
    assert e.to_dict()["base"] == "dft"
