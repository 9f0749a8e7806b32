import datetime as dt
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsgeo.extraction import (
    ArticleRecord,
    DuplicateNameError,
    Gazetteer,
    GazetteerError,
    count_mentions,
    extract_weighted_places,
    load_gazetteer,
    read_corpus,
    write_gazetteer,
)
from newsgeo.geo import GeoBoundingBox, GeoCoordinate

DAY = dt.date(2024, 3, 1)


def entry(name, lat=0.0, lon=0.0):
    return name, GeoCoordinate(lat, lon), GeoBoundingBox(lat - 1, lat + 1, lon - 1, lon + 1)


@pytest.fixture
def gaz():
    return Gazetteer([entry("Paris", 48.86, 2.35), entry("Lyon", 45.76, 4.84), entry("New York", 40.7, -74.0), entry("York", 53.96, -1.08)])


def art(text):
    # ArticleRecord forbids empty text; empty-text extraction is tested via count_mentions
    return ArticleRecord("a1", text, DAY)


def names_weights(places):
    return [(p.name, p.weight) for p in places]


def test_empty_text(gaz):
    assert count_mentions("", gaz) == {}


def test_counts_and_order(gaz):
    got = extract_weighted_places(art("Paris burned. Paris and Lyon mourned."), gaz)
    assert names_weights(got) == [("Paris", 2), ("Lyon", 1)]


def test_longest_match(gaz):
    got = extract_weighted_places(art("New York and York"), gaz)
    assert names_weights(got) == [("New York", 1), ("York", 1)]


def test_case_and_word_boundaries(gaz):
    got = extract_weighted_places(art("PARIS, paris; Parisian Lyonnais lyon."), gaz)
    assert names_weights(got) == [("Paris", 2), ("Lyon", 1)]


def test_no_match(gaz):
    assert extract_weighted_places(art("nothing here"), gaz) == []


def test_weights_carry_geometry(gaz):
    (p,) = extract_weighted_places(art("Lyon"), gaz)
    assert p.coordinate == GeoCoordinate(45.76, 4.84)
    assert p.bbox.contains_coordinate(p.coordinate)


WORDS = ["Paris", "Lyon", "New York", "York", "and", "the", "river", "NEW", "york", ",", "."]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(WORDS), max_size=30), st.lists(st.sampled_from(WORDS), max_size=30))
def test_concatenation_additivity(a, b):
    g = Gazetteer([entry("Paris"), entry("Lyon"), entry("New York"), entry("York")])
    ta, tb = " ".join(a), " ".join(b)
    whole = count_mentions(ta + " . " + tb, g)
    assert whole == count_mentions(ta, g) + count_mentions(tb, g)
    assert count_mentions(ta, g) == count_mentions(ta, g)
    # sum of weights equals number of matched spans
    assert sum(whole.values()) == len(list(g.pattern().finditer(ta + " . " + tb)))


def write(tmp_path, text, name="g.tsv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_gazetteer(tmp_path):
    p = write(
        tmp_path,
        "# comment\nParis\t48.86\t2.35\t48.8\t48.9\t2.2\t2.5\n\nLyon\t45.76\t4.84\t45.7\t45.8\t4.7\t4.9\n"
        "Fiji\t-17.7\t178.0\t-21\t-12\t177\t-178\n",
    )
    g = load_gazetteer(p)
    assert len(g) == 3
    assert g.lookup("fiji")[2].crosses_antimeridian


def test_duplicate_names(tmp_path):
    p = write(tmp_path, "paris\t1\t1\t0\t2\t0\t2\nParis\t1\t1\t0\t2\t0\t2\n")
    with pytest.raises(DuplicateNameError) as ei:
        load_gazetteer(p)
    assert ei.value.line == 2


def test_bad_latitude_names_field(tmp_path):
    p = write(tmp_path, "Paris\t95\t1\t0\t2\t0\t2\n")
    with pytest.raises(GazetteerError) as ei:
        load_gazetteer(p)
    assert ei.value.line == 1
    assert "lat" in str(ei.value)
    assert ei.value.field == "lat"


def test_parse_error_line_number(tmp_path):
    p = write(tmp_path, "A\t1\t1\t0\t2\t0\t2\nB\t1\t1\t0\n")
    with pytest.raises(GazetteerError) as ei:
        load_gazetteer(p)
    assert ei.value.line == 2
    p = write(tmp_path, "A\tx\t1\t0\t2\t0\t2\n")
    with pytest.raises(GazetteerError, match="lat"):
        load_gazetteer(p)


def test_coordinate_outside_bbox(tmp_path):
    p = write(tmp_path, "A\t5\t1\t0\t2\t0\t2\n")
    with pytest.raises(GazetteerError, match="outside"):
        load_gazetteer(p)


def test_gazetteer_round_trip(tmp_path, gaz):
    write_gazetteer(gaz, tmp_path / "out.tsv")
    assert load_gazetteer(tmp_path / "out.tsv").entries == gaz.entries


def test_read_corpus_collects_errors(tmp_path):
    lines = [
        json.dumps({"id": "a", "text": "Paris", "published": "2024-01-02", "source_url": "http://x"}),
        "{not json",
        json.dumps({"id": "b", "text": "", "published": "2024-01-02"}),
        json.dumps({"id": "a", "text": "dup", "published": "2024-01-02"}),
        "",
        json.dumps({"id": "c", "text": "Lyon", "published": "2024-01-05T10:00:00Z"}),
    ]
    p = tmp_path / "c.jsonl"
    p.write_text("\n".join(lines) + "\n")
    r = read_corpus(p)
    assert [a.id for a in r.articles] == ["a", "c"]
    assert [e.line for e in r.errors] == [2, 3, 4]
    assert r.articles[1].published == dt.date(2024, 1, 5)
