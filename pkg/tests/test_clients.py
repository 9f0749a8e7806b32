from __future__ import annotations

import datetime as dt
import random

import pytest
from stubs import StubServer, dead_url

from newsgeo.clients import (
    EventTimeline,
    GazetteerGeocoder,
    HttpGeocoder,
    HttpImageryCatalog,
    ImagerySequence,
    PlantedEvent,
    SyntheticImagery,
    angular_distance_deg,
    load_planted_events,
    write_planted_events,
)
from newsgeo.errors import MalformedResponseError, TransportError, ValidationError
from newsgeo.extraction import Gazetteer
from newsgeo.geo import GeoBoundingBox, GeoCoordinate

D = dt.date


def springfield_gazetteer():
    return Gazetteer([
        ("Springfield", GeoCoordinate(39.7817, -89.6501), GeoBoundingBox(39.69, 39.87, -89.77, -89.55)),
        ("Shelbyville", GeoCoordinate(39.4064, -88.79), GeoBoundingBox(39.38, 39.43, -88.82, -88.76)),
    ])


# -- gazetteer geocoder ------------------------------------------------------


def test_gazetteer_lookup_returns_stored_entry():
    r = GazetteerGeocoder(springfield_gazetteer()).geocode("Springfield")
    assert r.coordinate == GeoCoordinate(39.7817, -89.6501)
    assert r.bbox == GeoBoundingBox(39.69, 39.87, -89.77, -89.55)


def test_gazetteer_lookup_is_case_insensitive():
    assert GazetteerGeocoder(springfield_gazetteer()).geocode("SPRINGFIELD") is not None


def test_unknown_name_is_absent():
    assert GazetteerGeocoder(springfield_gazetteer()).geocode("Xyzzyville") is None


def test_empty_name_rejected():
    with pytest.raises(ValidationError):
        GazetteerGeocoder(springfield_gazetteer()).geocode("  ")


# -- synthetic imagery -------------------------------------------------------


def test_28_day_timeline_gives_5_frames():
    seq = SyntheticImagery(seed=1).fetch(GeoCoordinate(10, 20), EventTimeline(D(2024, 3, 1), D(2024, 3, 29)))
    assert len(seq) == 5
    assert [t.date() for t in seq.timestamps] == [D(2024, 3, d) for d in (1, 8, 15, 22, 29)]


def test_single_day_timeline_gives_one_frame():
    seq = SyntheticImagery().fetch(GeoCoordinate(0, 0), EventTimeline(D(2024, 1, 1), D(2024, 1, 1)))
    assert len(seq) == 1


def test_frames_include_timeline_end_when_off_cadence():
    seq = SyntheticImagery().fetch(GeoCoordinate(0, 0), EventTimeline(D(2024, 1, 1), D(2024, 1, 10)))
    assert [t.date() for t in seq.timestamps] == [D(2024, 1, 1), D(2024, 1, 8), D(2024, 1, 10)]


def test_planted_event_within_radius_flags_frames():
    ev = PlantedEvent(5.0, 5.0, D(2024, 3, 10), D(2024, 3, 20), "flood")
    img = SyntheticImagery(seed=0, events=(ev,))
    seq = img.fetch(GeoCoordinate(5.03, 5.0), EventTimeline(D(2024, 3, 1), D(2024, 3, 29)))
    assert seq.has_planted_event
    flags = [f.planted_event for f in seq.frames]
    # frames on or after the event start carry the flag
    assert flags == [False, False, True, True, True]
    assert seq.frames[-1].event_label == "flood"


def test_planted_event_outside_radius_or_window_not_flagged():
    ev = PlantedEvent(5.0, 5.0, D(2024, 3, 10), D(2024, 3, 20), "flood")
    img = SyntheticImagery(seed=0, events=(ev,))
    far = img.fetch(GeoCoordinate(5.07, 5.0), EventTimeline(D(2024, 3, 1), D(2024, 3, 29)))
    assert not far.has_planted_event
    early = img.fetch(GeoCoordinate(5.0, 5.0), EventTimeline(D(2024, 1, 1), D(2024, 2, 1)))
    assert not early.has_planted_event


def test_synthetic_is_pure_function_of_inputs():
    ev = (PlantedEvent(1.0, 2.0, D(2024, 1, 5), D(2024, 1, 9), "x"),)
    tl = EventTimeline(D(2024, 1, 1), D(2024, 2, 1))
    a = SyntheticImagery(7, ev).fetch(GeoCoordinate(1.001, 2.002), tl)
    b = SyntheticImagery(7, ev).fetch(GeoCoordinate(1.004, 1.998), tl)  # same 0.01 deg rounding
    assert a.to_dict() == b.to_dict()
    c = SyntheticImagery(8, ev).fetch(GeoCoordinate(1.001, 2.002), tl)
    assert [f.scene_id for f in a.frames] != [f.scene_id for f in c.frames]


def test_angular_distance_known_values():
    assert angular_distance_deg(0, 0, 0, 90) == pytest.approx(90.0, abs=1e-12)
    assert angular_distance_deg(0, 179.99, 0, -179.99) == pytest.approx(0.02, abs=1e-9)
    assert angular_distance_deg(89, 0, 89, 180) == pytest.approx(2.0, abs=1e-9)


def test_ordering_and_containment_on_random_queries():
    rng = random.Random(11)
    img = SyntheticImagery(seed=3, cadence_days=rng.randint(1, 9))
    for _ in range(200):
        start = D(2020, 1, 1) + dt.timedelta(days=rng.randrange(1500))
        tl = EventTimeline(start, start + dt.timedelta(days=rng.randrange(0, 120)))
        seq = img.fetch(GeoCoordinate(rng.uniform(-90, 90), rng.uniform(-180, 180)), tl)
        ts = seq.timestamps
        assert ts == sorted(ts) and len(set(ts)) == len(ts)
        assert all(tl.contains(t) for t in ts)
        assert ts[0].date() == tl.start and ts[-1].date() == tl.end


def test_planted_events_file_round_trip(tmp_path):
    evs = [PlantedEvent(1.5, -2.25, D(2024, 1, 1), D(2024, 1, 9), "fire")]
    write_planted_events(evs, tmp_path / "e.json")
    assert load_planted_events(tmp_path / "e.json") == evs


def test_planted_events_bad_record(tmp_path):
    (tmp_path / "e.json").write_text('[{"lat": 1, "lon": 2, "start": "2024-01-01"}]')
    with pytest.raises(ValidationError, match="record 0"):
        load_planted_events(tmp_path / "e.json")


def test_sequence_rejects_unsorted_frames():
    seq = SyntheticImagery().fetch(GeoCoordinate(0, 0), EventTimeline(D(2024, 1, 1), D(2024, 1, 20)))
    with pytest.raises(ValidationError):
        ImagerySequence(tuple(reversed(seq.frames)), seq.query_coordinate, seq.timeline)


# -- HTTP geocoder -----------------------------------------------------------

FEATURE = {"place_name": "Springfield", "center": [-89.6501, 39.7817], "bbox": [-89.77, 39.69, -89.55, 39.87]}


def test_http_geocoder_parses_top_feature(monkeypatch):
    monkeypatch.setenv("SKY_GEOCODE_TOKEN", "tok-123")
    other = {"center": [0.0, 0.0]}

    def reply(method, path, query, body):
        return 200, {"features": [FEATURE, other]}

    with StubServer(reply) as srv:
        r = HttpGeocoder(srv.url + "/geocode").geocode("Springfield")
    assert r.coordinate == GeoCoordinate(39.7817, -89.6501)
    assert r.bbox == GeoBoundingBox(39.69, 39.87, -89.77, -89.55)
    req = srv.requests[0]
    assert req["method"] == "GET" and req["query"] == {"q": "Springfield", "access_token": "tok-123"}


def test_http_geocoder_empty_features_is_absent():
    with StubServer(lambda *a: (200, {"features": []})) as srv:
        assert HttpGeocoder(srv.url).geocode("Xyzzyville") is None


def test_http_geocoder_404_is_absent():
    with StubServer(lambda *a: (404, {"error": "nope"})) as srv:
        assert HttpGeocoder(srv.url).geocode("Xyzzyville") is None


def test_http_geocoder_non_json_is_malformed():
    with StubServer(lambda *a: (200, "<html>")) as srv:
        with pytest.raises(MalformedResponseError):
            HttpGeocoder(srv.url).geocode("Springfield")


def test_http_geocoder_retries_5xx_then_transport_error():
    with StubServer(lambda *a: (503, {})) as srv:
        with pytest.raises(TransportError):
            HttpGeocoder(srv.url, retries=2).geocode("Springfield")
    assert len(srv.requests) == 3


def test_http_geocoder_offline_is_transport_error():
    with pytest.raises(TransportError):
        HttpGeocoder(dead_url(), timeout=2, retries=0).geocode("Springfield")


# -- HTTP imagery catalog ----------------------------------------------------


def _item(sid, when, cloud=12.0):
    return {
        "id": sid,
        "properties": {"datetime": when, "eo:cloud_cover": cloud},
        "assets": {"visual": {"href": f"https://img.example/{sid}.tif"}},
    }


def test_catalog_returns_scenes_sorted_by_time(monkeypatch):
    monkeypatch.setenv("SKY_IMAGERY_TOKEN", "img-tok")
    items = [_item("c", "2024-03-20T10:00:00Z"), _item("a", "2024-03-02T10:00:00Z"), _item("b", "2024-03-11T10:00:00Z", 50)]
    with StubServer(lambda *a: (200, {"features": items})) as srv:
        seq = HttpImageryCatalog(srv.url + "/search", limit=50).fetch(
            GeoCoordinate(10, 20), EventTimeline(D(2024, 3, 1), D(2024, 3, 31))
        )
    assert [f.scene_id for f in seq.frames] == ["a", "b", "c"]
    assert seq.frames[1].cloud_fraction == pytest.approx(0.5)
    assert seq.frames[0].image_ref == "https://img.example/a.tif"
    req = srv.requests[0]
    assert req["method"] == "POST"
    assert req["body"]["limit"] == 50
    assert req["body"]["datetime"] == "2024-03-01T00:00:00Z/2024-03-31T23:59:59Z"
    w, s, e, n = req["body"]["bbox"]
    assert w < 20 < e and s < 10 < n
    assert req["headers"]["Authorization"] == "Bearer img-tok"


def test_catalog_empty_result_is_empty_sequence():
    with StubServer(lambda *a: (200, {"features": []})) as srv:
        seq = HttpImageryCatalog(srv.url).fetch(GeoCoordinate(0, 0), EventTimeline(D(2024, 1, 1), D(2024, 1, 2)))
    assert len(seq) == 0


def test_catalog_drops_out_of_range_and_duplicate_timestamps():
    items = [_item("a", "2024-03-02T10:00:00Z"), _item("dup", "2024-03-02T10:00:00Z"), _item("late", "2024-05-01T00:00:00Z")]
    with StubServer(lambda *a: (200, {"features": items})) as srv:
        seq = HttpImageryCatalog(srv.url).fetch(GeoCoordinate(0, 0), EventTimeline(D(2024, 3, 1), D(2024, 3, 31)))
    assert [f.scene_id for f in seq.frames] == ["a"]


def test_catalog_malformed_item():
    with StubServer(lambda *a: (200, {"features": [{"properties": {}}]})) as srv:
        with pytest.raises(MalformedResponseError):
            HttpImageryCatalog(srv.url).fetch(GeoCoordinate(0, 0), EventTimeline(D(2024, 3, 1), D(2024, 3, 31)))


def test_catalog_download_dir(tmp_path):
    def reply(method, path, query, body):
        if method == "POST":
            return 200, {"features": [{"id": "s1", "properties": {"datetime": "2024-03-02T10:00:00Z"},
                                       "assets": {"v": {"href": srv.url + "/s1.tif"}}}]}
        return 200, "PIXELS"

    with StubServer(reply) as srv:
        seq = HttpImageryCatalog(srv.url + "/search", download_dir=tmp_path).fetch(
            GeoCoordinate(0, 0), EventTimeline(D(2024, 3, 1), D(2024, 3, 31))
        )
    assert (tmp_path / "s1.tif").read_text() == "PIXELS"
    assert seq.frames[0].image_ref == str(tmp_path / "s1.tif")
