import json

import pytest
from fastapi.testclient import TestClient
from jsonschema import validate

from conftest import make_communities_csv, make_ncaa_csv
from scatterquery.service import ServiceConfig, create_app

ERROR_SCHEMA = {
    "type": "object",
    "required": ["code", "message", "detail"],
    "properties": {
        "code": {"type": "string"},
        "message": {"type": "string"},
        "detail": {"type": "object"},
    },
    "additionalProperties": False,
}

CATALOG_SCHEMA = {
    "type": "object",
    "required": ["measures", "categories", "stats", "category_cardinality", "row_count"],
    "properties": {
        "measures": {"type": "array", "items": {"type": "string"}},
        "categories": {"type": "array", "items": {"type": "string"}},
        "stats": {"type": "object"},
        "category_cardinality": {"type": "object"},
        "row_count": {"type": "integer"},
    },
    "additionalProperties": False,
}

DATASET_SCHEMA = {
    "type": "object",
    "required": ["dataset_id", "catalog"],
    "properties": {"dataset_id": {"type": "string"}, "catalog": CATALOG_SCHEMA},
    "additionalProperties": False,
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["collection_id", "table_name", "specs", "preprocess", "pyramid"],
    "properties": {
        "collection_id": {"type": "string"},
        "table_name": {"type": "string"},
        "specs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "y", "filter", "id"],
                "additionalProperties": False,
                "properties": {
                    "x": {"type": "string"},
                    "y": {"type": "string"},
                    "filter": {"type": ["object", "null"]},
                    "id": {"type": "string"},
                },
            },
        },
        "preprocess": {"type": "object"},
        "pyramid": {"type": "object"},
    },
    "additionalProperties": False,
}

COLLECTION_SCHEMA = {
    "type": "object",
    "required": ["collection_id", "manifest"],
    "properties": {"collection_id": {"type": "string"}, "manifest": MANIFEST_SCHEMA},
    "additionalProperties": False,
}

PREVIEW_SCHEMA = {
    "type": "object",
    "required": ["resolution", "heatmap", "points", "extent", "point_count"],
    "properties": {
        "resolution": {"type": "integer"},
        "heatmap": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "points": {
            "type": "array",
            "items": {"type": "array", "minItems": 2, "maxItems": 2},
            "maxItems": 500,
        },
        "extent": {"type": "array", "minItems": 4, "maxItems": 4},
        "point_count": {"type": "integer"},
    },
    "additionalProperties": False,
}

QUERY_SCHEMA = {
    "type": "object",
    "required": ["collection_id", "type", "direction", "pruning", "results"],
    "properties": {
        "collection_id": {"type": "string"},
        "type": {"enum": ["region", "similar"]},
        "direction": {"enum": ["lower-is-better", "higher-is-better"]},
        "pruning": {"type": ["object", "null"]},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["spec_id", "score", "rank", "preview"],
                "additionalProperties": False,
                "properties": {
                    "spec_id": {"type": "string"},
                    "score": {"type": "number"},
                    "rank": {"type": "integer"},
                    "preview": PREVIEW_SCHEMA,
                },
            },
        },
    },
    "additionalProperties": False,
}

PLOT_SCHEMA = {
    "type": "object",
    "required": ["spec", "points", "source_extent", "n_before_sampling", "empty", "pyramid"],
    "properties": {
        "spec": {"type": "object"},
        "points": {"type": "array"},
        "source_extent": {"type": "array", "minItems": 4, "maxItems": 4},
        "n_before_sampling": {"type": "integer"},
        "empty": {"type": "boolean"},
        "pyramid": {
            "type": "object",
            "required": ["kind", "point_count", "levels"],
            "additionalProperties": False,
            "properties": {
                "kind": {"type": "string"},
                "point_count": {"type": "integer"},
                "levels": {"type": "array"},
            },
        },
    },
    "additionalProperties": False,
}

UNIT_SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


@pytest.fixture()
def client():
    config = ServiceConfig()
    return TestClient(create_app(config))


@pytest.fixture()
def ncaa_dataset(client):
    r = client.post("/datasets", content=make_ncaa_csv().encode())
    assert r.status_code == 201
    return r.json()["dataset_id"]


@pytest.fixture(scope="module")
def communities_client():
    client = TestClient(create_app(ServiceConfig()))
    r = client.post("/datasets", content=make_communities_csv().encode())
    assert r.status_code == 201
    dataset_id = r.json()["dataset_id"]
    r = client.post(f"/datasets/{dataset_id}/collections", json={"mode": "pairwise"})
    assert r.status_code == 201
    return client, dataset_id, r.json()["collection_id"]


class TestDatasets:
    def test_valid_csv_returns_catalog(self, client):
        r = client.post("/datasets", content=b"a,b,c\n1,x,3\n2,y,4\n")
        assert r.status_code == 201
        body = r.json()
        validate(body, DATASET_SCHEMA)
        catalog = body["catalog"]
        assert len(catalog["measures"]) + len(catalog["categories"]) == 3

    def test_twenty_measure_csv(self, client):
        r = client.post("/datasets", content=make_communities_csv().encode())
        assert r.status_code == 201
        assert len(r.json()["catalog"]["measures"]) == 20

    def test_ragged_csv_is_parse_error_with_row(self, client):
        r = client.post("/datasets", content=b"a,b\n1,2\n3\n")
        assert r.status_code == 400
        body = r.json()
        validate(body, ERROR_SCHEMA)
        assert body["code"] == "parse-error"
        assert body["detail"]["row"] == 3

    def test_empty_body_rejected(self, client):
        r = client.post("/datasets", content=b"")
        assert r.status_code == 400
        validate(r.json(), ERROR_SCHEMA)

    def test_alternate_dialect_via_query_params(self, client):
        r = client.post(
            "/datasets?delimiter=;&decimal=,",
            content="a;b\n1,5;2\n2,5;3\n".encode(),
        )
        assert r.status_code == 201


class TestCollections:
    def test_pairwise_manifest_has_190_specs(self, communities_client):
        client, dataset_id, collection_id = communities_client
        r = client.post(f"/datasets/{dataset_id}/collections", json={"mode": "pairwise"})
        assert r.status_code == 201
        body = r.json()
        validate(body, COLLECTION_SCHEMA)
        assert len(body["manifest"]["specs"]) == 190
        assert body["collection_id"] == collection_id  # content-derived, stable

    def test_category_split_one_spec_per_value(self, client, ncaa_dataset):
        r = client.post(
            f"/datasets/{ncaa_dataset}/collections",
            json={
                "mode": "category-split",
                "x": "event_coord_x",
                "y": "event_coord_y",
                "category": "shot_type",
            },
        )
        assert r.status_code == 201
        body = r.json()
        validate(body, COLLECTION_SCHEMA)
        assert len(body["manifest"]["specs"]) == 5

    def test_unknown_dataset_404(self, client):
        r = client.post("/datasets/nope/collections", json={"mode": "pairwise"})
        assert r.status_code == 404
        body = r.json()
        validate(body, ERROR_SCHEMA)
        assert body["code"] == "not-found"

    def test_cardinality_guard(self, client):
        rows = "\n".join("%d,%d,c%d" % (i, i, i) for i in range(150))
        r = client.post("/datasets", content=("x,y,c\n" + rows + "\n").encode())
        dataset_id = r.json()["dataset_id"]
        r = client.post(
            f"/datasets/{dataset_id}/collections",
            json={"mode": "category-split", "x": "x", "y": "y", "category": "c"},
        )
        assert r.status_code == 400
        assert r.json()["code"] == "cardinality-error"

    def test_capacity_guard(self):
        client = TestClient(create_app(ServiceConfig(max_specs=10)))
        r = client.post("/datasets", content=make_communities_csv().encode())
        dataset_id = r.json()["dataset_id"]
        r = client.post(f"/datasets/{dataset_id}/collections", json={"mode": "pairwise"})
        assert r.status_code == 400
        assert r.json()["code"] == "capacity-exceeded"

    def test_bad_mode_rejected(self, client, ncaa_dataset):
        r = client.post(f"/datasets/{ncaa_dataset}/collections", json={"mode": "everything"})
        assert r.status_code == 400
        assert r.json()["code"] == "invalid-query"

    def test_malformed_json_body(self, client, ncaa_dataset):
        r = client.post(
            f"/datasets/{ncaa_dataset}/collections",
            content=b"{not json",
            headers={"content-type": "application/json"},
        )
        assert r.status_code == 400
        assert r.json()["code"] == "invalid-query"


class TestQuery:
    def test_region_unit_square_ranks_by_count(self, communities_client):
        client, _, collection_id = communities_client
        r = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "region", "polygon": UNIT_SQUARE, "k": "all"},
        )
        assert r.status_code == 200
        body = r.json()
        validate(body, QUERY_SCHEMA)
        assert len(body["results"]) == 190
        scores = [item["score"] for item in body["results"]]
        assert scores == sorted(scores, reverse=True)
        assert [item["rank"] for item in body["results"]] == list(range(1, 191))
        for item in body["results"]:
            assert item["score"] == item["preview"]["point_count"]

    def test_similar_member_ref_excludes_self(self, communities_client):
        client, _, collection_id = communities_client
        ref = "attr_00:attr_01"
        r = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "similar", "ref": ref, "k": 5},
        )
        assert r.status_code == 200
        body = r.json()
        validate(body, QUERY_SCHEMA)
        assert len(body["results"]) == 5
        assert ref not in [item["spec_id"] for item in body["results"]]
        assert body["direction"] == "lower-is-better"

    def test_similar_with_inline_points(self, communities_client):
        client, _, collection_id = communities_client
        points = [[float(i), float(i) * 2.0] for i in range(50)]
        r = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "similar", "ref": {"points": points}, "k": 3},
        )
        assert r.status_code == 200
        assert len(r.json()["results"]) == 3

    def test_similar_with_pruning(self, communities_client):
        client, _, collection_id = communities_client
        r = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "similar", "ref": "attr_00:attr_01", "k": 5, "prune_threshold": 0.01},
        )
        assert r.status_code == 200
        body = r.json()
        validate(body, QUERY_SCHEMA)
        assert body["pruning"]["active"] is True
        assert body["pruning"]["threshold"] == 0.01

    def test_custom_weights(self, communities_client):
        client, _, collection_id = communities_client
        r = client.post(
            f"/collections/{collection_id}/query",
            json={
                "type": "similar",
                "ref": "attr_00:attr_01",
                "k": 3,
                "weights": [1, 0, 0, 0, 0, 0],  # six levels at the default 2..64
            },
        )
        assert r.status_code == 200
        bad = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "similar", "ref": "attr_00:attr_01", "k": 3, "weights": [1, 2, 3, 4, 5, 6]},
        )
        assert bad.status_code == 400
        assert bad.json()["code"] == "invalid-weights"

    def test_degenerate_polygon_rejected(self, communities_client):
        client, _, collection_id = communities_client
        r = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "region", "polygon": [[0, 0], [1, 1]]},
        )
        assert r.status_code == 400
        body = r.json()
        validate(body, ERROR_SCHEMA)
        assert body["code"] == "invalid-region"

    def test_geojson_polygon_accepted(self, communities_client):
        client, _, collection_id = communities_client
        r = client.post(
            f"/collections/{collection_id}/query",
            json={
                "type": "region",
                "polygon": {"type": "Polygon", "coordinates": [UNIT_SQUARE + [[0, 0]]]},
                "k": 1,
            },
        )
        assert r.status_code == 200

    def test_unknown_collection_404(self, client):
        r = client.post("/collections/nope/query", json={"type": "region", "polygon": UNIT_SQUARE})
        assert r.status_code == 404

    def test_bad_k_rejected(self, communities_client):
        client, _, collection_id = communities_client
        r = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "region", "polygon": UNIT_SQUARE, "k": "some"},
        )
        assert r.status_code == 400
        assert r.json()["code"] == "invalid-query"

    def test_requery_is_byte_identical(self, communities_client):
        client, _, collection_id = communities_client
        payload = {"type": "similar", "ref": "attr_02:attr_03", "k": 10}
        a = client.post(f"/collections/{collection_id}/query", json=payload)
        b = client.post(f"/collections/{collection_id}/query", json=payload)
        assert a.content == b.content


class TestPlots:
    def test_existing_plot_payload(self, communities_client):
        client, _, collection_id = communities_client
        r = client.get(f"/collections/{collection_id}/plots/attr_00:attr_01")
        assert r.status_code == 200
        body = r.json()
        validate(body, PLOT_SCHEMA)
        assert body["pyramid"]["kind"] == "counts"
        assert len(body["points"]) == body["pyramid"]["point_count"]

    def test_unknown_plot_404(self, communities_client):
        client, _, collection_id = communities_client
        r = client.get(f"/collections/{collection_id}/plots/never:was")
        assert r.status_code == 404

    def test_empty_plot_flagged(self, client):
        rows = ["x,y,g"]
        for i in range(30):
            rows.append("%d,%d,a" % (i, i))
            rows.append("%d,,b" % i)
        r = client.post("/datasets", content=("\n".join(rows) + "\n").encode())
        dataset_id = r.json()["dataset_id"]
        r = client.post(
            f"/datasets/{dataset_id}/collections",
            json={"mode": "category-split", "x": "x", "y": "y", "category": "g"},
        )
        assert r.status_code == 201
        empty_id = next(s["id"] for s in r.json()["manifest"]["specs"] if s["filter"]["value"] == "b")
        collection_id = r.json()["collection_id"]
        p = client.get(f"/collections/{collection_id}/plots/{empty_id}")
        assert p.status_code == 200
        assert p.json()["empty"] is True
        assert p.json()["pyramid"]["point_count"] == 0


def test_two_fresh_apps_give_identical_bytes():
    def run_once():
        client = TestClient(create_app(ServiceConfig()))
        csv = make_communities_csv().encode()
        dataset_id = client.post("/datasets", content=csv).json()["dataset_id"]
        built = client.post(f"/datasets/{dataset_id}/collections", json={"mode": "pairwise"})
        collection_id = built.json()["collection_id"]
        q = client.post(
            f"/collections/{collection_id}/query",
            json={"type": "similar", "ref": "attr_00:attr_02", "k": 20},
        )
        return built.content, q.content

    a_built, a_query = run_once()
    b_built, b_query = run_once()
    assert a_built == b_built
    assert a_query == b_query
