"""Live conformance checks for an embedding endpoint.

check_embedding_endpoint probes a running server for the wire contract the
remote provider relies on: health reporting, order preservation, count and
dimension consistency, unit norms when normalization is requested, and 400
rejection of bad requests. It returns a list of human-readable failures;
an empty list means the endpoint conforms. Meant to be pointed at any
/v1/embed implementation, including out-of-repo sidecars.
"""

from __future__ import annotations

import math
from typing import List, Optional

import httpx

_PROBE_TEXTS = ["hello world", "ដាំស្វាយចន្ទី។ ថែរក្សាសួន៕", "hello world"]


def check_embedding_endpoint(endpoint: str, expect_dim: Optional[int] = None,
                             timeout: float = 10.0) -> List[str]:
    failures: List[str] = []
    base = endpoint.rstrip("/")
    with httpx.Client(timeout=timeout) as client:
        health_dim = _check_health(client, base, expect_dim, failures)
        _check_embed(client, base, health_dim, failures)
        _check_rejections(client, base, failures)
    return failures


def _check_health(client: httpx.Client, base: str, expect_dim: Optional[int],
                  failures: List[str]) -> Optional[int]:
    try:
        resp = client.get(base + "/healthz")
    except httpx.HTTPError as exc:
        failures.append(f"healthz unreachable: {exc}")
        return None
    if resp.status_code != 200:
        failures.append(f"healthz returned {resp.status_code}, expected 200")
        return None
    body = resp.json()
    if body.get("status") != "ok":
        failures.append(f"healthz status {body.get('status')!r}, expected 'ok'")
    dim = body.get("dim")
    if not isinstance(dim, int) or dim < 1:
        failures.append(f"healthz dim {dim!r} is not a positive integer")
        return None
    if expect_dim is not None and dim != expect_dim:
        failures.append(f"healthz dim {dim}, expected {expect_dim}")
    return dim


def _embed(client: httpx.Client, base: str, texts, normalize: bool):
    return client.post(base + "/v1/embed", json={"texts": texts, "normalize": normalize})


def _check_embed(client: httpx.Client, base: str, health_dim: Optional[int],
                 failures: List[str]) -> None:
    try:
        resp = _embed(client, base, _PROBE_TEXTS, True)
    except httpx.HTTPError as exc:
        failures.append(f"embed unreachable: {exc}")
        return
    if resp.status_code != 200:
        failures.append(f"embed returned {resp.status_code}, expected 200")
        return
    body = resp.json()
    vectors = body.get("vectors")
    dim = body.get("dim")
    if not isinstance(vectors, list) or len(vectors) != len(_PROBE_TEXTS):
        failures.append(f"embed returned {len(vectors) if isinstance(vectors, list) else '?'} "
                        f"vectors for {len(_PROBE_TEXTS)} texts")
        return
    if not isinstance(body.get("model"), str):
        failures.append("embed response lacks a 'model' string")
    if not isinstance(dim, int):
        failures.append("embed response lacks an integer 'dim'")
        return
    if health_dim is not None and dim != health_dim:
        failures.append(f"embed dim {dim} disagrees with healthz dim {health_dim}")
    for i, row in enumerate(vectors):
        if len(row) != dim:
            failures.append(f"vector {i} has length {len(row)}, declared dim {dim}")
            return
    if vectors[0] != vectors[2]:
        failures.append("identical texts at positions 0 and 2 got different vectors")
    if vectors[0] == vectors[1]:
        failures.append("distinct texts at positions 0 and 1 got identical vectors")
    for i, row in enumerate(vectors):
        norm = math.sqrt(sum(x * x for x in row))
        if abs(norm - 1.0) > 1e-3:
            failures.append(f"normalize=true but vector {i} has norm {norm:.6f}")
            break
    # order preservation: single-text requests fix each text's vector, then a
    # batch must return them in input order (a swapped-pair probe alone cannot
    # tell a reversing server from a conforming one)
    a = _embed(client, base, ["alpha"], True)
    b = _embed(client, base, ["beta"], True)
    ab = _embed(client, base, ["alpha", "beta"], True)
    if a.status_code == 200 and b.status_code == 200 and ab.status_code == 200:
        va = a.json()["vectors"][0]
        vb = b.json()["vectors"][0]
        vab = ab.json()["vectors"]
        if len(vab) != 2 or vab[0] != va or vab[1] != vb:
            failures.append("vectors do not follow input order in batches")
    else:
        failures.append("order probe did not return 200")


def _check_rejections(client: httpx.Client, base: str, failures: List[str]) -> None:
    try:
        empty = _embed(client, base, [], True)
        if empty.status_code != 400:
            failures.append(f"empty texts returned {empty.status_code}, expected 400")
        bad = _embed(client, base, ["ok", 7], True)
        if bad.status_code != 400:
            failures.append(f"non-string text returned {bad.status_code}, expected 400")
    except httpx.HTTPError as exc:
        failures.append(f"rejection probes unreachable: {exc}")
