"""Thin client over the HTTP service.

With no base URL the service app runs in process behind a test
transport, so the CLI exercises the same HTTP path either way.
"""

from __future__ import annotations

from typing import Any

import httpx


class ServiceError(Exception):
    """Non-2xx response; carries the service's error detail."""

    def __init__(self, status_code: int, detail: dict[str, Any]):
        self.status_code = status_code
        self.detail = detail
        super().__init__(detail.get("message", str(detail)))

    @property
    def line(self) -> int | None:
        return self.detail.get("line")

    @property
    def column(self) -> int | None:
        return self.detail.get("column")

    @property
    def source(self) -> str | None:
        return self.detail.get("source")


class ServiceClient:
    def __init__(self, base_url: str | None = None):
        if base_url is None:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client: httpx.Client = TestClient(create_app())
        else:
            self._client = httpx.Client(base_url=base_url, timeout=300.0)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _check(self, resp: httpx.Response) -> httpx.Response:
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", {})
            except ValueError:
                detail = {"message": resp.text}
            if not isinstance(detail, dict):
                detail = {"message": str(detail)}
            raise ServiceError(resp.status_code, detail)
        return resp

    def health(self) -> dict[str, Any]:
        return self._check(self._client.get("/healthz")).json()

    def create_engine(
        self,
        ordered_pruning: bool = True,
        dedup: bool = True,
        reorder_slack: int = 0,
        track_history: bool = True,
        synopsis_seed: int = 0,
    ) -> str:
        resp = self._check(
            self._client.post(
                "/engines",
                json={
                    "ordered_pruning": ordered_pruning,
                    "dedup": dedup,
                    "reorder_slack": reorder_slack,
                    "track_history": track_history,
                    "synopsis_seed": synopsis_seed,
                },
            )
        )
        return resp.json()["engine_id"]

    def register_queries(self, engine_id: str, text: str) -> list[dict[str, Any]]:
        resp = self._check(
            self._client.post(
                f"/engines/{engine_id}/queries",
                content=text.encode("utf-8"),
                headers={"content-type": "text/plain; charset=utf-8"},
            )
        )
        return resp.json()["queries"]

    def ingest(
        self,
        engine_id: str,
        text: str,
        first_line: int = 1,
        final: bool = False,
    ) -> str:
        resp = self._check(
            self._client.post(
                f"/engines/{engine_id}/ingest",
                params={"first_line": first_line, "final": str(final).lower()},
                content=text.encode("utf-8"),
                headers={"content-type": "text/plain; charset=utf-8"},
            )
        )
        return resp.text

    def close_epoch(self, engine_id: str) -> dict[str, Any]:
        return self._check(
            self._client.post(f"/engines/{engine_id}/epoch")
        ).json()

    def stats(self, engine_id: str) -> dict[str, Any]:
        return self._check(self._client.get(f"/engines/{engine_id}/stats")).json()

    def set_gates(self, engine_id: str, mode: str) -> dict[str, Any]:
        return self._check(
            self._client.post(f"/engines/{engine_id}/gates", json={"mode": mode})
        ).json()

    def adapt(
        self, engine_id: str, mode: str, quantile: float = 0.95
    ) -> dict[str, Any]:
        return self._check(
            self._client.post(
                f"/engines/{engine_id}/adapt",
                json={"mode": mode, "quantile": quantile},
            )
        ).json()

    def oracle_check(self, engine_id: str) -> dict[str, Any]:
        return self._check(
            self._client.post(f"/engines/{engine_id}/oracle-check")
        ).json()

    def backfill(self, queries: str, stream: str, as_of: int) -> str:
        resp = self._check(
            self._client.post(
                "/backfill",
                json={"queries": queries, "stream": stream, "as_of": as_of},
            )
        )
        return resp.text
