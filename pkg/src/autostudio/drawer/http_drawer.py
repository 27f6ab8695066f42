"""Client for remote drawers speaking the draw wire protocol."""

from __future__ import annotations

import requests

from ..errors import BridgeFailure
from .protocol import DrawRequest, DrawResponse, request_to_json, response_from_json
from .toy_drawer import PriorTurn, png_bytes


class HttpDrawer:
    """Posts draw requests to an external backend (e.g. a diffusion bridge)."""

    kind = "http"

    def __init__(self, endpoint: str, timeout: float = 300.0, api_key: str | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.api_key = api_key

    def draw(self, request: DrawRequest, prior: PriorTurn | None = None) -> DrawResponse:
        doc = request_to_json(request)
        if request.mode == "edit" and prior is not None and "prior_image" not in doc:
            import base64

            doc["prior_image"] = base64.b64encode(png_bytes(prior.image)).decode("ascii")
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                f"{self.endpoint}/draw", json=doc, timeout=self.timeout, headers=headers
            )
        except requests.RequestException as exc:
            raise BridgeFailure(f"drawer unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BridgeFailure(f"drawer returned {resp.status_code}: {resp.text[:500]}")
        try:
            return response_from_json(resp.json())
        except ValueError as exc:
            raise BridgeFailure(f"drawer returned non-JSON body: {exc}") from exc

    def capabilities(self) -> dict:
        try:
            resp = requests.get(f"{self.endpoint}/capabilities", timeout=30)
        except requests.RequestException as exc:
            raise BridgeFailure(f"drawer unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BridgeFailure(f"capabilities returned {resp.status_code}")
        return resp.json()
