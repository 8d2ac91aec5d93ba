"""HTTP client for an external model service.

Endpoints (JSON bodies):
  POST /score    {"pairs": [{"faq", "question"}, ...]} -> {"scores": [...]}
  POST /train    {"dataset": [...], "validation": [...], "init_from": str?}
                 -> {"model_id": str}
  POST /generate {"model_id": str, "sequence": str} -> {"tokens": [str, ...]}

Failures raise ModelServiceError carrying the endpoint; the client never
substitutes default values for a missing or malformed reply.
"""

from __future__ import annotations

import requests


class ModelServiceError(RuntimeError):
    def __init__(self, endpoint: str, cause: str):
        super().__init__(f"model service {endpoint}: {cause}")
        self.endpoint = endpoint
        self.cause = cause


class ModelServiceClient:
    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _post(self, path: str, body: dict) -> dict:
        endpoint = f"{self.base_url}{path}"
        try:
            response = requests.post(endpoint, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ModelServiceError(endpoint, str(exc)) from exc
        if response.status_code != 200:
            raise ModelServiceError(endpoint, f"HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ModelServiceError(endpoint, "reply is not JSON") from exc
        if not isinstance(payload, dict):
            raise ModelServiceError(endpoint, "reply is not a JSON object")
        return payload

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        """Score (faq text, question text) pairs; replies pass through verbatim."""
        endpoint = f"{self.base_url}/score"
        body = {"pairs": [{"faq": faq, "question": question} for faq, question in pairs]}
        payload = self._post("/score", body)
        scores = payload.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise ModelServiceError(endpoint, "reply 'scores' missing or wrong length")
        try:
            return [float(s) for s in scores]
        except (TypeError, ValueError) as exc:
            raise ModelServiceError(endpoint, "non-numeric score in reply") from exc

    def train(
        self,
        dataset: list[dict],
        validation: list[dict],
        init_from: str | None = None,
    ) -> str:
        """Train a model, optionally initialized from another; returns its id."""
        endpoint = f"{self.base_url}/train"
        body: dict = {"dataset": dataset, "validation": validation}
        if init_from is not None:
            body["init_from"] = init_from
        payload = self._post("/train", body)
        model_id = payload.get("model_id")
        if not isinstance(model_id, str) or not model_id:
            raise ModelServiceError(endpoint, "reply 'model_id' missing")
        return model_id

    def generate(self, model_id: str, sequence: str) -> list[str]:
        """Generate a token list for a flattened input sequence."""
        endpoint = f"{self.base_url}/generate"
        payload = self._post("/generate", {"model_id": model_id, "sequence": sequence})
        tokens = payload.get("tokens")
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise ModelServiceError(endpoint, "reply 'tokens' missing or malformed")
        return tokens
