"""HTTP client for a remote embedding / scoring service."""

import asyncio
import logging
import math
from types import TracebackType
from typing import Any, Dict, List, Optional, Sequence, Type

import aiohttp

from ..config import EngineSettings
from ..core.models import EmbeddingVector, QuerySpec
from ..errors import MalformedResponse, ProviderUnavailable
from .base import EmbeddingProvider, EmbedRequest, Scorer, serialize_item

logger = logging.getLogger(__name__)

EMBED_PATH = "/v1/embed"
SCORE_PATH = "/v1/score"


class ServiceClient:
    """JSON POST client with bounded retries and in-flight limiting."""

    def __init__(
        self,
        base_url: str,
        timeout_s: float = 30.0,
        retries: int = 3,
        backoff_s: float = 0.25,
        max_in_flight: int = 4,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = aiohttp.ClientTimeout(total=timeout_s)
        self.retries = max(1, retries)
        self.backoff_s = backoff_s
        self.max_in_flight = max(1, max_in_flight)
        self.session: Optional[aiohttp.ClientSession] = None
        self._semaphore: Optional[asyncio.Semaphore] = None

    async def __aenter__(self) -> "ServiceClient":
        self.session = aiohttp.ClientSession(timeout=self.timeout)
        self._semaphore = asyncio.Semaphore(self.max_in_flight)
        return self

    async def __aexit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_val: Optional[BaseException],
        exc_tb: Optional[TracebackType],
    ) -> None:
        if self.session is not None:
            await self.session.close()

    async def post(self, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        """POST a JSON payload; retry transport failures and 5xx responses."""
        url = f"{self.base_url}{path}"
        last_error = "no attempt made"
        async with self._semaphore:
            for attempt in range(self.retries):
                if attempt:
                    delay = self.backoff_s * 2 ** (attempt - 1)
                    logger.warning(
                        f"Retrying {url} in {delay:.2f}s "
                        f"(attempt {attempt + 1}/{self.retries}): {last_error}"
                    )
                    await asyncio.sleep(delay)
                try:
                    async with self.session.post(url, json=payload) as resp:
                        if resp.status >= 500:
                            last_error = f"HTTP {resp.status}"
                            continue
                        if resp.status != 200:
                            body = await resp.text()
                            raise MalformedResponse(
                                f"{url} answered HTTP {resp.status}: {body[:200]}"
                            )
                        try:
                            data = await resp.json(content_type=None)
                        except ValueError as e:
                            raise MalformedResponse(f"{url} returned invalid JSON: {e}") from e
                except (aiohttp.ClientError, asyncio.TimeoutError) as e:
                    last_error = f"{type(e).__name__}: {e}"
                    continue

                if not isinstance(data, dict):
                    raise MalformedResponse(f"{url} returned a non-object JSON body")
                return data

        logger.error(f"Service {url} unavailable after {self.retries} attempts: {last_error}")
        raise ProviderUnavailable(
            f"{url} unavailable after {self.retries} attempts: {last_error}"
        )


def _chunks(items: Sequence[Any], size: int) -> List[Sequence[Any]]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def parse_embeddings(data: Dict[str, Any], expected: int) -> List[List[float]]:
    """Validate an embed response body and return its rows."""
    dim = data.get("dim")
    rows = data.get("embeddings")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise MalformedResponse(f"Response dim is not a positive int: {dim!r}")
    if not isinstance(rows, list) or len(rows) != expected:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise MalformedResponse(f"Expected {expected} embeddings, got {got}")
    for row in rows:
        if not isinstance(row, list) or len(row) != dim:
            raise MalformedResponse(f"Embedding row does not have dim {dim}")
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in row):
            raise MalformedResponse("Embedding row contains non-finite or non-numeric values")
    return rows


class RemoteEmbeddingProvider(EmbeddingProvider):
    """Embeds items through POST /v1/embed."""

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        timeout_s: float = 30.0,
        retries: int = 3,
        backoff_s: float = 0.25,
        max_in_flight: int = 4,
        batch_size: int = 32,
    ) -> None:
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s
        self.max_in_flight = max_in_flight
        self.batch_size = max(1, batch_size)

    @classmethod
    def from_settings(cls, settings: EngineSettings) -> "RemoteEmbeddingProvider":
        return cls(
            settings.endpoint,
            timeout_s=settings.timeout_s,
            retries=settings.retries,
            backoff_s=settings.backoff_s,
            max_in_flight=settings.max_in_flight,
        )

    def _client(self) -> ServiceClient:
        return ServiceClient(
            self.endpoint,
            timeout_s=self.timeout_s,
            retries=self.retries,
            backoff_s=self.backoff_s,
            max_in_flight=self.max_in_flight,
        )

    async def embed_async(self, request: EmbedRequest) -> List[EmbeddingVector]:
        batches = _chunks(request.items, self.batch_size)
        async with self._client() as client:
            results = await asyncio.gather(
                *(
                    client.post(
                        EMBED_PATH,
                        {
                            "prompt_id": request.prompt_id,
                            "items": [serialize_item(spec) for spec in batch],
                        },
                    )
                    for batch in batches
                )
            )

        vectors: List[EmbeddingVector] = []
        dim = None
        for batch, data in zip(batches, results):
            rows = parse_embeddings(data, len(batch))
            if dim is not None and data["dim"] != dim:
                raise MalformedResponse(
                    f"Service returned mixed dims across batches: {dim} and {data['dim']}"
                )
            dim = data["dim"]
            vectors.extend(EmbeddingVector(row) for row in rows)

        logger.info(f"Embedded {len(vectors)} items via {self.endpoint} (dim {dim})")
        return vectors

    def embed(self, request: EmbedRequest) -> List[EmbeddingVector]:
        return asyncio.run(self.embed_async(request))


class RemoteScorer(Scorer):
    """Pointwise matching scores through POST /v1/score."""

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        timeout_s: float = 30.0,
        retries: int = 3,
        backoff_s: float = 0.25,
        max_in_flight: int = 4,
        batch_size: int = 16,
        prompt_id: str = "rerank_match",
    ) -> None:
        self.client_args = dict(
            timeout_s=timeout_s,
            retries=retries,
            backoff_s=backoff_s,
            max_in_flight=max_in_flight,
        )
        self.endpoint = endpoint
        self.batch_size = max(1, batch_size)
        self.prompt_id = prompt_id

    async def score_async(self, query: QuerySpec, item_ids: Sequence[str]) -> List[float]:
        if not item_ids:
            return []
        batches = _chunks(list(item_ids), self.batch_size)
        async with ServiceClient(self.endpoint, **self.client_args) as client:
            results = await asyncio.gather(
                *(
                    client.post(
                        SCORE_PATH,
                        {
                            "prompt_id": self.prompt_id,
                            "pairs": [
                                {"query_text": query.key, "item_id": item_id}
                                for item_id in batch
                            ],
                        },
                    )
                    for batch in batches
                )
            )

        scores: List[float] = []
        for batch, data in zip(batches, results):
            values = data.get("scores")
            if not isinstance(values, list) or len(values) != len(batch):
                raise MalformedResponse(f"Expected {len(batch)} scores from {self.endpoint}")
            try:
                scores.extend(float(v) for v in values)
            except (TypeError, ValueError) as e:
                raise MalformedResponse(f"Non-numeric score from {self.endpoint}") from e
        return scores

    def score(self, query: QuerySpec, item_ids: Sequence[str]) -> List[float]:
        return asyncio.run(self.score_async(query, item_ids))
