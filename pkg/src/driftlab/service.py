"""HTTP facade over the detection loop's label queue.

The service exposes pending queries and the loop's status snapshot, and
accepts drift-type labels for pending queries. It never touches the
detector: a label POST only flips the query's status in the queue, and
the detection loop folds answered labels into its prototypes at the
next emission. That keeps the loop the single writer of model state,
so any number of browser tabs can race on the same query and exactly
one of them wins.

Detection meanwhile runs in a background thread, paced so that a human
has time to answer between emissions.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable, Iterable

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .active import (DetectionLoop, PENDING, QueryStateError,
                     UnknownQueryError)

log = logging.getLogger(__name__)

DEFAULT_PORT = 8787


class LabelBody(BaseModel):
    """POST body for /api/queries/{id}/label."""

    drift_class: str = Field(alias="class")


def create_app(loop: DetectionLoop) -> FastAPI:
    """Build the HTTP app around one detection loop."""
    app = FastAPI(title="driftlab label service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/queries")
    def queries(status: str | None = None) -> list[dict]:
        if status is None:
            found = loop.queue.all()
        elif status == PENDING:
            found = loop.queue.pending()
        else:
            found = [q for q in loop.queue.all() if q.status == status]
        return [q.to_dict() for q in found]

    @app.post("/api/queries/{query_id}/label", status_code=204)
    def label(query_id: int, body: LabelBody) -> Response:
        if body.drift_class not in loop.queue.classes:
            raise HTTPException(
                status_code=422,
                detail=f"class must be one of {list(loop.queue.classes)}")
        try:
            loop.queue.answer(query_id, body.drift_class)
        except UnknownQueryError:
            raise HTTPException(status_code=404,
                                detail=f"no query {query_id}") from None
        except QueryStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return Response(status_code=204)

    @app.get("/api/status")
    def status() -> dict:
        return loop.status()

    return app


def trace_feed(loop: DetectionLoop, trace: Iterable[int],
               pace: float = 0.05) -> Callable[[], None]:
    """Feed an error trace into the loop at a fixed pace."""
    def feed() -> None:
        for value in trace:
            loop.push(int(value))
            if pace > 0:
                time.sleep(pace)
    return feed


def serve(loop: DetectionLoop, feed: Callable[[], None],
          host: str = "127.0.0.1", port: int = DEFAULT_PORT) -> None:
    """Run ``feed`` in a background thread and the label API until it ends.

    The feeder thread is the loop's only writer; HTTP handlers touch
    nothing but the queue and read-only status.
    """
    import uvicorn

    feeder = threading.Thread(target=feed, daemon=True, name="stream-feeder")
    feeder.start()
    config = uvicorn.Config(create_app(loop), host=host, port=port,
                            log_level="warning")
    server = uvicorn.Server(config)

    def stop_when_done() -> None:
        feeder.join()
        # Leave a grace period so the console can read the final state.
        time.sleep(2.0)
        server.should_exit = True
        log.info("stream finished at position %d", loop.position)

    threading.Thread(target=stop_when_done, daemon=True).start()
    log.info("label service on http://%s:%d", host, port)
    server.run()
