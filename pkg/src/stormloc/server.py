"""HTTP service for the blinded preference study.

Endpoints (JSON):

    GET  /api/study/{split}/next?rater=ID   next unjudged item for the rater
    POST /api/study/submit                  {item_id, rater, choice}
    GET  /api/study/{split}/report          de-blinded tally + p-value
    GET  /healthz                           liveness probe
    GET  /                                  static rater UI (when built)

Submissions are appended to the checksummed log and fsynced before the
acknowledgment; replaying an identical submission returns the prior ack
without double-counting. The payload sent to raters never contains the
marker-to-source assignment.
"""

from __future__ import annotations

import os
import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .evaluation import study_summary
from .study import (
    CHOICES,
    StudyItem,
    format_record_line,
    load_log,
    rater_payload,
    resolve_records,
    sample_study_items,
)
from .synth import Dataset
from .nn.unet import ModelState

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>preference study</title></head>
<body><h1>Preference study service</h1>
<p>The rater UI is not built. Build the frontend (see frontend/README.md)
and pass its dist directory via --static-dir, or use the JSON API.</p>
</body></html>
"""


class StudyState:
    """Items per split, the judgment log, and an idempotency index."""

    def __init__(
        self,
        data: Dataset,
        model: ModelState,
        log_path: str | Path,
        splits: tuple[str, ...] = ("train", "test"),
        n_items: int = 200,
        seed: int = 0,
    ) -> None:
        self.data = data
        self.log_path = Path(log_path)
        self.items: dict[str, list[StudyItem]] = {
            split: sample_study_items(data, split, n_items, seed, model) for split in splits
        }
        self.items_by_id = {it.item_id: it for items in self.items.values() for it in items}
        self._lock = threading.Lock()
        self._seen: dict[tuple[str, str], str] = {}
        for entry in load_log(self.log_path):
            self._seen[(entry.item_id, entry.rater_id)] = entry.choice

    def next_item(self, split: str, rater: str) -> StudyItem | None:
        for item in self.items[split]:
            if (item.item_id, rater) not in self._seen:
                return item
        return None

    def completed(self, split: str, rater: str) -> int:
        return sum(1 for it in self.items[split] if (it.item_id, rater) in self._seen)

    def submit(self, item_id: str, rater: str, choice: str) -> str:
        """Durably record one judgment; returns 'recorded' or 'duplicate'."""
        with self._lock:
            prior = self._seen.get((item_id, rater))
            if prior is not None:
                if prior != choice:
                    raise ValueError("conflicting choice already recorded")
                return "duplicate"
            line = format_record_line(item_id, rater, choice, int(time.time()))
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            self._seen[(item_id, rater)] = choice
            return "recorded"

    def report(self, split: str) -> dict:
        entries = [e for e in load_log(self.log_path) if e.item_id in self.items_by_id
                   and self.items_by_id[e.item_id].split == split]
        tally = study_summary(resolve_records(entries, self.items_by_id))
        return {
            "model": tally.prefer_model,
            "label": tally.prefer_label,
            "neither": tally.neither,
            "total": tally.total,
            "p_value": tally.p_value,
            "vacuous": tally.vacuous,
        }


class Submission(BaseModel):
    item_id: str
    rater: str
    choice: str


def create_app(state: StudyState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="storm localization preference study")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/api/study/{split}/next")
    def next_item(split: str, rater: str = Query(default="anonymous")) -> dict:
        if split not in state.items:
            raise HTTPException(status_code=404, detail=f"no study for split {split!r}")
        total = len(state.items[split])
        done = state.completed(split, rater)
        item = state.next_item(split, rater)
        if item is None:
            return {"done": True, "progress": {"completed": done, "total": total}}
        payload = rater_payload(item, state.data)
        payload["progress"] = {"completed": done, "total": total}
        return payload

    @app.post("/api/study/submit")
    def submit(body: Submission) -> dict:
        if body.choice not in CHOICES:
            raise HTTPException(status_code=422, detail=f"choice must be one of {CHOICES}")
        if body.item_id not in state.items_by_id:
            raise HTTPException(status_code=404, detail=f"unknown item {body.item_id!r}")
        try:
            status = state.submit(body.item_id, body.rater, body.choice)
        except ValueError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"status": status, "item_id": body.item_id}

    @app.get("/api/study/{split}/report")
    def report(split: str) -> dict:
        if split not in state.items:
            raise HTTPException(status_code=404, detail=f"no study for split {split!r}")
        return state.report(split)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return _FALLBACK_PAGE

    return app
