"""HTTP API for the live click -> mask loop.

Sessions are in-memory with an idle TTL. Each click re-runs the full
pipeline (encode, predict, refine) from the stored click list, so the
returned mask always equals a from-scratch recomputation. Requests within a
session are serialized; different sessions run concurrently against the
shared read-only model.
"""

import base64
import binascii
import io
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from PIL import Image as PILImage
from PIL import UnidentifiedImageError
from pydantic import BaseModel

from .clicks import Click, ClickSet
from .graphcut import EnergyParams, refine
from .model import load_model
from .simulate import ComposedSegmenter


class ImageIn(BaseModel):
    image: str  # base64 PNG


class ClickIn(BaseModel):
    row: int
    col: int
    polarity: Literal["positive", "negative"]


@dataclass
class Session:
    image: np.ndarray
    clicks: ClickSet
    mask: np.ndarray
    mask_png: bytes
    prob: np.ndarray
    touched: float
    lock: threading.Lock = field(default_factory=threading.Lock)


def _encode_mask_png(mask: np.ndarray) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(mask * np.uint8(255), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def create_app(
    model_path: str | None = None,
    model=None,
    energy_params: EnergyParams | None = None,
    max_image_dim: int = 1024,
    session_ttl: float = 1800.0,
    static_dir: str | None = None,
) -> FastAPI:
    if model is None:
        if model_path is None:
            raise ValueError("a model path or model instance is required")
        model = load_model(model_path)
    segmenter = ComposedSegmenter(model, energy_params or EnergyParams())

    app = FastAPI(title="clickseg")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    def _rerun(session: Session) -> None:
        q = segmenter.probability(session.image, session.clicks)
        mask = refine(session.image, q, session.clicks, segmenter.params)
        session.prob = q
        session.mask = mask
        session.mask_png = _encode_mask_png(mask)

    def _get(session_id: str) -> Session:
        with store_lock:
            session = sessions.get(session_id)
            if session is None:
                raise HTTPException(404, "unknown session")
            if time.monotonic() - session.touched > session_ttl:
                del sessions[session_id]
                raise HTTPException(404, "session expired")
            session.touched = time.monotonic()
            return session

    def _sweep() -> None:
        now = time.monotonic()
        with store_lock:
            for sid in [s for s, v in sessions.items() if now - v.touched > session_ttl]:
                del sessions[sid]

    @app.post("/sessions", status_code=201)
    def create_session(body: ImageIn):
        _sweep()
        try:
            raw = base64.b64decode(body.image, validate=True)
            img = PILImage.open(io.BytesIO(raw))
            img.load()
        except (binascii.Error, UnidentifiedImageError, OSError):
            raise HTTPException(400, "image is not decodable base64 PNG")
        if max(img.size) > max_image_dim:
            raise HTTPException(413, f"image exceeds max dimension {max_image_dim}")
        image = np.asarray(img.convert("RGB"), dtype=np.uint8)
        session = Session(
            image=image,
            clicks=ClickSet(),
            mask=np.zeros(image.shape[:2], np.uint8),
            mask_png=b"",
            prob=np.zeros(image.shape[:2]),
            touched=time.monotonic(),
        )
        _rerun(session)  # the pre-click mask, so undo-to-empty has an answer
        session_id = uuid.uuid4().hex
        with store_lock:
            sessions[session_id] = session
        return {"session_id": session_id, "width": image.shape[1], "height": image.shape[0]}

    @app.post("/sessions/{session_id}/clicks")
    def add_click(session_id: str, body: ClickIn):
        session = _get(session_id)
        with session.lock:
            h, w = session.image.shape[:2]
            if not (0 <= body.row < h and 0 <= body.col < w):
                raise HTTPException(422, f"click ({body.row}, {body.col}) outside {h}x{w}")
            click = Click(body.row, body.col, body.polarity == "positive")
            if session.clicks.contains(click):
                raise HTTPException(422, "duplicate click")
            session.clicks = session.clicks.with_click(click)
            _rerun(session)
            return {
                "mask": base64.b64encode(session.mask_png).decode(),
                "click_count": len(session.clicks),
            }

    @app.delete("/sessions/{session_id}/clicks/last")
    def undo_click(session_id: str):
        session = _get(session_id)
        with session.lock:
            if not len(session.clicks):
                return JSONResponse({"detail": "no clicks to undo"}, status_code=409)
            session.clicks = session.clicks.without_last()
            _rerun(session)
            return {
                "mask": base64.b64encode(session.mask_png).decode(),
                "click_count": len(session.clicks),
            }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = _get(session_id)
        with session.lock:
            return {
                "width": session.image.shape[1],
                "height": session.image.shape[0],
                "clicks": [
                    {
                        "row": c.row,
                        "col": c.col,
                        "polarity": "positive" if c.positive else "negative",
                    }
                    for c in session.clicks.clicks
                ],
                "mask": base64.b64encode(session.mask_png).decode(),
                "click_count": len(session.clicks),
            }

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
