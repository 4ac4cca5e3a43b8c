"""Companion-viewer service: WebSocket event stream plus image endpoints.

Wire protocol (see ``docs/protocol.md``): every WebSocket message is a JSON
object ``{"seq"?, "type", "payload"}``.  On connect the service sends
``hello`` then ``snapshot``; afterwards each session event is pushed as an
``event`` message in seq order.  Clients send ``command`` messages, which are
queued for the engine's single writer thread.  A malformed frame gets an
``error`` reply and leaves the session untouched.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .session import SessionEngine

PROTOCOL_VERSION = 1
# event poll period; bounds push latency without cross-thread wakeups
POLL_S = 0.02


def build_app(engine: SessionEngine, viewer_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="object intelligence service")

    @app.get("/frames/{index}.png")
    def frame(index: int):
        if not (0 <= index < engine.scene.frame_count):
            return JSONResponse({"error": f"frame {index} out of range"}, status_code=404)
        return FileResponse(engine.scene.color_paths[index], media_type="image/png")

    @app.get("/crops/{name}.png")
    def crop_image(name: str):
        path = engine.crops_dir / f"{name}.png"
        if not path.is_file():
            return JSONResponse({"error": f"no crop {name}"}, status_code=404)
        return FileResponse(path, media_type="image/png")

    @app.get("/snapshot")
    def snapshot():
        return JSONResponse(engine.snapshot())

    @app.websocket("/ws")
    async def ws(socket: WebSocket):
        await socket.accept()
        snap = engine.snapshot()
        await socket.send_json(
            {
                "type": "hello",
                "payload": {
                    "session": engine.config.session_id,
                    "protocol": PROTOCOL_VERSION,
                    "cadence": engine.config.cadence,
                    "scene": {
                        "name": engine.scene.name,
                        "frame_count": engine.scene.frame_count,
                        "width": engine.scene.intrinsics.width,
                        "height": engine.scene.intrinsics.height,
                    },
                },
            }
        )
        await socket.send_json({"seq": snap["seq"], "type": "snapshot", "payload": snap})
        cursor = snap["seq"]

        receiver = asyncio.ensure_future(socket.receive_text())
        try:
            while True:
                done, _ = await asyncio.wait({receiver}, timeout=POLL_S)
                if receiver in done:
                    try:
                        raw = receiver.result()
                    except WebSocketDisconnect:
                        break
                    reply = _accept_client_frame(engine, raw)
                    if reply is not None:
                        await socket.send_json(reply)
                    receiver = asyncio.ensure_future(socket.receive_text())
                for ev in engine.events_since(cursor):
                    cursor = ev.seq
                    await socket.send_json(
                        {
                            "seq": ev.seq,
                            "type": "event",
                            "payload": {"seq": ev.seq, "ts": ev.ts, "kind": ev.kind, "payload": ev.payload},
                        }
                    )
        finally:
            receiver.cancel()

    if viewer_dir is not None and Path(viewer_dir).is_dir():
        app.mount("/", StaticFiles(directory=viewer_dir, html=True), name="viewer")
    return app


def _accept_client_frame(engine: SessionEngine, raw: str) -> Optional[dict]:
    """Queue a client command; an error reply dict when the frame is bad."""
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as e:
        return {"type": "error", "payload": {"reason": f"malformed JSON: {e.msg}"}}
    if not isinstance(msg, dict) or msg.get("type") != "command" or not isinstance(msg.get("payload"), dict):
        return {"type": "error", "payload": {"reason": "expected {type: 'command', payload: {...}}"}}
    engine.submit(msg["payload"])
    return None


def default_viewer_dir() -> Optional[Path]:
    """The built browser viewer, when present next to the repo."""
    for candidate in (
        Path(__file__).resolve().parents[2] / "viewer" / "dist",
        Path.cwd() / "viewer" / "dist",
    ):
        if candidate.is_dir():
            return candidate
    return None


def serve(engine: SessionEngine, host: str, port: int, pace: bool = True) -> None:
    """Run the HTTP/WS service and drive the session until frames run out.

    The engine steps in the calling thread (single writer); uvicorn runs in a
    daemon thread.  After the last frame the service keeps serving so viewers
    can inspect the final state; Ctrl-C stops it.
    """
    import uvicorn

    app = build_app(engine, default_viewer_dir())
    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        period = 1.0 / engine.config.cadence
        while engine.frames_remaining():
            started = time.monotonic()
            engine.step()
            engine.drain()
            if pace:
                time.sleep(max(0.0, period - (time.monotonic() - started)))
        while True:
            engine.drain()
            time.sleep(POLL_S)
    except KeyboardInterrupt:
        pass
    finally:
        server.should_exit = True
        thread.join(timeout=5)
