"""Record a wire transcript of the desk fixture session for the browser viewer.

Writes ``viewer/test/fixtures/desk-session.json``: the hello payload the
service sends on connect, every session event, and state snapshots at three
reconnect points (before the first frame, after frame 3, and at the end).
The viewer's vitest suite replays this file instead of spawning the Python
service, which keeps ``npm test`` self-contained; the transcript is exact
because the session is deterministic under the virtual clock.

Run from the repository root after changing the engine, the desk scene, or
the task trace:

    python3 scripts/make_viewer_fixture.py
"""

import json
import tempfile
from pathlib import Path

from aor.server import PROTOCOL_VERSION
from aor.session import SessionConfig, SessionEngine, load_trace

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        config = SessionConfig(
            scene=ROOT / "fixtures" / "scenes" / "desk",
            state_dir=Path(tmp),
            mllm="replay:" + str(ROOT / "fixtures" / "mllm" / "desk.jsonl"),
            session_id="desk",
        )
        engine = SessionEngine(config)
        by_frame: dict[int, list[dict]] = {}
        for row in load_trace(ROOT / "fixtures" / "traces" / "desk-tasks.jsonl"):
            by_frame.setdefault(row["frame"], []).append(row["command"])

        snapshot_start = engine.snapshot()
        snapshot_mid = None
        while engine.frames_remaining():
            engine.step()
            for cmd in by_frame.get(engine.state.frame, ()):
                engine.handle(cmd)
            if engine.state.frame == 3:
                snapshot_mid = engine.snapshot()
        engine.finished = True
        engine.close()

        doc = {
            "hello": {
                "session": config.session_id,
                "protocol": PROTOCOL_VERSION,
                "cadence": config.cadence,
                "scene": {
                    "name": engine.scene.name,
                    "frame_count": engine.scene.frame_count,
                    "width": engine.scene.intrinsics.width,
                    "height": engine.scene.intrinsics.height,
                },
            },
            "snapshot_start": snapshot_start,
            "snapshot_mid": snapshot_mid,
            "snapshot_final": engine.snapshot(),
            "events": [json.loads(ev.to_json()) for ev in engine.events],
        }

    out = ROOT / "viewer" / "test" / "fixtures" / "desk-session.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out.relative_to(ROOT)} ({len(doc['events'])} events)")


if __name__ == "__main__":
    main()
