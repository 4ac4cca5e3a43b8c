"""Regenerate the committed fixtures: scenes, command trace, MLLM replay store.

Run from the repository root:

    python scripts/make_fixtures.py

Everything here is deterministic; rerunning must reproduce identical scene
pixels and replay fingerprints.  The replay store is recorded by driving the
real engine against a scripted answer table, so fingerprints match exactly
what a test run asks for.
"""

from __future__ import annotations

import filecmp
import json
import shutil
import sys
import tempfile
from pathlib import Path

from aor.mllm import MllmClient, MllmRequest, MockBackend, RecordingBackend, ReplayStore
from aor.prompts import INDEXING_SUB_PROMPT, INFO_SUMMARY
from aor.session import SessionConfig, SessionEngine, load_trace
from aor.synthetic import box_scene_spec, desk_scene_spec, write_scene

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

SOY_SUMMARY = (
    "Superior Dark Soy Sauce * Naturally brewed dark soy sauce for braising and "
    "dipping * Adds deep color and rich umami * Store cool and dark; refrigerate "
    "after opening."
)
PASTA_QUESTION = "how much time do I need to cook this pasta?"
LACTOSE_QUESTION = "Which of these products contain lactose?"
PRICES_PROMPT = "Compare the prices."

TASKS = [
    # T4: identify the soy sauce bottle
    (0, {"kind": "select", "proxy": "p001"}),
    (0, {"kind": "dispatch", "proxy": "p001", "action": "info"}),
    (0, {"kind": "dismiss", "proxy": "p001"}),
    # T1: which drinks contain lactose (marks two of three)
    (1, {"kind": "select", "proxy": "p005"}),
    (1, {"kind": "compare", "proxies": ["p005", "p006", "p007"], "prompt": LACTOSE_QUESTION}),
    (1, {"kind": "dismiss", "proxy": "p005"}),
    # T2: open-ended comparison, single request
    (2, {"kind": "select", "proxy": "p006"}),
    (2, {"kind": "compare", "proxies": ["p006", "p007"], "prompt": PRICES_PROMPT}),
    (2, {"kind": "dismiss", "proxy": "p006"}),
    # T3: share the juice bottle with a contact
    (3, {"kind": "select", "proxy": "p008"}),
    (3, {"kind": "dispatch", "proxy": "p008", "action": "send_to_contact",
         "args": {"recipient": "Alex", "message": "Is this the orange juice you wanted?"}}),
    (3, {"kind": "dismiss", "proxy": "p008"}),
    # T6a: ask the pasta box about cooking time
    (4, {"kind": "select", "proxy": "p003"}),
    (4, {"kind": "dispatch", "proxy": "p003", "action": "ask", "args": {"text": PASTA_QUESTION}}),
    (4, {"kind": "dismiss", "proxy": "p003"}),
    # T6b: ten-minute countdown on the pot
    (5, {"kind": "select", "proxy": "p002"}),
    (5, {"kind": "dispatch", "proxy": "p002", "action": "countdown", "args": {"duration": 600}}),
    (5, {"kind": "dismiss", "proxy": "p002"}),
    # T5: note and timer on the plant, plus a short countdown that fires in-log
    (6, {"kind": "select", "proxy": "p004"}),
    (6, {"kind": "dispatch", "proxy": "p004", "action": "note", "args": {"text": "Water twice a week."}}),
    (6, {"kind": "dispatch", "proxy": "p004", "action": "timer"}),
    (6, {"kind": "dismiss", "proxy": "p004"}),
    (6, {"kind": "select", "proxy": "p005"}),
    (6, {"kind": "dispatch", "proxy": "p005", "action": "countdown", "args": {"duration": 0.02}}),
    (6, {"kind": "dismiss", "proxy": "p005"}),
    # shopping list entry for the (now renamed) soy sauce
    (7, {"kind": "select", "proxy": "p001"}),
    (7, {"kind": "dispatch", "proxy": "p001", "action": "add_to_shopping_list"}),
    (7, {"kind": "dismiss", "proxy": "p001"}),
]


def answer(req: MllmRequest) -> str:
    p = req.prompt
    if p.endswith(INDEXING_SUB_PROMPT.render()):
        return "0 and 2" if LACTOSE_QUESTION in p else "0"
    if p == LACTOSE_QUESTION:
        return "The milk in the cup and the cream liqueur in the glass contain lactose."
    if p == PRICES_PROMPT:
        return "Both look mid-priced; the taller bottle usually costs a bit more than the glass."
    if p == PASTA_QUESTION:
        return "Cook for 10 minutes."
    if p == INFO_SUMMARY.render():
        if req.conversation_id == "conv-p001":
            return SOY_SUMMARY
        return "Unbranded item * General household object * ‘None’ * No visible instructions."
    return "I cannot tell from this image."


def write_trace(path: Path) -> None:
    lines = [json.dumps({"frame": frame, "command": cmd}) for frame, cmd in TASKS]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def record_replies(scene_dir: Path, trace_path: Path, out_path: Path) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        engine = SessionEngine(SessionConfig(scene=scene_dir, state_dir=Path(tmp)))
        engine.client.backend = RecordingBackend(
            inner=MockBackend(rules=[answer]), store=ReplayStore(), path=out_path
        )
        engine.run(load_trace(trace_path))
        errors = [ev for ev in engine.events if ev.kind == "Error"]
        if errors:
            raise SystemExit(f"recording run produced Error events: {errors}")
        engine.close()


def verify_replay(scene_dir: Path, trace_path: Path, store_path: Path) -> None:
    logs = []
    for run in range(2):
        tmp = Path(tempfile.mkdtemp())
        engine = SessionEngine(
            SessionConfig(scene=scene_dir, state_dir=tmp, mllm=f"replay:{store_path}")
        )
        engine.run(load_trace(trace_path))
        errors = [ev for ev in engine.events if ev.kind == "Error"]
        if errors:
            raise SystemExit(f"replay run produced Error events: {errors}")
        engine.close()
        logs.append(engine.log_path)
    if not filecmp.cmp(logs[0], logs[1], shallow=False):
        raise SystemExit("replay runs are not byte-identical")
    for log in logs:
        shutil.rmtree(log.parent)


def main() -> int:
    box_dir = write_scene(box_scene_spec(), FIXTURES / "scenes" / "synthetic-box")
    print(f"wrote {box_dir}")
    desk_dir = write_scene(desk_scene_spec(), FIXTURES / "scenes" / "desk")
    print(f"wrote {desk_dir}")

    trace_path = FIXTURES / "traces" / "desk-tasks.jsonl"
    write_trace(trace_path)
    print(f"wrote {trace_path}")

    store_path = FIXTURES / "mllm" / "desk.jsonl"
    record_replies(desk_dir, trace_path, store_path)
    print(f"wrote {store_path}")

    verify_replay(desk_dir, trace_path, store_path)
    print("verified: replay runs clean and byte-identical")
    return 0


if __name__ == "__main__":
    sys.exit(main())
