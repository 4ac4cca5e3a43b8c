"""Command line entry points: run, replay, validate, bench."""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from .detection import FilterPolicy
from .errors import AorError
from .scene import load_scene
from .session import SessionConfig, SessionEngine, load_trace, replay_log, summarize_metrics


def _csv(value: str) -> frozenset[str]:
    return frozenset(part.strip() for part in value.split(",") if part.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aor", description="Object intelligence session runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process a recorded scene, optionally serving viewers")
    run.add_argument("--scene", required=True, type=Path)
    run.add_argument("--state-dir", required=True, type=Path)
    run.add_argument("--detector", default="scripted", help="scripted | http:<url>")
    run.add_argument("--mllm", default="mock", help="mock | mock:fixed:<text> | replay:<path> | live:<url>")
    run.add_argument("--trace", type=Path, help="JSONL command trace to apply during the run")
    run.add_argument("--session-id", default="session")
    run.add_argument("--dedup-radius", type=float, default=0.3)
    run.add_argument("--min-confidence", type=float, default=0.5)
    run.add_argument("--deny", type=_csv, default=frozenset({"person"}), help="comma-separated denylist labels")
    run.add_argument("--allow", type=_csv, default=frozenset(), help="comma-separated allowlist labels")
    run.add_argument("--cadence", type=float, default=30.0, help="frames per second of session time")
    run.add_argument("--detect-every", type=int, default=1)
    run.add_argument("--stale-after", type=int, default=None)
    run.add_argument("--clock", choices=("virtual", "wall"), default="virtual")
    run.add_argument("--record", type=Path, help="record MLLM replies into this replay file")
    run.add_argument("--serve", metavar="HOST:PORT", help="serve the viewer protocol while running")

    replay = sub.add_parser("replay", help="rebuild session state from an event log")
    replay.add_argument("--log", required=True, type=Path)
    replay.add_argument("--snapshot", type=Path, help="write the reconstructed state snapshot here")

    validate = sub.add_parser("validate", help="check a scene directory")
    validate.add_argument("--scene", required=True, type=Path)

    bench = sub.add_parser("bench", help="measure per-frame pipeline core latency")
    bench.add_argument("--scene", required=True, type=Path)
    bench.add_argument("--repeat", type=int, default=3, help="passes over the scene")
    return parser


def _cmd_run(args) -> int:
    policy = FilterPolicy(denylist=args.deny, allowlist=args.allow, min_confidence=args.min_confidence)
    config = SessionConfig(
        scene=args.scene,
        state_dir=args.state_dir,
        detector=args.detector,
        mllm=args.mllm,
        session_id=args.session_id,
        policy=policy,
        dedup_radius=args.dedup_radius,
        cadence=args.cadence,
        detect_every=args.detect_every,
        stale_after=args.stale_after,
        clock=args.clock,
        record=args.record,
    )
    engine = SessionEngine(config)
    trace = load_trace(args.trace) if args.trace else None
    try:
        if args.serve:
            host, _, port = args.serve.rpartition(":")
            from .server import serve

            for row in trace or []:
                engine.submit(row["command"])  # traces still work while serving
            print(f"serving on http://{host or '127.0.0.1'}:{port} (Ctrl-C to stop)")
            serve(engine, host or "127.0.0.1", int(port))
        else:
            engine.run(trace)
    finally:
        engine.close()
    errors = sum(1 for ev in engine.events if ev.kind == "Error")
    print(f"processed {engine.state.frame + 1} frames, {len(engine.events)} events ({errors} errors)")
    print(f"proxies: {len(engine.registry)}, widgets: {len(engine.state.board)}, "
          f"comparisons: {len(engine.state.comparisons)}")
    if engine.core_ms:
        m = summarize_metrics(engine.core_ms)
        print(f"pipeline core: p50 {m['p50_ms']} ms, p95 {m['p95_ms']} ms over {m['frames']} frames")
    print(f"event log: {engine.log_path}")
    return 0


def _cmd_replay(args) -> int:
    state = replay_log(args.log)
    print(f"replayed {state.seq} events, {state.frame + 1} frames")
    for proxy in sorted(state.registry.proxies(), key=lambda p: p.id):
        name = proxy.refined_label or proxy.label
        x, y, z = proxy.world_pos
        flags = []
        if proxy.marked:
            flags.append("marked")
        if proxy.conversation:
            flags.append(proxy.conversation)
        extra = f" [{', '.join(flags)}]" if flags else ""
        print(f"  {proxy.id} {name!r} at ({x:.3f}, {y:.3f}, {z:.3f}) {proxy.state.encode()}{extra}")
    for w in sorted(state.board.widgets(), key=lambda w: w.id):
        detail = f"text={w.text!r}" if w.kind == "note" else f"duration={w.duration}, fired={w.fired}"
        print(f"  {w.id} {w.kind} on {w.proxy_id} ({detail})")
    print(f"  shopping entries: {len(state.shopping)}, shares: {len(state.shares)}, "
          f"comparisons: {len(state.comparisons)}")
    if args.snapshot:
        args.snapshot.write_text(
            json.dumps(state.snapshot(), sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"
        )
        print(f"snapshot written to {args.snapshot}")
    return 0


def _cmd_validate(args) -> int:
    scene = load_scene(args.scene)
    k = scene.intrinsics
    print(f"{scene.name}: {scene.frame_count} frames at {k.width}x{k.height}, "
          f"fx={k.fx} fy={k.fy}, {len(scene.ground_truth)} ground-truth detections")
    return 0


def _cmd_bench(args) -> int:
    core_ms: list[float] = []
    for _ in range(args.repeat):
        with tempfile.TemporaryDirectory() as tmp:
            engine = SessionEngine(SessionConfig(scene=args.scene, state_dir=Path(tmp)))
            engine.run()
            core_ms.extend(engine.core_ms)
            engine.close()
    m = summarize_metrics(core_ms)
    print(f"pipeline core over {m['frames']} frames: "
          f"p50 {m['p50_ms']} ms, p95 {m['p95_ms']} ms, max {m['max_ms']} ms")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "replay": _cmd_replay,
        "validate": _cmd_validate,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except AorError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
