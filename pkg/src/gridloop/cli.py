"""Command line front end.

Exit codes: 0 success, 1 validation error, 2 runtime divergence,
3 digest mismatch on replay.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
import time
from collections import deque

import yaml

from .engine.export import (
    export_record,
    write_decision_log,
    write_record_json,
)
from .engine.scenario import parse_scenario, validate_scenario
from .engine.simulation import Simulation, SimulationRecord
from .errors import ScenarioError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIVERGED = 2
EXIT_DIGEST = 3


def _load_yaml(path: str) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return None
    except yaml.YAMLError as exc:
        print(f"cannot parse {path}: {exc}", file=sys.stderr)
        return None


def _report(record: SimulationRecord) -> None:
    duration = record.frame_count * record.control_period_s
    print(f"run: {record.name} (seed {record.seed})")
    print(f"frames: {record.frame_count} "
          f"({duration:.3f} s at {record.control_period_s * 1e3:.1f} ms)")
    print(f"digest: {record.digest}")
    print(f"energy balance error: {record.energy.balance_error * 100:.4f}%")
    print(f"kcl residual max: {record.kcl_max:.3e} A")
    if record.events:
        print(f"events applied: {len(record.events)}")


def _diverged(record: SimulationRecord) -> bool:
    if record.diagnostic is None:
        return False
    print(f"run diverged at t={record.diagnostic['t']:.6f}: "
          f"{record.diagnostic['error']}: {record.diagnostic['message']}",
          file=sys.stderr)
    return True


def cmd_run(args: argparse.Namespace) -> int:
    doc = _load_yaml(args.scenario)
    if doc is None:
        return EXIT_INVALID
    if args.seed is not None and isinstance(doc, dict):
        doc["seed"] = args.seed
    problems = validate_scenario(doc)
    if problems:
        for problem in problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_INVALID
    scenario = parse_scenario(doc)
    started = time.perf_counter()
    record = Simulation(scenario).run()
    elapsed = time.perf_counter() - started
    _report(record)
    print(f"wall time: {elapsed:.2f} s")
    if args.out:
        if args.csv:
            written = export_record(record, args.out)
        else:
            os.makedirs(args.out, exist_ok=True)
            written = [os.path.join(args.out, "record.json"),
                       os.path.join(args.out, "decisions.log")]
            write_record_json(record, written[0])
            write_decision_log(record, written[1])
        for path in written:
            print(f"wrote: {path}")
    return EXIT_DIVERGED if _diverged(record) else EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    doc = _load_yaml(args.scenario)
    if doc is None:
        return EXIT_INVALID
    problems = validate_scenario(doc)
    if problems:
        for problem in problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_INVALID
    scenario = parse_scenario(doc)
    print(f"ok: {scenario.name} ({scenario.duration:.3f} s, "
          f"{len(scenario.events)} events)")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service.server import LiveServer

    doc = _load_yaml(args.scenario)
    if doc is None:
        return EXIT_INVALID
    try:
        scenario = parse_scenario(doc)
    except ScenarioError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    host, _, port_text = args.listen.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        print(f"invalid listen address {args.listen!r}; "
              "expected host:port", file=sys.stderr)
        return EXIT_INVALID
    server = LiveServer(scenario, host=host or "127.0.0.1", port=port,
                        pace=not args.no_pace, decimation=args.decimation)

    async def serve() -> SimulationRecord:
        task = asyncio.create_task(server.serve())
        await server._started.wait()
        assert server.address is not None
        print(f"listening on {server.address[0]}:{server.address[1]}",
              flush=True)
        return await task

    record = asyncio.run(serve())
    _report(record)
    return EXIT_DIVERGED if _diverged(record) else EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        with open(args.record, encoding="utf-8") as fh:
            header = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read {args.record}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not isinstance(header, dict) or "scenario" not in header:
        print("record must be a record.json with an embedded scenario",
              file=sys.stderr)
        return EXIT_INVALID
    problems = validate_scenario(header["scenario"])
    if problems:
        for problem in problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_INVALID

    sim = Simulation(parse_scenario(header["scenario"]))
    # recorded live injections are re-fed at their original boundaries
    pending = deque(e for e in header.get("events", [])
                    if e.get("source") == "injected")
    while not sim.finished:
        while pending and pending[0]["t"] <= sim.boundary_time + 1.0e-12:
            event = pending.popleft()
            ok, note = sim.inject_event(event["kind"], event["params"])
            if not ok:
                print(f"cannot re-inject recorded event at "
                      f"t={event['t']:.6f}: {note}", file=sys.stderr)
        sim.step_period()
    record = sim.finalize()
    if _diverged(record):
        return EXIT_DIVERGED

    expected = args.check or header.get("digest")
    print(f"replayed digest: {record.digest}")
    print(f"expected digest: {expected}")
    if record.digest != expected:
        print("digest mismatch", file=sys.stderr)
        return EXIT_DIGEST
    print("digest match")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridloop",
        description="Two-generator microgrid twin: run, validate, serve, "
                    "and replay scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario to completion")
    run.add_argument("scenario", help="scenario YAML file")
    run.add_argument("--out", help="directory for run outputs")
    run.add_argument("--csv", action="store_true",
                     help="also write per-period CSV exports")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="check a scenario file")
    validate.add_argument("scenario", help="scenario YAML file")
    validate.set_defaults(func=cmd_validate)

    serve = sub.add_parser("serve", help="run live with the network service")
    serve.add_argument("scenario", help="scenario YAML file")
    serve.add_argument("--listen", default="127.0.0.1:7700",
                       help="host:port to listen on (port 0 picks one)")
    serve.add_argument("--decimation", type=int, default=20,
                       help="publish every Nth control period")
    serve.add_argument("--no-pace", action="store_true",
                       help="run flat out instead of tracking wall time")
    serve.set_defaults(func=cmd_serve)

    replay = sub.add_parser("replay",
                            help="re-run a record.json and compare digests")
    replay.add_argument("record", help="record.json from a previous run")
    replay.add_argument("--check", help="expected digest (defaults to the "
                                        "one in the record)")
    replay.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    sys.exit(args.func(args))


if __name__ == "__main__":
    main()
