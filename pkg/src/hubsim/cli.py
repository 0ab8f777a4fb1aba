"""Command line operation: serve, headless run, validation, replay checks.

Exit codes are stable: 0 success, 1 replay divergence, 2 validation
failure, 3 format error in a replay artifact (script or checkpoint file).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from . import agents as ag
from . import simcore
from .errors import LogGap, MalformedDocument, SimError
from .events import TOUR_COMPLETED
from .sitemodel import SiteMap, load_site, validate_site
from .tour import BarrierScenario, load_scenario, validate_scenario

log = logging.getLogger("hubsim")

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_INVALID = 2
EXIT_FORMAT = 3

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("SIM_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _bundled(name: str) -> bytes:
    return resources.files("hubsim").joinpath(f"fixtures/{name}").read_bytes()


def _read_path(path: Optional[str], fallback: str, what: str) -> bytes:
    if path is None:
        return _bundled(fallback)
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise FileNotFoundError(f"{what} file {path!r}: {exc.strerror}") from exc


@dataclass
class Documents:
    site_raw: bytes
    scenario_raw: bytes
    schedule_raw: bytes
    catalog_raw: bytes
    site: SiteMap
    scenario: BarrierScenario
    schedule: ag.TransitSchedule
    catalog: ag.ArchetypeCatalog


def _load_and_validate(args) -> tuple[Optional[Documents], list[dict]]:
    """Load the four input documents; collect every validation problem."""
    problems: list[dict] = []

    def problem(source: str, message: str) -> None:
        problems.append({"source": source, "severity": "error", "message": message})

    raws = {}
    for source, attr, fallback in (
        ("site", "site", "durlacher-tor-mini.site.json"),
        ("scenario", "scenario", "tour.json"),
        ("schedule", "schedule", "schedule.json"),
        ("catalog", "catalog", "catalog.json"),
    ):
        try:
            raws[source] = _read_path(getattr(args, attr), fallback, source)
        except FileNotFoundError as exc:
            problem(source, str(exc))
    if problems:
        return None, problems

    site = scenario = schedule = catalog = None
    try:
        site = load_site(raws["site"])
        for issue in validate_site(site):
            if issue.severity == "error":
                problem("site", issue.message)
            else:
                log.warning("site: %s", issue.message)
    except SimError as exc:
        problem("site", str(exc))
    try:
        scenario = load_scenario(raws["scenario"])
        if site is not None:
            for msg in validate_scenario(scenario, site):
                problem("scenario", msg)
    except SimError as exc:
        problem("scenario", str(exc))
    try:
        schedule = ag.load_schedule(raws["schedule"])
        for msg in ag.validate_schedule(schedule):
            problem("schedule", msg)
    except SimError as exc:
        problem("schedule", str(exc))
    try:
        catalog = ag.load_catalog(raws["catalog"])
        for msg in ag.validate_catalog(catalog):
            problem("catalog", msg)
    except SimError as exc:
        problem("catalog", str(exc))

    if problems or site is None or scenario is None or schedule is None or catalog is None:
        return None, problems
    return (
        Documents(
            site_raw=raws["site"],
            scenario_raw=raws["scenario"],
            schedule_raw=raws["schedule"],
            catalog_raw=raws["catalog"],
            site=site,
            scenario=scenario,
            schedule=schedule,
            catalog=catalog,
        ),
        problems,
    )


def _report(problems: list[dict], as_json: bool) -> None:
    if as_json:
        print(json.dumps({"ok": not problems, "problems": problems}, indent=2))
        return
    if not problems:
        print("all inputs valid")
        return
    for p in problems:
        print(f"{p['source']}: {p['message']}", file=sys.stderr)


def cmd_validate(args) -> int:
    _, problems = _load_and_validate(args)
    _report(problems, args.json)
    return EXIT_INVALID if problems else EXIT_OK


def cmd_run(args) -> int:
    docs, problems = _load_and_validate(args)
    if docs is None:
        _report(problems, False)
        return EXIT_INVALID

    script: list[simcore.InputFrame] = []
    if args.script:
        try:
            with open(args.script, "rb") as fh:
                script = simcore.read_input_log(fh.read())
            simcore.check_log_contiguous(script)
        except OSError as exc:
            print(f"script file {args.script!r}: {exc.strerror}", file=sys.stderr)
            return EXIT_FORMAT
        except (MalformedDocument, LogGap) as exc:
            print(f"script: {exc}", file=sys.stderr)
            return EXIT_FORMAT

    try:
        world = simcore.init_world(
            docs.site, docs.scenario, docs.schedule, args.seed, docs.catalog
        )
    except SimError as exc:
        print(f"world init: {exc}", file=sys.stderr)
        return EXIT_INVALID

    ticks = args.ticks
    events_lines: list[str] = []
    checkpoints: list[tuple[int, int]] = []
    consumed: list[simcore.InputFrame] = []
    event_counts: dict[str, int] = {}
    tour_completed = False
    for t in range(ticks):
        if t % 100 == 0:
            checkpoints.append((t, simcore.state_hash(world)))
        if t < len(script):
            frame = simcore.InputFrame(t, script[t].move, script[t].rot, script[t].act)
        else:
            frame = simcore.neutral_frame(t)
        consumed.append(frame)
        for e in simcore.step(world, frame):
            events_lines.append(json.dumps(e.to_json_obj(), separators=(",", ":")))
            event_counts[e.kind] = event_counts.get(e.kind, 0) + 1
            if e.kind == TOUR_COMPLETED:
                tour_completed = True
    if ticks % 100 == 0:
        checkpoints.append((ticks, simcore.state_hash(world)))

    if args.out_events:
        with open(args.out_events, "w", encoding="utf-8") as fh:
            fh.write("".join(line + "\n" for line in events_lines))
    if args.out_checkpoints:
        with open(args.out_checkpoints, "w", encoding="utf-8") as fh:
            fh.write(simcore.write_checkpoints(checkpoints))
    if args.record:
        with open(args.record, "w", encoding="utf-8") as fh:
            fh.write(simcore.write_input_log(consumed))

    for kind in sorted(event_counts):
        print(f"events.{kind}={event_counts[kind]}")
    total = sum(event_counts.values())
    print(f"ticks={ticks} events={total} tour_completed={str(tour_completed).lower()}")
    return EXIT_OK


def cmd_replay(args) -> int:
    docs, problems = _load_and_validate(args)
    if docs is None:
        _report(problems, False)
        return EXIT_INVALID

    try:
        with open(args.script, "rb") as fh:
            script = simcore.read_input_log(fh.read())
        with open(args.checkpoints, "rb") as fh:
            checkpoints = simcore.read_checkpoints(fh.read())
    except OSError as exc:
        print(f"replay artifact: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except MalformedDocument as exc:
        print(f"replay artifact: {exc}", file=sys.stderr)
        return EXIT_FORMAT

    try:
        result = simcore.run_replay(
            docs.site,
            docs.scenario,
            docs.schedule,
            args.seed,
            script,
            checkpoints,
            docs.catalog,
        )
    except (LogGap, MalformedDocument) as exc:
        print(f"replay: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    if result.ok:
        print(f"replay ok: {len(checkpoints)} checkpoints verified")
        return EXIT_OK
    print(
        f"replay diverged at tick {result.tick}: "
        f"expected {result.expected:016x}, got {result.actual:016x}"
    )
    return EXIT_DIVERGED


def cmd_serve(args) -> int:
    docs, problems = _load_and_validate(args)
    if docs is None:
        _report(problems, False)
        return EXIT_INVALID
    import uvicorn

    from .gateway import Gateway, create_app

    gw = Gateway(
        site_raw=docs.site_raw,
        scenario_raw=docs.scenario_raw,
        schedule=docs.schedule,
        catalog=docs.catalog,
        site=docs.site,
        scenario=docs.scenario,
        seed=args.seed,
    )
    static_dir = args.static if args.static and os.path.isdir(args.static) else None
    app = create_app(gw, static_dir=static_dir)
    log.info("serving on port %d", args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubsim",
        description=(
            "Deterministic multi-modal traffic-hub simulator with a guided "
            "access-barrier tour."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_docs(p: argparse.ArgumentParser) -> None:
        p.add_argument("--site", help="site JSON path (default: bundled fixture)")
        p.add_argument("--scenario", help="tour scenario JSON path")
        p.add_argument("--schedule", help="transit schedule JSON path")
        p.add_argument("--catalog", help="archetype catalog JSON path")
        p.add_argument("--seed", type=int, default=0, help="world PRNG seed")

    p_run = sub.add_parser("run", help="headless run with an optional input script")
    add_docs(p_run)
    p_run.add_argument("--ticks", type=int, default=1200, help="ticks to simulate")
    p_run.add_argument("--script", help="input log to drive the avatar")
    p_run.add_argument("--out-events", help="write events (one JSON per line)")
    p_run.add_argument("--out-checkpoints", help="write tick/hash checkpoints")
    p_run.add_argument("--record", help="write the consumed input log")
    p_run.set_defaults(fn=cmd_run)

    p_val = sub.add_parser("validate", help="validate site/scenario/schedule/catalog")
    add_docs(p_val)
    p_val.add_argument("--json", action="store_true", help="machine-readable report")
    p_val.set_defaults(fn=cmd_validate)

    p_rep = sub.add_parser("replay", help="verify a recorded run against checkpoints")
    add_docs(p_rep)
    p_rep.add_argument("--script", required=True, help="recorded input log")
    p_rep.add_argument("--checkpoints", required=True, help="checkpoint file")
    p_rep.set_defaults(fn=cmd_replay)

    p_srv = sub.add_parser("serve", help="run the websocket gateway")
    add_docs(p_srv)
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--static", help="directory of client assets to serve at /")
    p_srv.set_defaults(fn=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
