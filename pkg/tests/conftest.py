"""Shared fixtures: bundled documents, world factory, micro-site builder."""

from __future__ import annotations

import json
import pathlib

import pytest

from hubsim.agents import load_catalog, load_schedule
from hubsim.simcore import init_world, neutral_frame, step
from hubsim.sitemodel import load_site
from hubsim.tour import load_scenario

FX = pathlib.Path(__file__).resolve().parent.parent / "src" / "hubsim" / "fixtures"


@pytest.fixture(scope="session")
def site_raw() -> bytes:
    return (FX / "durlacher-tor-mini.site.json").read_bytes()


@pytest.fixture(scope="session")
def scenario_raw() -> bytes:
    return (FX / "tour.json").read_bytes()


@pytest.fixture(scope="session")
def schedule_raw() -> bytes:
    return (FX / "schedule.json").read_bytes()


@pytest.fixture(scope="session")
def catalog_raw() -> bytes:
    return (FX / "catalog.json").read_bytes()


@pytest.fixture(scope="session")
def site(site_raw):
    return load_site(site_raw)


@pytest.fixture(scope="session")
def scenario(scenario_raw):
    return load_scenario(scenario_raw)


@pytest.fixture(scope="session")
def schedule(schedule_raw):
    return load_schedule(schedule_raw)


@pytest.fixture(scope="session")
def catalog(catalog_raw):
    return load_catalog(catalog_raw)


@pytest.fixture
def make_world(site, scenario, schedule, catalog):
    def factory(seed: int = 0):
        return init_world(site, scenario, schedule, seed, catalog)

    return factory


def run_neutral(world, ticks: int) -> list:
    """Step a world with neutral input; returns all events."""
    events = []
    for _ in range(ticks):
        events.extend(step(world, neutral_frame(world.tick)))
    return events


# --- micro-site authoring helpers (kept dict-level so tests can mutate) -----


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def feature(fid, level, kind, gtype, vertices, props=None, **kw):
    # connector sub-kind lives in props under "kind" too; pass it via props=
    merged = dict(props or {})
    merged.update(kw)
    return {
        "id": fid,
        "level": level,
        "kind": kind,
        "geometry": {"type": gtype, "vertices": vertices},
        "props": merged,
    }


def site_doc(features, levels=(0,), bounds=(60, 60), name="micro"):
    return {
        "format_version": 1,
        "name": name,
        "bounds": {"w": bounds[0], "h": bounds[1]},
        "levels": list(levels),
        "features": features,
    }


def site_bytes(doc) -> bytes:
    return json.dumps(doc).encode("utf-8")
