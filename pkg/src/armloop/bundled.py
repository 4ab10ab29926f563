"""Access to the data files shipped with the package (scenes, chain, clips)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .kinematics import KinematicChain, load_chain
from .scene import Scene, load_scene

DEFAULT_CHAIN_FILE = "chain_six_axis.json"
DEFAULT_SCENE_FILE = "scene_stools.json"


def fixture_text(name: str) -> str:
    return (resources.files("armloop") / "fixtures" / name).read_text(encoding="utf-8")


def fixture_path(name: str) -> Path:
    # the package is installed from plain files, so resources resolve to paths
    p = resources.files("armloop") / "fixtures" / name
    return Path(str(p))


def list_clip_fixtures() -> list[str]:
    base = resources.files("armloop") / "fixtures"
    return sorted(
        f.name for f in base.iterdir() if f.name.endswith((".anim.txt", ".frames.txt"))
    )


def default_chain() -> KinematicChain:
    return load_chain(fixture_text(DEFAULT_CHAIN_FILE))


def default_scene() -> Scene:
    return load_scene(fixture_text(DEFAULT_SCENE_FILE))
