#!/usr/bin/env python3
"""Regenerate the bundled replay fixture for the stools demo scene.

The fixture maps the rendered prompt digest for the canonical instruction to
a canned WAYPOINTS reply matching the reference arc, so `--mode llm
--fixtures ...` works offline. Re-run after any prompt template change.
"""

from __future__ import annotations

import sys
from pathlib import Path

from armloop.bundled import default_scene, fixture_path
from armloop.orchestrator import build_prompt, prompt_digest, write_replay_fixture

INSTRUCTION = "between Stool_1 and Stool_2"

REPLY = """Planning an arc over the table.

```WAYPOINTS
Waypoint_0: (0.5, 0.0, 0.9)
Waypoint_1: (0.25, 0.0, 1.1)
Waypoint_2: (0.0, 0.0, 1.1)
Waypoint_3: (-0.25, 0.0, 1.1)
Waypoint_4: (-0.5, 0.0, 0.9)
```
"""


def main() -> int:
    bundle = build_prompt(default_scene(), INSTRUCTION)
    digest = prompt_digest(bundle.messages())
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else fixture_path("replay_stools.json")
    write_replay_fixture(out, {digest: REPLY})
    print(f"wrote {out} (digest {digest[:12]}..., instruction {INSTRUCTION!r})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
