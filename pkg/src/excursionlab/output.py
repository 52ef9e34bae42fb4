"""CSV and JSON emission with a provenance header."""
from __future__ import annotations

import json
import math
import os
from importlib import metadata

from .config import RunConfig

TOOL = "excursionlab"


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def header_lines(command: str, cfg: RunConfig) -> list:
    lines = [f"# {TOOL} {tool_version()}", f"# command: {command}", f"# seed: {cfg.seed}",
             f"# config_sha1: {cfg.digest()}"]
    lines += [f"# {line}" for line in cfg.render().splitlines()]
    return lines


def fmt(v) -> str:
    """Shortest round-trip decimal for floats, 0/1 for booleans, empty for None."""
    if v is None:
        return ""
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def write_csv(path: str, command: str, cfg: RunConfig, columns, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines(command, cfg):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def check(name: str, passed: bool, **numbers) -> dict:
    return {"name": name, "pass": bool(passed), "values": numbers}


def write_summary(path: str, command: str, cfg: RunConfig, checks: list, extra: dict = None):
    doc = {"tool": TOOL, "version": tool_version(), "command": command, "seed": cfg.seed,
           "config_sha1": cfg.digest(), "config": dict(cfg.items()), "checks": checks,
           "pass": all(c["pass"] for c in checks)}
    if extra:
        doc.update(extra)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=False)
        fh.write("\n")
