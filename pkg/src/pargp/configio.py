"""Plain-text ``key = value`` configuration files.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Values are kept as strings; callers convert.
"""

from __future__ import annotations

from pathlib import Path


def parse_keyvalues(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def read_keyvalues(path) -> dict[str, str]:
    return parse_keyvalues(Path(path).read_text())


def write_keyvalues(path, mapping: dict) -> None:
    lines = [f"{k} = {v}" for k, v in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n")
