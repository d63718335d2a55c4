"""Whitespace-insensitive text comparison shared by labels and metrics.

Resolutions are compared verbatim modulo whitespace and indentation: each
line is trimmed, inner horizontal whitespace runs collapse to one space,
and blank lines are dropped.  Line structure is otherwise preserved.
"""

from __future__ import annotations

import re

_HWS_RUN = re.compile(r"[^\S\r\n]+")


def normalize(text: str) -> str:
    lines = []
    for line in text.splitlines():
        line = _HWS_RUN.sub(" ", line).strip()
        if line:
            lines.append(line)
    return "\n".join(lines)


def equivalent(left: str, right: str) -> bool:
    return normalize(left) == normalize(right)
