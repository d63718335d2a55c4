"""Myers shortest-edit-script diff over arbitrary hashable sequences.

Produces a minimal edit script with deterministic tie-breaking: within a
changed run, deletions are emitted before insertions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Sequence


class EditOp(Enum):
    KEEP = "keep"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class Edit:
    op: EditOp
    # Index into the old sequence (KEEP/DELETE) or the new one (INSERT).
    old_index: int | None = None
    new_index: int | None = None


def diff(old: Sequence[Hashable], new: Sequence[Hashable]) -> list[Edit]:
    """Shortest edit script turning ``old`` into ``new``.

    Applying the script (drop DELETEs, emit KEEPs from ``old`` and INSERTs
    from ``new``) reproduces ``new`` exactly.
    """
    script = _raw_script(old, new)
    return _normalize(script)


def apply_script(old: Sequence, new: Sequence, script: list[Edit]) -> list:
    out = []
    for e in script:
        if e.op is EditOp.KEEP:
            out.append(old[e.old_index])
        elif e.op is EditOp.INSERT:
            out.append(new[e.new_index])
    return out


def kept_pairs(script: list[Edit]) -> list[tuple[int, int]]:
    """(old_index, new_index) pairs of matched elements, in order."""
    return [
        (e.old_index, e.new_index)
        for e in script
        if e.op is EditOp.KEEP
    ]


def _normalize(script: list[Edit]) -> list[Edit]:
    # Canonical order inside each changed run: all deletions, then all
    # insertions.
    out: list[Edit] = []
    dels: list[Edit] = []
    ins: list[Edit] = []
    for e in script:
        if e.op is EditOp.DELETE:
            dels.append(e)
        elif e.op is EditOp.INSERT:
            ins.append(e)
        else:
            out.extend(dels)
            out.extend(ins)
            dels, ins = [], []
            out.append(e)
    out.extend(dels)
    out.extend(ins)
    return out


def _raw_script(old: Sequence, new: Sequence) -> list[Edit]:
    n, m = len(old), len(new)
    if n == 0 and m == 0:
        return []
    if n == 0:
        return [Edit(EditOp.INSERT, None, j) for j in range(m)]
    if m == 0:
        return [Edit(EditOp.DELETE, i, None) for i in range(n)]

    max_d = n + m
    # v[k] = furthest x along diagonal k; offset by max_d for negative k.
    v = [0] * (2 * max_d + 1)
    trace: list[list[int]] = []
    found = False
    for d in range(max_d + 1):
        trace.append(v[:])
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[max_d + k - 1] < v[max_d + k + 1]):
                x = v[max_d + k + 1]
            else:
                x = v[max_d + k - 1] + 1
            y = x - k
            while x < n and y < m and old[x] == new[y]:
                x += 1
                y += 1
            v[max_d + k] = x
            if x >= n and y >= m:
                found = True
                break
        if found:
            break

    # Backtrack from (n, m) through the stored v snapshots.
    edits: list[Edit] = []
    x, y = n, m
    for d in range(len(trace) - 1, 0, -1):
        vprev = trace[d]
        k = x - y
        if k == -d or (k != d and vprev[max_d + k - 1] < vprev[max_d + k + 1]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = vprev[max_d + prev_k]
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            edits.append(Edit(EditOp.KEEP, x - 1, y - 1))
            x -= 1
            y -= 1
        if x == prev_x:
            edits.append(Edit(EditOp.INSERT, None, prev_y))
        else:
            edits.append(Edit(EditOp.DELETE, prev_x, None))
        x, y = prev_x, prev_y
    while x > 0 and y > 0:
        edits.append(Edit(EditOp.KEEP, x - 1, y - 1))
        x -= 1
        y -= 1
    edits.reverse()
    return edits
