"""Parsing and rendering of diff3-style conflict marker files.

Accepts both diff3 output (with a ``|||||||`` base section) and plain
two-way markers; two-way blocks get an empty base region unless the caller
reconstructs one from the merge tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MARK_A = "<<<<<<<"
MARK_O = "|||||||"
MARK_SEP = "======="
MARK_B = ">>>>>>>"


class MarkerParseError(ValueError):
    pass


@dataclass
class ConflictBlock:
    a_text: str
    o_text: str
    b_text: str
    a_label: str = ""
    o_label: str = ""
    b_label: str = ""
    has_base: bool = True

    def render(self) -> str:
        parts = [f"{MARK_A} {self.a_label}".rstrip() + "\n", self.a_text]
        if self.has_base:
            parts.append(f"{MARK_O} {self.o_label}".rstrip() + "\n")
            parts.append(self.o_text)
        parts.append(MARK_SEP + "\n")
        parts.append(self.b_text)
        parts.append(f"{MARK_B} {self.b_label}".rstrip() + "\n")
        return "".join(parts)


@dataclass
class ConflictedFile:
    # Alternating stable text and conflict blocks, in file order.
    parts: list = field(default_factory=list)

    @property
    def conflicts(self) -> list[ConflictBlock]:
        return [p for p in self.parts if isinstance(p, ConflictBlock)]

    def render(self) -> str:
        return "".join(
            p.render() if isinstance(p, ConflictBlock) else p
            for p in self.parts
        )


def _is_marker(line: str, mark: str) -> bool:
    stripped = line.rstrip("\r\n")
    return stripped == mark or stripped.startswith(mark + " ")


def _marker_label(line: str, mark: str) -> str:
    return line.rstrip("\r\n")[len(mark):].strip()


def parse_conflicted(text: str) -> ConflictedFile:
    """Split marker text into stable runs and conflict blocks."""
    lines = text.splitlines(keepends=True)
    parts: list = []
    stable: list[str] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if not _is_marker(line, MARK_A):
            stable.append(line)
            i += 1
            continue
        if stable:
            parts.append("".join(stable))
            stable = []
        a_label = _marker_label(line, MARK_A)
        i += 1
        a_lines: list[str] = []
        o_lines: list[str] = []
        o_label = ""
        has_base = False
        while i < len(lines) and not _is_marker(lines[i], MARK_O) and not (
            lines[i].rstrip("\r\n") == MARK_SEP
        ):
            a_lines.append(lines[i])
            i += 1
        if i >= len(lines):
            raise MarkerParseError("unterminated conflict block")
        if _is_marker(lines[i], MARK_O):
            has_base = True
            o_label = _marker_label(lines[i], MARK_O)
            i += 1
            while i < len(lines) and lines[i].rstrip("\r\n") != MARK_SEP:
                o_lines.append(lines[i])
                i += 1
            if i >= len(lines):
                raise MarkerParseError("missing ======= separator")
        i += 1  # past =======
        b_lines: list[str] = []
        while i < len(lines) and not _is_marker(lines[i], MARK_B):
            b_lines.append(lines[i])
            i += 1
        if i >= len(lines):
            raise MarkerParseError("missing >>>>>>> terminator")
        b_label = _marker_label(lines[i], MARK_B)
        i += 1
        parts.append(
            ConflictBlock(
                a_text="".join(a_lines),
                o_text="".join(o_lines),
                b_text="".join(b_lines),
                a_label=a_label,
                o_label=o_label,
                b_label=b_label,
                has_base=has_base,
            )
        )
    if stable:
        parts.append("".join(stable))
    return ConflictedFile(parts)


def render_chunks(chunks, a_label: str = "a", o_label: str = "base",
                  b_label: str = "b") -> str:
    """Render diff3 chunks (see diff3.Chunk) as marker text."""
    from .diff3 import ChunkKind

    out = []
    for chunk in chunks:
        if chunk.kind is ChunkKind.CONFLICT:
            out.append(
                ConflictBlock(
                    chunk.a_text, chunk.o_text, chunk.b_text,
                    a_label, o_label, b_label,
                ).render()
            )
        else:
            out.append(chunk.text or "")
    return "".join(out)


def has_conflict_markers(text: str) -> bool:
    return any(
        _is_marker(line, MARK_A) for line in text.splitlines(keepends=True)
    )
