"""Line-level three-way merge and the token-level second pass.

``diff3_lines`` performs the classic diff3 slot construction: two two-way
diffs of the derived versions against the base are aligned into stable and
changed regions, with overlapping changed regions becoming conflicts.
``token_diff3`` re-runs the same construction over token streams inside one
line-level conflict, localizing (and often eliminating) the conflict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Sequence

from . import myers
from .lexer import TokenStream, tokenize


class ChunkKind(Enum):
    STABLE = "Stable"
    CONFLICT = "Conflict"


@dataclass(frozen=True)
class Chunk:
    """One diff3 slot.

    Stable chunks carry the merged ``text`` (for one-sided edits this is
    the changed side); conflict chunks have ``text`` of None.  The per-side
    slices are always populated so that choosing side a for every chunk
    reconstructs the left version exactly (likewise b/right and o/base).
    """

    kind: ChunkKind
    a_text: str
    o_text: str
    b_text: str
    text: str | None = None


@dataclass
class MergeTuple:
    """The (A, B, O, M) programs of one historical merge."""

    base: str
    left: str
    right: str
    resolved: str | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class LineConflict:
    """One line-level diff3 conflict region with optional resolution."""

    index: int
    a: str
    b: str
    o: str
    resolution: str | None = None
    prefix: str = ""
    suffix: str = ""


@dataclass
class TokenConflict:
    """A localized token-level conflict inside a line-level conflict.

    ``pref``/``suff`` hold the cleanly merged token context adjacent to the
    conflict (between the previous/next conflict and this one); they are
    views for model input, not the reassembly source of truth — that is the
    parent outcome's chunk list.
    """

    index: int
    a: TokenStream
    b: TokenStream
    o: TokenStream
    resolution: TokenStream | None = None
    pref: TokenStream = field(default_factory=TokenStream)
    suff: TokenStream = field(default_factory=TokenStream)


class OutcomeKind(Enum):
    CLEAN_MERGE = "CleanMerge"
    SINGLE_CONFLICT = "SingleConflict"
    MULTI_CONFLICT = "MultiConflict"


@dataclass
class TokenMergeOutcome:
    kind: OutcomeKind
    chunks: list[Chunk]
    conflicts: list[TokenConflict]

    def assemble(self, resolutions: Sequence[str]) -> str:
        """Merged text with the k-th conflict replaced by resolutions[k]."""
        out: list[str] = []
        k = 0
        for chunk in self.chunks:
            if chunk.kind is ChunkKind.STABLE:
                out.append(chunk.text or "")
            else:
                out.append(resolutions[k])
                k += 1
        if k != len(resolutions):
            raise ValueError(
                f"expected {k} resolutions, got {len(resolutions)}"
            )
        return "".join(out)


# region kinds from the three-way walk
_STABLE = "stable"  # all three agree
_CLEAN_A = "a"      # only A changed
_CLEAN_B = "b"      # only B changed
_CLEAN_BOTH = "both"  # A and B made the identical change
_CONFLICT = "conflict"


def _slide_matches(
    pairs: list[tuple[int, int]],
    old: Sequence[Hashable],
    new: Sequence[Hashable],
) -> list[tuple[int, int]]:
    """Re-anchor ambiguous matches next to their neighbors.

    Myers picks arbitrarily among equal-cost matches of repeated tokens;
    for diff3 slot construction we want matched runs contiguous, so slide
    a match to an equal occurrence adjacent to the following (then the
    preceding) match wherever possible.
    """
    pairs = list(pairs)
    # Backward pass: pull matches down against their successor.
    for idx in range(len(pairs) - 2, -1, -1):
        i, j = pairs[idx]
        ni, nj = pairs[idx + 1]
        if ni == i + 1 and nj > j + 1 and new[nj - 1] == new[j]:
            pairs[idx] = (i, nj - 1)
        elif nj == j + 1 and ni > i + 1 and old[ni - 1] == old[i]:
            pairs[idx] = (ni - 1, j)
    # Forward pass: push still-isolated matches up against their
    # predecessor.
    for idx in range(1, len(pairs)):
        i, j = pairs[idx]
        pi, pj = pairs[idx - 1]
        adjacent_next = (
            idx + 1 < len(pairs)
            and pairs[idx + 1] == (i + 1, j + 1)
        )
        if adjacent_next:
            continue
        if pi == i - 1 and pj < j - 1 and new[pj + 1] == new[j]:
            pairs[idx] = (i, pj + 1)
        elif pj == j - 1 and pi < i - 1 and old[pi + 1] == old[i]:
            pairs[idx] = (pi + 1, j)  # pragma: no cover - symmetric case
    return pairs


def diff3_regions(
    base: Sequence[Hashable],
    left: Sequence[Hashable],
    right: Sequence[Hashable],
) -> list[tuple[str, list, list, list]]:
    """Three-way region walk over generic sequences.

    Returns (kind, a_slice, o_slice, b_slice) tuples covering all three
    inputs completely and in order.
    """
    ma = _slide_matches(
        myers.kept_pairs(myers.diff(base, left)), base, left
    )
    mb = _slide_matches(
        myers.kept_pairs(myers.diff(base, right)), base, right
    )
    a_of = dict(ma)
    b_of = dict(mb)

    # Base positions matched in both derived versions are sync candidates.
    sync = [i for i in range(len(base)) if i in a_of and i in b_of]

    regions: list[tuple[str, list, list, list]] = []
    io = ia = ib = 0

    def flush(o_end: int, a_end: int, b_end: int) -> None:
        nonlocal io, ia, ib
        o_sl = list(base[io:o_end])
        a_sl = list(left[ia:a_end])
        b_sl = list(right[ib:b_end])
        if o_sl or a_sl or b_sl:
            if a_sl == b_sl:
                kind = _CLEAN_BOTH if a_sl != o_sl else _STABLE
            elif a_sl == o_sl:
                kind = _CLEAN_B
            elif b_sl == o_sl:
                kind = _CLEAN_A
            else:
                kind = _CONFLICT
            regions.append((kind, a_sl, o_sl, b_sl))
        io, ia, ib = o_end, a_end, b_end

    # Group consecutive sync points into stable runs; everything between
    # runs is a changed region classified by which sides differ.
    idx = 0
    while idx < len(sync):
        run = [sync[idx]]
        while (
            idx + 1 < len(sync)
            and sync[idx + 1] == run[-1] + 1
            and a_of[sync[idx + 1]] == a_of[run[-1]] + 1
            and b_of[sync[idx + 1]] == b_of[run[-1]] + 1
        ):
            idx += 1
            run.append(sync[idx])
        start = run[0]
        flush(start, a_of[start], b_of[start])
        end = run[-1] + 1
        flush(end, a_of[run[-1]] + 1, b_of[run[-1]] + 1)
        idx += 1
    flush(len(base), len(left), len(right))
    return regions


def _merged_slice(kind: str, a_sl: list, o_sl: list, b_sl: list) -> list:
    if kind in (_STABLE, _CLEAN_BOTH, _CLEAN_A):
        return a_sl
    if kind == _CLEAN_B:
        return b_sl
    raise ValueError("conflict region has no merged text")


def diff3_lines(base: str, left: str, right: str) -> list[Chunk]:
    """Line-level diff3 of three program texts."""
    b_lines = base.splitlines(keepends=True)
    l_lines = left.splitlines(keepends=True)
    r_lines = right.splitlines(keepends=True)
    chunks: list[Chunk] = []
    for kind, a_sl, o_sl, b_sl in diff3_regions(b_lines, l_lines, r_lines):
        a_t, o_t, b_t = "".join(a_sl), "".join(o_sl), "".join(b_sl)
        if kind == _CONFLICT:
            chunks.append(Chunk(ChunkKind.CONFLICT, a_t, o_t, b_t))
        else:
            merged = "".join(_merged_slice(kind, a_sl, o_sl, b_sl))
            chunks.append(Chunk(ChunkKind.STABLE, a_t, o_t, b_t, merged))
    return chunks


def merge_is_clean(chunks: Sequence[Chunk]) -> bool:
    return all(c.kind is ChunkKind.STABLE for c in chunks)


def line_conflicts(
    base: str, left: str, right: str
) -> tuple[list[Chunk], list[LineConflict]]:
    """diff3 plus LineConflict views with their surrounding context."""
    chunks = diff3_lines(base, left, right)
    conflicts: list[LineConflict] = []
    for pos, chunk in enumerate(chunks):
        if chunk.kind is not ChunkKind.CONFLICT:
            continue
        prefix = "".join(
            c.text if c.kind is ChunkKind.STABLE else c.a_text
            for c in chunks[:pos]
        )
        suffix = "".join(
            c.text if c.kind is ChunkKind.STABLE else c.a_text
            for c in chunks[pos + 1:]
        )
        conflicts.append(
            LineConflict(
                index=len(conflicts),
                a=chunk.a_text,
                b=chunk.b_text,
                o=chunk.o_text,
                prefix=prefix,
                suffix=suffix,
            )
        )
    return chunks, conflicts


# Minimum merged-token run length separating two token conflicts; shorter
# runs are folded into a single larger conflict to avoid micro-conflicts.
MIN_STABLE_RUN = 2


def token_diff3(conflict: LineConflict) -> TokenMergeOutcome:
    """Token-level three-way merge of one line-level conflict's regions."""
    a_toks = tokenize(conflict.a)
    b_toks = tokenize(conflict.b)
    o_toks = tokenize(conflict.o)
    regions = diff3_regions(o_toks.texts, a_toks.texts, b_toks.texts)

    # Fold short merged runs sandwiched between two conflicts.
    folded: list[tuple[str, list, list, list]] = []
    i = 0
    while i < len(regions):
        kind, a_sl, o_sl, b_sl = regions[i]
        if (
            kind != _CONFLICT
            and folded
            and folded[-1][0] == _CONFLICT
            and i + 1 < len(regions)
            and regions[i + 1][0] == _CONFLICT
            and len(_merged_slice(kind, a_sl, o_sl, b_sl)) < MIN_STABLE_RUN
        ):
            pk, pa, po, pb = folded[-1]
            nk, na, no, nb = regions[i + 1]
            folded[-1] = (
                _CONFLICT,
                pa + a_sl + na,
                po + o_sl + no,
                pb + b_sl + nb,
            )
            i += 2
            continue
        if kind == _CONFLICT and folded and folded[-1][0] == _CONFLICT:
            pk, pa, po, pb = folded[-1]
            folded[-1] = (_CONFLICT, pa + a_sl, po + o_sl, pb + b_sl)
            i += 1
            continue
        folded.append(regions[i])
        i += 1

    chunks: list[Chunk] = []
    conflicts: list[TokenConflict] = []
    for kind, a_sl, o_sl, b_sl in folded:
        a_t, o_t, b_t = "".join(a_sl), "".join(o_sl), "".join(b_sl)
        if kind == _CONFLICT:
            chunks.append(Chunk(ChunkKind.CONFLICT, a_t, o_t, b_t))
            conflicts.append(
                TokenConflict(
                    index=len(conflicts),
                    a=tokenize(a_t),
                    b=tokenize(b_t),
                    o=tokenize(o_t),
                )
            )
        else:
            merged = "".join(_merged_slice(kind, a_sl, o_sl, b_sl))
            chunks.append(Chunk(ChunkKind.STABLE, a_t, o_t, b_t, merged))

    # Attach merged context between neighboring conflicts as pref/suff.
    for pos, chunk in enumerate(chunks):
        if chunk.kind is not ChunkKind.CONFLICT:
            continue
        tc = conflicts[sum(
            1 for c in chunks[:pos] if c.kind is ChunkKind.CONFLICT
        )]
        if pos > 0 and chunks[pos - 1].kind is ChunkKind.STABLE:
            tc.pref = tokenize(chunks[pos - 1].text or "")
        if pos + 1 < len(chunks) and chunks[pos + 1].kind is ChunkKind.STABLE:
            tc.suff = tokenize(chunks[pos + 1].text or "")

    if not conflicts:
        kind = OutcomeKind.CLEAN_MERGE
    elif len(conflicts) == 1:
        kind = OutcomeKind.SINGLE_CONFLICT
    else:
        kind = OutcomeKind.MULTI_CONFLICT
    return TokenMergeOutcome(kind, chunks, conflicts)
