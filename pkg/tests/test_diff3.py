from hypothesis import given, strategies as st

from mergeweave.diff3 import (
    Chunk,
    ChunkKind,
    LineConflict,
    OutcomeKind,
    diff3_lines,
    line_conflicts,
    merge_is_clean,
    token_diff3,
)

FIG1_BASE = "var x = max(y, 10)\n"
FIG1_LEFT = "let x = max(y, 11)\n"
FIG1_RIGHT = "var x = max(y, 11, z)\n"
FIG1_RESOLVED = "let x = max(y, 11, z)\n"


def reassemble(chunks, side):
    out = []
    for c in chunks:
        out.append({"a": c.a_text, "o": c.o_text, "b": c.b_text}[side])
    return "".join(out)


def test_identity_merge():
    chunks = diff3_lines("x\n", "x\n", "x\n")
    assert len(chunks) == 1
    assert chunks[0].kind is ChunkKind.STABLE
    assert chunks[0].text == "x\n"


def test_one_sided_edit_clean():
    base = "a\nb\nc\n"
    left = "a\nB\nc\n"
    chunks = diff3_lines(base, left, base)
    assert merge_is_clean(chunks)
    assert "".join(c.text for c in chunks) == left


def test_fig1_single_line_conflict():
    chunks = diff3_lines(FIG1_BASE, FIG1_LEFT, FIG1_RIGHT)
    conflict = [c for c in chunks if c.kind is ChunkKind.CONFLICT]
    assert len(conflict) == 1
    assert conflict[0].a_text == FIG1_LEFT
    assert conflict[0].b_text == FIG1_RIGHT


def test_reassembly_invariant():
    base = "a\nb\nc\nd\ne\n"
    left = "a\nB1\nc\nd\nE\n"
    right = "a\nB2\nc\nd\ne\nf\n"
    chunks = diff3_lines(base, left, right)
    assert reassemble(chunks, "a") == left
    assert reassemble(chunks, "b") == right
    assert reassemble(chunks, "o") == base


@given(
    st.lists(st.sampled_from(["a\n", "b\n", "c\n", "d\n"]), max_size=8),
    st.lists(st.sampled_from(["a\n", "b\n", "c\n", "x\n"]), max_size=8),
    st.lists(st.sampled_from(["a\n", "b\n", "c\n", "y\n"]), max_size=8),
)
def test_reassembly_property(base, left, right):
    chunks = diff3_lines("".join(base), "".join(left), "".join(right))
    assert reassemble(chunks, "a") == "".join(left)
    assert reassemble(chunks, "b") == "".join(right)
    assert reassemble(chunks, "o") == "".join(base)


def fig1_conflict():
    _, conflicts = line_conflicts(FIG1_BASE, FIG1_LEFT, FIG1_RIGHT)
    assert len(conflicts) == 1
    return conflicts[0]


def test_fig1_token_level():
    outcome = token_diff3(fig1_conflict())
    assert outcome.kind is OutcomeKind.SINGLE_CONFLICT
    tc = outcome.conflicts[0]
    assert tc.o.texts == ["10"]
    assert tc.a.texts == ["11"]
    assert tc.b.texts == ["11", ",", " ", "z"]
    assert tc.pref.text().endswith("max(y, ")
    assert tc.suff.text().startswith(")")


def test_fig1_take_b_assembles_resolution():
    outcome = token_diff3(fig1_conflict())
    tc = outcome.conflicts[0]
    assert outcome.assemble([tc.b.text()]) == FIG1_RESOLVED


def test_both_sides_identical_clean():
    lc = LineConflict(0, a="x = 1\n", b="x = 1\n", o="x = 0\n")
    outcome = token_diff3(lc)
    assert outcome.kind is OutcomeKind.CLEAN_MERGE
    assert outcome.assemble([]) == "x = 1\n"


def test_token_disjoint_edits_merge_cleanly():
    # Adjacent-line edits that conflict at line level but not at token level.
    lc = LineConflict(0, a="let x = 1\n", b="var x = 2\n", o="var x = 1\n")
    outcome = token_diff3(lc)
    assert outcome.kind is OutcomeKind.CLEAN_MERGE
    assert outcome.assemble([]) == "let x = 2\n"


def test_token_reassembly_sides():
    lc = fig1_conflict()
    outcome = token_diff3(lc)
    assert reassemble(outcome.chunks, "a") == lc.a
    assert reassemble(outcome.chunks, "b") == lc.b
    assert reassemble(outcome.chunks, "o") == lc.o


def test_short_stable_run_folded():
    # Two nearby token conflicts separated by a single stable token fold
    # into one conflict.
    lc = LineConflict(0, a="p,r\n", b="x,y\n", o="1,2\n")
    outcome = token_diff3(lc)
    assert outcome.kind is OutcomeKind.SINGLE_CONFLICT
    tc = outcome.conflicts[0]
    assert tc.a.text() == "p,r"
