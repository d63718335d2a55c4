"""Pair-wise token alignment and the edit-aware model input.

Each changed side is aligned against the base with padding so the two
sequences have equal length, and a per-position edit action records how to
turn the base sequence into the changed one.  A token conflict yields two
such alignments (a vs o, b vs o) plus shared context, forming the four
token sequences and two edit sequences consumed by a classifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from . import myers
from .diff3 import TokenConflict
from .lexer import tokenize

# Pad slots are represented as None in aligned sequences and as JSON null
# on the wire.
PAD = None

DEFAULT_CONTEXT_BUDGET = 512


class EditAction(str, Enum):
    EQUAL = "="
    INSERT = "+"
    DELETE = "-"
    REPLACE = "r"
    PAD = "p"


@dataclass
class AlignedPair:
    upper: list[str | None]
    lower: list[str | None]
    edits: list[EditAction]

    def __post_init__(self) -> None:
        assert len(self.upper) == len(self.lower) == len(self.edits)


def align(changed: Sequence[str], base: Sequence[str]) -> AlignedPair:
    """Align ``changed`` over ``base`` with pad slots and edit actions.

    Adjacent delete/insert runs are fused pairwise into replacements; the
    run remainder stays as plain deletes or inserts, so ``upper`` minus
    pads is exactly ``changed`` and ``lower`` minus pads is ``base``.
    """
    upper: list[str | None] = []
    lower: list[str | None] = []
    edits: list[EditAction] = []

    def flush(dels: list[str], ins: list[str]) -> None:
        paired = min(len(dels), len(ins))
        for i in range(paired):
            upper.append(ins[i])
            lower.append(dels[i])
            edits.append(EditAction.REPLACE)
        for tok in dels[paired:]:
            upper.append(PAD)
            lower.append(tok)
            edits.append(EditAction.DELETE)
        for tok in ins[paired:]:
            upper.append(tok)
            lower.append(PAD)
            edits.append(EditAction.INSERT)

    dels: list[str] = []
    ins: list[str] = []
    for e in myers.diff(base, changed):
        if e.op is myers.EditOp.KEEP:
            flush(dels, ins)
            dels, ins = [], []
            tok = base[e.old_index]
            upper.append(tok)
            lower.append(tok)
            edits.append(EditAction.EQUAL)
        elif e.op is myers.EditOp.DELETE:
            dels.append(base[e.old_index])
        else:
            ins.append(changed[e.new_index])
    flush(dels, ins)
    return AlignedPair(upper, lower, edits)


@dataclass
class ModelInput:
    """Wire-shaped classifier input plus the raw regions behind it."""

    a_o: list[str | None]
    o_a: list[str | None]
    b_o: list[str | None]
    o_b: list[str | None]
    d_ao: list[EditAction]
    d_bo: list[EditAction]
    # Raw region token texts, available to in-process classifiers.
    a: list[str] = field(default_factory=list)
    b: list[str] = field(default_factory=list)
    o: list[str] = field(default_factory=list)
    pref: list[str] = field(default_factory=list)
    suff: list[str] = field(default_factory=list)

    def to_wire(self, request_id: int) -> dict:
        return {
            "id": request_id,
            "a_o": self.a_o,
            "o_a": self.o_a,
            "b_o": self.b_o,
            "o_b": self.o_b,
            "d_ao": [a.value for a in self.d_ao],
            "d_bo": [a.value for a in self.d_bo],
        }

    def to_wire_line(self, request_id: int) -> str:
        return json.dumps(
            self.to_wire(request_id), ensure_ascii=False, sort_keys=False
        )


def build_model_input(
    tc: TokenConflict,
    context_budget: int = DEFAULT_CONTEXT_BUDGET,
    line_prefix: str = "",
    line_suffix: str = "",
) -> ModelInput:
    """Aligned sequences for one token conflict plus surrounding context.

    The budget is split evenly between the prefix tail and suffix head;
    token-level pref/suff context is used first, then the line-level
    prefix/suffix.  Context positions carry Equal actions on all four
    sequences.
    """
    if context_budget < 0:
        raise ValueError("context_budget must be >= 0")
    pair_a = align(tc.a.texts, tc.o.texts)
    pair_b = align(tc.b.texts, tc.o.texts)

    half = context_budget // 2
    pref_tokens = tokenize(line_prefix).texts + tc.pref.texts
    suff_tokens = tc.suff.texts + tokenize(line_suffix).texts
    pref_ctx = pref_tokens[len(pref_tokens) - half:] if half else []
    suff_ctx = suff_tokens[:half]

    def extend(seq: list) -> list:
        return [*pref_ctx, *seq, *suff_ctx]

    ctx_actions = [EditAction.EQUAL] * len(pref_ctx)
    ctx_actions_s = [EditAction.EQUAL] * len(suff_ctx)
    return ModelInput(
        a_o=extend(pair_a.upper),
        o_a=extend(pair_a.lower),
        b_o=extend(pair_b.upper),
        o_b=extend(pair_b.lower),
        d_ao=[*ctx_actions, *pair_a.edits, *ctx_actions_s],
        d_bo=[*ctx_actions, *pair_b.edits, *ctx_actions_s],
        a=tc.a.texts,
        b=tc.b.texts,
        o=tc.o.texts,
        pref=pref_tokens,
        suff=suff_tokens,
    )
