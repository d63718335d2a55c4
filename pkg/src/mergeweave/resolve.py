"""End-to-end conflict resolution.

Beam-search decoding over the token conflicts of one line-level conflict
(the product-of-probabilities factorization over token conflicts), file
level refinement where each resolved conflict becomes context for the
next, and syntax validation of candidates.
"""

from __future__ import annotations

import heapq
import logging
import math
import subprocess
import tempfile
from dataclasses import dataclass, field
from enum import Enum

from .align import DEFAULT_CONTEXT_BUDGET, build_model_input
from .diff3 import LineConflict, token_diff3
from .labels import ResolutionLabel, apply_label
from .classify import ClassifierError
from .markers import ConflictBlock, MarkerParseError, parse_conflicted

log = logging.getLogger(__name__)

_NEG_INF = float("-inf")


@dataclass
class ResolverConfig:
    top_k: int = 3
    beam_width: int = 5
    context_budget: int = DEFAULT_CONTEXT_BUDGET
    abstain_threshold: float = 0.0  # on the candidate probability product
    language: str = "unknown"
    syntax_command: list[str] | None = None
    max_syntax_tries: int = 32


class ResolutionStatus(Enum):
    RESOLVED = "Resolved"
    PARTIALLY_RESOLVED = "PartiallyResolved"
    ABSTAINED = "Abstained"


@dataclass
class ConflictOutcome:
    labels: list[int]
    logprob: float
    probs: list[list[float]] = field(default_factory=list)
    syntax_ok: bool | None = None
    error: str | None = None


@dataclass
class ResolutionResult:
    file_text: str
    per_conflict: list[ConflictOutcome]
    status: ResolutionStatus
    reason: str = ""


def decode_conflict(
    lc: LineConflict,
    classifier,
    top_k: int = 3,
    beam_width: int = 5,
    context_budget: int = DEFAULT_CONTEXT_BUDGET,
) -> list[tuple[str, float, list[int]]]:
    """Ranked candidate resolutions for one line-level conflict.

    Returns (resolution_text, logprob, label ordinals) sorted by logprob
    non-increasing.  A clean token-level merge short-circuits to the
    deterministic merged text with logprob 0.
    """
    if not 1 <= top_k <= 9:
        raise ValueError("top_k must be in [1, 9]")
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")

    outcome = token_diff3(lc)
    if not outcome.conflicts:
        return [(outcome.assemble([]), 0.0, [])]

    beams: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    for tc in outcome.conflicts:
        mi = build_model_input(
            tc, context_budget, line_prefix=lc.prefix, line_suffix=lc.suffix
        )
        pred = classifier.predict(mi)
        ranked = sorted(
            range(9), key=lambda i: (-pred.probs[i], i)
        )[:top_k]
        extended = []
        for logprob, labels in beams:
            for idx in ranked:
                p = pred.probs[idx]
                lp = logprob + (math.log(p) if p > 0 else _NEG_INF)
                extended.append((lp, labels + (idx + 1,)))
        extended.sort(key=lambda s: (-s[0], s[1]))
        beams = extended[:beam_width]

    results = []
    for logprob, labels in beams:
        resolutions = [
            apply_label(
                ResolutionLabel(lab), tc.a.text(), tc.b.text(), tc.o.text()
            )
            for lab, tc in zip(labels, outcome.conflicts)
        ]
        results.append((outcome.assemble(resolutions), logprob, list(labels)))
    return results


def exhaustive_decode(
    lc: LineConflict,
    classifier,
    context_budget: int = DEFAULT_CONTEXT_BUDGET,
) -> list[tuple[str, float, list[int]]]:
    """Brute-force oracle: full search over all label assignments."""
    return decode_conflict(
        lc,
        classifier,
        top_k=9,
        beam_width=9 ** 4,
        context_budget=context_budget,
    )


# --- syntax checking ------------------------------------------------------

_LINE_COMMENT_STARTS = ("//",)
_BRACKETS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {v: k for k, v in _BRACKETS.items()}


def _default_syntax_check(text: str, tolerant: bool = False) -> bool:
    """Balanced brackets and quote pairing outside comments.

    Tolerant mode (for code fragments rather than whole files) ignores
    unmatched closers and leftover openers but still rejects crossed
    bracket pairs and unterminated single-line strings.
    """
    stack: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        two = text[i:i + 2]
        three = text[i:i + 3]
        if two == "//":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "#" and (i == 0 or text[i - 1].isspace()):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if two == "/*":
            end = text.find("*/", i + 2)
            if end == -1:
                return False
            i = end + 2
            continue
        if three in ("'''", '"""'):
            end = text.find(three, i + 3)
            if end == -1:
                return False
            i = end + 3
            continue
        if c in "'\"`":
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                    continue
                if text[i] == c:
                    break
                if text[i] == "\n" and c != "`":
                    return False  # unterminated single-line string
                i += 1
            else:
                return False
            i += 1
            continue
        if c in _BRACKETS:
            stack.append(c)
        elif c in _CLOSERS:
            if stack and stack[-1] == _CLOSERS[c]:
                stack.pop()
            elif stack:
                return False  # crossed pair like ( ]
            elif not tolerant:
                return False
        i += 1
    return tolerant or not stack


def check_syntax(
    text: str,
    language: str = "unknown",
    external_command: list[str] | None = None,
    tolerant: bool = False,
) -> bool:
    """Validate candidate code; an external parser command wins if set.

    The external command is invoked with the candidate file path appended;
    exit status 0 means syntactically valid.  If it cannot run, the
    default checker decides and the event is logged.
    """
    if external_command:
        with tempfile.NamedTemporaryFile(
            "w", suffix=f".{language}", delete=False
        ) as handle:
            handle.write(text)
            path = handle.name
        try:
            proc = subprocess.run(
                [*external_command, path],
                capture_output=True,
                timeout=30,
            )
            return proc.returncode == 0
        except (OSError, subprocess.TimeoutExpired) as exc:
            log.warning("external syntax checker unavailable: %s", exc)
    return _default_syntax_check(text, tolerant=tolerant)


# --- file-level resolution ------------------------------------------------


def _block_to_conflict(
    block: ConflictBlock, index: int, prefix: str, suffix: str
) -> LineConflict:
    return LineConflict(
        index=index,
        a=block.a_text,
        b=block.b_text,
        o=block.o_text if block.has_base else "",
        prefix=prefix,
        suffix=suffix,
    )


def resolve_file(
    conflicted_text: str,
    classifier,
    config: ResolverConfig | None = None,
) -> ResolutionResult:
    """Resolve every marker block in a conflicted file.

    Conflicts are processed top to bottom; each predicted resolution
    replaces its marker block in the working contents before the next
    conflict's context is built.  The final text must pass the syntax
    check; failing that, lower-ranked candidate combinations are tried in
    order of total logprob.
    """
    config = config or ResolverConfig()
    try:
        parsed = parse_conflicted(conflicted_text)
    except MarkerParseError as exc:
        raise MarkerParseError(f"cannot parse conflict markers: {exc}") from exc

    conflict_positions = [
        i for i, p in enumerate(parsed.parts) if isinstance(p, ConflictBlock)
    ]
    if not conflict_positions:
        return ResolutionResult(
            conflicted_text, [], ResolutionStatus.RESOLVED
        )

    working = list(parsed.parts)
    candidates: list[list[tuple[str, float, list[int]]]] = []
    outcomes: list[ConflictOutcome] = []
    failed: list[int] = []

    for lc_index, pos in enumerate(conflict_positions):
        block = parsed.parts[pos]
        prefix = "".join(
            p.render() if isinstance(p, ConflictBlock) else p
            for p in working[:pos]
        )
        suffix = "".join(
            p.render() if isinstance(p, ConflictBlock) else p
            for p in working[pos + 1:]
        )
        lc = _block_to_conflict(block, lc_index, prefix, suffix)
        try:
            ranked = decode_conflict(
                lc,
                classifier,
                top_k=config.top_k,
                beam_width=config.beam_width,
                context_budget=config.context_budget,
            )
        except ClassifierError as exc:
            candidates.append([])
            outcomes.append(
                ConflictOutcome([], _NEG_INF, error=str(exc))
            )
            failed.append(lc_index)
            continue
        candidates.append(ranked)
        text, logprob, labels = ranked[0]
        outcomes.append(ConflictOutcome(labels, logprob))
        working[pos] = text  # refinement: later conflicts see this text

    if failed and len(failed) == len(conflict_positions):
        return ResolutionResult(
            parsed.render(),
            outcomes,
            ResolutionStatus.ABSTAINED,
            reason="classifier failed on every conflict",
        )

    def realize(choice: tuple[int, ...]) -> str:
        parts = list(parsed.parts)
        for lc_index, pos in enumerate(conflict_positions):
            if lc_index in failed:
                continue
            parts[pos] = candidates[lc_index][choice[lc_index]][0]
        return "".join(
            p.render() if isinstance(p, ConflictBlock) else p for p in parts
        )

    def total_logprob(choice: tuple[int, ...]) -> float:
        return sum(
            candidates[i][c][1]
            for i, c in enumerate(choice)
            if i not in failed
        )

    top_choice = tuple(0 for _ in conflict_positions)
    top_prob = math.exp(total_logprob(top_choice))
    if config.abstain_threshold > 0 and top_prob < config.abstain_threshold:
        return ResolutionResult(
            parsed.render(),
            outcomes,
            ResolutionStatus.ABSTAINED,
            reason=(
                f"top candidate probability {top_prob:.4g} below "
                f"threshold {config.abstain_threshold}"
            ),
        )

    # Best-first search over candidate combinations, bounded; candidate
    # texts are fixed after the refinement pass above.
    seen = {top_choice}
    heap = [(-total_logprob(top_choice), top_choice)]
    tries = 0
    while heap and tries < config.max_syntax_tries:
        neg_lp, choice = heapq.heappop(heap)
        tries += 1
        final_text = realize(choice)
        ok = check_syntax(
            final_text, config.language, config.syntax_command
        )
        if ok:
            for lc_index, c in enumerate(choice):
                if lc_index in failed:
                    continue
                text, logprob, labels = candidates[lc_index][c]
                outcomes[lc_index] = ConflictOutcome(
                    labels, logprob, syntax_ok=True
                )
            status = (
                ResolutionStatus.PARTIALLY_RESOLVED
                if failed
                else ResolutionStatus.RESOLVED
            )
            return ResolutionResult(final_text, outcomes, status)
        for lc_index in range(len(conflict_positions)):
            if lc_index in failed:
                continue
            if choice[lc_index] + 1 < len(candidates[lc_index]):
                nxt = list(choice)
                nxt[lc_index] += 1
                nxt_t = tuple(nxt)
                if nxt_t not in seen:
                    seen.add(nxt_t)
                    heapq.heappush(heap, (-total_logprob(nxt_t), nxt_t))

    for outcome in outcomes:
        if outcome.error is None:
            outcome.syntax_ok = False
    return ResolutionResult(
        parsed.render(),
        outcomes,
        ResolutionStatus.ABSTAINED,
        reason="no candidate combination passed the syntax check",
    )
