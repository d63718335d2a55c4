"""Evaluation metrics for predicted conflict resolutions.

Exact match is verbatim string equality modulo whitespace and
indentation.  BLEU-4 uses this package's tokenizer with whitespace and
newline tokens removed, uniform 4-gram weights, a brevity penalty, and
add-one smoothing; both the corpus-level score and the mean
sentence-level score are reported.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .align import build_model_input
from .diff3 import TokenConflict
from .labels import apply_label
from .lexer import TokenKind, tokenize
from .resolve import check_syntax
from .textnorm import equivalent

MAX_NGRAM = 4


def lexical_tokens(text: str) -> list[str]:
    return [
        tok.text
        for tok in tokenize(text)
        if tok.kind not in (TokenKind.WHITESPACE, TokenKind.NEWLINE)
    ]


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(
        tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)
    )


def _bleu_stats(candidate: list[str], reference: list[str]) -> list[tuple[int, int]]:
    """(clipped matches, candidate n-grams) for n = 1..4."""
    stats = []
    for n in range(1, MAX_NGRAM + 1):
        cand = _ngram_counts(candidate, n)
        ref = _ngram_counts(reference, n)
        matched = sum(min(count, ref[gram]) for gram, count in cand.items())
        stats.append((matched, max(sum(cand.values()), 0)))
    return stats


def _bleu_from_totals(
    totals: list[tuple[int, int]], cand_len: int, ref_len: int
) -> float:
    if cand_len == 0:
        return 0.0
    log_precision = 0.0
    for matched, possible in totals:
        # Add-one smoothing keeps empty n-gram orders from zeroing the
        # geometric mean.
        log_precision += math.log((matched + 1) / (possible + 1))
    log_precision /= MAX_NGRAM
    brevity = min(0.0, 1.0 - ref_len / cand_len)
    return math.exp(brevity + log_precision)


def bleu4(candidate: str, reference: str) -> float:
    """Sentence-level smoothed BLEU-4 over lexical tokens, in [0, 1]."""
    cand = lexical_tokens(candidate)
    ref = lexical_tokens(reference)
    if not cand and not ref:
        return 1.0
    return _bleu_from_totals(_bleu_stats(cand, ref), len(cand), len(ref))


def corpus_bleu4(pairs: list[tuple[str, str]]) -> float:
    """Corpus-level BLEU-4: n-gram counts pooled before the geometric mean."""
    totals = [(0, 0)] * MAX_NGRAM
    cand_len = ref_len = 0
    for candidate, reference in pairs:
        cand = lexical_tokens(candidate)
        ref = lexical_tokens(reference)
        cand_len += len(cand)
        ref_len += len(ref)
        for i, (m, p) in enumerate(_bleu_stats(cand, ref)):
            totals[i] = (totals[i][0] + m, totals[i][1] + p)
    if cand_len == 0 and ref_len == 0:
        return 1.0
    return _bleu_from_totals(totals, cand_len, ref_len)


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_score: float
    bleu4: float
    bleu4_sentence_mean: float
    fraction_merged: float
    syntax_correct: float
    counts: dict
    per_language: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
            "bleu4": self.bleu4,
            "bleu4_sentence_mean": self.bleu4_sentence_mean,
            "fraction_merged": self.fraction_merged,
            "syntax_correct": self.syntax_correct,
            "counts": self.counts,
        }
        if self.per_language:
            out["per_language"] = {
                lang: report.to_json()
                for lang, report in sorted(self.per_language.items())
            }
        return out

    def to_table(self) -> str:
        """Aligned percentage table, one row per language plus the total."""
        headers = [
            "Language", "Precision", "Recall", "F-score", "BLEU-4",
            "Fraction Merged", "Syntax correct",
        ]
        rows = []
        for lang, report in sorted(self.per_language.items()):
            rows.append(report._row(lang))
        rows.append(self._row("all"))
        widths = [
            max(len(headers[i]), *(len(r[i]) for r in rows))
            for i in range(len(headers))
        ]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
            "  ".join("-" * w for w in widths),
        ]
        for row in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        return "\n".join(lines)

    def _row(self, name: str) -> list[str]:
        return [name] + [
            f"{100 * value:.1f}"
            for value in (
                self.precision, self.recall, self.f_score, self.bleu4,
                self.fraction_merged, self.syntax_correct,
            )
        ]


@dataclass
class _Tally:
    total: int = 0
    attempted: int = 0
    exact: int = 0
    syntax_ok: int = 0
    malformed: int = 0
    pairs: list = field(default_factory=list)
    sentence_bleus: list = field(default_factory=list)

    def report(self) -> EvalReport:
        precision = self.exact / self.attempted if self.attempted else 0.0
        recall = self.exact / self.total if self.total else 0.0
        f_score = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        return EvalReport(
            precision=precision,
            recall=recall,
            f_score=f_score,
            bleu4=corpus_bleu4(self.pairs),
            bleu4_sentence_mean=(
                sum(self.sentence_bleus) / len(self.sentence_bleus)
                if self.sentence_bleus
                else 0.0
            ),
            fraction_merged=self.attempted / self.total if self.total else 0.0,
            syntax_correct=(
                self.syntax_ok / self.attempted if self.attempted else 0.0
            ),
            counts={
                "total": self.total,
                "attempted": self.attempted,
                "exact_match": self.exact,
                "syntax_ok": self.syntax_ok,
                "malformed": self.malformed,
            },
        )


def record_model_input(record: dict, context_budget: int = 512):
    tc = TokenConflict(
        index=record.get("token_conflict_index", 0),
        a=tokenize(record["a"]),
        b=tokenize(record["b"]),
        o=tokenize(record["o"]),
        pref=tokenize(record.get("pref", "")),
        suff=tokenize(record.get("suff", "")),
    )
    return tc, build_model_input(tc, context_budget=context_budget)


def evaluate(
    records,
    classifier,
    context_budget: int = 512,
    abstain_threshold: float = 0.0,
    language_column: str = "language",
) -> EvalReport:
    """Top-1 metrics of ``classifier`` against ground-truth resolutions.

    ``records`` yields dataset dicts (or JSONL lines).  Records missing a
    required field are skipped and counted as malformed.
    """
    overall = _Tally()
    by_language: dict[str, _Tally] = {}

    for raw in records:
        record = raw
        if isinstance(raw, (str, bytes)):
            try:
                record = json.loads(raw)
            except json.JSONDecodeError:
                overall.malformed += 1
                continue
        try:
            _, model_input = record_model_input(record, context_budget)
            truth = record["resolution"]
        except (KeyError, TypeError):
            overall.malformed += 1
            continue

        language = record.get(language_column, "unknown")
        tallies = [overall, by_language.setdefault(language, _Tally())]
        prediction = classifier.predict(model_input)
        top = max(prediction.probs)
        label = prediction.argmax
        candidate = apply_label(label, record["a"], record["b"], record["o"])

        for tally in tallies:
            tally.total += 1
            if top < abstain_threshold:
                continue
            tally.attempted += 1
            if equivalent(candidate, truth):
                tally.exact += 1
            if check_syntax(candidate, tolerant=True):
                tally.syntax_ok += 1
            tally.pairs.append((candidate, truth))
            tally.sentence_bleus.append(bleu4(candidate, truth))

    report = overall.report()
    report.per_language = {
        lang: tally.report() for lang, tally in by_language.items()
    }
    return report
