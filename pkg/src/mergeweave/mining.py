"""Mining labeled merge-conflict data from local git repositories.

For every merge commit the file-level merge of its two parents is
replayed with ``git merge-file --diff3``; files that conflict are paired
with the developer's resolved version at the merge commit, resolution
regions are recovered by anchor matching, and each token-level conflict
becomes one dataset record.
"""

from __future__ import annotations

import hashlib
import json
import logging
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from tempfile import TemporaryDirectory

from .diff3 import LineConflict, token_diff3
from .labels import UNREPRESENTABLE, extract_label
from .markers import ConflictBlock, parse_conflicted
from .textnorm import equivalent

log = logging.getLogger(__name__)

LANGUAGE_BY_EXT = {
    ".c": "c", ".h": "c", ".cc": "cpp", ".cpp": "cpp", ".hpp": "cpp",
    ".cs": "csharp", ".go": "go", ".java": "java", ".js": "javascript",
    ".jsx": "javascript", ".php": "php", ".py": "python", ".rb": "ruby",
    ".rs": "rust", ".scala": "scala", ".ts": "typescript",
    ".tsx": "typescript", ".txt": "text", ".md": "text",
}

# Fixed JSONL key order; part of the on-disk schema.
RECORD_KEYS = [
    "repo", "commit", "path", "line_conflict_index", "token_conflict_index",
    "a", "b", "o", "resolution", "pref", "suff", "label", "language",
    "trivial", "octopus", "split",
]

ANCHOR_LINES = 3


class GitError(RuntimeError):
    pass


def _git(repo: Path, *args: str, check: bool = True) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
        errors="replace",
    )
    if check and proc.returncode != 0:
        raise GitError(
            f"git {' '.join(args)} failed in {repo}: {proc.stderr.strip()}"
        )
    return proc.stdout


@dataclass
class MergeCommitRecord:
    repo: str
    merge_commit: str
    parent_a: str
    parent_b: str
    base: str
    extra_parents: int = 0  # octopus merges keep only the first two


@dataclass
class MinerStats:
    merges_total: int = 0
    merges_conflicted: int = 0
    files_conflicted: int = 0
    files_skipped: int = 0
    line_conflicts: int = 0
    unextractable: int = 0
    token_clean: int = 0
    token_split_failures: int = 0
    records: int = 0
    unrepresentable: int = 0
    label_counts: dict = field(default_factory=dict)
    language_counts: dict = field(default_factory=dict)
    split_counts: dict = field(default_factory=dict)

    def merged_with(self, other: "MinerStats") -> None:
        for name in (
            "merges_total", "merges_conflicted", "files_conflicted",
            "files_skipped", "line_conflicts", "unextractable",
            "token_clean", "token_split_failures", "records",
            "unrepresentable",
        ):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        for attr in ("label_counts", "language_counts", "split_counts"):
            mine, theirs = getattr(self, attr), getattr(other, attr)
            for key, value in theirs.items():
                mine[key] = mine.get(key, 0) + value

    def to_json(self) -> dict:
        return {
            "merges_total": self.merges_total,
            "merges_conflicted": self.merges_conflicted,
            "files_conflicted": self.files_conflicted,
            "files_skipped": self.files_skipped,
            "line_conflicts": self.line_conflicts,
            "unextractable": self.unextractable,
            "token_clean": self.token_clean,
            "token_split_failures": self.token_split_failures,
            "records": self.records,
            "unrepresentable": self.unrepresentable,
            "label_counts": dict(sorted(self.label_counts.items())),
            "language_counts": dict(sorted(self.language_counts.items())),
            "split_counts": dict(sorted(self.split_counts.items())),
        }


def list_merge_commits(repo: Path) -> list[MergeCommitRecord]:
    out = _git(repo, "rev-list", "--merges", "--parents", "--all")
    records = []
    for line in sorted(out.splitlines()):
        parts = line.split()
        if len(parts) < 3:
            continue
        commit, p1, p2 = parts[0], parts[1], parts[2]
        base = _git(repo, "merge-base", p1, p2, check=False).strip()
        if not base:
            continue  # unrelated histories
        records.append(
            MergeCommitRecord(
                repo=repo.name,
                merge_commit=commit,
                parent_a=p1,
                parent_b=p2,
                base=base,
                extra_parents=len(parts) - 3,
            )
        )
    return records


def _show(repo: Path, rev: str, path: str) -> str | None:
    proc = subprocess.run(
        ["git", "-C", str(repo), "show", f"{rev}:{path}"],
        capture_output=True,
    )
    if proc.returncode != 0:
        return None
    data = proc.stdout
    if b"\0" in data:
        return None  # binary
    return data.decode("utf-8", errors="replace")


def _changed_paths(repo: Path, base: str, tip: str) -> set[str]:
    out = _git(repo, "diff", "--name-only", base, tip, check=False)
    return set(out.splitlines())


def replay_merge(
    repo: Path, record: MergeCommitRecord
) -> list[tuple[str, str, str]]:
    """Conflicted files of one merge: (path, conflicted_text, resolved).

    Empty list means the file-level replay merged cleanly everywhere.
    """
    candidates = sorted(
        _changed_paths(repo, record.base, record.parent_a)
        & _changed_paths(repo, record.base, record.parent_b)
    )
    results = []
    for path in candidates:
        texts = {
            "a": _show(repo, record.parent_a, path),
            "o": _show(repo, record.base, path),
            "b": _show(repo, record.parent_b, path),
            "m": _show(repo, record.merge_commit, path),
        }
        if texts["a"] is None or texts["b"] is None or texts["m"] is None:
            continue  # deleted on a side or binary; no resolution to learn
        if texts["o"] is None:
            texts["o"] = ""
        with TemporaryDirectory() as tmp:
            paths = {}
            for key in ("a", "o", "b"):
                p = Path(tmp) / key
                p.write_text(texts[key], encoding="utf-8")
                paths[key] = p
            proc = subprocess.run(
                [
                    "git", "merge-file", "--diff3", "-p",
                    "-L", "A", "-L", "O", "-L", "B",
                    str(paths["a"]), str(paths["o"]), str(paths["b"]),
                ],
                capture_output=True,
                text=True,
                errors="replace",
            )
        if proc.returncode == 0:
            continue  # clean merge: ignored per the mining protocol
        if proc.returncode < 0:
            log.warning("merge-file failed for %s:%s", record.repo, path)
            continue
        results.append((path, proc.stdout, texts["m"]))
    return results


def _find_anchor(
    lines: list[str], anchor: list[str], start: int
) -> int | None:
    """Unique position of ``anchor`` in lines[start:], or None."""
    if not anchor:
        return None
    hits = [
        i
        for i in range(start, len(lines) - len(anchor) + 1)
        if lines[i:i + len(anchor)] == anchor
    ]
    if len(hits) == 1:
        return hits[0]
    return None


def extract_resolution_regions(
    conflicted_text: str, resolved_text: str
) -> tuple[list[LineConflict], int]:
    """Recover each conflict's resolution region from the resolved file.

    Conflicts are anchored by their surrounding stable lines (3 per side,
    shrinking to 1), required to occur uniquely in the remaining resolved
    text; ambiguous or missing anchors mark the conflict unextractable.
    Returns (conflicts with resolution set, unextractable count).
    """
    parsed = parse_conflicted(conflicted_text)
    resolved_lines = resolved_text.splitlines(keepends=True)
    conflicts: list[LineConflict] = []
    unextractable = 0
    cursor = 0

    parts = parsed.parts
    for idx, part in enumerate(parts):
        if not isinstance(part, ConflictBlock):
            continue
        before = parts[idx - 1] if idx > 0 else ""
        after = parts[idx + 1] if idx + 1 < len(parts) else ""
        before_lines = (
            before.splitlines(keepends=True)
            if isinstance(before, str)
            else []
        )
        after_lines = (
            after.splitlines(keepends=True) if isinstance(after, str) else []
        )

        start = end = None
        if not before_lines:
            # Nothing stable before this conflict: its resolution starts
            # where the previous region (or the file) ended.
            start = cursor
        else:
            for k in range(min(ANCHOR_LINES, len(before_lines)), 0, -1):
                anchor = before_lines[-k:]
                pos = _find_anchor(resolved_lines, anchor, cursor)
                if pos is not None:
                    start = pos + len(anchor)
                    break
        if start is not None:
            if not after_lines:
                if idx >= len(parts) - 2:
                    end = len(resolved_lines)
                # two conflicts with nothing between them cannot be
                # separated reliably; leave end unset (unextractable)
            else:
                for k in range(min(ANCHOR_LINES, len(after_lines)), 0, -1):
                    anchor = after_lines[:k]
                    pos = _find_anchor(resolved_lines, anchor, start)
                    if pos is not None:
                        end = pos
                        break
        if start is None or end is None:
            unextractable += 1
            continue

        resolution = "".join(resolved_lines[start:end])
        prefix = "".join(
            p if isinstance(p, str) else p.render() for p in parts[:idx]
        )
        suffix = "".join(
            p if isinstance(p, str) else p.render() for p in parts[idx + 1:]
        )
        conflicts.append(
            LineConflict(
                index=len(conflicts),
                a=part.a_text,
                b=part.b_text,
                o=part.o_text,
                resolution=resolution,
                prefix=prefix,
                suffix=suffix,
            )
        )
        cursor = end
    return conflicts, unextractable


def split_token_resolution(outcome, resolution: str) -> list[str] | None:
    """Split a line-level resolution into per-token-conflict pieces.

    The merged text of stable chunks anchors the split; any anchor that
    cannot be found in order makes the whole conflict unsplittable.
    """
    from .diff3 import ChunkKind

    pieces: list[str] = []
    pos = 0
    pending_conflict = False
    for chunk in outcome.chunks:
        if chunk.kind is ChunkKind.CONFLICT:
            pending_conflict = True
            continue
        stable = chunk.text or ""
        if not pending_conflict:
            # Leading stable text must be a prefix of the resolution.
            if resolution.startswith(stable, pos):
                pos += len(stable)
                continue
            return None
        idx = resolution.find(stable, pos) if stable else -1
        if stable and idx == -1:
            return None
        if not stable:
            continue
        pieces.append(resolution[pos:idx])
        pos = idx + len(stable)
        pending_conflict = False
    if pending_conflict:
        pieces.append(resolution[pos:])
        pos = len(resolution)
    if len(pieces) != len(outcome.conflicts):
        return None
    return pieces


def assign_split(repo_name: str, seed: int, test_fraction: float = 0.2) -> str:
    """Deterministic per-repository train/test assignment."""
    digest = hashlib.sha256(f"{seed}:{repo_name}".encode()).digest()
    value = int.from_bytes(digest[:8], "big") / 2 ** 64
    return "test" if value < test_fraction else "train"


def mine_repository(
    repo: Path, seed: int = 0, max_conflict_lines: int | None = None
) -> tuple[list[dict], MinerStats]:
    """All dataset records of one repository, deterministically ordered."""
    stats = MinerStats()
    records: list[dict] = []
    split = assign_split(repo.name, seed)
    for mc in list_merge_commits(repo):
        stats.merges_total += 1
        conflicted_files = replay_merge(repo, mc)
        if not conflicted_files:
            continue
        stats.merges_conflicted += 1
        for path, conflicted_text, resolved_text in conflicted_files:
            stats.files_conflicted += 1
            language = LANGUAGE_BY_EXT.get(Path(path).suffix, "unknown")
            conflicts, unextractable = extract_resolution_regions(
                conflicted_text, resolved_text
            )
            stats.unextractable += unextractable
            for lc in conflicts:
                stats.line_conflicts += 1
                if max_conflict_lines is not None and (
                    len(lc.a.splitlines()) > max_conflict_lines
                    or len(lc.b.splitlines()) > max_conflict_lines
                ):
                    stats.files_skipped += 1
                    continue
                trivial = equivalent(lc.resolution, lc.a) or equivalent(
                    lc.resolution, lc.b
                )
                outcome = token_diff3(lc)
                if not outcome.conflicts:
                    stats.token_clean += 1
                    continue
                pieces = split_token_resolution(outcome, lc.resolution)
                if pieces is None:
                    stats.token_split_failures += 1
                    continue
                for tc, piece in zip(outcome.conflicts, pieces):
                    a_t, b_t, o_t = tc.a.text(), tc.b.text(), tc.o.text()
                    label = extract_label(a_t, b_t, o_t, piece)
                    stats.records += 1
                    if label == UNREPRESENTABLE:
                        stats.unrepresentable += 1
                    stats.label_counts[str(label)] = (
                        stats.label_counts.get(str(label), 0) + 1
                    )
                    stats.language_counts[language] = (
                        stats.language_counts.get(language, 0) + 1
                    )
                    stats.split_counts[split] = (
                        stats.split_counts.get(split, 0) + 1
                    )
                    records.append(
                        {
                            "repo": mc.repo,
                            "commit": mc.merge_commit,
                            "path": path,
                            "line_conflict_index": lc.index,
                            "token_conflict_index": tc.index,
                            "a": a_t,
                            "b": b_t,
                            "o": o_t,
                            "resolution": piece,
                            "pref": tc.pref.text(),
                            "suff": tc.suff.text(),
                            "label": label,
                            "language": language,
                            "trivial": trivial,
                            "octopus": mc.extra_parents > 0,
                            "split": split,
                        }
                    )
    records.sort(
        key=lambda r: (
            r["repo"], r["commit"], r["path"],
            r["line_conflict_index"], r["token_conflict_index"],
        )
    )
    return records, stats


def record_line(record: dict) -> str:
    ordered = {key: record[key] for key in RECORD_KEYS}
    return json.dumps(ordered, ensure_ascii=False, separators=(",", ":"))


def build_dataset(
    repo_paths: list[Path],
    out_path: Path,
    seed: int = 0,
    workers: int = 1,
    max_conflict_lines: int | None = None,
) -> MinerStats:
    """Mine all repositories and write JSONL plus a stats sidecar.

    Output is deterministic for a fixed corpus and seed: repositories are
    processed in sorted order and records are written repo by repo
    regardless of worker completion order.
    """
    repo_paths = sorted(repo_paths, key=lambda p: p.name)
    stats = MinerStats()

    def mine(path: Path):
        try:
            return mine_repository(path, seed, max_conflict_lines)
        except GitError as exc:
            log.warning("skipping repository %s: %s", path, exc)
            return [], MinerStats()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(mine, repo_paths))
    else:
        results = [mine(path) for path in repo_paths]

    with open(out_path, "w", encoding="utf-8") as handle:
        for records, repo_stats in results:
            stats.merged_with(repo_stats)
            for record in records:
                handle.write(record_line(record) + "\n")

    sidecar = out_path.with_suffix(out_path.suffix + ".stats.json")
    sidecar.write_text(
        json.dumps(stats.to_json(), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )
    return stats
