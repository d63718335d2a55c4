"""Synthetic git repositories with scripted conflicting merges.

Test helper: builds small local repos whose merge history is known in
advance, so mining results can be checked against construction.
"""

from __future__ import annotations

import os
import random
import subprocess
from dataclasses import dataclass
from pathlib import Path

from mergeweave.labels import ResolutionLabel, apply_label

_ENV = {
    **os.environ,
    "GIT_AUTHOR_NAME": "dev",
    "GIT_AUTHOR_EMAIL": "dev@example.com",
    "GIT_COMMITTER_NAME": "dev",
    "GIT_COMMITTER_EMAIL": "dev@example.com",
    "GIT_AUTHOR_DATE": "2024-01-01T00:00:00 +0000",
    "GIT_COMMITTER_DATE": "2024-01-01T00:00:00 +0000",
}


def git(repo: Path, *args: str, check: bool = True) -> subprocess.CompletedProcess:
    return subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
        check=check,
        env=_ENV,
    )


@dataclass
class MergeScenario:
    """One file's three versions plus the committed resolution.

    resolved=None means the merge of this file is expected to be clean.
    """

    filename: str
    base: str
    left: str
    right: str
    resolved: str | None


def build_repo(root: Path, name: str, scenarios: list[MergeScenario]) -> Path:
    """One repo with a single merge commit touching every scenario file."""
    repo = root / name
    repo.mkdir(parents=True)
    git(repo, "init", "-q", "-b", "trunk")

    def write_all(version: str) -> None:
        for sc in scenarios:
            (repo / sc.filename).write_text(
                getattr(sc, version), encoding="utf-8"
            )

    write_all("base")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", "initial import")

    git(repo, "checkout", "-q", "-b", "side")
    write_all("right")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", "side branch change")

    git(repo, "checkout", "-q", "trunk")
    write_all("left")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", "trunk change")

    merge = git(repo, "merge", "-q", "side", check=False)
    if merge.returncode == 0:
        return repo  # clean merge; auto-committed
    for sc in scenarios:
        if sc.resolved is not None:
            (repo / sc.filename).write_text(sc.resolved, encoding="utf-8")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", "merge side into trunk")
    return repo


def build_octopus_repo(root: Path, name: str) -> Path:
    """A three-parent merge with no conflicts on the extra parent."""
    sc = MergeScenario(
        "main.js",
        base="before()\nshared = old()\nafter()\n",
        left="before()\nshared = left()\nafter()\n",
        right="before()\nshared = right()\nafter()\n",
        resolved="before()\nshared = left()\nafter()\n",
    )
    repo = build_repo(root, name, [sc])
    # Graft a third parent onto the merge commit.
    base = git(repo, "rev-list", "--max-parents=0", "HEAD").stdout.strip()
    git(repo, "checkout", "-q", "-b", "third", base)
    (repo / "extra.js").write_text("unrelated()\n", encoding="utf-8")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", "third branch file")
    third = git(repo, "rev-parse", "HEAD").stdout.strip()
    git(repo, "checkout", "-q", "trunk")
    merge = git(repo, "rev-parse", "HEAD").stdout.strip()
    p1 = git(repo, "rev-parse", f"{merge}^1").stdout.strip()
    p2 = git(repo, "rev-parse", f"{merge}^2").stdout.strip()
    tree = git(repo, "rev-parse", f"{merge}^{{tree}}").stdout.strip()
    new = git(
        repo, "commit-tree", tree,
        "-p", p1, "-p", p2, "-p", third,
        "-m", "octopus merge",
    ).stdout.strip()
    git(repo, "update-ref", "refs/heads/trunk", new)
    git(repo, "reset", "-q", "--hard", "trunk")
    return repo


def fig1_scenario() -> MergeScenario:
    from fixtures import FIG1_BASE, FIG1_LEFT, FIG1_RESOLVED, FIG1_RIGHT

    pref = "function clamp(y, z) {\nlet limit = z\n"
    suff = "return x\n}\n"
    return MergeScenario(
        "clamp.js",
        base=pref + FIG1_BASE + suff,
        left=pref + FIG1_LEFT + suff,
        right=pref + FIG1_RIGHT + suff,
        resolved=pref + FIG1_RESOLVED + suff,
    )


def _region_scenario(i: int, kind: str) -> MergeScenario:
    """A conflict whose resolution follows a known pattern.

    Region tokens are pairwise disjoint across a, b and o so the token
    re-merge keeps the region in one piece.
    """
    pref = f"setup_{i} = 1\nprobe_{i} = 2\nwarm_{i} = 3\n"
    suff = f"cool_{i} = 4\ncheck_{i} = 5\nclose_{i} = 6\n"
    o = f"origfn{i}\n"
    a = f"alphafn{i}\n"
    b = f"bravofn{i}\n"
    resolutions = {
        "take_a": a,
        "take_b": b,
        "take_base": o,
        "concat_ab": apply_label(ResolutionLabel.CONCAT_AB, a, b, o),
        "concat_ba": apply_label(ResolutionLabel.CONCAT_BA, a, b, o),
        "novel": f"inventedfn{i}\n",
    }
    return MergeScenario(
        f"mod_{i}.py",
        base=pref + o + suff,
        left=pref + a + suff,
        right=pref + b + suff,
        resolved=pref + resolutions[kind] + suff,
    )


# Weighted toward verbatim one-side resolutions, mirroring real histories.
_KIND_WEIGHTS = [
    ("take_a", 8),
    ("take_b", 5),
    ("take_base", 1),
    ("concat_ab", 2),
    ("concat_ba", 1),
    ("novel", 3),
]


def synthetic_corpus(
    root: Path, n_repos: int = 20, seed: int = 7
) -> list[Path]:
    """Deterministic corpus: one conflicting merge per repository."""
    rng = random.Random(seed)
    kinds = [k for k, w in _KIND_WEIGHTS for _ in range(w)]
    repos = []
    counter = 0
    for r in range(n_repos):
        scenarios = []
        for _ in range(rng.randint(2, 4)):
            scenarios.append(_region_scenario(counter, rng.choice(kinds)))
            counter += 1
        repos.append(build_repo(root, f"repo{r:02d}", scenarios))
    return repos
