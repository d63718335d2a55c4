import json
from pathlib import Path

import pytest

from corpusgen import (
    MergeScenario,
    build_octopus_repo,
    build_repo,
    fig1_scenario,
    synthetic_corpus,
)
from mergeweave.labels import ResolutionLabel, apply_label
from mergeweave.mining import (
    RECORD_KEYS,
    assign_split,
    build_dataset,
    extract_resolution_regions,
    list_merge_commits,
    mine_repository,
    replay_merge,
)
from mergeweave.textnorm import equivalent


@pytest.fixture(scope="module")
def fig1_repo(tmp_path_factory):
    root = tmp_path_factory.mktemp("fig1corpus")
    return build_repo(root, "fig1repo", [fig1_scenario()])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return synthetic_corpus(root, n_repos=8, seed=7)


def test_list_merge_commits(fig1_repo):
    merges = list_merge_commits(fig1_repo)
    assert len(merges) == 1
    mc = merges[0]
    assert mc.parent_a != mc.parent_b
    assert mc.base not in (mc.parent_a, mc.parent_b)
    assert mc.extra_parents == 0


def test_replay_merge_conflicts(fig1_repo):
    mc = list_merge_commits(fig1_repo)[0]
    files = replay_merge(fig1_repo, mc)
    assert len(files) == 1
    path, conflicted, resolved = files[0]
    assert path == "clamp.js"
    assert "<<<<<<<" in conflicted and "|||||||" in conflicted
    assert "let x = max(y, 11, z)" in resolved


def test_replay_clean_merge_ignored(tmp_path):
    sc = MergeScenario(
        "f.txt",
        base="one\ntwo\nthree\nfour\nfive\n",
        left="ONE\ntwo\nthree\nfour\nfive\n",
        right="one\ntwo\nthree\nfour\nFIVE\n",
        resolved=None,
    )
    repo = build_repo(tmp_path, "clean", [sc])
    mc = list_merge_commits(repo)[0]
    assert replay_merge(repo, mc) == []


def test_mine_fig1_record(fig1_repo):
    records, stats = mine_repository(fig1_repo)
    assert len(records) == 1
    rec = records[0]
    assert rec["label"] == int(ResolutionLabel.TAKE_B)
    assert rec["path"] == "clamp.js"
    assert rec["language"] == "javascript"
    assert equivalent(rec["resolution"], "11, z")
    assert not rec["trivial"]
    assert not rec["octopus"]
    assert stats.records == 1
    assert stats.line_conflicts == 1


def test_octopus_merge_first_two_parents_flagged(tmp_path):
    repo = build_octopus_repo(tmp_path, "octo")
    merges = [m for m in list_merge_commits(repo) if m.extra_parents]
    assert len(merges) == 1
    records, _ = mine_repository(repo)
    flagged = [r for r in records if r["octopus"]]
    assert flagged
    assert all(r["label"] == int(ResolutionLabel.TAKE_A) for r in flagged)
    assert all(r["trivial"] for r in flagged)


# --- resolution region extraction ----------------------------------------


CONFLICT = (
    "<<<<<<< A\nleft()\n||||||| O\nold()\n=======\nright()\n>>>>>>> B\n"
)


def test_extract_take_ours():
    conflicted = "p1\np2\n" + CONFLICT + "s1\ns2\n"
    resolved = "p1\np2\nleft()\ns1\ns2\n"
    conflicts, bad = extract_resolution_regions(conflicted, resolved)
    assert bad == 0
    assert len(conflicts) == 1
    assert conflicts[0].resolution == "left()\n"
    assert conflicts[0].a == "left()\n"
    assert conflicts[0].o == "old()\n"


def test_extract_multiline_resolution():
    conflicted = "p1\n" + CONFLICT + "s1\n"
    resolved = "p1\nmerged()\nboth()\ns1\n"
    conflicts, bad = extract_resolution_regions(conflicted, resolved)
    assert bad == 0
    assert conflicts[0].resolution == "merged()\nboth()\n"


def test_extract_conflict_at_file_boundaries():
    conflicted = CONFLICT
    conflicts, bad = extract_resolution_regions(conflicted, "anything()\n")
    assert bad == 0
    assert conflicts[0].resolution == "anything()\n"


def test_extract_duplicate_anchor_unextractable():
    # Every candidate prefix anchor (3, 2 and 1 lines) repeats in the
    # resolved text, so the region boundary is ambiguous.
    conflicted = "dup\ndup\ndup\n" + CONFLICT + "end\n"
    resolved = "dup\ndup\ndup\ndup\nx()\nend\n"
    conflicts, bad = extract_resolution_regions(conflicted, resolved)
    assert conflicts == []
    assert bad == 1


def test_extract_anchor_shrinks_when_context_short():
    conflicted = "only\n" + CONFLICT + "tail\n"
    resolved = "only\npicked()\ntail\n"
    conflicts, bad = extract_resolution_regions(conflicted, resolved)
    assert bad == 0
    assert conflicts[0].resolution == "picked()\n"


def test_extract_second_conflict_uses_cursor():
    mid = "m1\nm2\n"
    conflicted = "p\n" + CONFLICT + mid + CONFLICT + "s\n"
    resolved = "p\nfirst()\nm1\nm2\nsecond()\ns\n"
    conflicts, bad = extract_resolution_regions(conflicted, resolved)
    assert bad == 0
    assert [c.resolution for c in conflicts] == ["first()\n", "second()\n"]
    assert [c.index for c in conflicts] == [0, 1]


def test_extract_missing_anchor_counts():
    conflicted = "p\n" + CONFLICT + "s\n"
    resolved = "entirely\nrewritten\n"
    conflicts, bad = extract_resolution_regions(conflicted, resolved)
    assert conflicts == []
    assert bad == 1


# --- splits ---------------------------------------------------------------


def test_assign_split_deterministic():
    assert assign_split("repo00", 7) == assign_split("repo00", 7)
    names = [f"r{i}" for i in range(500)]
    fractions = sum(assign_split(n, 3) == "test" for n in names) / 500
    assert 0.12 < fractions < 0.28


def test_assign_split_depends_on_seed():
    names = [f"r{i}" for i in range(50)]
    a = [assign_split(n, 1) for n in names]
    b = [assign_split(n, 2) for n in names]
    assert a != b


# --- dataset building -----------------------------------------------------


def test_build_dataset_deterministic(corpus, tmp_path):
    out1 = tmp_path / "d1.jsonl"
    out2 = tmp_path / "d2.jsonl"
    build_dataset(corpus, out1, seed=7)
    build_dataset(list(reversed(corpus)), out2, seed=7, workers=3)
    assert out1.read_bytes() == out2.read_bytes()


def test_dataset_records_valid(corpus, tmp_path):
    out = tmp_path / "data.jsonl"
    stats = build_dataset(corpus, out, seed=7)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert stats.records == len(lines) > 0
    splits_by_repo = {}
    for line in lines:
        rec = json.loads(line)
        assert list(rec) == RECORD_KEYS
        splits_by_repo.setdefault(rec["repo"], set()).add(rec["split"])
        if rec["label"] != 0:
            rebuilt = apply_label(
                ResolutionLabel(rec["label"]), rec["a"], rec["b"], rec["o"]
            )
            assert equivalent(rebuilt, rec["resolution"])
    # Repo-level split: no repo contributes to both halves.
    assert all(len(s) == 1 for s in splits_by_repo.values())
    assert splits_by_repo == {
        repo.name: {assign_split(repo.name, 7)}
        for repo in corpus
        if repo.name in splits_by_repo
    }


def test_dataset_stats_sidecar(corpus, tmp_path):
    out = tmp_path / "data.jsonl"
    stats = build_dataset(corpus, out, seed=7)
    sidecar = json.loads(
        Path(str(out) + ".stats.json").read_text(encoding="utf-8")
    )
    assert sidecar["records"] == stats.records
    assert sum(sidecar["label_counts"].values()) == stats.records
    assert sum(sidecar["language_counts"].values()) == stats.records
    # Verbatim one-side resolutions dominate the synthetic history.
    counts = sidecar["label_counts"]
    representable = sum(v for k, v in counts.items() if k != "0")
    assert representable / stats.records > 0.6


def test_max_conflict_lines_cap(fig1_repo):
    records, stats = mine_repository(fig1_repo, max_conflict_lines=0)
    assert records == []
    assert stats.files_skipped == 1
