"""Command-line interface.

Subcommands: mine, stats, resolve, eval, stub-scorer.  Defaults can be
supplied by a JSON config file named in the MERGEWEAVE_CONFIG environment
variable; explicit flags win over the config file.

Exit codes: 0 success (resolve: fully resolved), 2 partially resolved,
3 abstained, 1 usage or internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from pathlib import Path

from .classify import (
    STUB_PROBS,
    ClassifierError,
    ExternalClassifier,
    FixedClassifier,
    HeuristicClassifier,
    stub_scorer_loop,
)
from .evaluate import evaluate
from .labels import label_distribution
from .mining import build_dataset
from .resolve import ResolutionStatus, ResolverConfig, resolve_file

log = logging.getLogger(__name__)

CONFIG_ENV = "MERGEWEAVE_CONFIG"

# JSON config keys; identical to the corresponding flag names.
CONFIG_KEYS = (
    "classifier", "context_budget", "top_k", "beam_width",
    "abstain_threshold", "language", "seed", "workers", "timeout",
)

DEFAULTS = {
    "classifier": "heuristic",
    "context_budget": 512,
    "top_k": 3,
    "beam_width": 5,
    "abstain_threshold": 0.0,
    "language": "unknown",
    "seed": 0,
    "workers": os.cpu_count() or 1,
    "timeout": 10.0,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is taken by PartiallyResolved.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_config() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"cannot read config {path}: {exc}")
    unknown = set(config) - set(CONFIG_KEYS)
    if unknown:
        raise SystemExit(f"unknown config keys: {sorted(unknown)}")
    return config


def setting(args: argparse.Namespace, config: dict, key: str):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(key, DEFAULTS[key])


def make_classifier(spec: str, timeout: float):
    """heuristic | stub | cmd:<shell command> | tcp:<host>:<port>"""
    if spec == "heuristic":
        return HeuristicClassifier()
    if spec == "stub":
        return FixedClassifier(STUB_PROBS)
    if spec.startswith("cmd:"):
        return ExternalClassifier.subprocess(
            shlex.split(spec[len("cmd:"):]), timeout=timeout
        )
    if spec.startswith("tcp:"):
        host, _, port = spec[len("tcp:"):].rpartition(":")
        if not host or not port.isdigit():
            raise SystemExit(f"bad tcp classifier spec: {spec}")
        return ExternalClassifier.tcp(host, int(port), timeout=timeout)
    raise SystemExit(f"unknown classifier spec: {spec}")


def _read_records(path: Path):
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield line


def cmd_mine(args: argparse.Namespace, config: dict) -> int:
    repo_list = Path(args.repo_list)
    repos = [
        Path(line.strip())
        for line in repo_list.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    stats = build_dataset(
        repos,
        Path(args.out),
        seed=setting(args, config, "seed"),
        workers=setting(args, config, "workers"),
        max_conflict_lines=args.max_conflict_lines,
    )
    json.dump(stats.to_json(), sys.stdout, indent=2)
    print()
    return 0


def cmd_stats(args: argparse.Namespace, config: dict) -> int:
    labels = []
    trivial = 0
    malformed = 0
    for line in _read_records(Path(args.dataset)):
        try:
            record = json.loads(line)
            labels.append(int(record["label"]))
            trivial += bool(record.get("trivial"))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            malformed += 1
    dist = label_distribution(labels)
    report = {**dist, "trivial": trivial, "malformed": malformed}
    if args.format in ("table", "both"):
        width = max(len(name) for name in dist["labels"])
        print(f"{'label'.ljust(width)}  count  fraction")
        for name, bucket in dist["labels"].items():
            print(
                f"{name.ljust(width)}  {bucket['count']:5d}  "
                f"{bucket['fraction']:8.3f}"
            )
        print(f"total records: {dist['total']}  trivial: {trivial}"
              f"  malformed: {malformed}")
    if args.format in ("json", "both"):
        json.dump(report, sys.stdout, indent=2)
        print()
    return 0


def cmd_resolve(args: argparse.Namespace, config: dict) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    classifier = make_classifier(
        setting(args, config, "classifier"), setting(args, config, "timeout")
    )
    resolver_config = ResolverConfig(
        top_k=setting(args, config, "top_k"),
        beam_width=setting(args, config, "beam_width"),
        context_budget=setting(args, config, "context_budget"),
        abstain_threshold=setting(args, config, "abstain_threshold"),
        language=setting(args, config, "language"),
    )
    try:
        result = resolve_file(text, classifier, resolver_config)
    finally:
        if hasattr(classifier, "close"):
            classifier.close()
    if result.reason:
        print(result.reason, file=sys.stderr)
    if args.out:
        if result.status is ResolutionStatus.RESOLVED:
            Path(args.out).write_text(result.file_text, encoding="utf-8")
    else:
        sys.stdout.write(result.file_text)
    return {
        ResolutionStatus.RESOLVED: 0,
        ResolutionStatus.PARTIALLY_RESOLVED: 2,
        ResolutionStatus.ABSTAINED: 3,
    }[result.status]


def cmd_eval(args: argparse.Namespace, config: dict) -> int:
    classifier = make_classifier(
        setting(args, config, "classifier"), setting(args, config, "timeout")
    )
    try:
        report = evaluate(
            _read_records(Path(args.dataset)),
            classifier,
            context_budget=setting(args, config, "context_budget"),
            abstain_threshold=setting(args, config, "abstain_threshold"),
        )
    finally:
        if hasattr(classifier, "close"):
            classifier.close()
    if args.format in ("table", "both"):
        print(report.to_table())
    if args.format in ("json", "both"):
        json.dump(report.to_json(), sys.stdout, indent=2)
        print()
    return 0


def cmd_stub_scorer(args: argparse.Namespace, config: dict) -> int:
    stub_scorer_loop(sys.stdin, sys.stdout)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="mergeweave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_classifier_flags(p):
        p.add_argument(
            "--classifier",
            help="heuristic | stub | cmd:<command> | tcp:<host>:<port>",
        )
        p.add_argument("--timeout", type=float)
        p.add_argument("--context-budget", type=int, dest="context_budget")
        p.add_argument(
            "--abstain-threshold", type=float, dest="abstain_threshold"
        )

    mine = sub.add_parser("mine", help="mine merge conflicts from git repos")
    mine.add_argument("repo_list", help="file listing local repo paths")
    mine.add_argument("out", help="output JSONL path")
    mine.add_argument("--seed", type=int)
    mine.add_argument("--workers", type=int)
    mine.add_argument("--max-conflict-lines", type=int, default=None)
    mine.set_defaults(func=cmd_mine)

    stats = sub.add_parser("stats", help="label histogram of a dataset")
    stats.add_argument("dataset")
    stats.add_argument(
        "--format", choices=["table", "json", "both"], default="both"
    )
    stats.set_defaults(func=cmd_stats)

    resolve = sub.add_parser("resolve", help="resolve a conflicted file")
    resolve.add_argument("file")
    resolve.add_argument("--out")
    resolve.add_argument("--top-k", type=int, dest="top_k")
    resolve.add_argument("--beam-width", type=int, dest="beam_width")
    resolve.add_argument("--language")
    add_classifier_flags(resolve)
    resolve.set_defaults(func=cmd_resolve)

    ev = sub.add_parser("eval", help="evaluate a classifier on a dataset")
    ev.add_argument("dataset")
    ev.add_argument(
        "--format", choices=["table", "json", "both"], default="table"
    )
    add_classifier_flags(ev)
    ev.set_defaults(func=cmd_eval)

    stub = sub.add_parser(
        "stub-scorer", help="serve a fixed distribution over stdio"
    )
    stub.set_defaults(func=cmd_stub_scorer)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config()
        return args.func(args, config)
    except SystemExit:
        raise
    except (OSError, ClassifierError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
