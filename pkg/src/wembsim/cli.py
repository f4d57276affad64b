"""Command-line harness: score captions and run the metric evaluation protocols.

Every report is TSV preceded by ``#`` header lines naming the command, metric
order, seed, embedding table and combining rule. Exit codes: 0 success, 1
warnings were raised and ``--strict`` was given, 2 I/O, parse or evaluation
failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from typing import Dict, List, Optional, Sequence

from . import __version__
from .baselines.transport import SinkhornParams
from .datasets import (
    DISTRACTION_CATEGORIES,
    HUMAN_TARGETS,
    PAIRWISE_CATEGORIES,
    DistractionInstance,
    PairwiseInstance,
    ScoringInstance,
    SystemEntry,
    UnknownCategoryError,
    read_jsonl,
)
from .embeddings import EmbeddingFormatError, load_embeddings
from .metrics import EMBEDDING_METRICS, MetricConfigError, MetricSuite, parse_metric_list
from .preprocess import StopwordList
from .rng import XorShift64Star
from .stats import (
    NORMALIZATIONS,
    PairedSamples,
    Preference,
    PreferencePair,
    UndefinedCorrelationError,
    combine_scores,
    correlation_matrix,
    forced_choice_accuracy,
    pairwise_accuracy,
    pearson,
)

EXIT_OK, EXIT_WARN, EXIT_FAIL = 0, 1, 2
NA = "NA"


class HarnessError(Exception):
    """Fatal problem with inputs or configuration (exit code 2)."""


def _num(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return NA
    return f"{x:.6f}"


def _pval(p: Optional[float]) -> str:
    if p is None or math.isnan(p):
        return NA
    return f"{p:.6g}"


class Run:
    """Per-invocation state: parsed args, loaded resources, warning tally."""

    def __init__(self, args):
        self.args = args
        self.warnings: List[str] = []
        self.table = None
        self.metrics = parse_metric_list(args.metrics)

    def warn(self, msg: str) -> None:
        self.warnings.append(msg)
        print(f"warning: {msg}", file=sys.stderr)

    def suite(self, metrics: Optional[Sequence[str]] = None) -> MetricSuite:
        metrics = list(metrics or self.metrics)
        if EMBEDDING_METRICS.intersection(metrics) and self.table is None:
            if not self.args.embeddings:
                raise HarnessError(f"--embeddings is required for {sorted(EMBEDDING_METRICS.intersection(metrics))}")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                self.table = load_embeddings(self.args.embeddings, self.args.format)
            for w in caught:
                self.warn(str(w.message))
        stops = StopwordList.from_file(self.args.stopwords) if self.args.stopwords else None
        return MetricSuite(
            metrics,
            table=self.table,
            stops=stops,
            rule=self.args.rule,
            signed_cosine=self.args.signed_cosine,
        )

    def header(self, command: str, metrics: Sequence[str], **extra) -> List[str]:
        lines = [
            f"# wembsim {__version__} {command}",
            f"# metrics: {','.join(metrics)}",
            f"# seed: {self.args.seed}",
            f"# embeddings: {self.table.name if self.table is not None else NA}",
            f"# rule: {self.args.rule}",
        ]
        lines += [f"# {k.replace('_', '-')}: {v}" for k, v in extra.items()]
        return lines

    def read(self, path, parse, fatal=()):
        result = read_jsonl(path, parse, fatal)
        for lineno, msg in result.errors:
            self.warn(f"{path}:{lineno}: skipped row ({msg})")
        return result.records


# ---------------------------------------------------------------- commands


def cmd_score(run: Run) -> List[str]:
    instances = run.read(run.args.input, ScoringInstance.from_json)
    suite = run.suite()
    suite.prepare(_unique_reference_sets((i.image_id, i.references) for i in instances))
    lines = run.header("score", suite.metrics)
    lines.append("image_id\tmetric\tvalue\tdegenerate")
    for inst in instances:
        for metric, s in suite.score_all(inst.candidate, inst.references).items():
            lines.append(f"{inst.image_id}\t{metric}\t{_num(s.value)}\t{str(s.degenerate).lower()}")
    return lines


def _unique_reference_sets(pairs) -> List[List[str]]:
    seen: Dict[str, List[str]] = {}
    for image_id, refs in pairs:
        seen.setdefault(image_id, list(refs))
    return list(seen.values())


def system_scores(run: Run, suite: MetricSuite, systems: Sequence[SystemEntry]) -> Dict[str, List[float]]:
    """Per metric, the mean per-instance score of each system (input order)."""
    suite.prepare(_unique_reference_sets(
        (i.image_id, i.references) for s in systems for i in s.instances
    ))
    out: Dict[str, List[float]] = {m: [] for m in suite.metrics}
    for system in systems:
        sums = {m: 0.0 for m in suite.metrics}
        for inst in system.instances:
            for m, s in suite.score_all(inst.candidate, inst.references).items():
                sums[m] += s.value
        for m in suite.metrics:
            out[m].append(sums[m] / len(system.instances))
    return out


def _load_systems(run: Run, target: Optional[str]) -> List[SystemEntry]:
    systems = run.read(run.args.systems, SystemEntry.from_json)
    if target is not None:
        kept = []
        for s in systems:
            if target in s.human_scores:
                kept.append(s)
            else:
                run.warn(f"system {s.system_id!r} has no {target} score; excluded")
        systems = kept
    if len(systems) < 3:
        raise HarnessError(f"need at least 3 systems, found {len(systems)}")
    return systems


def _correlate(xs, ys):
    try:
        res = pearson(PairedSamples(xs, ys))
    except UndefinedCorrelationError:
        return None, None
    return res.coefficient, res.p_value


def cmd_eval_corr(run: Run) -> List[str]:
    target = run.args.target
    systems = _load_systems(run, target)
    suite = run.suite()
    scores = system_scores(run, suite, systems)
    human = [s.human_scores[target] for s in systems]
    lines = run.header("eval-corr", suite.metrics, target=target, p_values="two-tailed", systems=len(systems))
    lines.append("metric\tr\tp_value\tn")
    for m in suite.metrics:
        r, p = _correlate(scores[m], human)
        lines.append(f"{m}\t{_num(r)}\t{_pval(p)}\t{len(systems)}")
    lines.append("")
    lines.append("system_id\t" + "\t".join(suite.metrics) + f"\t{target}")
    for i, s in enumerate(systems):
        lines.append(s.system_id + "\t" + "\t".join(_num(scores[m][i]) for m in suite.metrics) + f"\t{_num(human[i])}")
    return lines


def cmd_corr_matrix(run: Run) -> List[str]:
    systems = _load_systems(run, None)
    suite = run.suite()
    scores = system_scores(run, suite, systems)
    mat = correlation_matrix(scores)
    lines = run.header("corr-matrix", suite.metrics, correlation="spearman", systems=len(systems))
    lines.append("metric\t" + "\t".join(mat.names))
    for i, name in enumerate(mat.names):
        lines.append(name + "\t" + "\t".join(_num(v) for v in mat.values[i]))
    return lines


def cmd_combine(run: Run) -> List[str]:
    target = run.args.target
    a, b = run.args.metric_a.strip(), run.args.metric_b.strip()
    systems = _load_systems(run, target)
    human = [s.human_scores[target] for s in systems]
    # M1/M2 may stand in for a metric to combine with the human target itself
    automatic = [m for m in (a, b) if m.upper() not in HUMAN_TARGETS]
    scores = {}
    if automatic:
        suite = run.suite(automatic)
        scores.update(system_scores(run, suite, systems))
    for m in (a, b):
        if m.upper() in HUMAN_TARGETS:
            hs = _load_target(run, systems, m.upper())
            scores[m] = hs
    a_key = a if a in scores else a.lower()
    b_key = b if b in scores else b.lower()
    try:
        combined = combine_scores(scores[a_key], scores[b_key], run.args.normalization)
    except ValueError as exc:
        raise HarnessError(f"cannot combine {a} and {b}: {exc}") from None
    label = f"{a}+{b}"
    lines = run.header("combine", [a, b], target=target, normalization=run.args.normalization,
                       p_values="two-tailed", systems=len(systems))
    lines.append("metric\tr\tp_value\tn")
    for name, vec in ((a, scores[a_key]), (b, scores[b_key]), (label, combined)):
        r, p = _correlate(vec, human)
        lines.append(f"{name}\t{_num(r)}\t{_pval(p)}\t{len(systems)}")
    return lines


def _load_target(run, systems, name):
    missing = [s.system_id for s in systems if name not in s.human_scores]
    if missing:
        raise HarnessError(f"systems {missing} lack a {name} score")
    return [s.human_scores[name] for s in systems]


def _category_table(command, run, suite, results, categories, **extra):
    lines = run.header(command, suite.metrics, ties="counted as incorrect", **extra)
    lines.append("metric\t" + "\t".join(categories) + "\tavg\t" + "\t".join(f"ties_{c}" for c in categories) + "\tn")
    for m in suite.metrics:
        per_cat = results[m]
        accs = [per_cat[c].accuracy for c in categories if c in per_cat]
        avg = sum(accs) / len(accs) if accs else None
        row = [m]
        row += [_num(per_cat[c].accuracy) if c in per_cat else NA for c in categories]
        row.append(_num(avg))
        row += [str(per_cat[c].ties) if c in per_cat else NA for c in categories]
        row.append(str(sum(r.n for r in per_cat.values())))
        lines.append("\t".join(row))
    return lines


def cmd_eval_pairwise(run: Run) -> List[str]:
    instances = run.read(run.args.pairs, PairwiseInstance.from_json)
    k = run.args.refs_per_pair
    if k < 1:
        raise HarnessError("--refs-per-pair must be at least 1")
    rng = XorShift64Star(run.args.seed)
    drawn = []
    for idx, inst in enumerate(instances):
        if len(inst.reference_pool) < k:
            raise HarnessError(
                f"pairwise instance #{idx + 1} ({inst.caption_a!r} vs {inst.caption_b!r}) has "
                f"{len(inst.reference_pool)} references, fewer than --refs-per-pair {k}"
            )
        drawn.append(rng.sample(inst.reference_pool, k))
    suite = run.suite()
    suite.prepare(drawn)
    pairs: Dict[str, Dict[str, List[PreferencePair]]] = {m: {} for m in suite.metrics}
    for inst, refs in zip(instances, drawn):
        sa = suite.score_all(inst.caption_a, refs)
        sb = suite.score_all(inst.caption_b, refs)
        for m in suite.metrics:
            pairs[m].setdefault(inst.category, []).append(
                PreferencePair(sa[m].value, sb[m].value, Preference(inst.human_prefers))
            )
    results = {m: {c: pairwise_accuracy(ps) for c, ps in pairs[m].items()} for m in suite.metrics}
    return _category_table("eval-pairwise", run, suite, results, PAIRWISE_CATEGORIES, refs_per_pair=k)


def cmd_eval_distraction(run: Run) -> List[str]:
    instances = run.read(run.args.instances, DistractionInstance.from_json, fatal=(UnknownCategoryError,))
    suite = run.suite()
    suite.prepare([inst.references for inst in instances])
    scored: Dict[str, Dict[str, list]] = {m: {} for m in suite.metrics}
    for inst in instances:
        good = suite.score_all(inst.correct, inst.references)
        bad = suite.score_all(inst.distractor, inst.references)
        for m in suite.metrics:
            scored[m].setdefault(inst.category, []).append((good[m].value, bad[m].value))
    results = {m: {c: forced_choice_accuracy(v) for c, v in scored[m].items()} for m in suite.metrics}
    return _category_table("eval-distraction", run, suite, results, DISTRACTION_CATEGORIES)


# ------------------------------------------------------------------ parser


def _common(p: argparse.ArgumentParser, metrics_default="wembsim") -> None:
    p.add_argument("--embeddings", metavar="PATH", help="pre-trained embedding file")
    p.add_argument("--format", choices=("text", "word2vec-bin"), default="text")
    p.add_argument("--metrics", default=metrics_default,
                   help="comma list of wembsim,bleu4,rouge_l,cider,wmd,wcd")
    p.add_argument("--rule", choices=("max", "mean", "min"), default="mean")
    p.add_argument("--stopwords", metavar="PATH", help="one stopword per line (replaces the built-in list)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--signed-cosine", action="store_true", help="drop the absolute value in the cosine")
    p.add_argument("--strict", action="store_true", help="exit 1 if any warning was raised")
    p.add_argument("--output", metavar="PATH", help="report path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wembsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wembsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score candidates against references")
    p.add_argument("input", help="JSON-lines scoring instances")
    _common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval-corr", help="system-level Pearson correlation with human scores")
    p.add_argument("systems", help="JSON-lines system entries")
    p.add_argument("--target", choices=HUMAN_TARGETS, default="M1")
    _common(p)
    p.set_defaults(func=cmd_eval_corr)

    p = sub.add_parser("eval-pairwise", help="pairwise preference accuracy (HHC/HHI)")
    p.add_argument("pairs", help="JSON-lines pairwise instances")
    p.add_argument("--refs-per-pair", type=int, default=5)
    _common(p)
    p.set_defaults(func=cmd_eval_pairwise)

    p = sub.add_parser("eval-distraction", help="forced-choice accuracy against distractors")
    p.add_argument("instances", help="JSON-lines distraction instances")
    _common(p)
    p.set_defaults(func=cmd_eval_distraction)

    p = sub.add_parser("corr-matrix", help="Spearman matrix of system-level metric scores")
    p.add_argument("systems", help="JSON-lines system entries")
    _common(p)
    p.set_defaults(func=cmd_corr_matrix)

    p = sub.add_parser("combine", help="correlation of two metrics and their normalized sum")
    p.add_argument("systems", help="JSON-lines system entries")
    p.add_argument("metric_a")
    p.add_argument("metric_b")
    p.add_argument("--target", choices=HUMAN_TARGETS, default="M1")
    p.add_argument("--normalization", choices=NORMALIZATIONS, default="minmax")
    _common(p)
    p.set_defaults(func=cmd_combine)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "combine":
        args.metrics = ",".join(m for m in (args.metric_a, args.metric_b) if m.upper() not in HUMAN_TARGETS) or "wembsim"
    try:
        run = Run(args)
        lines = args.func(run)
    except (OSError, UnicodeDecodeError, EmbeddingFormatError, MetricConfigError, HarnessError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = "\n".join(lines) + "\n"
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
    else:
        sys.stdout.write(text)
    if run.warnings and args.strict:
        return EXIT_WARN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
