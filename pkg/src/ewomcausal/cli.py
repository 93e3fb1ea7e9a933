"""Command-line orchestration of the full pipeline.

Subcommands: ``keywords`` (entropy keyword extraction), ``train`` (per-topic
classifiers with k-fold metrics), ``classify`` (hierarchical routing plus
per-establishment aggregation), ``causal`` (connection-strength report),
``simulate`` (synthetic corpora / structural datasets), ``report``
(human-readable rendering of earlier outputs).

Every file an invocation writes is a pure function of its inputs and
``--seed``, so reruns are byte-identical. Exit codes: 0 success, 2 usage or
contract error, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import causal_lingam, entropy_keywords, synthgen
from .corpus import (
    SegmenterSpec,
    attach_labels,
    load_documents,
    load_stop_words,
    save_documents,
    segment_all,
)
from .entropy_keywords import KeywordConfig, read_keyword_csv, write_keyword_csv
from .linear_classifier import (
    FeatureSpace,
    Hyper,
    featurize_all,
    kfold_evaluate,
    load_model,
    save_model,
    train,
)
from .topic_pipeline import (
    ObservationMatrix,
    PipelineConfig,
    aggregate,
    classify_corpus,
    load_official_accounts,
    load_sales_csv,
)

USAGE_ERROR = 2
NUMERICAL_ERROR = 1

_NUMERICAL_FAILURES = (
    causal_lingam.ConvergenceError,
    causal_lingam.RankError,
    causal_lingam.IdentifiabilityError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file supplying defaults for any flag")
    p.add_argument(
        "--seed", type=int, default=None,
        help="master seed for all randomness (default 0; for simulate, the spec's own seed)",
    )
    p.add_argument("--out-dir", default=".", help="directory for output files")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewomcausal",
        description="entropy-keyword topic classification and causal sales analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keywords", help="extract per-topic keywords")
    _add_common(p)
    p.add_argument("--docs", required=True, help="documents file (JSONL or CSV)")
    p.add_argument("--labels", required=True, help="doc_id,topic_id label CSV")
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument(
        "--mode",
        choices=[entropy_keywords.CROSS_CATEGORY, entropy_keywords.BINARY],
        default=entropy_keywords.CROSS_CATEGORY,
    )
    p.add_argument("--stoplist", help="file of words to drop, one per line")
    p.set_defaults(func=cmd_keywords)

    p = sub.add_parser("train", help="train per-topic classifiers and evaluate")
    _add_common(p)
    p.add_argument("--docs", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--keywords-dir", required=True, help="directory with keywords_<topic>.csv")
    p.add_argument("--hyper", default="", help="comma list, e.g. C=1.0,tol=1e-4,k=5")
    p.add_argument("--stoplist")
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("classify", help="route documents and aggregate per station")
    _add_common(p)
    p.add_argument("--docs", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--keywords-dir", required=True)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--metrics", required=True, help="metrics.csv from the train step")
    p.add_argument("--sales", required=True, help="station_id,sales CSV")
    p.add_argument("--official-accounts", help="file of account names, one per line")
    p.add_argument("--checkin-patterns", default="", help="comma-separated literal phrases")
    p.add_argument("--official-topic", default="T3")
    p.add_argument("--checkin-topic", default="T5")
    p.add_argument("--fallback-topic", default="T8")
    p.add_argument("--stage2", default="T4,T7,T8", help="context topics, evaluation order")
    p.add_argument("--stoplist")
    p.set_defaults(func=cmd_classify_aggregate)

    p = sub.add_parser("causal", help="LiNGAM connection strengths from an observation CSV")
    _add_common(p)
    p.add_argument("--matrix", required=True, help="observations CSV (station_id,x1,...,y)")
    p.add_argument("--target", default="y")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--nonlinearity", choices=["tanh", "cube"], default="tanh")
    p.add_argument(
        "--on-nonconvergence",
        choices=[causal_lingam.RAISE, causal_lingam.WARN],
        default=causal_lingam.RAISE,
    )
    p.add_argument(
        "--prune-below", type=float, default=0.0,
        help="zero out strengths with magnitude below this (default: no pruning)",
    )
    p.set_defaults(func=cmd_causal)

    p = sub.add_parser("simulate", help="generate synthetic data with ground truth")
    _add_common(p)
    p.add_argument("--spec", required=True, help="JSON spec (kind: sem or corpus)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render causal/metrics CSVs as text")
    _add_common(p)
    p.add_argument("--causal-report", help="causal_report.csv from the causal step")
    p.add_argument("--metrics", help="metrics.csv from the train step")
    p.set_defaults(func=cmd_report)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    with open(path, encoding="utf-8") as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in values.items()}
    # argparse keeps subparsers private; reaching in is the only way to
    # seed per-subcommand defaults before the real parse
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            known = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in known})


def _doc_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "csv" if path.endswith(".csv") else "jsonl"


def _segmenter(args) -> SegmenterSpec:
    if getattr(args, "stoplist", None):
        return SegmenterSpec(
            stop_words=load_stop_words(args.stoplist), self_sufficient_only=True
        )
    return SegmenterSpec()


def _load_corpus(args):
    docs = load_documents(args.docs, _doc_format(args.docs, args.format))
    docs = segment_all(docs, _segmenter(args))
    return attach_labels(docs, args.labels)


def _outdir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_keywords(args) -> int:
    corpus = _load_corpus(args)
    config = KeywordConfig(alpha=args.alpha, alpha_neg=args.alpha, mode=args.mode)
    tables = entropy_keywords.topic_entropies(corpus)
    selected = entropy_keywords.select_keywords(tables, config)
    out = _outdir(args)
    for topic in sorted(selected):
        write_keyword_csv(selected[topic], out / f"keywords_{topic}.csv")
    counts = " ".join(f"{t}={len(selected[t].keywords)}" for t in sorted(selected))
    print(f"keyword counts: {counts}")
    return 0


def _parse_hyper(text: str) -> tuple[Hyper, int]:
    fields = {"C": 1.0, "tol": 1e-4, "max_iter": 1000.0, "k": 5.0}
    if text:
        for part in text.split(","):
            key, _, value = part.partition("=")
            key = key.strip()
            if key not in fields:
                raise ValueError(f"unknown hyperparameter {key!r} (expected C, tol, max_iter, k)")
            fields[key] = float(value)
    hyper = Hyper(C=fields["C"], tol=fields["tol"], max_iter=int(fields["max_iter"]))
    return hyper, int(fields["k"])


def _read_keyword_dir(path: str) -> dict[str, entropy_keywords.KeywordSet]:
    files = sorted(Path(path).glob("keywords_*.csv"))
    if not files:
        raise ValueError(f"no keywords_<topic>.csv files in {path}")
    sets = {}
    for f in files:
        ks = read_keyword_csv(f)
        sets[ks.topic] = ks
    return sets


def cmd_train_eval(args) -> int:
    corpus = _load_corpus(args)
    keyword_sets = _read_keyword_dir(args.keywords_dir)
    hyper, k = _parse_hyper(args.hyper)
    space = FeatureSpace.from_keyword_sets(keyword_sets)
    features = featurize_all(corpus.documents, space)
    out = _outdir(args)
    rows = []
    for topic in sorted(keyword_sets):
        labels = [1 if topic in corpus.labels_for(d.id) else -1 for d in corpus.documents]
        try:
            seed = args.seed if args.seed is not None else 0
            metrics = kfold_evaluate(features, labels, k=k, hyper=hyper, seed=seed)
            model = train(features, labels, hyper, seed=seed)
        except ValueError as exc:
            print(f"{topic}: {exc}", file=sys.stderr)
            rows.append(f"{topic},,,")
            continue
        save_model(model, out / f"model_{topic}.txt")
        rows.append(f"{topic},{metrics.precision!r},{metrics.recall!r},{metrics.f1!r}")
        print(f"{topic}: precision={metrics.precision:.3f} recall={metrics.recall:.3f} f1={metrics.f1:.3f}")
    (out / "metrics.csv").write_text(
        "topic_id,precision,recall,f1\n" + "".join(r + "\n" for r in rows), encoding="utf-8"
    )
    return 0


def _read_metrics_f1(path: str) -> dict[str, float]:
    scores = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("topic_id,precision,recall,f1"):
            raise ValueError(f"{path}: expected header 'topic_id,precision,recall,f1'")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) >= 4 and parts[3]:
                scores[parts[0]] = float(parts[3])
    return scores


def cmd_classify_aggregate(args) -> int:
    docs = load_documents(args.docs, _doc_format(args.docs, args.format))
    docs = segment_all(docs, _segmenter(args))
    keyword_sets = _read_keyword_dir(args.keywords_dir)
    space = FeatureSpace.from_keyword_sets(keyword_sets)
    f1_scores = _read_metrics_f1(args.metrics)

    stage2 = tuple(t for t in args.stage2.split(",") if t)
    rule_topics = {args.official_topic, args.checkin_topic}
    stage3_pool = [t for t in keyword_sets if t not in stage2 and t not in rule_topics]
    missing = [t for t in stage3_pool if t not in f1_scores]
    if missing:
        raise ValueError(f"metrics file has no F1 for topics: {sorted(missing)}")
    # descending F1; topic id breaks ties for a stable order
    stage3 = tuple(sorted(stage3_pool, key=lambda t: (-f1_scores[t], t)))

    models = {}
    for topic in (*stage2, *stage3):
        path = Path(args.models_dir) / f"model_{topic}.txt"
        if not path.exists():
            raise ValueError(f"missing model for configured topic {topic!r}: {path}")
        models[topic] = load_model(path)

    officials = (
        load_official_accounts(args.official_accounts) if args.official_accounts else frozenset()
    )
    patterns = tuple(p for p in args.checkin_patterns.split(",") if p)
    config = PipelineConfig(
        official_accounts=officials,
        checkin_patterns=patterns,
        stage2_topics=stage2,
        stage3_topics=stage3,
        models=models,
        spaces={t: space for t in models},
        official_topic=args.official_topic,
        checkin_topic=args.checkin_topic,
        fallback_topic=args.fallback_topic,
    )
    assignments = classify_corpus(docs, config)

    all_topics = set(models) | rule_topics | {args.fallback_topic}
    count_topics = sorted(all_topics - {args.fallback_topic})
    sales = load_sales_csv(args.sales)
    matrix, drops = aggregate(assignments, docs, sales, count_topics)

    out = _outdir(args)
    matrix.to_csv(out / "observations.csv")
    (out / "drops.csv").write_text(
        "doc_id\n" + "".join(i + "\n" for i in drops.dropped_doc_ids), encoding="utf-8"
    )
    print(f"aggregated {matrix.n_observations} stations x {len(count_topics)} topics")
    print(f"dropped {drops.count} document(s) without station_id")
    return 0


def cmd_causal(args) -> int:
    obs = ObservationMatrix.from_csv(args.matrix)
    report = causal_lingam.check_assumptions(obs)
    cfg = causal_lingam.LingamConfig(
        tol=args.tol,
        max_iter=args.max_iter,
        nonlinearity=args.nonlinearity,
        seed=args.seed if args.seed is not None else 0,
        on_nonconvergence=args.on_nonconvergence,
    )
    try:
        model = causal_lingam.fit(obs, cfg)
    except _NUMERICAL_FAILURES:
        for note in report.notes:
            print(f"note: {note}", file=sys.stderr)
        raise
    effects = causal_lingam.target_effects(model, args.target)
    b = model.b.copy()
    if args.prune_below > 0.0:
        b[np.abs(b) < args.prune_below] = 0.0

    out = _outdir(args)
    lines = ["variable,connection_strength,direction"]
    for e in effects.entries:
        strength = 0.0 if abs(e.strength) < args.prune_below else e.strength
        lines.append(f"{e.variable},{strength!r},{e.direction}")
    lines.append("# diagnostics")
    for name in model.names:
        lines.append(f"# excess_kurtosis {name}={report.excess_kurtosis[name]!r}")
    lines.append(f"# kurtosis_threshold {report.threshold!r}")
    lines.append(f"# gaussian_warning {str(report.gaussian_warning).lower()}")
    lines.append(f"# ica_converged {str(model.ica_converged).lower()}")
    lines.append(f"# ica_iterations {model.ica_iterations}")
    lines.append(f"# order_residual {model.order_residual!r}")
    for note in report.notes:
        lines.append(f"# note {note}")
    (out / "causal_report.csv").write_text("".join(l + "\n" for l in lines), encoding="utf-8")

    b_lines = ["variable," + ",".join(model.names)]
    for i, name in enumerate(model.names):
        b_lines.append(name + "," + ",".join(repr(float(v)) for v in b[i]))
    (out / "b_matrix.csv").write_text("".join(l + "\n" for l in b_lines), encoding="utf-8")

    for e in effects.entries:
        print(f"{e.variable}: strength={e.strength:.6g} ({e.direction})")
    if report.gaussian_warning:
        print("warning: data looks Gaussian; causal directions may be unreliable")
    return 0


def _spec_from_json(raw: dict, seed_override: int | None) -> synthgen.StructuralSpec | synthgen.CorpusSpec:
    kind = raw.get("kind")
    seed = seed_override if seed_override is not None else int(raw.get("seed", 0))
    if kind == "sem":
        b0 = np.asarray(raw["b0"], dtype=np.float64)
        d = b0.shape[0]
        noise = raw.get("noise", "uniform")
        scale = raw.get("scale", 1.0)
        tags = [noise] * d if isinstance(noise, str) else list(noise)
        scales = [scale] * d if isinstance(scale, (int, float)) else list(scale)
        if len(tags) != d or len(scales) != d:
            raise ValueError("noise/scale lists must match the B0 dimension")
        return synthgen.StructuralSpec(
            b0=b0,
            noise=tuple((t, float(s)) for t, s in zip(tags, scales)),
            n=int(raw["n"]),
            seed=seed,
            names=tuple(raw["names"]) if "names" in raw else None,
        )
    if kind == "corpus":
        if "topics" in raw:
            topics = tuple(
                synthgen.TopicVocab(topic_id=t["id"], words=tuple(t["words"]))
                for t in raw["topics"]
            )
            return synthgen.CorpusSpec(
                topics=topics,
                noise_words=tuple(raw.get("noise_words", ())),
                docs_per_topic=int(raw["docs_per_topic"]),
                noise_rate=float(raw.get("noise_rate", 0.0)),
                multi_label_rate=float(raw.get("multi_label_rate", 0.0)),
                tokens_per_doc=int(raw.get("tokens_per_doc", 12)),
                seed=seed,
            )
        return synthgen.default_corpus_spec(
            n_topics=int(raw.get("n_topics", 8)),
            docs_per_topic=int(raw.get("docs_per_topic", 125)),
            words_per_topic=int(raw.get("words_per_topic", 6)),
            noise_vocab=int(raw.get("noise_vocab", 40)),
            noise_rate=float(raw.get("noise_rate", 0.5)),
            multi_label_rate=float(raw.get("multi_label_rate", 0.1)),
            tokens_per_doc=int(raw.get("tokens_per_doc", 12)),
            seed=seed,
        )
    raise ValueError(f"spec kind must be 'sem' or 'corpus', got {kind!r}")


def cmd_simulate(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{args.spec}: spec must be a JSON object")
    spec = _spec_from_json(raw, args.seed)
    out = _outdir(args)
    if isinstance(spec, synthgen.StructuralSpec):
        obs, b0 = synthgen.generate_sem(spec)
        obs.to_csv(out / "observations.csv")
        names = obs.variable_names
        b_lines = ["variable," + ",".join(names)]
        for i, name in enumerate(names):
            b_lines.append(name + "," + ",".join(repr(float(v)) for v in b0[i]))
        (out / "b_true.csv").write_text("".join(l + "\n" for l in b_lines), encoding="utf-8")
        print(f"wrote observations.csv ({spec.n} rows) and b_true.csv")
    else:
        corpus = synthgen.generate_corpus(spec)
        save_documents(corpus.documents, out / "docs.jsonl")
        label_lines = ["doc_id,topic_id"]
        for d in corpus.documents:
            for t in sorted(corpus.labels_for(d.id)):
                label_lines.append(f"{d.id},{t}")
        (out / "labels.csv").write_text(
            "".join(l + "\n" for l in label_lines), encoding="utf-8"
        )
        kw_lines = ["topic_id,word"]
        for tv in spec.topics:
            for w in sorted(tv.words):
                kw_lines.append(f"{tv.topic_id},{w}")
        (out / "true_keywords.csv").write_text(
            "".join(l + "\n" for l in kw_lines), encoding="utf-8"
        )
        print(f"wrote docs.jsonl ({len(corpus.documents)} documents), labels.csv, true_keywords.csv")
    return 0


def cmd_report(args) -> int:
    if not args.causal_report and not args.metrics:
        raise ValueError("nothing to report: pass --causal-report and/or --metrics")
    if args.metrics:
        print("classifier metrics")
        print(f"{'topic':<10}{'precision':>12}{'recall':>12}{'f1':>12}")
        with open(args.metrics, encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) >= 4 and parts[1]:
                    print(
                        f"{parts[0]:<10}{float(parts[1]):>12.4f}"
                        f"{float(parts[2]):>12.4f}{float(parts[3]):>12.4f}"
                    )
                elif parts[0]:
                    print(f"{parts[0]:<10}{'(failed)':>12}")
        print()
    if args.causal_report:
        print("causal effects")
        print(f"{'variable':<10}{'strength':>16}  direction")
        notes = []
        with open(args.causal_report, encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                if line.startswith("#"):
                    notes.append(line[1:].strip())
                    continue
                parts = line.strip().split(",")
                if len(parts) >= 3:
                    print(f"{parts[0]:<10}{float(parts[1]):>16.4f}  {parts[2]}")
        for note in notes:
            print(f"  {note}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        _apply_config_file(parser, argv)
    except (OSError, ValueError, json.JSONDecodeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL_FAILURES as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
