"""Command-line entry point.

Every stage reads and writes files (line-delimited JSON except single-document
reports), takes its randomness from an explicit --seed, and records that seed
in the output header, so re-running any stage reproduces its output
byte-for-byte (pass --no-timestamp to drop the header timestamp).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import genpipe, metrics, ranker, textindex
from .corpus import QuestionKind, load_corpus, mask_org_names, save_corpus, tokenize
from .jsonl import dump_document, read_records, write_records
from .modelservice import ModelServiceClient

_KINDS = {
    "user": QuestionKind.USER_QUESTION,
    "user_question": QuestionKind.USER_QUESTION,
    "faq": QuestionKind.ORG_FAQ,
    "org_faq": QuestionKind.ORG_FAQ,
}


def _meta(args: argparse.Namespace, stage: str, seed: int | None = None) -> dict:
    meta: dict = {"stage": stage, "seed": args.seed if seed is None else seed}
    if not args.no_timestamp:
        meta["created"] = datetime.now(timezone.utc).isoformat()
    return meta


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    config = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object")
    return config


def _resolve(args: argparse.Namespace, name: str, fallback):
    """Flag value if given, else config file value, else built-in default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return args.config_values.get(name, fallback)


def _bm25_params(args: argparse.Namespace) -> textindex.Bm25Params:
    return textindex.Bm25Params(
        k1=float(_resolve(args, "k1", 1.2)), b=float(_resolve(args, "b", 0.75))
    )


def _fractions(raw: str) -> tuple[float, float, float]:
    parts = [float(p) for p in raw.split(",")]
    if len(parts) != 3:
        raise ValueError("fractions must be three comma-separated numbers")
    return (parts[0], parts[1], parts[2])


def _split_spec(args: argparse.Namespace, level: genpipe.SplitLevel, seed: int) -> genpipe.SplitSpec:
    fractions = _fractions(_resolve(args, "fractions", "0.85,0.05,0.10"))
    return genpipe.SplitSpec(fractions=fractions, level=level, seed=seed)


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.infile, _KINDS[args.kind])
    count = save_corpus(corpus, args.out, meta=_meta(args, "ingest"))
    print(json.dumps({"questions": count, "out": str(args.out)}))
    return 0


def cmd_mask(args: argparse.Namespace) -> int:
    if args.aliases_file:
        aliases = [
            line.strip()
            for line in Path(args.aliases_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        aliases = [a.strip() for a in (args.aliases or "").split(",") if a.strip()]
    corpus = load_corpus(args.infile, _KINDS[args.kind])
    masked = mask_org_names(corpus, aliases)
    count = save_corpus(masked, args.out, meta=_meta(args, "mask"))
    print(json.dumps({"questions": count, "aliases": masked.masks_applied}))
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.questions, _KINDS[args.kind])
    index = textindex.build_index(corpus)
    textindex.save_index(index, args.out)
    print(json.dumps({"documents": index.doc_count, "terms": len(index.postings)}))
    return 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    faqs = load_corpus(args.faqs, QuestionKind.ORG_FAQ)
    questions = load_corpus(args.questions, QuestionKind.USER_QUESTION)
    index = textindex.build_index(questions)
    params = _bm25_params(args)
    k = int(_resolve(args, "k", 10))
    records = []
    for faq in faqs.questions:
        ranked = textindex.retrieve_top_k(index, params, list(faq.tokens), k)
        records.append(
            {
                "faq_id": faq.id,
                "candidates": [
                    {"user_q_id": doc_id, "score": score} for doc_id, score in ranked
                ],
            }
        )
    write_records(args.out, records, meta=_meta(args, "retrieve"))
    print(json.dumps({"faqs": len(records), "k": k}))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .annotate import AnnotationStore
    from .annotate.service import create_app

    store = AnnotationStore(args.log)
    app = create_app(store, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_export_labels(args: argparse.Namespace) -> int:
    from .annotate import AnnotationStore

    store = AnnotationStore(args.log)
    result = store.export_labels(args.batch, policy=args.policy)
    ranker.save_labels(result.labels, args.out, meta=_meta(args, "export-labels"))
    if args.rewrites_out:
        write_records(
            args.rewrites_out,
            (
                {
                    "faq_id": r.faq_id,
                    "source_user_q_id": r.source_user_q_id,
                    "annotator_id": r.annotator_id,
                    "text": r.text,
                }
                for r in result.rewrites
            ),
            meta=_meta(args, "export-labels"),
        )
    print(
        json.dumps(
            {
                "labels": len(result.labels),
                "rewrites": len(result.rewrites),
                "skipped_incomplete": result.skipped_incomplete,
            }
        )
    )
    return 0


def cmd_train_ranker(args: argparse.Namespace) -> int:
    labels = ranker.load_labels(args.labels)
    faqs = load_corpus(args.faqs, QuestionKind.ORG_FAQ).by_id()
    questions = load_corpus(args.questions, QuestionKind.USER_QUESTION)
    questions_by_id = questions.by_id()
    index = textindex.build_index(questions)
    params = _bm25_params(args)

    def lookup(faq_id: str, user_q_id: str) -> ranker.PairFeatures:
        if faq_id not in faqs:
            raise ValueError(f"label references unknown FAQ {faq_id!r}")
        if user_q_id not in questions_by_id:
            raise ValueError(f"label references unknown question {user_q_id!r}")
        return ranker.extract_features(faqs[faq_id], questions_by_id[user_q_id], index, params)

    config = ranker.TrainConfig(
        learning_rate=float(_resolve(args, "learning_rate", 0.5)),
        iterations=int(_resolve(args, "iterations", 1000)),
        seed=args.seed,
    )
    classifier = ranker.train_classifier(labels, lookup, config)
    ranker.save_classifier(classifier, args.out)
    print(
        json.dumps(
            {
                "labels": len(labels),
                "training_accuracy": classifier.training_meta.training_accuracy,
                "final_loss": classifier.training_meta.final_loss,
            }
        )
    )
    return 0


def cmd_rerank(args: argparse.Namespace) -> int:
    faqs = load_corpus(args.faqs, QuestionKind.ORG_FAQ)
    questions = load_corpus(args.questions, QuestionKind.USER_QUESTION)
    questions_by_id = questions.by_id()
    index = textindex.build_index(questions)
    params = _bm25_params(args)
    model_url = _resolve(args, "model_url", None)
    if model_url:
        model: ranker.PairClassifier | ModelServiceClient = ModelServiceClient(
            model_url, timeout=float(_resolve(args, "timeout", 30.0))
        )
    elif args.model:
        model = ranker.load_classifier(args.model)
    else:
        raise ValueError("rerank needs --model or --model-url")
    pool_size = int(_resolve(args, "pool_size", 1000))
    top = int(_resolve(args, "top", 3))
    records = []
    for faq in faqs.questions:
        ranked = ranker.rerank_scored(
            faq, questions_by_id, index, params, model, pool_size=pool_size, top=top
        )
        records.append(
            {
                "faq_id": faq.id,
                "top": [{"user_q_id": doc_id, "score": score} for doc_id, score in ranked],
            }
        )
    write_records(args.out, records, meta=_meta(args, "rerank"))
    print(json.dumps({"faqs": len(records), "pool_size": pool_size, "top": top}))
    return 0


def cmd_build_dataset(args: argparse.Namespace) -> int:
    faqs = load_corpus(args.faqs, QuestionKind.ORG_FAQ).by_id()
    questions = load_corpus(args.questions, QuestionKind.USER_QUESTION).by_id()
    matched: dict[str, list[str]] = {}
    for lineno, record in read_records(args.rerank):
        faq_id = record.get("faq_id")
        if faq_id not in faqs:
            raise ValueError(f"line {lineno}: unknown FAQ {faq_id!r}")
        texts = matched.setdefault(faq_id, [])
        for entry in record.get("top", record.get("candidates", [])):
            user_q_id = entry["user_q_id"]
            if user_q_id not in questions:
                raise ValueError(f"line {lineno}: unknown question {user_q_id!r}")
            texts.append(questions[user_q_id].text)
    if args.rewrites:
        for lineno, record in read_records(args.rewrites):
            faq_id = record.get("faq_id")
            if faq_id in faqs and record.get("text"):
                matched.setdefault(faq_id, []).append(record["text"])
    records = [
        {
            "name": faq_id,
            "user_questions": texts,
            "faqs": [faqs[faq_id].text],
        }
        for faq_id, texts in matched.items()
        if texts
    ]
    write_records(args.out, records, meta=_meta(args, "build-dataset"))
    print(json.dumps({"topics": len(records)}))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.infile, _KINDS[args.kind])
    stats = metrics.corpus_stats(corpus, threshold=float(_resolve(args, "threshold", 0.02)))
    document = {"_meta": _meta(args, "stats"), **stats.as_dict()}
    text = dump_document(args.out, document)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_readability(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.infile, _KINDS[args.kind])
    grades: dict[str, float] = {}
    for q in corpus.questions:
        try:
            grades[q.id] = metrics.flesch_kincaid_grade(q.text)
        except ValueError as exc:
            raise ValueError(f"question {q.id!r}: {exc}") from exc
    mean = sum(grades.values()) / len(grades)
    document = {"_meta": _meta(args, "readability"), "mean": mean, "per_question": grades}
    text = dump_document(args.out, document)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_rouge(args: argparse.Namespace) -> int:
    candidates = [(n, r) for n, r in read_records(args.candidates)]
    references = [(n, r) for n, r in read_records(args.references)]
    if len(candidates) != len(references):
        raise ValueError(
            f"candidate count {len(candidates)} != reference count {len(references)}"
        )
    per_pair = []
    for (lineno, cand), (_, ref) in zip(candidates, references):
        if "text" not in cand:
            raise ValueError(f"candidates line {lineno}: missing 'text'")
        ref_texts = ref.get("references") or ([ref["text"]] if "text" in ref else None)
        if not ref_texts:
            raise ValueError(f"references for candidates line {lineno}: missing texts")
        score = metrics.rouge_all(tokenize(cand["text"]), [tokenize(t) for t in ref_texts])
        per_pair.append(score.as_dict())
    n = len(per_pair)
    mean = {
        key: sum(p[key] for p in per_pair) / n
        for key in ("rouge1_f", "rouge2_f", "rougeL_f")
    }
    document = {"_meta": _meta(args, "rouge"), "mean": mean, "per_pair": per_pair}
    text = dump_document(args.out, document)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_prep_gen(args: argparse.Namespace) -> int:
    topics = genpipe.load_topics(args.topics)
    samples = genpipe.build_samples(topics, seed=args.seed)
    genpipe.save_samples(samples, args.out, meta=_meta(args, "prep-gen"))
    print(json.dumps({"topics": len(topics), "samples": len(samples)}))
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    level = genpipe.SplitLevel(args.level)
    spec = _split_spec(args, level, args.seed)
    if level is genpipe.SplitLevel.TOPIC:
        units: list = genpipe.load_topics(args.infile)
        save = genpipe.save_topics
    else:
        units = genpipe.load_samples(args.infile)
        save = genpipe.save_samples
    train, validation, test = genpipe.split(units, spec)
    counts = {}
    for part_name, part in (("train", train), ("validation", validation), ("test", test)):
        path = f"{args.out_prefix}.{part_name}.jsonl"
        save(part, path, meta=_meta(args, f"split-{part_name}"))
        counts[part_name] = len(part)
    print(json.dumps(counts))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if args.topics:
        units: list = genpipe.load_topics(args.topics)
        level = genpipe.SplitLevel.TOPIC
    else:
        units = genpipe.load_samples(args.samples)
        level = genpipe.SplitLevel.SAMPLE
    rounds = int(_resolve(args, "rounds", 10))
    config = genpipe.RoundsConfig(
        split_spec=_split_spec(args, level, args.seed),
        rounds=rounds,
        seed_base=args.seed,
        jobs=args.jobs,
    )
    if args.generator == "baseline":
        generator: genpipe.BaselineGenerator | genpipe.ServiceGenerator = (
            genpipe.BaselineGenerator()
        )
    else:
        model_url = _resolve(args, "model_url", None)
        if not model_url:
            raise ValueError("--model-url is required with --generator external")
        client = ModelServiceClient(model_url, timeout=float(_resolve(args, "timeout", 30.0)))
        generator = genpipe.ServiceGenerator(client, emit_dir=args.emit_dir)
    result = genpipe.run_rounds(units, config, generator)
    document = {"_meta": _meta(args, "eval"), **result.as_dict()}
    text = dump_document(args.out, document)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_transfer(args: argparse.Namespace) -> int:
    def load_units(path: str, level: genpipe.SplitLevel) -> list:
        if level is genpipe.SplitLevel.TOPIC:
            return genpipe.load_topics(path)
        return genpipe.load_samples(path)

    source_level = genpipe.SplitLevel(args.source_level)
    target_level = genpipe.SplitLevel(args.target_level)
    model_url = _resolve(args, "model_url", None)
    client = (
        ModelServiceClient(model_url, timeout=float(_resolve(args, "timeout", 30.0)))
        if model_url
        else None
    )
    config = genpipe.TransferConfig(
        source_units=load_units(args.source, source_level),
        source_split=genpipe.SplitSpec(
            fractions=_fractions(args.source_fractions), level=source_level, seed=args.seed
        ),
        target_units=load_units(args.target, target_level),
        target_split=genpipe.SplitSpec(
            fractions=_fractions(args.target_fractions), level=target_level, seed=args.seed
        ),
        client=client,
        rounds=int(_resolve(args, "rounds", 10)),
        seed_base=args.seed,
        emit_dir=args.emit_dir,
    )
    results = genpipe.transfer_matrix(config)
    document = {
        "_meta": _meta(args, "transfer"),
        "conditions": [r.as_dict() for r in results],
    }
    text = dump_document(args.out, document)
    if not args.out:
        sys.stdout.write(text)
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int, default=0, help="seed recorded in outputs")
    common.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit timestamps so outputs are byte-reproducible",
    )
    common.add_argument("--jobs", type=int, default=1, help="worker cap for parallel stages")

    bm25 = argparse.ArgumentParser(add_help=False)
    bm25.add_argument("--k1", type=float, default=None)
    bm25.add_argument("--b", type=float, default=None)

    parser = argparse.ArgumentParser(prog="faqpipe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate and normalize a corpus file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("mask", parents=[common], help="replace org-name aliases with ORG_NAME")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--aliases", help="comma-separated aliases")
    p.add_argument("--aliases-file", help="one alias per line")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("index", parents=[common], help="build and save an inverted index")
    p.add_argument("--questions", required=True)
    p.add_argument("--kind", choices=sorted(_KINDS), default="user")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser(
        "retrieve", parents=[common, bm25], help="BM25 top-k user questions per FAQ"
    )
    p.add_argument("--faqs", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--k", type=int, default=None, help="candidates per FAQ (default 10)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("serve", parents=[common], help="run the annotation service")
    p.add_argument("--log", required=True, help="append-only event log path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", default=None, help="static UI bundle directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser(
        "export-labels", parents=[common], help="consolidate judgments into a labels file"
    )
    p.add_argument("--log", required=True)
    p.add_argument("--batch", required=True)
    p.add_argument("--policy", choices=["majority", "unanimous"], default="majority")
    p.add_argument("--out", required=True)
    p.add_argument("--rewrites-out", default=None)
    p.set_defaults(func=cmd_export_labels)

    p = sub.add_parser(
        "train-ranker", parents=[common, bm25], help="train the pair classifier"
    )
    p.add_argument("--labels", required=True)
    p.add_argument("--faqs", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_ranker)

    p = sub.add_parser(
        "rerank", parents=[common, bm25], help="re-rank BM25 pools with the classifier"
    )
    p.add_argument("--faqs", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--model", help="classifier file from train-ranker")
    p.add_argument("--model-url", dest="model_url", default=None, help="external scorer")
    p.add_argument("--pool", dest="pool_size", type=int, default=None)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser(
        "build-dataset", parents=[common], help="assemble topics from matched pairs"
    )
    p.add_argument("--rerank", required=True, help="rerank (or retrieve) output file")
    p.add_argument("--faqs", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--rewrites", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("readability", parents=[common], help="Flesch-Kincaid grades")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_readability)

    p = sub.add_parser("rouge", parents=[common], help="ROUGE F1 for candidate/reference files")
    p.add_argument("--candidates", required=True, help="JSONL with 'text' per line")
    p.add_argument("--references", required=True, help="JSONL with 'references' list per line")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rouge)

    p = sub.add_parser("prep-gen", parents=[common], help="build generation samples from topics")
    p.add_argument("--topics", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prep_gen)

    p = sub.add_parser("split", parents=[common], help="train/validation/test partition")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--level", choices=["sample", "topic"], required=True)
    p.add_argument("--fractions", default=None, help="e.g. 0.85,0.05,0.10")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", parents=[common], help="multi-round generation evaluation")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--samples")
    group.add_argument("--topics")
    p.add_argument("--generator", choices=["baseline", "external"], default="baseline")
    p.add_argument("--model-url", dest="model_url", default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--fractions", default=None)
    p.add_argument("--emit-dir", default=None, help="write per-round train/validation files here")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("transfer", parents=[common], help="pretrain/fine-tune condition matrix")
    p.add_argument("--source", required=True)
    p.add_argument("--source-level", choices=["sample", "topic"], default="sample")
    p.add_argument("--source-fractions", default="0.85,0.05,0.10")
    p.add_argument("--target", required=True)
    p.add_argument("--target-level", choices=["sample", "topic"], default="topic")
    p.add_argument("--target-fractions", default="0.80,0.10,0.10")
    p.add_argument("--model-url", dest="model_url", default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--emit-dir", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_transfer)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config_values = _load_config(args.config)
        return args.func(args)
    except Exception as exc:
        sys.stderr.write(json.dumps({"error": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
