"""Command-line entry point for the retrieval, sentiment, co-training, NER and quantization pipelines.

Every subcommand computes all results before touching the output paths,
then writes its artifacts and a JSON run manifest holding the config, the
SHA-256 of every input and output, and library versions.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import pickle
import platform
import sys
from pathlib import Path
from typing import Callable

import numba
import numpy as np
import scipy
import sklearn
from threadpoolctl import threadpool_limits

import faqkit
from faqkit import bm25, datasets, ner, quant, rank_eval, tokenizer
from faqkit.cotrain import UNLABELED, CoTrainingClassifier, write_round_log
from faqkit.corpus import (
    build_ranking_dataset,
    imbalance_stats,
    preprocess,
    read_faq_jsonl,
    split,
    write_faq_jsonl,
)
from faqkit.exceptions import ConfigurationError, DataError
from faqkit.features.lsa import LatentSemanticAnalysis, save_lsa
from faqkit.features.pairs import PairFeaturizer, faq_fit_texts
from faqkit.learn.forest import ForestClassifier
from faqkit.learn.models import MODEL_MAGIC, RankModel, load_model, save_model
from faqkit.learn.rankers import TrainConfig, faq_features, fit_pairwise_head, fit_softmax_head, write_loss_trace
from faqkit.sentiment import SentimentClassifier

Writer = Callable[[Path], None]


class Run:
    """Collects inputs, pending artifacts and a summary for one subcommand."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.inputs: list[Path] = []
        self.artifacts: list[tuple[Path, Writer]] = []
        self.summary: dict = {}

    def input(self, path) -> Path:
        path = Path(path)
        if not path.exists():
            raise DataError(f"input not found: {path}")
        self.inputs.append(path)
        return path

    def output(self, path, writer: Writer) -> None:
        self.artifacts.append((Path(path), writer))

    def text(self, path, content: str) -> None:
        self.output(path, lambda p: p.write_text(content, encoding="utf-8"))

    def json(self, path, obj) -> None:
        self.text(path, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for child in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(str(child.relative_to(path)).encode("utf-8"))
            h.update(bytes.fromhex(_sha256(child)))
        return h.hexdigest()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _versions() -> dict:
    return {"faqkit": faqkit.__version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__, "numba": numba.__version__,
            "python": platform.python_version()}


def _manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


def _finish(run: Run) -> None:
    for path, writer in run.artifacts:
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path)
    config = {k: (str(v) if isinstance(v, Path) else v)
              for k, v in sorted(vars(run.args).items()) if k != "func"}
    manifest = {
        "command": run.args.command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in run.inputs},
        "outputs": {str(p): _sha256(p) for p, _ in run.artifacts},
        "summary": run.summary,
        "versions": _versions(),
    }
    target = _manifest_path(Path(run.args.out))
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_lines(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise DataError(f"{path}: no text lines")
    return lines


def _read_jsonl(path: Path, keys: tuple[str, ...]) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            missing = [k for k in keys if k not in row]
            if missing:
                raise DataError(f"{path}:{lineno}: missing fields {missing}")
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no records")
    return rows


def _write_jsonl(rows) -> Writer:
    def write(path: Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
    return write


def _pickle(obj) -> Writer:
    return lambda path: path.write_bytes(pickle.dumps(obj, protocol=4))


def _unpickle(path: Path, kind: type):
    try:
        obj = pickle.loads(path.read_bytes())
    except Exception as exc:  # unpickling raises many types
        raise DataError(f"{path}: cannot load model ({exc})") from None
    if not isinstance(obj, kind):
        raise DataError(f"{path}: not a {kind.__name__} file")
    return obj


def _parse_ints(text: str, what: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"{what} must be comma-separated integers, got {text!r}") from None
    if not values:
        raise ConfigurationError(f"{what} is empty")
    return values


# -- model loading -------------------------------------------------------------------

def _load_scoring_model(path: Path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == MODEL_MAGIC:
        return load_model(path)
    if magic == quant.QUANT_MAGIC:
        return quant.load_quantized(path)
    raise DataError(f"{path}: not a model file")


def _featurizer_for(run: Run, model, model_path: Path, override) -> PairFeaturizer:
    if override:
        return PairFeaturizer.load(run.input(override))
    sidecar = model.meta.get("featurizer")
    if not sidecar:
        raise DataError(f"{model_path}: model has no featurizer reference; pass --features")
    return PairFeaturizer.load(run.input(model_path.parent / sidecar))


def _train_config(args) -> TrainConfig:
    return TrainConfig(arch=args.arch, hidden=args.hidden, lr=args.lr, epochs=args.epochs,
                       warmup_fraction=args.warmup, weight_decay=args.weight_decay,
                       batch_size=args.batch_size, smoothing=args.smoothing, margin=args.margin,
                       seed=args.seed)


def _fit_ranker(faq, train, mode: str, cfg: TrainConfig, n_components: int):
    featurizer = PairFeaturizer(n_components=n_components).fit(
        faq_fit_texts(faq, {s.q_id for s in train}))
    X, y, groups = faq_features(faq, train, featurizer)
    meta = {"task": "faq", "mode": mode, "config": cfg.__dict__}
    if mode == "pointwise":
        model, trace = fit_softmax_head(X, y, 2, cfg, meta)
    else:
        model, trace = fit_pairwise_head(X, y, groups, cfg, meta)
    return featurizer, model, trace


# -- subcommands -------------------------------------------------------------------------

def cmd_synth(run: Run) -> None:
    a = run.args
    if a.kind == "faq":
        faq = datasets.make_faq(n_questions=a.n, seed=a.seed)
        run.output(a.out, lambda p: write_faq_jsonl(p, faq))
    elif a.kind == "sentiment":
        texts, labels = datasets.make_sentiment(a.n, seed=a.seed)
        run.output(a.out, _write_jsonl({"text": t, "label": y} for t, y in zip(texts, labels)))
    elif a.kind == "ner":
        classes = ner.default_classes(a.n_classes)
        sentences, spans = datasets.make_ner(a.n, classes, seed=a.seed)
        tags = [ner.encode_bilou(len(s), sp) for s, sp in zip(sentences, spans)]
        run.output(a.out, lambda p: ner.write_ner_jsonl(p, sentences, tags))
        run.text(Path(str(a.out) + ".classes.txt"), "\n".join(classes) + "\n")
    elif a.kind == "two-view":
        X, y_true, y_part, _ = datasets.make_two_view(n_unlabeled=a.n, seed=a.seed)
        rows = [{"features": x.tolist(), "label": None if y == UNLABELED else int(y), "truth": int(t)}
                for x, y, t in zip(X, y_part, y_true)]
        run.output(a.out, _write_jsonl(rows))
    else:
        corpus = datasets.make_domain_corpus(a.n, a.domain, seed=a.seed)
        run.text(a.out, "\n".join(corpus) + "\n")
    run.summary = {"kind": a.kind, "n": a.n}


def cmd_build_vocab(run: Run) -> None:
    a = run.args
    vocab = tokenizer.train_vocab(_read_lines(run.input(a.corpus)), a.vocab_size, a.min_frequency)
    run.output(a.out, vocab.save)
    run.summary = {"vocab_size": len(vocab)}


def cmd_tokenize_stats(run: Run) -> None:
    a = run.args
    vocab = tokenizer.Vocabulary.load(run.input(a.vocab))
    mean, p50, p95 = tokenizer.length_stats(_read_lines(run.input(a.corpus)), vocab)
    run.summary = {"mean": mean, "p50": p50, "p95": p95}
    run.json(a.out, run.summary)


def cmd_build_faq_dataset(run: Run) -> None:
    a = run.args
    faq, _ = read_faq_jsonl(run.input(a.faq))
    samples = build_ranking_dataset(faq, a.m, a.seed)
    train, test = split(samples, a.ratio, a.seed)
    out = Path(a.out)
    pos, neg = imbalance_stats(samples)
    run.output(out / "train.jsonl", lambda p: write_faq_jsonl(p, faq, train))
    run.output(out / "test.jsonl", lambda p: write_faq_jsonl(p, faq, test))
    run.summary = {"m": a.m, "n_samples": len(samples), "positive_fraction": pos,
                   "negative_fraction": neg, "n_train_questions": len({s.q_id for s in train}),
                   "n_test_questions": len({s.q_id for s in test})}
    run.json(out / "stats.json", run.summary)


def cmd_train_ranker(run: Run) -> None:
    a = run.args
    faq, train = read_faq_jsonl(run.input(a.data))
    cfg = _train_config(a)
    featurizer, model, trace = _fit_ranker(faq, train, a.mode, cfg, a.n_components)
    out = Path(a.out)
    sidecar = out.with_name(out.name + ".features")
    model.meta["featurizer"] = sidecar.name
    run.output(out, lambda p: save_model(model, p))
    run.output(sidecar, featurizer.save)
    run.output(out.with_name(out.name + ".loss.csv"), lambda p: write_loss_trace(p, trace))
    run.summary = {"mode": a.mode, "steps": len(trace), "final_loss": trace[-1][2] if trace else None}


def cmd_eval_retrieval(run: Run) -> None:
    a = run.args
    faq, samples = read_faq_jsonl(run.input(a.data))
    if a.baseline == "bm25":
        if not a.features:
            raise ConfigurationError("--baseline bm25 needs --features for index statistics")
        featurizer = PairFeaturizer.load(run.input(a.features))
        report = rank_eval.evaluate_bm25(faq, samples, featurizer, a.k)
    else:
        if not a.model:
            raise ConfigurationError("--model is required unless --baseline bm25")
        model = _load_scoring_model(run.input(a.model))
        featurizer = _featurizer_for(run, model, Path(a.model), a.features)
        report = rank_eval.evaluate_model(model, faq, samples, featurizer, a.k)
    run.summary = report.as_dict()
    run.json(a.out, run.summary)


def cmd_eval_sweep(run: Run) -> None:
    a = run.args
    faq, _ = read_faq_jsonl(run.input(a.faq))
    cands = _parse_ints(a.cands, "--cands")
    cfg = _train_config(a)
    rows = []
    for m in cands:
        samples = build_ranking_dataset(faq, m, a.seed)
        train, test = split(samples, a.ratio, a.seed)
        featurizer, model, _ = _fit_ranker(faq, train, a.mode, cfg, a.n_components)
        report = rank_eval.evaluate_model(model, faq, test, featurizer, a.k)
        rows.append([m, imbalance_stats(samples)[0], report.mrr_at_k, report.ap_at_1])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "positive_fraction", "mrr", "ap1"])
    writer.writerows([[m, repr(f), repr(r), repr(p)] for m, f, r, p in rows])
    run.text(a.out, buf.getvalue())
    run.summary = {"rows": len(rows)}


def cmd_build_index(run: Run) -> None:
    a = run.args
    faq, _ = read_faq_jsonl(run.input(a.data))
    index = bm25.build_index((d, preprocess(t)) for d, t in sorted(faq.answers.items()))
    run.output(a.out, lambda p: bm25.save_index(index, p, {"source": Path(a.data).name}))
    run.summary = {"n_docs": index.n_docs, "n_terms": len(index.postings)}


def _bm25_params(a) -> bm25.Bm25Params:
    return bm25.Bm25Params(a.k1, a.b, a.delta)


def cmd_bm25_search(run: Run) -> None:
    a = run.args
    index, _ = bm25.load_index(run.input(a.index))
    hits = bm25.search(preprocess(a.query), index, _bm25_params(a), a.k)
    run.summary = {"n_hits": len(hits)}
    run.json(a.out, {"query": a.query, "hits": [{"doc_id": d, "score": s} for d, s in hits]})


def cmd_rerank(run: Run) -> None:
    a = run.args
    index, _ = bm25.load_index(run.input(a.index))
    faq, _ = read_faq_jsonl(run.input(a.data))
    model = _load_scoring_model(run.input(a.model))
    featurizer = _featurizer_for(run, model, Path(a.model), a.features)
    params = _bm25_params(a)
    first, second = [], []
    for q_id in sorted(faq.questions):
        q_tok = featurizer.tokens(faq.questions[q_id])
        hits = bm25.search(q_tok, index, params, a.k)
        missing = [d for d, _ in hits if d not in faq.answers]
        if missing:
            raise DataError(f"index documents {missing[:5]} have no answer text in {a.data}")
        first.append(rank_eval.RankedList(q_id, tuple(d for d, _ in hits), tuple(s for _, s in hits)))
        rr = rank_eval.rerank(faq.questions[q_id], index, params, model, featurizer, faq.answers, a.k)
        second.append(rank_eval.RankedList(q_id, rr.doc_ids, rr.scores))
    rel = faq.relevant_map()
    report = {
        "k": a.k,
        "bm25": rank_eval.evaluate_rankings(first, rel, a.k).as_dict(),
        "rerank": rank_eval.evaluate_rankings(second, rel, a.k).as_dict(),
        "rankings": [{"q_id": r.q_id, "doc_ids": list(r.doc_ids), "scores": list(r.scores)}
                     for r in second],
    }
    run.summary = {"bm25": report["bm25"], "rerank": report["rerank"]}
    run.json(a.out, report)


def cmd_fit_lsa(run: Run) -> None:
    a = run.args
    docs = [preprocess(t) for t in _read_lines(run.input(a.corpus))]
    lsa = LatentSemanticAnalysis(a.n_components, a.n_max).fit(docs)
    run.output(a.out, lambda p: save_lsa(lsa, p))
    run.summary = {"n_components": lsa.n_components_, "n_terms": lsa.tfidf_.n_terms}


def _split_rows(n: int, ratio: float, seed: int):
    order = np.random.default_rng(seed).permutation(n)
    n_train = min(max(int(round(ratio * n)), 1), n - 1)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def cmd_train_sentiment(run: Run) -> None:
    a = run.args
    rows = _read_jsonl(run.input(a.data), ("text", "label"))
    if len(rows) < 2:
        raise DataError("need at least two labeled texts")
    catalog = None
    if a.catalog:
        catalog = [(r["text"], r["label"]) for r in _read_jsonl(run.input(a.catalog), ("text", "label"))]
    texts = [r["text"] for r in rows]
    labels = np.array([str(r["label"]) for r in rows])
    tr, te = _split_rows(len(rows), a.ratio, a.seed)
    clf = SentimentClassifier(head=a.head, n_components=a.n_components, n_max=a.n_max,
                              n_trees=a.n_trees, max_depth=a.max_depth, hidden=a.hidden, lr=a.lr,
                              epochs=a.epochs, catalog=catalog, random_state=a.seed)
    clf.fit([texts[i] for i in tr], labels[tr])
    pred = clf.predict([texts[i] for i in te])
    report = rank_eval.f1_report(pred.tolist(), labels[te].tolist(), clf.classes_.tolist())
    out = Path(a.out)
    run.output(out, _pickle(clf))
    if a.head == "dense":
        run.output(out.with_name(out.name + ".head.bin"), lambda p: save_model(clf.head_.model_, p))
    run.json(out.with_name(out.name + ".report.json"), report)
    run.summary = {"macro_f1": report["macro"]["f1"], "micro_f1": report["micro"]["f1"]}


def _parse_view_split(text: str):
    if not text:
        return None
    try:
        left, right = text.split(":")
        return tuple(np.array(_parse_ints(part, "--view-split"), dtype=np.int64) for part in (left, right))
    except ValueError:
        raise ConfigurationError("--view-split must look like 0,1,2:3,4,5") from None


def cmd_cotrain_expand(run: Run) -> None:
    a = run.args
    rows = _read_jsonl(run.input(a.data), ("features", "label"))
    try:
        X = np.array([r["features"] for r in rows], dtype=float)
    except ValueError:
        raise DataError("feature vectors must be numeric and equal length") from None
    if X.ndim != 2:
        raise DataError("feature vectors must be equal length")
    y = np.array([UNLABELED if r["label"] is None else int(r["label"]) for r in rows])
    split_cols = _parse_view_split(a.view_split)
    base = ForestClassifier(n_trees=a.n_trees, max_depth=a.max_depth, random_state=a.seed)
    ct = CoTrainingClassifier(base, a.threshold, a.k_per_class, a.max_rounds, split_cols, a.seed)
    ct.fit(X, y)
    given = y != UNLABELED
    expanded = [{"index": i, "label": None if lab == UNLABELED else int(lab),
                 "source": "given" if given[i] else ("cotrain" if lab != UNLABELED else "unlabeled")}
                for i, lab in enumerate(ct.transduction_.tolist())]
    out = Path(a.out)
    run.output(out, _write_jsonl(expanded))
    run.output(out.with_name(out.name + ".rounds.jsonl"), lambda p: write_round_log(p, ct.round_log_))
    added = [d["index"] for d in ct.additions_]
    run.summary = {"initial_labeled": int(given.sum()), "final_labeled": int(ct.labeled_mask_.sum()),
                   "growth": float(ct.labeled_mask_.sum() / given.sum()), "rounds": len(ct.round_log_)}
    if all("truth" in r for r in rows) and added:
        truth = np.array([rows[i]["truth"] for i in added])
        run.summary["added_accuracy"] = float(np.mean(ct.transduction_[added] == truth))


def cmd_train_ner(run: Run) -> None:
    a = run.args
    sentences, tags = ner.read_ner_jsonl(run.input(a.data))
    classes = ner.read_class_list(run.input(a.classes)) if a.classes else ner.default_classes()
    tagger = ner.NerTagger(classes, a.n_components, a.window, a.arch, a.hidden, a.lr, a.epochs,
                           a.warmup, a.weight_decay, a.batch_size, a.seed)
    tagger.fit(sentences, tags)
    out = Path(a.out)
    run.output(out, _pickle(tagger))
    run.output(out.with_name(out.name + ".head.bin"), lambda p: save_model(tagger.head_.model_, p))
    run.summary = tagger.evaluate(sentences, tags)


def cmd_eval_ner(run: Run) -> None:
    a = run.args
    tagger = _unpickle(run.input(a.model), ner.NerTagger)
    sentences, tags = ner.read_ner_jsonl(run.input(a.data))
    try:
        run.summary = tagger.evaluate(sentences, tags)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    run.json(a.out, run.summary)


def cmd_quantize(run: Run) -> None:
    a = run.args
    model = load_model(run.input(a.model))
    qmodel = quant.QuantizedModel.from_model(model)
    full, q, ratio = quant.size_report(model, a.full_dtype)
    run.output(a.out, lambda p: quant.save_quantized(qmodel, p))
    run.summary = {"full_bytes": full, "quantized_bytes": q, "ratio": ratio, "full_dtype": a.full_dtype}


def _bench_inputs(run: Run, model, model_path: Path, data: str, features, limit: int) -> np.ndarray:
    path = run.input(data)
    if path.suffix == ".npy":
        X = np.load(path)
    else:
        faq, samples = read_faq_jsonl(path)
        X, _, _ = faq_features(faq, samples, _featurizer_for(run, model, model_path, features))
    return np.atleast_2d(X)[:limit]


def cmd_bench(run: Run) -> None:
    a = run.args
    model = _load_scoring_model(run.input(a.model))
    X = _bench_inputs(run, model, Path(a.model), a.data, a.features, a.max_samples)
    if isinstance(model, RankModel):
        report = quant.bench_compare(model, X, a.reps)
    else:
        model.predict(X[:1])
        report = {"cpu_quantized": quant.bench_inference(model.predict, X, a.reps), "reps": a.reps,
                  "n_samples": int(len(X))}
    run.summary = report
    run.json(a.out, report)


# -- argument parsing ----------------------------------------------------------------------

def _add_training(p: argparse.ArgumentParser, epochs: int, lr: float = 5e-5) -> None:
    p.add_argument("--arch", choices=("linear", "mlp"), default="linear")
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--warmup", type=float, default=0.02, help="warmup fraction of total steps")
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=16)


def _add_ranker(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("pointwise", "pairwise"), default="pointwise")
    _add_training(p, epochs=1)
    p.add_argument("--smoothing", type=float, default=0.1)
    p.add_argument("--margin", type=float, default=0.2)
    p.add_argument("--n-components", type=int, default=100)


def _add_bm25(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--delta", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--threads", type=int, default=1, help="BLAS thread cap")
    common.add_argument("--out", required=True, help="output artifact path")

    parser = argparse.ArgumentParser(prog="faqkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=faqkit.__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "write a seeded synthetic dataset")
    p.add_argument("kind", choices=("faq", "sentiment", "ner", "two-view", "domain"))
    p.add_argument("--n", type=int, default=200, help="questions, texts, sentences or unlabeled rows")
    p.add_argument("--n-classes", type=int, default=4, help="entity classes for ner")
    p.add_argument("--domain", choices=("banking", "other"), default="banking")

    p = add("build-vocab", cmd_build_vocab, "train a WordPiece vocabulary")
    p.add_argument("--corpus", required=True, help="text file, one document per line")
    p.add_argument("--vocab-size", type=int, default=tokenizer.DEFAULT_VOCAB_SIZE)
    p.add_argument("--min-frequency", type=int, default=2)

    p = add("tokenize-stats", cmd_tokenize_stats, "token length statistics of a corpus")
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)

    p = add("build-faq-dataset", cmd_build_faq_dataset, "sample candidates and split by question")
    p.add_argument("--faq", required=True, help="FAQ JSON-lines with relevant pairs")
    p.add_argument("--m", type=int, default=30, help="candidates per question")
    p.add_argument("--ratio", type=float, default=0.8, help="train fraction of questions")

    p = add("train-ranker", cmd_train_ranker, "train a pointwise or pairwise ranking head")
    p.add_argument("--data", required=True)
    _add_ranker(p)

    p = add("eval-retrieval", cmd_eval_retrieval, "MRR@k and AP@1 of a ranker or BM25+")
    p.add_argument("--data", required=True)
    p.add_argument("--model")
    p.add_argument("--features", help="featurizer file (defaults to the model's sidecar)")
    p.add_argument("--baseline", choices=("model", "bm25"), default="model")
    p.add_argument("--k", type=int, default=10)

    p = add("eval-sweep", cmd_eval_sweep, "train and evaluate over several candidate counts")
    p.add_argument("--faq", required=True)
    p.add_argument("--cands", default="15,30,45")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--k", type=int, default=10)
    _add_ranker(p)

    p = add("build-index", cmd_build_index, "BM25+ inverted index over FAQ answers")
    p.add_argument("--data", required=True)

    p = add("bm25-search", cmd_bm25_search, "top-k BM25+ answers for a query")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    _add_bm25(p)

    p = add("rerank", cmd_rerank, "re-rank BM25+ top-k answers with a model")
    p.add_argument("--index", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="FAQ JSON-lines with questions and answer texts")
    p.add_argument("--features")
    p.add_argument("--k", type=int, default=10)
    _add_bm25(p)

    p = add("fit-lsa", cmd_fit_lsa, "fit TF-IDF n-gram LSA on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--n-components", type=int, default=100)
    p.add_argument("--n-max", type=int, default=3)

    p = add("train-sentiment", cmd_train_sentiment, "train and evaluate a sentiment classifier")
    p.add_argument("--data", required=True, help='JSON-lines {"text", "label"}')
    p.add_argument("--head", choices=("forest", "dense"), default="forest")
    p.add_argument("--catalog", help="JSON-lines of known texts matched before the model")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--n-components", type=int, default=100)
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--n-trees", type=int, default=450)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--epochs", type=int, default=5)

    p = add("cotrain-expand", cmd_cotrain_expand, "expand labels by two-view co-training")
    p.add_argument("--data", required=True, help='JSON-lines {"features", "label"|null}')
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--k-per-class", type=int, default=5)
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--view-split", default="", help="column lists, e.g. 0,1,2:3,4,5")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=5)

    p = add("train-ner", cmd_train_ner, "train a BILOU token tagger")
    p.add_argument("--data", required=True, help='JSON-lines {"tokens", "tags"}')
    p.add_argument("--classes", help="class list, one per line")
    p.add_argument("--n-components", type=int, default=50)
    p.add_argument("--window", type=int, default=2)
    _add_training(p, epochs=5)
    p.set_defaults(arch="mlp", hidden=64)

    p = add("eval-ner", cmd_eval_ner, "entity-level precision, recall and F1")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = add("quantize", cmd_quantize, "int8-quantize every tensor of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--full-dtype", choices=("float32", "float64"), default="float32",
                   help="precision of the reference file in the size report")

    p = add("bench", cmd_bench, "CPU latency of full-precision and int8 inference")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="FAQ JSON-lines or a .npy feature matrix")
    p.add_argument("--features")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--max-samples", type=int, default=200)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    run = Run(args)
    try:
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        with threadpool_limits(limits=args.threads):
            args.func(run)
        _finish(run)
    except ConfigurationError as exc:
        print(f"faqkit {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, KeyError, OSError) as exc:
        print(f"faqkit {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
