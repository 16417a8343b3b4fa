"""Command-line pipeline over image-comment corpora.

Stages: build-vocab -> score -> filter -> lda-train -> lda-infer ->
metrics -> report, plus a stats inspector.  Every stage writes its
artifact together with a `<artifact>.manifest.json` recording the config
hash, input hashes, library versions, and wall time.  Artifacts
themselves contain no timestamps, so same-seed runs are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import json
import logging
import time
from pathlib import Path

import click

from .artifacts import (
    load_topic_model,
    load_vocabulary,
    write_decisions,
    write_thetas,
    write_topic_model,
    write_vocabulary,
)
from .config import PipelineConfig
from .corpus_io import load_corpus, write_filtered_corpus
from .errors import CapsieveError
from .lda import assemble_documents, build_lda_vocab, infer_topics, train_lda
from .manifest import write_manifest
from .metrics import (
    CaptionSet,
    DIVERSITY_ORDERS,
    bleu,
    cider_per_image,
    diversity_report,
    rouge_l_per_image,
    sentence_bleu,
)
from .ngrams import build_vocabulary
from .pipeline import corpus_stats, load_lexicon, prepare_corpus
from .scoring import FilterConfig, filter_corpus, filter_stats
from .textnorm import normalize_text, tokenize

log = logging.getLogger(__name__)

_CORPUS_ARG = click.Path(exists=True, dir_okay=False, path_type=Path)
_OUT_ARG = click.Path(dir_okay=False, writable=True, path_type=Path)


def _cli_errors(fn):
    """Surface library failures as clean CLI diagnostics (exit code 1)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CapsieveError as e:
            raise click.ClickException(str(e)) from e

    return wrapper


def _require_artifact(path: Path, what: str, producer: str) -> None:
    if not path.exists():
        raise click.ClickException(
            f"{what} {path} not found; produce it with `capsieve {producer}` first"
        )


class _AlphaType(click.ParamType):
    """Accepts a positive float or the literal 'auto' (meaning 50/K)."""

    name = "alpha"

    def convert(self, value, param, ctx):
        if value is None or isinstance(value, float):
            return value
        if str(value).lower() == "auto":
            return "auto"
        try:
            return float(value)
        except ValueError:
            self.fail(f"{value!r} is neither 'auto' nor a number", param, ctx)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    envvar="CAPSIEVE_CONFIG",
    default=None,
    help="JSON config file; flags override its values (env: CAPSIEVE_CONFIG).",
)
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug.")
@click.pass_context
def main(ctx: click.Context, config_path: Path | None, verbose: int) -> None:
    """Clean an image-comment corpus and derive topic weak labels."""
    level = logging.WARNING - min(verbose, 2) * 10
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        ctx.obj = (
            PipelineConfig.from_file(config_path) if config_path else PipelineConfig()
        )
    except CapsieveError as e:
        raise click.ClickException(str(e)) from e


def _load_prepared(cfg: PipelineConfig, path: Path, pre_tagged: bool | None = None):
    """Load + prepare a corpus the same way every stage does."""
    tagged = cfg.pre_tagged if pre_tagged is None else pre_tagged
    corpus = load_corpus(path, pre_tagged=tagged, threads=cfg.threads)
    lexicon = load_lexicon(cfg)
    prepared, prep = prepare_corpus(corpus, lexicon, cfg)
    return corpus, prepared, prep


@main.command("build-vocab")
@click.option("--input", "input_path", required=True, type=_CORPUS_ARG)
@click.option("--output", "output_path", required=True, type=_OUT_ARG)
@click.option("--pre-tagged", is_flag=True, default=None)
@click.option("--per-order", "per_order", is_flag=True, default=False,
              help="Normalize unigrams and bigrams separately instead of pooled.")
@click.option("--threads", type=int, default=None)
@click.pass_obj
@_cli_errors
def build_vocab(cfg, input_path, output_path, pre_tagged, per_order, threads):
    """Count admissible n-grams and write the probability table (TSV)."""
    t0 = time.perf_counter()
    cfg = cfg.updated(pre_tagged=pre_tagged, threads=threads)
    if per_order:
        cfg = dataclasses.replace(cfg, pooled=False)
    _, prepared, prep = _load_prepared(cfg, input_path)
    vocab = build_vocabulary(prepared, pooled=cfg.pooled, threads=cfg.threads)
    write_vocabulary(vocab, output_path)
    write_manifest(
        output_path,
        cfg.to_dict(),
        inputs={"corpus": input_path},
        extra={
            "stats": {
                "entries": vocab.size,
                "total_count": vocab.total_count,
                "comments": prep.comments_out,
                "noise_comments": prep.comments_noise,
            }
        },
        wall_time_s=time.perf_counter() - t0,
    )
    click.echo(
        f"vocabulary: {vocab.size} n-grams from {prep.comments_out} comments "
        f"({prep.comments_noise} noise dropped) -> {output_path}"
    )


@main.command("score")
@click.option("--input", "input_path", required=True, type=_CORPUS_ARG)
@click.option("--vocab", "vocab_path", required=True, type=click.Path(path_type=Path))
@click.option("--output", "output_path", required=True, type=_OUT_ARG)
@click.option("--threshold", type=float, default=None)
@click.option("--log-base", type=float, default=None)
@click.option("--pre-tagged", is_flag=True, default=None)
@click.option("--allow-cross-corpus", is_flag=True, default=False,
              help="Score a corpus the vocabulary was not built from.")
@click.pass_obj
@_cli_errors
def score(cfg, input_path, vocab_path, output_path, threshold, log_base,
          pre_tagged, allow_cross_corpus):
    """Score every comment and write keep/discard decisions (TSV)."""
    t0 = time.perf_counter()
    _require_artifact(vocab_path, "vocabulary", "build-vocab")
    cfg = cfg.updated(threshold=threshold, log_base=log_base, pre_tagged=pre_tagged)
    _, prepared, _ = _load_prepared(cfg, input_path)
    vocab = load_vocabulary(vocab_path)
    decisions = filter_corpus(
        prepared,
        vocab,
        FilterConfig(cfg.threshold, cfg.log_base),
        allow_cross_corpus=allow_cross_corpus,
    )
    write_decisions(decisions, output_path, threshold=cfg.threshold)
    summary = filter_stats(decisions)
    write_manifest(
        output_path,
        cfg.to_dict(),
        inputs={"corpus": input_path, "vocabulary": vocab_path},
        extra={"stats": {"comments": summary.comments_in, "kept": summary.comments_out}},
        wall_time_s=time.perf_counter() - t0,
    )
    click.echo(
        f"scored {summary.comments_in} comments: {summary.comments_out} kept "
        f"({summary.discard_fraction:.1%} discarded) -> {output_path}"
    )


@main.command("filter")
@click.option("--input", "input_path", required=True, type=_CORPUS_ARG)
@click.option("--vocab", "vocab_path", required=True, type=click.Path(path_type=Path))
@click.option("--output", "output_path", required=True, type=_OUT_ARG)
@click.option("--decisions", "decisions_path", type=_OUT_ARG, default=None,
              help="Also write the per-comment decisions TSV here.")
@click.option("--threshold", type=float, default=None)
@click.option("--log-base", type=float, default=None)
@click.option("--min-comments-per-image", type=int, default=None)
@click.option("--pre-tagged", is_flag=True, default=None)
@click.option("--allow-cross-corpus", is_flag=True, default=False)
@click.pass_obj
@_cli_errors
def filter_cmd(cfg, input_path, vocab_path, output_path, decisions_path, threshold,
               log_base, min_comments_per_image, pre_tagged, allow_cross_corpus):
    """Write the filtered corpus containing only informative comments."""
    t0 = time.perf_counter()
    _require_artifact(vocab_path, "vocabulary", "build-vocab")
    cfg = cfg.updated(
        threshold=threshold,
        log_base=log_base,
        min_comments_per_image=min_comments_per_image,
        pre_tagged=pre_tagged,
    )
    _, prepared, prep = _load_prepared(cfg, input_path)
    vocab = load_vocabulary(vocab_path)
    decisions = filter_corpus(
        prepared,
        vocab,
        FilterConfig(cfg.threshold, cfg.log_base),
        allow_cross_corpus=allow_cross_corpus,
    )
    summary = write_filtered_corpus(
        prepared, decisions, output_path, cfg.min_comments_per_image
    )
    inputs = {"corpus": input_path, "vocabulary": vocab_path}
    if decisions_path is not None:
        write_decisions(decisions, decisions_path, threshold=cfg.threshold)
        write_manifest(
            decisions_path, cfg.to_dict(), inputs,
            wall_time_s=time.perf_counter() - t0,
        )
    write_manifest(
        output_path,
        cfg.to_dict(),
        inputs,
        extra={
            "stats": {
                "images_in": summary.images_in,
                "images_out": summary.images_out,
                "comments_in": summary.comments_in,
                "comments_out": summary.comments_out,
                "noise_comments": prep.comments_noise,
            }
        },
        wall_time_s=time.perf_counter() - t0,
    )
    click.echo(
        f"filtered: {summary.images_out}/{summary.images_in} images, "
        f"{summary.comments_out}/{summary.comments_in} comments kept "
        f"(mean {summary.mean_kept_per_image:.2f} per image) -> {output_path}"
    )


@main.command("lda-train")
@click.option("--input", "input_path", required=True, type=_CORPUS_ARG,
              help="Filtered corpus (JSONL) from `capsieve filter`.")
@click.option("--output", "output_path", required=True, type=_OUT_ARG)
@click.option("--topics", type=int, default=None)
@click.option("--alpha", type=_AlphaType(), default=None)
@click.option("--beta", type=float, default=None)
@click.option("--iters", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--vocab-cap", type=int, default=None)
@click.option("--doc-freq-cap", type=float, default=None)
@click.option("--average-samples", is_flag=True, default=None)
@click.option("--pre-tagged", is_flag=True, default=None)
@click.pass_obj
@_cli_errors
def lda_train(cfg, input_path, output_path, topics, alpha, beta, iters, burn_in,
              seed, vocab_cap, doc_freq_cap, average_samples, pre_tagged):
    """Train the topic model on a filtered corpus (collapsed Gibbs)."""
    t0 = time.perf_counter()
    cfg = cfg.updated(
        topics=topics, beta=beta, iters=iters, burn_in=burn_in, seed=seed,
        vocab_cap=vocab_cap, doc_freq_cap=doc_freq_cap,
        average_samples=average_samples, pre_tagged=pre_tagged,
    )
    if alpha == "auto":
        cfg = dataclasses.replace(cfg, alpha=None)
    elif alpha is not None:
        cfg = dataclasses.replace(cfg, alpha=alpha)
    _, prepared, _ = _load_prepared(cfg, input_path)
    vocab = build_vocabulary(prepared, pooled=cfg.pooled, threads=cfg.threads)
    lda_vocab = build_lda_vocab(
        vocab,
        total_comments=prepared.n_comments,
        doc_freq_cap=cfg.doc_freq_cap,
        max_terms=cfg.vocab_cap,
    )
    docs = assemble_documents(prepared, lda_vocab)
    model = train_lda(
        docs,
        lda_vocab,
        k=cfg.topics,
        alpha=cfg.alpha,
        beta=cfg.beta,
        iters=cfg.iters,
        burn_in=cfg.burn_in,
        seed=cfg.seed,
        average_samples=cfg.average_samples,
    )
    write_topic_model(model, output_path)
    n_tokens = int(model.doc_offsets[-1])
    n_empty = int((model.doc_offsets[1:] == model.doc_offsets[:-1]).sum())
    write_manifest(
        output_path,
        cfg.to_dict(),
        inputs={"corpus": input_path},
        extra={
            "stats": {
                "documents": model.n_docs,
                "non_empty_documents": model.n_docs - n_empty,
                "tokens": n_tokens,
                "terms": lda_vocab.size,
            }
        },
        wall_time_s=time.perf_counter() - t0,
    )
    click.echo(
        f"trained K={model.k} on {model.n_docs} documents "
        f"({n_tokens} tokens, {lda_vocab.size} terms, {n_empty} empty) "
        f"-> {output_path}"
    )


@main.command("lda-infer")
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path))
@click.option("--input", "input_path", required=True, type=_CORPUS_ARG,
              help="Corpus (JSONL) to label, normally the filtered corpus.")
@click.option("--output", "output_path", required=True, type=_OUT_ARG)
@click.option("--iters", "infer_iters", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--pre-tagged", is_flag=True, default=None)
@click.pass_obj
@_cli_errors
def lda_infer(cfg, model_path, input_path, output_path, infer_iters, seed, pre_tagged):
    """Emit per-image topic distributions (JSONL weak labels)."""
    t0 = time.perf_counter()
    _require_artifact(model_path, "topic model", "lda-train")
    cfg = cfg.updated(infer_iters=infer_iters, seed=seed, pre_tagged=pre_tagged)
    model = load_topic_model(model_path)
    _, prepared, _ = _load_prepared(cfg, input_path)
    docs = assemble_documents(prepared, model.vocab)
    thetas = [
        infer_topics(model, doc, iters=cfg.infer_iters, seed=cfg.seed) for doc in docs
    ]
    write_thetas(output_path, [d.image_id for d in docs], thetas)
    write_manifest(
        output_path,
        cfg.to_dict(),
        inputs={"corpus": input_path, "model": model_path},
        extra={"stats": {"documents": len(docs), "topics": model.k}},
        wall_time_s=time.perf_counter() - t0,
    )
    click.echo(f"labeled {len(docs)} images with K={model.k} topics -> {output_path}")


def _load_caption_file(path: Path, multi: bool) -> dict[str, object]:
    """Parse candidates ({image_id, caption}) or references
    ({image_id, captions}) JSONL, tokenizing like the corpus pipeline."""
    out: dict[str, object] = {}
    order: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                iid = str(obj["image_id"])
                if multi:
                    value = tuple(
                        tokenize(normalize_text(str(c))) for c in obj["captions"]
                    )
                else:
                    value = tokenize(normalize_text(str(obj["caption"])))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise click.ClickException(f"{path}:{line_no}: {e!r}") from e
            if iid in out:
                raise click.ClickException(f"{path}:{line_no}: duplicate image {iid!r}")
            out[iid] = value
            order.append(iid)
    out["__order__"] = order  # file order, for order-sensitive diversity
    return out


@main.command("metrics")
@click.option("--candidates", "cand_path", required=True, type=_CORPUS_ARG,
              help="JSONL of {image_id, caption}.")
@click.option("--references", "ref_path", required=True, type=_CORPUS_ARG,
              help="JSONL of {image_id, captions: [...]}.")
@click.option("--output-dir", "out_dir", required=True,
              type=click.Path(file_okay=False, path_type=Path))
@click.option("--max-positions", type=int, default=None)
@click.option("--distinct-threshold", type=float, default=None)
@click.option("--length-penalty", "cider_length_penalty", is_flag=True, default=None)
@click.pass_obj
@_cli_errors
def metrics_cmd(cfg, cand_path, ref_path, out_dir, max_positions,
                distinct_threshold, cider_length_penalty):
    """Score candidate captions and write scores.csv, diversity.csv, summary.json."""
    t0 = time.perf_counter()
    cfg = cfg.updated(
        max_positions=max_positions,
        distinct_threshold=distinct_threshold,
        cider_length_penalty=cider_length_penalty,
    )
    cands = _load_caption_file(cand_path, multi=False)
    cand_order = cands.pop("__order__")
    refs = _load_caption_file(ref_path, multi=True)
    refs.pop("__order__")
    caption_set = CaptionSet(cands, refs)

    bleu_scores = bleu(caption_set)
    rouge_per_image = rouge_l_per_image(caption_set)
    cider_scores = cider_per_image(
        caption_set, length_penalty=cfg.cider_length_penalty
    )
    diversity = diversity_report(
        [cands[i] for i in cand_order],
        max_pos=cfg.max_positions,
        overlap_threshold=cfg.distinct_threshold,
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    scores_path = out_dir / "scores.csv"
    with scores_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["image_id", "bleu1", "bleu2", "bleu3", "bleu4", "rouge_l", "cider"]
        )
        for iid in caption_set.image_ids:
            sb = sentence_bleu(caption_set.candidates[iid], caption_set.references[iid])
            writer.writerow(
                [iid, *(repr(v) for v in sb),
                 repr(rouge_per_image[iid]), repr(cider_scores[iid])]
            )

    diversity_path = out_dir / "diversity.csv"
    with diversity_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "position", "unique_count"])
        for n in DIVERSITY_ORDERS:
            for pos, count in enumerate(diversity.per_position[n], start=1):
                writer.writerow([n, pos, count])

    summary = {
        "n_candidates": caption_set.n_images,
        "n_reference_images": len(refs),
        "bleu": list(bleu_scores),
        "rouge_l": sum(rouge_per_image.values()) / len(rouge_per_image),
        "cider": sum(cider_scores.values()) / len(cider_scores),
        "distinct_ratio": diversity.distinct_ratio,
        "max_positions": cfg.max_positions,
        "diversity_orders": list(DIVERSITY_ORDERS),
    }
    summary_path = out_dir / "summary.json"
    summary_path.write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    for artifact in (scores_path, diversity_path, summary_path):
        write_manifest(
            artifact,
            cfg.to_dict(),
            inputs={"candidates": cand_path, "references": ref_path},
            wall_time_s=time.perf_counter() - t0,
        )
    click.echo(
        f"metrics over {caption_set.n_images} images: "
        f"B1={bleu_scores[0]:.4f} B4={bleu_scores[3]:.4f} "
        f"R={summary['rouge_l']:.4f} C={summary['cider']:.4f} "
        f"distinct={summary['distinct_ratio']:.3f} -> {out_dir}"
    )


@main.command("report")
@click.option("--metrics-dir", "metrics_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--output", "output_path", required=True, type=_OUT_ARG)
@click.pass_obj
@_cli_errors
def report(cfg, metrics_dir, output_path):
    """Validate metrics outputs and consolidate them into one report.json."""
    t0 = time.perf_counter()
    scores_path = metrics_dir / "scores.csv"
    diversity_path = metrics_dir / "diversity.csv"
    summary_path = metrics_dir / "summary.json"
    for p in (scores_path, diversity_path, summary_path):
        _require_artifact(p, "metrics artifact", "metrics")

    summary = json.loads(summary_path.read_text("utf-8"))
    with scores_path.open("r", encoding="utf-8", newline="") as fh:
        score_rows = list(csv.DictReader(fh))
    with diversity_path.open("r", encoding="utf-8", newline="") as fh:
        diversity_rows = list(csv.DictReader(fh))

    if len(score_rows) != summary["n_candidates"]:
        raise click.ClickException(
            f"scores.csv has {len(score_rows)} rows, expected "
            f"{summary['n_candidates']} candidates"
        )
    expected_div = len(summary["diversity_orders"]) * summary["max_positions"]
    if len(diversity_rows) != expected_div:
        raise click.ClickException(
            f"diversity.csv has {len(diversity_rows)} rows, expected {expected_div}"
        )

    per_image = [
        {
            "image_id": r["image_id"],
            **{k: float(r[k]) for k in ("bleu1", "bleu2", "bleu3", "bleu4",
                                        "rouge_l", "cider")},
        }
        for r in score_rows
    ]
    curves: dict[str, list[int]] = {}
    for r in diversity_rows:
        curves.setdefault(r["n"], []).append(int(r["unique_count"]))
    doc = {"summary": summary, "per_image": per_image, "diversity": curves}
    output_path.write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    write_manifest(
        output_path,
        cfg.to_dict(),
        inputs={
            "scores": scores_path,
            "diversity": diversity_path,
            "summary": summary_path,
        },
        wall_time_s=time.perf_counter() - t0,
    )
    click.echo(
        f"report: {len(per_image)} images, "
        f"{len(diversity_rows)} diversity rows -> {output_path}"
    )


@main.command("stats")
@click.option("--input", "input_path", required=True, type=_CORPUS_ARG)
@click.option("--output", "output_path", type=_OUT_ARG, default=None,
              help="Also write the report as JSON.")
@click.option("--pre-tagged", is_flag=True, default=None)
@click.pass_obj
@_cli_errors
def stats(cfg, input_path, output_path, pre_tagged):
    """Corpus statistics: sizes, token distribution, vocabulary size."""
    t0 = time.perf_counter()
    cfg = cfg.updated(pre_tagged=pre_tagged)
    corpus, prepared, prep = _load_prepared(cfg, input_path)
    if prepared.n_comments:
        vocab_size = build_vocabulary(prepared, pooled=cfg.pooled).size
    else:
        log.warning("corpus %s is empty after preparation", input_path)
        vocab_size = 0
    doc = corpus_stats(corpus, prepared, prep, vocab_size)
    text = json.dumps(doc, sort_keys=True, indent=2)
    click.echo(text)
    if output_path is not None:
        output_path.write_text(text + "\n", encoding="utf-8")
        write_manifest(
            output_path,
            cfg.to_dict(),
            inputs={"corpus": input_path},
            wall_time_s=time.perf_counter() - t0,
        )


if __name__ == "__main__":
    main()
