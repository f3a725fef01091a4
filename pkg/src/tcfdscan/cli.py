"""Command-line driver: ingest -> classify -> aggregate / evaluate.

Every command writes into one run directory: outputs, a config snapshot
(config.json, free of timestamps so reruns are byte-identical), a run.log,
and error manifests when anything failed. Exit codes: 0 success, 1 hard
failure, 2 partial success with an error manifest.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from . import analytics, corpus, evaluation, segment as segmentation, tableio
from .errors import ConfigError, ExtractionError, PipelineError
from .extract import HeuristicPdfExtractor, PretaggedBlockExtractor
from .model_backend import load_backend
from .nli import batch_classify, template_fingerprint
from .taxonomy import DEFAULT_TEMPLATE, Granularity, builtin_taxonomy, read_labels

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_HARD = 1
EXIT_PARTIAL = 2

STANDARD_TREND_PAIRS = (
    ("GENERAL.GOVERNANCE", "GO.1"),
    ("GENERAL.STRATEGY", "ST.1"),
    ("GENERAL.RISK_MANAGEMENT", "RM.1"),
    ("GENERAL.METRICS_TARGETS", "MT.1"),
)


def _prepare_out(out: str | None, command: str) -> Path:
    if out is None:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        out = f"runs/{stamp}-{command}"
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _attach_log(out_dir: Path) -> logging.Handler:
    handler = logging.FileHandler(out_dir / "run.log", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("tcfdscan")
    root.setLevel(logging.INFO)
    root.addHandler(handler)
    return handler


def _write_snapshot(out_dir: Path, command: str, params: dict) -> None:
    snapshot = {"command": command, "package_version": __version__, "params": params}
    (out_dir / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")


def _load_config_defaults(ctx: click.Context, config_path: str | None) -> None:
    """Seed parameter defaults from a previous run's config snapshot."""
    if not config_path:
        return
    try:
        snapshot = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config snapshot {config_path}: {exc}") from exc
    params = snapshot.get("params", {})
    for name, value in params.items():
        if name not in ctx.params:
            continue
        source = ctx.get_parameter_source(name)
        if source is not None and source.name == "COMMANDLINE":
            continue
        ctx.params[name] = value


def _load_labels(labels_path: str | None):
    if labels_path:
        return read_labels(labels_path)
    return builtin_taxonomy()


@click.group()
@click.version_option(version=__version__, prog_name="tcfdscan")
def main():
    """Classify climate-related disclosures in report PDFs with zero-shot NLI scoring."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Corpus manifest TSV (report_id, bank_id, category, financial_year, path).")
@click.option("--registry", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Bank registry TSV (bank_id, name, region, total_assets_usd).")
@click.option("--blocks", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pre-tagged block file from an external layout model; replaces the heuristic extractor.")
@click.option("--max-tokens", default=512, show_default=True, help="Sequence token limit.")
@click.option("--workers", default=1, show_default=True, help="Parallel extraction workers.")
@click.option("--out", default=None, help="Run directory (default: runs/<timestamp>-ingest).")
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="Seed parameters from a previous run's config.json.")
@click.pass_context
def ingest(ctx, manifest, registry, blocks, max_tokens, workers, out, config_path):
    """Extract and segment report PDFs into classifiable text sequences plus corpus stats."""
    _load_config_defaults(ctx, config_path)
    manifest, registry, blocks = ctx.params["manifest"], ctx.params["registry"], ctx.params["blocks"]
    max_tokens, workers = int(ctx.params["max_tokens"]), int(ctx.params["workers"])
    out_dir = _prepare_out(ctx.params["out"], "ingest")
    handler = _attach_log(out_dir)
    try:
        entries = corpus.read_manifest(manifest)
        banks = corpus.read_registry(registry)
        extractor = PretaggedBlockExtractor.from_file(blocks) if blocks else HeuristicPdfExtractor()
        rules = segmentation.SegmentationRules(max_tokens=max_tokens)
        manifest_dir = Path(manifest).parent

        def ingest_one(entry):
            pdf_path = Path(entry.path)
            if not pdf_path.is_absolute():
                pdf_path = manifest_dir / pdf_path
            try:
                data = pdf_path.read_bytes()
            except OSError as exc:
                return entry, None, [], [], f"cannot read {pdf_path}: {exc}"
            try:
                result = extractor.extract(data, entry.report_id)
            except ExtractionError as exc:
                return entry, None, [], [], str(exc)
            kept = corpus.filter_body(list(result.blocks))
            sequences, seg_warnings = segmentation.segment(kept, rules)
            warnings = list(result.warnings) + seg_warnings
            report = corpus.ReportDocument(entry.report_id, entry.bank_id, entry.category,
                                           entry.financial_year, max(result.page_count, 1))
            return entry, report, sequences, warnings, None

        if workers == 1 or len(entries) <= 1:
            outcomes = [ingest_one(e) for e in entries]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(ingest_one, entries))

        all_sequences, all_warnings, errors, reports = [], [], [], []
        for entry, report, sequences, warnings, error in outcomes:
            if error is not None:
                errors.append((entry.report_id, error))
                continue
            reports.append(report)
            all_sequences.extend(sequences)
            all_warnings.extend(warnings)
            if entry.bank_id not in banks:
                all_warnings.append(corpus.WarningRecord(
                    "unknown_bank", entry.report_id,
                    f"bank_id {entry.bank_id!r} not in registry"))

        counts: dict[str, int] = {}
        for seq in all_sequences:
            counts[seq.report_id] = counts.get(seq.report_id, 0) + 1
        stats = corpus.corpus_stats(reports, counts, banks.values())

        provenance = {"extractor": extractor.name, "max_tokens": str(max_tokens),
                      "basis": "post_filter"}
        tableio.write_sequences(out_dir / "sequences.tsv", all_sequences, provenance)
        tableio.write_corpus_stats(out_dir / "category_stats.tsv", stats, provenance)
        tableio.write_region_size(out_dir / "region_size.tsv", stats)
        tableio.write_warnings(out_dir / "warnings.tsv", all_warnings)
        if errors:
            tableio.write_error_manifest(out_dir / "errors.tsv", errors)
        _write_snapshot(out_dir, "ingest", {
            "manifest": str(manifest), "registry": str(registry), "blocks": blocks,
            "max_tokens": max_tokens, "workers": workers,
        })
        click.echo(f"ingested {len(reports)}/{len(entries)} reports, "
                   f"{len(all_sequences)} sequences -> {out_dir}")
        ctx.exit(EXIT_PARTIAL if errors else EXIT_OK)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_HARD)
    finally:
        logging.getLogger("tcfdscan").removeHandler(handler)
        handler.close()


@main.command()
@click.option("--sequences", "sequences_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Custom label file; defaults to the built-in label set.")
@click.option("--template", default=DEFAULT_TEMPLATE, show_default=True,
              help="Hypothesis template with one {} placeholder.")
@click.option("--general-template", default=None,
              help="Optional separate template for general (non-climate) labels.")
@click.option("--backend", default="mock", show_default=True,
              help="Scorer backend: 'mock' or 'model:<bundle dir>'.")
@click.option("--batch-size", default=32, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", default=None, help="Run directory (default: runs/<timestamp>-classify).")
@click.option("--config", "config_path", default=None, type=click.Path())
@click.pass_context
def classify(ctx, sequences_path, labels_path, template, general_template, backend,
             batch_size, workers, out, config_path):
    """Score every sequence against every label; writes the probability table."""
    _load_config_defaults(ctx, config_path)
    sequences_path, labels_path = ctx.params["sequences_path"], ctx.params["labels_path"]
    template, general_template = ctx.params["template"], ctx.params["general_template"]
    backend_spec = ctx.params["backend"]
    batch_size, workers = int(ctx.params["batch_size"]), int(ctx.params["workers"])
    out_dir = _prepare_out(ctx.params["out"], "classify")
    handler = _attach_log(out_dir)
    try:
        label_set = _load_labels(labels_path)
        scorer = load_backend(backend_spec)  # startup error (exit 1) before any scoring
        sequences = tableio.read_sequences(sequences_path)
        result = batch_classify(sequences, label_set, scorer, template=template,
                                batch_size=batch_size, workers=workers,
                                general_template=general_template)
        fingerprint = template_fingerprint(template)
        provenance = {"taxonomy_version": label_set.version}
        if general_template is not None:
            provenance["general_template_hash"] = template_fingerprint(general_template)
        tableio.write_probabilities(out_dir / "probabilities.tsv", list(result.rows),
                                    scorer.identity, fingerprint, provenance)
        if result.failures:
            tableio.write_failures(out_dir / "errors.tsv", list(result.failures))
        _write_snapshot(out_dir, "classify", {
            "sequences_path": str(sequences_path), "labels_path": labels_path,
            "template": template, "general_template": general_template,
            "backend": backend_spec, "batch_size": batch_size, "workers": workers,
        })
        click.echo(f"scored {len(sequences)} sequences x {len(label_set)} labels "
                   f"({len(result.failures)} failures) -> {out_dir}")
        ctx.exit(EXIT_PARTIAL if result.failures else EXIT_OK)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_HARD)
    finally:
        logging.getLogger("tcfdscan").removeHandler(handler)
        handler.close()


def _parse_pair(value: str) -> tuple[str, str]:
    parts = value.split(":")
    if len(parts) != 2 or not all(parts):
        raise ConfigError(f"trend pair must look like GENERAL_CODE:CLIMATE_CODE, got {value!r}")
    return parts[0], parts[1]


@main.command()
@click.option("--probabilities", "prob_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--registry", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Needed when grouping by region or size_class.")
@click.option("--keys", default="financial_year,label_code", show_default=True,
              help="Comma-separated group keys.")
@click.option("--report-weighted", is_flag=True, default=False,
              help="Weight each report equally instead of each sequence.")
@click.option("--trend-pair", "trend_pairs", multiple=True,
              help="Emit a trend series for GENERAL_CODE:CLIMATE_CODE (repeatable).")
@click.option("--fig-trends", is_flag=True, default=False,
              help="Emit trend series for the four standard general/climate pairs.")
@click.option("--fig-box", is_flag=True, default=False,
              help="Emit box statistics (quartiles, fences) for fine-grained labels.")
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, help="Run directory (default: runs/<timestamp>-aggregate).")
@click.option("--config", "config_path", default=None, type=click.Path())
@click.pass_context
def aggregate(ctx, prob_path, manifest, registry, keys, report_weighted, trend_pairs,
              fig_trends, fig_box, labels_path, out, config_path):
    """Aggregate the probability table into group means, trend series, and box statistics."""
    _load_config_defaults(ctx, config_path)
    prob_path, manifest, registry = ctx.params["prob_path"], ctx.params["manifest"], ctx.params["registry"]
    keys = ctx.params["keys"]
    report_weighted, fig_trends, fig_box = (bool(ctx.params["report_weighted"]),
                                            bool(ctx.params["fig_trends"]), bool(ctx.params["fig_box"]))
    trend_pairs = tuple(ctx.params["trend_pairs"] or ())
    out_dir = _prepare_out(ctx.params["out"], "aggregate")
    handler = _attach_log(out_dir)
    try:
        rows, prob_provenance = tableio.read_probabilities(prob_path)
        entries = corpus.read_manifest(manifest)
        reports = {e.report_id: corpus.ReportDocument(e.report_id, e.bank_id, e.category,
                                                      e.financial_year, 1)
                   for e in entries}
        banks = corpus.read_registry(registry) if registry else None
        key_list = [k.strip() for k in keys.split(",") if k.strip()]
        agg_fn = analytics.report_weighted_mean_by if report_weighted else analytics.mean_by
        aggregates = agg_fn(rows, key_list, reports=reports, banks=banks)
        provenance = {"keys": ",".join(key_list),
                      "weighting": "report" if report_weighted else "sequence"}
        provenance.update({k: v for k, v in prob_provenance.items() if k in ("backend", "template_hash")})
        tableio.write_aggregates(out_dir / "aggregate.tsv", key_list, aggregates, provenance)

        pairs = list(trend_pairs)
        if fig_trends:
            pairs.extend(f"{g}:{c}" for g, c in STANDARD_TREND_PAIRS)
        for pair in pairs:
            general_code, climate_code = _parse_pair(pair)
            series = analytics.trend_series(rows, (general_code, climate_code), reports)
            tableio.write_trend_series(out_dir / f"trend_{general_code}_{climate_code}.tsv", series)

        if fig_box:
            label_set = _load_labels(ctx.params["labels_path"])
            fine_codes = [l.code for l in label_set.select(Granularity.FINE)]
            present = {r.label_code for r in rows}
            stats = []
            for code in fine_codes:
                if code in present:
                    stats.append((analytics.distribution(rows, code),
                                  analytics.whisker_fences(rows, code)))
            tableio.write_box_stats(out_dir / "box_stats.tsv", stats, provenance)

        _write_snapshot(out_dir, "aggregate", {
            "prob_path": str(prob_path), "manifest": str(manifest), "registry": registry,
            "keys": keys, "report_weighted": report_weighted,
            "trend_pairs": list(trend_pairs), "fig_trends": fig_trends, "fig_box": fig_box,
            "labels_path": ctx.params["labels_path"],
        })
        click.echo(f"aggregated {len(rows)} rows into {len(aggregates)} groups -> {out_dir}")
        ctx.exit(EXIT_OK)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_HARD)
    finally:
        logging.getLogger("tcfdscan").removeHandler(handler)
        handler.close()


@main.command()
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--probabilities", "prob_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", default=0.5, show_default=True,
              help="Binarization threshold in (0,1); a label is predicted iff p >= threshold.")
@click.option("--include-none", is_flag=True, default=False,
              help="Include the NONE label in the F1 scores (it always appears in the matrix).")
@click.option("--out", default=None, help="Run directory (default: runs/<timestamp>-evaluate).")
@click.option("--config", "config_path", default=None, type=click.Path())
@click.pass_context
def evaluate(ctx, gold_path, prob_path, labels_path, threshold, include_none, out, config_path):
    """Score the probability table against gold annotations; writes report and matrix."""
    _load_config_defaults(ctx, config_path)
    gold_path, prob_path, labels_path = (ctx.params["gold_path"], ctx.params["prob_path"],
                                         ctx.params["labels_path"])
    threshold = float(ctx.params["threshold"])
    include_none = bool(ctx.params["include_none"])
    out_dir = _prepare_out(ctx.params["out"], "evaluate")
    handler = _attach_log(out_dir)
    try:
        label_set = _load_labels(labels_path)
        annotations, _ = evaluation.read_gold(gold_path, labels=label_set)
        rows, prob_provenance = tableio.read_probabilities(prob_path)
        backend_identity = prob_provenance.get("backend", "")
        report = evaluation.evaluate(annotations, rows, label_set, threshold,
                                     backend_identity=backend_identity, include_none=include_none)
        matrix = evaluation.probability_matrix(annotations, rows, label_set)
        tableio.write_evaluation_table(out_dir / "evaluation_table.tsv", report)
        tableio.write_evaluation_summary(out_dir / "evaluation_summary.json", report)
        tableio.write_matrix(out_dir / "probability_matrix.tsv", matrix,
                             {"backend": backend_identity, "taxonomy_version": label_set.version})
        _write_snapshot(out_dir, "evaluate", {
            "gold_path": str(gold_path), "prob_path": str(prob_path), "labels_path": labels_path,
            "threshold": threshold, "include_none": include_none,
        })
        click.echo(f"micro_f1={report.micro_f1:.4f} macro_f1={report.macro_f1:.4f} "
                   f"weighted_f1={report.weighted_f1:.4f} -> {out_dir}")
        ctx.exit(EXIT_OK)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_HARD)
    finally:
        logging.getLogger("tcfdscan").removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    main()
