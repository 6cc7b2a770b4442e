"""Command-line surface: validate, gen-signatures, score, detect-llm, report.

One JSON config file describes a run; command-line flags override individual
keys (flags win). `--mock` swaps all providers for the deterministic seeded
mocks so pipelines can run offline. Exit codes: 0 success, 1 usage/config
error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections.abc import Mapping, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .dataset import (
    DatasetFormat,
    ReportFormat,
    SurveyDataset,
    load_dataset,
    write_csv,
    write_json,
    write_report,
    write_text,
)
from .detector import (
    DETECTOR_TEMPLATE_VERSION,
    DetectionRun,
    DetectorConfig,
    detect_batch,
    detection_run_to_dict,
)
from .errors import ConfigError, DataError, ProviderError
from .gateway import DiskCache, ProviderGateway
from .model import Cohort, compute_length_stats
from .providers import (
    MockChatProvider,
    MockEmbeddingProvider,
    OpenAICompatChatProvider,
    OpenAICompatEmbeddingProvider,
)
from .report import (
    AverageConvention,
    DetectionReport,
    StudyStat,
    build_histogram,
    cohort_compare,
    detector_markdown_lines,
    extract_cases,
    sweep_markdown_lines,
    threshold_sweep,
)
from .scoring import apply_irrelevance, empty_scored, score_response
from .signatures import (
    TEMPLATE_VERSION,
    Sentiment,
    SignatureGenerationError,
    StrategyKind,
    dedupe_signatures,
    generate_signatures,
    load_signature_set,
    save_signature_set,
    signature_store_path,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3

DEFAULT_MODELS = ("gpt-3.5-turbo", "gpt-4", "gpt-4o", "gpt-4o-mini")
DEFAULT_TEMPERATURES = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_THRESHOLDS = (0.7, 0.75, 0.8, 0.85, 0.9)
DEFAULT_SENTIMENT_NAMES = ("positive", "negative", "neutral")


@dataclass
class RunConfig:
    """Everything a run needs; serializable as the config-file key set."""

    dataset: str | None = None
    dataset_format: str = "auto"
    cache_dir: str = ".surveyguard-cache"
    output_dir: str = "surveyguard-out"
    mock: bool = False
    seed: int = 0
    mock_embedding_dim: int = 16
    models: tuple[str, ...] = DEFAULT_MODELS
    temperatures: tuple[float, ...] = DEFAULT_TEMPERATURES
    sentiments: tuple[str, ...] = DEFAULT_SENTIMENT_NAMES
    strategies: tuple[str, ...] = ("basic",)
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    low_threshold: float = 0.0
    k_high: int = 5
    bin_width: float = 0.05
    exclude_empty: bool = False
    scores_mode: str = "summary"
    detector_model: str = "gpt-3.5-turbo"
    detector_temperature: float = 0.0
    tolerate_parse_failures: bool = True
    chat_provider: str = "openai"
    embedding_provider: str = "openai"
    embedding_model: str = "text-embedding-3-small"
    chat_base_url: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    base_url_env: str = "OPENAI_BASE_URL"


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}
_TUPLE_KEYS = {"models", "temperatures", "sentiments", "strategies", "thresholds"}


def load_config_file(path: Path | str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {p} must contain a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return raw


def resolve_config(config_path: str | None, overrides: Mapping[str, object]) -> RunConfig:
    """Defaults, then config file, then flags; flags win."""
    merged: dict = {}
    if config_path:
        merged.update(load_config_file(config_path))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    for key in _TUPLE_KEYS & set(merged):
        merged[key] = tuple(merged[key])
    cfg = replace(RunConfig(), **merged)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: RunConfig) -> None:
    if not cfg.models:
        raise ConfigError("models must be non-empty")
    if not cfg.temperatures:
        raise ConfigError("temperatures must be non-empty")
    for t in cfg.temperatures:
        if not 0.0 <= float(t) <= 1.0:
            raise ConfigError(f"temperature {t} out of [0, 1]")
    if not cfg.strategies:
        raise ConfigError("strategies must be non-empty")
    for s in cfg.strategies:
        if s not in ("basic", "sentiment"):
            raise ConfigError(f'unknown strategy "{s}" (expected basic or sentiment)')
    if not cfg.thresholds:
        raise ConfigError("thresholds must be non-empty")
    if list(cfg.thresholds) != sorted(cfg.thresholds):
        raise ConfigError("thresholds must be sorted ascending")
    if cfg.scores_mode not in ("summary", "full"):
        raise ConfigError(f'scores_mode must be "summary" or "full", got "{cfg.scores_mode}"')
    if not 0.0 <= cfg.detector_temperature <= 1.0:
        raise ConfigError(f"detector temperature {cfg.detector_temperature} out of [0, 1]")
    for s in cfg.sentiments:
        try:
            Sentiment(s)
        except ValueError:
            raise ConfigError(f'unknown sentiment "{s}"') from None


def provider_ids(cfg: RunConfig) -> tuple[str, str]:
    """Stable provider identifiers for provenance, no network needed."""
    if cfg.mock:
        return (
            f"mock-chat-{cfg.seed}",
            f"mock-embed-{cfg.seed}-d{cfg.mock_embedding_dim}",
        )
    return (cfg.chat_provider, f"{cfg.embedding_provider}-embed-{cfg.embedding_model}")


def build_gateway(cfg: RunConfig) -> ProviderGateway:
    cache = DiskCache(Path(cfg.cache_dir))
    if cfg.mock:
        chat = MockChatProvider(seed=cfg.seed)
        embed = MockEmbeddingProvider(seed=cfg.seed, dim=cfg.mock_embedding_dim)
    else:
        if cfg.chat_provider != "openai":
            raise ConfigError(f'unknown chat provider "{cfg.chat_provider}"')
        if cfg.embedding_provider != "openai":
            raise ConfigError(f'unknown embedding provider "{cfg.embedding_provider}"')
        chat = OpenAICompatChatProvider(
            base_url=cfg.chat_base_url,
            base_url_env=cfg.base_url_env,
            api_key_env=cfg.api_key_env,
        )
        embed = OpenAICompatEmbeddingProvider(
            model=cfg.embedding_model,
            base_url=cfg.chat_base_url,
            base_url_env=cfg.base_url_env,
            api_key_env=cfg.api_key_env,
        )
    return ProviderGateway(cache=cache, chat_provider=chat, embedding_provider=embed)


def _load_dataset(cfg: RunConfig) -> SurveyDataset:
    if not cfg.dataset:
        raise ConfigError("no dataset configured (use --dataset or the config file)")
    fmt = None if cfg.dataset_format == "auto" else DatasetFormat(cfg.dataset_format)
    return load_dataset(cfg.dataset, fmt)


@contextmanager
def _exclusive_output(out_dir: Path):
    """One run owns its output directory; a stale lock must be removed manually."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"output directory {out_dir} is locked (stale {lock}?)") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _print_gateway_stats(gateway: ProviderGateway) -> None:
    stats = gateway.stats
    print(f"provider calls: {stats.provider_calls} (cache hits: {stats.cache_hits})")


def _strategy_kinds(cfg: RunConfig) -> list[StrategyKind]:
    return [StrategyKind(s) for s in cfg.strategies]


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(cfg: RunConfig) -> int:
    dataset = _load_dataset(cfg)
    print(
        f"studies: {len(dataset.studies)}, questions: {len(dataset.questions)}, "
        f"responses: {len(dataset.responses)}"
    )
    questions_by_study: dict[str, list[str]] = {}
    for q in dataset.questions:
        questions_by_study.setdefault(q.study_id, []).append(q.question_id)
    for study in dataset.studies:
        qids = set(questions_by_study.get(study.study_id, []))
        responses = [r for r in dataset.responses if r.question_id in qids]
        if responses:
            stats = compute_length_stats(responses)
            length = f"avg length {stats.mean:.2f} +/- {stats.std_dev:.2f} words"
        else:
            length = "no responses"
        print(
            f"{study.study_id} [{study.cohort.value}] ({study.collected_month_year}): "
            f"{len(responses)} responses, {length}"
        )
    print("dataset OK")
    return EXIT_OK


def cmd_gen_signatures(cfg: RunConfig) -> int:
    dataset = _load_dataset(cfg)
    gateway = build_gateway(cfg)
    out_dir = Path(cfg.output_dir)
    store_dir = out_dir / "signatures"
    sentiments = tuple(Sentiment(s) for s in cfg.sentiments)
    open_questions = dataset.open_questions()
    if not open_questions:
        raise DataError("dataset has no open-ended questions")

    aborted: list[str] = []
    generated = 0
    failures = 0
    removed = 0
    with _exclusive_output(out_dir):
        for kind in _strategy_kinds(cfg):
            for question in open_questions:
                try:
                    signature_set = generate_signatures(
                        question,
                        kind,
                        cfg.models,
                        cfg.temperatures,
                        gateway,
                        sentiments=sentiments,
                    )
                except SignatureGenerationError as exc:
                    aborted.append(f"{kind.value}/{question.question_id}")
                    print(f"aborted: {exc}", file=sys.stderr)
                    continue
                signature_set = dedupe_signatures(signature_set)
                save_signature_set(signature_set, store_dir)
                generated += len(signature_set.signatures)
                failures += len(signature_set.failures)
                removed += signature_set.duplicates_removed
                print(
                    f"{kind.value}/{question.question_id}: "
                    f"{len(signature_set.signatures)} signatures, "
                    f"{len(signature_set.failures)} failed cells, "
                    f"{signature_set.duplicates_removed} duplicates removed"
                )
        print(
            f"questions: {len(open_questions)}, strategies: {len(cfg.strategies)}, "
            f"signatures: {generated}, failed cells: {failures}, "
            f"duplicates removed: {removed}, aborted questions: {len(aborted)}"
        )
        _print_gateway_stats(gateway)
    if aborted and len(aborted) == len(open_questions) * len(cfg.strategies):
        raise ProviderError(f"all questions aborted: {', '.join(aborted)}")
    return EXIT_OK


def _score_strategy(
    cfg: RunConfig,
    dataset: SurveyDataset,
    gateway: ProviderGateway,
    kind: StrategyKind,
    store_dir: Path,
):
    """Score every open-ended response against its question's signatures."""
    questions = dataset.open_questions()
    missing = [
        q.question_id
        for q in questions
        if not signature_store_path(store_dir, kind, q.question_id).exists()
    ]
    if missing:
        raise DataError(
            f"missing signature store for strategy {kind.value}, "
            f"question(s): {', '.join(sorted(missing))}; run gen-signatures first"
        )
    scored_rows = []
    signature_texts: dict[str, str] = {}
    for question in questions:
        signature_set = load_signature_set(store_dir, kind, question.question_id)
        pairs = []
        for sig in sorted(signature_set.signatures, key=lambda s: s.signature_id):
            signature_texts[sig.signature_id] = sig.text
            pairs.append((sig.signature_id, gateway.embed(sig.text)))
        for response in dataset.responses_for_question(question.question_id):
            if not response.text.strip():
                scored = empty_scored(response.response_id)
            else:
                scored = score_response(
                    response.response_id, gateway.embed(response.text), pairs
                )
                scored = apply_irrelevance(scored, cfg.low_threshold)
            scored_rows.append((question.study_id, question.question_id, scored))
    scored_rows.sort(key=lambda item: item[2].response_id)
    return scored_rows, signature_texts


def _scored_dump(cfg: RunConfig, scored_rows) -> list[dict]:
    rows = []
    for study_id, question_id, scored in scored_rows:
        row = {
            "response_id": scored.response_id,
            "question_id": question_id,
            "study_id": study_id,
            "final_score": scored.final_score,
            "best_signature_id": scored.best_signature_id,
            "flags": sorted(scored.flags),
            "ai_at": {
                f"{th:g}": bool(scored.final_score is not None and scored.final_score >= th)
                for th in cfg.thresholds
            },
        }
        if cfg.scores_mode == "full":
            row["per_signature"] = [
                {"signature_id": rec.signature_id, "score": rec.score}
                for rec in scored.per_signature
            ]
        rows.append(row)
    return rows


def cmd_score(cfg: RunConfig) -> int:
    dataset = _load_dataset(cfg)
    gateway = build_gateway(cfg)
    out_dir = Path(cfg.output_dir)
    store_dir = out_dir / "signatures"
    cohorts = {s.study_id: s.cohort for s in dataset.studies}
    response_texts = {r.response_id: r.text for r in dataset.responses}

    with _exclusive_output(out_dir):
        scored_by_strategy: dict[str, dict[str, list]] = {}
        for kind in _strategy_kinds(cfg):
            scored_rows, signature_texts = _score_strategy(cfg, dataset, gateway, kind, store_dir)
            by_study: dict[str, list] = {}
            for study_id, _question_id, scored in scored_rows:
                by_study.setdefault(study_id, []).append(scored)
            scored_by_strategy[kind.value] = by_study

            write_json(out_dir / f"scored_{kind.value}.json", _scored_dump(cfg, scored_rows))

            all_scored = [scored for _, _, scored in scored_rows]
            cases = extract_cases(
                all_scored, response_texts, signature_texts, cfg.k_high, cfg.low_threshold
            )
            write_json(
                out_dir / f"cases_{kind.value}.json",
                {
                    "strategy": kind.value,
                    "k_high": cfg.k_high,
                    "low_threshold": cfg.low_threshold,
                    **cases.to_dict(),
                },
            )

            scores_by_cohort: dict[Cohort, list[float]] = {}
            for study_id, _question_id, scored in scored_rows:
                if scored.final_score is not None:
                    scores_by_cohort.setdefault(cohorts[study_id], []).append(scored.final_score)
            if scores_by_cohort:
                histogram = build_histogram(scores_by_cohort, cfg.bin_width)
                write_csv(
                    out_dir / f"histogram_{kind.value}.csv",
                    ["bin_start", "bin_end", "cohort", "count"],
                    histogram.to_rows(),
                )

        sweep = threshold_sweep(
            scored_by_strategy,
            cfg.thresholds,
            [k.value for k in _strategy_kinds(cfg)],
            cohorts,
            exclude_empty=cfg.exclude_empty,
        )
        write_json(out_dir / "sweep.json", sweep.to_dict())
        write_text(out_dir / "sweep.md", "\n".join(sweep_markdown_lines(sweep.to_dict())) + "\n")
        csv_rows = []
        for row in sweep.rows:
            for sid in sweep.study_order:
                if sid in row.per_study:
                    pct = row.per_study[sid]
                    csv_rows.append(
                        [f"{row.threshold:g}", row.strategy, sid, pct.flagged, pct.total, pct.rendered]
                    )
            for cohort, pct in row.cohort_averages.items():
                csv_rows.append(
                    [
                        f"{row.threshold:g}",
                        row.strategy,
                        f"average_{cohort.value}",
                        pct.flagged,
                        pct.total,
                        pct.rendered,
                    ]
                )
        write_csv(
            out_dir / "sweep.csv",
            ["threshold", "strategy", "study", "flagged", "total", "percent"],
            csv_rows,
        )

        total = sum(len(v) for by_study in scored_by_strategy.values() for v in by_study.values())
        print(
            f"scored {total} responses across {len(cohorts)} studies "
            f"({', '.join(cfg.strategies)})"
        )
        _print_gateway_stats(gateway)
    return EXIT_OK


def cmd_detect_llm(cfg: RunConfig) -> int:
    if cfg.detector_model not in cfg.models:
        raise ConfigError(
            f'detector model "{cfg.detector_model}" is not in the configured model set'
        )
    dataset = _load_dataset(cfg)
    gateway = build_gateway(cfg)
    out_dir = Path(cfg.output_dir)
    config = DetectorConfig(
        model_id=cfg.detector_model,
        temperature=cfg.detector_temperature,
        tolerate_parse_failures=cfg.tolerate_parse_failures,
    )
    with _exclusive_output(out_dir):
        run = detect_batch(dataset, config, gateway)
        comparison = _cohort_comparison_for_run(run, dataset)
        dump = detection_run_to_dict(run, comparison)
        write_json(out_dir / f"detector_{cfg.detector_model}.json", dump)
        write_text(
            out_dir / f"detector_{cfg.detector_model}.md",
            "\n".join(detector_markdown_lines(dump)) + "\n",
        )
        for study in run.studies:
            print(f"{study.study_id}: {study.percentage.rendered}% flagged AI")
        if comparison:
            print(
                f"cohort averages ({comparison['convention']}): "
                f"pre-2022 {comparison['pre_2022']['rendered']}%, "
                f"post-2022 {comparison['post_2022']['rendered']}%"
            )
        _print_gateway_stats(gateway)
    return EXIT_OK


def _cohort_comparison_for_run(run: DetectionRun, dataset: SurveyDataset) -> dict | None:
    cohorts = {s.study_id: s.cohort for s in dataset.studies}
    stats = [
        StudyStat(study_id=s.study_id, cohort=cohorts[s.study_id], percent=s.percentage)
        for s in run.studies
    ]
    try:
        return cohort_compare(stats, AverageConvention.UNWEIGHTED_MEAN).to_dict()
    except ValueError:
        return None  # single-cohort dataset: no comparison possible


def _read_dump(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupted dump file: {path}: {exc}") from exc


def _build_provenance(cfg: RunConfig) -> dict:
    chat_id, embed_id = provider_ids(cfg)
    cache = DiskCache(Path(cfg.cache_dir))
    return {
        "template_versions": {"signatures": TEMPLATE_VERSION, "detector": DETECTOR_TEMPLATE_VERSION},
        "grid": {
            "models": list(cfg.models),
            "temperatures": list(cfg.temperatures),
            "sentiments": list(cfg.sentiments),
            "strategies": list(cfg.strategies),
        },
        "conventions": {
            "sweep_average": AverageConvention.POOLED_WEIGHTED.value,
            "detector_average": AverageConvention.UNWEIGHTED_MEAN.value,
            "threshold_rule": "inclusive_ge",
            "rounding": "two_decimals_half_up",
        },
        "providers": {"chat": chat_id, "embedding": embed_id},
        "detector": {"model": cfg.detector_model, "temperature": cfg.detector_temperature},
        "thresholds": list(cfg.thresholds),
        "low_threshold": cfg.low_threshold,
        "bin_width": cfg.bin_width,
        "seed": cfg.seed,
        "cache": {"dir": Path(cfg.cache_dir).name, "entries": cache.entry_count()},
    }


def cmd_report(cfg: RunConfig) -> int:
    out_dir = Path(cfg.output_dir)
    detector_paths = sorted(out_dir.glob("detector_*.json"))
    sweep_path = out_dir / "sweep.json"
    case_paths = sorted(out_dir.glob("cases_*.json"))
    if not detector_paths and not sweep_path.exists():
        raise DataError(f"no dumps found in {out_dir}; run score or detect-llm first")

    llm_sections = [_read_dump(p) for p in detector_paths]
    signature_section = None
    if sweep_path.exists():
        signature_section = {"sweep": _read_dump(sweep_path)}
        cases = {}
        for path in case_paths:
            dump = _read_dump(path)
            cases[dump.get("strategy", path.stem.removeprefix("cases_"))] = dump
        if cases:
            signature_section["cases"] = cases

    report = DetectionReport(
        provenance=_build_provenance(cfg),
        llm_detection=llm_sections,
        signature_detection=signature_section,
    )
    with _exclusive_output(out_dir):
        write_report(report, out_dir / "report.json", ReportFormat.JSON)
        write_report(report, out_dir / "report.md", ReportFormat.MARKDOWN_TABLE)
        write_report(report, out_dir / "report.csv", ReportFormat.CSV)
    sections = []
    if llm_sections:
        sections.append(f"{len(llm_sections)} detector section(s)")
    if signature_section:
        sections.append("signature section")
    print(f"report written to {out_dir / 'report.md'} ({', '.join(sections)})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit code 1, not argparse's default 2
        raise _UsageError(message)


def _csv_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in _csv_list(text)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--dataset", help="dataset path (CSV bundle dir or JSON file)")
    common.add_argument(
        "--format",
        dest="dataset_format",
        choices=["auto", "csv_bundle", "single_json"],
        help="dataset format (default: auto-detect)",
    )
    common.add_argument("--cache-dir", dest="cache_dir", help="provider cache directory")
    common.add_argument("--output-dir", dest="output_dir", help="output directory")
    common.add_argument(
        "--mock",
        action="store_const",
        const=True,
        default=None,
        help="use deterministic offline mock providers",
    )
    common.add_argument("--seed", type=int, help="seed for the mock providers")

    parser = _Parser(prog="surveyguard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="load and lint a dataset")

    gen = sub.add_parser(
        "gen-signatures", parents=[common], help="materialize reference signatures per question"
    )
    gen.add_argument("--strategy", choices=["basic", "sentiment"], help="single strategy override")
    gen.add_argument("--models", type=_csv_list, help="comma-separated model ids")
    gen.add_argument("--temps", type=_csv_floats, dest="temperatures", help="comma-separated temperatures")
    gen.add_argument("--sentiments", type=_csv_list, help="comma-separated sentiments")

    score = sub.add_parser(
        "score", parents=[common], help="embed, score, sweep thresholds, export artifacts"
    )
    score.add_argument("--strategy", type=_csv_list, dest="strategies", help="strategies to score")
    score.add_argument("--thresholds", type=_csv_floats, help="comma-separated thresholds")
    score.add_argument("--low-threshold", dest="low_threshold", type=float, help="irrelevance cutoff")
    score.add_argument("--k-high", dest="k_high", type=int, help="top-k cases to extract")
    score.add_argument("--bin-width", dest="bin_width", type=float, help="histogram bin width")
    score.add_argument("--scores", dest="scores_mode", choices=["summary", "full"])
    score.add_argument(
        "--exclude-empty",
        dest="exclude_empty",
        action="store_const",
        const=True,
        default=None,
        help="drop empty responses from percentage denominators",
    )

    detect = sub.add_parser(
        "detect-llm", parents=[common], help="zero-shot LLM classification of responses"
    )
    detect.add_argument("--model", dest="detector_model", help="detector model id")
    detect.add_argument(
        "--temperature", dest="detector_temperature", type=float, help="detector temperature"
    )
    detect.add_argument(
        "--strict",
        dest="tolerate_parse_failures",
        action="store_const",
        const=False,
        default=None,
        help="abort on unparseable detector output",
    )

    sub.add_parser("report", parents=[common], help="merge dumps into a combined report")
    return parser


_OVERRIDE_KEYS = (
    "dataset",
    "dataset_format",
    "cache_dir",
    "output_dir",
    "mock",
    "seed",
    "models",
    "temperatures",
    "sentiments",
    "strategies",
    "thresholds",
    "low_threshold",
    "k_high",
    "bin_width",
    "exclude_empty",
    "scores_mode",
    "detector_model",
    "detector_temperature",
    "tolerate_parse_failures",
)

_COMMANDS = {
    "validate": cmd_validate,
    "gen-signatures": cmd_gen_signatures,
    "score": cmd_score,
    "detect-llm": cmd_detect_llm,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}
        if getattr(args, "strategy", None) and args.command == "gen-signatures":
            overrides["strategies"] = [args.strategy]
        cfg = resolve_config(args.config, overrides)
        return _COMMANDS[args.command](cfg)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER


def entry() -> None:
    sys.exit(main())
