"""Command-line entry point.

Subcommands:

* ``simulate``  materialize a drift stream file from a scenario
* ``run``       online loop for one decoding strategy
* ``compare``   all three strategies on one stream, one results table
* ``trie``      inspect or dump a trie snapshot
* ``train-lm``  build and save the add-k n-gram model

Exit codes: 0 success, 1 usage error, 2 configuration or validation error,
3 runtime error (for example an unreachable external logit provider).

A scenario is a JSON file declaring templates, concepts, the drift
schedule, the seed, and engine defaults; see the bundled
``scenarios/telco_abrupt.json`` (addressable as ``builtin:telco-abrupt``)
for the full shape. All randomness flows from the single scenario seed, so
repeated invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from random import Random
from typing import Sequence

from .errors import (
    CorruptSnapshot,
    EmptyCorpus,
    EmptyInput,
    InvalidSchedule,
    MissingSubstitution,
    ProviderUnavailable,
    TrieFusionError,
    UnknownId,
    UnknownToken,
    VersionMismatch,
)
from .fusion import (
    CONTINUITY_SCALE,
    DEFAULT_TOP_K,
    Decoder,
    DecoderConfig,
    STRATEGIES,
)
from .harness import (
    DEFAULT_MAX_NEW_TOKENS,
    ItemRecord,
    drift_adaptation_rate,
    run_online,
    warm_start,
)
from .lm import ExternalLogitProvider, LogitProvider, NGramModel, train_ngram
from .metrics import METRIC_FIELDS, aggregate_with_ci
from .prior import ScoringWeights
from .stream import (
    ConceptSpec,
    DEFAULT_TIMESTAMP_STEP,
    DriftSchedule,
    PlaceholderSpan,
    StreamItem,
    generate_stream,
    render_template,
    rolling_drift,
)
from .trie import PrefixTrie
from .vocab import VocabRegistry, tokenize

ENV_SCENARIO = "TRIEFUSION_SCENARIO"
STREAM_FORMAT = "triefusion-stream/1"
DRIFT_GRACE_ITEMS = 5
STRATEGY_ORDER = ("greedy", "temp-scaled", "odd")

TABLE_HEADER_NOTES = (
    "# mean metric value per strategy over all stream items",
    "# edit_similarity = 1 - normalized character edit distance (higher is better)",
    "# bleu: sentence level, orders <= 4 capped at hypothesis length, add-one smoothing, brevity penalty",
    "# rouge_l: LCS F1 over whitespace tokens",
    "# chrf: character n-grams <= 6, beta = 2, scale 0-100",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise UsageError(message)


# ---------------------------------------------------------------------------
# scenario loading and experiment assembly


def builtin_scenario_path(name: str) -> Path:
    packaged = resources.files("triefusion") / "scenarios" / f"{name.replace('-', '_')}.json"
    if not packaged.is_file():
        raise ValueError(f"no bundled scenario named {name!r}")
    return Path(str(packaged))


def load_scenario(source: str) -> dict:
    if source.startswith("builtin:"):
        path = builtin_scenario_path(source.split(":", 1)[1])
    else:
        path = Path(source)
    with open(path, encoding="utf-8") as fh:
        scenario = json.load(fh)
    for key in ("templates", "concepts", "schedule", "length", "seed"):
        if key not in scenario:
            raise ValueError(f"scenario is missing the {key!r} key")
    return scenario


def _parse_concepts(scenario: dict) -> list[ConceptSpec]:
    return [
        ConceptSpec(entry["id"], dict(entry["substitutions"]))
        for entry in scenario["concepts"]
    ]


def _parse_schedule(scenario: dict, seed: int) -> DriftSchedule:
    raw = scenario["schedule"]
    kind = raw.get("kind", "abrupt")
    ramp: tuple[float, ...] = ()
    if "ramp" in raw:
        ramp_spec = raw["ramp"]
        if isinstance(ramp_spec, dict):
            length = int(scenario["length"])
            start, end = float(ramp_spec["start"]), float(ramp_spec["end"])
            if length == 1:
                ramp = (end,)
            else:
                ramp = tuple(start + (end - start) * i / (length - 1) for i in range(length))
        else:
            ramp = tuple(float(p) for p in ramp_spec)
    return DriftSchedule(
        kind=kind,
        concepts=tuple(_parse_concepts(scenario)),
        switch_points=tuple(int(p) for p in raw.get("switch_points", ())),
        mixing_ramp=ramp,
        seed=seed,
    )


@dataclass
class Experiment:
    scenario: dict
    seed: int
    registry: VocabRegistry
    eos_id: int
    schedule: DriftSchedule
    stream: list[StreamItem]
    warmup_corpus: list[list[int]]
    warmup_into_trie: bool
    timestamp_step: float

    @property
    def concepts(self) -> tuple[ConceptSpec, ...]:
        return self.schedule.concepts


def _build_warmup_texts(scenario: dict, concepts: Sequence[ConceptSpec], seed: int) -> list[str]:
    warm = scenario.get("warmup") or {}
    count = int(warm.get("sentences", 0))
    if count == 0:
        return []
    concept_id = warm.get("concept", concepts[0].concept_id)
    by_id = {c.concept_id: c for c in concepts}
    if concept_id not in by_id:
        raise ValueError(f"warmup concept {concept_id!r} not declared")
    templates = scenario["templates"]
    rng = Random(f"{seed}/warmup")
    return [
        render_template(templates[rng.randrange(len(templates))], by_id[concept_id])
        for _ in range(count)
    ]


def build_experiment(
    scenario: dict,
    seed_override: int | None = None,
    stream_items: list[dict] | None = None,
) -> Experiment:
    """Registry, warmup corpus, and stream, all in one deterministic order.

    Ids are assigned end-marker first, then warmup text, then the stream in
    index order, so rebuilding from a stream file lands on the same id
    space as generating directly from the scenario.
    """
    seed = int(scenario["seed"]) if seed_override is None else seed_override
    # the scenario carried forward (e.g. into stream-file headers) must
    # reflect the seed actually used
    scenario = {**scenario, "seed": seed}
    registry = VocabRegistry()
    eos_id = registry.add(scenario.get("eos", "</s>"))
    concepts = _parse_concepts(scenario)
    warmup_texts = _build_warmup_texts(scenario, concepts, seed)
    warmup_corpus = [tokenize(text, registry, grow=True) + [eos_id] for text in warmup_texts]
    schedule = _parse_schedule(scenario, seed)
    timestamp_step = float(scenario.get("timestamp_step", DEFAULT_TIMESTAMP_STEP))

    if stream_items is None:
        stream = generate_stream(
            scenario["templates"], schedule, int(scenario["length"]), registry, timestamp_step
        )
    else:
        stream = []
        for row in stream_items:
            ids = tuple(tokenize(row["reference"], registry, grow=True))
            prompt_len = int(row["prompt_len"])
            spans = tuple(PlaceholderSpan(n, int(s), int(e), v) for n, s, e, v in row["spans"])
            stream.append(
                StreamItem(
                    index=int(row["index"]),
                    prompt=ids[:prompt_len],
                    reference=ids,
                    timestamp=float(row["timestamp"]),
                    concept_id=row["concept"],
                    prompt_text=" ".join(row["reference"].split()[:prompt_len]),
                    reference_text=" ".join(row["reference"].split()),
                    spans=spans,
                )
            )

    warm = scenario.get("warmup") or {}
    return Experiment(
        scenario=scenario,
        seed=seed,
        registry=registry,
        eos_id=eos_id,
        schedule=schedule,
        stream=stream,
        warmup_corpus=warmup_corpus,
        warmup_into_trie=bool(warm.get("insert_into_trie", True)),
        timestamp_step=timestamp_step,
    )


# ---------------------------------------------------------------------------
# engine configuration


def _engine_settings(scenario: dict, args) -> dict:
    engine = scenario.get("engine") or {}
    weight_spec = engine.get("weights") or {}
    if getattr(args, "weights", None):
        parts = [float(p) for p in args.weights.split(",")]
        if len(parts) != 3:
            raise ValueError("--weights takes three comma-separated values")
        weights = ScoringWeights(*parts)
    else:
        weights = ScoringWeights(
            frequency=float(weight_spec.get("frequency", 1.0 / 3.0)),
            length=float(weight_spec.get("length", 1.0 / 3.0)),
            recency=float(weight_spec.get("recency", 1.0 / 3.0)),
        )
    return {
        "weights": weights,
        "n_max": int(getattr(args, "n_max", None) or engine.get("n_max", 5)),
        "top_k": int(getattr(args, "top_k", None) or engine.get("top_k", DEFAULT_TOP_K)),
        "continuity_scale": float(engine.get("continuity_scale", CONTINUITY_SCALE)),
        "fixed_temperature": float(
            getattr(args, "fixed_temperature", None) or engine.get("fixed_temperature", 1.0)
        ),
        "max_new_tokens": int(
            getattr(args, "max_new_tokens", None)
            or engine.get("max_new_tokens", DEFAULT_MAX_NEW_TOKENS)
        ),
    }


def build_provider(experiment: Experiment, args) -> LogitProvider:
    base = experiment.scenario.get("base_lm") or {}
    kind = getattr(args, "lm", None) or base.get("kind", "builtin")
    if getattr(args, "lm_model", None):
        model = NGramModel.load(args.lm_model)
        if model.vocab_size != len(experiment.registry):
            raise ValueError(
                f"model vocabulary ({model.vocab_size}) does not match the "
                f"experiment vocabulary ({len(experiment.registry)}); retrain "
                "against the exported vocab"
            )
        return model
    if kind == "external":
        endpoint = getattr(args, "endpoint", None) or base.get("endpoint")
        if not endpoint:
            raise ValueError("external base model needs --endpoint host:port")
        if isinstance(endpoint, str):
            host, _, port = endpoint.rpartition(":")
            endpoint = (host, int(port))
        return ExternalLogitProvider.connect_tcp(
            endpoint[0], int(endpoint[1]), len(experiment.registry)
        )
    if kind != "builtin":
        raise ValueError(f"unknown base_lm kind {kind!r}")
    if not experiment.warmup_corpus:
        raise ValueError("builtin base model needs warmup sentences to train on")
    order = int(getattr(args, "order", None) or base.get("order", 3))
    smoothing = float(getattr(args, "smoothing_k", None) or base.get("smoothing_k", 1.0))
    return train_ngram(
        experiment.warmup_corpus, order, smoothing, vocab_size=len(experiment.registry)
    )


def execute_strategy(
    experiment: Experiment, provider: LogitProvider, strategy: str, settings: dict
) -> tuple[list[ItemRecord], PrefixTrie]:
    trie = PrefixTrie(n_max=settings["n_max"])
    if experiment.warmup_into_trie and experiment.warmup_corpus:
        warm_start(trie, experiment.warmup_corpus, experiment.timestamp_step * 0.5)
    decoder = Decoder(
        DecoderConfig(
            strategy=strategy,
            weights=settings["weights"],
            top_k=settings["top_k"],
            continuity_scale=settings["continuity_scale"],
            fixed_temperature=settings["fixed_temperature"],
        )
    )
    records = run_online(
        experiment.stream,
        trie,
        provider,
        decoder,
        experiment.registry,
        max_new_tokens=settings["max_new_tokens"],
        eos_id=experiment.eos_id,
    )
    return records, trie


def summarize_strategy(experiment: Experiment, records: list[ItemRecord], strategy: str) -> dict:
    means, intervals = aggregate_with_ci(
        [r.metrics for r in records], seed=experiment.seed
    )
    summary = {
        "strategy": strategy,
        "items": len(records),
        "means": means.as_dict(),
        "ci95": {name: list(bounds) for name, bounds in intervals.items()},
        "bypass_steps": sum(r.bypass_steps for r in records),
        "total_steps": sum(len(r.steps) for r in records),
    }
    if experiment.schedule.switch_points:
        switch = experiment.schedule.switch_points[0]
        post = [r.metrics for r in records if r.index >= switch]
        pre = [r.metrics for r in records if r.index < switch]
        if pre and post:
            matched, total = drift_adaptation_rate(
                experiment.stream, records, experiment.concepts[0], switch + DRIFT_GRACE_ITEMS
            )
            summary["drift"] = {
                "switch_index": switch,
                "pre_rouge_l": sum(m.rouge_l for m in pre) / len(pre),
                "post_rouge_l": sum(m.rouge_l for m in post) / len(post),
                "drifted_spans_matched": matched,
                "drifted_spans_total": total,
                "drifted_span_rate": (matched / total) if total else None,
            }
    return summary


# ---------------------------------------------------------------------------
# output writers


def _dump_json_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_results(records: list[ItemRecord], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(_dump_json_line(record.to_dict()))


def write_trace(records: list[ItemRecord], path: Path, registry: VocabRegistry) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            rows = zip(record.steps, record.generated, record.priors)
            for step, (diag, token, prior) in enumerate(rows):
                fh.write(
                    _dump_json_line(
                        {
                            "item": record.index,
                            "step": step,
                            "gamma": diag.gamma,
                            "omega": diag.omega,
                            "continuity": diag.continuity,
                            "temperature": diag.temperature,
                            "temperature_clamped": diag.temperature_clamped,
                            "c_lm": diag.c_lm,
                            "c_trie": diag.c_trie,
                            "c_lm_adjusted": diag.c_lm_adjusted,
                            "c_trie_adjusted": diag.c_trie_adjusted,
                            "bypass": diag.bypass,
                            "chosen": int(token),
                            "chosen_token": registry.token_of(token),
                            "prior": (
                                None
                                if prior is None
                                else [[int(t), p] for t, p in prior]
                            ),
                        }
                    )
                )


def write_table(summaries: list[dict], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for note in TABLE_HEADER_NOTES:
            fh.write(note + "\n")
        fh.write("strategy\t" + "\t".join(METRIC_FIELDS) + "\n")
        for summary in summaries:
            row = [summary["strategy"]] + [
                f"{summary['means'][name]:.4f}" for name in METRIC_FIELDS
            ]
            fh.write("\t".join(row) + "\n")


def write_summary(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _telemetry(experiment: Experiment) -> list[list]:
    window = int(experiment.scenario.get("telemetry_window", 0))
    if window < 1:
        return []
    refs = [item.reference for item in experiment.stream]
    if len(refs) < 2 * window:
        return []
    return [[index, distance] for index, distance in rolling_drift(refs, window)]


# ---------------------------------------------------------------------------
# subcommands


def _scenario_arg(args) -> str:
    source = getattr(args, "scenario", None) or os.environ.get(ENV_SCENARIO)
    if not source:
        raise ValueError(
            f"no scenario given: pass --scenario or set {ENV_SCENARIO}"
        )
    return source


def _load_stream_file(path: str) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"stream file {path} is empty")
    header = json.loads(lines[0])
    if header.get("format") != STREAM_FORMAT:
        raise ValueError(f"{path} is not a {STREAM_FORMAT} file")
    return header["scenario"], [json.loads(line) for line in lines[1:]]


def _experiment_from_args(args) -> Experiment:
    if getattr(args, "stream", None):
        if getattr(args, "seed", None) is not None:
            raise ValueError("--seed cannot override a pre-generated stream file")
        scenario, items = _load_stream_file(args.stream)
        return build_experiment(scenario, stream_items=items)
    scenario = load_scenario(_scenario_arg(args))
    return build_experiment(scenario, seed_override=getattr(args, "seed", None))


def cmd_simulate(args) -> int:
    scenario = load_scenario(_scenario_arg(args))
    experiment = build_experiment(scenario, seed_override=args.seed)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump_json_line({"format": STREAM_FORMAT, "scenario": experiment.scenario}))
        for item in experiment.stream:
            fh.write(
                _dump_json_line(
                    {
                        "index": item.index,
                        "concept": item.concept_id,
                        "prompt": item.prompt_text,
                        "prompt_len": len(item.prompt),
                        "reference": item.reference_text,
                        "timestamp": item.timestamp,
                        "spans": [[s.name, s.start, s.end, s.value] for s in item.spans],
                    }
                )
            )
    if args.vocab_out:
        experiment.registry.save(args.vocab_out)
    if args.warmup_out:
        with open(args.warmup_out, "w", encoding="utf-8", newline="\n") as fh:
            for text in _build_warmup_texts(
                experiment.scenario, list(experiment.concepts), experiment.seed
            ):
                fh.write(text + "\n")
    print(f"wrote {len(experiment.stream)} items to {out}")
    return 0


def cmd_run(args) -> int:
    experiment = _experiment_from_args(args)
    settings = _engine_settings(experiment.scenario, args)
    provider = build_provider(experiment, args)
    records, trie = execute_strategy(experiment, provider, args.strategy, settings)
    write_results(records, Path(args.out))
    if args.trace:
        write_trace(records, Path(args.trace), experiment.registry)
    if args.save_trie:
        Path(args.save_trie).write_bytes(trie.snapshot())
    summary = summarize_strategy(experiment, records, args.strategy)
    payload = {
        "seed": experiment.seed,
        "strategies": [summary],
        "telemetry": _telemetry(experiment),
    }
    if args.summary:
        write_summary(payload, Path(args.summary))
    means = summary["means"]
    print(
        f"{args.strategy}: "
        + "  ".join(f"{name}={means[name]:.4f}" for name in METRIC_FIELDS)
    )
    return 0


def cmd_compare(args) -> int:
    experiment = _experiment_from_args(args)
    settings = _engine_settings(experiment.scenario, args)
    provider = build_provider(experiment, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = []
    for strategy in STRATEGY_ORDER:
        records, _ = execute_strategy(experiment, provider, strategy, settings)
        write_results(records, out_dir / f"results_{strategy}.jsonl")
        if args.trace:
            write_trace(records, out_dir / f"trace_{strategy}.jsonl", experiment.registry)
        summaries.append(summarize_strategy(experiment, records, strategy))
    write_table(summaries, out_dir / "summary.tsv")
    write_summary(
        {
            "seed": experiment.seed,
            "strategies": summaries,
            "telemetry": _telemetry(experiment),
        },
        out_dir / "summary.json",
    )
    for summary in summaries:
        means = summary["means"]
        print(
            f"{summary['strategy']:>11}: "
            + "  ".join(f"{name}={means[name]:.4f}" for name in METRIC_FIELDS)
        )
    return 0


def cmd_trie(args) -> int:
    trie = PrefixTrie.restore(Path(args.snapshot).read_bytes())
    stats = trie.stats()
    print(
        f"nodes={stats.node_count} inserted_positions={stats.total_insertions} "
        f"n_max={trie.config.n_max} last_timestamp={trie.last_timestamp}"
    )
    if args.dump:
        registry = VocabRegistry.load(args.vocab) if args.vocab else None
        for node in trie.walk():
            label = registry.token_of(node.token) if registry else str(node.token)
            print(
                "  " * (node.depth - 1)
                + f"{label} F={node.frequency} L={node.depth} R={node.recency}"
            )
    return 0


def cmd_train_lm(args) -> int:
    registry = VocabRegistry.load(args.vocab_in) if args.vocab_in else VocabRegistry()
    corpus = []
    with open(args.corpus, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                corpus.append(tokenize(line, registry, grow=True))
    model = train_ngram(corpus, args.order, args.smoothing_k, vocab_size=len(registry))
    model.save(args.out)
    if args.vocab_out:
        registry.save(args.vocab_out)
    print(
        f"trained order-{args.order} model on {len(corpus)} sentences, "
        f"vocab {model.vocab_size}, saved to {args.out}"
    )
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--weights", help="frequency,length,recency scoring weights")
    parser.add_argument("--n-max", type=int, dest="n_max", help="trie window length")
    parser.add_argument("--top-k", type=int, dest="top_k", help="disagreement top-k")
    parser.add_argument(
        "--fixed-temperature", type=float, dest="fixed_temperature",
        help="temperature for the temp-scaled preset",
    )
    parser.add_argument(
        "--max-new-tokens", type=int, dest="max_new_tokens", help="generation cap per item"
    )
    parser.add_argument("--order", type=int, help="built-in n-gram order")
    parser.add_argument(
        "--smoothing-k", type=float, dest="smoothing_k", help="built-in add-k constant"
    )
    parser.add_argument("--lm", choices=("builtin", "external"), help="base model kind")
    parser.add_argument("--endpoint", help="host:port of an external logit provider")
    parser.add_argument("--lm-model", dest="lm_model", help="pre-trained n-gram model file")


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", help=f"scenario JSON path (default ${ENV_SCENARIO})")
    parser.add_argument("--stream", help="pre-generated stream file from `simulate`")
    parser.add_argument("--seed", type=int, help="override the scenario seed")


def build_parser() -> _Parser:
    parser = _Parser(prog="triefusion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a drift stream file")
    p.add_argument("--scenario", help=f"scenario JSON path (default ${ENV_SCENARIO})")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", required=True, help="stream file to write")
    p.add_argument("--vocab-out", dest="vocab_out", help="also export the vocabulary")
    p.add_argument("--warmup-out", dest="warmup_out", help="also export the warmup corpus")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="online loop for one strategy")
    _add_input_flags(p)
    p.add_argument("--strategy", choices=STRATEGIES, default="odd")
    _add_engine_flags(p)
    p.add_argument("--out", required=True, help="per-item results (JSON lines)")
    p.add_argument("--summary", help="write a summary JSON here")
    p.add_argument("--trace", help="write per-step diagnostics here")
    p.add_argument("--save-trie", dest="save_trie", help="write the final trie snapshot here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="all three strategies on one stream")
    _add_input_flags(p)
    _add_engine_flags(p)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--trace", action="store_true", help="also write per-step diagnostics")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("trie", help="inspect or dump a trie snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--dump", action="store_true", help="print every node")
    p.add_argument("--vocab", help="vocabulary file for readable dumps")
    p.set_defaults(func=cmd_trie)

    p = sub.add_parser("train-lm", help="build and save the n-gram model")
    p.add_argument("--corpus", required=True, help="one sentence per line")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing-k", type=float, dest="smoothing_k", default=1.0)
    p.add_argument("--out", required=True, help="model JSON to write")
    p.add_argument("--vocab-in", dest="vocab_in", help="seed the registry from this vocabulary")
    p.add_argument("--vocab-out", dest="vocab_out", help="export the final vocabulary")
    p.set_defaults(func=cmd_train_lm)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ProviderUnavailable as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except (
        ValueError,
        KeyError,
        OSError,
        json.JSONDecodeError,
        InvalidSchedule,
        MissingSubstitution,
        CorruptSnapshot,
        VersionMismatch,
        UnknownToken,
        UnknownId,
        EmptyInput,
        EmptyCorpus,
    ) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except TrieFusionError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
