"""Generation-experiment pipeline: topics, samples, splits, baseline and
external generators, multi-round ROUGE evaluation, and the pretrain/fine-tune
condition matrix."""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from .corpus import Question, QuestionKind, tokenize
from .jsonl import read_records, write_records
from .metrics import RougeScore, rouge_all
from .modelservice import ModelServiceClient, ModelServiceError

SEPARATOR_TOKEN = "<Q_SEP>"
MAX_INPUTS = 10

Generator = Callable[["GenSample"], list[str]]


@dataclass(frozen=True)
class Topic:
    """A named cluster of user questions with its ground-truth FAQ(s)."""

    name: str
    user_questions: tuple[Question, ...]
    faqs: tuple[Question, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("topic name must be non-empty")
        if not self.user_questions:
            raise ValueError(f"topic {self.name!r} has no user questions")
        if not self.faqs:
            raise ValueError(f"topic {self.name!r} has no FAQs")


@dataclass(frozen=True)
class GenSample:
    """One generation record: up to 10 input questions and one target FAQ.

    ``references`` always contains the target; ``input_sequence`` is the
    inputs flattened with a separator token between them.
    """

    inputs: tuple[tuple[str, ...], ...]
    target: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]
    topic_name: str | None = None
    input_sequence: tuple[str, ...] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if not 1 <= len(self.inputs) <= MAX_INPUTS:
            raise ValueError(f"sample must have 1..{MAX_INPUTS} inputs")
        if not self.references:
            raise ValueError("sample requires at least one reference")
        if self.target not in self.references:
            raise ValueError("target must be among the references")
        flattened: list[str] = []
        for i, tokens in enumerate(self.inputs):
            if i:
                flattened.append(SEPARATOR_TOKEN)
            flattened.extend(tokens)
        object.__setattr__(self, "input_sequence", tuple(flattened))


class SplitLevel(str, Enum):
    SAMPLE = "sample"
    TOPIC = "topic"


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float]
    level: SplitLevel = SplitLevel.SAMPLE
    seed: int = 0

    def __post_init__(self) -> None:
        if any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be nonnegative")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")


@dataclass(frozen=True)
class ExperimentResult:
    method_name: str
    rounds: tuple[RougeScore, ...]
    mean: RougeScore
    round_count: int

    @classmethod
    def from_rounds(cls, method_name: str, rounds: Sequence[RougeScore]) -> "ExperimentResult":
        n = len(rounds)
        mean = RougeScore(
            rouge1_f=sum(r.rouge1_f for r in rounds) / n,
            rouge2_f=sum(r.rouge2_f for r in rounds) / n,
            rougeL_f=sum(r.rougeL_f for r in rounds) / n,
        )
        return cls(method_name=method_name, rounds=tuple(rounds), mean=mean, round_count=n)

    def as_dict(self) -> dict:
        return {
            "method": self.method_name,
            "rounds": [r.as_dict() for r in self.rounds],
            "mean": self.mean.as_dict(),
            "round_count": self.round_count,
        }


def build_samples(topics: Sequence[Topic], seed: int) -> list[GenSample]:
    """One sample per (topic, FAQ): the FAQ is the target, the topic's user
    questions are the inputs (10 sampled without replacement when there are
    more), and all of the topic's FAQs serve as references.

    Sampling is independent per sample and deterministic given ``seed``.
    """
    samples: list[GenSample] = []
    for topic in topics:
        n = len(topic.user_questions)
        all_inputs = tuple(q.tokens for q in topic.user_questions)
        references = tuple(f.tokens for f in topic.faqs)
        for i, faq in enumerate(topic.faqs):
            if n <= MAX_INPUTS:
                inputs = all_inputs
            else:
                rng = random.Random(f"{seed}:{topic.name}:{i}")
                chosen = sorted(rng.sample(range(n), MAX_INPUTS))
                inputs = tuple(all_inputs[j] for j in chosen)
            samples.append(
                GenSample(
                    inputs=inputs,
                    target=faq.tokens,
                    references=references,
                    topic_name=topic.name,
                )
            )
    return samples


def _apportion(total: int, fractions: tuple[float, float, float]) -> list[int]:
    # Round each share half-up; any residual difference is settled train-first.
    sizes = [math.floor(f * total + 0.5) for f in fractions]
    diff = total - sum(sizes)
    i = 0
    while diff > 0:
        sizes[i % 3] += 1
        diff -= 1
        i += 1
    i = 0
    while diff < 0:
        if sizes[i % 3] > 0:
            sizes[i % 3] -= 1
            diff += 1
        i += 1
    return sizes


def split(units: Sequence, spec: SplitSpec) -> tuple[list, list, list]:
    """Partition units into train/validation/test by a seeded shuffle.

    Units pass through unchanged (topics stay topics); the partitions are
    disjoint and exhaustive. Raises when some nonzero fraction would receive
    no unit.
    """
    n = len(units)
    sizes = _apportion(n, spec.fractions)
    for fraction, size in zip(spec.fractions, sizes):
        if fraction > 0 and size == 0:
            minimum = math.ceil(0.5 / min(f for f in spec.fractions if f > 0))
            raise ValueError(
                f"{n} units are too few for fractions {spec.fractions}; "
                f"need at least {minimum}"
            )
    order = list(units)
    random.Random(spec.seed).shuffle(order)
    train = order[: sizes[0]]
    validation = order[sizes[0] : sizes[0] + sizes[1]]
    test = order[sizes[0] + sizes[1] :]
    return train, validation, test


def split_topics_to_samples(
    topics: Sequence[Topic], spec: SplitSpec
) -> tuple[list[GenSample], list[GenSample], list[GenSample]]:
    """Topic-level split expanded to samples; no user question crosses splits."""
    train, validation, test = split(topics, spec)
    return (
        build_samples(train, spec.seed),
        build_samples(validation, spec.seed),
        build_samples(test, spec.seed),
    )


def _sample_digest(sample: GenSample) -> str:
    payload = json.dumps(
        {
            "topic": sample.topic_name,
            "target": list(sample.target),
            "inputs": [list(tokens) for tokens in sample.inputs],
        },
        sort_keys=True,
    )
    return hashlib.md5(payload.encode("utf-8")).hexdigest()


def baseline_generate(sample: GenSample, seed: int) -> list[str]:
    """Uniformly select one input question; deterministic per (seed, sample)."""
    rng = random.Random(f"{seed}:{_sample_digest(sample)}")
    return list(rng.choice(sample.inputs))


def external_generate(
    client: ModelServiceClient, sample: GenSample, model_id: str = "default"
) -> list[str]:
    """Send the flattened input sequence; return the service's tokens verbatim."""
    return client.generate(model_id, " ".join(sample.input_sequence))


def evaluate(
    generator: Generator, test_samples: Sequence[GenSample], jobs: int = 1
) -> RougeScore:
    """Mean multi-reference ROUGE-1/2/L F1 of ``generator`` over the test set.

    ``jobs`` caps concurrent workers; results are order-stable either way.
    """
    if not test_samples:
        raise ValueError("test set is empty")
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(
                pool.map(lambda s: rouge_all(generator(s), s.references), test_samples)
            )
    else:
        scores = [rouge_all(generator(sample), sample.references) for sample in test_samples]
    n = len(scores)
    return RougeScore(
        rouge1_f=sum(s.rouge1_f for s in scores) / n,
        rouge2_f=sum(s.rouge2_f for s in scores) / n,
        rougeL_f=sum(s.rougeL_f for s in scores) / n,
    )


def sample_record(sample: GenSample) -> dict:
    record = {
        "inputs": [" ".join(tokens) for tokens in sample.inputs],
        "target": " ".join(sample.target),
        "references": [" ".join(tokens) for tokens in sample.references],
    }
    if sample.topic_name is not None:
        record["topic"] = sample.topic_name
    return record


class BaselineGenerator:
    """Round factory for the random-input-selection baseline."""

    name = "baseline"

    def prepare(
        self,
        train: Sequence[GenSample],
        validation: Sequence[GenSample],
        round_seed: int,
    ) -> Generator:
        return lambda sample: baseline_generate(sample, round_seed)


class ServiceGenerator:
    """Round factory that trains through the model service before evaluating."""

    def __init__(
        self,
        client: ModelServiceClient,
        name: str = "external",
        init_from: str | None = None,
        emit_dir: str | Path | None = None,
    ):
        self.client = client
        self.name = name
        self.init_from = init_from
        self.emit_dir = Path(emit_dir) if emit_dir is not None else None

    def prepare(
        self,
        train: Sequence[GenSample],
        validation: Sequence[GenSample],
        round_seed: int,
    ) -> Generator:
        train_records = [sample_record(s) for s in train]
        validation_records = [sample_record(s) for s in validation]
        if self.emit_dir is not None:
            self.emit_dir.mkdir(parents=True, exist_ok=True)
            write_records(self.emit_dir / f"round-{round_seed}.train.jsonl", train_records)
            write_records(
                self.emit_dir / f"round-{round_seed}.validation.jsonl", validation_records
            )
        model_id = self.client.train(train_records, validation_records, init_from=self.init_from)
        return lambda sample: external_generate(self.client, sample, model_id)


@dataclass(frozen=True)
class RoundsConfig:
    split_spec: SplitSpec
    rounds: int = 10
    seed_base: int = 0
    jobs: int = 1


class RoundError(RuntimeError):
    def __init__(self, round_index: int, cause: Exception):
        super().__init__(f"round {round_index} failed: {cause}")
        self.round_index = round_index


def _round_partitions(units: Sequence, spec: SplitSpec):
    if spec.level is SplitLevel.TOPIC:
        return split_topics_to_samples(units, spec)
    return split(units, spec)


def run_rounds(
    units: Sequence,
    config: RoundsConfig,
    generator: BaselineGenerator | ServiceGenerator,
) -> ExperimentResult:
    """Run ``rounds`` train/evaluate rounds, re-splitting with seed base+i.

    ``units`` are samples (sample-level spec) or topics (topic-level spec).
    Any round failure aborts the run, naming the round.
    """
    if config.rounds < 1:
        raise ValueError("rounds must be >= 1")
    per_round: list[RougeScore] = []
    for i in range(config.rounds):
        try:
            seed = config.seed_base + i
            spec = replace(config.split_spec, seed=seed)
            train, validation, test = _round_partitions(units, spec)
            round_generator = generator.prepare(train, validation, seed)
            per_round.append(evaluate(round_generator, test, jobs=config.jobs))
        except Exception as exc:
            raise RoundError(i, exc) from exc
    return ExperimentResult.from_rounds(generator.name, per_round)


@dataclass(frozen=True)
class TransferConfig:
    """Cross-domain experiment over a source domain A and target domain B."""

    source_units: Sequence
    source_split: SplitSpec
    target_units: Sequence
    target_split: SplitSpec
    client: ModelServiceClient | None = None
    rounds: int = 10
    seed_base: int = 0
    emit_dir: str | Path | None = None


@dataclass(frozen=True)
class ConditionResult:
    condition: str
    result: ExperimentResult | None
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "result": self.result.as_dict() if self.result else None,
            "note": self.note,
        }


CONDITIONS = ("baseline", "source-only", "target-only", "fine-tuned")


def transfer_matrix(config: TransferConfig) -> list[ConditionResult]:
    """Four conditions on the target domain: baseline, source-only,
    target-only, and fine-tuned (source model continued on target data).

    The baseline never contacts the model service. A service that rejects
    ``init_from`` marks the fine-tuned condition unsupported; the others
    still run.
    """
    results: list[ConditionResult] = []
    rounds_config = RoundsConfig(
        split_spec=config.target_split, rounds=config.rounds, seed_base=config.seed_base
    )
    results.append(
        ConditionResult(
            "baseline", run_rounds(config.target_units, rounds_config, BaselineGenerator())
        )
    )
    if config.client is None:
        for condition in CONDITIONS[1:]:
            results.append(ConditionResult(condition, None, "no model service configured"))
        return results

    for condition in CONDITIONS[1:]:
        try:
            per_round: list[RougeScore] = []
            for i in range(config.rounds):
                seed = config.seed_base + i
                source_spec = replace(config.source_split, seed=seed)
                target_spec = replace(config.target_split, seed=seed)
                s_train, s_val, _ = _round_partitions(config.source_units, source_spec)
                t_train, t_val, t_test = _round_partitions(config.target_units, target_spec)
                model_id = _train_condition(
                    config.client, condition, s_train, s_val, t_train, t_val
                )
                generator = lambda s, m=model_id: external_generate(config.client, s, m)
                per_round.append(evaluate(generator, t_test))
            results.append(
                ConditionResult(condition, ExperimentResult.from_rounds(condition, per_round))
            )
        except _InitFromUnsupported as exc:
            results.append(ConditionResult(condition, None, f"unsupported: {exc}"))
    return results


class _InitFromUnsupported(RuntimeError):
    pass


def _train_condition(
    client: ModelServiceClient,
    condition: str,
    s_train: Sequence[GenSample],
    s_val: Sequence[GenSample],
    t_train: Sequence[GenSample],
    t_val: Sequence[GenSample],
) -> str:
    s_train_r = [sample_record(s) for s in s_train]
    s_val_r = [sample_record(s) for s in s_val]
    t_train_r = [sample_record(s) for s in t_train]
    t_val_r = [sample_record(s) for s in t_val]
    if condition == "source-only":
        return client.train(s_train_r, s_val_r)
    if condition == "target-only":
        return client.train(t_train_r, t_val_r)
    if condition == "fine-tuned":
        source_model = client.train(s_train_r, s_val_r)
        try:
            return client.train(t_train_r, t_val_r, init_from=source_model)
        except ModelServiceError as exc:
            # Only the call that actually passed init_from marks the
            # condition unsupported.
            raise _InitFromUnsupported(str(exc)) from exc
    raise ValueError(f"unknown condition {condition!r}")


def load_topics(path: str | Path) -> list[Topic]:
    """Read topics: {"name", "user_questions": [str], "faqs": [str]}."""
    topics: list[Topic] = []
    seen: set[str] = set()
    for lineno, record in read_records(path):
        name = record.get("name")
        if not isinstance(name, str) or not name:
            raise ValueError(f"line {lineno}: missing topic 'name'")
        if name in seen:
            raise ValueError(f"line {lineno}: duplicate topic {name!r}")
        seen.add(name)
        user_texts = record.get("user_questions")
        faq_texts = record.get("faqs")
        if not isinstance(user_texts, list) or not isinstance(faq_texts, list):
            raise ValueError(f"line {lineno}: 'user_questions' and 'faqs' must be lists")
        topics.append(
            Topic(
                name=name,
                user_questions=tuple(
                    Question(id=f"{name}/uq{i}", text=t, kind=QuestionKind.USER_QUESTION)
                    for i, t in enumerate(user_texts, start=1)
                ),
                faqs=tuple(
                    Question(id=f"{name}/faq{i}", text=t, kind=QuestionKind.ORG_FAQ)
                    for i, t in enumerate(faq_texts, start=1)
                ),
            )
        )
    return topics


def save_topics(topics: Sequence[Topic], path: str | Path, meta: dict | None = None) -> int:
    return write_records(
        path,
        (
            {
                "name": t.name,
                "user_questions": [q.text for q in t.user_questions],
                "faqs": [f.text for f in t.faqs],
            }
            for t in topics
        ),
        meta=meta,
    )


def load_samples(path: str | Path) -> list[GenSample]:
    """Read samples: {"inputs": [str], "target": str, "references": [str], "topic"?}."""
    samples: list[GenSample] = []
    for lineno, record in read_records(path):
        inputs = record.get("inputs")
        target = record.get("target")
        if not isinstance(inputs, list) or not inputs or not isinstance(target, str):
            raise ValueError(f"line {lineno}: sample needs 'inputs' list and 'target'")
        references = record.get("references") or [target]
        samples.append(
            GenSample(
                inputs=tuple(tuple(tokenize(t)) for t in inputs),
                target=tuple(tokenize(target)),
                references=tuple(tuple(tokenize(t)) for t in references),
                topic_name=record.get("topic"),
            )
        )
    return samples


def save_samples(samples: Sequence[GenSample], path: str | Path, meta: dict | None = None) -> int:
    return write_records(path, (sample_record(s) for s in samples), meta=meta)
