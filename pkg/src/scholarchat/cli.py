"""Command-line entry points.

`serve` runs the HTTP service; `repl` is an interactive loop, either
in-process or as a thin client against a running service (--url);
`build-dataset`, `train`, and `evaluate` drive the data pipeline, model
training, and the metric harness. Every flag can also be set through an
environment variable with the same name uppercased and prefixed
SCHOLARCHAT_ (e.g. SCHOLARCHAT_PORT).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .augment import AugmentConfig, build_dataset
from .engine import DialogueEngine, EngineConfig
from .evaluation import (
    REFERENCE_COVERAGE,
    REFERENCE_DIVERSITY,
    evaluate_coverage,
    evaluate_diversity,
    evaluate_nlu,
)
from .nlu.dataset import write_dataset
from .nlu.embeddings import EmbeddingTable
from .nlu.pipeline import MlModels

ENV_PREFIX = "SCHOLARCHAT_"
DATA_DIR = Path(__file__).resolve().parent / "data"


def _env_default(name: str, fallback=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), fallback)


def _engine_config(args) -> EngineConfig:
    config = EngineConfig.load(args.config) if args.config else EngineConfig()
    if args.snapshot_dir:
        config.snapshot_dir = Path(args.snapshot_dir)
    if args.models_dir:
        config.models_dir = Path(args.models_dir)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=_env_default("config"))
    parser.add_argument("--snapshot-dir", default=_env_default("snapshot_dir"))
    parser.add_argument("--models-dir", default=_env_default("models_dir"))
    parser.add_argument("--seed", type=int, default=_env_default("seed"))
    parser.add_argument("--debug", action="store_true", default=bool(_env_default("debug")))


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_engine_config(args), ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _print_turn(result, debug: bool) -> None:
    for reply in result.replies:
        print(f"bot> {reply}")
    if debug:
        print(json.dumps(result.debug_dict(), indent=2))


def cmd_repl(args) -> int:
    interactive = sys.stdin.isatty()

    if args.url:
        client = _HttpClient(args.url)
        process = client.process_turn
        last_debug = client.last_debug
    else:
        engine = DialogueEngine(_engine_config(args))
        session_id = "repl"
        results = []

        def process(text: str):
            result = engine.process_turn(session_id, text)
            results.append(result)
            return result

        def last_debug():
            return results[-1].debug_dict() if results else None

    while True:
        try:
            line = input("you> " if interactive else "")
        except EOFError:
            return 0
        line = line.strip()
        if not line:
            continue
        if line == ":quit":
            _print_turn(process("goodbye"), args.debug)
            return 0
        if line == ":state":
            debug = last_debug()
            print(json.dumps(debug, indent=2) if debug else "no turns yet")
            continue
        _print_turn(process(line), args.debug)


class _HttpClient:
    """Thin client for `repl --url`: the same conversation over HTTP."""

    def __init__(self, url: str):
        import httpx

        self._client = httpx.Client(base_url=url.rstrip("/"), timeout=30.0)
        self._session_id: str | None = None
        self._last: dict | None = None

    def process_turn(self, text: str):
        body = {"text": text, "debug": True}
        if self._session_id:
            body["session_id"] = self._session_id
        data = self._client.post("/chat", json=body).raise_for_status().json()
        self._session_id = data["session_id"]
        self._last = data.get("debug")

        class _Result:
            replies = tuple(data["reply"].split("\n"))

        return _Result()

    def last_debug(self):
        return self._last


def cmd_build_dataset(args) -> int:
    config = AugmentConfig.load(args.augment_config)
    train, test, stats = build_dataset(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(train, out / "train.tsv")
    write_dataset(test, out / "test.tsv")
    (out / "stats.yaml").write_text(stats.to_yaml(), encoding="utf-8")
    print(stats.to_yaml().rstrip())
    print(f"wrote {len(train)} train / {len(test)} test instances to {out}")
    return 0


def cmd_train(args) -> int:
    config = AugmentConfig.load(args.augment_config)
    train, test, stats = build_dataset(config)
    table = EmbeddingTable.load(args.embeddings)
    models = MlModels.train(train, table)
    models.save(args.out)
    print(f"trained on {len(train)} instances (build {stats.build_id}); saved to {args.out}")
    report = evaluate_nlu(models, test)
    print(report.render())
    return 0


def cmd_evaluate(args) -> int:
    exit_code = 0
    if args.models_dir:
        config = AugmentConfig.load(args.augment_config)
        train, test, _ = build_dataset(config)
        table = EmbeddingTable.load(args.embeddings)
        models = MlModels.load(args.models_dir, table)
        print(evaluate_nlu(models, test).render())
    if args.diversity_probes or args.coverage_probes:
        engine = DialogueEngine(_engine_config(args))

        def agent(session_id: str, text: str) -> str:
            return engine.process_turn(session_id, text).reply

        if args.diversity_probes:
            report = evaluate_diversity(args.diversity_probes, agent)
            print(
                f"diversity: {report.percent:.2f}% "
                f"(live reference {REFERENCE_DIVERSITY}%, not reproducible offline)"
            )
        if args.coverage_probes:
            report = evaluate_coverage(args.coverage_probes, agent)
            print(
                f"coverage: {report.percent:.2f}% "
                f"(live reference {REFERENCE_COVERAGE}%, not reproducible offline)"
            )
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scholarchat")
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="run the HTTP chat service")
    _add_engine_flags(serve)
    serve.add_argument("--host", default=_env_default("host", "127.0.0.1"))
    serve.add_argument("--port", type=int, default=int(_env_default("port", 8000)))
    serve.add_argument("--ui-dir", default=_env_default("ui_dir"))
    serve.set_defaults(fn=cmd_serve)

    repl = commands.add_parser("repl", help="interactive chat loop")
    _add_engine_flags(repl)
    repl.add_argument("--url", default=_env_default("url"), help="attach to a running service")
    repl.set_defaults(fn=cmd_repl)

    dataset = commands.add_parser("build-dataset", help="run the augmentation pipeline")
    dataset.add_argument(
        "--augment-config", default=_env_default("augment_config", DATA_DIR / "augment.yaml")
    )
    dataset.add_argument("--out", default=_env_default("out", "dataset"))
    dataset.set_defaults(fn=cmd_build_dataset)

    train = commands.add_parser("train", help="build the dataset and train all models")
    train.add_argument(
        "--augment-config", default=_env_default("augment_config", DATA_DIR / "augment.yaml")
    )
    train.add_argument(
        "--embeddings",
        default=_env_default("embeddings", DATA_DIR / "embeddings" / "fixture_300d.txt"),
    )
    train.add_argument("--out", default=_env_default("out", "models"))
    train.set_defaults(fn=cmd_train)

    evaluate = commands.add_parser("evaluate", help="metric grid and probe scores")
    _add_engine_flags(evaluate)
    evaluate.add_argument(
        "--augment-config", default=_env_default("augment_config", DATA_DIR / "augment.yaml")
    )
    evaluate.add_argument(
        "--embeddings",
        default=_env_default("embeddings", DATA_DIR / "embeddings" / "fixture_300d.txt"),
    )
    evaluate.add_argument("--diversity-probes", default=None)
    evaluate.add_argument("--coverage-probes", default=None)
    evaluate.set_defaults(fn=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
