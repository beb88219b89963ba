"""Command-line front door: index building, generation, evaluation, serving.

Exit codes are uniform across subcommands: 0 success, 1 runtime failure,
2 usage or validation error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import job_config_from_config, load_config, provider_from_config
from .dictionary_index import FingerprintIndex, load_dictionary
from .errors import (
    AasForgeError,
    DuplicateEntryError,
    FormatError,
    ValidationError,
)
from .metrics import ablation_report, read_ratings_csv, report_to_json, report_to_text
from .pipeline import JobStatus, run_job
from .store import JobStore, write_job_files

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _fail(message: str, code: int) -> int:
    print(f"aasforge: {message}", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aasforge")
    parser.add_argument("--config", help="TOML config file", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    index_cmd = sub.add_parser("index", help="fingerprint index maintenance")
    index_sub = index_cmd.add_subparsers(dest="index_command", required=True)

    index_build = index_sub.add_parser("build", help="build an index from a dictionary file")
    index_build.add_argument("--dict", required=True, help="dictionary JSONL file")
    index_build.add_argument("--out", required=True, help="index output file")
    index_build.add_argument("--provider", choices=["stub", "http"], default=None)
    index_build.add_argument("--dimension", type=int, default=None)

    index_add = index_sub.add_parser("add", help="add dictionary entries to an index")
    index_add.add_argument("--index", required=True, help="existing index file")
    index_add.add_argument("--dict", required=True, help="dictionary JSONL file to add")
    index_add.add_argument("--provider", choices=["stub", "http"], default=None)

    generate = sub.add_parser("generate", help="run the generation pipeline on a text file")
    generate.add_argument("--in", dest="input", required=True, help="input text file")
    generate.add_argument("--out", required=True, help="output directory for the job files")
    generate.add_argument("--rag", action="store_true", help="enable retrieval augmentation")
    generate.add_argument("--index", default=None, help="fingerprint index file (needed with --rag)")
    generate.add_argument("--provider", choices=["stub", "http"], default=None)
    generate.add_argument("--model", default=None, help="model name override")

    evaluate = sub.add_parser("evaluate", help="compute metrics from a ratings CSV")
    evaluate.add_argument("--ratings", required=True, help="ratings CSV file")
    evaluate.add_argument(
        "--report",
        required=True,
        help='output path (.json/.txt) or literal "json"/"txt" for stdout',
    )

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--bind", default=None, help="host:port to bind")
    serve.add_argument("--data", default=None, help="data directory")
    serve.add_argument("--index", default=None, help="fingerprint index file to load")
    serve.add_argument("--provider", choices=["stub", "http"], default=None)

    return parser


def _cmd_index_build(args, config) -> int:
    try:
        entries = load_dictionary(args.dict)
    except FileNotFoundError:
        return _fail(f"dictionary file not found: {args.dict}", EXIT_USAGE)
    except (FormatError, DuplicateEntryError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    provider = provider_from_config(config, provider_override=args.provider)
    dimension = args.dimension or int(config["llm"].get("embedding_dimension", 64))
    try:
        index = FingerprintIndex.build(entries, provider.embed, dimension=dimension)
        index.save(args.out)
    except AasForgeError as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    print(f"indexed {len(index)} entries into {args.out}")
    return EXIT_OK


def _cmd_index_add(args, config) -> int:
    try:
        index = FingerprintIndex.load(args.index)
    except FileNotFoundError:
        return _fail(f"index file not found: {args.index}", EXIT_USAGE)
    except FormatError as exc:
        return _fail(str(exc), EXIT_USAGE)
    try:
        entries = load_dictionary(args.dict)
    except FileNotFoundError:
        return _fail(f"dictionary file not found: {args.dict}", EXIT_USAGE)
    except (FormatError, DuplicateEntryError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    provider = provider_from_config(config, provider_override=args.provider)
    try:
        for entry in entries:
            index.enrich(entry, provider.embed)
        index.save(args.index)
    except AasForgeError as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    print(f"added {len(entries)} entries; index now holds {len(index)}")
    return EXIT_OK


def _cmd_generate(args, config) -> int:
    input_path = Path(args.input)
    if not input_path.exists():
        return _fail(f"input file not found: {args.input}", EXIT_USAGE)
    input_text = input_path.read_text(encoding="utf-8")
    if not input_text.strip():
        return _fail("input file is empty", EXIT_USAGE)

    index = None
    index_path = args.index or config["pipeline"].get("index", "")
    if args.rag:
        if not index_path:
            return _fail("--rag requires an index (--index or pipeline.index)", EXIT_USAGE)
        try:
            index = FingerprintIndex.load(index_path)
        except FileNotFoundError:
            return _fail(f"index file not found: {index_path}", EXIT_USAGE)
        except FormatError as exc:
            return _fail(str(exc), EXIT_USAGE)
        if len(index) == 0:
            return _fail("index is empty; --rag needs a populated index", EXIT_USAGE)

    provider = provider_from_config(config, provider_override=args.provider)
    job_config = job_config_from_config(config, rag=args.rag, model=args.model)
    job = run_job(input_text, job_config, index, provider)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_job_files(job, out_dir)
    if job.status is not JobStatus.DONE:
        return _fail(f"job failed: {job.error}", EXIT_RUNTIME)
    print(f"generated {len(job.nodes)} nodes into {out_dir}")
    return EXIT_OK


def _cmd_evaluate(args, config) -> int:
    ratings_path = Path(args.ratings)
    if not ratings_path.exists():
        return _fail(f"ratings file not found: {args.ratings}", EXIT_USAGE)
    try:
        ratings = read_ratings_csv(ratings_path.read_text(encoding="utf-8"))
    except FormatError as exc:
        return _fail(str(exc), EXIT_USAGE)
    if not ratings:
        return _fail("ratings file contains no data rows", EXIT_USAGE)
    report = ablation_report(ratings)
    target = args.report
    if target == "json":
        sys.stdout.write(report_to_json(report))
        return EXIT_OK
    if target == "txt":
        sys.stdout.write(report_to_text(report))
        return EXIT_OK
    out_path = Path(target)
    if out_path.suffix == ".txt":
        out_path.write_text(report_to_text(report), encoding="utf-8")
    elif out_path.suffix == ".json":
        out_path.write_text(report_to_json(report), encoding="utf-8")
    else:
        return _fail(f"cannot infer report format from {target!r} (use .json or .txt)", EXIT_USAGE)
    print(f"report written to {out_path}")
    return EXIT_OK


def _cmd_serve(args, config) -> int:
    import uvicorn

    from .service import create_app

    bind = args.bind or config["service"].get("bind", "127.0.0.1:8420")
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        return _fail(f"--bind must look like host:port, got {bind!r}", EXIT_USAGE)
    data_dir = args.data or config["store"].get("data_dir", "./data")
    index = None
    if args.index:
        try:
            index = FingerprintIndex.load(args.index)
        except FileNotFoundError:
            return _fail(f"index file not found: {args.index}", EXIT_USAGE)
        except FormatError as exc:
            return _fail(str(exc), EXIT_USAGE)
    provider = provider_from_config(config, provider_override=args.provider)
    store = JobStore(data_dir)
    app = create_app(config, store, provider, index)
    server = uvicorn.Server(
        uvicorn.Config(app, host=host, port=int(port_text), log_level="warning")
    )
    try:
        server.run()
    except OSError as exc:
        return _fail(f"cannot bind {bind}: {exc}", EXIT_USAGE)
    except SystemExit as exc:
        # uvicorn exits with STARTUP_FAILURE (3) e.g. when the port is taken
        if exc.code:
            return _fail(f"server failed to start on {bind}", EXIT_USAGE)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except (FileNotFoundError, ValidationError) as exc:
        return _fail(f"config: {exc}", EXIT_USAGE)
    try:
        if args.command == "index":
            if args.index_command == "build":
                return _cmd_index_build(args, config)
            return _cmd_index_add(args, config)
        if args.command == "generate":
            return _cmd_generate(args, config)
        if args.command == "evaluate":
            return _cmd_evaluate(args, config)
        if args.command == "serve":
            return _cmd_serve(args, config)
    except ValidationError as exc:
        return _fail(str(exc), EXIT_USAGE)
    except AasForgeError as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    except json.JSONDecodeError as exc:
        return _fail(f"bad JSON input: {exc}", EXIT_USAGE)
    return _fail("unknown command", EXIT_USAGE)


if __name__ == "__main__":
    raise SystemExit(main())
