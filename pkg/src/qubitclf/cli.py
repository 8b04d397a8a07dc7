"""Command-line client of the experiment service.

Every subcommand is an HTTP call: by default the service application is
mounted in-process (no socket), and ``--server URL`` points the same calls
at a remote instance started with ``qubitclf serve``. File handling stays
on the client: configs and report documents are read here, metrics are
written here.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys

import httpx

from . import __version__, harness
from .service.app import app as service_app

REQUEST_TIMEOUT_SECONDS = 600.0


class CliError(Exception):
    """A failure already reduced to a one-line message."""


async def _request(server: str | None, method: str, path: str, payload: dict | None = None) -> dict:
    if server is None:
        transport = httpx.ASGITransport(app=service_app)
        base_url = "http://qubitclf.internal"
    else:
        transport = None
        base_url = server
    async with httpx.AsyncClient(transport=transport, base_url=base_url, timeout=REQUEST_TIMEOUT_SECONDS) as client:
        if method == "GET":
            response = await client.get(path)
        else:
            response = await client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        if not isinstance(detail, str):
            detail = json.dumps(detail)
        raise CliError(f"{path} failed ({response.status_code}): {detail}")
    return response.json()


def _read_report_document(path: str) -> dict:
    if os.path.isdir(path):
        path = os.path.join(path, harness.SUMMARY_FILENAME)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as err:
        raise CliError(f"{path}: not a valid report document: {err}") from err


def _cmd_train(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        text = handle.read()
    payload: dict = {"config": harness.parse_config_text(text)}
    if args.seed is not None:
        payload["seed"] = args.seed
    summary = asyncio.run(_request(args.server, "POST", "/train", payload))
    if args.out is not None:
        report = harness.report_from_dict(summary)
        csv_path, summary_path = harness.write_metrics(report, args.out)
        final = summary["final"]
        print(
            f"wrote {csv_path} and {summary_path}: "
            f"cost {final['cost']:.6g}, train_accuracy {final['train_accuracy']:.6g}, "
            f"test_accuracy {final['test_accuracy']:.6g}"
        )
    else:
        print(json.dumps(summary, indent=2))
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    payload = {
        "report_a": _read_report_document(args.report_a),
        "report_b": _read_report_document(args.report_b),
    }
    result = asyncio.run(_request(args.server, "POST", "/compare", payload))
    print(result["text"])
    return 0


def _cmd_selftest(args: argparse.Namespace) -> int:
    result = asyncio.run(_request(args.server, "POST", "/selftest", {}))
    for suite in result["suites"]:
        status = "PASS" if suite["passed"] else "FAIL"
        print(f"[{status}] {suite['name']} ({suite['seconds']:.2f}s): {suite['detail']}")
    return 0 if result["passed"] else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("qubitclf.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qubitclf",
        description="Train and compare single-qubit classifiers over the experiment service.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one training experiment")
    train.add_argument("--config", required=True, help="path to a key = value configuration file")
    train.add_argument("--out", help="directory to receive metrics.csv and summary.json")
    train.add_argument("--seed", type=int, help="override the configuration seed")
    train.add_argument("--server", help="service URL (default: in-process)")
    train.set_defaults(func=_cmd_train)

    compare = sub.add_parser("compare", help="compare two run reports")
    compare.add_argument("report_a", help="summary.json path or run directory")
    compare.add_argument("report_b", help="summary.json path or run directory")
    compare.add_argument("--server", help="service URL (default: in-process)")
    compare.set_defaults(func=_cmd_compare)

    check = sub.add_parser("selftest", help="run the built-in oracle suites")
    check.add_argument("--server", help="service URL (default: in-process)")
    check.set_defaults(func=_cmd_selftest)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, httpx.HTTPError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
