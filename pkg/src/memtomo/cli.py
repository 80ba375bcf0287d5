"""Command-line client for the simulation/reconstruction service.

Every verb talks HTTP to the FastAPI application — by default an in-process
instance over an ASGI transport, so no server needs to be running and
results are bit-identical to a remote call.  File I/O stays on the client
side: datasets, reconstruction results, fidelity estimates and sweep
reports are read from and written to local JSON/CSV files.

Exit codes: 0 success, 2 reconstruction did not converge, 3 input error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .channel import dataset_from_json_dict, dataset_to_json_dict
from .errors import InputFormatError, MemtomoError
from .sweep import load_config_file
from .tomography import ReconstructionResult

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INPUT = 3


async def _request(url: str | None, method: str, path: str, body: dict | None) -> httpx.Response:
    if url:
        async with httpx.AsyncClient(base_url=url, timeout=None) as client:
            return await client.request(method, path, json=body)
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(
        transport=transport, base_url="http://memtomo.internal", timeout=None
    ) as client:
        return await client.request(method, path, json=body)


def _call(url: str | None, method: str, path: str, body: dict | None = None) -> dict:
    resp = asyncio.run(_request(url, method, path, body))
    if resp.status_code >= 400:
        try:
            detail = resp.json()["detail"]
        except Exception:
            detail = resp.text
        raise InputFormatError(f"{path}: {detail}")
    return resp.json()


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc


def _print_defaults(url: str | None) -> int:
    print(json.dumps(_call(url, "GET", "/defaults"), indent=2))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.print_defaults:
        return _print_defaults(args.url)
    config = load_config_file(args.config) if args.config else {}
    doc = _call(args.url, "POST", "/simulate", {"config": config, "seed": args.seed})
    out = Path(args.out)
    for tag in ("memory_on", "memory_off", "transmitted"):
        path = out / f"{tag}.json"
        _write_json(path, doc["datasets"][tag])
        print(f"wrote {path}")
    return EXIT_OK


def _mle_opts(args: argparse.Namespace) -> dict:
    opts = {"max_iter": args.max_iter, "tol": args.tol, "restarts": args.restarts}
    return {k: v for k, v in opts.items() if v is not None}


def cmd_reconstruct(args: argparse.Namespace) -> int:
    dataset = dataset_from_json_dict(_load_json(args.dataset))
    body = {"dataset": dataset_to_json_dict(dataset), "method": args.method}
    opts = _mle_opts(args)
    if opts:
        body["opts"] = opts
    doc = _call(args.url, "POST", "/reconstruct", body)
    stem = Path(args.dataset).stem
    path = Path(args.out) / f"{stem}_recon_{args.method}.json"
    _write_json(path, doc)
    print(f"wrote {path}")
    if not doc["converged"]:
        print("reconstruction did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_fidelity(args: argparse.Namespace) -> int:
    result_on = ReconstructionResult.from_json_dict(_load_json(args.result_on))
    result_off = ReconstructionResult.from_json_dict(_load_json(args.result_off))
    body = {
        "result_on": result_on.to_json_dict(),
        "result_off": result_off.to_json_dict(),
        "dataset_on": None,
        "trials": args.trials,
    }
    opts = _mle_opts(args)
    if opts:
        body["opts"] = opts
    if args.data_on:
        dataset = dataset_from_json_dict(_load_json(args.data_on))
        body["dataset_on"] = dataset_to_json_dict(dataset)
    doc = _call(args.url, "POST", "/fidelity", body)
    path = Path(args.out) / "fidelity.json"
    _write_json(path, doc)
    print(f"F = {doc['value']:.6f} ± {doc['std_err']:.6f}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.print_defaults:
        return _print_defaults(args.url)
    config = load_config_file(args.config) if args.config else {}
    doc = _call(args.url, "POST", "/sweep", {"config": config, "seed": args.seed})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(doc["csv"])
    print(f"wrote {csv_path}")
    for i, point in enumerate(doc["points"]):
        path = out / f"point_{i:03d}.json"
        _write_json(path, point)
        print(f"wrote {path}")
    if any(not point["converged"] for point in doc["points"]):
        print("one or more sweep points did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memtomo",
        description="Dual-rail memory channel simulation and process tomography.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, config: bool = False) -> None:
        p.add_argument("--url", default=None, help="remote service URL (default: in-process)")
        p.add_argument("--out", default=".", help="output directory")
        if config:
            p.add_argument("--config", default=None, help="JSON config file")
            p.add_argument("--seed", type=int, default=None, help="master seed override")
            p.add_argument(
                "--print-defaults",
                action="store_true",
                help="print the default configuration and exit",
            )

    def add_mle_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max-iter", type=int, default=None, help="MLE evaluation budget")
        p.add_argument("--tol", type=float, default=None, help="MLE objective tolerance")
        p.add_argument("--restarts", type=int, default=None, help="MLE restart attempts")

    p = sub.add_parser("simulate", help="synthesize tomography datasets for one storage time")
    add_common(p, config=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="estimate a process matrix from a dataset file")
    p.add_argument("dataset", help="tomography dataset JSON file")
    p.add_argument("--method", choices=("linear", "mle"), default="mle")
    add_common(p)
    add_mle_opts(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("fidelity", help="process fidelity between two reconstruction results")
    p.add_argument("result_on", help="reconstruction result JSON file")
    p.add_argument("result_off", help="reference reconstruction result JSON file")
    p.add_argument(
        "--data-on",
        default=None,
        help="dataset file to resample for Monte-Carlo error bars",
    )
    p.add_argument("--trials", type=int, default=100, help="Monte-Carlo trials")
    add_common(p)
    add_mle_opts(p)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("sweep", help="fidelity and efficiency across storage times")
    add_common(p, config=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MemtomoError, httpx.HTTPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
